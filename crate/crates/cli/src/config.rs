//! TOML training configuration. Keys mirror [`TrainConfig`]; absent keys keep
//! their defaults and command-line flags override both.

use std::path::Path;

use anyhow::{anyhow, Context, Result};
use icd_core::model::{TrainConfig, Variant};
use serde::Deserialize;

use crate::checkpoint::{parse_metric, parse_variant};

#[derive(Debug, Default, Deserialize, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub variant: Option<String>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub samples_per_epoch: Option<usize>,
    pub updates_per_sample: Option<usize>,
    pub epochs: Option<usize>,
    pub lr_g: Option<f64>,
    pub lr_d: Option<f64>,
    pub gen_widths: Option<Vec<usize>>,
    pub disc_widths: Option<Vec<usize>>,
    pub validation: Option<String>,
    pub seed: Option<u64>,
    pub restarts: Option<usize>,
    pub constant_features: Option<bool>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Layers `other` on top of `self`.
    pub fn merge(self, other: ConfigFile) -> ConfigFile {
        macro_rules! pick {
            ($($f:ident),*) => { ConfigFile { $($f: other.$f.or(self.$f)),* } };
        }
        pick!(
            variant,
            alpha,
            beta,
            samples_per_epoch,
            updates_per_sample,
            epochs,
            lr_g,
            lr_d,
            gen_widths,
            disc_widths,
            validation,
            seed,
            restarts,
            constant_features
        )
    }

    /// Resolves against the defaults.
    pub fn resolve(&self) -> Result<(Variant, TrainConfig)> {
        let d = TrainConfig::default();
        let variant = match &self.variant {
            Some(v) => parse_variant(v).ok_or_else(|| anyhow!("unknown variant `{v}`"))?,
            None => Variant::IcdM,
        };
        let validation = match &self.validation {
            Some(m) => parse_metric(m).ok_or_else(|| anyhow!("unknown validation metric `{m}`"))?,
            None => d.validation,
        };
        let cfg = TrainConfig {
            alpha: self.alpha.unwrap_or(d.alpha),
            beta: self.beta.unwrap_or(d.beta),
            samples_per_epoch: self.samples_per_epoch.unwrap_or(d.samples_per_epoch),
            updates_per_sample: self.updates_per_sample.unwrap_or(d.updates_per_sample),
            epochs: self.epochs.unwrap_or(d.epochs),
            lr_g: self.lr_g.unwrap_or(d.lr_g),
            lr_d: self.lr_d.unwrap_or(d.lr_d),
            gen_widths: self.gen_widths.clone().unwrap_or(d.gen_widths),
            disc_widths: self.disc_widths.clone().unwrap_or(d.disc_widths),
            validation,
            seed: self.seed.unwrap_or(d.seed),
            restarts: self.restarts.unwrap_or(d.restarts),
            constant_features: self.constant_features.unwrap_or(d.constant_features),
        };
        cfg.validate()?;
        Ok((variant, cfg))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file = ConfigFile::parse(
            "alpha = 2.0\nepochs = 5\ngen_widths = [8, 4]\ndisc_widths = [4, 1]\n",
        )
        .unwrap();
        let flags = ConfigFile {
            epochs: Some(9),
            variant: Some("icd-c".into()),
            ..Default::default()
        };
        let (v, cfg) = file.merge(flags).resolve().unwrap();
        assert_eq!(v, Variant::IcdC);
        assert_eq!((cfg.alpha, cfg.epochs), (2.0, 9));
        assert_eq!(cfg.gen_widths, [8, 4]);
        assert_eq!(cfg.beta, TrainConfig::default().beta);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_shapes() {
        assert!(ConfigFile::parse("gamma = 1\n").is_err());
        let bad = ConfigFile::parse("disc_widths = [3, 1]\n").unwrap();
        assert!(bad.resolve().is_err());
    }
}
