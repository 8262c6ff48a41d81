//! Binary checkpoint codec.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic "ICDCKPT\0" | version u32
//! config: u32 byte length, UTF-8 `key = value` lines
//! best_score f64 | best_epoch u64 | layer count u32
//! per layer: name (u32 length + UTF-8) | rows u64 | cols u64 | rows·cols f64, row-major
//! ```
//!
//! Floats in the config block are written with Rust's shortest round-trip
//! formatting, so decode → encode reproduces the bytes exactly.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use icd_core::model::{
    Checkpoint, DiscriminatorNet, GeneratorNet, ModelParams, TrainConfig, ValidationMetric, Variant,
};
use icd_core::nn::{Activation, LayerParams};
use icd_core::DenseMatrix;

pub const MAGIC: &[u8; 8] = b"ICDCKPT\0";
pub const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("not a checkpoint file (bad magic)")]
    Magic,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("truncated checkpoint")]
    Truncated,
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn malformed(msg: impl Into<String>) -> CheckpointError {
    CheckpointError::Malformed(msg.into())
}

pub fn variant_name(v: Variant) -> &'static str {
    match v {
        Variant::IcdM => "icd-m",
        Variant::IcdC => "icd-c",
    }
}

pub fn parse_variant(s: &str) -> Option<Variant> {
    match s.to_ascii_lowercase().as_str() {
        "icd-m" | "m" => Some(Variant::IcdM),
        "icd-c" | "c" => Some(Variant::IcdC),
        _ => None,
    }
}

pub fn metric_name(m: ValidationMetric) -> &'static str {
    match m {
        ValidationMetric::Nmi => "nmi",
        ValidationMetric::Modularity => "modularity",
    }
}

pub fn parse_metric(s: &str) -> Option<ValidationMetric> {
    match s {
        "nmi" => Some(ValidationMetric::Nmi),
        "modularity" => Some(ValidationMetric::Modularity),
        _ => None,
    }
}

fn widths(w: &[usize]) -> String {
    w.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

fn config_text(ckpt: &Checkpoint) -> String {
    let c = &ckpt.config;
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        s.push_str(k);
        s.push_str(" = ");
        s.push_str(&v);
        s.push('\n');
    };
    kv("variant", variant_name(ckpt.variant).into());
    kv("alpha", format!("{:?}", c.alpha));
    kv("beta", format!("{:?}", c.beta));
    kv("samples_per_epoch", c.samples_per_epoch.to_string());
    kv("updates_per_sample", c.updates_per_sample.to_string());
    kv("epochs", c.epochs.to_string());
    kv("lr_g", format!("{:?}", c.lr_g));
    kv("lr_d", format!("{:?}", c.lr_d));
    kv("gen_widths", widths(&c.gen_widths));
    kv("disc_widths", widths(&c.disc_widths));
    kv("validation", metric_name(c.validation).into());
    kv("seed", c.seed.to_string());
    kv("restarts", c.restarts.to_string());
    kv("constant_features", c.constant_features.to_string());
    kv("note", ckpt.note.replace('\n', " "));
    s
}

fn parse_config(text: &str) -> Result<(Variant, TrainConfig, String), CheckpointError> {
    let mut map = BTreeMap::new();
    for line in text.lines() {
        let (k, v) = line
            .split_once(" = ")
            .ok_or_else(|| malformed(format!("config line `{line}`")))?;
        map.insert(k, v);
    }
    let get = |k: &str| {
        map.get(k)
            .copied()
            .ok_or_else(|| malformed(format!("config key `{k}` missing")))
    };
    fn num<T: std::str::FromStr>(k: &str, v: &str) -> Result<T, CheckpointError> {
        v.parse()
            .map_err(|_| malformed(format!("config key `{k}` = `{v}`")))
    }
    let list = |k: &str| -> Result<Vec<usize>, CheckpointError> {
        get(k)?.split(',').map(|w| num(k, w)).collect()
    };
    let variant = parse_variant(get("variant")?).ok_or_else(|| malformed("unknown variant"))?;
    let cfg = TrainConfig {
        alpha: num("alpha", get("alpha")?)?,
        beta: num("beta", get("beta")?)?,
        samples_per_epoch: num("samples_per_epoch", get("samples_per_epoch")?)?,
        updates_per_sample: num("updates_per_sample", get("updates_per_sample")?)?,
        epochs: num("epochs", get("epochs")?)?,
        lr_g: num("lr_g", get("lr_g")?)?,
        lr_d: num("lr_d", get("lr_d")?)?,
        gen_widths: list("gen_widths")?,
        disc_widths: list("disc_widths")?,
        validation: parse_metric(get("validation")?)
            .ok_or_else(|| malformed("unknown validation metric"))?,
        seed: num("seed", get("seed")?)?,
        restarts: num("restarts", get("restarts")?)?,
        constant_features: num("constant_features", get("constant_features")?)?,
    };
    cfg.validate().map_err(|e| malformed(e.to_string()))?;
    Ok((variant, cfg, get("note")?.to_string()))
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u32(out, s.len() as u32);
    out.extend_from_slice(s.as_bytes());
}

fn put_matrix(out: &mut Vec<u8>, name: &str, rows: usize, cols: usize, data: &[f64]) {
    put_str(out, name);
    put_u64(out, rows as u64);
    put_u64(out, cols as u64);
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode(ckpt: &Checkpoint) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, VERSION);
    put_str(&mut out, &config_text(ckpt));
    out.extend_from_slice(&ckpt.best_score.to_le_bytes());
    put_u64(&mut out, ckpt.best_epoch as u64);

    let gen = &ckpt.model.generator.layers;
    let disc = &ckpt.model.discriminator.layers;
    let count = gen.len() + disc.len() + disc.iter().filter(|l| l.bias.is_some()).count();
    put_u32(&mut out, count as u32);
    for (i, l) in gen.iter().enumerate() {
        put_matrix(
            &mut out,
            &format!("gen.{i}.weight"),
            l.fan_in(),
            l.fan_out(),
            l.weight.as_slice(),
        );
    }
    for (i, l) in disc.iter().enumerate() {
        put_matrix(
            &mut out,
            &format!("disc.{i}.weight"),
            l.fan_in(),
            l.fan_out(),
            l.weight.as_slice(),
        );
        if let Some(b) = &l.bias {
            put_matrix(&mut out, &format!("disc.{i}.bias"), 1, b.len(), b);
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        if self.buf.len() < n {
            return Err(CheckpointError::Truncated);
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String, CheckpointError> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| malformed("non-UTF-8 string"))
    }
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint, CheckpointError> {
    let mut r = Reader { buf: bytes };
    if r.take(MAGIC.len()).map_err(|_| CheckpointError::Magic)? != MAGIC {
        return Err(CheckpointError::Magic);
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(CheckpointError::Version(version));
    }
    let (variant, config, note) = parse_config(&r.string()?)?;
    let best_score = r.f64()?;
    let best_epoch = r.u64()? as usize;

    let mut tensors = BTreeMap::new();
    for _ in 0..r.u32()? {
        let name = r.string()?;
        let rows = r.u64()? as usize;
        let cols = r.u64()? as usize;
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| malformed("tensor too large"))?;
        if len > r.buf.len() / 8 {
            return Err(CheckpointError::Truncated);
        }
        let data = (0..len).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
        tensors.insert(name, (rows, cols, data));
    }
    if !r.buf.is_empty() {
        return Err(malformed("trailing bytes"));
    }

    let mut take = |name: String, rows: usize, cols: usize| -> Result<Vec<f64>, CheckpointError> {
        let (r, c, data) = tensors
            .remove(&name)
            .ok_or_else(|| malformed(format!("missing `{name}`")))?;
        if (r, c) != (rows, cols) {
            return Err(malformed(format!(
                "`{name}` is {r}×{c}, expected {rows}×{cols}"
            )));
        }
        Ok(data)
    };
    let mut gen = Vec::new();
    for (i, w) in config.gen_widths.windows(2).enumerate() {
        gen.push(LayerParams {
            weight: DenseMatrix::from_vec(w[0], w[1], take(format!("gen.{i}.weight"), w[0], w[1])?)
                .map_err(|e| malformed(e.to_string()))?,
            bias: None,
            activation: Activation::Tanh,
        });
    }
    let mut disc = Vec::new();
    let last = config.disc_widths.len() - 2;
    for (i, w) in config.disc_widths.windows(2).enumerate() {
        disc.push(LayerParams {
            weight: DenseMatrix::from_vec(
                w[0],
                w[1],
                take(format!("disc.{i}.weight"), w[0], w[1])?,
            )
            .map_err(|e| malformed(e.to_string()))?,
            bias: Some(take(format!("disc.{i}.bias"), 1, w[1])?),
            activation: if i == last {
                Activation::Sigmoid
            } else {
                Activation::Relu
            },
        });
    }
    if let Some(extra) = tensors.keys().next() {
        return Err(malformed(format!("unexpected tensor `{extra}`")));
    }
    Ok(Checkpoint {
        variant,
        config,
        model: ModelParams {
            generator: GeneratorNet { layers: gen },
            discriminator: DiscriminatorNet { layers: disc },
        },
        best_score,
        best_epoch,
        note,
    })
}

pub fn save(path: &Path, ckpt: &Checkpoint) -> Result<(), CheckpointError> {
    fs::write(path, encode(ckpt))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Checkpoint, CheckpointError> {
    decode(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        let config = TrainConfig {
            gen_widths: vec![6, 4, 3],
            disc_widths: vec![3, 2, 1],
            alpha: 0.1,
            lr_g: 1.0 / 3.0,
            ..TrainConfig::default()
        };
        let mut rng = icd_core::cluster::restart_rng(9, 0);
        Checkpoint {
            variant: Variant::IcdC,
            model: ModelParams::init(&config, &mut rng).unwrap(),
            config,
            best_score: 0.123_456_789_012_345_6,
            best_epoch: 7,
            note: "unit".into(),
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let ckpt = sample();
        let bytes = encode(&ckpt);
        let back = decode(&bytes).unwrap();
        assert_eq!(back, ckpt);
        assert_eq!(encode(&back), bytes);
    }

    #[test]
    fn rejects_corruption() {
        let bytes = encode(&sample());
        assert!(matches!(
            decode(&bytes[..bytes.len() - 1]),
            Err(CheckpointError::Truncated)
        ));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode(&bad), Err(CheckpointError::Magic)));
        let mut bad = bytes.clone();
        bad[8] = 9;
        assert!(matches!(decode(&bad), Err(CheckpointError::Version(9))));
        let mut long = bytes;
        long.push(0);
        assert!(decode(&long).is_err());
    }
}
