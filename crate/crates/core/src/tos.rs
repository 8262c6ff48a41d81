//! Trade-off score between a quality metric and runtime.
//!
//! Quality and runtime are each normalized to `[0, 1]` with larger meaning
//! better, and the score is their product: the area of the rectangle spanned
//! by the normalized point.

use crate::error::{input_err, Error, Result};

/// The quality metric a score refers to; fixes how it is normalized.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QualityMetric {
    Nmi,
    Accuracy,
    Modularity,
    Ncut,
}

impl QualityMetric {
    /// Normalized quality. `max_ncut` is only read for [`QualityMetric::Ncut`].
    pub fn normalize(self, q: f64, max_ncut: f64) -> Result<f64> {
        match self {
            Self::Nmi | Self::Accuracy => Ok(q),
            Self::Modularity => Ok((q + 1.0) / 2.0),
            Self::Ncut => {
                if max_ncut == 0.0 {
                    return Err(Error::Normalization("maximum NCut is zero".into()));
                }
                if q > max_ncut {
                    return Err(input_err!("NCut {q} exceeds the maximum {max_ncut}"));
                }
                Ok((max_ncut - q) / max_ncut)
            }
        }
    }
}

/// Normalized efficiency `(E_m − E) / E_m`.
pub fn normalize_runtime(e: f64, max_runtime: f64) -> Result<f64> {
    if max_runtime == 0.0 {
        return Err(Error::Normalization("maximum runtime is zero".into()));
    }
    if e > max_runtime {
        return Err(input_err!("runtime {e} exceeds the maximum {max_runtime}"));
    }
    Ok((max_runtime - e) / max_runtime)
}

/// Trade-off score of quality `q` at runtime `e`, given the largest runtime
/// (and, for NCut, the largest NCut) across the compared methods.
pub fn tos(q: f64, metric: QualityMetric, e: f64, max_ncut: f64, max_runtime: f64) -> Result<f64> {
    Ok(metric.normalize(q, max_ncut)? * normalize_runtime(e, max_runtime)?)
}
