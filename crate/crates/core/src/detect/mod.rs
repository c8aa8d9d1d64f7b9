//! MIMO detectors: exhaustive ML, sphere-decoded ML and zero-forcing.
//!
//! All detectors are pure functions of `(H, r, S)`. They return a
//! [`Decision`]; grading against the transmitted vector produces a
//! [`DetectionOutcome`].

mod ml;
mod sphere;
mod zf;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::constellation::Constellation;
use crate::{CMatrix, CVector, Error, Result};

pub use ml::{detect_ml_exhaustive, DEFAULT_ENUMERATION_BUDGET};
pub use sphere::{detect_ml_sphere, detect_ml_sphere_with_stats, SphereStats};
pub use zf::{detect_zf, zf_decorrelate, ZfIntermediate};

/// Smallest |R_jj| / largest |R_jj| accepted before declaring rank deficiency.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DetectorKind {
    #[serde(rename = "ml-exhaustive")]
    MlExhaustive,
    #[serde(rename = "ml-sphere")]
    MlSphere,
    #[serde(rename = "zf")]
    Zf,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 3] = [Self::MlExhaustive, Self::MlSphere, Self::Zf];

    pub fn name(self) -> &'static str {
        match self {
            Self::MlExhaustive => "ml-exhaustive",
            Self::MlSphere => "ml-sphere",
            Self::Zf => "zf",
        }
    }

    pub fn is_ml(self) -> bool {
        !matches!(self, Self::Zf)
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown detector '{s}'")))
    }
}

/// Detector output before comparison with the truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub detector: DetectorKind,
    pub x_hat: Vec<usize>,
    /// `‖H x̂ − r‖²`.
    pub metric: f64,
}

impl Decision {
    pub fn grade(self, x_true: &[usize]) -> DetectionOutcome {
        assert_eq!(self.x_hat.len(), x_true.len(), "decision length mismatch");
        let symbol_errors: Vec<bool> = self.x_hat.iter().zip(x_true).map(|(a, b)| a != b).collect();
        DetectionOutcome {
            vector_error: symbol_errors.iter().any(|&e| e),
            x_hat: self.x_hat,
            detector: self.detector,
            symbol_errors,
            metric: self.metric,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionOutcome {
    pub x_hat: Vec<usize>,
    pub detector: DetectorKind,
    pub vector_error: bool,
    pub symbol_errors: Vec<bool>,
    pub metric: f64,
}

/// Run a detector by kind.
pub fn detect(
    kind: DetectorKind,
    h: &CMatrix,
    r: &CVector,
    c: &Constellation,
    budget: u64,
) -> Result<Decision> {
    match kind {
        DetectorKind::MlExhaustive => detect_ml_exhaustive(h, r, c, budget),
        DetectorKind::MlSphere => detect_ml_sphere(h, r, c),
        DetectorKind::Zf => detect_zf(h, r, c),
    }
}

/// `‖H x − r‖²` for symbol indices `x`.
pub fn residual(h: &CMatrix, r: &CVector, c: &Constellation, x: &[usize]) -> f64 {
    (h * CVector::from_vec(c.map(x)) - r).norm_squared()
}

fn check_shapes(h: &CMatrix, r: &CVector) -> Result<()> {
    let (m, n) = h.shape();
    if n == 0 || m < n {
        return Err(Error::Dimension(format!("need m >= n >= 1, got {m}x{n}")));
    }
    if r.len() != m {
        return Err(Error::Dimension(format!("received vector has {} entries, H has {m} rows", r.len())));
    }
    Ok(())
}

/// Rank test on the diagonal of a triangular factor.
fn check_rank<I: Iterator<Item = f64>>(diag: I) -> Result<()> {
    let (lo, hi) = diag.fold((f64::INFINITY, 0f64), |(lo, hi), d| (lo.min(d.abs()), hi.max(d.abs())));
    if !(lo >= RANK_TOLERANCE * hi) || hi == 0.0 {
        return Err(Error::RankDeficient { ratio: if hi > 0.0 { lo / hi } else { 0.0 } });
    }
    Ok(())
}
