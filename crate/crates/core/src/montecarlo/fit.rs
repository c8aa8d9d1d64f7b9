use serde::Serialize;

use super::VepCurve;
use crate::detect::DetectorKind;
use crate::{Error, Result};

/// Default minimum error count for a grid point to enter a slope fit.
pub const DEFAULT_MIN_ERRORS: u64 = 50;

/// One `(m, VEP)` sample with its regression weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopePoint {
    pub m: usize,
    pub vep: f64,
    pub weight: f64,
}

/// Weighted straight-line fit of `ln VEP` against `m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeFit {
    /// Empirical antenna efficiency, the negated slope (nats per antenna).
    pub f_hat: f64,
    /// Fitted `ln VEP` at `m = 0`.
    pub intercept: f64,
    /// Standard error of `f_hat`, taking the weights as inverse variances.
    pub stderr: f64,
    pub points_used: Vec<usize>,
    pub r_squared: f64,
}

impl SlopeFit {
    /// Anchor for a reference line of slope `-f`: it passes through the
    /// first point used in the fit, at its fitted height.
    pub fn reference_anchor(&self) -> (usize, f64) {
        let m0 = self.points_used[0];
        (m0, self.intercept - self.f_hat * m0 as f64)
    }
}

/// Weighted least squares of `ln vep` on `m`.
///
/// Needs at least two points with positive VEP, positive weight and two
/// distinct `m` values.
pub fn fit_points(points: &[SlopePoint]) -> Result<SlopeFit> {
    let usable: Vec<&SlopePoint> = points
        .iter()
        .filter(|p| p.vep > 0.0 && p.weight > 0.0 && p.vep.is_finite())
        .collect();
    if usable.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "slope fit needs >= 2 qualifying points, found {}",
            usable.len()
        )));
    }
    let sw: f64 = usable.iter().map(|p| p.weight).sum();
    let mx = usable.iter().map(|p| p.weight * p.m as f64).sum::<f64>() / sw;
    let my = usable.iter().map(|p| p.weight * p.vep.ln()).sum::<f64>() / sw;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in &usable {
        let dx = p.m as f64 - mx;
        let dy = p.vep.ln() - my;
        sxx += p.weight * dx * dx;
        sxy += p.weight * dx * dy;
        syy += p.weight * dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all qualifying points share one m".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res = (syy - slope * sxy).max(0.0);
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(SlopeFit {
        f_hat: -slope,
        intercept,
        stderr: sxx.recip().sqrt(),
        points_used: usable.iter().map(|p| p.m).collect(),
        r_squared,
    })
}

/// Fit one detector's curve, keeping grid points with at least `min_errors`
/// errors; the error count is the weight.
pub fn fit_slope(curve: &VepCurve, detector: DetectorKind, min_errors: u64) -> Result<SlopeFit> {
    let points: Vec<SlopePoint> = curve
        .points
        .iter()
        .filter_map(|pt| {
            let d = pt.detector(detector)?;
            (d.counts.errors >= min_errors.max(1)).then(|| SlopePoint {
                m: pt.m,
                vep: d.estimate.vep,
                weight: d.counts.errors as f64,
            })
        })
        .collect();
    fit_points(&points).map_err(|e| match e {
        Error::InsufficientData(msg) => {
            Error::InsufficientData(format!("{} / {detector}: {msg}", curve.name))
        }
        other => other,
    })
}
