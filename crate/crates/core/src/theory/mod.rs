//! Closed-form antenna efficiencies and error-probability bounds.
//!
//! Probabilities are carried as natural logarithms ([`LogProb`]) so that
//! bounds stay finite for very large antenna counts; the linear value is only
//! formed (and clamped) when reporting.
//!
//! With `ρ = d_min² / (4σ²)`:
//!
//! * ML antenna efficiency: `f_ML = ln(1 + ρ)`, independent of the ratio `δ`.
//! * ZF antenna efficiency: `f_ZF = (1 − δ) ln(1 + ρ)`.
//!
//! Both are bracketed by the VEP bounds in this module, which decay at the
//! same exponential rate in `m`.

mod quad;

use std::f64::consts::{LN_2, PI};

use serde::Serialize;

use crate::constellation::Constellation;
use crate::{Error, Result, C64};

pub use quad::integrate;

/// `10 / ln 10`: dB of VEP reduction per nat of antenna efficiency.
pub const DB_PER_NAT: f64 = 10.0 / std::f64::consts::LN_10;

/// A probability (or bound) stored as its natural log.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct LogProb(pub f64);

impl LogProb {
    pub fn ln(self) -> f64 {
        self.0
    }

    /// Unclamped linear value; bounds may exceed 1.
    pub fn value(self) -> f64 {
        self.0.exp()
    }

    /// Linear value clamped to `[0, 1]` for reporting.
    pub fn clamped(self) -> f64 {
        self.0.exp().clamp(0.0, 1.0)
    }
}

/// Parameters shared by the closed-form expressions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemParams {
    /// Receive antennas (0 when only asymptotic quantities are needed).
    pub m: usize,
    /// Users (0 when only asymptotic quantities are needed).
    pub n: usize,
    /// Users-to-antennas ratio.
    pub delta: f64,
    /// Constellation size `M`.
    pub order: usize,
    pub d_min: f64,
    pub sigma2: f64,
}

impl SystemParams {
    /// Asymptotic parameters at `δ = 0`; add dimensions or a ratio as needed.
    pub fn new(order: usize, d_min: f64, sigma2: f64) -> Result<Self> {
        if order < 2 {
            return Err(Error::InvalidArgument(format!("M must be >= 2, got {order}")));
        }
        if !(d_min > 0.0) || !(sigma2 > 0.0) || d_min.is_nan() || sigma2.is_nan() {
            return Err(Error::InvalidArgument(format!(
                "need d_min > 0 and sigma2 > 0, got {d_min}, {sigma2}"
            )));
        }
        Ok(Self {
            m: 0,
            n: 0,
            delta: 0.0,
            order,
            d_min,
            sigma2,
        })
    }

    pub fn from_constellation(c: &Constellation, sigma2: f64) -> Result<Self> {
        Self::new(c.order(), c.min_distance(), sigma2)
    }

    /// Fix `m` and `n`; `δ` becomes `n / m`.
    pub fn with_dims(mut self, m: usize, n: usize) -> Result<Self> {
        if n == 0 || m < n {
            return Err(Error::Dimension(format!("need m >= n >= 1, got m = {m}, n = {n}")));
        }
        self.m = m;
        self.n = n;
        self.delta = n as f64 / m as f64;
        Ok(self)
    }

    pub fn with_delta(mut self, delta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::InvalidArgument(format!("delta must lie in [0, 1], got {delta}")));
        }
        self.delta = delta;
        Ok(self)
    }

    /// Effective detection SNR `ρ = d_min² / (4σ²)`.
    pub fn rho(&self) -> f64 {
        self.d_min * self.d_min / (4.0 * self.sigma2)
    }

    fn dims(&self) -> Result<(usize, usize)> {
        if self.n == 0 || self.m < self.n {
            return Err(Error::Dimension(format!(
                "bound needs m >= n >= 1, got m = {}, n = {}",
                self.m, self.n
            )));
        }
        Ok((self.m, self.n))
    }
}

/// Gaussian tail `Q(x) = P(N(0,1) > x) = erfc(x/√2) / 2`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// `Q(x)` through its finite-range integral form
/// `(1/π) ∫_0^{π/2} exp(−x² / (2 sin²θ)) dθ`, evaluated by quadrature.
pub fn craig_q(x: f64) -> f64 {
    let x2 = x * x;
    let integrand = |t: f64| {
        let s = t.sin();
        if x2 == 0.0 {
            1.0
        } else {
            (-x2 / (2.0 * s * s)).exp()
        }
    };
    integrate(integrand, 0.0, PI / 2.0, 1e-16, 1e-14) / PI
}

/// `f_ML = ln(1 + ρ)` in nats per antenna.
pub fn antenna_efficiency_ml(p: &SystemParams) -> f64 {
    p.rho().ln_1p()
}

/// `f_ZF = (1 − δ) ln(1 + ρ)` in nats per antenna.
pub fn antenna_efficiency_zf(p: &SystemParams) -> f64 {
    (1.0 - p.delta) * p.rho().ln_1p()
}

/// VEP decrease per added antenna, in dB.
pub fn db_per_antenna(f_nats: f64) -> f64 {
    DB_PER_NAT * f_nats
}

/// Single-user (interference-free) lower bound on the VEP,
/// `(1 + ρ)^{−m} / (√(π(m + ½)) M)`.
pub fn ml_lower_bound(p: &SystemParams) -> Result<LogProb> {
    let (m, _) = p.dims()?;
    let m = m as f64;
    Ok(LogProb(
        -0.5 * (PI * (m + 0.5)).ln() - (p.order as f64).ln() - m * p.rho().ln_1p(),
    ))
}

/// The interference-free bound before the sin²θ simplification:
/// `(2 / (πM)) ∫_0^{π/2} (1 + ρ/sin²θ)^{−m} dθ`, by quadrature.
///
/// Always at least [`ml_lower_bound`].
pub fn no_interference_integral(p: &SystemParams) -> Result<LogProb> {
    let (m, _) = p.dims()?;
    let m = m as f64;
    let rho = p.rho();
    let base = rho.ln_1p();
    // integrand scaled by (1+ρ)^m, which lies in [0, 1]
    let integrand = |t: f64| {
        let s2 = t.sin().powi(2);
        if s2 == 0.0 {
            return 0.0;
        }
        (-m * ((rho / s2).ln_1p() - base)).exp()
    };
    let scaled = integrate(integrand, 0.0, PI / 2.0, 0.0, 1e-12);
    Ok(LogProb(
        (2.0 / (PI * p.order as f64)).ln() - m * base + scaled.ln(),
    ))
}

/// Term `k` of the grouped union bound,
/// `½ C(n,k) (M−1)^k (1 + kρ)^{−m}`, for `1 <= k <= n`.
pub fn union_term(p: &SystemParams, k: usize) -> Result<LogProb> {
    let (m, n) = p.dims()?;
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("term index {k} outside 1..={n}")));
    }
    Ok(LogProb(
        -LN_2 + ln_binomial(n, k) + k as f64 * (p.order as f64 - 1.0).ln()
            - m as f64 * (k as f64 * p.rho()).ln_1p(),
    ))
}

/// Union bound on the ML VEP grouped by number of wrong entries,
/// `½ Σ_{k=1}^{n} C(n,k) (M−1)^k (1 + kρ)^{−m}`.
pub fn ml_union_bound(p: &SystemParams) -> Result<LogProb> {
    let (m, n) = p.dims()?;
    let rho = p.rho();
    let ln_m1 = (p.order as f64 - 1.0).ln();
    let mut ln_binom = 0.0;
    let terms: Vec<f64> = (1..=n)
        .map(|k| {
            ln_binom += ((n - k + 1) as f64).ln() - (k as f64).ln();
            -LN_2 + ln_binom + k as f64 * ln_m1 - m as f64 * (k as f64 * rho).ln_1p()
        })
        .collect();
    Ok(LogProb(log_sum_exp(&terms)))
}

/// Chernoff bound on one pairwise error event,
/// `½ (1 + ‖x* − x′‖² / (4σ²))^{−m}`.
pub fn pairwise_error_bound(x_star: &[C64], x_prime: &[C64], sigma2: f64, m: usize) -> Result<LogProb> {
    if x_star.len() != x_prime.len() {
        return Err(Error::Dimension("symbol vectors differ in length".into()));
    }
    let dist2: f64 = x_star.iter().zip(x_prime).map(|(a, b)| (a - b).norm_sqr()).sum();
    if dist2 == 0.0 {
        return Err(Error::InvalidArgument("pairwise bound needs distinct vectors".into()));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidArgument(format!("sigma2 must be > 0, got {sigma2}")));
    }
    Ok(LogProb(-LN_2 - m as f64 * (dist2 / (4.0 * sigma2)).ln_1p()))
}

/// User count above which the single-error term provably dominates the
/// union bound.
pub fn lemma1_threshold(rho: f64, order: usize) -> f64 {
    let mm1 = order as f64 - 1.0;
    let a = (4.0 * mm1).max(2.0 * (2.0 * std::f64::consts::E * mm1).sqrt()) * (1.0 + 1.0 / rho);
    let b = 0.5 * (2.0 + 1.0 / rho).powi(2);
    let c = (2.0 * std::f64::consts::SQRT_2 + 2.0) / rho;
    a.max(b).max(c)
}

/// Result of the large-`n` union bound, which only holds above a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Lemma1 {
    Applicable { bound: LogProb, threshold: f64 },
    NotApplicable { threshold: f64 },
}

impl Lemma1 {
    pub fn bound(&self) -> Option<LogProb> {
        match self {
            Lemma1::Applicable { bound, .. } => Some(*bound),
            Lemma1::NotApplicable { .. } => None,
        }
    }

    pub fn threshold(&self) -> f64 {
        match self {
            Lemma1::Applicable { threshold, .. } | Lemma1::NotApplicable { threshold } => *threshold,
        }
    }
}

/// `½ (M + (M−1)² / (2 ln²((1+2ρ)/(1+ρ)))) n (1+ρ)^{−m}` when
/// `n > lemma1_threshold(ρ, M)`.
pub fn lemma1_bound(p: &SystemParams) -> Result<Lemma1> {
    let (m, n) = p.dims()?;
    let rho = p.rho();
    let threshold = lemma1_threshold(rho, p.order);
    if !(n as f64 > threshold) {
        return Ok(Lemma1::NotApplicable { threshold });
    }
    let big_m = p.order as f64;
    let log_ratio = (2.0 * rho).ln_1p() - rho.ln_1p();
    let prefactor = 0.5 * (big_m + (big_m - 1.0).powi(2) / (2.0 * log_ratio * log_ratio)) * n as f64;
    Ok(Lemma1::Applicable {
        bound: LogProb(prefactor.ln() - m as f64 * rho.ln_1p()),
        threshold,
    })
}

/// Per-user ZF symbol error bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZfBounds {
    pub sep_lower: LogProb,
    pub sep_upper: LogProb,
    pub n: usize,
}

impl ZfBounds {
    /// VEP is at least any single user's SEP.
    pub fn vep_lower(&self) -> LogProb {
        self.sep_lower
    }

    /// VEP is at most `n` times the per-user SEP.
    pub fn vep_upper(&self) -> LogProb {
        LogProb(self.sep_upper.0 + (self.n as f64).ln())
    }
}

/// `(1+ρ)^{−(m−n+1)} / (√(π(m−n+3/2)) M) ≤ SEP ≤ (M−1)/2 · (1+ρ)^{−(m−n+1)}`.
pub fn zf_sep_bounds(p: &SystemParams) -> Result<ZfBounds> {
    let (m, n) = p.dims()?;
    let dof = (m - n + 1) as f64;
    let decay = -dof * p.rho().ln_1p();
    let big_m = p.order as f64;
    Ok(ZfBounds {
        sep_lower: LogProb(-0.5 * (PI * (dof + 0.5)).ln() - big_m.ln() + decay),
        sep_upper: LogProb(((big_m - 1.0) / 2.0).ln() + decay),
        n,
    })
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (1..=k).map(|i| ((n - k + i) as f64).ln() - (i as f64).ln()).sum()
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}
