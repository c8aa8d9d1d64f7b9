use serde::Serialize;

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Point estimate and 95% Wilson score interval for a binomial proportion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VepEstimate {
    pub vep: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// `errors / trials` with its Wilson interval.
///
/// # Panics
///
/// If `trials == 0` or `errors > trials`.
pub fn estimate_vep(errors: u64, trials: u64) -> VepEstimate {
    assert!(trials >= 1 && errors <= trials, "need 0 <= errors <= trials, trials >= 1");
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    VepEstimate {
        vep: p,
        ci_low: if errors == 0 { 0.0 } else { (center - half).clamp(0.0, p) },
        ci_high: if errors == trials { 1.0 } else { (center + half).clamp(p, 1.0) },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wilson_reference_values() {
        // mpmath evaluation of the Wilson formula
        let e = estimate_vep(0, 100);
        assert_eq!(e.vep, 0.0);
        assert_eq!(e.ci_low, 0.0);
        assert!((e.ci_high - 0.036_993_498_206_985_68).abs() < 1e-12);

        let e = estimate_vep(10, 1000);
        assert_eq!(e.vep, 0.01);
        assert!((e.ci_low - 0.005_440_754_445_529_249).abs() < 1e-12);
        assert!((e.ci_high - 0.018_309_468_870_314_77).abs() < 1e-12);
    }

    #[test]
    fn wilson_complement_symmetry() {
        let lo = estimate_vep(0, 100);
        let hi = estimate_vep(100, 100);
        assert_eq!(hi.vep, 1.0);
        assert!((hi.ci_low - (1.0 - lo.ci_high)).abs() < 1e-12);
        assert_eq!(hi.ci_high, 1.0);
    }

    proptest! {
        #[test]
        fn interval_brackets_estimate(trials in 1u64..1_000_000, frac in 0.0f64..=1.0) {
            let errors = ((trials as f64) * frac).floor() as u64;
            let e = estimate_vep(errors, trials);
            prop_assert_eq!(e.vep, errors as f64 / trials as f64);
            prop_assert!(0.0 <= e.ci_low && e.ci_low <= e.vep);
            prop_assert!(e.vep <= e.ci_high && e.ci_high <= 1.0);
            let mirror = estimate_vep(trials - errors, trials);
            prop_assert!((e.ci_low - (1.0 - mirror.ci_high)).abs() < 1e-9);
        }
    }
}
