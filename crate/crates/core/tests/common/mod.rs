#![allow(dead_code)]

use mimo_ae::channel::{complex_gaussian, sample_channel};
use mimo_ae::detect::zf_decorrelate;
use mimo_ae::rng::substream;
use mimo_ae::CVector;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Asymptotic Kolmogorov tail with the Stephens small-sample correction.
pub fn kolmogorov_p(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

pub struct KsResult {
    pub d: f64,
    pub p: f64,
    pub mean: f64,
}

/// One-sample KS test of `samples` against χ² with `dof` degrees of freedom.
pub fn ks_chi_square(mut samples: Vec<f64>, dof: f64) -> KsResult {
    let dist = ChiSquared::new(dof).unwrap();
    samples.sort_by(f64::total_cmp);
    let n = samples.len();
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = dist.cdf(x);
        d = d.max(f - i as f64 / n as f64).max((i + 1) as f64 / n as f64 - f);
    }
    KsResult {
        d,
        p: kolmogorov_p(d, n),
        mean: samples.iter().sum::<f64>() / n as f64,
    }
}

/// `2γ₁` over `count` independent channels.
pub fn gamma1_samples(m: usize, n: usize, count: usize, seed: u64) -> Vec<f64> {
    (0..count)
        .map(|t| {
            let mut rng = substream(seed, 0, t as u32);
            let h = sample_channel(m, n, &mut rng).unwrap();
            let r = CVector::from_iterator(m, (0..m).map(|_| complex_gaussian(&mut rng, 1.0)));
            2.0 * zf_decorrelate(&h, &r).unwrap().gamma[0]
        })
        .collect()
}

/// `2‖h₁‖²` over `count` independent channels.
pub fn column_energy_samples(m: usize, count: usize, seed: u64) -> Vec<f64> {
    (0..count)
        .map(|t| {
            let mut rng = substream(seed, 1, t as u32);
            let h = sample_channel(m, 1, &mut rng).unwrap();
            2.0 * h.column(0).norm_squared()
        })
        .collect()
}
