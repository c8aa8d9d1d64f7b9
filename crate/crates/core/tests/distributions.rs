mod common;

use common::{column_energy_samples, gamma1_samples, kolmogorov_p, ks_chi_square};
use mimo_ae::channel::sample_instance;
use mimo_ae::constellation::Constellation;
use mimo_ae::detect::{detect_zf, zf_decorrelate};
use mimo_ae::rng::substream;
use mimo_ae::{CMatrix, CVector, C64};
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[test]
fn kolmogorov_tail_reference_points() {
    // large-n critical values at 5% and 1%
    let n = 1_000_000;
    let sn = (n as f64).sqrt();
    assert!((kolmogorov_p(1.358 / sn, n) - 0.05).abs() < 1e-3);
    assert!((kolmogorov_p(1.628 / sn, n) - 0.01).abs() < 3e-4);
    assert_eq!(kolmogorov_p(0.0, n), 1.0);
}

#[test]
fn zf_gain_is_chi_square() {
    for (m, n, seed) in [(8, 4, 1), (16, 4, 2), (12, 12, 3), (5, 1, 4)] {
        let dof = 2.0 * (m - n + 1) as f64;
        let ks = ks_chi_square(gamma1_samples(m, n, 20_000, seed), dof);
        assert!(ks.p > 0.01, "m = {m}, n = {n}: D = {}, p = {}", ks.d, ks.p);
        assert!((ks.mean / dof - 1.0).abs() < 0.03, "mean {}", ks.mean);
    }
}

#[test]
fn column_energy_is_chi_square() {
    for (m, seed) in [(1, 5), (8, 6), (16, 7)] {
        let ks = ks_chi_square(column_energy_samples(m, 20_000, seed), 2.0 * m as f64);
        assert!(ks.p > 0.01, "m = {m}: p = {}", ks.p);
    }
}

#[test]
fn ks_rejects_the_wrong_law() {
    // 2γ₁ at (8, 4) has 10 degrees of freedom, not 16
    let ks = ks_chi_square(gamma1_samples(8, 4, 20_000, 8), 16.0);
    assert!(ks.p < 1e-6);
}

#[test]
fn transmitted_symbols_are_uniform() {
    let c = Constellation::qam(16).unwrap();
    let mut counts = [0u64; 16];
    let draws = 5_000;
    for t in 0..draws {
        let inst = sample_instance(4, 4, &c, 1.0, &mut substream(9, 0, t)).unwrap();
        for &x in &inst.x_true {
            counts[x] += 1;
        }
    }
    let expected = (draws as f64 * 4.0) / 16.0;
    let stat: f64 = counts.iter().map(|&k| (k as f64 - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new(15.0).unwrap().cdf(stat);
    assert!(p > 0.001, "chi-square {stat}, p = {p}");
}

fn random_unitary(m: usize, seed: u64) -> CMatrix {
    let mut rng = substream(seed, 7, 7);
    let g = mimo_ae::channel::sample_channel(m, m, &mut rng).unwrap();
    g.qr().q()
}

#[test]
fn zf_is_unitarily_invariant() {
    let c = Constellation::qam(16).unwrap();
    let u = random_unitary(10, 10);
    assert!((u.ad_mul(&u) - CMatrix::identity(10, 10)).norm() < 1e-12);
    for t in 0..200 {
        let inst = sample_instance(10, 4, &c, 0.3, &mut substream(11, 0, t)).unwrap();
        let a = zf_decorrelate(&inst.h, &inst.r).unwrap();
        let b = zf_decorrelate(&(&u * &inst.h), &(&u * &inst.r)).unwrap();
        for (ga, gb) in a.gamma.iter().zip(&b.gamma) {
            assert!((ga / gb - 1.0).abs() < 1e-10);
        }
        assert!((&a.x_tilde - &b.x_tilde).norm() < 1e-10 * a.x_tilde.norm().max(1.0));
        let da = detect_zf(&inst.h, &inst.r, &c).unwrap();
        let db = detect_zf(&(&u * &inst.h), &(&u * &inst.r), &c).unwrap();
        assert_eq!(da.x_hat, db.x_hat);
    }
}

#[test]
fn rotated_channel_has_the_same_law() {
    // UH is again i.i.d. CN(0,1), so 2‖(UH)₁‖² keeps its χ²₂ₘ law
    let m = 6;
    let u = random_unitary(m, 12);
    let samples: Vec<f64> = (0..20_000u32)
        .map(|t| {
            let h = mimo_ae::channel::sample_channel(m, 1, &mut substream(13, 0, t)).unwrap();
            2.0 * (&u * h).column(0).norm_squared()
        })
        .collect();
    assert!(ks_chi_square(samples, 12.0).p > 0.01);
    let z = CVector::from_element(m, C64::new(1.0, 0.0));
    assert!(((&u * &z).norm() - z.norm()).abs() < 1e-12);
}
