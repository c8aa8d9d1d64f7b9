//! Realizations of `r = Hx + v` with i.i.d. `CN(0,1)` fading and
//! `CN(0,σ²)` noise.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::constellation::Constellation;
use crate::{CMatrix, CVector, Error, Result, C64};

/// One draw of the channel model.
#[derive(Debug, Clone)]
pub struct ChannelInstance {
    pub h: CMatrix,
    pub x_true: Vec<usize>,
    pub v: CVector,
    pub r: CVector,
    pub sigma2: f64,
}

impl ChannelInstance {
    pub fn antennas(&self) -> usize {
        self.h.nrows()
    }

    pub fn users(&self) -> usize {
        self.h.ncols()
    }

    /// `H x*` for the stored transmit vector.
    pub fn noiseless(&self, c: &Constellation) -> CVector {
        &self.h * CVector::from_vec(c.map(&self.x_true))
    }
}

/// Circularly symmetric complex Gaussian with total variance `var`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> C64 {
    let s = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

fn check_dims(m: usize, n: usize) -> Result<()> {
    if n == 0 || m < n {
        return Err(Error::Dimension(format!("need m >= n >= 1, got m = {m}, n = {n}")));
    }
    Ok(())
}

/// `m × n` matrix of i.i.d. `CN(0,1)` entries, drawn column by column.
pub fn sample_channel<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> Result<CMatrix> {
    check_dims(m, n)?;
    let data: Vec<C64> = (0..m * n).map(|_| complex_gaussian(rng, 1.0)).collect();
    Ok(CMatrix::from_vec(m, n, data))
}

/// Noise variance giving the requested received SNR per user.
///
/// `SNR = E‖x‖² / (n σ²)` and `E‖x‖² = n · avg_energy`, so
/// `σ² = avg_energy / 10^(snr_db/10)`.
pub fn sigma2_from_snr(snr_db: f64, c: &Constellation, n: usize) -> f64 {
    let expected_power = n as f64 * c.avg_energy();
    expected_power / (n as f64 * 10f64.powf(snr_db / 10.0))
}

/// Draw `H`, then `x*` uniform on `Sⁿ`, then `v`, and assemble `r`.
///
/// `sigma2 = 0` gives `r = Hx*` exactly.
pub fn sample_instance<R: Rng + ?Sized>(
    m: usize,
    n: usize,
    c: &Constellation,
    sigma2: f64,
    rng: &mut R,
) -> Result<ChannelInstance> {
    if !(sigma2 >= 0.0) || !sigma2.is_finite() {
        return Err(Error::InvalidArgument(format!("noise variance must be >= 0, got {sigma2}")));
    }
    let h = sample_channel(m, n, rng)?;
    let x_true: Vec<usize> = (0..n).map(|_| rng.random_range(0..c.order())).collect();
    let v = if sigma2 > 0.0 {
        CVector::from_iterator(m, (0..m).map(|_| complex_gaussian(rng, sigma2)))
    } else {
        CVector::zeros(m)
    };
    let r = &h * CVector::from_vec(c.map(&x_true)) + &v;
    Ok(ChannelInstance {
        h,
        x_true,
        v,
        r,
        sigma2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn rejects_wide_channels() {
        let mut rng = substream(1, 0, 0);
        assert!(sample_channel(2, 3, &mut rng).is_err());
        assert!(sample_channel(2, 0, &mut rng).is_err());
        assert!(sample_channel(3, 3, &mut rng).is_ok());
    }

    #[test]
    fn deterministic_given_stream() {
        let a = sample_channel(4, 2, &mut substream(9, 0, 5)).unwrap();
        let b = sample_channel(4, 2, &mut substream(9, 0, 5)).unwrap();
        assert_eq!(a, b);
        let c = sample_channel(4, 2, &mut substream(9, 0, 6)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn second_moment_is_one() {
        let mut rng = substream(11, 0, 0);
        let h = sample_channel(1000, 1000, &mut rng).unwrap();
        let mean = h.iter().map(|z| z.norm_sqr()).sum::<f64>() / 1e6;
        assert!((mean - 1.0).abs() < 0.01, "{mean}");
        // real and imaginary parts each carry half
        let re = h.iter().map(|z| z.re * z.re).sum::<f64>() / 1e6;
        assert!((re - 0.5).abs() < 0.005, "{re}");
    }

    #[test]
    fn snr_conversion() {
        let qam = Constellation::qam(16).unwrap();
        assert!((sigma2_from_snr(0.0, &qam, 4) - 1.0).abs() < 1e-12);
        assert!((sigma2_from_snr(10.0, &qam, 1) - 0.1).abs() < 1e-12);
        let two = Constellation::custom(vec![C64::new(2f64.sqrt(), 0.0), C64::new(-(2f64.sqrt()), 0.0)])
            .unwrap();
        assert!((sigma2_from_snr(0.0, &two, 7) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn noiseless_instance() {
        let c = Constellation::qam(16).unwrap();
        let inst = sample_instance(6, 3, &c, 0.0, &mut substream(3, 0, 0)).unwrap();
        assert_eq!(inst.r, inst.noiseless(&c));
        assert!(sample_instance(6, 3, &c, -1.0, &mut substream(3, 0, 0)).is_err());
        assert!(sample_instance(6, 3, &c, f64::NAN, &mut substream(3, 0, 0)).is_err());
    }

    #[test]
    fn received_vector_is_consistent() {
        let c = Constellation::psk(8).unwrap();
        let inst = sample_instance(5, 2, &c, 0.3, &mut substream(3, 0, 1)).unwrap();
        let diff = &inst.r - (inst.noiseless(&c) + &inst.v);
        assert!(diff.norm() < 1e-12);
        assert_eq!((inst.antennas(), inst.users()), (5, 2));
    }

    #[test]
    fn noise_power() {
        let c = Constellation::psk(2).unwrap();
        let mut total = 0.0;
        let mut count = 0usize;
        for t in 0..10_000u32 {
            let inst = sample_instance(100, 1, &c, 0.25, &mut substream(4, 0, t)).unwrap();
            total += inst.v.norm_squared();
            count += 100;
        }
        let est = total / count as f64;
        assert!((est / 0.25 - 1.0).abs() < 0.01, "{est}");
    }
}
