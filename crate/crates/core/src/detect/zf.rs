use super::{check_rank, check_shapes, residual, Decision, DetectorKind};
use crate::constellation::Constellation;
use crate::{CMatrix, CVector, Result};

/// Decorrelator output.
#[derive(Debug, Clone)]
pub struct ZfIntermediate {
    /// Least-squares estimate `(H†H)⁻¹ H† r`.
    pub x_tilde: CVector,
    /// Post-detection SNR scale per user, `γ_j = 1 / [(H†H)⁻¹]_jj`.
    pub gamma: Vec<f64>,
}

/// Least-squares decorrelation through a thin QR factorization `H = QR`.
///
/// `x̃ = R⁻¹ Q† r`, and since `(H†H)⁻¹ = R⁻¹ R⁻†` the diagonal entry `j` is the
/// squared norm of row `j` of `R⁻¹`.
pub fn zf_decorrelate(h: &CMatrix, r: &CVector) -> Result<ZfIntermediate> {
    check_shapes(h, r)?;
    let n = h.ncols();
    let qr = h.clone().qr();
    let rt = qr.r();
    check_rank(rt.diagonal().iter().map(|d| d.norm()))?;

    let qh_r = qr.q().ad_mul(r);
    let x_tilde = rt
        .solve_upper_triangular(&qh_r)
        .expect("triangular factor checked for rank");
    let r_inv = rt
        .solve_upper_triangular(&CMatrix::identity(n, n))
        .expect("triangular factor checked for rank");
    let gamma = (0..n)
        .map(|j| 1.0 / r_inv.row(j).iter().map(|z| z.norm_sqr()).sum::<f64>())
        .collect();

    Ok(ZfIntermediate { x_tilde, gamma })
}

/// Decorrelate, then quantize each entry to its nearest symbol.
pub fn detect_zf(h: &CMatrix, r: &CVector, c: &Constellation) -> Result<Decision> {
    let zf = zf_decorrelate(h, r)?;
    let x_hat: Vec<usize> = zf.x_tilde.iter().map(|&z| c.nearest_symbol(z)).collect::<Result<_>>()?;
    let metric = residual(h, r, c, &x_hat);
    Ok(Decision {
        detector: DetectorKind::Zf,
        x_hat,
        metric,
    })
}
