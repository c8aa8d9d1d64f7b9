use super::{check_shapes, Decision, DetectorKind};
use crate::constellation::Constellation;
use crate::{CMatrix, CVector, Error, Result};

/// Default cap on `Mⁿ` for exhaustive enumeration.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 1 << 20;

/// Global minimizer of `‖Hx − r‖²` over `Sⁿ` by enumeration.
///
/// Candidates are visited in lexicographic order of their index vectors and
/// only a strictly smaller metric replaces the incumbent, so ties resolve to
/// the lexicographically smallest vector. Refuses when `Mⁿ > budget`.
pub fn detect_ml_exhaustive(
    h: &CMatrix,
    r: &CVector,
    c: &Constellation,
    budget: u64,
) -> Result<Decision> {
    check_shapes(h, r)?;
    let (m, n) = h.shape();
    let order = c.order();
    match (order as u64).checked_pow(n as u32) {
        Some(count) if count <= budget => {}
        _ => {
            return Err(Error::BudgetExceeded {
                candidates: (order as f64).powi(n as i32),
                budget,
            })
        }
    }

    // residuals[d] = r - sum_{j<d} h_j s_{x_j}
    let mut residuals: Vec<CVector> = vec![r.clone(); n + 1];
    let mut x = vec![0usize; n];
    let mut best = vec![0usize; n];
    let mut best_metric = f64::INFINITY;
    let mut depth = 0usize;

    loop {
        if x[depth] < order {
            let s = c.symbol(x[depth]);
            let (head, tail) = residuals.split_at_mut(depth + 1);
            let next = &mut tail[0];
            let col = h.column(depth);
            for i in 0..m {
                next[i] = head[depth][i] - col[i] * s;
            }
            if depth + 1 == n {
                let metric = next.norm_squared();
                if metric < best_metric {
                    best_metric = metric;
                    best.copy_from_slice(&x);
                }
                x[depth] += 1;
            } else {
                depth += 1;
                x[depth] = 0;
            }
        } else {
            if depth == 0 {
                break;
            }
            depth -= 1;
            x[depth] += 1;
        }
    }

    Ok(Decision {
        detector: DetectorKind::MlExhaustive,
        x_hat: best,
        metric: best_metric,
    })
}
