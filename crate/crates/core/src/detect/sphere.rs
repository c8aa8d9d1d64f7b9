//! Exact ML detection for square QAM by depth-first lattice search.
//!
//! The complex model is rewritten over the reals,
//!
//! ```text
//! [Re r]   [Re H  -Im H] [Re x]
//! [Im r] = [Im H   Re H] [Im x] + noise
//! ```
//!
//! so every real coordinate takes one of `√M` PAM levels. After `H_r = QR` the
//! metric becomes `‖y − Rx‖²` plus a constant, which is searched from the last
//! coordinate upward. At each level candidates are visited in order of
//! distance from the conditional centre (Schnorr–Euchner), so the first leaf
//! reached is the Babai point and sets the initial radius; the radius then
//! shrinks to each better leaf found.

use nalgebra::{DMatrix, DVector};

use super::{check_rank, check_shapes, residual, Decision, DetectorKind};
use crate::constellation::{Constellation, QamLattice};
use crate::{CMatrix, CVector, Error, Result};

/// Search effort counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SphereStats {
    /// Tree nodes whose partial distance was evaluated.
    pub nodes: u64,
    /// Leaves that improved (or set) the incumbent.
    pub improvements: u64,
}

pub fn detect_ml_sphere(h: &CMatrix, r: &CVector, c: &Constellation) -> Result<Decision> {
    detect_ml_sphere_with_stats(h, r, c).map(|(d, _)| d)
}

pub fn detect_ml_sphere_with_stats(
    h: &CMatrix,
    r: &CVector,
    c: &Constellation,
) -> Result<(Decision, SphereStats)> {
    check_shapes(h, r)?;
    let lattice = c.qam_lattice().ok_or_else(|| {
        Error::Unsupported("sphere decoding needs a square QAM constellation".into())
    })?;
    let (m, n) = h.shape();

    let mut hr = DMatrix::<f64>::zeros(2 * m, 2 * n);
    for j in 0..n {
        for i in 0..m {
            let z = h[(i, j)];
            hr[(i, j)] = z.re;
            hr[(i, n + j)] = -z.im;
            hr[(m + i, j)] = z.im;
            hr[(m + i, n + j)] = z.re;
        }
    }
    let yr = DVector::from_iterator(2 * m, r.iter().map(|z| z.re).chain(r.iter().map(|z| z.im)));

    let qr = hr.qr();
    let rt = qr.r();
    check_rank(rt.diagonal().iter().copied())?;
    let y = qr.q().tr_mul(&yr);

    let mut search = Search::new(&rt, &y, lattice);
    search.run();

    let x_hat: Vec<usize> = (0..n)
        .map(|j| search.best[j] * lattice.side + search.best[n + j])
        .collect();
    let metric = residual(h, r, c, &x_hat);
    Ok((
        Decision {
            detector: DetectorKind::MlSphere,
            x_hat,
            metric,
        },
        search.stats,
    ))
}

struct Search<'a> {
    r: &'a DMatrix<f64>,
    y: &'a DVector<f64>,
    lattice: QamLattice,
    dim: usize,
    /// Current level indices per real coordinate.
    x: Vec<usize>,
    best: Vec<usize>,
    best_dist: f64,
    stats: SphereStats,
}

impl<'a> Search<'a> {
    fn new(r: &'a DMatrix<f64>, y: &'a DVector<f64>, lattice: QamLattice) -> Self {
        let dim = r.ncols();
        Self {
            r,
            y,
            lattice,
            dim,
            x: vec![0; dim],
            best: vec![0; dim],
            best_dist: f64::INFINITY,
            stats: SphereStats::default(),
        }
    }

    fn run(&mut self) {
        let top = self.dim - 1;
        self.descend(top, 0.0);
    }

    /// Candidate level indices ordered by distance from `center`, ties to the
    /// lower index.
    fn ordered_levels(&self, center: f64) -> Vec<(usize, f64)> {
        let mut levels: Vec<(usize, f64)> = (0..self.lattice.side)
            .map(|i| (i, (self.lattice.level(i) - center).abs()))
            .collect();
        levels.sort_by(|a, b| a.1.total_cmp(&b.1));
        levels
    }

    fn descend(&mut self, k: usize, partial: f64) {
        let rkk = self.r[(k, k)];
        let mut acc = self.y[k];
        for j in k + 1..self.dim {
            acc -= self.r[(k, j)] * self.lattice.level(self.x[j]);
        }
        let center = acc / rkk;

        for (idx, gap) in self.ordered_levels(center) {
            let dist = partial + (rkk * gap).powi(2);
            self.stats.nodes += 1;
            if dist >= self.best_dist {
                // later candidates are farther from the centre
                break;
            }
            self.x[k] = idx;
            if k == 0 {
                self.best_dist = dist;
                self.best.copy_from_slice(&self.x);
                self.stats.improvements += 1;
            } else {
                self.descend(k - 1, dist);
            }
        }
    }
}
