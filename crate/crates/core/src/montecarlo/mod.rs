//! Monte Carlo estimation of vector and symbol error rates over a grid of
//! antenna counts.
//!
//! Every trial at grid point `p` with index `t` draws its channel, symbols and
//! noise from [`substream`]`(master_seed, p, t)`, and all configured
//! detectors see that same instance. Per-point counts are integer sums over
//! trials, so a sweep is a deterministic function of its
//! [`ExperimentConfig`] regardless of thread count or scheduling.
//!
//! With adaptive stopping enabled, trials run in fixed chunks of
//! [`CHUNK_TRIALS`] and the point stops after the first chunk at which every
//! detector has reached `target_errors`; the stopping point therefore does
//! not depend on scheduling either.

mod fit;
mod stats;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::channel::{sample_instance, sigma2_from_snr, ChannelInstance};
use crate::constellation::{Constellation, ConstellationSpec};
use crate::detect::{detect, DetectorKind, DEFAULT_ENUMERATION_BUDGET};
use crate::rng::substream;
use crate::theory::{
    antenna_efficiency_ml, antenna_efficiency_zf, ml_lower_bound, ml_union_bound, zf_sep_bounds,
    LogProb, SystemParams,
};
use crate::{Error, Result};

pub use fit::{fit_points, fit_slope, SlopeFit, SlopePoint, DEFAULT_MIN_ERRORS};
pub use stats::{estimate_vep, VepEstimate, Z_95};

pub const DEFAULT_TRIALS: u64 = 10_000;
pub const CHUNK_TRIALS: u64 = 1_000;

/// How many users transmit at a given antenna count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum UserRule {
    /// Constant `n` (the `δ = 0` regime).
    Fixed(usize),
    /// `n = round(δ m)`.
    Ratio(#[serde(deserialize_with = "ratio_value", serialize_with = "ratio_out")] f64),
}

impl UserRule {
    pub fn users(&self, m: usize) -> usize {
        match *self {
            UserRule::Fixed(n) => n,
            UserRule::Ratio(delta) => (delta * m as f64).round() as usize,
        }
    }

    /// Limiting users-to-antennas ratio.
    pub fn delta(&self) -> f64 {
        match *self {
            UserRule::Fixed(_) => 0.0,
            UserRule::Ratio(d) => d,
        }
    }
}

fn ratio_out<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(*v)
}

/// Accepts a number or a `"p/q"` string.
fn ratio_value<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }
    match Raw::deserialize(d)? {
        Raw::Num(v) => Ok(v),
        Raw::Text(s) => {
            let bad = || serde::de::Error::custom(format!("bad ratio '{s}', expected a number or \"p/q\""));
            match s.split_once('/') {
                Some((p, q)) => {
                    let p: f64 = p.trim().parse().map_err(|_| bad())?;
                    let q: f64 = q.trim().parse().map_err(|_| bad())?;
                    Ok(p / q)
                }
                None => s.trim().parse().map_err(|_| bad()),
            }
        }
    }
}

/// Full description of one antenna sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub constellation: ConstellationSpec,
    pub detectors: Vec<DetectorKind>,
    pub users: UserRule,
    pub snr_db: f64,
    pub m_grid: Vec<usize>,
    /// Trials per grid point (an upper limit when `target_errors` is set).
    pub trials: u64,
    pub master_seed: u64,
    /// Stop a grid point early once every detector has this many errors.
    pub target_errors: Option<u64>,
    pub enumeration_budget: u64,
}

impl ExperimentConfig {
    /// A fixed-trial sweep with default budget and no early stopping.
    pub fn new(
        name: impl Into<String>,
        constellation: ConstellationSpec,
        detectors: Vec<DetectorKind>,
        users: UserRule,
        snr_db: f64,
        m_grid: Vec<usize>,
    ) -> Self {
        Self {
            name: name.into(),
            constellation,
            detectors,
            users,
            snr_db,
            m_grid,
            trials: DEFAULT_TRIALS,
            master_seed: 0,
            target_errors: None,
            enumeration_budget: DEFAULT_ENUMERATION_BUDGET,
        }
    }

    pub fn with_trials(mut self, trials: u64) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn with_target_errors(mut self, target: Option<u64>) -> Self {
        self.target_errors = target;
        self
    }

    /// Check every grid point and build the runnable experiment.
    pub fn validate(&self) -> Result<Experiment> {
        let fail = |msg: String| Error::Config(format!("sweep '{}': {msg}", self.name));
        let constellation = self
            .constellation
            .build()
            .map_err(|e| fail(e.to_string()))?;
        if self.m_grid.is_empty() {
            return Err(fail("m_grid is empty".into()));
        }
        if let Some(w) = self.m_grid.windows(2).find(|w| w[0] >= w[1]) {
            return Err(fail(format!("m_grid must be strictly ascending ({} then {})", w[0], w[1])));
        }
        if self.m_grid.len() > u32::MAX as usize {
            return Err(fail("m_grid too long".into()));
        }
        if self.trials == 0 || self.trials > u32::MAX as u64 {
            return Err(fail(format!("trials must be in 1..=2^32-1, got {}", self.trials)));
        }
        if self.target_errors == Some(0) {
            return Err(fail("target_errors must be >= 1 when set".into()));
        }
        if self.detectors.is_empty() {
            return Err(fail("no detectors listed".into()));
        }
        let mut seen = self.detectors.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.detectors.len() {
            return Err(fail("detector listed twice".into()));
        }
        if !self.snr_db.is_finite() {
            return Err(fail(format!("snr_db must be finite, got {}", self.snr_db)));
        }
        if let UserRule::Ratio(d) = self.users {
            if !(0.0..=1.0).contains(&d) {
                return Err(fail(format!("user ratio must lie in [0, 1], got {d}")));
            }
        }
        if self.detectors.contains(&DetectorKind::MlSphere) && constellation.qam_lattice().is_none() {
            return Err(fail("ml-sphere requires a square QAM constellation".into()));
        }

        let order = constellation.order() as f64;
        for &m in &self.m_grid {
            let n = self.users.users(m);
            if n == 0 || m < n {
                return Err(fail(format!("grid point m = {m}, n = {n}: need m >= n >= 1")));
            }
            if self.detectors.iter().any(|d| d.is_ml()) {
                let candidates = order.powi(n as i32);
                if candidates > self.enumeration_budget as f64 {
                    return Err(fail(format!(
                        "grid point m = {m}, n = {n}: ML needs {}^{n} = {candidates:.0} candidates, budget is {}",
                        constellation.order(),
                        self.enumeration_budget
                    )));
                }
            }
        }

        let sigma2 = sigma2_from_snr(self.snr_db, &constellation, 1);
        Ok(Experiment {
            config: self.clone(),
            constellation,
            sigma2,
        })
    }
}

/// Per-detector outcome of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialFlags {
    pub detector: DetectorKind,
    pub vector_error: bool,
    /// Wrong entries among all `n` users.
    pub symbol_errors: usize,
    /// Whether user 1's symbol was wrong.
    pub user1_error: bool,
}

/// Error tallies for one detector at one grid point.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct DetectorCounts {
    pub trials: u64,
    pub errors: u64,
    pub symbol_errors: u64,
    pub user1_errors: u64,
}

impl DetectorCounts {
    fn add(&mut self, f: &TrialFlags) {
        self.trials += 1;
        self.errors += f.vector_error as u64;
        self.symbol_errors += f.symbol_errors as u64;
        self.user1_errors += f.user1_error as u64;
    }

    fn merge(mut self, other: Self) -> Self {
        self.trials += other.trials;
        self.errors += other.errors;
        self.symbol_errors += other.symbol_errors;
        self.user1_errors += other.user1_errors;
        self
    }
}

/// Theory values attached to a grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoryOverlay {
    pub ml_lower: LogProb,
    pub ml_union: LogProb,
    pub zf_lower: LogProb,
    pub zf_upper: LogProb,
    pub f_ml: f64,
    pub f_zf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectorPoint {
    pub detector: DetectorKind,
    pub counts: DetectorCounts,
    pub estimate: VepEstimate,
    /// Symbol error rate averaged over all users.
    pub sep_all: f64,
    /// Symbol error rate of user 1 alone.
    pub sep_user1: f64,
}

impl DetectorPoint {
    fn new(detector: DetectorKind, counts: DetectorCounts, n: usize) -> Self {
        let t = counts.trials as f64;
        Self {
            detector,
            counts,
            estimate: estimate_vep(counts.errors, counts.trials),
            sep_all: counts.symbol_errors as f64 / (n as f64 * t),
            sep_user1: counts.user1_errors as f64 / t,
        }
    }

    /// The SEP reported for this detector: user 1 for ML, all users for ZF.
    pub fn sep(&self) -> f64 {
        if self.detector.is_ml() {
            self.sep_user1
        } else {
            self.sep_all
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    pub m: usize,
    pub n: usize,
    pub detectors: Vec<DetectorPoint>,
    pub theory: TheoryOverlay,
    /// Wall-clock seconds; informational, not part of the deterministic output.
    #[serde(skip)]
    pub runtime_secs: f64,
}

impl GridPoint {
    pub fn detector(&self, kind: DetectorKind) -> Option<&DetectorPoint> {
        self.detectors.iter().find(|d| d.detector == kind)
    }
}

/// Sweep output: one entry per grid point, each with every detector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VepCurve {
    pub name: String,
    pub sigma2: f64,
    pub points: Vec<GridPoint>,
}

/// A validated experiment, ready to run.
#[derive(Debug, Clone)]
pub struct Experiment {
    config: ExperimentConfig,
    constellation: Constellation,
    sigma2: f64,
}

impl Experiment {
    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// `(m, n)` for grid point `point`.
    pub fn dims(&self, point: usize) -> (usize, usize) {
        let m = self.config.m_grid[point];
        (m, self.config.users.users(m))
    }

    /// The channel instance every detector sees in this trial.
    pub fn trial_instance(&self, point: usize, trial: u64) -> Result<ChannelInstance> {
        let (m, n) = self.dims(point);
        let mut rng = substream(self.config.master_seed, point as u32, trial as u32);
        sample_instance(m, n, &self.constellation, self.sigma2, &mut rng)
    }

    /// Draw one instance and run every configured detector on it.
    pub fn run_trial(&self, point: usize, trial: u64) -> Result<Vec<TrialFlags>> {
        let inst = self.trial_instance(point, trial)?;
        self.config
            .detectors
            .iter()
            .map(|&kind| {
                let out = detect(kind, &inst.h, &inst.r, &self.constellation, self.config.enumeration_budget)?
                    .grade(&inst.x_true);
                Ok(TrialFlags {
                    detector: kind,
                    vector_error: out.vector_error,
                    symbol_errors: out.symbol_errors.iter().filter(|&&e| e).count(),
                    user1_error: out.symbol_errors[0],
                })
            })
            .collect()
    }

    fn run_range(&self, point: usize, start: u64, end: u64) -> Result<Vec<DetectorCounts>> {
        let k = self.config.detectors.len();
        (start..end)
            .into_par_iter()
            .map(|t| {
                let flags = self.run_trial(point, t)?;
                let mut counts = vec![DetectorCounts::default(); k];
                for (c, f) in counts.iter_mut().zip(&flags) {
                    c.add(f);
                }
                Ok(counts)
            })
            .try_reduce(
                || vec![DetectorCounts::default(); k],
                |a, b| Ok(a.into_iter().zip(b).map(|(x, y)| x.merge(y)).collect()),
            )
    }

    /// Run all trials for one grid point.
    pub fn run_point(&self, point: usize) -> Result<GridPoint> {
        let started = Instant::now();
        let (m, n) = self.dims(point);
        let total = self.config.trials;
        let k = self.config.detectors.len();

        let counts = match self.config.target_errors {
            None => self.run_range(point, 0, total)?,
            Some(target) => {
                let mut acc = vec![DetectorCounts::default(); k];
                let mut done = 0;
                while done < total {
                    let end = (done + CHUNK_TRIALS).min(total);
                    let chunk = self.run_range(point, done, end)?;
                    acc = acc.into_iter().zip(chunk).map(|(a, b)| a.merge(b)).collect();
                    done = end;
                    if acc.iter().all(|c| c.errors >= target) {
                        break;
                    }
                }
                acc
            }
        };

        let detectors = self
            .config
            .detectors
            .iter()
            .zip(counts)
            .map(|(&kind, c)| DetectorPoint::new(kind, c, n))
            .collect();
        Ok(GridPoint {
            m,
            n,
            detectors,
            theory: self.overlay(m, n)?,
            runtime_secs: started.elapsed().as_secs_f64(),
        })
    }

    fn overlay(&self, m: usize, n: usize) -> Result<TheoryOverlay> {
        let p = SystemParams::from_constellation(&self.constellation, self.sigma2)?.with_dims(m, n)?;
        let asymptotic = p.with_delta(self.config.users.delta())?;
        let zf = zf_sep_bounds(&p)?;
        Ok(TheoryOverlay {
            ml_lower: ml_lower_bound(&p)?,
            ml_union: ml_union_bound(&p)?,
            zf_lower: zf.vep_lower(),
            zf_upper: zf.vep_upper(),
            f_ml: antenna_efficiency_ml(&asymptotic),
            f_zf: antenna_efficiency_zf(&asymptotic),
        })
    }

    /// Run every grid point on the current rayon pool.
    pub fn sweep(&self) -> Result<VepCurve> {
        let points = (0..self.config.m_grid.len())
            .map(|p| self.run_point(p))
            .collect::<Result<_>>()?;
        Ok(VepCurve {
            name: self.config.name.clone(),
            sigma2: self.sigma2,
            points,
        })
    }
}

/// Validate and run a sweep, optionally on a dedicated pool of `threads`
/// workers. The output does not depend on `threads`.
pub fn sweep(config: &ExperimentConfig, threads: Option<usize>) -> Result<VepCurve> {
    let exp = config.validate()?;
    with_threads(threads, || exp.sweep())
}

/// Run `f` on a rayon pool of the given size (the global pool if `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        None => f(),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(f),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::{detect_ml_exhaustive, detect_ml_sphere, detect_zf};

    fn small(detectors: Vec<DetectorKind>) -> ExperimentConfig {
        ExperimentConfig::new(
            "t",
            ConstellationSpec::qam(4),
            detectors,
            UserRule::Fixed(2),
            0.0,
            vec![2, 4, 6],
        )
        .with_trials(500)
        .with_seed(99)
    }

    #[test]
    fn user_rules() {
        assert_eq!(UserRule::Ratio(1.0 / 3.0).users(12), 4);
        assert_eq!(UserRule::Ratio(0.125).users(20), 3);
        assert_eq!(UserRule::Fixed(5).users(100), 5);
        assert_eq!(UserRule::Fixed(5).delta(), 0.0);
    }

    #[test]
    fn validation_errors() {
        let base = small(vec![DetectorKind::Zf]);
        let mut c = base.clone();
        c.m_grid.clear();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = base.clone();
        c.m_grid = vec![4, 4];
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.m_grid = vec![1, 4];
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("m = 1"), "{err}");
        let mut c = base.clone();
        c.trials = 0;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.detectors = vec![DetectorKind::Zf, DetectorKind::Zf];
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.snr_db = f64::INFINITY;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.constellation = ConstellationSpec::psk(8);
        c.detectors = vec![DetectorKind::MlSphere];
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.users = UserRule::Ratio(0.1);
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("n = 0"), "{err}");
    }

    #[test]
    fn budget_checked_per_point() {
        let c = ExperimentConfig::new(
            "big",
            ConstellationSpec::qam(16),
            vec![DetectorKind::Zf, DetectorKind::MlSphere],
            UserRule::Ratio(1.0 / 3.0),
            0.0,
            vec![12, 15, 18],
        );
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("m = 18, n = 6"), "{err}");
        let mut ok = c.clone();
        ok.m_grid = vec![12, 15];
        assert!(ok.validate().is_ok());
    }

    #[test]
    fn trials_are_reproducible() {
        let exp = small(DetectorKind::ALL.to_vec()).validate().unwrap();
        for t in 0..20 {
            assert_eq!(exp.run_trial(1, t).unwrap(), exp.run_trial(1, t).unwrap());
        }
    }

    #[test]
    fn detectors_share_the_instance() {
        let exp = small(DetectorKind::ALL.to_vec()).validate().unwrap();
        let c = exp.constellation().clone();
        for t in 0..50 {
            let inst = exp.trial_instance(2, t).unwrap();
            let flags = exp.run_trial(2, t).unwrap();
            let direct = [
                detect_ml_exhaustive(&inst.h, &inst.r, &c, DEFAULT_ENUMERATION_BUDGET).unwrap(),
                detect_ml_sphere(&inst.h, &inst.r, &c).unwrap(),
                detect_zf(&inst.h, &inst.r, &c).unwrap(),
            ];
            for (f, d) in flags.iter().zip(direct) {
                let o = d.grade(&inst.x_true);
                assert_eq!(f.vector_error, o.vector_error);
                assert_eq!(f.user1_error, o.symbol_errors[0]);
            }
        }
    }

    #[test]
    fn near_noiseless_has_no_errors() {
        let c = ExperimentConfig::new(
            "quiet",
            ConstellationSpec::qam(16),
            DetectorKind::ALL.to_vec(),
            UserRule::Fixed(2),
            60.0,
            vec![8],
        )
        .with_trials(1000);
        let curve = sweep(&c, None).unwrap();
        for d in &curve.points[0].detectors {
            assert_eq!(d.counts.errors, 0, "{}", d.detector);
            assert_eq!(d.counts.trials, 1000);
        }
    }

    #[test]
    fn single_point_matches_manual_aggregation() {
        let mut c = small(vec![DetectorKind::Zf, DetectorKind::MlSphere]);
        c.m_grid = vec![3];
        c.trials = 300;
        let curve = sweep(&c, Some(2)).unwrap();
        let exp = c.validate().unwrap();
        let mut manual = [DetectorCounts::default(); 2];
        for t in 0..300 {
            for (acc, f) in manual.iter_mut().zip(exp.run_trial(0, t).unwrap()) {
                acc.add(&f);
            }
        }
        let got: Vec<_> = curve.points[0].detectors.iter().map(|d| d.counts).collect();
        assert_eq!(got, manual);
    }

    #[test]
    fn thread_count_does_not_matter() {
        let c = small(vec![DetectorKind::Zf, DetectorKind::MlSphere]).with_target_errors(Some(40));
        let a = sweep(&c, Some(1)).unwrap();
        let b = sweep(&c, Some(3)).unwrap();
        for (pa, pb) in a.points.iter().zip(&b.points) {
            assert_eq!(pa.detectors, pb.detectors);
        }
    }

    #[test]
    fn adaptive_stop_uses_whole_chunks() {
        let mut c = small(vec![DetectorKind::Zf]);
        c.trials = 10_000;
        c.target_errors = Some(10);
        c.snr_db = -5.0;
        let curve = sweep(&c, None).unwrap();
        for p in &curve.points {
            let counts = p.detectors[0].counts;
            assert!(counts.trials % CHUNK_TRIALS == 0 || counts.trials == 10_000);
            assert!(counts.errors >= 10 || counts.trials == 10_000);
        }
        assert_eq!(curve.points[0].detectors[0].counts.trials, CHUNK_TRIALS);
    }

    #[test]
    fn counting_identity_for_zf() {
        let mut c = small(vec![DetectorKind::Zf, DetectorKind::MlExhaustive]);
        c.snr_db = 3.0;
        let curve = sweep(&c, None).unwrap();
        for p in &curve.points {
            let zf = p.detector(DetectorKind::Zf).unwrap();
            assert!(zf.sep_all <= zf.estimate.vep + 1e-15);
            assert!(zf.estimate.vep <= p.n as f64 * zf.sep_all + 1e-15);
            let ml = p.detector(DetectorKind::MlExhaustive).unwrap();
            assert_eq!(ml.sep(), ml.sep_user1);
            assert_eq!(zf.sep(), zf.sep_all);
            assert!(ml.sep_user1 <= ml.estimate.vep);
        }
    }

    #[test]
    fn overlay_uses_limiting_ratio() {
        let c = ExperimentConfig::new(
            "o",
            ConstellationSpec::qam(16),
            vec![DetectorKind::Zf],
            UserRule::Ratio(1.0 / 3.0),
            0.0,
            vec![12],
        )
        .with_trials(10);
        let curve = sweep(&c, None).unwrap();
        let th = curve.points[0].theory;
        assert!((th.f_ml - 1.1f64.ln()).abs() < 1e-12);
        assert!((th.f_zf - 2.0 / 3.0 * 1.1f64.ln()).abs() < 1e-12);
        assert!(th.ml_lower <= th.ml_union);
    }

    #[test]
    fn ratio_accepts_fraction_strings() {
        let r: UserRule = serde_json::from_str(r#"{"ratio": "1/3"}"#).unwrap();
        assert_eq!(r, UserRule::Ratio(1.0 / 3.0));
        let r: UserRule = serde_json::from_str(r#"{"ratio": 0.25}"#).unwrap();
        assert_eq!(r, UserRule::Ratio(0.25));
        let r: UserRule = serde_json::from_str(r#"{"fixed": 4}"#).unwrap();
        assert_eq!(r, UserRule::Fixed(4));
        assert!(serde_json::from_str::<UserRule>(r#"{"ratio": "a/b"}"#).is_err());
    }
}
