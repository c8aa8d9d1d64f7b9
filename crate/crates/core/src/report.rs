//! Results CSV and run manifest.
//!
//! The CSV has a fixed header and column order, LF line endings, `.` as the
//! decimal separator and one row per (sweep, grid point, detector).
//! Probabilities are written in scientific notation with 10 significant
//! digits; theory bounds are additionally written as natural logs so that
//! values below the `f64` range survive.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::config::CampaignFile;
use crate::detect::DetectorKind;
use crate::montecarlo::{fit_points, SlopeFit, SlopePoint, VepCurve};
use crate::{Error, Result};

pub const CSV_COLUMNS: [&str; 20] = [
    "sweep",
    "m",
    "n",
    "detector",
    "trials",
    "errors",
    "vep",
    "ci_low",
    "ci_high",
    "sep",
    "theory_ml_lower",
    "theory_ml_union",
    "theory_zf_lower",
    "theory_zf_upper",
    "f_ml_ref",
    "f_zf_ref",
    "ln_ml_lower",
    "ln_ml_union",
    "ln_zf_lower",
    "ln_zf_upper",
];

fn prob(x: f64) -> String {
    format!("{x:.9e}")
}

fn real(x: f64) -> String {
    format!("{x:.12e}")
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

/// Write every curve to `w` in CSV form.
pub fn write_results<W: Write>(w: W, curves: &[VepCurve]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(CSV_COLUMNS)?;
    for curve in curves {
        for pt in &curve.points {
            let th = &pt.theory;
            for d in &pt.detectors {
                out.write_record([
                    curve.name.clone(),
                    pt.m.to_string(),
                    pt.n.to_string(),
                    d.detector.name().to_string(),
                    d.counts.trials.to_string(),
                    d.counts.errors.to_string(),
                    prob(d.estimate.vep),
                    prob(d.estimate.ci_low),
                    prob(d.estimate.ci_high),
                    prob(d.sep()),
                    prob(th.ml_lower.clamped()),
                    prob(th.ml_union.clamped()),
                    prob(th.zf_lower.clamped()),
                    prob(th.zf_upper.clamped()),
                    real(th.f_ml),
                    real(th.f_zf),
                    real(th.ml_lower.ln()),
                    real(th.ml_union.ln()),
                    real(th.zf_lower.ln()),
                    real(th.zf_upper.ln()),
                ])?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn results_to_string(curves: &[VepCurve]) -> Result<String> {
    let mut buf = Vec::new();
    write_results(&mut buf, curves)?;
    Ok(String::from_utf8(buf).expect("CSV output is ASCII"))
}

/// One parsed CSV row (the log-domain columns are optional on input).
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ResultRow {
    pub sweep: String,
    pub m: usize,
    pub n: usize,
    pub detector: DetectorKind,
    pub trials: u64,
    pub errors: u64,
    pub vep: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub sep: f64,
    pub theory_ml_lower: f64,
    pub theory_ml_union: f64,
    pub theory_zf_lower: f64,
    pub theory_zf_upper: f64,
    pub f_ml_ref: f64,
    pub f_zf_ref: f64,
}

pub fn read_results<R: Read>(r: R) -> Result<Vec<ResultRow>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

/// Slope fit for one (sweep, detector) curve next to its theoretical value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub sweep: String,
    pub detector: DetectorKind,
    pub f_theory: f64,
    pub fit: SlopeFit,
}

impl FitReport {
    pub fn ratio(&self) -> f64 {
        self.fit.f_hat / self.f_theory
    }
}

/// Group rows by (sweep, detector) in order of first appearance and fit
/// each group over points with at least `min_errors` errors.
pub fn fit_results(rows: &[ResultRow], min_errors: u64) -> Vec<(String, DetectorKind, Result<FitReport>)> {
    let mut order: Vec<(String, DetectorKind)> = Vec::new();
    let mut groups: BTreeMap<(String, DetectorKind), Vec<&ResultRow>> = BTreeMap::new();
    for row in rows {
        let key = (row.sweep.clone(), row.detector);
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(row);
    }
    order
        .into_iter()
        .map(|key| {
            let group = &groups[&key];
            let points: Vec<SlopePoint> = group
                .iter()
                .filter(|r| r.errors >= min_errors.max(1))
                .map(|r| SlopePoint {
                    m: r.m,
                    vep: r.vep,
                    weight: r.errors as f64,
                })
                .collect();
            let f_theory = if key.1.is_ml() { group[0].f_ml_ref } else { group[0].f_zf_ref };
            let report = fit_points(&points)
                .map_err(|e| match e {
                    Error::InsufficientData(msg) => Error::InsufficientData(format!(
                        "{} / {}: {msg} with >= {} errors",
                        key.0,
                        key.1,
                        min_errors.max(1)
                    )),
                    other => other,
                })
                .map(|fit| FitReport {
                    sweep: key.0.clone(),
                    detector: key.1,
                    f_theory,
                    fit,
                });
            (key.0, key.1, report)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointRuntime {
    pub sweep: String,
    pub m: usize,
    pub n: usize,
    pub seconds: f64,
}

/// Everything needed to reproduce a run, plus timing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub toolkit_version: String,
    pub master_seed: u64,
    /// Per-sweep seeds derived from `master_seed`.
    pub sweep_seeds: BTreeMap<String, u64>,
    pub threads: Option<usize>,
    pub wall_clock_secs: f64,
    pub point_runtimes: Vec<PointRuntime>,
    /// Fully resolved configuration; loadable as a config file.
    pub config: CampaignFile,
}

impl RunManifest {
    pub fn new(config: CampaignFile, master_seed: u64, threads: Option<usize>, curves: &[VepCurve], seeds: BTreeMap<String, u64>, wall_clock_secs: f64) -> Self {
        Self {
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed,
            sweep_seeds: seeds,
            threads,
            wall_clock_secs,
            point_runtimes: curves
                .iter()
                .flat_map(|c| {
                    c.points.iter().map(|p| PointRuntime {
                        sweep: c.name.clone(),
                        m: p.m,
                        n: p.n,
                        seconds: p.runtime_secs,
                    })
                })
                .collect(),
            config,
        }
    }
}
