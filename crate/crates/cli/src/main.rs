use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use mimo_ae::channel::sigma2_from_snr;
use mimo_ae::config::Campaign;
use mimo_ae::constellation::ConstellationSpec;
use mimo_ae::montecarlo::{sweep, DEFAULT_MIN_ERRORS};
use mimo_ae::report::{fit_results, read_results, write_results, RunManifest};
use mimo_ae::theory::{self, Lemma1, LogProb, SystemParams};
use mimo_ae::Error;

#[derive(Parser)]
#[command(name = "mimo-ae", version, about = "Antenna efficiency of ML and ZF detection in multi-user MIMO")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every sweep of a campaign file and write results CSV plus manifest.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Results CSV; the manifest goes next to it as `<stem>.manifest.json`.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the master seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (results do not depend on it).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Evaluate the closed-form expressions for one operating point.
    Theory {
        /// e.g. bpsk, qpsk, 16qam, 8psk
        #[arg(long)]
        constellation: ConstellationSpec,
        #[arg(long, allow_negative_numbers = true)]
        snr_db: f64,
        /// Users-to-antennas ratio, as a number or `p/q`.
        #[arg(long, value_parser = parse_ratio)]
        delta: Option<f64>,
        #[arg(long, requires = "n")]
        m: Option<usize>,
        #[arg(long, requires = "m")]
        n: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Fit antenna efficiency slopes to a results CSV.
    Fit {
        csv: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MIN_ERRORS)]
        min_errors: u64,
    },
}

fn parse_ratio(s: &str) -> Result<f64, String> {
    let v = match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|e| format!("{e}"))?;
            let q: f64 = q.trim().parse().map_err(|e| format!("{e}"))?;
            p / q
        }
        None => s.trim().parse().map_err(|e| format!("{e}"))?,
    };
    if !(0.0..=1.0).contains(&v) {
        return Err(format!("ratio must lie in [0, 1], got {v}"));
    }
    Ok(v)
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    fn input(e: Error) -> Self {
        Failure::Config(e.to_string())
    }

    fn runtime(e: impl std::fmt::Display) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep { config, out, seed, threads } => cmd_sweep(&config, &out, seed, threads),
        Command::Theory { constellation, snr_db, delta, m, n, json } => {
            cmd_theory(&constellation, snr_db, delta, m.zip(n), json)
        }
        Command::Fit { csv, min_errors } => cmd_fit(&csv, min_errors),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn manifest_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map_or_else(|| "results".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}.manifest.json"))
}

fn cmd_sweep(config: &Path, out: &Path, seed: Option<u64>, threads: Option<usize>) -> Result<(), Failure> {
    if threads == Some(0) {
        return Err(Failure::Config("--threads must be at least 1".into()));
    }
    let campaign = Campaign::load(config, seed).map_err(Failure::input)?;
    let start = Instant::now();
    let mut curves = Vec::with_capacity(campaign.sweeps.len());
    let mut seeds = BTreeMap::new();
    for s in &campaign.sweeps {
        eprintln!("sweep {}: m = {:?}", s.name, s.m_grid);
        let curve = sweep(s, threads).map_err(Failure::runtime)?;
        seeds.insert(s.name.clone(), s.master_seed);
        curves.push(curve);
    }
    let elapsed = start.elapsed().as_secs_f64();

    let file = File::create(out).map_err(|e| Failure::runtime(format!("{}: {e}", out.display())))?;
    write_results(BufWriter::new(file), &curves).map_err(Failure::runtime)?;

    let manifest = RunManifest::new(campaign.echo(), campaign.master_seed, threads, &curves, seeds, elapsed);
    let mpath = manifest_path(out);
    let file = File::create(&mpath).map_err(|e| Failure::runtime(format!("{}: {e}", mpath.display())))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &manifest).map_err(Failure::runtime)?;
    eprintln!("wrote {} and {} in {elapsed:.1} s", out.display(), mpath.display());
    Ok(())
}

fn prob_json(p: LogProb) -> serde_json::Value {
    serde_json::json!({ "value": p.value(), "ln": p.ln() })
}

fn cmd_theory(
    spec: &ConstellationSpec,
    snr_db: f64,
    delta: Option<f64>,
    dims: Option<(usize, usize)>,
    json: bool,
) -> Result<(), Failure> {
    if !snr_db.is_finite() {
        return Err(Failure::Config("--snr-db must be finite".into()));
    }
    let c = spec.build().map_err(Failure::input)?;
    let sigma2 = sigma2_from_snr(snr_db, &c, 1);
    let mut p = SystemParams::from_constellation(&c, sigma2).map_err(Failure::input)?;
    if let Some((m, n)) = dims {
        p = p.with_dims(m, n).map_err(Failure::input)?;
    }
    if let Some(d) = delta {
        p = p.with_delta(d).map_err(Failure::input)?;
    }
    let f_ml = theory::antenna_efficiency_ml(&p);
    let f_zf = theory::antenna_efficiency_zf(&p);
    let bounds = match dims {
        Some(_) => Some((
            theory::ml_lower_bound(&p).map_err(Failure::input)?,
            theory::ml_union_bound(&p).map_err(Failure::input)?,
            theory::lemma1_bound(&p).map_err(Failure::input)?,
            theory::zf_sep_bounds(&p).map_err(Failure::input)?,
        )),
        None => None,
    };

    if json {
        let mut doc = serde_json::json!({
            "constellation": spec.to_string(),
            "snr_db": snr_db,
            "sigma2": p.sigma2,
            "d_min": p.d_min,
            "rho": p.rho(),
            "delta": p.delta,
            "f_ml": f_ml,
            "f_ml_db_per_antenna": theory::db_per_antenna(f_ml),
            "f_zf": f_zf,
            "f_zf_db_per_antenna": theory::db_per_antenna(f_zf),
            "lemma1_threshold": theory::lemma1_threshold(p.rho(), p.order),
        });
        if let Some((lower, union, l1, zf)) = bounds {
            let extra = serde_json::json!({
                "m": p.m,
                "n": p.n,
                "ml_lower_bound": prob_json(lower),
                "ml_union_bound": prob_json(union),
                "lemma1_bound": l1.bound().map(prob_json),
                "zf_sep_lower": prob_json(zf.sep_lower),
                "zf_sep_upper": prob_json(zf.sep_upper),
                "zf_vep_lower": prob_json(zf.vep_lower()),
                "zf_vep_upper": prob_json(zf.vep_upper()),
            });
            doc.as_object_mut()
                .expect("object")
                .extend(extra.as_object().expect("object").clone());
        }
        println!("{}", serde_json::to_string_pretty(&doc).map_err(Failure::runtime)?);
        return Ok(());
    }

    let row = |k: &str, v: String| println!("{k:<22}{v}");
    let prob = |p: LogProb| format!("{:e}  (ln {})", p.value(), p.ln());
    row("constellation", spec.to_string());
    row("snr_db", snr_db.to_string());
    row("sigma2", p.sigma2.to_string());
    row("d_min", p.d_min.to_string());
    row("rho", p.rho().to_string());
    row("delta", p.delta.to_string());
    row("f_ml", format!("{f_ml} nats  {} dB/antenna", theory::db_per_antenna(f_ml)));
    row("f_zf", format!("{f_zf} nats  {} dB/antenna", theory::db_per_antenna(f_zf)));
    if let Some((lower, union, l1, zf)) = bounds {
        row("m, n", format!("{}, {}", p.m, p.n));
        row("ml_lower_bound", prob(lower));
        row("ml_union_bound", prob(union));
        row("lemma1_threshold", l1.threshold().to_string());
        match l1 {
            Lemma1::Applicable { bound, .. } => row("lemma1_bound", prob(bound)),
            Lemma1::NotApplicable { .. } => row("lemma1_bound", "n/a (n below threshold)".into()),
        }
        row("zf_sep_lower", prob(zf.sep_lower));
        row("zf_sep_upper", prob(zf.sep_upper));
        row("zf_vep_lower", prob(zf.vep_lower()));
        row("zf_vep_upper", prob(zf.vep_upper()));
    } else {
        row("lemma1_threshold", theory::lemma1_threshold(p.rho(), p.order).to_string());
    }
    Ok(())
}

fn cmd_fit(csv: &Path, min_errors: u64) -> Result<(), Failure> {
    let file = File::open(csv).map_err(|e| Failure::runtime(format!("{}: {e}", csv.display())))?;
    let rows = read_results(file).map_err(|e| Failure::runtime(format!("{}: {e}", csv.display())))?;
    if rows.is_empty() {
        return Err(Failure::Runtime(format!("{}: insufficient data: no rows", csv.display())));
    }
    let mut failed = Vec::new();
    println!("sweep,detector,f_hat,stderr,f_theory,ratio,points_used,r_squared");
    for (sweep, detector, report) in fit_results(&rows, min_errors) {
        match report {
            Ok(r) => println!(
                "{sweep},{detector},{},{},{},{},{},{}",
                r.fit.f_hat,
                r.fit.stderr,
                r.f_theory,
                r.ratio(),
                r.fit.points_used.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "),
                r.fit.r_squared,
            ),
            Err(e) => failed.push(e.to_string()),
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Runtime(failed.join("\n")))
    }
}
