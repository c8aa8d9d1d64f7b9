use std::io::Write;

use mimo_ae::config::{Campaign, CampaignFile};
use mimo_ae::montecarlo::sweep;
use mimo_ae::report::{read_results, results_to_string, RunManifest, CSV_COLUMNS};

const CONFIG: &str = r#"
master_seed = 99
trials = 3000
target_errors = 100

[[sweep]]
name = "zf-third"
constellation = { kind = "qam", M = 16 }
detectors = ["zf"]
users = { ratio = "1/3" }
snr_db = 6.0
m_grid = [3, 6, 9, 12]

[[sweep]]
name = "pair"
constellation = "qpsk"
detectors = ["ml-sphere", "ml-exhaustive", "zf"]
users = { fixed = 2 }
snr_db = 0.0
m_grid = [2, 4, 6]
"#;

fn run(campaign: &Campaign, threads: Option<usize>) -> String {
    let curves: Vec<_> = campaign.sweeps.iter().map(|s| sweep(s, threads).unwrap()).collect();
    results_to_string(&curves).unwrap()
}

fn write_temp(text: &str) -> std::path::PathBuf {
    let path = std::env::temp_dir().join(format!("mimo-ae-campaign-{}.cfg", std::process::id()));
    std::fs::File::create(&path).unwrap().write_all(text.as_bytes()).unwrap();
    path
}

#[test]
fn csv_is_identical_across_thread_counts() {
    let campaign = CampaignFile::parse(CONFIG).unwrap().resolve(None).unwrap();
    let one = run(&campaign, Some(1));
    assert_eq!(one, run(&campaign, Some(4)));
    assert_eq!(one, run(&campaign, Some(7)));
    let rows = read_results(one.as_bytes()).unwrap();
    assert_eq!(rows.len(), 4 + 3 * 3);
    assert!(one.starts_with(&CSV_COLUMNS.join(",")));
}

#[test]
fn exhaustive_and_sphere_agree_in_a_sweep() {
    let campaign = CampaignFile::parse(CONFIG).unwrap().resolve(None).unwrap();
    let rows = read_results(run(&campaign, None).as_bytes()).unwrap();
    let pair: Vec<_> = rows.iter().filter(|r| r.sweep == "pair").collect();
    for chunk in pair.chunks(3) {
        assert_eq!(chunk[0].errors, chunk[1].errors, "m = {}", chunk[0].m);
        assert_eq!(chunk[0].trials, chunk[1].trials);
    }
}

#[test]
fn manifest_echo_reproduces_the_run() {
    let campaign = CampaignFile::parse(CONFIG).unwrap().resolve(None).unwrap();
    let csv = run(&campaign, Some(2));
    let curves: Vec<_> = campaign.sweeps.iter().map(|s| sweep(s, None).unwrap()).collect();
    let manifest = RunManifest::new(campaign.echo(), campaign.master_seed, None, &curves, Default::default(), 0.0);
    let json = serde_json::to_string(&manifest).unwrap();
    let again = CampaignFile::parse(&json).unwrap().resolve(None).unwrap();
    assert_eq!(again, campaign);
    assert_eq!(run(&again, Some(3)), csv);
}

#[test]
fn seed_override_changes_results() {
    let file = CampaignFile::parse(CONFIG).unwrap();
    let a = run(&file.resolve(None).unwrap(), None);
    let b = run(&file.resolve(Some(100)).unwrap(), None);
    assert_ne!(a, b);
}

#[test]
fn invalid_grid_names_the_sweep_line() {
    let bad = CONFIG.replace("m_grid = [2, 4, 6]", "m_grid = [1, 4, 6]");
    let path = write_temp(&bad);
    let msg = Campaign::load(&path, None).unwrap_err().to_string();
    std::fs::remove_file(&path).ok();
    assert!(msg.contains(":15:"), "{msg}");
    assert!(msg.contains("m = 1"), "{msg}");
}
