use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use proxsaf::experiments::write_wav;

fn proxsaf(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_proxsaf"))
        .args(args)
        .current_dir(dir)
        .env_remove("PROXSAF_LOG")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn data_rows(csv: &str) -> Vec<&str> {
    csv.lines().skip(2).collect()
}

const WHITE_NSAF: &str = r#"
[algorithm]
name = "nsaf"
step_size = 0.5

[filterbank]
subbands = 4

[channel]
length = 16
sparsity = 3

[input]
kind = "white"

[run]
trials = 10
samples = 2000
steady_state_window = 100
"#;

#[test]
fn simulate_writes_one_row_per_iteration() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "white.toml", WHITE_NSAF);
    let out = proxsaf(
        &[
            "simulate",
            "--config",
            "white.toml",
            "--out",
            "o",
            "--seed",
            "5",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let csv = fs::read_to_string(dir.path().join("o/msd_nsaf.csv")).unwrap();
    let mut lines = csv.lines();
    let hash_line = lines.next().unwrap();
    assert!(hash_line.starts_with("# config_hash="));
    assert_eq!(lines.next(), Some("k,msd_db"));
    assert_eq!(data_rows(&csv).len(), 2000 / 4);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(
        format!(
            "# config_hash={}",
            manifest["config_hash"].as_str().unwrap()
        ),
        hash_line
    );
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["status"], "ok");
    assert_eq!(manifest["divergence_counts"]["nsaf"], 0);
    let summary = String::from_utf8_lossy(&out.stdout);
    assert!(summary.contains("steady-state MSD"));
    assert!(summary.contains("iterations to -20 dB"));
}

#[test]
fn fixed_seed_gives_identical_bytes_and_snapshot_reruns() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "white.toml", WHITE_NSAF);
    for out_dir in ["a", "b"] {
        let out = proxsaf(
            &[
                "simulate",
                "--config",
                "white.toml",
                "--out",
                out_dir,
                "--workers",
                "2",
            ],
            dir.path(),
        );
        assert!(out.status.success());
    }
    let a = fs::read(dir.path().join("a/msd_nsaf.csv")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b/msd_nsaf.csv")).unwrap());

    // The normalized snapshot alone reproduces the run.
    let out = proxsaf(
        &["simulate", "--config", "a/config.toml", "--out", "c"],
        dir.path(),
    );
    assert!(out.status.success());
    let c = fs::read_to_string(dir.path().join("c/msd_nsaf.csv")).unwrap();
    assert_eq!(data_rows(&c), data_rows(std::str::from_utf8(&a).unwrap()));

    let other = proxsaf(
        &[
            "simulate",
            "--config",
            "white.toml",
            "--out",
            "d",
            "--seed",
            "9",
        ],
        dir.path(),
    );
    assert!(other.status.success());
    assert_ne!(a, fs::read(dir.path().join("d/msd_nsaf.csv")).unwrap());
}

#[test]
fn two_algorithms_give_two_csvs() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "two.toml",
        r#"
[[algorithm]]
name = "pnsaf"
[[algorithm]]
name = "pfbs_pnsaf"
beta = 1e-4
[filterbank]
subbands = 2
[channel]
length = 16
[run]
trials = 3
samples = 1000
steady_state_window = 50
"#,
    );
    let out = proxsaf(
        &[
            "simulate", "--config", "two.toml", "--out", "o", "--trials", "2",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in ["msd_pnsaf.csv", "msd_pfbs_pnsaf.csv"] {
        let csv = fs::read_to_string(dir.path().join("o").join(name)).unwrap();
        assert_eq!(data_rows(&csv).len(), 500);
    }
    let summary = fs::read_to_string(dir.path().join("o/summary.txt")).unwrap();
    assert!(summary.contains("[pnsaf] simulate: 2 trials"));
    assert!(summary.contains("[pfbs_pnsaf] simulate: 2 trials"));
}

const THEORY: &str = r#"
[[algorithm]]
name = "pnsaf"
step_size = 0.25
[[algorithm]]
name = "pfbs_pnsaf"
label = "zero_beta"
step_size = 0.25
beta = 0.0
[filterbank]
subbands = 4
[channel]
length = 16
sparsity = 2
[run]
trials = 20
samples = 4000
steady_state_window = 100
stats_frames = 5000
theory_iterations = 300
preroll = true
"#;

#[test]
fn theory_curve_shape_bounds_and_reduction() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "theory.toml", THEORY);
    let out = proxsaf(
        &["theory", "--config", "theory.toml", "--out", "o"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let pn = fs::read_to_string(dir.path().join("o/theory_pnsaf.csv")).unwrap();
    let zero = fs::read_to_string(dir.path().join("o/theory_zero_beta.csv")).unwrap();
    assert_eq!(pn.lines().nth(1), Some("k,msd_db,emse_db"));
    assert_eq!(data_rows(&pn).len(), 300);
    assert_eq!(data_rows(&pn), data_rows(&zero));

    let summary = String::from_utf8_lossy(&out.stdout);
    let value = |key: &str| -> f64 {
        let start = summary.find(key).unwrap() + key.len();
        summary[start..]
            .split(|c: char| c == ',' || c.is_whitespace())
            .next()
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!((value("mu_ms_max = ") - 2.0).abs() < 0.01);
    assert!((value("mu_practical = ") - 1.0).abs() < 0.01);
}

#[test]
fn compare_merges_simulation_and_theory() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "theory.toml", THEORY);
    let out = proxsaf(
        &["compare", "--config", "theory.toml", "--out", "o"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(dir.path().join("o/compare_pnsaf.csv")).unwrap();
    assert_eq!(csv.lines().nth(1), Some("k,sim_msd_db,theory_msd_db"));
    assert_eq!(data_rows(&csv).len(), 1000);
    let summary = fs::read_to_string(dir.path().join("o/summary.txt")).unwrap();
    assert!(summary.contains("max |simulation - theory| for k >= 10"));
}

#[test]
fn theory_rejects_auto_beta() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "auto.toml",
        "algorithm = \"auto_pfbs_pnsaf\"\n[filterbank]\nsubbands = 2\n[channel]\nlength = 8\n",
    );
    let out = proxsaf(
        &["theory", "--config", "auto.toml", "--out", "o"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no theory model"));
}

fn aec_config(dir: &Path, wav: &str) {
    let ir: String = (0..32)
        .map(|n| {
            let v = if (4..12).contains(&n) {
                (-(n as f64) / 3.0).exp()
            } else {
                0.0
            };
            format!("{v}\n")
        })
        .collect();
    write(dir, "ir.txt", &ir);
    write(
        dir,
        "aec.toml",
        &format!(
            r#"
[[algorithm]]
name = "auto_pfbs_pnsaf"
[[algorithm]]
name = "nsaf"
[filterbank]
subbands = 4
[channel]
kind = "file"
path = "ir.txt"
change_at_sample = 6000
[input]
kind = "wav"
path = "{wav}"
[run]
trials = 1
steady_state_window = 100
"#
        ),
    );
}

#[test]
fn aec_reports_erle_and_reconvergence() {
    let dir = tempfile::tempdir().unwrap();
    let mut x = 0.0f64;
    let mut state = 12345u64;
    let speech: Vec<f64> = (0..12_000)
        .map(|_| {
            // xorshift drive through a one-pole lowpass
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            let drive = (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            x = 0.9 * x + drive;
            0.4 * x
        })
        .collect();
    write_wav(dir.path().join("in.wav"), &speech, 8000).unwrap();
    aec_config(dir.path(), "in.wav");
    let out = proxsaf(&["aec", "--config", "aec.toml", "--out", "o"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(dir.path().join("o/erle_nsaf.csv")).unwrap();
    assert_eq!(csv.lines().nth(1), Some("n,erle_db"));
    assert_eq!(data_rows(&csv).len(), 12_000);
    let summary = fs::read_to_string(dir.path().join("o/summary.txt")).unwrap();
    assert!(summary.contains("mean ERLE over the final 20% of samples"));
    assert!(summary.contains("change at 6000"), "{summary}");
}

#[test]
fn aec_rejects_empty_recording() {
    let dir = tempfile::tempdir().unwrap();
    write_wav(dir.path().join("empty.wav"), &[], 8000).unwrap();
    aec_config(dir.path(), "empty.wav");
    let out = proxsaf(&["aec", "--config", "aec.toml", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("o/manifest.json").exists());
}

#[test]
fn config_errors_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "bad.toml",
        "[algorithm]\nname = \"nsaf\"\nstep_size = -1.0\n[filterbank]\nsubbands = 4\n[channel]\nlength = 128\n",
    );
    let out = proxsaf(&["simulate", "--config", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("algorithm.step_size"));
}

#[test]
fn divergence_gives_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "div.toml",
        "algorithm = { name = \"nsaf\", step_size = 3.5 }\n[filterbank]\nsubbands = 4\n[channel]\nlength = 16\n\
         [run]\ntrials = 2\nsamples = 2000\nsteady_state_window = 100\n",
    );
    let out = proxsaf(
        &["simulate", "--config", "div.toml", "--out", "o"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let manifest = fs::read_to_string(dir.path().join("o/manifest.json")).unwrap();
    assert!(manifest.contains("\"status\": \"diverged\""));
}

#[test]
fn log_level_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "white.toml", WHITE_NSAF);
    let out = Command::new(env!("CARGO_BIN_EXE_proxsaf"))
        .args([
            "simulate",
            "--config",
            "white.toml",
            "--out",
            "o",
            "--trials",
            "1",
        ])
        .current_dir(dir.path())
        .env("PROXSAF_LOG", "info")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("simulate nsaf"));
    let quiet = proxsaf(
        &[
            "simulate",
            "--config",
            "white.toml",
            "--out",
            "q",
            "--trials",
            "1",
        ],
        dir.path(),
    );
    assert!(quiet.stderr.is_empty());
}
