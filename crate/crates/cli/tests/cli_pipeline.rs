use std::fs;
use std::path::Path;
use std::process::Command;

const TINY: &str = r#"
seed = 5

[suite]
functions = [1, 3]
instances = [1, 2]
dim = 2

[portfolio]
file = "portfolio.txt"
budget = 60
runs = 1

[features]
n_samples = 60
reps = 2
subset = "selected"

[forest]
n_trees = 10

[cv]
k = 2
replications = 2
"#;

fn setup(dir: &Path) -> std::path::PathBuf {
    fs::write(dir.join("portfolio.txt"), "# two variants\n00000000000\n01000000001\n").unwrap();
    let cfg = dir.join("tiny.toml");
    fs::write(&cfg, TINY).unwrap();
    cfg
}

fn elasel(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_elasel")).args(args).output().unwrap()
}

fn run_all(cfg: &Path, out: &Path, jobs: &str) {
    for cmd in ["run-portfolio", "extract-features", "train-eval", "tune-threshold", "report-figures"] {
        let o = elasel(&[cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--jobs", jobs]);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

fn data_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with('#')).map(str::to_string).collect()
}

#[test]
fn pipeline_outputs_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run_all(&cfg, &a, "1");
    run_all(&cfg, &b, "3");

    // 2 functions x 2 instances x 2 configs x 1 run
    assert_eq!(data_lines(&a.join("performance_runs.csv")).len(), 1 + 8);
    let features = data_lines(&a.join("features.csv"));
    assert_eq!(features.len(), 1 + 4);
    assert_eq!(features[0].split(',').count(), 5 + 9);
    assert!(features[1].split(',').nth(3) == Some("60"));

    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("report.json")).unwrap()).unwrap();
    let vbs = report["result"]["selectors"].as_array().unwrap().iter().find(|s| s["name"] == "vbs").unwrap();
    assert_eq!(vbs["rmse"], 0.0);
    assert_eq!(report["seed"], 5);

    let wins: usize = data_lines(&a.join("fig2_winners.csv")).iter().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(wins, 4);
    let fig5 = data_lines(&a.join("fig5_quality.csv"));
    assert_eq!(fig5.len(), 1 + 2 + report["result"]["selectors"].as_array().unwrap().len());
    for l in data_lines(&a.join("fig3_features.csv")).iter().skip(1) {
        let v: f64 = l.rsplit(',').next().unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&v));
    }

    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 11);
    for name in names {
        let (x, y) = (fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap());
        assert!(x == y, "{name:?} differs between --jobs 1 and --jobs 3");
        let text = String::from_utf8(x).unwrap();
        assert!(text.contains("config_hash"), "{name:?} lacks the config hash");
    }
}

#[test]
fn seed_flag_overrides_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path());
    let out = dir.path().join("o");
    let o = elasel(&["run-portfolio", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "99"]);
    assert!(o.status.success());
    let text = fs::read_to_string(out.join("performance_runs.csv")).unwrap();
    assert!(text.contains("# seed=99"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path());
    let out = dir.path().join("o");
    let cfg_s = cfg.to_str().unwrap();
    let out_s = out.to_str().unwrap();

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[suite]\nfunctions = [4]\n").unwrap();
    assert_eq!(elasel(&["run-portfolio", "--config", bad.to_str().unwrap(), "--out", out_s]).status.code(), Some(2));
    fs::write(&bad, "[suite]\nbogus = 1\n").unwrap();
    assert_eq!(elasel(&["run-portfolio", "--config", bad.to_str().unwrap(), "--out", out_s]).status.code(), Some(2));
    // inputs missing: train-eval before anything ran
    assert_eq!(elasel(&["train-eval", "--config", cfg_s, "--out", out_s]).status.code(), Some(2));
    assert_eq!(elasel(&["run-portfolio", "--config", "/nonexistent.toml", "--out", out_s]).status.code(), Some(2));
    assert_eq!(elasel(&["no-such-command"]).status.code(), Some(2));

    // an output path under a regular file is a runtime failure
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let nested = blocker.join("out");
    let code = elasel(&["run-portfolio", "--config", cfg_s, "--out", nested.to_str().unwrap()]).status.code();
    assert_eq!(code, Some(1));
}

#[test]
fn auto_selected_portfolio() {
    let dir = tempfile::tempdir().unwrap();
    setup(dir.path());
    let cfg = dir.path().join("auto.toml");
    let text = TINY.replace("file = \"portfolio.txt\"", "file = \"auto-select\"\nsize = 2\ncandidates = 6\nfilter = \"?0?00000000\"");
    fs::write(&cfg, text).unwrap();
    let out = dir.path().join("o");
    let (c, o) = (cfg.to_str().unwrap(), out.to_str().unwrap());
    assert_eq!(elasel(&["run-portfolio", "--config", c, "--out", o]).status.code(), Some(2));
    assert!(elasel(&["select-portfolio", "--config", c, "--out", o]).status.success());
    let chosen: Vec<String> = data_lines(&out.join("portfolio.txt"));
    assert!((1..=2).contains(&chosen.len()));
    // 4 candidates match the filter, all run on 4 problems
    assert_eq!(data_lines(&out.join("candidate_runs.csv")).len(), 1 + 16);
    assert!(elasel(&["run-portfolio", "--config", c, "--out", o]).status.success());
    assert_eq!(data_lines(&out.join("performance_runs.csv")).len(), 1 + 4 * chosen.len());
}
