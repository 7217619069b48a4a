use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn mixslim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixslim")).args(args).output().unwrap()
}

fn karate() -> (String, String) {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data");
    (
        data.join("karate.txt").display().to_string(),
        data.join("karate_labels.txt").display().to_string(),
    )
}

fn path(p: &Path) -> String {
    p.display().to_string()
}

#[test]
fn detect_then_evaluate_karate() {
    let dir = tempfile::tempdir().unwrap();
    let (net, labels) = karate();
    let est = dir.path().join("pi.csv");
    let out = mixslim(&["detect", &net, "--k", "2", "--out", &path(&est)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&est).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 34);
    assert!(text.contains("# eigengap = "));
    let out = mixslim(&["evaluate", &path(&est), &labels]);
    let report = String::from_utf8(out.stdout).unwrap();
    assert!(report.contains("hard_errors = 1/34"), "{report}");
}

#[test]
fn two_cliques_split_and_single_community() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("cliques.txt");
    let mut lines = String::new();
    for block in [0, 6] {
        for i in 1..=6 {
            for j in i + 1..=6 {
                lines.push_str(&format!("{} {}\n", block + i, block + j));
            }
        }
    }
    lines.push_str("6 7\n");
    fs::write(&net, lines).unwrap();
    let out = mixslim(&["detect", &path(&net), "--k", "2"]);
    assert!(out.status.success());
    let rows: Vec<Vec<f64>> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    let hard: Vec<usize> = rows.iter().map(|r| usize::from(r[1] > r[0])).collect();
    assert!(hard[..6].iter().all(|&h| h == hard[0]));
    assert!(hard[6..].iter().all(|&h| h != hard[0]));

    let out = mixslim(&["detect", &path(&net), "--k", "1"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().filter(|l| !l.starts_with('#')).all(|l| l == "1"));
}

#[test]
fn exit_codes() {
    let (net, _) = karate();
    assert_eq!(mixslim(&["detect", "/definitely/missing", "--k", "2"]).status.code(), Some(2));
    assert_eq!(mixslim(&["detect", &net, "--k", "40"]).status.code(), Some(2));
    assert_eq!(mixslim(&["detect", &net, "--k", "2", "--gamma", "-1"]).status.code(), Some(2));
    assert_eq!(mixslim(&["frobnicate"]).status.code(), Some(2));

    // alpha rounds to exactly 1, so the walk system is singular
    let out = mixslim(&["detect", &net, "--k", "2", "--gamma", "1e-20"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn simulate_writes_pairs_and_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |dir: &Path| -> Vec<String> {
        ["simulate", "--sub", "a", "--n", "100", "--grid", "40,160", "--reps", "2", "--seed", "5", "--out"]
            .iter()
            .map(|s| s.to_string())
            .chain([path(dir)])
            .collect()
    };
    let run = |dir: &Path| {
        let v = args(dir);
        let refs: Vec<&str> = v.iter().map(String::as_str).collect();
        assert!(mixslim(&refs).status.success());
    };
    run(a.path());
    run(b.path());
    let names = |dir: &Path| -> Vec<PathBuf> {
        let mut v: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        v.sort();
        v
    };
    let files = names(a.path());
    assert_eq!(files.iter().filter(|p| p.extension().unwrap() == "edges").count(), 4);
    assert_eq!(files.iter().filter(|p| p.to_string_lossy().ends_with("_pi.csv")).count(), 4);
    for (x, y) in files.iter().zip(names(b.path())) {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
    }
}

#[test]
fn experiment_csv_rows_and_determinism() {
    let args = ["experiment", "--sub", "c", "--n", "60", "--reps", "1", "--seed", "2", "--no-timing", "--restarts", "2"];
    let first = mixslim(&args);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let text = String::from_utf8(first.stdout.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "sweep_value,mean_error,std_error,mean_eigengap,flagged_row_rate,wall_time_ms");
    assert_eq!(lines.len(), 12);
    assert!(lines[1].starts_with("0,"));
    assert!(lines[11].starts_with("0.2,"));
    assert_eq!(mixslim(&args).stdout, first.stdout);
}

#[test]
fn sweeps_on_a_network() {
    let (net, labels) = karate();
    let out = mixslim(&["sweep-tau", "--network", &net, "--truth", &labels, "--k", "2", "--no-timing"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 22);

    let out = mixslim(&["sweep-t", "--network", &net, "--truth", &labels, "--k", "2", "--no-timing"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 21);
    assert!(text.lines().nth(20).unwrap().starts_with("20,"));

    // c = 0 reproduces the unregularized fit
    let dir = tempfile::tempdir().unwrap();
    let est = dir.path().join("plain.csv");
    mixslim(&["detect", &net, "--k", "2", "--tau-rule", "zero", "--out", &path(&est)]);
    let report = String::from_utf8(mixslim(&["evaluate", &path(&est), &labels]).stdout).unwrap();
    let plain = report.lines().next().unwrap().trim_start_matches("mixed_hamming = ").to_string();
    let sweep = String::from_utf8(mixslim(&["sweep-tau", "--network", &net, "--truth", &labels, "--k", "2", "--grid", "0", "--no-timing"]).stdout).unwrap();
    assert_eq!(sweep.lines().nth(1).unwrap().split(',').nth(1).unwrap(), plain);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[model]\nsub = \"a\"\nn = 60\ngrid = [40, 160]\n[run]\nreps = 3\nseed = 1\nno_timing = true\n[clustering]\nrestarts = 2\n").unwrap();
    let out = mixslim(&["experiment", "--config", &path(&cfg), "--reps", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    // one replication means zero standard error
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(2) == Some("0")));
    fs::write(&cfg, "[model]\nsubexperiment = \"a\"\n").unwrap();
    assert_eq!(mixslim(&["experiment", "--config", &path(&cfg)]).status.code(), Some(2));
}
