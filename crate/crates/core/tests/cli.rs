use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use stefan_lab::harness::Report;
use tempfile::TempDir;

const SIMULATE: &str = r#"
[model]
a_minus = 1.0
a_plus = 1.0
kind = "boundary_frame"

[profile]
preset = "asymmetric_step"
left = -0.6
right = 1.0

[run]
n = [20, 40]
l = 1.0
t = 0.05
sample_times = [0.0, 0.025, 0.05]
seeds = [3, 4]
"#;

const PDE: &str = r#"
[model]
a_minus = 1.0
a_plus = 1.0

[profile]
preset = "asymmetric_step"
left = -0.6
right = 1.0

[run]
n = [10]
l = 1.0
t = 0.1
sample_times = [0.0, 0.05, 0.1]
seeds = [1]

[pde]
dx = 0.015625
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stefan-lab"))
}

fn run(dir: &Path, args: &[&str], config: &str) -> Output {
    let cfg = dir.join("config.toml");
    fs::write(&cfg, config).unwrap();
    bin().args(args).arg("--config").arg(&cfg).output().unwrap()
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(files(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

#[test]
fn same_config_and_seeds_give_identical_bytes() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let o = run(tmp.path(), &["simulate", "--out", out.to_str().unwrap(), "--workers", "2"], SIMULATE);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let fa = files(&a);
    assert!(fa.len() > 10);
    for p in &fa {
        let q = b.join(p.strip_prefix(&a).unwrap());
        assert_eq!(fs::read(p).unwrap(), fs::read(&q).unwrap(), "{} differs", p.display());
    }
    assert_eq!(fa.len(), files(&b).len());
}

#[test]
fn worker_count_does_not_change_results() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run(tmp.path(), &["simulate", "--out", a.to_str().unwrap(), "--workers", "1"], SIMULATE);
    run(tmp.path(), &["simulate", "--out", b.to_str().unwrap(), "--workers", "3"], SIMULATE);
    for p in files(&a) {
        let q = b.join(p.strip_prefix(&a).unwrap());
        assert_eq!(fs::read(&p).unwrap(), fs::read(&q).unwrap());
    }
}

#[test]
fn missing_a_plus_exits_2_naming_the_field() {
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), &["simulate", "--out", tmp.path().join("o").to_str().unwrap()], &SIMULATE.replace("a_plus = 1.0\n", ""));
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("`a_plus`"), "{err}");
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn config_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("o");
    let out = out.to_str().unwrap();
    for (doc, field) in [
        (SIMULATE.replace("l = 1.0", "l = 1.0\nwidth = 2.0"), "width"),
        (SIMULATE.replace("seeds = [3, 4]", "seeds = [3, 3]"), "run.seeds"),
        (SIMULATE.replace("n = [20, 40]", "n = []"), "run.n"),
    ] {
        let o = run(tmp.path(), &["simulate", "--out", out], &doc);
        assert_eq!(o.status.code(), Some(2));
        assert!(String::from_utf8_lossy(&o.stderr).contains(&format!("`{field}`")));
    }
    // a convergence study needs three values of N
    let o = run(tmp.path(), &["converge", "--out", out], SIMULATE);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`run.n`"));
    let o = bin().args(["simulate", "--config", "/nonexistent/x.toml"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn empty_profile_runs_with_zero_observables() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("o");
    let doc = SIMULATE.replace("preset = \"asymmetric_step\"\nleft = -0.6\nright = 1.0", "preset = \"empty\"");
    let o = run(tmp.path(), &["simulate", "--out", out.to_str().unwrap()], &doc);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let obs = fs::read_to_string(out.join("simulate/n20_seed3_observables.csv")).unwrap();
    let mut lines = obs.lines();
    assert_eq!(lines.next(), Some("time,observable,value"));
    for l in lines {
        assert!(l.ends_with(",0"), "{l}");
    }
    let blocks = fs::read_to_string(out.join("simulate/n40_seed4_blocks.csv")).unwrap();
    assert!(blocks.lines().skip(1).all(|l| l.ends_with(",0")));
}

#[test]
fn summary_carries_hash_and_seed_override() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("o");
    let o = run(tmp.path(), &["simulate", "--out", out.to_str().unwrap(), "--seeds", "7,8,9"], SIMULATE);
    assert!(o.status.success());
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().next(), summary.lines().next());
    assert!(summary.contains("\nseeds: 7,8,9\n"));
    let hash = summary.lines().nth(1).unwrap().strip_prefix("config_sha256: ").unwrap();
    assert_eq!(hash.len(), 64);
    assert!(summary.contains("PASS ledgers exact"));
    assert!(out.join("simulate/n40_seed9_observables.csv").is_file());
}

fn svg_points(svg: &str) -> Vec<String> {
    let mut out = Vec::new();
    for part in svg.split("data-label=\"").skip(1) {
        let label = &part[..part.find('"').unwrap()];
        let pts = part.split("data-points=\"").nth(1).unwrap();
        for p in pts[..pts.find('"').unwrap()].split_whitespace() {
            out.push(format!("{label},{p}"));
        }
    }
    out
}

#[test]
fn pde_plots_agree_with_their_csv_and_replot_identically() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("o");
    let o = run(tmp.path(), &["pde", "--out", out.to_str().unwrap()], PDE);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["pde_density.csv", "pde_front.csv", "moving_frame.csv", "pde_residuals.csv"] {
        assert!(out.join(name).is_file(), "{name}");
    }
    let front = fs::read_to_string(out.join("pde_front.csv")).unwrap();
    assert!(front.starts_with("time,B\n0,0\n"));
    let plots = out.join("plots");
    let mut svgs = 0;
    let before: Vec<(PathBuf, Vec<u8>)> = files(&plots).into_iter().map(|p| (p.clone(), fs::read(&p).unwrap())).collect();
    for p in files(&plots) {
        if p.extension().unwrap() != "svg" {
            continue;
        }
        svgs += 1;
        let svg = fs::read_to_string(&p).unwrap();
        assert!(svg.starts_with("<svg xmlns=\"http://www.w3.org/2000/svg\""));
        assert!(svg.trim_end().ends_with("</svg>"));
        let csv = fs::read_to_string(p.with_extension("csv")).unwrap();
        let rows: Vec<String> = csv.lines().skip(1).map(String::from).collect();
        assert_eq!(svg_points(&svg), rows, "{}", p.display());
    }
    assert!(svgs >= 2);
    fs::remove_dir_all(&plots).unwrap();
    let o = bin().args(["plot", "--out", out.to_str().unwrap()]).output().unwrap();
    assert!(o.status.success());
    let after: Vec<(PathBuf, Vec<u8>)> = files(&plots).into_iter().map(|p| (p.clone(), fs::read(&p).unwrap())).collect();
    assert_eq!(before, after);
}

#[test]
fn empty_report_plots_nothing() {
    let tmp = TempDir::new().unwrap();
    let report = Report::new("empty", "0".repeat(64), vec![1]);
    fs::write(tmp.path().join("report.json"), serde_json::to_string(&report).unwrap()).unwrap();
    let o = bin().args(["plot", "--out", tmp.path().to_str().unwrap()]).output().unwrap();
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("no figures"));
    assert!(!tmp.path().join("plots").exists());
    // a directory without a report is an I/O failure
    let o = bin().args(["plot", "--out", tmp.path().join("missing").to_str().unwrap()]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}
