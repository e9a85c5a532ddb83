use std::path::Path;
use std::process::{Command, Output};

fn petz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_petz")).args(args).output().expect("binary runs")
}

fn sweep_into(dir: &Path, channel: &str, extra: &[&str]) -> (String, String) {
    let out = dir.to_str().unwrap();
    let mut args = vec!["sweep", "--channel", channel, "--out", out];
    args.extend_from_slice(extra);
    let res = petz(&args);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let backend = extra.iter().skip_while(|a| **a != "--backend").nth(1).copied().unwrap_or("kraus");
    let stem = format!("sweep_{channel}_{backend}");
    (
        std::fs::read_to_string(dir.join(format!("{stem}.csv"))).unwrap(),
        std::fs::read_to_string(dir.join(format!("{stem}.svg"))).unwrap(),
    )
}

#[test]
fn default_sweep_layout() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, svg) = sweep_into(dir.path(), "ad", &[]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "state,channel,backend,p,epsilon,f_damped,f_recovered");
    // 4 states x 21 p values x (1 damped + 3 recovered)
    assert_eq!(lines.len() - 1, 4 * 21 * 4);
    assert!(lines.iter().skip(1).all(|l| l.split(',').count() == 7));
    let doc = roxmltree::Document::parse(&svg).expect("valid SVG");
    let panels = doc
        .descendants()
        .filter(|n| n.attribute("class") == Some("panel"))
        .count();
    assert_eq!(panels, 4);
}

#[test]
fn sweeps_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = sweep_into(a.path(), "pd", &[]);
    let second = sweep_into(b.path(), "pd", &[]);
    assert_eq!(first, second);
}

#[test]
fn backends_agree_on_fidelities() {
    let dir = tempfile::tempdir().unwrap();
    let (kraus, _) = sweep_into(dir.path(), "pd", &[]);
    let (pulses, _) = sweep_into(dir.path(), "pd", &["--backend", "pulses"]);
    for (a, b) in kraus.lines().skip(1).zip(pulses.lines().skip(1)) {
        let fa: Vec<&str> = a.split(',').collect();
        let fb: Vec<&str> = b.split(',').collect();
        assert_eq!(fa[0], fb[0]);
        assert_eq!(fa[3..5], fb[3..5]);
        for i in 5..7 {
            if fa[i].is_empty() {
                assert!(fb[i].is_empty());
            } else {
                let (x, y): (f64, f64) = (fa[i].parse().unwrap(), fb[i].parse().unwrap());
                assert!((x - y).abs() < 1e-9, "{a} vs {b}");
            }
        }
    }
}

#[test]
fn config_file_overrides_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    std::fs::write(&cfg, "p_grid = 0:1:0.5\nepsilons = 0.5\nstates = 1\n").unwrap();
    let (csv, _) = sweep_into(dir.path(), "ad", &["--config", cfg.to_str().unwrap()]);
    assert_eq!(csv.lines().count(), 1 + 3 * 2);
    assert!(csv.contains("|1>,ad,kraus,0.5000000000,0.5000000000,0.5000000000,0.6666666667"));
}

#[test]
fn exit_codes() {
    assert_eq!(petz(&["verify"]).status.code(), Some(0));
    assert_eq!(petz(&["verify", "--tol", "1e-15"]).status.code(), Some(1));
    assert_eq!(petz(&["frobnicate"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let missing = petz(&["sweep", "--channel", "ad", "--config", "/nonexistent/x.cfg", "--out", out]);
    assert_eq!(missing.status.code(), Some(2));
    assert_eq!(petz(&["compile", "--channel", "ad", "--p", "1.5", "--eps", "0.2"]).status.code(), Some(2));
}

#[test]
fn verify_report_lists_checks() {
    let out = petz(&["verify"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 10);
    let strict = String::from_utf8(petz(&["verify", "--tol", "1e-15"]).stdout).unwrap();
    assert!(strict.contains("[FAIL]"));
}

#[test]
fn compile_outputs() {
    let dump = petz(&["compile", "--channel", "ad", "--p", "0.4", "--eps", "0.2", "--dump"]);
    assert!(dump.status.success());
    let text = String::from_utf8(dump.stdout).unwrap();
    assert!(text.contains('V') && text.contains('W'));

    let pulses = petz(&["compile", "--channel", "pd", "--p", "0.4", "--eps", "0.2", "--emit", "pulses"]);
    let text = String::from_utf8(pulses.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| *l == "BARRIER").count(), 1);
    assert!(text.lines().any(|l| l.starts_with("FREE t=")));
    assert!(text.lines().any(|l| l.starts_with("ROT q=")));
}

#[test]
fn export_then_compile_kraus_file() {
    let out = petz(&["export", "--channel", "pd", "--p", "0.3", "--eps", "0.8"]);
    assert!(out.status.success());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("petz.json");
    std::fs::write(&path, &out.stdout).unwrap();
    let compiled = petz(&["compile", "--kraus", path.to_str().unwrap()]);
    assert!(compiled.status.success());
    let text = String::from_utf8(compiled.stdout).unwrap();
    let dist: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("# choi distance "))
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!(dist < 1e-8);

    std::fs::write(&path, "{\"label\":\"bad\"}").unwrap();
    assert_eq!(petz(&["compile", "--kraus", path.to_str().unwrap()]).status.code(), Some(2));
}
