use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use micropolar::io::RunConfig;
use micropolar_cli::{dispatch, EXIT_FAIL, EXIT_PASS, EXIT_USAGE};

fn run(args: &[&str]) -> i32 {
    dispatch(std::iter::once("micropolar").chain(args.iter().copied()).map(String::from).collect())
}

fn example_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/example.json")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn shipped_example_matches_builtin() {
    assert_eq!(RunConfig::load(&example_config()).unwrap(), RunConfig::example());
}

#[test]
fn missing_config_file_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(run(&["simulate", "--config", s(&missing)]), EXIT_USAGE);
    assert_eq!(run(&["exponents", "check", "--config", s(&missing)]), EXIT_USAGE);
    assert_eq!(run(&["simulate"]), EXIT_USAGE);
}

#[test]
fn unknown_command_and_check_are_usage_errors() {
    assert_eq!(run(&["frobnicate"]), EXIT_USAGE);
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["verify", "2.1", "--out", s(dir.path())]), EXIT_USAGE);
}

#[test]
fn malformed_config_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    let mut v: serde_json::Value = serde_json::from_str(&RunConfig::example().to_json()).unwrap();
    v["picard"]["t_final"] = (-1.0).into();
    fs::write(&p, v.to_string()).unwrap();
    assert_eq!(run(&["picard", "--config", s(&p), "--out", s(dir.path())]), EXIT_USAGE);
}

#[test]
fn exponents_check_on_example_passes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run(&["exponents", "check", "--config", s(&example_config()), "--out", s(dir.path())]),
        EXIT_PASS
    );
    assert!(dir.path().join("constraints.csv").exists());
}

#[test]
fn exponents_check_reports_violation() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("e.json");
    fs::write(&p, r#"{"p":2,"q":2,"r":2,"alpha0":0.1,"beta0":0.5,"gamma0":0}"#).unwrap();
    assert_eq!(run(&["exponents", "check", "--config", s(&p), "--out", s(dir.path())]), EXIT_FAIL);
}

#[test]
fn exponents_select_writes_config() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run(&["exponents", "select", "--config", s(&example_config()), "--out", s(dir.path())]),
        EXIT_PASS
    );
    let sel: micropolar::exponents::ExponentConfig =
        serde_json::from_slice(&fs::read(dir.path().join("exponents.json")).unwrap()).unwrap();
    assert!(sel.intermediates().is_some());
}

#[test]
fn verify_smoothing_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert_eq!(
            run(&["verify", "semigroup-smoothing", "--seed", "7", "--ensemble", "20", "--out", s(d.path())]),
            EXIT_PASS
        );
    }
    let name = "semigroup-smoothing-stokes.csv";
    let x = fs::read(a.path().join(name)).unwrap();
    assert!(!x.is_empty());
    assert_eq!(x, fs::read(b.path().join(name)).unwrap());
    assert_eq!(
        fs::read(a.path().join("verdicts.json")).unwrap(),
        fs::read(b.path().join("verdicts.json")).unwrap()
    );
}

#[test]
fn gronwall_inline_lists() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run(&["gronwall", "--a", "1,0.5", "--alpha", "0.2,0.4", "--b", "1", "--beta", "0.3", "--steps", "100", "--out", s(dir.path())]),
        EXIT_PASS
    );
    let csv = fs::read_to_string(dir.path().join("gronwall.csv")).unwrap();
    assert!(csv.starts_with("t,series,value,provenance"));
    assert_eq!(run(&["gronwall", "--a", "1", "--alpha", "1.0", "--out", s(dir.path())]), EXIT_USAGE);
}

#[test]
fn simulate_writes_checkpoint_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::example();
    cfg.exponents = cfg.exponents.with_rates(0.5, 0.75, 0.6);
    cfg.picard.nodes_per_unit = 40;
    cfg.global = Some(micropolar::mild::GlobalConfig { t_total: 0.2, window: 0.1, bound_constant: 1.0 });
    let p = dir.path().join("run.json");
    fs::write(&p, cfg.to_json()).unwrap();
    let out = dir.path().join("out");
    assert_eq!(run(&["simulate", "--config", s(&p), "--out", s(&out)]), EXIT_PASS);
    let ckpt = out.join("checkpoint_0001.ckpt");
    assert!(ckpt.exists() && out.join("checkpoint_0002.ckpt").exists());
    assert_eq!(run(&["checkpoint", "verify", s(&ckpt), "--config", s(&p)]), EXIT_PASS);

    let out2 = dir.path().join("resumed");
    assert_eq!(run(&["checkpoint", "resume", s(&ckpt), "--config", s(&p), "--out", s(&out2)]), EXIT_PASS);

    // A different seed changes the config hash.
    assert_eq!(run(&["checkpoint", "resume", s(&ckpt), "--config", s(&p), "--seed", "9", "--out", s(&out2)]), EXIT_USAGE);

    let bytes = fs::read(&ckpt).unwrap();
    fs::write(&ckpt, &bytes[..bytes.len() / 2]).unwrap();
    assert_eq!(run(&["checkpoint", "verify", s(&ckpt)]), EXIT_FAIL);
}

#[test]
fn picard_reports_iterations() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run(&["picard", "--config", s(&example_config()), "--dt", "0.025", "--out", s(dir.path())]),
        EXIT_PASS
    );
    let csv = fs::read_to_string(dir.path().join("picard.csv")).unwrap();
    assert!(csv.starts_with("m,norm_tag,difference,ratio,provenance"));
    assert!(dir.path().join("norms.csv").exists());
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_micropolar");
    let st = Command::new(exe)
        .args(["exponents", "check", "--config"])
        .arg(example_config())
        .arg("--out")
        .arg(tempfile::tempdir().unwrap().path())
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(EXIT_PASS));
    let st = Command::new(exe).args(["simulate", "--config", "/nonexistent.json"]).status().unwrap();
    assert_eq!(st.code(), Some(EXIT_USAGE));
}
