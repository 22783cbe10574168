use std::path::Path;
use std::process::{Command, Output};

fn bbhk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bbhk"))
        .args(args)
        .env_remove("BBHK_SEED")
        .env_remove("BBHK_THREADS")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn help_exits_zero() {
    let out = bbhk(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("suite"));
}

#[test]
fn usage_and_config_errors_exit_two() {
    assert_eq!(bbhk(&["suite", "bogus"]).status.code(), Some(2));
    assert_eq!(bbhk(&["frobnicate"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[suite.hk_two_sided]\nbandwidth = 0.5\n");
    assert_eq!(bbhk(&["suite", "hk_two_sided", "-c", &cfg]).status.code(), Some(2));
    assert_eq!(bbhk(&["kernel", "-c", &cfg]).status.code(), Some(2));
}

#[test]
fn aikawa_suite_writes_report_and_cases() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "a.toml",
        "[suite.aikawa]\nsamples = 20000\ndomains = [{ kind = \"half_space\", d = 2 }]\n",
    );
    let out_dir = dir.path().join("run");
    let out = bbhk(&["suite", "aikawa", "-c", &cfg, "--seed", "3", "-o", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["suite"], "aikawa");
    assert_eq!(report["provenance"]["seed"], 3);
    assert_eq!(report["summary"]["pass"], true);
    let cases = std::fs::read_to_string(out_dir.join("cases.csv")).unwrap();
    assert!(cases.starts_with("id,group,measured,error,bound,ratio,abscissa,hits,inputs"));
    assert_eq!(cases.lines().count() - 1, report["cases"].as_array().unwrap().len());
}

#[test]
fn failing_suite_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "[suite.condition_a]\nfamilies = [\"plain_stable\"]\ndims = [1]\nalphas = [1.0]\npairs = 50\n",
    );
    let out = bbhk(&["suite", "condition_a", "-c", &cfg, "-o", dir.path().join("run").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn seed_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "a.toml",
        "[suite.aikawa]\nsamples = 5000\ndomains = [{ kind = \"half_line\" }]\n",
    );
    let out_dir = dir.path().join("run");
    let st = Command::new(env!("CARGO_BIN_EXE_bbhk"))
        .args(["suite", "aikawa", "-c", &cfg, "-o", out_dir.to_str().unwrap()])
        .env("BBHK_SEED", "41")
        .status()
        .unwrap();
    assert!(st.success());
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["provenance"]["seed"], 41);
}

#[test]
fn grid_subcommands_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "g.toml",
        r#"
[domain]
kind = "half_line"
[kernel]
kind = "neumann"
alpha = 1.0
[grid]
x = [[0.1], [1.0]]
y = [[0.5], [3.0]]
radii = [0.1, 1.0]
widths = [0.1]
samples = 5000
[sim]
model = { kind = "resurrected", psi = { kind = "constant_one" } }
alpha = 1.0
t = 1.0
n_paths = 500
x0 = [1.0]
"#,
    );
    let out = dir.path().join("out");
    for (cmd, file) in [
        ("kernel", "kernel.csv"),
        ("tail", "tail.csv"),
        ("aikawa", "aikawa.csv"),
        ("simulate", "endpoints.csv"),
        ("hk-check", "hk.csv"),
    ] {
        let o = bbhk(&[cmd, "-c", &cfg, "-o", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(out.join(file).is_file(), "{cmd}");
    }
    assert!(out.join("simulate.json").is_file());
}

#[test]
fn report_without_plots_component_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_bbhk"))
        .args(["report", dir.path().to_str().unwrap()])
        .env("BBHK_PLOTS", "/nonexistent/bbhk-plots")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}
