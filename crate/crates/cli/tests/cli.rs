use std::path::Path;
use std::process::{Command, Output};

fn fedchi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fedchi")).args(args).output().unwrap()
}

fn small_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("small.toml");
    std::fs::write(
        &path,
        r#"
runs = 3
samples = 2000
[protocol]
m_x = 6
m_y = 6
key_agreement = "test"
ell = 10
[grid]
n = [3, 5]
ell = [10, 20]
datasets = ["linear"]
replicates = 2
"#,
    )
    .unwrap();
    path
}

#[test]
fn example_config_parses() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/example.toml");
    let spec = fedchi::harness::ExperimentSpec::load(&path).unwrap();
    assert_eq!(spec, fedchi::harness::ExperimentSpec::default());
}

#[test]
fn accuracy_sweep_writes_reproducible_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        let o = fedchi(&["accuracy-sweep", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "9"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert!(text.lines().next().unwrap().contains("seed=9"));
    assert_eq!(text.lines().count(), 2 + 4);
}

#[test]
fn generate_then_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("t.csv");
    let o = fedchi(&["generate", "--dataset", "quadratic", "--m-x", "12", "--m-y", "12", "--samples", "5000", "--out", table.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = fedchi(&["estimate", "--table", table.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("chi2 (federated)"));
    assert!(text.contains("reject at 0.05     true"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(fedchi(&["acceptance", "--suite", "nope"]).status.code(), Some(2));
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[protocol]\nell = 500\n").unwrap();
    assert_eq!(fedchi(&["accuracy-sweep", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    std::fs::write(&bad, "[grid]\nell = [10, 400]\n").unwrap();
    assert_eq!(fedchi(&["accuracy-sweep", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    std::fs::write(&bad, "colour = 1\n").unwrap();
    assert_eq!(fedchi(&["run", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(fedchi(&["acceptance", "--suite", "recast-identity"]).status.code(), Some(0));
    assert_eq!(fedchi(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn list_names_every_experiment() {
    let text = String::from_utf8(fedchi(&["list"]).stdout).unwrap();
    for name in ["accuracy-sweep", "caesar", "fdr", "featsel", "cost-sweep", "rank-check"] {
        assert!(text.contains(name), "{name}");
    }
}
