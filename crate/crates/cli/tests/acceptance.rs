use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, ExitCode};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(sub: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fockshell"))
        .arg(sub)
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn criterion_12() -> bool {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = run("verify", &config("verify_m2.json"), a.path(), &[]);
    let second = run("verify", &config("verify_m2.json"), b.path(), &["--threads", "3"]);
    let ra = fs::read(a.path().join("verify.json")).unwrap();
    let rb = fs::read(b.path().join("verify.json")).unwrap();
    let identical = ra == rb;
    let ok_runs = code(&first) == 0 && code(&second) == 0;

    let t = tempfile::tempdir().unwrap();
    let tampered = run("verify", &config("tampered_m2.json"), t.path(), &[]);
    let tampered_report: serde_json::Value =
        serde_json::from_slice(&fs::read(t.path().join("verify.json")).unwrap()).unwrap();

    let missing = run("verify", Path::new("/definitely/not/here.json"), t.path(), &[]);

    let pass = identical
        && ok_runs
        && code(&tampered) == 1
        && tampered_report["passed"] == serde_json::json!(false)
        && code(&missing) == 2;
    println!(
        "criterion 12 cli_reproducibility {} identical={} exit(verify)={},{} exit(tampered)={} exit(missing)={}",
        if pass { "PASS" } else { "FAIL" },
        identical,
        code(&first),
        code(&second),
        code(&tampered),
        code(&missing)
    );
    pass
}

fn main() -> ExitCode {
    if criterion_12() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
