use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn covmat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_covmat"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn build_state(dir: &Path, covering: &str) -> PathBuf {
    let state = dir.join(format!("{covering}.json"));
    let o = covmat(&[
        "build",
        data(covering).to_str().unwrap(),
        "--state",
        state.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    state
}

#[test]
fn build_prints_matrices_and_writes_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("s.json");
    let dumps = dir.path().join("dumps");
    let o = covmat(&[
        "build",
        data("four.cov").to_str().unwrap(),
        "--state",
        state.to_str().unwrap(),
        "--dump-dir",
        dumps.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("[gamma]\n1 1 0 1\n1 1 0 1\n0 0 1 1\n1 1 1 1\n[pi]\n1 0 0 1\n"));
    assert_eq!(
        fs::read_to_string(dumps.join("pi.txt")).unwrap(),
        "1 0 0 1\n1 1 0 1\n0 0 1 1\n0 0 0 1\n"
    );
    assert!(state.exists());
}

#[test]
fn approx_on_state_and_covering_agree() {
    let dir = tempfile::tempdir().unwrap();
    let state = build_state(dir.path(), "six.cov");
    let from_state = covmat(&["approx", state.to_str().unwrap(), "--set", "x1,x2,x3,x4"]);
    let from_cov = covmat(&[
        "approx",
        data("six.cov").to_str().unwrap(),
        "--set",
        "x1,x2,x3,x4",
        "--oracle",
    ]);
    assert_eq!(from_state.status.code(), Some(0));
    let text = stdout(&from_state);
    assert!(text.starts_with("SH: x1 x2 x3 x4 x5 x6\nSL:\n"), "{text}");
    let sh_sl = |t: &str| t.lines().take(2).map(str::to_string).collect::<Vec<_>>();
    assert_eq!(sh_sl(&text), sh_sl(&stdout(&from_cov)));
}

#[test]
fn approx_report_flags_xl() {
    let o = covmat(&[
        "approx",
        data("four.cov").to_str().unwrap(),
        "--set",
        "x1,x4",
        "--report",
    ]);
    let text = stdout(&o);
    assert!(text.contains("XL: MISMATCH"), "{text}");
    assert_eq!(text.matches("MISMATCH").count(), 1);
}

#[test]
fn update_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let state = build_state(dir.path(), "four.cov");
    let script = dir.path().join("edit.delta");
    fs::write(&script, "# drop the third block\ndel-block C3\n").unwrap();
    let o = covmat(&["update", state.to_str().unwrap(), script.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(
        text.contains("[pi]\n1 0 0 1\n1 1 0 1\n2 1 1 2\n1 0 0 1\n"),
        "{text}"
    );
    let v = covmat(&["verify", state.to_str().unwrap()]);
    assert_eq!(v.status.code(), Some(0), "{}", stdout(&v));
    assert!(stdout(&v).contains("history of 1 step(s) replays"));
}

#[test]
fn compress_pulls_back_through_the_map() {
    let o = covmat(&[
        "compress",
        data("six.cov").to_str().unwrap(),
        "--map",
        data("six.map").to_str().unwrap(),
        "--set",
        "x1,x2,x3,x4",
        "--report",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(
        text.starts_with(
            "f(X): y1 y2\nSH(f(X)): y1 y2 y3\nSL(f(X)):\nSH: x1 x2 x3 x4 x5 x6\nSL:\n"
        ),
        "{text}"
    );
    assert!(text.contains("SH via quotient: match\nSL via quotient: match\n"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(covmat(&["--help"]).status.code(), Some(0));
    assert_eq!(covmat(&["build"]).status.code(), Some(1));
    assert_eq!(
        covmat(&["--threads", "0", "verify", "x"]).status.code(),
        Some(1)
    );

    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    assert_eq!(
        covmat(&["verify", bad.to_str().unwrap()]).status.code(),
        Some(2)
    );
    assert_eq!(
        covmat(&["verify", dir.path().join("missing").to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );

    let single = dir.path().join("single.json");
    let o = covmat(&[
        "build",
        data("single.cov").to_str().unwrap(),
        "--state",
        single.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        covmat(&["approx", single.to_str().unwrap(), "--set", "x1"])
            .status
            .code(),
        Some(3)
    );

    let state = build_state(dir.path(), "four.cov");
    let text = fs::read_to_string(&state).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    let digest = json["current"]["digest"]
        .as_str()
        .expect("current digest")
        .to_string();
    fs::write(&state, text.replace(&digest, &"0".repeat(digest.len()))).unwrap();
    assert_eq!(
        covmat(&["verify", state.to_str().unwrap()]).status.code(),
        Some(4)
    );
}

#[test]
fn failed_update_leaves_state_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let state = build_state(dir.path(), "four.cov");
    let before = fs::read_to_string(&state).unwrap();
    let script = dir.path().join("bad.delta");
    fs::write(&script, "del-block C3\nmove x9 C1 C2\n").unwrap();
    let o = covmat(&["update", state.to_str().unwrap(), script.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    assert_eq!(fs::read_to_string(&state).unwrap(), before);
}
