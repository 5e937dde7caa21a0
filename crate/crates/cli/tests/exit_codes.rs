use std::process::Command;

fn run(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_subelliptic")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into_owned())
}

#[test]
fn process_exit_codes() {
    let dir = std::env::temp_dir().join(format!("subelliptic-bin-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let d = dir.to_str().unwrap();

    let (code, out) = run(&["system", "check", "--name", "grushin1", "--out", d]);
    assert_eq!(code, 0);
    assert!(out.contains("q=3, N=3, rank@0=2"), "{out}");

    let bad = dir.join("bad.json");
    std::fs::write(
        &bad,
        r#"{"name": "bad", "n": 2, "m": 2, "sigma": [1, 1],
            "fields": [[{"component": 1, "monomial": [0, 0], "coeff": 1}],
                       [{"component": 2, "monomial": [1, 0], "coeff": 1}]]}"#,
    )
    .unwrap();
    assert_eq!(run(&["system", "check", "--name", bad.to_str().unwrap(), "--out", d]).0, 1);

    let empty = dir.join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    assert_eq!(run(&["report", "--dir", empty.to_str().unwrap()]).0, 2);
    assert_eq!(run(&["--no-such-flag"]).0, 2);
    assert_eq!(run(&["--version"]).0, 0);

    let coeffs = dir.join("c.json");
    std::fs::write(&coeffs, r#"{"kind": "sine_diagonal", "base": 2.0, "amplitude": 1.0, "nu": 0.3}"#).unwrap();
    let capped = Command::new(env!("CARGO_BIN_EXE_subelliptic"))
        .args(["apriori", "--coeffs", coeffs.to_str().unwrap(), "--out", d])
        .env("SUBELLIPTIC_BUDGET", "1000")
        .output()
        .unwrap();
    assert_eq!(capped.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&capped.stderr).contains("budget"));
    std::fs::remove_dir_all(&dir).unwrap();
}
