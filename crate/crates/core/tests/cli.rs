use std::path::{Path, PathBuf};

use subelliptic::cli::{gridio, run};
use subelliptic::geometry::BoxDomain;
use subelliptic::grid::GridFunction;

struct Scratch(PathBuf);

impl Scratch {
    fn new(tag: &str) -> Scratch {
        let dir = std::env::temp_dir().join(format!("subelliptic-cli-{tag}-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        Scratch(dir)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("subelliptic").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn system_check_reports_structure() {
    let s = Scratch::new("system");
    let (code, out, _) = call(&["system", "check", "--name", "grushin1", "--out", p(&s.0)]);
    assert_eq!(code, 0);
    for token in ["q=3", "N=3", "rank@0=2"] {
        assert!(out.contains(token), "{out}");
    }
    let csv = std::fs::read_to_string(s.path("system.csv")).unwrap();
    assert!(csv.starts_with("system,n,m,q,N,rank_at_origin,pass,config_hash,version\n"));
}

#[test]
fn inhomogeneous_system_fails_the_check() {
    let s = Scratch::new("bad");
    let file = s.path("bad.json");
    std::fs::write(
        &file,
        r#"{"name": "bad", "n": 2, "m": 2, "sigma": [1, 1],
            "fields": [[{"component": 1, "monomial": [0, 0], "coeff": 1}],
                       [{"component": 2, "monomial": [1, 0], "coeff": 1}]]}"#,
    )
    .unwrap();
    let (code, _, err) = call(&["system", "check", "--name", p(&file), "--out", p(&s.0)]);
    assert_eq!(code, 1, "{err}");
    assert!(err.contains("homogeneous"));
}

#[test]
fn usage_and_input_errors_exit_with_two() {
    let s = Scratch::new("usage");
    assert_eq!(call(&["report", "--dir", p(&s.0)]).0, 2);
    assert_eq!(call(&["report", "--dir", p(&s.path("missing"))]).0, 2);
    assert_eq!(call(&["system", "check", "--bogus"]).0, 2);
    assert_eq!(call(&["frobnicate"]).0, 2);
    assert_eq!(call(&["system", "check", "--name", "nosuch"]).0, 2);
    assert_eq!(call(&["maximal", "--op", "hl", "--f", p(&s.path("none.hvfg"))]).0, 2);
    let cfg = s.path("cfg.json");
    std::fs::write(&cfg, r#"{"sytem": "grushin1"}"#).unwrap();
    assert_eq!(call(&["system", "check", "--config", p(&cfg)]).0, 2);
    std::fs::write(&cfg, r#"{"tolerances": {"spread": 0.0}}"#).unwrap();
    assert_eq!(call(&["system", "check", "--config", p(&cfg)]).0, 2);
    assert_eq!(call(&["--help"]).0, 0);
}

#[test]
fn reports_are_deterministic_and_aggregated() {
    let s = Scratch::new("det");
    let coeffs = s.path("c.json");
    std::fs::write(&coeffs, r#"{"kind": "sine_diagonal", "base": 2.0, "amplitude": 1.0, "nu": 0.3}"#).unwrap();
    let run_once = |dir: &Path| {
        let (code, out, err) = call(&["apriori", "--coeffs", p(&coeffs), "--nodes", "81", "--out", p(dir)]);
        assert_eq!(code, 0, "{out}{err}");
        std::fs::read(dir.join("apriori.csv")).unwrap()
    };
    let a = run_once(&s.path("a"));
    let b = run_once(&s.path("b"));
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.lines().skip(1).all(|l| l.ends_with(&format!(",{}", env!("CARGO_PKG_VERSION")))));
    assert!(s.path("a").join("apriori.svg").exists());

    let (code, out, _) = call(&["report", "--dir", p(&s.path("a"))]);
    assert_eq!(code, 0);
    assert!(out.contains("apriori.csv: 5 rows, 0 failed"), "{out}");
    assert!(s.path("a").join("summary.csv").exists());
}

#[test]
fn a_failed_gate_exits_with_one() {
    let s = Scratch::new("gate");
    let coeffs = s.path("c.json");
    std::fs::write(&coeffs, r#"{"kind": "constant", "matrix": [[1.0, 0.0], [0.0, 1.0]], "nu": 0.5}"#).unwrap();
    let cfg = s.path("cfg.json");
    std::fs::write(&cfg, r#"{"tolerances": {"spread": 1.000001}}"#).unwrap();
    let (code, out, _) = call(&["apriori", "--config", p(&cfg), "--coeffs", p(&coeffs), "--nodes", "81", "--out", p(&s.0)]);
    assert_eq!(code, 1, "{out}");
    let (code, _, _) = call(&["report", "--dir", p(&s.0)]);
    assert_eq!(code, 1);
}

#[test]
fn maximal_commands_write_grids_and_tables() {
    let s = Scratch::new("maximal");
    let dom = BoxDomain::new(vec![-1.0, -1.0], vec![1.0, 1.0], vec![41, 41]).unwrap();
    let f = GridFunction::from_fn(&dom, |x| (-3.0 * (x[0] * x[0] + x[1] * x[1])).exp());
    let grid = s.path("f.csv");
    gridio::write_grid(&grid, &f).unwrap();
    for op in ["hl", "sharp", "vmo", "fs"] {
        let (code, out, err) = call(&["maximal", "--op", op, "--f", p(&grid), "--r0", "0.15", "--levels", "3", "--out", p(&s.0)]);
        assert_eq!(code, 0, "{op}: {out}{err}");
        assert!(s.path(&format!("maximal_{op}.csv")).exists());
    }
    let m = gridio::read_grid(&s.path("maximal_hl.hvfg")).unwrap();
    assert_eq!(m.domain, dom);
    assert!(m.values.iter().zip(&f.values).all(|(a, b)| a >= b));
}

#[test]
fn geometry_and_lift_commands() {
    let s = Scratch::new("geom");
    let (code, out, err) = call(&["geom", "balls", "--out", p(&s.0)]);
    assert_eq!(code, 0, "{out}{err}");
    assert!(out.contains("2^q = 8"));
    let (code, out, _) = call(&["geom", "distance", "--from", "0,0", "--to", "0.5,0"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("d = 0.5"), "{out}");
    let (code, out, _) = call(&["lift", "verify", "--samples", "10", "--out", p(&s.0)]);
    assert_eq!(code, 0, "{out}");
    assert_eq!(call(&["lift", "verify", "--name", "nosuch"]).0, 2);
}
