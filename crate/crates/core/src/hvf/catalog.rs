//! Built-in systems and the JSON catalog format.
//!
//! JSON layout:
//! `{"name": "...", "n": 2, "m": 2, "sigma": [1, 2],
//!   "fields": [[{"component": 1, "monomial": [0, 0], "coeff": 1}], ...]}`
//! Components are 1-based. Coefficients are integers, decimals, or "p/q" strings.

use num_traits::One;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::field::{DilationFamily, HormanderSystem, PolyVectorField};
use super::poly::{Coeff, Monomial, Poly};
use crate::error::{Error, Result};

fn coordinate_system(name: String, n: usize, x2: Vec<Poly>, sigma: Vec<u32>) -> HormanderSystem {
    let d1 = PolyVectorField::coordinate(n, 0);
    let f2 = PolyVectorField::new(x2).expect("catalog field arity");
    HormanderSystem::new(name, vec![d1, f2], DilationFamily::new(sigma).expect("catalog dilation"))
        .expect("catalog system")
}

/// `X1 = d1`, `X2 = x1^k d2` on R^2 with sigma = (1, k+1).
pub fn grushin(k: u32) -> HormanderSystem {
    let n = 2;
    let mut e = vec![0; n];
    e[0] = k;
    let comps = vec![Poly::zero(n), Poly::term(n, Monomial(e), Coeff::one())];
    coordinate_system(format!("grushin{k}"), n, comps, vec![1, k + 1])
}

/// `X1 = d1`, `X2 = x1 d2 + x2 d3 + ... + x_{n-1} dn` with sigma = (1, ..., n).
pub fn chain(n: usize) -> HormanderSystem {
    assert!(n >= 2);
    let mut comps = vec![Poly::zero(n)];
    for k in 1..n {
        comps.push(Poly::var(n, k - 1));
    }
    coordinate_system(format!("chain{n}"), n, comps, (1..=n as u32).collect())
}

/// `X1 = d1`, `X2 = x1 d2 + x1^2 d3 + ... + x1^{n-1} dn` with sigma = (1, ..., n).
pub fn powers(n: usize) -> HormanderSystem {
    assert!(n >= 2);
    let mut comps = vec![Poly::zero(n)];
    for k in 1..n {
        let mut e = vec![0; n];
        e[0] = k as u32;
        comps.push(Poly::term(n, Monomial(e), Coeff::one()));
    }
    coordinate_system(format!("powers{n}"), n, comps, (1..=n as u32).collect())
}

/// Resolve a catalog name such as `grushin1`, `chain3` or `powers3`.
pub fn builtin(name: &str) -> Result<HormanderSystem> {
    let parse = |prefix: &str| -> Option<u32> { name.strip_prefix(prefix).and_then(|s| s.parse().ok()) };
    if let Some(k) = parse("grushin") {
        if (1..=8).contains(&k) {
            return Ok(grushin(k));
        }
    }
    if let Some(n) = parse("chain") {
        if (2..=8).contains(&n) {
            return Ok(chain(n as usize));
        }
    }
    if let Some(n) = parse("powers") {
        if (2..=8).contains(&n) {
            return Ok(powers(n as usize));
        }
    }
    Err(Error::UnknownSystem(name.to_string()))
}

/// Names listed by `system list`.
pub fn builtin_names() -> Vec<String> {
    let mut v: Vec<String> = (1..=3).map(|k| format!("grushin{k}")).collect();
    v.extend((3..=5).map(|n| format!("chain{n}")));
    v.extend((3..=5).map(|n| format!("powers{n}")));
    v
}

#[derive(Serialize, Deserialize)]
struct JsonTerm {
    component: usize,
    monomial: Vec<u32>,
    coeff: Value,
}

#[derive(Serialize, Deserialize)]
struct JsonSystem {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    n: usize,
    m: usize,
    sigma: Vec<u32>,
    fields: Vec<Vec<JsonTerm>>,
}

fn parse_coeff(v: &Value) -> Result<Coeff> {
    match v {
        Value::Number(num) => {
            if let Some(i) = num.as_i64() {
                Ok(Coeff::from_integer(i))
            } else {
                let f = num.as_f64().ok_or_else(|| Error::InvalidCatalog(format!("bad number {num}")))?;
                Coeff::approximate_float(f).ok_or_else(|| Error::InvalidCatalog(format!("coefficient {f} not representable")))
            }
        }
        Value::String(s) => {
            let (a, b) = s.split_once('/').unwrap_or((s.as_str(), "1"));
            let a: i64 = a.trim().parse().map_err(|_| Error::InvalidCatalog(format!("bad coefficient '{s}'")))?;
            let b: i64 = b.trim().parse().map_err(|_| Error::InvalidCatalog(format!("bad coefficient '{s}'")))?;
            if b == 0 {
                return Err(Error::InvalidCatalog(format!("zero denominator in '{s}'")));
            }
            Ok(Coeff::new(a, b))
        }
        other => Err(Error::InvalidCatalog(format!("unsupported coefficient {other}"))),
    }
}

fn coeff_to_json(c: &Coeff) -> Value {
    if c.is_integer() {
        Value::from(c.to_integer())
    } else {
        Value::from(format!("{}/{}", c.numer(), c.denom()))
    }
}

pub fn from_json(text: &str) -> Result<HormanderSystem> {
    let js: JsonSystem = serde_json::from_str(text).map_err(|e| Error::InvalidCatalog(e.to_string()))?;
    if js.sigma.len() != js.n {
        return Err(Error::DimensionMismatch(format!("sigma has {} entries but n = {}", js.sigma.len(), js.n)));
    }
    if js.fields.len() != js.m {
        return Err(Error::DimensionMismatch(format!("{} fields listed but m = {}", js.fields.len(), js.m)));
    }
    let dil = DilationFamily::new(js.sigma)?;
    let mut fields = Vec::new();
    for (i, terms) in js.fields.iter().enumerate() {
        let mut comps = vec![Poly::zero(js.n); js.n];
        for t in terms {
            if t.component == 0 || t.component > js.n {
                return Err(Error::DimensionMismatch(format!(
                    "field {} references component {} outside 1..={}",
                    i + 1,
                    t.component,
                    js.n
                )));
            }
            if t.monomial.len() != js.n {
                return Err(Error::DimensionMismatch(format!(
                    "field {} has a monomial with {} exponents, expected {}",
                    i + 1,
                    t.monomial.len(),
                    js.n
                )));
            }
            comps[t.component - 1].add_term(Monomial(t.monomial.clone()), parse_coeff(&t.coeff)?);
        }
        fields.push(PolyVectorField::new(comps)?);
    }
    HormanderSystem::new(js.name.unwrap_or_else(|| "custom".into()), fields, dil)
}

pub fn to_json(sys: &HormanderSystem) -> String {
    let fields = sys
        .fields()
        .iter()
        .map(|f| {
            f.components()
                .iter()
                .enumerate()
                .flat_map(|(k, p)| {
                    p.terms()
                        .map(|(m, c)| JsonTerm { component: k + 1, monomial: m.0.clone(), coeff: coeff_to_json(c) })
                        .collect::<Vec<_>>()
                })
                .collect()
        })
        .collect();
    let js = JsonSystem { name: Some(sys.name.clone()), n: sys.n(), m: sys.m(), sigma: sys.sigma().to_vec(), fields };
    serde_json::to_string_pretty(&js).expect("serialisable")
}
