use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_traits::Zero;

use super::field::{HormanderSystem, PolyVectorField};
use super::poly::{Coeff, Monomial};
use crate::error::{Error, Result};

type Key = (usize, Monomial);
type SparseVec = BTreeMap<Key, Coeff>;

/// Reduced row echelon basis over the rationals, used to decide linear
/// independence of polynomial vector fields with constant coefficients.
#[derive(Default)]
struct EchelonBasis {
    rows: Vec<(Key, SparseVec)>,
}

impl EchelonBasis {
    fn reduce(&self, mut v: SparseVec) -> SparseVec {
        for (pivot, row) in &self.rows {
            let c = match v.get(pivot) {
                Some(c) if !c.is_zero() => *c,
                _ => continue,
            };
            for (k, r) in row {
                let e = v.entry(k.clone()).or_insert_with(Coeff::zero);
                *e -= c * r;
                if e.is_zero() {
                    v.remove(k);
                }
            }
        }
        v
    }

    /// Insert when independent; returns whether the span grew.
    fn insert(&mut self, v: SparseVec) -> bool {
        let v = self.reduce(v);
        let Some((pivot, pc)) = v.iter().next_back().map(|(k, c)| (k.clone(), *c)) else {
            return false;
        };
        let row: SparseVec = v.into_iter().map(|(k, c)| (k, c / pc)).collect();
        for (_, other) in self.rows.iter_mut() {
            if let Some(c) = other.get(&pivot).copied() {
                for (k, r) in &row {
                    let e = other.entry(k.clone()).or_insert_with(Coeff::zero);
                    *e -= c * r;
                    if e.is_zero() {
                        other.remove(k);
                    }
                }
            }
        }
        self.rows.push((pivot, row));
        true
    }
}

/// A basis of the Lie algebra generated by a system, built from right-nested
/// brackets `[X_{i1}, [X_{i2}, ..., X_{ik}]]` ordered by length.
#[derive(Clone, Debug)]
pub struct LieClosure {
    pub basis: Vec<PolyVectorField>,
    /// Bracket word of each basis element, 1-based field indices.
    pub words: Vec<Vec<usize>>,
    /// Maximal bracket length needed.
    pub depth: usize,
}

impl LieClosure {
    /// Dimension N of the Lie algebra.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn word_label(&self, i: usize) -> String {
        let w = &self.words[i];
        let mut s = format!("X{}", w[w.len() - 1]);
        for idx in w[..w.len() - 1].iter().rev() {
            s = format!("[X{},{}]", idx, s);
        }
        s
    }
}

/// Add brackets level by level until a whole level contributes nothing new.
pub fn lie_closure(sys: &HormanderSystem, max_depth: usize) -> Result<LieClosure> {
    let mut ech = EchelonBasis::default();
    let mut basis = Vec::new();
    let mut words = Vec::new();
    let mut prev_level: Vec<usize> = Vec::new();
    for (i, f) in sys.fields().iter().enumerate() {
        if ech.insert(f.coordinates()) {
            basis.push(f.clone());
            words.push(vec![i + 1]);
            prev_level.push(basis.len() - 1);
        }
    }
    if max_depth == 0 {
        return Err(Error::ClosureDepthExceeded(0));
    }
    let mut depth = 1;
    loop {
        let mut level = Vec::new();
        for &b in &prev_level {
            for (i, f) in sys.fields().iter().enumerate() {
                let br = f.bracket(&basis[b]);
                if br.is_zero() {
                    continue;
                }
                if ech.insert(br.coordinates()) {
                    let mut w = vec![i + 1];
                    w.extend_from_slice(&words[b]);
                    basis.push(br);
                    words.push(w);
                    level.push(basis.len() - 1);
                }
            }
        }
        if level.is_empty() {
            return Ok(LieClosure { basis, words, depth });
        }
        depth += 1;
        if depth >= max_depth {
            return Err(Error::ClosureDepthExceeded(max_depth));
        }
        prev_level = level;
    }
}

/// Default depth budget: one more than the top dilation exponent.
pub fn default_max_depth(sys: &HormanderSystem) -> usize {
    *sys.sigma().last().unwrap_or(&1) as usize + 1
}

/// Numerical rank of the closure evaluated at a point.
pub fn hormander_rank(closure: &LieClosure, x: &[f64]) -> usize {
    let n = x.len();
    let rows = closure.basis.len();
    let mut m = DMatrix::<f64>::zeros(rows, n);
    for (r, f) in closure.basis.iter().enumerate() {
        for (c, v) in f.eval(x).into_iter().enumerate() {
            m[(r, c)] = v;
        }
    }
    let sv = m.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > 1e-10 * smax.max(1.0)).count()
}

/// Structural summary reported by `validate`.
#[derive(Clone, Debug)]
pub struct SystemSummary {
    pub n: usize,
    pub m: usize,
    pub q: u32,
    pub big_n: usize,
    pub rank_at_origin: usize,
    pub closure: LieClosure,
}

/// Homogeneity, closure and the rank condition at the origin.
pub fn validate(sys: &HormanderSystem) -> Result<SystemSummary> {
    sys.require_homogeneous()?;
    let closure = lie_closure(sys, default_max_depth(sys))?;
    let origin = vec![0.0; sys.n()];
    let rank = hormander_rank(&closure, &origin);
    if rank < sys.n() {
        return Err(Error::RankDeficient { point: origin, rank, n: sys.n() });
    }
    Ok(SystemSummary { n: sys.n(), m: sys.m(), q: sys.q(), big_n: closure.dim(), rank_at_origin: rank, closure })
}
