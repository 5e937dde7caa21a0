//! Sparse multivariate polynomials with exact rational coefficients.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::Rational64;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::jet::Jet;

pub type Coeff = Rational64;

/// Exponent vector of a monomial.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn one(n: usize) -> Self {
        Monomial(vec![0; n])
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Weighted degree with respect to dilation exponents.
    pub fn weight(&self, sigma: &[u32]) -> u32 {
        self.0.iter().zip(sigma).map(|(e, s)| e * s).sum()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .filter(|(e, _)| **e > 0)
            .map(|(e, v)| v.powi(*e as i32))
            .product()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

/// A polynomial in `nvars` real variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Monomial, Coeff>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: Coeff) -> Self {
        Self::term(nvars, Monomial::one(nvars), c)
    }

    pub fn int(nvars: usize, c: i64) -> Self {
        Self::constant(nvars, Coeff::from_integer(c))
    }

    /// The coordinate function x_k (0-based).
    pub fn var(nvars: usize, k: usize) -> Self {
        let mut e = vec![0; nvars];
        e[k] = 1;
        Self::term(nvars, Monomial(e), Coeff::one())
    }

    pub fn term(nvars: usize, m: Monomial, c: Coeff) -> Self {
        assert_eq!(m.nvars(), nvars, "monomial arity");
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Poly { nvars, terms }
    }

    pub fn from_terms(nvars: usize, it: impl IntoIterator<Item = (Vec<u32>, Coeff)>) -> Self {
        let mut p = Poly::zero(nvars);
        for (e, c) in it {
            p.add_term(Monomial(e), c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Coeff)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn add_term(&mut self, m: Monomial, c: Coeff) {
        assert_eq!(m.nvars(), self.nvars, "monomial arity");
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: Coeff) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.nvars);
        }
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    /// Partial derivative with respect to x_k.
    pub fn derivative(&self, k: usize) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (m, c) in &self.terms {
            let e = m.0[k];
            if e == 0 {
                continue;
            }
            let mut nm = m.clone();
            nm.0[k] -= 1;
            out.add_term(nm, c * Coeff::from_integer(e as i64));
        }
        out
    }

    /// True when every monomial has the same weighted degree `w`.
    pub fn is_weighted_homogeneous(&self, sigma: &[u32], w: u32) -> bool {
        self.terms.keys().all(|m| m.weight(sigma) == w)
    }

    pub fn depends_only_on(&self, vars: std::ops::Range<usize>) -> bool {
        self.terms
            .keys()
            .all(|m| m.0.iter().enumerate().all(|(i, e)| *e == 0 || vars.contains(&i)))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.nvars);
        self.terms
            .iter()
            .map(|(m, c)| c.to_f64().unwrap_or(f64::NAN) * m.eval(x))
            .sum()
    }

    pub fn eval_rational(&self, x: &[Coeff]) -> Coeff {
        let mut acc = Coeff::zero();
        for (m, c) in &self.terms {
            let mut t = *c;
            for (e, v) in m.0.iter().zip(x) {
                for _ in 0..*e {
                    t *= *v;
                }
            }
            acc += t;
        }
        acc
    }

    /// Evaluate on Taylor jets, giving the jet of the composition.
    pub fn eval_jet(&self, x: &[Jet]) -> Jet {
        let space = x[0].space();
        let mut acc = Jet::constant(space, 0.0);
        let maxdeg: Vec<u32> = (0..self.nvars)
            .map(|k| self.terms.keys().map(|m| m.0[k]).max().unwrap_or(0))
            .collect();
        let powers: Vec<Vec<Jet>> = (0..self.nvars)
            .map(|k| {
                let mut v = vec![Jet::constant(space, 1.0)];
                for i in 1..=maxdeg[k] as usize {
                    let next = v[i - 1].mul(&x[k]);
                    v.push(next);
                }
                v
            })
            .collect();
        for (m, c) in &self.terms {
            let mut t = Jet::constant(space, c.to_f64().unwrap_or(f64::NAN));
            for (k, e) in m.0.iter().enumerate() {
                if *e > 0 {
                    t = t.mul(&powers[k][*e as usize]);
                }
            }
            acc = acc.add(&t);
        }
        acc
    }

    /// Substitute polynomials for each variable.
    pub fn compose(&self, subs: &[Poly]) -> Poly {
        assert_eq!(subs.len(), self.nvars);
        let nv = subs.first().map(|p| p.nvars).unwrap_or(0);
        let mut acc = Poly::zero(nv);
        for (m, c) in &self.terms {
            let mut t = Poly::constant(nv, *c);
            for (k, e) in m.0.iter().enumerate() {
                for _ in 0..*e {
                    t = &t * &subs[k];
                }
            }
            acc = &acc + &t;
        }
        acc
    }

    /// Embed into a larger variable set, placing variable i at index `offset + i`.
    pub fn embed(&self, nvars: usize, offset: usize) -> Poly {
        let mut out = Poly::zero(nvars);
        for (m, c) in &self.terms {
            let mut e = vec![0; nvars];
            e[offset..offset + self.nvars].copy_from_slice(&m.0);
            out.add_term(Monomial(e), *c);
        }
        out
    }

    pub fn compile(&self) -> CompiledPoly {
        CompiledPoly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| {
                    let f: Vec<(usize, i32)> = m
                        .0
                        .iter()
                        .enumerate()
                        .filter(|(_, e)| **e > 0)
                        .map(|(i, e)| (i, *e as i32))
                        .collect();
                    (c.to_f64().unwrap_or(f64::NAN), f)
                })
                .collect(),
        }
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), *c);
        }
        out
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &(-rhs)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-Coeff::one())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = Poly::zero(self.nvars);
        for (a, ca) in &self.terms {
            for (b, cb) in &rhs.terms {
                out.add_term(a.mul(b), ca * cb);
            }
        }
        out
    }
}

fn fmt_coeff(c: &Coeff) -> String {
    if c.is_integer() {
        c.to_integer().abs().to_string()
    } else {
        format!("{}/{}", c.numer().abs(), c.denom())
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            let vars: Vec<String> = m
                .0
                .iter()
                .enumerate()
                .filter(|(_, e)| **e > 0)
                .map(|(k, e)| if *e == 1 { format!("x{}", k + 1) } else { format!("x{}^{}", k + 1, e) })
                .collect();
            let unit = c.abs().is_one();
            if vars.is_empty() {
                write!(f, "{}", fmt_coeff(c))?;
            } else if unit {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{}*{}", fmt_coeff(c), vars.join("*"))?;
            }
        }
        Ok(())
    }
}

/// Floating-point evaluation form of a polynomial.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    terms: Vec<(f64, Vec<(usize, i32)>)>,
}

impl CompiledPoly {
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for (c, f) in &self.terms {
            let mut t = *c;
            for &(i, e) in f {
                t *= if e == 1 { x[i] } else { x[i].powi(e) };
            }
            s += t;
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(a: i64) -> Coeff {
        Coeff::from_integer(a)
    }

    #[test]
    fn arithmetic_and_derivative() {
        let x = Poly::var(2, 0);
        let y = Poly::var(2, 1);
        let p = &(&x * &x) + &(&y.scale(r(3)) * &x);
        assert_eq!(p.derivative(0), &x.scale(r(2)) + &y.scale(r(3)));
        assert_eq!(p.derivative(1), x.scale(r(3)));
        assert!((p.eval(&[2.0, 1.0]) - 10.0).abs() < 1e-14);
        let q = &p - &p;
        assert!(q.is_zero());
    }

    #[test]
    fn weighted_homogeneity() {
        let x = Poly::var(2, 0);
        let sq = &x * &x;
        assert!(sq.is_weighted_homogeneous(&[1, 2], 2));
        assert!(!(&sq + &x).is_weighted_homogeneous(&[1, 2], 2));
    }

    #[test]
    fn compose_and_compile_agree() {
        let x = Poly::var(2, 0);
        let y = Poly::var(2, 1);
        let p = &(&x * &y) + &Poly::int(2, 5);
        let subs = [&x + &y, &x - &y];
        let c = p.compose(&subs);
        let pt = [0.3, -1.7];
        let direct = p.eval(&[pt[0] + pt[1], pt[0] - pt[1]]);
        assert!((c.eval(&pt) - direct).abs() < 1e-12);
        assert!((c.compile().eval(&pt) - direct).abs() < 1e-12);
        assert_eq!(format!("{}", Poly::int(1, 0)), "0");
    }
}
