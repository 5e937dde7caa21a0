//! The smooth homogeneous norm of a lifted group and dilation-polar coordinates.

use crate::error::{Error, Result};
use crate::jet::Jet;

/// `||u|| = (sum |u_i|^{E / alpha_i})^{1/E}` with `E = 2 * (max alpha)!`.
#[derive(Clone, Debug, PartialEq)]
pub struct HomNorm {
    weights: Vec<u32>,
    big_e: u32,
    exps: Vec<i32>,
}

impl HomNorm {
    pub fn new(weights: &[u32]) -> Result<HomNorm> {
        if weights.is_empty() || weights.contains(&0) {
            return Err(Error::InvalidDilation(format!("weights {weights:?}")));
        }
        let amax = *weights.iter().max().unwrap();
        let big_e = 2 * (1..=amax).product::<u32>();
        let exps = weights.iter().map(|a| (big_e / a) as i32).collect();
        Ok(HomNorm { weights: weights.to_vec(), big_e, exps })
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    /// The even integer `E`; `||u||^E` is a polynomial.
    pub fn exponent(&self) -> u32 {
        self.big_e
    }

    pub fn power(&self, u: &[f64]) -> f64 {
        u.iter().zip(&self.exps).map(|(x, e)| x.powi(*e)).sum()
    }

    pub fn eval(&self, u: &[f64]) -> f64 {
        let p = self.power(u);
        if p == 0.0 {
            return 0.0;
        }
        // rescale first to stay clear of under/overflow for high exponents
        let m = u.iter().zip(&self.weights).map(|(x, a)| x.abs().powf(1.0 / *a as f64)).fold(0.0, f64::max);
        let q: f64 = u.iter().zip(&self.exps).zip(&self.weights).map(|((x, e), a)| (x / m.powi(*a as i32)).powi(*e)).sum();
        m * q.powf(1.0 / self.big_e as f64)
    }

    /// Jet of the norm; only meaningful away from the origin.
    pub fn eval_jet(&self, u: &[Jet]) -> Jet {
        let sp = u[0].space();
        let mut acc = Jet::constant(sp, 0.0);
        for (x, e) in u.iter().zip(&self.exps) {
            let mut p = Jet::constant(sp, 1.0);
            for _ in 0..*e {
                p = p.mul(x);
            }
            acc = acc.add(&p);
        }
        acc.powf(1.0 / self.big_e as f64)
    }
}

/// Coordinates `u = D_s theta` with `theta` on the Euclidean unit sphere.
#[derive(Clone, Debug, PartialEq)]
pub struct DilationPolar {
    weights: Vec<u32>,
}

impl DilationPolar {
    pub fn new(weights: &[u32]) -> DilationPolar {
        DilationPolar { weights: weights.to_vec() }
    }

    pub fn dilate(&self, s: f64, theta: &[f64]) -> Vec<f64> {
        theta.iter().zip(&self.weights).map(|(t, a)| t * s.powi(*a as i32)).collect()
    }

    /// `(s, theta)` with `u = D_s theta`, `|theta| = 1`; `None` at the origin.
    pub fn to_polar(&self, u: &[f64]) -> Option<(f64, Vec<f64>)> {
        if u.iter().all(|x| *x == 0.0) {
            return None;
        }
        let g = |s: f64| -> f64 { u.iter().zip(&self.weights).map(|(x, a)| (x / s.powi(*a as i32)).powi(2)).sum::<f64>() };
        let (mut lo, mut hi) = (1.0f64, 1.0f64);
        while g(lo) < 1.0 {
            lo *= 0.5;
        }
        while g(hi) > 1.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if g(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi / lo - 1.0 < 1e-15 {
                break;
            }
        }
        let s = (lo * hi).sqrt();
        let mut theta: Vec<f64> = u.iter().zip(&self.weights).map(|(x, a)| x / s.powi(*a as i32)).collect();
        let nrm = theta.iter().map(|t| t * t).sum::<f64>().sqrt();
        theta.iter_mut().for_each(|t| *t /= nrm);
        Some((s, theta))
    }

    /// `du = s^{Q-1} J(theta) ds dsigma(theta)`.
    pub fn jacobian(&self, theta: &[f64]) -> f64 {
        theta.iter().zip(&self.weights).map(|(t, a)| *a as f64 * t * t).sum()
    }

    pub fn big_q(&self) -> u32 {
        self.weights.iter().sum()
    }
}
