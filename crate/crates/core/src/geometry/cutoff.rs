//! Cutoff functions obtained by saturating a smooth radial profile of the lifted group.

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::lift::{CarnotLift, DiffOperator, EquivalenceCalibration, HomNorm};
use crate::quad::adaptive_gk;

/// Smooth step: 1 on `[0, inner]`, 0 on `[outer, inf)`, C-infinity in between.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothStep {
    pub inner: f64,
    pub outer: f64,
}

impl SmoothStep {
    fn s(&self, t: f64) -> f64 {
        (self.outer - t) / (self.outer - self.inner)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let s = self.s(t);
        if s <= 0.0 {
            0.0
        } else if s >= 1.0 {
            1.0
        } else {
            let a = (-1.0 / s).exp();
            let b = (-1.0 / (1.0 - s)).exp();
            a / (a + b)
        }
    }

    pub fn eval_jet(&self, t: &Jet) -> Jet {
        let sp = t.space();
        let s0 = self.s(t.value());
        if s0 <= 0.0 {
            return Jet::constant(sp, 0.0);
        }
        if s0 >= 1.0 {
            return Jet::constant(sp, 1.0);
        }
        let s = t.scale(-1.0 / (self.outer - self.inner)).add_scalar(self.outer / (self.outer - self.inner));
        let a = s.recip().scale(-1.0).exp();
        let b = s.scale(-1.0).add_scalar(1.0).recip().scale(-1.0).exp();
        a.div(&a.add(&b))
    }
}

/// `phi^x(y) = |B(x, R)| int psi((x,0)^{-1} * (y, eta)) d eta` with `psi(u) = step(||u||)`,
/// `step = 1` below `R / (gamma1 kappa)` and `0` beyond `2R / (gamma1 kappa)`.
#[derive(Clone, Debug)]
pub struct CutoffFamily {
    lift: CarnotLift,
    norm: HomNorm,
    step: SmoothStep,
    radius: f64,
    h: f64,
}

impl CutoffFamily {
    pub fn new(lift: &CarnotLift, cal: &EquivalenceCalibration, radius: f64) -> Result<CutoffFamily> {
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter(format!("radius {radius} must be positive")));
        }
        if lift.p() != 1 {
            return Err(Error::InvalidParameter("cutoff saturation supports one fiber dimension".into()));
        }
        let inner = radius / (cal.gamma1 * cal.kappa);
        Ok(CutoffFamily { lift: lift.clone(), norm: HomNorm::new(lift.weights())?, step: SmoothStep { inner, outer: 2.0 * inner }, radius, h: cal.h })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// The support radius `H R` in the base metric.
    pub fn support_radius(&self) -> f64 {
        self.h * self.radius
    }

    pub fn step(&self) -> SmoothStep {
        self.step
    }

    pub fn psi(&self, u: &[f64]) -> f64 {
        self.step.eval(self.norm.eval(u))
    }

    pub fn psi_jet(&self, u: &[Jet]) -> Jet {
        let vals: Vec<f64> = u.iter().map(Jet::value).collect();
        if self.norm.eval(&vals) <= self.step.inner {
            return Jet::constant(u[0].space(), 1.0);
        }
        self.step.eval_jet(&self.norm.eval_jet(u))
    }

    /// `X_w phi^x(y) / |B(x, R)|` for a word of base field indices (applied last letter first).
    pub fn saturated(&self, x: &[f64], y: &[f64], word: &[usize]) -> Result<f64> {
        let big_n = self.lift.big_n();
        let base_inv = self.lift.inv(&self.lift.point(x, &vec![0.0; self.lift.p()]));
        let arg = |eta: f64| self.lift.mul(&base_inv, &self.lift.point(y, &[eta]));
        // psi vanishes once |eta| exceeds outer^{tau}
        let reach = self.step.outer.powi(self.lift.weights()[big_n - 1] as i32);
        let op = DiffOperator::word(self.lift.fields(), word);
        let f = |eta: f64| -> f64 {
            let w = arg(eta);
            if self.norm.eval(&w) >= self.step.outer {
                return 0.0;
            }
            if word.is_empty() {
                self.psi(&w)
            } else {
                op.apply_at(&w, |j| self.psi_jet(j))
            }
        };
        let mut breaks: Vec<f64> = (0..=8).map(|k| -reach + 2.0 * reach * k as f64 / 8.0).collect();
        breaks.dedup();
        let r = adaptive_gk(f, &breaks, 1e-13 * reach, 1e-9, 2000);
        if r.error > 1e-6 * (r.value.abs() + reach) {
            return Err(Error::Quadrature(format!("cutoff fiber integral error {:.2e}", r.error)));
        }
        Ok(r.value)
    }

    /// `X_w phi^x(y)` given the ball volume `|B(x, R)|`.
    pub fn eval(&self, x: &[f64], y: &[f64], ball_volume: f64, word: &[usize]) -> Result<f64> {
        Ok(ball_volume * self.saturated(x, y, word)?)
    }
}
