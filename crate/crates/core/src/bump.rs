//! Smooth compactly supported product bumps `prod_k b((x_k - c_k) / r_k)` with
//! `b(t) = exp(-1 / (1 - t^2))` on `|t| < 1`.

use crate::jet::Jet;

#[derive(Clone, Debug, PartialEq)]
pub struct Bump {
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
}

impl Bump {
    pub fn new(center: Vec<f64>, radii: Vec<f64>) -> Bump {
        assert_eq!(center.len(), radii.len());
        assert!(radii.iter().all(|r| *r > 0.0));
        Bump { center, radii }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.center).zip(&self.radii).all(|((v, c), r)| ((v - c) / r).abs() < 1.0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut v = 1.0;
        for ((xk, c), r) in x.iter().zip(&self.center).zip(&self.radii) {
            let t = (xk - c) / r;
            if t.abs() >= 1.0 {
                return 0.0;
            }
            v *= (-1.0 / (1.0 - t * t)).exp();
        }
        v
    }

    /// Largest value, attained at the centre.
    pub fn max(&self) -> f64 {
        (-(self.dim() as f64)).exp()
    }

    pub fn jet(&self, x: &[Jet]) -> Jet {
        let sp = x[0].space();
        let mut acc = Jet::constant(sp, 1.0);
        for ((xk, c), r) in x.iter().zip(&self.center).zip(&self.radii) {
            let t = xk.add_scalar(-c).scale(1.0 / r);
            if t.value().abs() >= 1.0 {
                return Jet::constant(sp, 0.0);
            }
            let one_minus = t.mul(&t).scale(-1.0).add_scalar(1.0);
            acc = acc.mul(&one_minus.recip().scale(-1.0).exp());
        }
        acc
    }
}
