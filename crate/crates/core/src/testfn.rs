//! Smooth compactly supported test functions with exact derivatives through jets.

use crate::bump::Bump;
use crate::jet::Jet;

/// `bump(x) * (c0 + sum_k a_k x_k + cos(k.x + phase))`.
#[derive(Clone, Debug, PartialEq)]
pub struct TestFunction {
    pub bump: Bump,
    pub offset: f64,
    pub linear: Vec<f64>,
    pub wave: Vec<f64>,
    pub phase: f64,
    pub amplitude: f64,
}

impl TestFunction {
    pub fn bump(bump: Bump) -> TestFunction {
        let n = bump.dim();
        TestFunction { bump, offset: 1.0, linear: vec![0.0; n], wave: vec![0.0; n], phase: 0.0, amplitude: 0.0 }
    }

    pub fn modulated(bump: Bump, wave: Vec<f64>, phase: f64) -> TestFunction {
        let n = bump.dim();
        TestFunction { bump, offset: 0.0, linear: vec![0.0; n], wave, phase, amplitude: 1.0 }
    }

    pub fn tilted(bump: Bump, linear: Vec<f64>) -> TestFunction {
        TestFunction { offset: 1.0, linear, ..TestFunction::bump(bump) }
    }

    pub fn dim(&self) -> usize {
        self.bump.dim()
    }

    fn modulation(&self, x: &[f64]) -> f64 {
        let lin: f64 = self.linear.iter().zip(x).map(|(a, v)| a * v).sum();
        let arg: f64 = self.wave.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + self.phase;
        self.offset + lin + self.amplitude * arg.cos()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let b = self.bump.eval(x);
        if b == 0.0 {
            0.0
        } else {
            b * self.modulation(x)
        }
    }

    pub fn jet(&self, x: &[Jet]) -> Jet {
        let sp = x[0].space();
        let b = self.bump.jet(x);
        let mut m = Jet::constant(sp, self.offset);
        for (a, v) in self.linear.iter().zip(x) {
            m = m.add(&v.scale(*a));
        }
        let mut arg = Jet::constant(sp, self.phase);
        for (a, v) in self.wave.iter().zip(x) {
            arg = arg.add(&v.scale(*a));
        }
        m = m.add(&arg.cos().scale(self.amplitude));
        b.mul(&m)
    }

    /// The same function composed with the dilation `x -> delta_lambda x`.
    pub fn dilated(&self, sigma: &[u32], lambda: f64) -> TestFunction {
        // f(delta_lambda x): bump centre and radii scale by lambda^{-sigma}, linear and wave terms by lambda^{sigma}
        let s: Vec<f64> = sigma.iter().map(|e| lambda.powi(*e as i32)).collect();
        TestFunction {
            bump: Bump::new(self.bump.center.iter().zip(&s).map(|(c, k)| c / k).collect(), self.bump.radii.iter().zip(&s).map(|(r, k)| r / k).collect()),
            offset: self.offset,
            linear: self.linear.iter().zip(&s).map(|(a, k)| a * k).collect(),
            wave: self.wave.iter().zip(&s).map(|(a, k)| a * k).collect(),
            phase: self.phase,
            amplitude: self.amplitude,
        }
    }
}

/// Five test functions on the plane used across the experiments.
pub fn planar_family() -> Vec<TestFunction> {
    vec![
        TestFunction::bump(Bump::new(vec![0.0, 0.0], vec![1.0, 1.0])),
        TestFunction::bump(Bump::new(vec![0.2, -0.1], vec![0.6, 0.9])),
        TestFunction::modulated(Bump::new(vec![0.0, 0.0], vec![1.0, 1.0]), vec![3.0, 2.0], 0.3),
        TestFunction::tilted(Bump::new(vec![-0.1, 0.2], vec![0.8, 0.7]), vec![1.5, -2.0]),
        TestFunction::modulated(Bump::new(vec![0.1, 0.0], vec![0.9, 0.8]), vec![-2.0, 5.0], 1.1),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::jet_space;

    #[test]
    fn jet_matches_values_and_dilation() {
        for f in planar_family() {
            let x = [0.13, -0.21];
            let j = f.jet(&Jet::point(jet_space(2, 1), &x));
            assert!((j.value() - f.eval(&x)).abs() < 1e-14);
            let h = 1e-6;
            let fd = (f.eval(&[x[0] + h, x[1]]) - f.eval(&[x[0] - h, x[1]])) / (2.0 * h);
            assert!((j.partial(&[1, 0]) - fd).abs() < 1e-7);
            let g = f.dilated(&[1, 2], 2.0);
            let y = [0.05, -0.03];
            assert!((g.eval(&y) - f.eval(&[0.1, -0.12])).abs() < 1e-14);
        }
    }
}
