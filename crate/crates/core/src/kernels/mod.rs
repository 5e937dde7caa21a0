//! The singular kernel `K = X_i X_j Gamma_A`, its truncations, the operator
//! `T_{eps,R}`, the constants `c_ij` and the representation formula.

mod cij;
mod operator;
mod standard;

pub use cij::{cij_constant, cij_surface, lifted_shell_integral, CijReport, ShellIntegral, ShellProfile};
pub use operator::{representation_check, KernelOperator, PolarLpRule, RepresentationReport, RepresentationRow, TRule};
pub use standard::{
    base_shell_integral, integrability, size_constant, size_samples, smoothness_constant, smoothness_samples, IntegrabilityFit, PairSample, TripleSample,
};

use crate::error::{Error, Result};
use crate::lift::{fiber_peak, ConstantMatrix, EquivalenceCalibration, FiberIntegral, FundamentalSolution, HomNorm, Letter};
use crate::quad::adaptive_gk;

/// Piecewise linear radial profile: 0 on `[0, eps]`, 1 on `[2 eps, R]`, 0 beyond `2R`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffProfile {
    pub eps: f64,
    pub r: f64,
}

impl CutoffProfile {
    pub fn new(eps: f64, r: f64) -> Result<CutoffProfile> {
        if !(eps > 0.0 && r > eps && r.is_finite()) {
            return Err(Error::InvalidParameter(format!("cutoff needs R > eps > 0, got eps = {eps}, R = {r}")));
        }
        Ok(CutoffProfile { eps, r })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let rise = ((t - self.eps) / self.eps).clamp(0.0, 1.0);
        let fall = ((2.0 * self.r - t) / self.r).clamp(0.0, 1.0);
        rise.min(fall)
    }

    /// Kinks of the profile in increasing order.
    pub fn breakpoints(&self) -> [f64; 4] {
        let mut b = [self.eps, 2.0 * self.eps, self.r, 2.0 * self.r];
        b.sort_by(f64::total_cmp);
        b
    }
}

/// Indices, matrix and truncation of a smoothed kernel (indices are 0-based).
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothedKernelSpec {
    pub i: usize,
    pub j: usize,
    pub a: ConstantMatrix,
    pub profile: CutoffProfile,
}

impl SmoothedKernelSpec {
    pub fn new(i: usize, j: usize, a: ConstantMatrix, eps: f64, r: f64) -> Result<SmoothedKernelSpec> {
        if i >= a.m() || j >= a.m() {
            return Err(Error::InvalidParameter(format!("indices ({i}, {j}) out of range for {} fields", a.m())));
        }
        Ok(SmoothedKernelSpec { i, j, a, profile: CutoffProfile::new(eps, r)? })
    }
}

/// `K(x, y) = X_i^x X_j^x Gamma_A(x; y)`.
pub fn kernel_eval(fs: &FundamentalSolution, i: usize, j: usize, x: &[f64], y: &[f64]) -> Result<FiberIntegral> {
    fs.gamma_derivative(x, y, &[Letter::X(i), Letter::X(j)])
}

/// Smoothed kernel evaluator. The lifted distance in the cutoff is replaced by
/// `gamma2 ||u||`, an upper bound for it, so the kernel still vanishes when `d(x, y) > 2R`.
#[derive(Clone, Debug)]
pub struct SmoothedKernel {
    pub spec: SmoothedKernelSpec,
    fs: FundamentalSolution,
    norm: HomNorm,
    gamma2: f64,
}

impl SmoothedKernel {
    pub fn new(fs: &FundamentalSolution, spec: SmoothedKernelSpec, cal: &EquivalenceCalibration) -> Result<SmoothedKernel> {
        if fs.matrix() != &spec.a {
            return Err(Error::InvalidParameter("fundamental solution and kernel spec use different matrices".into()));
        }
        if fs.lift().p() != 1 {
            return Err(Error::InvalidParameter("smoothed kernels support one fiber dimension".into()));
        }
        Ok(SmoothedKernel { norm: HomNorm::new(fs.lift().weights())?, fs: fs.clone(), spec, gamma2: cal.gamma2 })
    }

    pub fn gamma2(&self) -> f64 {
        self.gamma2
    }

    pub fn solution(&self) -> &FundamentalSolution {
        &self.fs
    }

    /// Radial cutoff `psi(u) = phi(gamma2 ||u||)` on the group.
    pub fn psi(&self, u: &[f64]) -> f64 {
        self.spec.profile.eval(self.gamma2 * self.norm.eval(u))
    }

    /// `w(eta) = (y, eta)^{-1} * (x, 0)`.
    fn fiber_point(&self, x: &[f64], y: &[f64], eta: f64) -> Vec<f64> {
        let lift = self.fs.lift();
        lift.mul(&lift.inv(&lift.point(y, &[eta])), &lift.point(x, &[0.0]))
    }

    /// `K_{eps,R}(x, y) = int (X_i X_j Gamma~ . psi)((y, eta)^{-1} * (x, 0)) d eta`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let arg = |eta: f64| self.fiber_point(x, y, eta);
        let level = |eta: f64| self.gamma2 * self.norm.eval(&arg(eta));
        let (peak, _) = fiber_peak(&self.norm, &arg);
        let lowest = level(peak);
        let p = self.spec.profile;
        if lowest >= 2.0 * p.r {
            return Ok(0.0);
        }
        // the fiber coordinate has weight one, so the norm grows at least linearly in |eta|
        let find = |target: f64, dir: f64| -> f64 {
            let mut step = (target / self.gamma2).max(1e-12);
            while level(peak + dir * step) < target {
                step *= 2.0;
            }
            let (mut a, mut b) = (0.0, step);
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                if level(peak + dir * m) < target {
                    a = m;
                } else {
                    b = m;
                }
            }
            peak + dir * 0.5 * (a + b)
        };
        let mut breaks = vec![peak];
        for t in p.breakpoints() {
            if t > lowest {
                breaks.push(find(t, -1.0));
                breaks.push(find(t, 1.0));
            }
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let word = [self.spec.i, self.spec.j];
        let integrand = |eta: f64| -> f64 {
            let w = arg(eta);
            let c = p.eval(self.gamma2 * self.norm.eval(&w));
            if c == 0.0 {
                0.0
            } else {
                c * self.fs.derivative(&word, &w)
            }
        };
        let scale = adaptive_gk(|e| integrand(e).abs(), &breaks, f64::INFINITY, f64::INFINITY, 0).value;
        let r = adaptive_gk(integrand, &breaks, 1e-10 * scale, 1e-8, 4000);
        if !r.value.is_finite() {
            return Err(Error::Quadrature("smoothed kernel integral is not finite".into()));
        }
        Ok(r.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_shape() {
        let p = CutoffProfile::new(0.1, 1.0).unwrap();
        assert_eq!(p.eval(0.05), 0.0);
        assert!((p.eval(0.15) - 0.5).abs() < 1e-15);
        assert_eq!(p.eval(0.5), 1.0);
        assert!((p.eval(1.5) - 0.5).abs() < 1e-15);
        assert_eq!(p.eval(2.5), 0.0);
        assert!(CutoffProfile::new(1.0, 0.5).is_err());
        // overlapping ramps stay continuous and bounded by one
        let q = CutoffProfile::new(0.4, 0.5).unwrap();
        for k in 0..200 {
            let v = q.eval(k as f64 * 0.01);
            assert!((0.0..=1.0).contains(&v));
        }
    }
}
