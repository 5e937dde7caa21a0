//! The truncated operator `T_{eps,R} f(x) = int K_{eps,R}(x, y) f(y) dy` and the representation formula.
//!
//! After the measure-preserving change of variables `u = (y, eta)^{-1} * (x, 0)`,
//! `T f(x) = int k(u) psi(u) f(pi((x, 0) * u^{-1})) du` with `k = X_i X_j Gamma~`.
//! In dilation-polar coordinates `u = D_s theta` this becomes
//! `int_S J(theta) k(theta) int phi(t) [f(pi((x,0) * (D_s theta)^{-1})) - f(x)] dt/t dtheta`
//! with `t = gamma2 s ||theta||`; subtracting `f(x)` is allowed because `k psi`
//! integrates to zero, and it makes the principal value absolutely convergent.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::BoxDomain;
use crate::grid::{GridFunction, Interpolator};
use crate::jet::Jet;
use crate::lift::{DiffOperator, DilationPolar, EquivalenceCalibration, FundamentalSolution, HomNorm};
use crate::quad::{gl_interval, SphereRule};
use crate::testfn::TestFunction;

use super::cij::cij_constant;
use super::{SmoothedKernel, SmoothedKernelSpec};

/// Resolution of the lifted polar quadrature behind `T`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TRule {
    pub n_polar: usize,
    pub n_azimuth: usize,
    /// Gauss nodes per unit of `log t` on each smooth piece of the profile.
    pub nodes_per_log: f64,
}

impl TRule {
    /// Used for whole-grid applications (operator norms).
    pub const COARSE: TRule = TRule { n_polar: 24, n_azimuth: 48, nodes_per_log: 12.0 };
    /// Used for pointwise evaluations (representation formula).
    pub const FINE: TRule = TRule { n_polar: 48, n_azimuth: 96, nodes_per_log: 32.0 };
}

/// `T_{eps,R}` for one smoothed kernel, with its quadrature nodes precomputed.
#[derive(Clone, Debug)]
pub struct KernelOperator {
    kernel: SmoothedKernel,
    rule: TRule,
    /// `(D_s theta)^{-1}` for every node, `N` numbers each.
    offsets: Vec<f64>,
    weights: Vec<f64>,
    weight_sum: f64,
}

impl KernelOperator {
    pub fn new(fs: &FundamentalSolution, spec: SmoothedKernelSpec, cal: &EquivalenceCalibration, rule: TRule) -> Result<KernelOperator> {
        let kernel = SmoothedKernel::new(fs, spec, cal)?;
        let lift = fs.lift();
        if lift.big_n() != 3 {
            return Err(Error::InvalidParameter("the polar rule for T is built on the 2-sphere (N = 3)".into()));
        }
        let norm = HomNorm::new(lift.weights())?;
        let polar = DilationPolar::new(lift.weights());
        let sphere = SphereRule::new(rule.n_polar, rule.n_azimuth);
        let p = kernel.spec.profile;
        let b = p.breakpoints();
        let mut t_nodes = Vec::new();
        for w in b.windows(2) {
            if w[1] <= w[0] {
                continue;
            }
            let (l0, l1) = (w[0].ln(), w[1].ln());
            let count = ((rule.nodes_per_log * (l1 - l0)).ceil() as usize).max(3);
            let (ls, ws) = gl_interval(count, l0, l1);
            for (l, wl) in ls.into_iter().zip(ws) {
                let t = l.exp();
                let phi = p.eval(t);
                if phi > 0.0 {
                    t_nodes.push((t, phi * wl));
                }
            }
        }
        let word = [kernel.spec.i, kernel.spec.j];
        let g2 = kernel.gamma2();
        let mut offsets = Vec::with_capacity(3 * sphere.len() * t_nodes.len());
        let mut weights = Vec::with_capacity(sphere.len() * t_nodes.len());
        for (th, wth) in sphere.nodes.iter().zip(&sphere.weights) {
            let k = fs.derivative(&word, th);
            let base = wth * polar.jacobian(th) * k;
            let nt = norm.eval(th);
            for (t, wt) in &t_nodes {
                let s = t / (g2 * nt);
                offsets.extend(lift.inv(&polar.dilate(s, th)));
                weights.push(base * wt);
            }
        }
        let weight_sum = weights.iter().sum();
        Ok(KernelOperator { kernel, rule, offsets, weights, weight_sum })
    }

    pub fn spec(&self) -> &SmoothedKernelSpec {
        &self.kernel.spec
    }

    pub fn kernel(&self) -> &SmoothedKernel {
        &self.kernel
    }

    pub fn rule(&self) -> TRule {
        self.rule
    }

    pub fn node_count(&self) -> usize {
        self.weights.len()
    }

    /// Discrete value of `int k psi du`, zero up to the sphere rule.
    pub fn weight_sum(&self) -> f64 {
        self.weight_sum
    }

    /// `T f(x)` for a function given pointwise.
    pub fn apply_at<F: Fn(&[f64]) -> f64>(&self, x: &[f64], f: F) -> f64 {
        let lift = self.kernel.solution().lift();
        let n = lift.n();
        let mut g = [0.0; 3];
        g[..n].copy_from_slice(x);
        let mut out = [0.0; 3];
        let mut acc = 0.0;
        for (k, w) in self.weights.iter().enumerate() {
            lift.mul_into(&g, &self.offsets[3 * k..3 * k + 3], &mut out);
            acc += w * f(&out[..n]);
        }
        acc - self.weight_sum * f(x)
    }

    /// `T f_k(x)` for several functions on one grid (zero outside it).
    pub fn apply_grid_at(&self, x: &[f64], ip: &Interpolator, fs: &[&GridFunction], out_vals: &mut [f64]) {
        let lift = self.kernel.solution().lift();
        let n = lift.n();
        let mut g = [0.0; 3];
        g[..n].copy_from_slice(x);
        let mut p = [0.0; 3];
        out_vals.iter_mut().for_each(|v| *v = 0.0);
        for (k, w) in self.weights.iter().enumerate() {
            lift.mul_into(&g, &self.offsets[3 * k..3 * k + 3], &mut p);
            if let Some(st) = ip.stencil(&p[..n]) {
                for (o, f) in out_vals.iter_mut().zip(fs) {
                    *o += w * st.apply(&f.values);
                }
            }
        }
        if let Some(st) = ip.stencil(x) {
            for (o, f) in out_vals.iter_mut().zip(fs) {
                *o -= self.weight_sum * st.apply(&f.values);
            }
        }
    }

    /// Bounding box of every point `x` whose quadrature samples can reach the box `[lo, hi]`.
    pub fn reach_of_box(&self, lo: &[f64], hi: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let lift = self.kernel.solution().lift();
        let n = lift.n();
        // corners and edge midpoints of the box
        let mut probes: Vec<Vec<f64>> = vec![vec![]];
        for k in 0..n {
            let vals = [lo[k], 0.5 * (lo[k] + hi[k]), hi[k]];
            probes = probes.into_iter().flat_map(|p| vals.iter().map(move |v| {
                let mut q = p.clone();
                q.push(*v);
                q
            })).collect();
        }
        let mut rlo = lo.to_vec();
        let mut rhi = hi.to_vec();
        let mut out = [0.0; 3];
        for k in 0..self.weights.len() {
            // x with (x, 0) * v = (p, eta), i.e. (x, 0) = (p, eta) * v^{-1}
            let w = lift.inv(&self.offsets[3 * k..3 * k + 3]);
            for p in &probes {
                let eta = fiber_zero(lift, p, &w);
                let mut pe = p.clone();
                pe.push(eta);
                lift.mul_into(&pe, &w, &mut out);
                for d in 0..n {
                    rlo[d] = rlo[d].min(out[d]);
                    rhi[d] = rhi[d].max(out[d]);
                }
            }
        }
        (rlo, rhi)
    }

    /// Apply to grid functions sharing one grid; the results live on `out`, which must
    /// contain every point the truncated kernel connects to the supports.
    pub fn apply_grid(&self, fs: &[&GridFunction], out: &BoxDomain) -> Result<Vec<GridFunction>> {
        let lift = self.kernel.solution().lift();
        let n = lift.n();
        if fs.is_empty() {
            return Ok(vec![]);
        }
        let dom = &fs[0].domain;
        if fs.iter().any(|f| &f.domain != dom) || dom.dim() != n || out.dim() != n {
            return Err(Error::DimensionMismatch("grid functions must share one grid of the base dimension".into()));
        }
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for f in fs {
            for idx in f.support() {
                let c = dom.coords(idx);
                for d in 0..n {
                    // a non-zero node influences the neighbouring cells through interpolation
                    lo[d] = lo[d].min(c[d] - dom.spacing(d));
                    hi[d] = hi[d].max(c[d] + dom.spacing(d));
                }
            }
        }
        if lo[0] > hi[0] {
            return Ok(fs.iter().map(|_| GridFunction::zeros(out)).collect());
        }
        let (rlo, rhi) = self.reach_of_box(&lo, &hi);
        if (0..n).any(|d| rlo[d] < out.lo[d] || rhi[d] > out.hi[d]) {
            return Err(Error::InvalidParameter(format!(
                "margin violated: T f reaches [{rlo:.3?}, {rhi:.3?}] but the output grid is [{:.3?}, {:.3?}]",
                out.lo, out.hi
            )));
        }
        let ip = Interpolator::new(dom)?;
        let rows: Vec<Vec<f64>> = (0..out.len())
            .into_par_iter()
            .map(|idx| {
                let x = out.coords(idx);
                let mut v = vec![0.0; fs.len()];
                if (0..n).all(|d| x[d] >= rlo[d] && x[d] <= rhi[d]) {
                    self.apply_grid_at(&x, &ip, fs, &mut v);
                }
                v
            })
            .collect();
        Ok((0..fs.len())
            .map(|k| GridFunction { domain: out.clone(), values: rows.iter().map(|r| r[k]).collect() })
            .collect())
    }
}

/// Quadrature for `L^p` norms on the base in dilation-polar coordinates
/// `x = delta_rho(omega)` around the origin, `dx = rho^{q-1} (sum sigma_k omega_k^2) drho domega`.
/// Nodes are log-spaced in `rho`, so the rule is fine near the origin and coarse far away.
#[derive(Clone, Debug)]
pub struct PolarLpRule {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl PolarLpRule {
    pub fn new(sigma: &[u32], rho_min: f64, rho_max: f64, n_angles: usize, nodes_per_log: f64) -> Result<PolarLpRule> {
        if sigma.len() != 2 {
            return Err(Error::InvalidParameter("polar L^p rule is implemented for n = 2".into()));
        }
        if !(rho_max > rho_min && rho_min > 0.0) {
            return Err(Error::InvalidParameter(format!("polar range [{rho_min}, {rho_max}]")));
        }
        let q: u32 = sigma.iter().sum();
        let count = ((nodes_per_log * (rho_max / rho_min).ln()).ceil() as usize).max(8);
        let (ls, wl) = gl_interval(count, rho_min.ln(), rho_max.ln());
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let da = 2.0 * std::f64::consts::PI / n_angles as f64;
        for k in 0..n_angles {
            let a = (k as f64 + 0.5) * da;
            let om = [a.cos(), a.sin()];
            let jac: f64 = sigma.iter().zip(&om).map(|(s, o)| *s as f64 * o * o).sum();
            for (l, w) in ls.iter().zip(&wl) {
                let rho = l.exp();
                points.push(om.iter().zip(sigma).map(|(o, s)| o * rho.powi(*s as i32)).collect());
                // drho = rho dlog rho
                weights.push(w * rho.powi(q as i32) * jac * da);
            }
        }
        Ok(PolarLpRule { points, weights })
    }

    /// Smallest polar radius whose dilation ball contains the box `[lo, hi]`.
    pub fn covering_radius(sigma: &[u32], lo: &[f64], hi: &[f64]) -> f64 {
        let polar = DilationPolar::new(sigma);
        let mut r: f64 = 0.0;
        for c in 0..4 {
            let x = [if c & 1 == 0 { lo[0] } else { hi[0] }, if c & 2 == 0 { lo[1] } else { hi[1] }];
            if let Some((s, _)) = polar.to_polar(&x) {
                r = r.max(s);
            }
        }
        r
    }

    pub fn lp_norm(&self, values: &[f64], p: f64) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| w * v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

impl KernelOperator {
    /// `||T f||_p / ||f||_p` for each function and exponent (indexed `[f][p]`), both norms taken
    /// with the same polar rule around the origin, which extends past the reach of `T`.
    pub fn lp_ratios(&self, fs: &[&GridFunction], ps: &[f64], n_angles: usize, nodes_per_log: f64) -> Result<Vec<Vec<f64>>> {
        if fs.is_empty() {
            return Ok(vec![]);
        }
        let dom = &fs[0].domain;
        if fs.iter().any(|f| &f.domain != dom) {
            return Err(Error::DimensionMismatch("grid functions must share one grid".into()));
        }
        let sigma = self.kernel.solution().lift().base().sigma().to_vec();
        let (rlo, rhi) = self.reach_of_box(&dom.lo, &dom.hi);
        let rho_max = 1.05 * PolarLpRule::covering_radius(&sigma, &rlo, &rhi);
        let inner = PolarLpRule::covering_radius(&sigma, &dom.lo, &dom.hi);
        let rule = PolarLpRule::new(&sigma, 1e-3 * inner, rho_max, n_angles, nodes_per_log)?;
        let ip = Interpolator::new(dom)?;
        let tvals: Vec<Vec<f64>> = rule
            .points
            .par_iter()
            .map(|x| {
                let mut v = vec![0.0; fs.len()];
                self.apply_grid_at(x, &ip, fs, &mut v);
                v
            })
            .collect();
        Ok(fs
            .iter()
            .enumerate()
            .map(|(k, f)| {
                let fv: Vec<f64> = rule.points.iter().map(|x| f.at(x)).collect();
                let tv: Vec<f64> = tvals.iter().map(|r| r[k]).collect();
                ps.iter().map(|p| rule.lp_norm(&tv, *p) / rule.lp_norm(&fv, *p)).collect()
            })
            .collect())
    }
}

/// Fiber coordinate `eta` such that `(p, eta) * w` has zero fiber part (one fiber dimension).
fn fiber_zero(lift: &crate::lift::CarnotLift, p: &[f64], w: &[f64]) -> f64 {
    let n = lift.n();
    let fiber = |eta: f64| {
        let mut pe = p.to_vec();
        pe.push(eta);
        lift.mul(&pe, w)[n]
    };
    let mut eta = -w[n];
    for _ in 0..20 {
        let f0 = fiber(eta);
        if f0.abs() < 1e-13 {
            break;
        }
        let h = 1e-6 * (1.0 + eta.abs());
        let d = (fiber(eta + h) - fiber(eta - h)) / (2.0 * h);
        if d == 0.0 {
            break;
        }
        eta -= f0 / d;
    }
    eta
}

/// One rung of the representation ladder.
#[derive(Clone, Debug, PartialEq)]
pub struct RepresentationRow {
    pub eps: f64,
    pub r: f64,
    /// `max_x |X_i X_j u - (-T(L u) - c_ij L u)|`.
    pub residual: f64,
    /// Residual divided by `sup |X_i X_j u|`.
    pub relative: f64,
    /// The same with `+ c_ij L u` in place of `- c_ij L u`.
    pub relative_plus: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RepresentationReport {
    pub i: usize,
    pub j: usize,
    pub cij: f64,
    pub sup_target: f64,
    pub points: Vec<Vec<f64>>,
    pub rows: Vec<RepresentationRow>,
}

impl RepresentationReport {
    /// Residuals decrease along the ladder, allowing 10% noise between rungs.
    pub fn decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].residual <= 1.1 * w[0].residual)
    }

    pub fn final_relative(&self) -> f64 {
        self.rows.last().map(|r| r.relative).unwrap_or(f64::NAN)
    }
}

/// Compare `X_i X_j u` with `-T_{eps,R}(L_A u) - c_ij L_A u` at `points` along a ladder of `(eps, R)`.
/// `L_A u` is tabulated on a grid of spacing `h` over the support of `u`.
pub fn representation_check(
    fs: &FundamentalSolution,
    cal: &EquivalenceCalibration,
    u: &TestFunction,
    i: usize,
    j: usize,
    ladder: &[(f64, f64)],
    points: &[Vec<f64>],
    rule: TRule,
    h: f64,
) -> Result<RepresentationReport> {
    let base = fs.lift().base();
    let n = base.n();
    if u.dim() != n {
        return Err(Error::DimensionMismatch("test function dimension".into()));
    }
    let l_a = DiffOperator::l_a(base.fields(), fs.matrix());
    let xij = DiffOperator::word(base.fields(), &[i, j]);
    let lo: Vec<f64> = (0..n).map(|k| u.bump.center[k] - u.bump.radii[k]).collect();
    let hi: Vec<f64> = (0..n).map(|k| u.bump.center[k] + u.bump.radii[k]).collect();
    let counts: Vec<usize> = (0..n).map(|k| ((hi[k] - lo[k]) / h).ceil() as usize + 1).collect();
    let dom = BoxDomain::new(lo.clone(), hi.clone(), counts)?;
    let lu = GridFunction::from_fn(&dom, |x| l_a.apply_at(x, |jt| u.jet(jt)));
    let coarse = BoxDomain::new(lo, hi, vec![101; n])?;
    let sup_target = (0..coarse.len())
        .map(|idx| xij.apply_at(&coarse.coords(idx), |jt| u.jet(jt)).abs())
        .fold(0.0, f64::max);
    let cij = cij_constant(fs, i, j)?.surface;
    let targets: Vec<(f64, f64)> = points
        .iter()
        .map(|x| {
            let lx = l_a.apply_at(x, |jt: &[Jet]| u.jet(jt));
            (xij.apply_at(x, |jt| u.jet(jt)), lx)
        })
        .collect();
    let ip = Interpolator::new(&dom)?;
    let mut rows = Vec::new();
    for &(eps, r) in ladder {
        let spec = SmoothedKernelSpec::new(i, j, fs.matrix().clone(), eps, r)?;
        let op = KernelOperator::new(fs, spec, cal, rule)?;
        let (mut worst, mut worst_plus) = (0.0f64, 0.0f64);
        for (x, (target, lx)) in points.iter().zip(&targets) {
            let mut t = [0.0];
            op.apply_grid_at(x, &ip, &[&lu], &mut t);
            worst = worst.max((target - (-t[0] - cij * lx)).abs());
            worst_plus = worst_plus.max((target - (-t[0] + cij * lx)).abs());
        }
        rows.push(RepresentationRow { eps, r, residual: worst, relative: worst / sup_target, relative_plus: worst_plus / sup_target });
    }
    Ok(RepresentationReport { i, j, cij, sup_target, points: points.to_vec(), rows })
}
