//! Standard estimates, shell bounds and local integrability of the kernels.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{GridMetric, SourceView};
use crate::lift::{fiber_peak, FundamentalSolution, HomNorm};
use crate::quad::gl_interval;
use crate::stats::{linear_fit, LinearFit};

use super::{kernel_eval, SmoothedKernel};

/// One pair for the size estimate `|K(x, y)| |B(x, d(x, y))| <= A`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairSample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub d: f64,
    pub ball: f64,
    pub k: f64,
}

/// One triple for the smoothness estimate
/// `|K(x, y) - K(x0, y)| <= B (d(x0, x) / d(x0, y)) / |B(x0, d(x0, y))|`.
#[derive(Clone, Debug, PartialEq)]
pub struct TripleSample {
    pub x0: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub d0x: f64,
    pub d0y: f64,
    pub ball: f64,
    pub diff: f64,
}

fn candidates(view: &SourceView, len: usize, lo: f64, hi: f64) -> Vec<usize> {
    (0..len).filter(|&i| {
        let d = view.dist(i);
        d >= lo && d <= hi
    }).collect()
}

/// Random pairs `(x, y)` with `x` among `sources` and `dmin <= d(x, y) <= dmax`.
/// Pairs whose ball is clipped by the grid are skipped.
pub fn size_samples(fs: &FundamentalSolution, i: usize, j: usize, metric: &GridMetric, sources: &[usize], per_source: usize, dmin: f64, dmax: f64, seed: u64) -> Result<Vec<PairSample>> {
    let dom = metric.domain();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for &s in sources {
        let view = metric.from_node(s, 1.05 * dmax)?;
        let mut c = candidates(&view, dom.len(), dmin, dmax);
        c.shuffle(&mut rng);
        let x = dom.coords(s);
        let mut taken = 0;
        for y_idx in c {
            if taken == per_source {
                break;
            }
            let d = view.dist(y_idx);
            let ball = match view.ball_volume(d) {
                Ok(b) => b,
                Err(Error::Clipped { .. }) => continue,
                Err(e) => return Err(e),
            };
            let y = dom.coords(y_idx);
            let k = kernel_eval(fs, i, j, &x, &y)?.value;
            out.push(PairSample { x: x.clone(), y, d, ball, k });
            taken += 1;
        }
    }
    Ok(out)
}

/// Smallest `A` with `|K| |B| <= A` over the sample.
pub fn size_constant(samples: &[PairSample]) -> f64 {
    samples.iter().map(|s| s.k.abs() * s.ball).fold(0.0, f64::max)
}

/// Random triples with `d(x0, y) >= 2 d(x0, x) > 0` and `dmin <= d(x0, y) <= dmax`.
pub fn smoothness_samples(fs: &FundamentalSolution, i: usize, j: usize, metric: &GridMetric, sources: &[usize], per_source: usize, dmin: f64, dmax: f64, seed: u64) -> Result<Vec<TripleSample>> {
    let dom = metric.domain();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for &s in sources {
        let view = metric.from_node(s, 1.05 * dmax)?;
        let x0 = dom.coords(s);
        let mut ys = candidates(&view, dom.len(), dmin, dmax);
        ys.shuffle(&mut rng);
        let mut taken = 0;
        for y_idx in ys {
            if taken == per_source {
                break;
            }
            let d0y = view.dist(y_idx);
            let ball = match view.ball_volume(d0y) {
                Ok(b) => b,
                Err(Error::Clipped { .. }) => continue,
                Err(e) => return Err(e),
            };
            let near = candidates(&view, dom.len(), 1e-12, 0.5 * d0y);
            let Some(&x_idx) = near.choose(&mut rng) else { continue };
            if x_idx == s {
                continue;
            }
            let x = dom.coords(x_idx);
            let y = dom.coords(y_idx);
            let diff = (kernel_eval(fs, i, j, &x, &y)?.value - kernel_eval(fs, i, j, &x0, &y)?.value).abs();
            out.push(TripleSample { x0: x0.clone(), x, y, d0x: view.dist(x_idx), d0y, ball, diff });
            taken += 1;
        }
    }
    Ok(out)
}

/// Smallest `B` over the sample.
pub fn smoothness_constant(samples: &[TripleSample]) -> f64 {
    samples.iter().map(|s| s.diff * s.ball * s.d0y / s.d0x).fold(0.0, f64::max)
}

/// `|int_{r1 < d(z, y) < r2} K(z, y) dy|` as a grid sum. The node of `z` is excluded and
/// each node is summed together with its mirror image through `z`.
pub fn base_shell_integral(fs: &FundamentalSolution, i: usize, j: usize, metric: &GridMetric, z: usize, r1: f64, r2: f64) -> Result<f64> {
    if !(r2 >= r1 && r1 >= 0.0) {
        return Err(Error::InvalidParameter(format!("shell needs r2 >= r1 >= 0, got {r1}, {r2}")));
    }
    if r1 == r2 {
        return Ok(0.0);
    }
    let dom = metric.domain();
    let view = metric.from_node(z, 1.05 * r2)?;
    let zc = dom.coords(z);
    let zm = dom.multi_index(z);
    let inside = |idx: usize| idx != z && {
        let d = view.dist(idx);
        d > r1 && d < r2
    };
    let k_at = |idx: usize| kernel_eval(fs, i, j, &zc, &dom.coords(idx)).map(|f| f.value);
    let mut total = 0.0;
    for idx in 0..dom.len() {
        if !inside(idx) {
            continue;
        }
        let mi = dom.multi_index(idx);
        let mirror: Option<usize> = (0..dom.dim())
            .map(|k| {
                let m = 2 * zm[k] as isize - mi[k] as isize;
                (m >= 0 && (m as usize) < dom.counts[k]).then_some(m as usize)
            })
            .collect::<Option<Vec<usize>>>()
            .map(|m| dom.flat_index(&m));
        match mirror {
            Some(m) if inside(m) => {
                if idx < m {
                    total += k_at(idx)? + k_at(m)?;
                }
            }
            _ => total += k_at(idx)?,
        }
    }
    Ok(total.abs() * dom.cell_volume())
}

/// `int |K_{eps,R}(x, y)| dy` over an `(eps, R)` family and its fit against `log(R / eps)`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegrabilityFit {
    pub ratios: Vec<f64>,
    pub integrals: Vec<f64>,
    pub fit: LinearFit,
}

impl IntegrabilityFit {
    pub fn new(ratios: Vec<f64>, integrals: Vec<f64>) -> IntegrabilityFit {
        let logs: Vec<f64> = ratios.iter().map(|r| r.ln()).collect();
        let fit = linear_fit(&logs, &integrals);
        IntegrabilityFit { ratios, integrals, fit }
    }
}

/// `int |K_{eps,R}(x, y)| dy` (or `int |K_{eps,R}(y, x)| dy` when `transpose`) in the
/// base polar coordinates `y = x + delta_s(e)`, `dy = s^{q-1} (sum sigma_k e_k^2) ds de`.
/// Along each direction the radius runs up to where the kernel vanishes identically.
pub fn integrability(kernel: &SmoothedKernel, x: &[f64], transpose: bool, n_angles: usize, nodes_per_log: f64) -> Result<f64> {
    let fs = kernel.solution();
    let lift = fs.lift();
    if lift.n() != 2 {
        return Err(Error::InvalidParameter("base polar coordinates are implemented for n = 2".into()));
    }
    let sigma = lift.base().sigma().to_vec();
    let q: u32 = sigma.iter().sum();
    let norm = HomNorm::new(lift.weights())?;
    let p = kernel.spec.profile;
    // smallest lifted level over the fiber; the kernel vanishes where it exceeds 2R
    let level = |a: &[f64], b: &[f64]| -> f64 {
        let arg = |eta: f64| lift.mul(&lift.inv(&lift.point(b, &[eta])), &lift.point(a, &[0.0]));
        kernel.gamma2() * fiber_peak(&norm, &arg).1
    };
    let pair = |y: &[f64]| if transpose { (y.to_vec(), x.to_vec()) } else { (x.to_vec(), y.to_vec()) };
    let s_min = p.eps * 1e-3;
    let mut total = 0.0;
    for k in 0..n_angles {
        let a = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / n_angles as f64;
        let e = [a.cos(), a.sin()];
        let y_at = |s: f64| -> Vec<f64> { (0..2).map(|d| x[d] + s.powi(sigma[d] as i32) * e[d]).collect() };
        let lev = |s: f64| {
            let (u, v) = pair(&y_at(s));
            level(&u, &v)
        };
        let mut hi = 2.0 * p.r;
        while lev(hi) < 2.0 * p.r {
            hi *= 2.0;
            if hi > 1e6 {
                return Err(Error::Quadrature("kernel support does not close along a ray".into()));
            }
        }
        let mut lo = 0.0;
        for _ in 0..60 {
            let m = 0.5 * (lo + hi);
            if lev(m) < 2.0 * p.r {
                lo = m;
            } else {
                hi = m;
            }
        }
        let s_max = hi;
        let count = ((nodes_per_log * (s_max / s_min).ln()).ceil() as usize).max(8);
        let (ls, wl) = gl_interval(count, s_min.ln(), s_max.ln());
        let jac = sigma.iter().zip(&e).map(|(sg, v)| *sg as f64 * v * v).sum::<f64>();
        let mut ray = 0.0;
        for (l, w) in ls.iter().zip(&wl) {
            let s = l.exp();
            let (u, v) = pair(&y_at(s));
            ray += w * s.powi(q as i32) * kernel.eval(&u, &v)?.abs();
        }
        total += ray * jac * 2.0 * std::f64::consts::PI / n_angles as f64;
    }
    Ok(total)
}
