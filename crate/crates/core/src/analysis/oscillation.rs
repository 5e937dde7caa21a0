use rayon::prelude::*;

use super::family::{ball_members, BallFamily};
use super::maximal::{hl_maximal, CoefficientModulus};
use crate::error::{Error, Result};
use crate::geometry::{BoxDomain, GridMetric};
use crate::grid::GridFunction;
use crate::hvf::HormanderSystem;
use crate::jet::Jet;
use crate::kernels::KernelOperator;
use crate::lift::{ConstantMatrix, DiffOperator};

/// A smooth function given through its jets.
pub type JetFn<'a> = &'a (dyn Fn(&[Jet]) -> Jet + Sync);

/// One instance of a mean-oscillation bound
/// `osc_{B_r} g <= c * (maximal / k + local + vmo)`.
#[derive(Clone, Debug, PartialEq)]
pub struct OscillationRecord {
    pub center: usize,
    pub x0: usize,
    pub r: f64,
    pub k: f64,
    /// Mean oscillation of the target over `B_r(center)`.
    pub lhs: f64,
    /// Maximal-function term at `x0`, before division by `k`.
    pub maximal: f64,
    /// `k^{q/p}` times the local `L^p` term.
    pub local: f64,
    /// Coefficient-oscillation term (zero for constant coefficients).
    pub vmo: f64,
    /// The ball `B_{kr}` touched the boundary; the record is not used.
    pub skipped: bool,
}

impl OscillationRecord {
    pub fn rhs(&self) -> f64 {
        self.maximal / self.k + self.local + self.vmo
    }
}

/// Smallest `c` with `lhs <= c * rhs` over the records that were not skipped.
pub fn fitted_constant(records: &[OscillationRecord]) -> f64 {
    let used: Vec<&OscillationRecord> = records.iter().filter(|r| !r.skipped).collect();
    let lhs: Vec<f64> = used.iter().map(|r| r.lhs).collect();
    let rhs: Vec<f64> = used.iter().map(|r| r.rhs()).collect();
    crate::stats::min_constant(&lhs, &rhs)
}

#[derive(Clone, Debug)]
enum LocalTerm {
    /// `(avg_{B_kr} |h|^p)^{1/p}`.
    BallAverage(GridFunction),
    /// Pointwise values read at `x0`, already raised to `1/p`.
    AtPoint(GridFunction),
}

/// Grids needed to evaluate one family of oscillation bounds.
#[derive(Clone, Debug)]
pub struct OscillationSetup {
    /// Exponent of `k` in the local term is `q / p`.
    pub q: f64,
    pub p: f64,
    pub target: GridFunction,
    pub maximal: GridFunction,
    local: LocalTerm,
    /// Grid of the coefficient term, including `(a_R^sharp)^{1/(p beta)}` but not `k^{q/p}`.
    vmo: Option<GridFunction>,
}

fn grid_of(dom: &BoxDomain, op: &DiffOperator, u: JetFn) -> GridFunction {
    let values = (0..dom.len()).into_par_iter().map(|i| op.apply_at(&dom.coords(i), u)).collect();
    GridFunction { domain: dom.clone(), values }
}

fn second_derivatives(sys: &HormanderSystem, dom: &BoxDomain, u: JetFn) -> Vec<Vec<GridFunction>> {
    let m = sys.m();
    (0..m).map(|h| (0..m).map(|l| grid_of(dom, &DiffOperator::word(sys.fields(), &[h, l]), u)).collect()).collect()
}

fn sum_of_maximal(grids: &[Vec<GridFunction>], family: &BallFamily, power: f64) -> Result<GridFunction> {
    let dom = family.domain();
    let mut acc = GridFunction::zeros(dom);
    for g in grids.iter().flatten() {
        let mg = hl_maximal(&g.map(|v| v.abs().powf(power)), family)?;
        acc = acc.combine(1.0, &mg.map(|v| v.powf(1.0 / power)), 1.0)?;
    }
    Ok(acc)
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("exponent {p} must lie in (1, inf)")));
    }
    Ok(())
}

impl OscillationSetup {
    /// Bound for a truncated singular integral: target `Tf`, maximal term `Mf`, local term `f`.
    /// `T f` is evaluated on the grid of `f`, which must contain the reach of its support.
    pub fn singular_integral(op: &KernelOperator, f: &GridFunction, family: &BallFamily, q: f64, p: f64) -> Result<OscillationSetup> {
        check_exponent(p)?;
        let tf = op.apply_grid(&[f], &f.domain)?.pop().expect("one output");
        Ok(OscillationSetup { q, p, target: tf, maximal: hl_maximal(f, family)?, local: LocalTerm::BallAverage(f.clone()), vmo: None })
    }

    /// Bound for `X_i X_j u` in terms of `L_A u` with a constant matrix.
    pub fn constant_matrix(sys: &HormanderSystem, u: JetFn, a: &ConstantMatrix, i: usize, j: usize, family: &BallFamily, p: f64) -> Result<OscillationSetup> {
        check_exponent(p)?;
        if i >= sys.m() || j >= sys.m() || a.m() != sys.m() {
            return Err(Error::DimensionMismatch("field indices or matrix size".into()));
        }
        let dom = family.domain();
        let d2 = second_derivatives(sys, dom, u);
        let lu = grid_of(dom, &DiffOperator::l_a(sys.fields(), a), u);
        Ok(OscillationSetup {
            q: sys.q() as f64,
            p,
            target: d2[i][j].clone(),
            maximal: sum_of_maximal(&d2, family, 1.0)?,
            local: LocalTerm::BallAverage(lu),
            vmo: None,
        })
    }

    /// Bound for `X_i X_j u` with variable coefficients `a_hl(x)` given on the
    /// family grid. `big_r` selects `a_R^sharp`; `alpha` and its conjugate
    /// `beta` split the coefficient term by Holder's inequality.
    #[allow(clippy::too_many_arguments)]
    pub fn variable_coefficients(
        sys: &HormanderSystem,
        u: JetFn,
        coeffs: &[Vec<GridFunction>],
        i: usize,
        j: usize,
        family: &BallFamily,
        p: f64,
        alpha: f64,
        big_r: f64,
    ) -> Result<OscillationSetup> {
        check_exponent(p)?;
        check_exponent(alpha)?;
        let m = sys.m();
        if i >= m || j >= m || coeffs.len() != m || coeffs.iter().any(|r| r.len() != m) {
            return Err(Error::DimensionMismatch("field indices or coefficient size".into()));
        }
        let beta = alpha / (alpha - 1.0);
        let dom = family.domain();
        let d2 = second_derivatives(sys, dom, u);
        let mut lu = GridFunction::zeros(dom);
        for h in 0..m {
            for l in 0..m {
                lu = lu.combine(1.0, &coeffs[h][l].mul(&d2[h][l])?, 1.0)?;
            }
        }
        let local = hl_maximal(&lu.map(|v| v.abs().powf(p)), family)?.map(|v| v.powf(1.0 / p));
        let a_sharp = CoefficientModulus::new(coeffs, family)?.at(big_r);
        let weight = a_sharp.powf(1.0 / (p * beta));
        let vmo = sum_of_maximal(&d2, family, p * alpha)?.map(|v| weight * v);
        Ok(OscillationSetup {
            q: sys.q() as f64,
            p,
            target: d2[i][j].clone(),
            maximal: sum_of_maximal(&d2, family, 1.0)?,
            local: LocalTerm::AtPoint(local),
            vmo: Some(vmo),
        })
    }

    /// Evaluates both sides for the ball `B_r(center)`, the point `x0` in it and `k >= 2`.
    pub fn check(&self, metric: &GridMetric, center: usize, r: f64, x0: usize, k: f64) -> Result<OscillationRecord> {
        if metric.domain() != &self.target.domain {
            return Err(Error::DimensionMismatch("metric and data live on different grids".into()));
        }
        if !(k >= 2.0) {
            return Err(Error::InvalidParameter(format!("k = {k} must be at least 2")));
        }
        let mut rec = OscillationRecord { center, x0, r, k, lhs: 0.0, maximal: 0.0, local: 0.0, vmo: 0.0, skipped: true };
        let small = match ball_members(metric, center, r)? {
            Some(m) => m,
            None => return Ok(rec),
        };
        if small.binary_search(&(x0 as u32)).is_err() {
            return Err(Error::InvalidParameter(format!("node {x0} is not in the ball of radius {r} around node {center}")));
        }
        let kq = k.powf(self.q / self.p);
        let local = match &self.local {
            LocalTerm::BallAverage(h) => match ball_members(metric, center, k * r)? {
                Some(big) => (big.iter().map(|&i| h.values[i as usize].abs().powf(self.p)).sum::<f64>() / big.len() as f64).powf(1.0 / self.p),
                None => return Ok(rec),
            },
            LocalTerm::AtPoint(g) => g.values[x0],
        };
        let vals = &self.target.values;
        let mean = small.iter().map(|&i| vals[i as usize]).sum::<f64>() / small.len() as f64;
        rec.lhs = small.iter().map(|&i| (vals[i as usize] - mean).abs()).sum::<f64>() / small.len() as f64;
        rec.maximal = self.maximal.values[x0];
        rec.local = kq * local;
        rec.vmo = self.vmo.as_ref().map_or(0.0, |g| kq * g.values[x0]);
        rec.skipped = false;
        Ok(rec)
    }
}
