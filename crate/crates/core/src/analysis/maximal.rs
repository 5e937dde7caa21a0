use rayon::prelude::*;

use super::family::BallFamily;
use crate::error::{Error, Result};
use crate::grid::GridFunction;

fn check_domain(f: &GridFunction, family: &BallFamily) -> Result<()> {
    if &f.domain != family.domain() {
        return Err(Error::DimensionMismatch("function and ball family live on different grids".into()));
    }
    Ok(())
}

fn mean(values: &[f64], members: &[u32]) -> f64 {
    members.iter().map(|&i| values[i as usize]).sum::<f64>() / members.len() as f64
}

fn mean_oscillation(values: &[f64], members: &[u32]) -> f64 {
    let m = mean(values, members);
    members.iter().map(|&i| (values[i as usize] - m).abs()).sum::<f64>() / members.len() as f64
}

/// Spreads one number per ball to its members, keeping the maximum.
fn scatter_max(family: &BallFamily, per_ball: &[f64], init: Vec<f64>) -> Vec<f64> {
    let mut out = init;
    for (b, v) in family.balls().iter().zip(per_ball) {
        for &m in &b.members {
            let o = &mut out[m as usize];
            if *v > *o {
                *o = *v;
            }
        }
    }
    out
}

/// Uncentred Hardy-Littlewood maximal function over the family. Nodes start
/// from `|f(x)|`, the limit of averages over shrinking balls.
pub fn hl_maximal(f: &GridFunction, family: &BallFamily) -> Result<GridFunction> {
    check_domain(f, family)?;
    let abs: Vec<f64> = f.values.iter().map(|v| v.abs()).collect();
    let avgs: Vec<f64> = family.balls().par_iter().map(|b| mean(&abs, &b.members)).collect();
    let values = scatter_max(family, &avgs, abs.clone());
    Ok(GridFunction { domain: f.domain.clone(), values })
}

/// Sharp maximal function: supremum of mean oscillations over family balls
/// containing each node.
pub fn sharp_maximal(f: &GridFunction, family: &BallFamily) -> Result<GridFunction> {
    check_domain(f, family)?;
    let osc: Vec<f64> = family.balls().par_iter().map(|b| mean_oscillation(&f.values, &b.members)).collect();
    let values = scatter_max(family, &osc, vec![0.0; f.len()]);
    Ok(GridFunction { domain: f.domain.clone(), values })
}

/// Value at one node of the maximal function of `f`, without building the whole grid.
pub fn hl_maximal_at(f: &GridFunction, family: &BallFamily, node: usize) -> Result<f64> {
    check_domain(f, family)?;
    let n = node as u32;
    let best = family
        .balls()
        .iter()
        .filter(|b| b.members.binary_search(&n).is_ok())
        .map(|b| b.members.iter().map(|&i| f.values[i as usize].abs()).sum::<f64>() / b.members.len() as f64)
        .fold(f.values[node].abs(), f64::max);
    Ok(best)
}

/// The VMO modulus of one function on the radii of a family.
#[derive(Clone, Debug, PartialEq)]
pub struct VmoReport {
    pub radii: Vec<f64>,
    /// Largest mean oscillation over balls of exactly this radius.
    pub level_oscillation: Vec<f64>,
    /// Running maximum of `level_oscillation`: the modulus at each radius.
    pub eta: Vec<f64>,
}

impl VmoReport {
    /// Modulus at an arbitrary radius: the value at the largest family radius not above `r`.
    pub fn at(&self, r: f64) -> f64 {
        let k = self.radii.partition_point(|v| *v <= r * (1.0 + 1e-12));
        if k == 0 {
            0.0
        } else {
            self.eta[k - 1]
        }
    }

    /// Smallest `c` with `eta(r) <= c * r * gradient_sup` on every radius.
    pub fn lipschitz_constant(&self, gradient_sup: f64) -> f64 {
        self.radii
            .iter()
            .zip(&self.eta)
            .map(|(r, e)| if *e == 0.0 { 0.0 } else { e / (r * gradient_sup) })
            .fold(0.0, f64::max)
    }
}

pub fn vmo_modulus(f: &GridFunction, family: &BallFamily) -> Result<VmoReport> {
    check_domain(f, family)?;
    let osc: Vec<f64> = family.balls().par_iter().map(|b| mean_oscillation(&f.values, &b.members)).collect();
    let mut level = vec![0.0f64; family.radii().len()];
    for (b, v) in family.balls().iter().zip(&osc) {
        level[b.level] = level[b.level].max(*v);
    }
    let mut eta = level.clone();
    for k in 1..eta.len() {
        eta[k] = eta[k].max(eta[k - 1]);
    }
    Ok(VmoReport { radii: family.radii().to_vec(), level_oscillation: level, eta })
}

/// Modulus of a coefficient matrix: one report per entry and the maximum over entries.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientModulus {
    pub entries: Vec<Vec<VmoReport>>,
    pub radii: Vec<f64>,
    pub a_sharp: Vec<f64>,
}

impl CoefficientModulus {
    pub fn new(coeffs: &[Vec<GridFunction>], family: &BallFamily) -> Result<CoefficientModulus> {
        let entries = coeffs
            .iter()
            .map(|row| row.iter().map(|a| vmo_modulus(a, family)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let radii = family.radii().to_vec();
        let a_sharp = (0..radii.len())
            .map(|k| entries.iter().flatten().map(|r| r.eta[k]).fold(0.0, f64::max))
            .collect();
        Ok(CoefficientModulus { entries, radii, a_sharp })
    }

    /// `a_R^sharp` at an arbitrary radius (largest family radius not above `r`).
    pub fn at(&self, r: f64) -> f64 {
        let k = self.radii.partition_point(|v| *v <= r * (1.0 + 1e-12));
        if k == 0 {
            0.0
        } else {
            self.a_sharp[k - 1]
        }
    }
}

/// Both sides of `||Mf||_p <= c ||f||_p` or `||f||_p <= c ||f^#||_p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormRecord {
    pub p: f64,
    pub lhs: f64,
    pub rhs: f64,
}

impl NormRecord {
    pub fn ratio(&self) -> f64 {
        if self.rhs > 0.0 {
            self.lhs / self.rhs
        } else if self.lhs > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }
}

pub fn hl_inequality(f: &GridFunction, family: &BallFamily, p: f64) -> Result<NormRecord> {
    let m = hl_maximal(f, family)?;
    Ok(NormRecord { p, lhs: m.lp_norm(p), rhs: f.lp_norm(p) })
}

pub fn fefferman_stein(f: &GridFunction, family: &BallFamily, p: f64) -> Result<NormRecord> {
    let s = sharp_maximal(f, family)?;
    Ok(NormRecord { p, lhs: f.lp_norm(p), rhs: s.lp_norm(p) })
}
