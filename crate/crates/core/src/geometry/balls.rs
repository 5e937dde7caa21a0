//! Ball volumes, volume ratios under refinement, growth exponents and doubling.

use super::distance::{CCGraphConfig, DistanceSolver};
use super::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::hvf::HormanderSystem;
use crate::stats::{linear_fit, LinearFit};

/// Lebesgue measure of `B(center, r)` by node counting on `domain`.
pub fn ball_volume(sys: &HormanderSystem, center: &[f64], r: f64, domain: &BoxDomain, cfg: &CCGraphConfig) -> Result<f64> {
    let solver = DistanceSolver::new(sys, cfg)?;
    solver.solve(domain, center, Some(r * 1.01))?.ball_volume(r)
}

/// A volume ratio at two resolutions with first-order Richardson extrapolation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefinedRatio {
    pub coarse: f64,
    pub fine: f64,
    pub extrapolated: f64,
}

/// `|B(c, lambda r)| / |B(c, r)|` on `domain` and on its refinement.
pub fn volume_ratio(sys: &HormanderSystem, center: &[f64], r: f64, lambda: f64, domain: &BoxDomain, cfg: &CCGraphConfig) -> Result<RefinedRatio> {
    let solver = DistanceSolver::new(sys, cfg)?;
    let big = r.max(lambda * r);
    let mut out = [0.0; 2];
    for (k, d) in [domain.clone(), domain.refined()].iter().enumerate() {
        let f = solver.solve(d, center, Some(big * 1.01))?;
        out[k] = f.ball_volume(lambda * r)? / f.ball_volume(r)?;
    }
    Ok(RefinedRatio { coarse: out[0], fine: out[1], extrapolated: 2.0 * out[1] - out[0] })
}

/// Power-law fit `|B(x, r)| ~ C r^e` over a radius list.
#[derive(Clone, Debug, PartialEq)]
pub struct GrowthFit {
    pub radii: Vec<f64>,
    pub volumes: Vec<f64>,
    pub exponent: f64,
    pub fit: LinearFit,
}

pub fn fit_growth(radii: &[f64], volumes: &[f64]) -> Result<GrowthFit> {
    if radii.len() < 2 || radii.len() != volumes.len() || volumes.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidParameter("growth fit needs at least two positive volumes".into()));
    }
    let lx: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ly: Vec<f64> = volumes.iter().map(|v| v.ln()).collect();
    let fit = linear_fit(&lx, &ly);
    Ok(GrowthFit { radii: radii.to_vec(), volumes: volumes.to_vec(), exponent: fit.slope, fit })
}

/// Growth exponents of consecutive radius pairs, `log(V_{k+1}/V_k) / log(r_{k+1}/r_k)`.
pub fn local_exponents(radii: &[f64], volumes: &[f64]) -> Vec<f64> {
    radii
        .windows(2)
        .zip(volumes.windows(2))
        .map(|(r, v)| (v[1] / v[0]).ln() / (r[1] / r[0]).ln())
        .collect()
}

/// Doubling ratios `|B(c, 2r)| / |B(c, r)|` for each radius, from one solve.
pub fn doubling_ratios(sys: &HormanderSystem, center: &[f64], radii: &[f64], domain: &BoxDomain, cfg: &CCGraphConfig) -> Result<Vec<f64>> {
    let solver = DistanceSolver::new(sys, cfg)?;
    let rmax = radii.iter().cloned().fold(0.0, f64::max);
    let f = solver.solve(domain, center, Some(2.0 * rmax * 1.01))?;
    radii.iter().map(|r| Ok(f.ball_volume(2.0 * r)? / f.ball_volume(*r)?)).collect()
}
