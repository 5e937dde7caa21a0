//! Empirical constants of the lifted group: norm equivalence and the fiber-slice constant.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{BoxDomain, CCGraphConfig, DistanceField, DistanceSolver};

use super::group::CarnotLift;
use super::norm::{DilationPolar, HomNorm};

/// `gamma1 ||u|| <= d(0, u) <= gamma2 ||u||` over a sample, plus `kappa` and `H = 2 gamma2 / (gamma1 kappa)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceCalibration {
    pub gamma1: f64,
    pub gamma2: f64,
    pub kappa: f64,
    pub h: f64,
    pub samples: usize,
    pub grid: Vec<usize>,
}

/// Ladder of candidate values for `kappa`, largest first.
pub const KAPPA_LADDER: [f64; 9] = [0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1];

/// Norm radius of the calibration sample.
const SAMPLE_RADIUS: f64 = 0.5;

/// Lifted distances from the origin on `[-1, 1]^N` with `cells` intervals per axis.
pub fn lifted_distance_field(lift: &CarnotLift, cells: usize) -> Result<DistanceField> {
    let big_n = lift.big_n();
    let solver = DistanceSolver::from_compiled(lift.compiled_fields().to_vec(), big_n, &CCGraphConfig::default())?;
    let domain = BoxDomain::new(vec![-1.0; big_n], vec![1.0; big_n], vec![cells + 1; big_n])?;
    solver.solve(&domain, &vec![0.0; big_n], None)
}

/// Ratios `d(0, u) / ||u||` at the given points; rejects samples lying on one dilation orbit.
pub fn equivalence_from_samples(lift: &CarnotLift, field: &DistanceField, points: &[Vec<f64>]) -> Result<(f64, f64)> {
    let polar = DilationPolar::new(lift.weights());
    let dirs: Vec<Vec<f64>> = points.iter().filter_map(|u| polar.to_polar(u).map(|p| p.1)).collect();
    if dirs.len() < 2 || dirs.iter().all(|d| d.iter().zip(&dirs[0]).all(|(a, b)| (a - b).abs() < 1e-9)) {
        return Err(Error::InvalidParameter("calibration sample is degenerate (a single dilation ray)".into()));
    }
    let norm = HomNorm::new(lift.weights())?;
    let (mut g1, mut g2) = (f64::INFINITY, 0.0f64);
    for u in points {
        let d = field.at(u).ok_or_else(|| Error::OutOfDomain(u.clone()))?;
        let r = d / norm.eval(u);
        g1 = g1.min(r);
        g2 = g2.max(r);
    }
    Ok((g1, g2))
}

/// Fiber-slice measure `|{eta : d(0, (y, eta)) < r}|` and base distance `min_eta d(0, (y, eta))`
/// for every base node of the lifted grid (fiber of dimension one).
fn slices(lift: &CarnotLift, field: &DistanceField, r: f64) -> Vec<(f64, f64)> {
    let dom = &field.domain;
    let n = lift.n();
    let fiber_count = dom.counts[n];
    let h_eta = dom.spacing(n);
    let base_len: usize = dom.counts[..n].iter().product();
    (0..base_len)
        .map(|b| {
            let mut measure = 0.0;
            let mut dmin = f64::INFINITY;
            for e in 0..fiber_count {
                let v = field.values[b * fiber_count + e];
                if v < r {
                    measure += h_eta;
                }
                dmin = dmin.min(v);
            }
            (measure, dmin)
        })
        .collect()
}

/// Largest ladder value such that every base point with `d(0, y) < kappa r`
/// has a fiber slice at least half of the slice above the origin.
pub fn calibrate_kappa(lift: &CarnotLift, field: &DistanceField, r: f64) -> Result<f64> {
    if lift.p() != 1 {
        return Err(Error::InvalidParameter("kappa calibration supports one fiber dimension".into()));
    }
    let sl = slices(lift, field, r);
    let origin = field.domain.nearest(&vec![0.0; lift.big_n()]).ok_or_else(|| Error::OutOfDomain(vec![0.0]))?;
    let fiber_count = field.domain.counts[lift.n()];
    let m0 = sl[origin / fiber_count].0;
    for kappa in KAPPA_LADDER {
        let worst = sl.iter().filter(|(_, d)| *d < kappa * r).map(|(m, _)| *m).fold(f64::INFINITY, f64::min);
        if worst >= 0.5 * m0 {
            return Ok(kappa);
        }
    }
    Err(Error::InvalidParameter("no admissible kappa on the ladder".into()))
}

/// Calibrate `gamma1`, `gamma2` on `samples` random points of the norm sphere of radius 1/2,
/// and `kappa` at the same radius, using a lifted grid with `cells` intervals per axis.
pub fn calibrate_equivalence(lift: &CarnotLift, samples: usize, seed: u64, cells: usize) -> Result<EquivalenceCalibration> {
    let field = lifted_distance_field(lift, cells)?;
    let norm = HomNorm::new(lift.weights())?;
    let polar = DilationPolar::new(lift.weights());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vec<f64>> = (0..samples)
        .map(|_| {
            let mut th: Vec<f64> = (0..lift.big_n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let e = th.iter().map(|t| t * t).sum::<f64>().sqrt().max(1e-12);
            th.iter_mut().for_each(|t| *t /= e);
            polar.dilate(SAMPLE_RADIUS / norm.eval(&th), &th)
        })
        .collect();
    let (gamma1, gamma2) = equivalence_from_samples(lift, &field, &points)?;
    let kappa = calibrate_kappa(lift, &field, SAMPLE_RADIUS)?;
    Ok(EquivalenceCalibration { gamma1, gamma2, kappa, h: 2.0 * gamma2 / (gamma1 * kappa), samples, grid: field.domain.counts.clone() })
}
