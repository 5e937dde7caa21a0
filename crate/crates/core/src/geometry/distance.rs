//! Control (Carnot-Caratheodory) distance on a grid.
//!
//! Controls satisfy `|a_j| <= 1`, so the distance is a minimal travel time.
//! The solver is a Dijkstra search whose states are grid nodes, but each node
//! remembers the exact endpoint of the fastest trajectory found for it. Edges
//! are RK4 flows of constant controls started from that endpoint, so every
//! reported value is the duration of a genuine admissible path ending within
//! half a cell of the node. Snapping only decides which trajectories survive;
//! it never shortens a path.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::sync::{Arc, Mutex};

use super::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::hvf::{CompiledField, HormanderSystem};

/// Discretisation of the control problem.
#[derive(Clone, Debug, PartialEq)]
pub struct CCGraphConfig {
    /// Control levels per field on [-1, 1] (odd, at least 3).
    pub levels: usize,
    /// Basic duration in units of the largest grid spacing.
    pub tau_cells: f64,
    /// Segment durations, as multiples of the basic duration.
    pub durations: Vec<u32>,
    /// Longest single RK4 step, in basic durations.
    pub max_step: u32,
}

impl Default for CCGraphConfig {
    fn default() -> Self {
        CCGraphConfig { levels: 5, tau_cells: 1.0, durations: vec![1, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48], max_step: 4 }
    }
}

impl CCGraphConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels < 3 || self.levels % 2 == 0 {
            return Err(Error::InvalidParameter(format!("control levels must be odd and >= 3, got {}", self.levels)));
        }
        if !(self.tau_cells > 0.0) || self.durations.is_empty() || self.max_step == 0 {
            return Err(Error::InvalidParameter("durations and step must be positive".into()));
        }
        if self.durations.windows(2).any(|w| w[1] <= w[0]) || self.durations[0] == 0 {
            return Err(Error::InvalidParameter("durations must be increasing and positive".into()));
        }
        Ok(())
    }
}

/// Controls on the boundary of the cube `[-1,1]^m`. Interior controls are
/// dominated, since following a boundary control for a shorter time reaches
/// the same point.
pub fn control_set(m: usize, levels: usize) -> Vec<Vec<f64>> {
    let lv: Vec<f64> = (0..levels).map(|i| -1.0 + 2.0 * i as f64 / (levels - 1) as f64).collect();
    let mut out = Vec::new();
    let total = levels.pow(m as u32);
    for code in 0..total {
        let mut c = code;
        let mut a = Vec::with_capacity(m);
        for _ in 0..m {
            a.push(lv[c % levels]);
            c /= levels;
        }
        if a.iter().any(|v| (v.abs() - 1.0).abs() < 1e-12) {
            out.push(a);
        }
    }
    out
}

struct Rk4 {
    k: [Vec<f64>; 4],
    p: Vec<f64>,
    fv: Vec<f64>,
}

impl Rk4 {
    fn new(n: usize) -> Rk4 {
        Rk4 { k: std::array::from_fn(|_| vec![0.0; n]), p: vec![0.0; n], fv: vec![0.0; n] }
    }

    fn rhs(fields: &[CompiledField], a: &[f64], x: &[f64], out: &mut [f64], fv: &mut Vec<f64>) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (f, aj) in fields.iter().zip(a) {
            if *aj == 0.0 {
                continue;
            }
            f.eval_into(x, fv);
            for (o, v) in out.iter_mut().zip(fv.iter()) {
                *o += aj * v;
            }
        }
    }

    fn step(&mut self, fields: &[CompiledField], a: &[f64], x: &mut [f64], h: f64) {
        let n = x.len();
        let Rk4 { k, p, fv } = self;
        let coef = [0.5, 0.5, 1.0];
        Self::rhs(fields, a, x, &mut k[0], fv);
        for s in 0..3 {
            for i in 0..n {
                p[i] = x[i] + coef[s] * h * k[s][i];
            }
            Self::rhs(fields, a, p, &mut k[s + 1], fv);
        }
        for i in 0..n {
            x[i] += h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
        }
    }
}

/// Integrate the control system with a constant control for time `t`.
pub fn flow(fields: &[CompiledField], a: &[f64], x0: &[f64], t: f64, steps: usize) -> Vec<f64> {
    let mut x = x0.to_vec();
    let mut rk = Rk4::new(x0.len());
    let h = t / steps.max(1) as f64;
    for _ in 0..steps.max(1) {
        rk.step(fields, a, &mut x, h);
    }
    x
}

#[derive(PartialEq, PartialOrd)]
struct OrdF(f64);
impl Eq for OrdF {}
impl Ord for OrdF {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&o.0)
    }
}

/// Distances from one source to the nodes of a grid.
#[derive(Clone, Debug)]
pub struct DistanceField {
    pub domain: BoxDomain,
    /// Travel time per node; `INFINITY` beyond the search limit or unreachable.
    pub values: Vec<f64>,
    pub source: Vec<f64>,
    pub tau0: f64,
    /// Values below this bound are final; `INFINITY` for a full solve.
    pub limit: f64,
}

impl DistanceField {
    pub fn at(&self, x: &[f64]) -> Option<f64> {
        self.domain.interpolate(&self.values, x)
    }

    pub fn at_nearest(&self, x: &[f64]) -> Option<f64> {
        self.domain.nearest(x).map(|i| self.values[i]).filter(|v| v.is_finite())
    }

    /// Node count of `{d < r}` times the cell volume; fails when the set
    /// touches the boundary of the box.
    pub fn ball_volume(&self, r: f64) -> Result<f64> {
        if r > self.limit {
            return Err(Error::InvalidParameter(format!("radius {r} beyond search limit {}", self.limit)));
        }
        let mut count = 0usize;
        for (i, v) in self.values.iter().enumerate() {
            if *v < r {
                if self.domain.on_boundary(i) {
                    return Err(Error::Clipped { center: self.source.clone(), radius: r });
                }
                count += 1;
            }
        }
        Ok(count as f64 * self.domain.cell_volume())
    }

    pub fn members(&self, r: f64) -> Vec<usize> {
        self.values.iter().enumerate().filter(|(_, v)| **v < r).map(|(i, _)| i).collect()
    }
}

/// Trajectory Dijkstra solver for one family of fields.
#[derive(Clone)]
pub struct DistanceSolver {
    fields: Vec<CompiledField>,
    controls: Vec<Vec<f64>>,
    cfg: CCGraphConfig,
    n: usize,
}

impl DistanceSolver {
    pub fn new(sys: &HormanderSystem, cfg: &CCGraphConfig) -> Result<DistanceSolver> {
        Self::from_compiled(sys.compiled_fields(), sys.n(), cfg)
    }

    /// Solver for an arbitrary family of fields on `R^n` (used for lifted groups).
    pub fn from_compiled(fields: Vec<CompiledField>, n: usize, cfg: &CCGraphConfig) -> Result<DistanceSolver> {
        cfg.validate()?;
        let controls = control_set(fields.len(), cfg.levels);
        Ok(DistanceSolver { fields, controls, cfg: cfg.clone(), n })
    }

    pub fn config(&self) -> &CCGraphConfig {
        &self.cfg
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Distances from `source` to every node with value below `limit`.
    pub fn solve(&self, domain: &BoxDomain, source: &[f64], limit: Option<f64>) -> Result<DistanceField> {
        if domain.dim() != self.n || source.len() != self.n {
            return Err(Error::DimensionMismatch(format!("grid of dimension {} for fields on R^{}", domain.dim(), self.n)));
        }
        let s = domain.nearest(source).ok_or_else(|| Error::OutOfDomain(source.to_vec()))?;
        let n = self.n;
        let limit = limit.unwrap_or(f64::INFINITY);
        let tau0 = self.cfg.tau_cells * domain.spacings().into_iter().fold(0.0, f64::max);
        let mut values = vec![f64::INFINITY; domain.len()];
        let mut reps = vec![0.0; domain.len() * n];
        let mut done = vec![false; domain.len()];
        values[s] = 0.0;
        reps[s * n..(s + 1) * n].copy_from_slice(source);

        // RK4 schedule between consecutive durations: (steps, step length, total time)
        let mut schedule = Vec::new();
        let mut prev = 0u32;
        for &d in &self.cfg.durations {
            let gap = d - prev;
            let steps = gap.div_ceil(self.cfg.max_step);
            schedule.push((steps, gap as f64 * tau0 / steps as f64, d as f64 * tau0));
            prev = d;
        }

        let mut heap = BinaryHeap::new();
        heap.push(Reverse((OrdF(0.0), s)));
        let mut rk = Rk4::new(n);
        let mut x = vec![0.0; n];
        while let Some(Reverse((OrdF(d), v))) = heap.pop() {
            if done[v] || d > values[v] {
                continue;
            }
            done[v] = true;
            if d >= limit {
                break;
            }
            for a in &self.controls {
                x.copy_from_slice(&reps[v * n..(v + 1) * n]);
                for &(steps, h, t) in &schedule {
                    for _ in 0..steps {
                        rk.step(&self.fields, a, &mut x, h);
                    }
                    let Some(w) = domain.nearest(&x) else { break };
                    let nd = d + t;
                    if nd < values[w] && !done[w] {
                        values[w] = nd;
                        reps[w * n..(w + 1) * n].copy_from_slice(&x);
                        heap.push(Reverse((OrdF(nd), w)));
                    }
                }
            }
        }
        if limit.is_finite() {
            for v in values.iter_mut() {
                if *v >= limit {
                    *v = f64::INFINITY;
                }
            }
        }
        Ok(DistanceField { domain: domain.clone(), values, source: source.to_vec(), tau0, limit })
    }
}

/// Coordinates that are translation symmetries: no field coefficient
/// depends on them, so `d(x + t e_k, y + t e_k) = d(x, y)`.
pub fn translation_invariant_axes(sys: &HormanderSystem) -> Vec<bool> {
    (0..sys.n())
        .map(|k| sys.fields().iter().all(|f| f.components().iter().all(|c| c.terms().all(|(m, _)| m.0[k] == 0))))
        .collect()
}

/// Distance fields between nodes of one working grid, computed on demand
/// and cached. Sources that differ only along translation-invariant axes
/// share one field, computed on a grid twice as long along those axes.
pub struct GridMetric {
    solver: DistanceSolver,
    domain: BoxDomain,
    invariant: Vec<bool>,
    cache: Mutex<HashMap<Vec<usize>, Arc<DistanceField>>>,
}

/// Distances from one node of a [`GridMetric`] grid.
#[derive(Clone)]
pub struct SourceView {
    field: Arc<DistanceField>,
    domain: BoxDomain,
    /// Per axis: offset added to a working-grid index to get the field index.
    offset: Vec<isize>,
    pub source: Vec<f64>,
}

impl SourceView {
    pub fn limit(&self) -> f64 {
        self.field.limit
    }

    /// Distance to working-grid node `idx` (`INFINITY` beyond the limit).
    pub fn dist(&self, idx: usize) -> f64 {
        let mut rest = idx;
        let mut j = 0usize;
        for k in 0..self.offset.len() {
            let s = self.domain.stride(k);
            let i = rest / s;
            rest %= s;
            j += (i as isize + self.offset[k]) as usize * self.field.domain.stride(k);
        }
        self.field.values[j]
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.domain.len()).map(|i| self.dist(i)).collect()
    }

    pub fn members(&self, r: f64) -> Vec<usize> {
        (0..self.domain.len()).filter(|&i| self.dist(i) < r).collect()
    }

    /// Lebesgue measure of the ball of radius `r`, counted on the working grid.
    pub fn ball_volume(&self, r: f64) -> Result<f64> {
        if r > self.field.limit {
            return Err(Error::InvalidParameter(format!("radius {r} beyond search limit {}", self.field.limit)));
        }
        let mut count = 0usize;
        for i in 0..self.domain.len() {
            if self.dist(i) < r {
                if self.domain.on_boundary(i) {
                    return Err(Error::Clipped { center: self.source.clone(), radius: r });
                }
                count += 1;
            }
        }
        Ok(count as f64 * self.domain.cell_volume())
    }
}

impl GridMetric {
    pub fn new(sys: &HormanderSystem, domain: BoxDomain, cfg: &CCGraphConfig) -> Result<GridMetric> {
        if domain.dim() != sys.n() {
            return Err(Error::DimensionMismatch("grid dimension".into()));
        }
        Ok(GridMetric {
            solver: DistanceSolver::new(sys, cfg)?,
            invariant: translation_invariant_axes(sys),
            domain,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn invariant_axes(&self) -> &[bool] {
        &self.invariant
    }

    /// Distances from node `src`, final below `limit`.
    pub fn from_node(&self, src: usize, limit: f64) -> Result<SourceView> {
        let d = &self.domain;
        let mi = d.multi_index(src);
        let key: Vec<usize> = mi.iter().enumerate().map(|(k, i)| if self.invariant[k] { 0 } else { *i }).collect();
        let cached = self.cache.lock().expect("cache lock").get(&key).cloned();
        let field = match cached {
            Some(f) if f.limit >= limit => f,
            _ => {
                let mut lo = d.lo.clone();
                let mut hi = d.hi.clone();
                let mut counts = d.counts.clone();
                let mut source = d.coords(src);
                for k in 0..d.dim() {
                    if self.invariant[k] {
                        let c = (d.counts[k] - 1) as f64;
                        lo[k] = -c * d.spacing(k);
                        hi[k] = c * d.spacing(k);
                        counts[k] = 2 * d.counts[k] - 1;
                        source[k] = 0.0;
                    }
                }
                let ext = BoxDomain::new(lo, hi, counts)?;
                let f = Arc::new(self.solver.solve(&ext, &source, Some(limit))?);
                self.cache.lock().expect("cache lock").insert(key, f.clone());
                f
            }
        };
        let offset = (0..mi.len())
            .map(|k| if self.invariant[k] { d.counts[k] as isize - 1 - mi[k] as isize } else { 0 })
            .collect();
        Ok(SourceView { field, domain: d.clone(), offset, source: d.coords(src) })
    }

    /// Distance between two nodes (`INFINITY` when at least `limit`).
    pub fn node_distance(&self, a: usize, b: usize, limit: f64) -> Result<f64> {
        Ok(self.from_node(a, limit)?.dist(b))
    }

    pub fn cached_fields(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }
}

/// Distance value with a refinement-based error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceEstimate {
    pub value: f64,
    pub coarse: f64,
    pub error_bound: f64,
}

/// Half widths of a box around `center` containing every point reachable in
/// time `t`, estimated from constant-control flows with a safety factor.
pub fn reach_box(sys: &HormanderSystem, center: &[f64], t: f64) -> Vec<f64> {
    let fields = sys.compiled_fields();
    let mut half = vec![t; sys.n()];
    for a in control_set(sys.m(), 3) {
        let y = flow(&fields, &a, center, t, 64);
        for k in 0..sys.n() {
            half[k] = half[k].max((y[k] - center[k]).abs());
        }
    }
    half.iter().map(|h| 1.6 * h + 0.05 * t).collect()
}

/// `d(x, y)` with an error estimate from two resolutions. The coarse grid has
/// about `cells` intervals per coordinate across the reachable box.
pub fn cc_distance(sys: &HormanderSystem, x: &[f64], y: &[f64], cells: usize, cfg: &CCGraphConfig) -> Result<DistanceEstimate> {
    if x.len() != sys.n() || y.len() != sys.n() {
        return Err(Error::DimensionMismatch("point dimension".into()));
    }
    if x == y {
        return Ok(DistanceEstimate { value: 0.0, coarse: 0.0, error_bound: 0.0 });
    }
    let solver = DistanceSolver::new(sys, cfg)?;
    let mut t: f64 = x
        .iter()
        .zip(y)
        .zip(sys.sigma())
        .map(|((a, b), s)| (b - a).abs().powf(1.0 / *s as f64))
        .fold(0.0, f64::max)
        .max(1e-3);
    for _ in 0..10 {
        let half = reach_box(sys, x, t);
        if (0..sys.n()).any(|k| (y[k] - x[k]).abs() > 0.8 * half[k]) {
            t *= 2.0;
            continue;
        }
        let spacing: Vec<f64> = half.iter().map(|h| 2.0 * h / cells as f64).collect();
        let coarse = BoxDomain::centered(x, &half, &spacing)?;
        let fine = coarse.refined();
        let dc = solver.solve(&coarse, x, Some(1.2 * t))?;
        let df = solver.solve(&fine, x, Some(1.2 * t))?;
        match (dc.at(y), df.at(y)) {
            (Some(c), Some(f)) if f <= t => {
                return Ok(DistanceEstimate { value: f, coarse: c, error_bound: (f - c).abs() + df.tau0 });
            }
            _ => t *= 2.0,
        }
    }
    Err(Error::Unreachable(y.to_vec()))
}
