//! Scalar samples on a uniform box grid.

use crate::error::{Error, Result};
use crate::geometry::BoxDomain;

#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub domain: BoxDomain,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(domain: BoxDomain, values: Vec<f64>) -> Result<GridFunction> {
        if values.len() != domain.len() {
            return Err(Error::DimensionMismatch(format!("{} values for {} nodes", values.len(), domain.len())));
        }
        Ok(GridFunction { domain, values })
    }

    pub fn zeros(domain: &BoxDomain) -> GridFunction {
        GridFunction { domain: domain.clone(), values: vec![0.0; domain.len()] }
    }

    pub fn constant(domain: &BoxDomain, c: f64) -> GridFunction {
        GridFunction { domain: domain.clone(), values: vec![c; domain.len()] }
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64>(domain: &BoxDomain, f: F) -> GridFunction {
        let mut x = vec![0.0; domain.dim()];
        let values = (0..domain.len())
            .map(|i| {
                domain.coords_into(i, &mut x);
                f(&x)
            })
            .collect();
        GridFunction { domain: domain.clone(), values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Multilinear interpolation; zero outside the box.
    pub fn at(&self, x: &[f64]) -> f64 {
        self.domain.interpolate(&self.values, x).unwrap_or(0.0)
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> GridFunction {
        GridFunction { domain: self.domain.clone(), values: self.values.iter().map(|v| f(*v)).collect() }
    }

    /// `a * self + b * other` on the same grid.
    pub fn combine(&self, a: f64, other: &GridFunction, b: f64) -> Result<GridFunction> {
        if self.domain != other.domain {
            return Err(Error::DimensionMismatch("grid functions live on different grids".into()));
        }
        Ok(GridFunction { domain: self.domain.clone(), values: self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect() })
    }

    pub fn mul(&self, other: &GridFunction) -> Result<GridFunction> {
        if self.domain != other.domain {
            return Err(Error::DimensionMismatch("grid functions live on different grids".into()));
        }
        Ok(GridFunction { domain: self.domain.clone(), values: self.values.iter().zip(&other.values).map(|(x, y)| x * y).collect() })
    }

    /// Riemann-sum `L^p` norm over all nodes.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let cv = self.domain.cell_volume();
        if p.is_infinite() {
            return self.sup_norm();
        }
        (self.values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * cv).powf(1.0 / p)
    }

    /// `L^p` norm over the nodes in `mask`.
    pub fn lp_norm_on(&self, p: f64, mask: &[bool]) -> f64 {
        let cv = self.domain.cell_volume();
        (self.values.iter().zip(mask).filter(|(_, m)| **m).map(|(v, _)| v.abs().powf(p)).sum::<f64>() * cv).powf(1.0 / p)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.domain.cell_volume()
    }

    /// Values on an aligned sub-grid with the same spacing.
    pub fn restrict(&self, sub: &BoxDomain) -> Result<GridFunction> {
        let off = self
            .domain
            .offset_of(sub)
            .ok_or_else(|| Error::DimensionMismatch("target is not an aligned sub-grid".into()))?;
        let values = (0..sub.len())
            .map(|i| {
                let m = sub.multi_index(i);
                let full: Vec<usize> = m.iter().zip(&off).map(|(a, b)| a + b).collect();
                self.values[self.domain.flat_index(&full)]
            })
            .collect();
        Ok(GridFunction { domain: sub.clone(), values })
    }

    /// Nodes where the function is non-zero.
    pub fn support(&self) -> Vec<usize> {
        self.values.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, _)| i).collect()
    }
}

/// Allocation-free multilinear interpolation for grids of dimension at most 4,
/// shared by several functions sampled on the same grid.
#[derive(Clone, Debug)]
pub struct Interpolator {
    lo: Vec<f64>,
    inv_h: Vec<f64>,
    counts: Vec<usize>,
    strides: Vec<usize>,
}

/// Corner indices and weights of one interpolation stencil.
#[derive(Clone, Copy, Debug)]
pub struct Stencil {
    pub idx: [usize; 16],
    pub w: [f64; 16],
    pub len: usize,
}

impl Interpolator {
    pub fn new(domain: &BoxDomain) -> Result<Interpolator> {
        if domain.dim() > 4 {
            return Err(Error::InvalidParameter("interpolator supports at most 4 dimensions".into()));
        }
        Ok(Interpolator {
            lo: domain.lo.clone(),
            inv_h: domain.spacings().iter().map(|h| 1.0 / h).collect(),
            counts: domain.counts.clone(),
            strides: (0..domain.dim()).map(|k| domain.stride(k)).collect(),
        })
    }

    /// Stencil at `x`, or `None` outside the grid.
    #[inline]
    pub fn stencil(&self, x: &[f64]) -> Option<Stencil> {
        let n = self.lo.len();
        let mut base = 0;
        let mut frac = [0.0; 4];
        for k in 0..n {
            let t = (x[k] - self.lo[k]) * self.inv_h[k];
            let last = (self.counts[k] - 1) as f64;
            if !(t >= -1e-9 && t <= last + 1e-9) {
                return None;
            }
            let i = (t.floor().max(0.0) as usize).min(self.counts[k] - 2);
            frac[k] = (t - i as f64).clamp(0.0, 1.0);
            base += i * self.strides[k];
        }
        let len = 1usize << n;
        let mut st = Stencil { idx: [0; 16], w: [0.0; 16], len };
        for c in 0..len {
            let mut w = 1.0;
            let mut idx = base;
            for k in 0..n {
                if c >> k & 1 == 1 {
                    w *= frac[k];
                    idx += self.strides[k];
                } else {
                    w *= 1.0 - frac[k];
                }
            }
            st.idx[c] = idx;
            st.w[c] = w;
        }
        Some(st)
    }
}

impl Stencil {
    #[inline]
    pub fn apply(&self, values: &[f64]) -> f64 {
        let mut acc = 0.0;
        for c in 0..self.len {
            acc += self.w[c] * values[self.idx[c]];
        }
        acc
    }
}
