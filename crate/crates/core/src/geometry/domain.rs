use crate::error::{Error, Result};

/// A uniform tensor grid on an axis-aligned box (nodes include both ends).
///
/// Two grids compare equal when their counts agree and their bounds agree to
/// within a billionth of a spacing, so grids reached by different sequences of
/// shrinking or restriction are recognised as the same.
#[derive(Clone, Debug)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub counts: Vec<usize>,
    strides: Vec<usize>,
}

impl PartialEq for BoxDomain {
    fn eq(&self, other: &BoxDomain) -> bool {
        if self.counts != other.counts {
            return false;
        }
        (0..self.dim()).all(|k| {
            let tol = 1e-9 * self.spacing(k);
            (self.lo[k] - other.lo[k]).abs() <= tol && (self.hi[k] - other.hi[k]).abs() <= tol
        })
    }
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        if lo.len() != hi.len() || lo.len() != counts.len() || lo.is_empty() {
            return Err(Error::DimensionMismatch("box bounds and counts disagree".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(b > a)) || counts.iter().any(|c| *c < 2) {
            return Err(Error::InvalidParameter(format!("degenerate box {lo:?}..{hi:?} with counts {counts:?}")));
        }
        let mut strides = vec![1; counts.len()];
        for k in (0..counts.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * counts[k + 1];
        }
        Ok(BoxDomain { lo, hi, counts, strides })
    }

    /// Box with the given centre node, half widths and (approximate) spacings.
    /// Spacings are adjusted so that the centre is exactly a node.
    pub fn centered(center: &[f64], half: &[f64], spacing: &[f64]) -> Result<Self> {
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        let mut counts = Vec::new();
        for k in 0..center.len() {
            let m = (half[k] / spacing[k]).ceil().max(1.0) as usize;
            let h = half[k] / m as f64;
            lo.push(center[k] - m as f64 * h);
            hi.push(center[k] + m as f64 * h);
            counts.push(2 * m + 1);
        }
        BoxDomain::new(lo, hi, counts)
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, k: usize) -> f64 {
        (self.hi[k] - self.lo[k]) / (self.counts[k] - 1) as f64
    }

    pub fn spacings(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.spacing(k)).collect()
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacings().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacings().iter().product()
    }

    pub fn stride(&self, k: usize) -> usize {
        self.strides[k]
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for k in 0..self.dim() {
            out[k] = idx / self.strides[k];
            idx %= self.strides[k];
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.coords_into(idx, &mut out);
        out
    }

    pub fn coords_into(&self, mut idx: usize, out: &mut [f64]) {
        for k in 0..self.dim() {
            let i = idx / self.strides[k];
            idx %= self.strides[k];
            out[k] = self.lo[k] + i as f64 * self.spacing(k);
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().enumerate().all(|(k, v)| *v >= self.lo[k] - 1e-12 && *v <= self.hi[k] + 1e-12)
    }

    pub fn nearest(&self, x: &[f64]) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        let mut idx = 0;
        for k in 0..self.dim() {
            let t = ((x[k] - self.lo[k]) / self.spacing(k)).round() as isize;
            let t = t.clamp(0, self.counts[k] as isize - 1) as usize;
            idx += t * self.strides[k];
        }
        Some(idx)
    }

    /// Cell containing `x` and the fractional offsets inside it, for multilinear interpolation.
    pub fn locate(&self, x: &[f64]) -> Option<(usize, Vec<f64>)> {
        if !self.contains(x) {
            return None;
        }
        let mut base = 0;
        let mut frac = Vec::with_capacity(self.dim());
        for k in 0..self.dim() {
            let t = (x[k] - self.lo[k]) / self.spacing(k);
            let i = (t.floor() as isize).clamp(0, self.counts[k] as isize - 2) as usize;
            frac.push((t - i as f64).clamp(0.0, 1.0));
            base += i * self.strides[k];
        }
        Some((base, frac))
    }

    /// Multilinear interpolation of nodal values; `None` outside the box or
    /// when a contributing corner is not finite.
    pub fn interpolate(&self, values: &[f64], x: &[f64]) -> Option<f64> {
        let (base, frac) = self.locate(x)?;
        let n = self.dim();
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut idx = base;
            for k in 0..n {
                if corner >> k & 1 == 1 {
                    w *= frac[k];
                    idx += self.strides[k];
                } else {
                    w *= 1.0 - frac[k];
                }
            }
            if w == 0.0 {
                continue;
            }
            let v = values[idx];
            if !v.is_finite() {
                return None;
            }
            acc += w * v;
        }
        Some(acc)
    }

    /// True when the node touches the outer face of the box.
    pub fn on_boundary(&self, idx: usize) -> bool {
        self.multi_index(idx).iter().zip(&self.counts).any(|(i, c)| *i == 0 || *i == c - 1)
    }

    /// The box without its `w` outermost node layers on every side.
    pub fn shrunk(&self, w: usize) -> Result<BoxDomain> {
        if self.counts.iter().any(|c| *c < 2 * w + 2) {
            return Err(Error::MarginExhausted(format!("cannot remove {w} layers from a grid with counts {:?}", self.counts)));
        }
        let lo = (0..self.dim()).map(|k| self.lo[k] + w as f64 * self.spacing(k)).collect();
        let hi = (0..self.dim()).map(|k| self.hi[k] - w as f64 * self.spacing(k)).collect();
        BoxDomain::new(lo, hi, self.counts.iter().map(|c| c - 2 * w).collect())
    }

    /// Per-axis index offset of an aligned sub-grid with the same spacing.
    pub fn offset_of(&self, sub: &BoxDomain) -> Option<Vec<usize>> {
        if sub.dim() != self.dim() {
            return None;
        }
        let mut off = Vec::with_capacity(self.dim());
        for k in 0..self.dim() {
            let h = self.spacing(k);
            let t = (sub.lo[k] - self.lo[k]) / h;
            let o = t.round();
            if (t - o).abs() > 1e-6 || (sub.spacing(k) - h).abs() > 1e-9 * h || o < 0.0 || o as usize + sub.counts[k] > self.counts[k] {
                return None;
            }
            off.push(o as usize);
        }
        Some(off)
    }

    /// Same box with every cell split in two; coarse nodes remain nodes.
    pub fn refined(&self) -> BoxDomain {
        BoxDomain::new(self.lo.clone(), self.hi.clone(), self.counts.iter().map(|c| 2 * c - 1).collect())
            .expect("refinement of a valid box")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_round_trip() {
        let d = BoxDomain::new(vec![-1.0, 0.0], vec![1.0, 2.0], vec![5, 9]).unwrap();
        for idx in [0, 7, 44] {
            let m = d.multi_index(idx);
            assert_eq!(d.flat_index(&m), idx);
            assert_eq!(d.nearest(&d.coords(idx)), Some(idx));
        }
        assert!((d.cell_volume() - 0.5 * 0.25).abs() < 1e-15);
    }

    #[test]
    fn interpolation_is_exact_for_bilinear_data() {
        let d = BoxDomain::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![4, 6]).unwrap();
        let vals: Vec<f64> = (0..d.len()).map(|i| {
            let c = d.coords(i);
            1.0 + 2.0 * c[0] - c[1] + 0.5 * c[0] * c[1]
        }).collect();
        let p = [0.37, 0.81];
        let v = d.interpolate(&vals, &p).unwrap();
        assert!((v - (1.0 + 0.74 - 0.81 + 0.5 * 0.37 * 0.81)).abs() < 1e-12);
        assert!(d.interpolate(&vals, &[1.5, 0.0]).is_none());
    }

    #[test]
    fn centered_box_has_center_node() {
        let d = BoxDomain::centered(&[0.3, -0.2], &[1.0, 0.5], &[0.07, 0.05]).unwrap();
        let c = d.nearest(&[0.3, -0.2]).unwrap();
        let x = d.coords(c);
        assert!((x[0] - 0.3).abs() < 1e-12 && (x[1] + 0.2).abs() < 1e-12);
    }
}
