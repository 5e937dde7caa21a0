use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::hvf::PolyVectorField;

/// Centred finite-difference stencils for first partial derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StencilOrder {
    Second,
    Fourth,
}

impl StencilOrder {
    /// Node layers consumed on each side by one derivative.
    pub fn width(self) -> usize {
        match self {
            StencilOrder::Second => 1,
            StencilOrder::Fourth => 2,
        }
    }

    pub fn from_order(order: usize) -> Result<StencilOrder> {
        match order {
            2 => Ok(StencilOrder::Second),
            4 => Ok(StencilOrder::Fourth),
            _ => Err(Error::InvalidParameter(format!("stencil order {order} (expected 2 or 4)"))),
        }
    }

    fn taps(self) -> &'static [(isize, f64)] {
        match self {
            StencilOrder::Second => &[(-1, -0.5), (1, 0.5)],
            StencilOrder::Fourth => &[(-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0)],
        }
    }
}

/// `X f = sum_k c_k(x) d_k f` at the interior nodes; the result lives on the
/// grid shrunk by the stencil width.
pub fn apply_field_grid(field: &PolyVectorField, f: &GridFunction, order: StencilOrder) -> Result<GridFunction> {
    let dom = &f.domain;
    if field.dim() != dom.dim() {
        return Err(Error::DimensionMismatch("field and grid dimensions differ".into()));
    }
    let w = order.width();
    let out = dom.shrunk(w)?;
    let compiled = field.compile();
    let inv_h: Vec<f64> = dom.spacings().iter().map(|h| 1.0 / h).collect();
    let strides: Vec<isize> = (0..dom.dim()).map(|k| dom.stride(k) as isize).collect();
    let taps = order.taps();
    let values = (0..out.len())
        .into_par_iter()
        .map(|i| {
            let m = out.multi_index(i);
            let full: Vec<usize> = m.iter().map(|a| a + w).collect();
            let base = dom.flat_index(&full) as isize;
            let x = out.coords(i);
            let mut c = vec![0.0; dom.dim()];
            compiled.eval_into(&x, &mut c);
            let mut acc = 0.0;
            for (k, ck) in c.iter().enumerate() {
                if *ck == 0.0 {
                    continue;
                }
                let d: f64 = taps.iter().map(|(o, t)| t * f.values[(base + o * strides[k]) as usize]).sum();
                acc += ck * d * inv_h[k];
            }
            acc
        })
        .collect();
    Ok(GridFunction { domain: out, values })
}

/// `X_{i_1} ... X_{i_k} f` (the last letter acts first).
pub fn apply_word_grid(fields: &[PolyVectorField], word: &[usize], f: &GridFunction, order: StencilOrder) -> Result<GridFunction> {
    let mut g = f.clone();
    for &letter in word.iter().rev() {
        let field = fields.get(letter).ok_or_else(|| Error::InvalidParameter(format!("no field with index {letter}")))?;
        g = apply_field_grid(field, &g, order)?;
    }
    Ok(g)
}

/// All words of the given length in `m` letters, in lexicographic order.
pub fn words(m: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out.into_iter().flat_map(|w| (0..m).map(move |i| {
            let mut v = w.clone();
            v.push(i);
            v
        })).collect();
    }
    out
}

/// The `W^{k,p}_X` norm `||f||_p + sum_{1 <= |I| <= k} ||X_I f||_p` and its parts.
#[derive(Clone, Debug, PartialEq)]
pub struct SobolevReport {
    pub p: f64,
    pub k: usize,
    pub base: f64,
    /// `(I, ||X_I f||_p)` for every word with `1 <= |I| <= k`.
    pub entries: Vec<(Vec<usize>, f64)>,
    pub total: f64,
}

impl SobolevReport {
    /// Sum of the norms of the words of one length.
    pub fn order_sum(&self, len: usize) -> f64 {
        if len == 0 {
            return self.base;
        }
        self.entries.iter().filter(|(w, _)| w.len() == len).map(|(_, v)| v).sum()
    }
}

/// Each derivative norm is a Riemann sum over the grid on which that
/// derivative is defined; `f` must vanish near the edge of its grid for the
/// result to represent the norm on the whole space.
pub fn sobolev_norm(fields: &[PolyVectorField], f: &GridFunction, k: usize, p: f64, order: StencilOrder) -> Result<SobolevReport> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("exponent {p} must be at least 1")));
    }
    let base = f.lp_norm(p);
    let mut entries = Vec::new();
    let mut level: Vec<(Vec<usize>, GridFunction)> = vec![(vec![], f.clone())];
    for _ in 0..k {
        let mut next = Vec::with_capacity(level.len() * fields.len());
        for (w, g) in &level {
            for (i, field) in fields.iter().enumerate() {
                let d = apply_field_grid(field, g, order)?;
                let mut word = vec![i];
                word.extend_from_slice(w);
                entries.push((word.clone(), d.lp_norm(p)));
                next.push((word, d));
            }
        }
        level = next;
    }
    entries.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then(a.0.cmp(&b.0)));
    let total = base + entries.iter().map(|(_, v)| v).sum::<f64>();
    Ok(SobolevReport { p, k, base, entries, total })
}

/// `X_J (a w)` expanded by the product rule into
/// `sum_S (X_{J_S} a)(X_{J \ S} w)` over the subsets `S` of positions of `J`,
/// both subwords keeping the order of `J`. The result lives on the grid shrunk
/// by `|J|` stencil widths.
pub fn leibniz_expand(fields: &[PolyVectorField], word: &[usize], a: &GridFunction, w: &GridFunction, order: StencilOrder) -> Result<GridFunction> {
    if a.domain != w.domain {
        return Err(Error::DimensionMismatch("factors live on different grids".into()));
    }
    let k = word.len();
    let target = a.domain.shrunk(k * order.width())?;
    let mut acc = GridFunction::zeros(&target);
    for mask in 0..(1usize << k) {
        let on_a: Vec<usize> = (0..k).filter(|t| mask >> t & 1 == 1).map(|t| word[t]).collect();
        let on_w: Vec<usize> = (0..k).filter(|t| mask >> t & 1 == 0).map(|t| word[t]).collect();
        let da = apply_word_grid(fields, &on_a, a, order)?.restrict(&target)?;
        let dw = apply_word_grid(fields, &on_w, w, order)?.restrict(&target)?;
        acc = acc.combine(1.0, &da.mul(&dw)?, 1.0)?;
    }
    Ok(acc)
}
