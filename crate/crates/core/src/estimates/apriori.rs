use nalgebra::{DMatrix, SymmetricEigen};

use super::derivatives::{apply_word_grid, sobolev_norm, words, SobolevReport, StencilOrder};
use crate::error::{Error, Result};
use crate::geometry::BoxDomain;
use crate::grid::GridFunction;
use crate::hvf::{HormanderSystem, PolyVectorField};
use crate::lift::ConstantMatrix;

/// `L u = sum_ij a_ij(x) X_i X_j u` with coefficients sampled on a grid.
#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    fields: Vec<PolyVectorField>,
    coeffs: Vec<Vec<GridFunction>>,
    nu: f64,
    order: StencilOrder,
}

impl DiscreteOperator {
    /// Rejects coefficient grids that are not exactly symmetric or whose
    /// eigenvalues leave `[nu, 1/nu]` at some node.
    pub fn new(sys: &HormanderSystem, coeffs: Vec<Vec<GridFunction>>, nu: f64, order: StencilOrder) -> Result<DiscreteOperator> {
        let m = sys.m();
        if coeffs.len() != m || coeffs.iter().any(|r| r.len() != m) {
            return Err(Error::DimensionMismatch(format!("expected {m} x {m} coefficient grids")));
        }
        if !(nu > 0.0 && nu <= 1.0) {
            return Err(Error::InvalidParameter(format!("nu = {nu} must lie in (0, 1]")));
        }
        let dom = coeffs[0][0].domain.clone();
        if dom.dim() != sys.n() || coeffs.iter().flatten().any(|a| a.domain != dom) {
            return Err(Error::DimensionMismatch("coefficients must share one grid of the system dimension".into()));
        }
        for i in 0..m {
            for j in 0..i {
                if coeffs[i][j].values != coeffs[j][i].values {
                    return Err(Error::NotSpd(format!("coefficients a_{}{} and a_{}{} differ", i + 1, j + 1, j + 1, i + 1)));
                }
            }
        }
        let (lo, hi) = (nu * (1.0 - 1e-12), (1.0 / nu) * (1.0 + 1e-12));
        for node in 0..dom.len() {
            let mat = DMatrix::from_fn(m, m, |i, j| coeffs[i][j].values[node]);
            let eig = SymmetricEigen::new(mat).eigenvalues;
            if let Some(bad) = eig.iter().find(|e| !(**e >= lo && **e <= hi)) {
                return Err(Error::Ellipticity(format!("eigenvalue {bad} outside [{nu}, {}] at {:?}", 1.0 / nu, dom.coords(node))));
            }
        }
        Ok(DiscreteOperator { fields: sys.fields().to_vec(), coeffs, nu, order })
    }

    /// Coefficients sampled from a matrix-valued function.
    pub fn from_fn<F: Fn(&[f64]) -> Vec<Vec<f64>>>(sys: &HormanderSystem, domain: &BoxDomain, a: F, nu: f64, order: StencilOrder) -> Result<DiscreteOperator> {
        let m = sys.m();
        let samples: Vec<Vec<Vec<f64>>> = (0..domain.len()).map(|i| a(&domain.coords(i))).collect();
        if samples.iter().any(|s| s.len() != m || s.iter().any(|r| r.len() != m)) {
            return Err(Error::DimensionMismatch(format!("coefficient function must return {m} x {m} matrices")));
        }
        let coeffs = (0..m)
            .map(|i| (0..m).map(|j| GridFunction { domain: domain.clone(), values: samples.iter().map(|s| s[i][j]).collect() }).collect())
            .collect();
        DiscreteOperator::new(sys, coeffs, nu, order)
    }

    pub fn constant(sys: &HormanderSystem, domain: &BoxDomain, a: &ConstantMatrix, nu: f64, order: StencilOrder) -> Result<DiscreteOperator> {
        let rows = a.rows();
        DiscreteOperator::from_fn(sys, domain, |_| rows.clone(), nu, order)
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.coeffs[0][0].domain
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn order(&self) -> StencilOrder {
        self.order
    }

    pub fn fields(&self) -> &[PolyVectorField] {
        &self.fields
    }

    pub fn coefficients(&self) -> &[Vec<GridFunction>] {
        &self.coeffs
    }

    /// `L u` on the grid shrunk by two stencil widths.
    pub fn apply(&self, u: &GridFunction) -> Result<GridFunction> {
        if &u.domain != self.domain() {
            return Err(Error::DimensionMismatch("u and the coefficients live on different grids".into()));
        }
        let target = u.domain.shrunk(2 * self.order.width())?;
        let mut acc = GridFunction::zeros(&target);
        let m = self.fields.len();
        for i in 0..m {
            for j in 0..m {
                let d = apply_word_grid(&self.fields, &[i, j], u, self.order)?;
                let a = self.coeffs[i][j].restrict(&target)?;
                acc = acc.combine(1.0, &a.mul(&d)?, 1.0)?;
            }
        }
        Ok(acc)
    }

    /// Largest `|X_I a_ij|` over `|I| <= k`; must be finite for the higher-order estimate.
    pub fn coefficient_derivative_bound(&self, k: usize) -> Result<f64> {
        let mut bound = 0.0f64;
        for a in self.coeffs.iter().flatten() {
            for len in 0..=k {
                for w in words(self.fields.len(), len) {
                    bound = bound.max(apply_word_grid(&self.fields, &w, a, self.order)?.sup_norm());
                }
            }
        }
        Ok(bound)
    }
}

pub fn apply_l(op: &DiscreteOperator, u: &GridFunction) -> Result<GridFunction> {
    op.apply(u)
}

/// Rejects `u` unless it vanishes (relative to its maximum) on the outer
/// `layers` node layers of its grid.
fn require_margin(u: &GridFunction, layers: usize) -> Result<()> {
    let inner = u.domain.shrunk(layers)?;
    let off = u.domain.offset_of(&inner).expect("shrunk grid is aligned");
    let tol = 1e-12 * u.sup_norm();
    for i in 0..u.len() {
        let m = u.domain.multi_index(i);
        let inside = m.iter().zip(&off).zip(&inner.counts).all(|((a, o), c)| *a >= *o && *a < o + c);
        if !inside && u.values[i].abs() > tol {
            return Err(Error::MarginExhausted(format!("u is non-zero within {layers} layers of the grid edge at {:?}", u.domain.coords(i))));
        }
    }
    Ok(())
}

/// Both sides of a (higher-order) a-priori estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct AprioriRecord {
    pub k: usize,
    pub p: f64,
    /// `||u||_{W^{k+2,p}}`.
    pub solution: SobolevReport,
    /// `||L u||_{W^{k,p}}`.
    pub operator: SobolevReport,
    pub u_norm: f64,
    pub ratio: f64,
}

/// `||u||_{W^{k+2,p}} / (||L u||_{W^{k,p}} + ||u||_p)`, zero for `u = 0`.
pub fn higher_order_ratio(op: &DiscreteOperator, u: &GridFunction, k: usize, p: f64) -> Result<AprioriRecord> {
    require_margin(u, (k + 2) * op.order.width())?;
    if k > 0 && !op.coefficient_derivative_bound(k)?.is_finite() {
        return Err(Error::InvalidParameter("coefficient derivatives are not bounded".into()));
    }
    let solution = sobolev_norm(&op.fields, u, k + 2, p, op.order)?;
    let lu = op.apply(u)?;
    let operator = sobolev_norm(&op.fields, &lu, k, p, op.order)?;
    let u_norm = u.lp_norm(p);
    let den = operator.total + u_norm;
    let ratio = if den > 0.0 { solution.total / den } else { 0.0 };
    Ok(AprioriRecord { k, p, solution, operator, u_norm, ratio })
}

pub fn apriori_ratio(op: &DiscreteOperator, u: &GridFunction, p: f64) -> Result<AprioriRecord> {
    higher_order_ratio(op, u, 0, p)
}

/// One value of `eps` in `||X_i u|| <= eps ||X_i^2 u|| + (c / eps) ||u||`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterpolationRecord {
    pub eps: f64,
    pub lhs: f64,
    pub second: f64,
    pub zeroth: f64,
}

impl InterpolationRecord {
    pub fn first_term(&self) -> f64 {
        self.eps * self.second
    }

    /// Smallest `c` making the inequality hold at this `eps`.
    pub fn required_c(&self) -> f64 {
        let gap = self.lhs - self.first_term();
        if gap <= 0.0 {
            0.0
        } else if self.zeroth > 0.0 {
            gap * self.eps / self.zeroth
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InterpolationReport {
    pub records: Vec<InterpolationRecord>,
    /// Smallest `c_p` valid for every `eps` in the list.
    pub c_p: f64,
}

pub fn interpolation_check(fields: &[PolyVectorField], u: &GridFunction, i: usize, p: f64, eps_list: &[f64], order: StencilOrder) -> Result<InterpolationReport> {
    if i >= fields.len() {
        return Err(Error::InvalidParameter(format!("no field with index {i}")));
    }
    let lhs = apply_word_grid(fields, &[i], u, order)?.lp_norm(p);
    let second = apply_word_grid(fields, &[i, i], u, order)?.lp_norm(p);
    let zeroth = u.lp_norm(p);
    let records: Vec<InterpolationRecord> = eps_list.iter().map(|&eps| InterpolationRecord { eps, lhs, second, zeroth }).collect();
    let c_p = records.iter().map(|r| r.required_c()).fold(0.0, f64::max);
    Ok(InterpolationReport { records, c_p })
}
