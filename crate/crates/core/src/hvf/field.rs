use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;

use super::poly::{Coeff, CompiledPoly, Monomial, Poly};
use crate::error::{Error, Result};

/// A vector field `sum_k c_k(x) d/dx_k` with polynomial coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyVectorField {
    comps: Vec<Poly>,
}

impl PolyVectorField {
    pub fn new(comps: Vec<Poly>) -> Result<Self> {
        let n = comps.len();
        if n == 0 {
            return Err(Error::DimensionMismatch("vector field with no components".into()));
        }
        if let Some(p) = comps.iter().find(|p| p.nvars() != n) {
            return Err(Error::DimensionMismatch(format!(
                "component polynomial in {} variables for a field on R^{}",
                p.nvars(),
                n
            )));
        }
        Ok(PolyVectorField { comps })
    }

    pub fn zero(n: usize) -> Self {
        PolyVectorField { comps: vec![Poly::zero(n); n] }
    }

    /// The coordinate field d/dx_k.
    pub fn coordinate(n: usize, k: usize) -> Self {
        let mut comps = vec![Poly::zero(n); n];
        comps[k] = Poly::int(n, 1);
        PolyVectorField { comps }
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn components(&self) -> &[Poly] {
        &self.comps
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(Poly::is_zero)
    }

    /// Apply the field as a derivation to a polynomial.
    pub fn apply(&self, f: &Poly) -> Poly {
        let mut acc = Poly::zero(self.dim());
        for (k, c) in self.comps.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let d = f.derivative(k);
            if !d.is_zero() {
                acc = &acc + &(c * &d);
            }
        }
        acc
    }

    /// Lie bracket `[self, other] = self(other_k) - other(self_k)` componentwise.
    pub fn bracket(&self, other: &PolyVectorField) -> PolyVectorField {
        let comps = (0..self.dim())
            .map(|k| &self.apply(&other.comps[k]) - &other.apply(&self.comps[k]))
            .collect();
        PolyVectorField { comps }
    }

    pub fn scale(&self, c: Coeff) -> PolyVectorField {
        PolyVectorField { comps: self.comps.iter().map(|p| p.scale(c)).collect() }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.comps.iter().map(|p| p.eval(x)).collect()
    }

    pub fn compile(&self) -> CompiledField {
        CompiledField { comps: self.comps.iter().map(Poly::compile).collect() }
    }

    /// Flatten to a sparse coordinate vector keyed by (component, monomial).
    pub(crate) fn coordinates(&self) -> BTreeMap<(usize, Monomial), Coeff> {
        let mut out = BTreeMap::new();
        for (k, p) in self.comps.iter().enumerate() {
            for (m, c) in p.terms() {
                if !c.is_zero() {
                    out.insert((k, m.clone()), *c);
                }
            }
        }
        out
    }
}

impl fmt::Display for PolyVectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .comps
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.is_zero())
            .map(|(k, p)| {
                if p.num_terms() == 1 {
                    format!("{}*d{}", p, k + 1)
                } else {
                    format!("({})*d{}", p, k + 1)
                }
            })
            .collect();
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

/// Fast floating-point evaluation of a vector field.
#[derive(Clone, Debug)]
pub struct CompiledField {
    comps: Vec<CompiledPoly>,
}

impl CompiledField {
    #[inline]
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.comps) {
            *o = c.eval(x);
        }
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }
}

/// Anisotropic dilations `delta_lambda(x) = (lambda^sigma_1 x_1, ..., lambda^sigma_n x_n)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DilationFamily {
    sigma: Vec<u32>,
}

impl DilationFamily {
    pub fn new(sigma: Vec<u32>) -> Result<Self> {
        if sigma.is_empty() {
            return Err(Error::InvalidDilation("empty exponent list".into()));
        }
        if sigma[0] != 1 {
            return Err(Error::InvalidDilation(format!("first exponent must be 1, got {}", sigma[0])));
        }
        if sigma.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidDilation(format!("exponents must be nondecreasing: {sigma:?}")));
        }
        Ok(DilationFamily { sigma })
    }

    pub fn exponents(&self) -> &[u32] {
        &self.sigma
    }

    /// Homogeneous dimension q.
    pub fn q(&self) -> u32 {
        self.sigma.iter().sum()
    }

    pub fn apply(&self, lambda: f64, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.sigma).map(|(v, s)| v * lambda.powi(*s as i32)).collect()
    }
}

/// One offending monomial in a homogeneity check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Offense {
    pub component: usize,
    pub monomial: Vec<u32>,
    pub weight: u32,
    pub expected: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldHomogeneity {
    pub field: usize,
    pub pass: bool,
    pub offenses: Vec<Offense>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomogeneityReport {
    pub fields: Vec<FieldHomogeneity>,
}

impl HomogeneityReport {
    pub fn pass(&self) -> bool {
        self.fields.iter().all(|f| f.pass)
    }
}

/// A system of polynomial vector fields with a dilation family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HormanderSystem {
    pub name: String,
    fields: Vec<PolyVectorField>,
    dilation: DilationFamily,
}

impl HormanderSystem {
    pub fn new(name: impl Into<String>, fields: Vec<PolyVectorField>, dilation: DilationFamily) -> Result<Self> {
        let n = dilation.exponents().len();
        if fields.is_empty() {
            return Err(Error::DimensionMismatch("system has no fields".into()));
        }
        if let Some((i, f)) = fields.iter().enumerate().find(|(_, f)| f.dim() != n) {
            return Err(Error::DimensionMismatch(format!(
                "field {} lives on R^{} but the dilations act on R^{}",
                i + 1,
                f.dim(),
                n
            )));
        }
        Ok(HormanderSystem { name: name.into(), fields, dilation })
    }

    pub fn n(&self) -> usize {
        self.dilation.exponents().len()
    }

    pub fn m(&self) -> usize {
        self.fields.len()
    }

    pub fn q(&self) -> u32 {
        self.dilation.q()
    }

    pub fn sigma(&self) -> &[u32] {
        self.dilation.exponents()
    }

    pub fn dilation(&self) -> &DilationFamily {
        &self.dilation
    }

    pub fn fields(&self) -> &[PolyVectorField] {
        &self.fields
    }

    pub fn compiled_fields(&self) -> Vec<CompiledField> {
        self.fields.iter().map(PolyVectorField::compile).collect()
    }

    /// Each field must be homogeneous of degree 1: the coefficient of
    /// d/dx_k has weighted degree sigma_k - 1.
    pub fn check_homogeneity(&self) -> HomogeneityReport {
        let sigma = self.sigma();
        let fields = self
            .fields
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let mut offenses = Vec::new();
                for (k, p) in f.components().iter().enumerate() {
                    let expected = sigma[k].checked_sub(1);
                    for (m, _) in p.terms() {
                        let w = m.weight(sigma);
                        if Some(w) != expected {
                            offenses.push(Offense {
                                component: k + 1,
                                monomial: m.0.clone(),
                                weight: w,
                                expected: sigma[k] - 1,
                            });
                        }
                    }
                }
                FieldHomogeneity { field: i + 1, pass: offenses.is_empty(), offenses }
            })
            .collect();
        HomogeneityReport { fields }
    }

    pub fn require_homogeneous(&self) -> Result<()> {
        let rep = self.check_homogeneity();
        if let Some(f) = rep.fields.iter().find(|f| !f.pass) {
            let o = &f.offenses[0];
            return Err(Error::NotHomogeneous(format!(
                "field {} component {} monomial {:?} has weight {} (expected {})",
                f.field, o.component, o.monomial, o.weight, o.expected
            )));
        }
        Ok(())
    }
}
