//! Homogeneous groups lifting catalog systems, and their verification.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hvf::{builtin, default_max_depth, lie_closure, DilationFamily, hormander_rank, Coeff, CompiledField, CompiledPoly, HormanderSystem, Monomial, Poly, PolyVectorField};
use crate::jet::Jet;

/// A homogeneous group `(R^N, *, D_lambda)` with `N = n + p` together with
/// lifted fields whose first `n` components reproduce the base fields.
#[derive(Clone, Debug)]
pub struct CarnotLift {
    pub name: String,
    base: HormanderSystem,
    weights: Vec<u32>,
    law: Vec<Poly>,
    inverse: Vec<Poly>,
    fields: Vec<PolyVectorField>,
    law_c: Vec<CompiledPoly>,
    inverse_c: Vec<CompiledPoly>,
    fields_c: Vec<CompiledField>,
}

fn r(a: i64, b: i64) -> Coeff {
    Coeff::new(a, b)
}

/// Monomial helper: `mono(N2, &[(var, exp)...])`.
fn mono(nv: usize, f: &[(usize, u32)]) -> Monomial {
    let mut e = vec![0; nv];
    for (k, p) in f {
        e[*k] = *p;
    }
    Monomial(e)
}

fn poly(nv: usize, terms: &[(&[(usize, u32)], Coeff)]) -> Poly {
    let mut p = Poly::zero(nv);
    for (f, c) in terms {
        p.add_term(mono(nv, f), *c);
    }
    p
}

impl CarnotLift {
    /// Assemble a lift from its data; structural checks only (see [`verify_lift`]).
    pub fn new(name: impl Into<String>, base: HormanderSystem, weights: Vec<u32>, law: Vec<Poly>, inverse: Vec<Poly>, fields: Vec<PolyVectorField>) -> Result<CarnotLift> {
        let big_n = weights.len();
        if big_n <= base.n() {
            return Err(Error::DimensionMismatch(format!("lifted dimension {big_n} must exceed n = {}", base.n())));
        }
        if weights[..base.n()] != *base.sigma() || weights.iter().any(|w| *w == 0) {
            return Err(Error::InvalidDilation("lift weights must start with the base exponents".into()));
        }
        if law.len() != big_n || law.iter().any(|p| p.nvars() != 2 * big_n) {
            return Err(Error::DimensionMismatch("group law must be N polynomials in 2N variables".into()));
        }
        if inverse.len() != big_n || inverse.iter().any(|p| p.nvars() != big_n) {
            return Err(Error::DimensionMismatch("inversion must be N polynomials in N variables".into()));
        }
        if fields.len() != base.m() || fields.iter().any(|f| f.dim() != big_n) {
            return Err(Error::DimensionMismatch("one lifted field per base field, on R^N".into()));
        }
        let law_c = law.iter().map(Poly::compile).collect();
        let inverse_c = inverse.iter().map(Poly::compile).collect();
        let fields_c = fields.iter().map(PolyVectorField::compile).collect();
        Ok(CarnotLift { name: name.into(), base, weights, law, inverse, fields, law_c, inverse_c, fields_c })
    }

    pub fn base(&self) -> &HormanderSystem {
        &self.base
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    pub fn m(&self) -> usize {
        self.base.m()
    }

    /// Fiber dimension `p = N - n`.
    pub fn p(&self) -> usize {
        self.weights.len() - self.base.n()
    }

    pub fn big_n(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    /// Homogeneous dimension of the group.
    pub fn big_q(&self) -> u32 {
        self.weights.iter().sum()
    }

    pub fn law(&self) -> &[Poly] {
        &self.law
    }

    pub fn inverse_law(&self) -> &[Poly] {
        &self.inverse
    }

    pub fn fields(&self) -> &[PolyVectorField] {
        &self.fields
    }

    pub fn compiled_fields(&self) -> &[CompiledField] {
        &self.fields_c
    }

    /// Only the grushin(1) lift carries a closed-form fundamental solution.
    pub fn has_fundamental_solution(&self) -> bool {
        self.name == "grushin1"
    }

    pub fn mul(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let mut uv = Vec::with_capacity(2 * u.len());
        uv.extend_from_slice(u);
        uv.extend_from_slice(v);
        self.law_c.iter().map(|p| p.eval(&uv)).collect()
    }

    /// `u * v` written into `out` without allocating (dimension at most 8).
    pub fn mul_into(&self, u: &[f64], v: &[f64], out: &mut [f64]) {
        let n = u.len();
        let mut uv = [0.0; 16];
        uv[..n].copy_from_slice(u);
        uv[n..2 * n].copy_from_slice(v);
        for (o, p) in out.iter_mut().zip(&self.law_c) {
            *o = p.eval(&uv[..2 * n]);
        }
    }

    pub fn inv(&self, u: &[f64]) -> Vec<f64> {
        self.inverse_c.iter().map(|p| p.eval(u)).collect()
    }

    pub fn dilate(&self, lambda: f64, u: &[f64]) -> Vec<f64> {
        u.iter().zip(&self.weights).map(|(x, w)| x * lambda.powi(*w as i32)).collect()
    }

    pub fn mul_jet(&self, u: &[Jet], v: &[Jet]) -> Vec<Jet> {
        let uv: Vec<Jet> = u.iter().chain(v.iter()).cloned().collect();
        self.law.iter().map(|p| p.eval_jet(&uv)).collect()
    }

    pub fn inv_jet(&self, u: &[Jet]) -> Vec<Jet> {
        self.inverse.iter().map(|p| p.eval_jet(u)).collect()
    }

    /// `(x, xi)` as a point of the group.
    pub fn point(&self, x: &[f64], xi: &[f64]) -> Vec<f64> {
        x.iter().chain(xi.iter()).cloned().collect()
    }

    pub fn project(&self, u: &[f64]) -> Vec<f64> {
        u[..self.n()].to_vec()
    }

    /// Lifted fields with the group dilation, as a system on `R^N`.
    /// The weights need not be sorted, so this is only used for closure and rank.
    pub fn lifted_closure_rank(&self) -> Result<usize> {
        let mut order: Vec<usize> = (0..self.big_n()).collect();
        order.sort_by_key(|k| self.weights[*k]);
        // permute coordinates so the weights are nondecreasing
        let perm_poly = |p: &Poly| -> Poly {
            let mut out = Poly::zero(p.nvars());
            for (m, c) in p.terms() {
                let e: Vec<u32> = order.iter().map(|k| m.0[*k]).collect();
                out.add_term(Monomial(e), *c);
            }
            out
        };
        let fields: Vec<PolyVectorField> = self
            .fields
            .iter()
            .map(|f| PolyVectorField::new(order.iter().map(|k| perm_poly(&f.components()[*k])).collect()))
            .collect::<Result<_>>()?;
        let sigma: Vec<u32> = order.iter().map(|k| self.weights[*k]).collect();
        let sys = HormanderSystem::new(format!("{}-lift", self.name), fields, DilationFamily::new(sigma)?)?;
        let cl = lie_closure(&sys, default_max_depth(&sys))?;
        Ok(hormander_rank(&cl, &vec![0.0; self.big_n()]))
    }

    /// The same lift with a different group law and inversion (used for negative controls).
    pub fn with_law(&self, law: Vec<Poly>, inverse: Vec<Poly>) -> Result<CarnotLift> {
        CarnotLift::new(format!("{}-modified", self.name), self.base.clone(), self.weights.clone(), law, inverse, self.fields.clone())
    }
}

/// Names of the lifts in the catalog.
pub fn lift_names() -> Vec<&'static str> {
    vec!["grushin1", "chain3", "powers3"]
}

/// Catalog lift by system name.
pub fn lift(name: &str) -> Result<CarnotLift> {
    let base = builtin(name).map_err(|_| Error::NoLift(name.into()))?;
    let one = Coeff::from_integer(1);
    match name {
        "grushin1" => {
            // coordinates (x1, x2, xi); u = 0..3, v = 3..6
            let nv = 6;
            let law = vec![
                poly(nv, &[(&[(0, 1)], one), (&[(3, 1)], one)]),
                poly(nv, &[(&[(1, 1)], one), (&[(4, 1)], one), (&[(0, 1), (5, 1)], one)]),
                poly(nv, &[(&[(2, 1)], one), (&[(5, 1)], one)]),
            ];
            let inverse = vec![
                poly(3, &[(&[(0, 1)], -one)]),
                poly(3, &[(&[(1, 1)], -one), (&[(0, 1), (2, 1)], one)]),
                poly(3, &[(&[(2, 1)], -one)]),
            ];
            let fields = vec![
                PolyVectorField::coordinate(3, 0),
                PolyVectorField::new(vec![Poly::zero(3), Poly::var(3, 0), Poly::int(3, 1)])?,
            ];
            CarnotLift::new(name, base, vec![1, 2, 1], law, inverse, fields)
        }
        "chain3" => {
            // (x1, x2, x3, xi); u = 0..4, v = 4..8
            let nv = 8;
            let law = vec![
                poly(nv, &[(&[(0, 1)], one), (&[(4, 1)], one)]),
                poly(nv, &[(&[(1, 1)], one), (&[(5, 1)], one), (&[(0, 1), (7, 1)], one)]),
                poly(nv, &[(&[(2, 1)], one), (&[(6, 1)], one), (&[(1, 1), (7, 1)], one), (&[(0, 1), (7, 2)], r(1, 2))]),
                poly(nv, &[(&[(3, 1)], one), (&[(7, 1)], one)]),
            ];
            let inverse = vec![
                poly(4, &[(&[(0, 1)], -one)]),
                poly(4, &[(&[(1, 1)], -one), (&[(0, 1), (3, 1)], one)]),
                poly(4, &[(&[(2, 1)], -one), (&[(1, 1), (3, 1)], one), (&[(0, 1), (3, 2)], r(-1, 2))]),
                poly(4, &[(&[(3, 1)], -one)]),
            ];
            let fields = vec![
                PolyVectorField::coordinate(4, 0),
                PolyVectorField::new(vec![Poly::zero(4), Poly::var(4, 0), Poly::var(4, 1), Poly::int(4, 1)])?,
            ];
            CarnotLift::new(name, base, vec![1, 2, 3, 1], law, inverse, fields)
        }
        "powers3" => {
            let nv = 8;
            let two = Coeff::from_integer(2);
            let law = vec![
                poly(nv, &[(&[(0, 1)], one), (&[(4, 1)], one)]),
                poly(nv, &[(&[(1, 1)], one), (&[(5, 1)], one), (&[(0, 1), (7, 1)], one)]),
                poly(nv, &[(&[(2, 1)], one), (&[(6, 1)], one), (&[(0, 2), (7, 1)], one), (&[(0, 1), (5, 1)], two)]),
                poly(nv, &[(&[(3, 1)], one), (&[(7, 1)], one)]),
            ];
            let inverse = vec![
                poly(4, &[(&[(0, 1)], -one)]),
                poly(4, &[(&[(1, 1)], -one), (&[(0, 1), (3, 1)], one)]),
                poly(4, &[(&[(2, 1)], -one), (&[(0, 1), (1, 1)], two), (&[(0, 2), (3, 1)], -one)]),
                poly(4, &[(&[(3, 1)], -one)]),
            ];
            let x1 = Poly::var(4, 0);
            let fields = vec![
                PolyVectorField::coordinate(4, 0),
                PolyVectorField::new(vec![Poly::zero(4), x1.clone(), &x1 * &x1, Poly::int(4, 1)])?,
            ];
            CarnotLift::new(name, base, vec![1, 2, 3, 1], law, inverse, fields)
        }
        _ => Err(Error::NoLift(name.into())),
    }
}

/// Outcome of [`verify_lift`].
#[derive(Clone, Debug, PartialEq)]
pub struct LiftReport {
    pub projection: bool,
    /// Largest finite-difference residual of `X(f o L_g)(u) - (Xf)(g * u)`.
    pub left_invariance_residual: f64,
    pub left_invariance: bool,
    /// Exact polynomial identity `D(L_g)(u) X(u) = X(g * u)`.
    pub left_invariance_exact: bool,
    pub homogeneity: bool,
    /// Associativity, identity, inversion and dilation automorphism, exactly.
    pub group_axioms: bool,
    pub lie_rank: usize,
    pub big_n: usize,
    pub q_exceeds_base: bool,
    pub samples: usize,
}

impl LiftReport {
    pub fn pass(&self) -> bool {
        self.projection
            && self.left_invariance
            && self.left_invariance_exact
            && self.homogeneity
            && self.group_axioms
            && self.lie_rank == self.big_n
            && self.q_exceeds_base
    }
}

/// Finite-difference tolerance for left invariance.
pub const LEFT_INVARIANCE_TOL: f64 = 1e-6;

fn test_function(u: &[f64]) -> f64 {
    let r2: f64 = u.iter().map(|v| v * v).sum();
    let phase: f64 = u.iter().enumerate().map(|(k, v)| (k as f64 + 1.3) * v).sum();
    (-0.25 * r2).exp() * (1.5 + phase.sin())
}

/// Fourth-order central difference of `t -> g(t)` at 0.
fn fd4<F: Fn(f64) -> f64>(g: F, h: f64) -> f64 {
    (8.0 * (g(h) - g(-h)) - (g(2.0 * h) - g(-2.0 * h))) / (12.0 * h)
}

fn law_identity_checks(lift: &CarnotLift) -> bool {
    let big_n = lift.big_n();
    let vars = |off: usize, nv: usize| -> Vec<Poly> { (0..big_n).map(|k| Poly::var(nv, off + k)).collect() };
    // associativity in 3N variables
    let nv3 = 3 * big_n;
    let (u, v, w) = (vars(0, nv3), vars(big_n, nv3), vars(2 * big_n, nv3));
    let mul = |a: &[Poly], b: &[Poly]| -> Vec<Poly> {
        let ab: Vec<Poly> = a.iter().chain(b.iter()).cloned().collect();
        lift.law.iter().map(|p| p.compose(&ab)).collect()
    };
    let assoc = mul(&mul(&u, &v), &w) == mul(&u, &mul(&v, &w));
    // identity and inverse in N variables
    let x = vars(0, big_n);
    let zero: Vec<Poly> = (0..big_n).map(|_| Poly::zero(big_n)).collect();
    let ident = mul(&x, &zero) == x && mul(&zero, &x) == x;
    let inv: Vec<Poly> = lift.inverse.iter().map(|p| p.compose(&x)).collect();
    let inverse_ok = mul(&x, &inv).iter().all(Poly::is_zero) && mul(&inv, &x).iter().all(Poly::is_zero);
    // dilation automorphism: every law component is homogeneous of its weight
    let w2: Vec<u32> = lift.weights.iter().chain(lift.weights.iter()).cloned().collect();
    let dil = lift.law.iter().zip(&lift.weights).all(|(p, wt)| p.is_weighted_homogeneous(&w2, *wt));
    assoc && ident && inverse_ok && dil
}

fn exact_left_invariance(lift: &CarnotLift) -> bool {
    // D_u(g * u) X(u) - X(g * u) == 0 as polynomials in (g, u)
    let big_n = lift.big_n();
    let nv = 2 * big_n;
    let u: Vec<Poly> = (0..big_n).map(|k| Poly::var(nv, big_n + k)).collect();
    let gu: Vec<Poly> = lift.law.clone();
    for f in &lift.fields {
        let xu: Vec<Poly> = f.components().iter().map(|c| c.compose(&u)).collect();
        for (k, comp) in gu.iter().enumerate() {
            let mut lhs = Poly::zero(nv);
            for l in 0..big_n {
                lhs = &lhs + &(&comp.derivative(big_n + l) * &xu[l]);
            }
            let rhs = f.components()[k].compose(&gu);
            if !(&lhs - &rhs).is_zero() {
                return false;
            }
        }
    }
    true
}

/// Verify projection, left invariance, homogeneity and the group axioms.
pub fn verify_lift(lift: &CarnotLift, samples: usize, seed: u64) -> LiftReport {
    let n = lift.n();
    let big_n = lift.big_n();
    // (a) projection: first n components depend on x only and equal the base fields
    let projection = lift.fields.iter().zip(lift.base.fields()).all(|(lf, bf)| {
        (0..n).all(|k| {
            let lc = &lf.components()[k];
            lc.depends_only_on(0..n) && *lc == bf.components()[k].embed(big_n, 0)
        })
    });
    // (b) left invariance by finite differences
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let g: Vec<f64> = (0..big_n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u: Vec<f64> = (0..big_n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let gu = lift.mul(&g, &u);
        for f in &lift.fields {
            let xu = f.eval(&u);
            let xgu = f.eval(&gu);
            let lhs = fd4(|t| {
                let p: Vec<f64> = u.iter().zip(&xu).map(|(a, b)| a + t * b).collect();
                test_function(&lift.mul(&g, &p))
            }, 1e-3);
            let rhs = fd4(|t| {
                let p: Vec<f64> = gu.iter().zip(&xgu).map(|(a, b)| a + t * b).collect();
                test_function(&p)
            }, 1e-3);
            worst = worst.max((lhs - rhs).abs() / (1.0 + lhs.abs().max(rhs.abs())));
        }
    }
    // (c) degree-1 homogeneity: component k has weight alpha_k - 1
    let homogeneity = lift.fields.iter().all(|f| {
        f.components().iter().zip(&lift.weights).all(|(c, w)| c.is_zero() || c.is_weighted_homogeneous(&lift.weights, w - 1))
    });
    let lie_rank = lift.lifted_closure_rank().unwrap_or(0);
    LiftReport {
        projection,
        left_invariance_residual: worst,
        left_invariance: worst <= LEFT_INVARIANCE_TOL,
        left_invariance_exact: exact_left_invariance(lift),
        homogeneity,
        group_axioms: law_identity_checks(lift),
        lie_rank,
        big_n,
        q_exceeds_base: lift.big_q() > lift.base.q(),
        samples,
    }
}
