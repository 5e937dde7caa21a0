use std::sync::OnceLock;

use subelliptic::analysis::*;
use subelliptic::bump::Bump;
use subelliptic::geometry::*;
use subelliptic::grid::GridFunction;
use subelliptic::hvf::builtin;
use subelliptic::jet::Jet;
use subelliptic::kernels::{KernelOperator, SmoothedKernelSpec, TRule};
use subelliptic::lift::*;
use subelliptic::stats::spread;
use subelliptic::testfn::{planar_family, TestFunction};

const FAMILY: BallFamilyConfig = BallFamilyConfig { stride: 2, r0: 0.1, ratio: 2.0, levels: 4, subdivisions: 0 };

struct Setup {
    metric: GridMetric,
    family: BallFamily,
}

fn setup() -> &'static Setup {
    static S: OnceLock<Setup> = OnceLock::new();
    S.get_or_init(|| {
        let dom = BoxDomain::new(vec![-1.6, -1.6], vec![1.6, 1.6], vec![81, 81]).unwrap();
        let metric = GridMetric::new(&builtin("grushin1").unwrap(), dom, &CCGraphConfig::default()).unwrap();
        let family = BallFamily::new(&metric, &FAMILY).unwrap();
        Setup { metric, family }
    })
}

fn dom() -> &'static BoxDomain {
    setup().metric.domain()
}

/// Ten test functions: the planar family at two scales.
fn functions() -> Vec<GridFunction> {
    let mut out = Vec::new();
    for f in planar_family() {
        for lam in [1.0, 1.6] {
            let g = f.dilated(&[1, 2], lam);
            out.push(GridFunction::from_fn(dom(), |x| g.eval(x)));
        }
    }
    out
}

fn interior_nodes(step: usize) -> Vec<usize> {
    let d = dom();
    (0..d.len()).filter(|i| {
        let m = d.multi_index(*i);
        m.iter().all(|k| k % step == 0) && {
            let x = d.coords(*i);
            x[0].abs() <= 0.6 && x[1].abs() <= 0.6
        }
    }).collect()
}

#[test]
fn family_is_complete_and_validated() {
    let s = setup();
    assert_eq!(s.family.radii(), &[0.1, 0.2, 0.4, 0.8]);
    for level in 0..4 {
        // only nodes whose own ball reaches the boundary stay uncovered
        for i in s.family.uncovered(level) {
            assert!(ball_members(&s.metric, i, s.family.radii()[level]).unwrap().is_none());
            let x = dom().coords(i);
            assert!(1.6 - x[0].abs() < 0.9 * s.family.radii()[level] || 1.6 - x[1].abs() < 2.5 * s.family.radii()[level], "{x:?}");
        }
    }
    let e = FAMILY.enlarged();
    assert_eq!((e.stride, e.radii().len()), (1, 7));
    assert!(FAMILY.radii().iter().all(|r| e.radii().contains(r)));
    assert!(s.family.balls().iter().all(|b| b.members.iter().all(|&m| !dom().on_boundary(m as usize))));
    assert!(BallFamily::new(&s.metric, &BallFamilyConfig::dyadic(0, 0.1, 3)).is_err());
    assert!(BallFamily::new(&s.metric, &BallFamilyConfig { ratio: 1.0, ..FAMILY }).is_err());
}

#[test]
fn trivial_cases() {
    let s = setup();
    let c = GridFunction::constant(dom(), -1.5);
    let m = hl_maximal(&c, &s.family).unwrap();
    assert!(m.values.iter().all(|v| (v - 1.5).abs() < 1e-12));
    let sh = sharp_maximal(&c, &s.family).unwrap();
    assert!(sh.values.iter().all(|v| v.abs() < 1e-12));
    let eta = vmo_modulus(&c, &s.family).unwrap();
    assert!(eta.eta.iter().all(|v| v.abs() < 1e-12));
    let wrong = GridFunction::zeros(&BoxDomain::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![5, 5]).unwrap());
    assert!(hl_maximal(&wrong, &s.family).is_err());
}

#[test]
fn pointwise_relations() {
    let s = setup();
    let fs = functions();
    let (f, g) = (&fs[2], &fs[7]);
    let mf = hl_maximal(f, &s.family).unwrap();
    let mg = hl_maximal(g, &s.family).unwrap();
    let sf = sharp_maximal(f, &s.family).unwrap();
    let sg = sharp_maximal(g, &s.family).unwrap();
    let sum = f.combine(1.0, g, 1.0).unwrap();
    let msum = hl_maximal(&sum, &s.family).unwrap();
    let ssum = sharp_maximal(&sum, &s.family).unwrap();
    for i in 0..f.len() {
        assert!(sf.values[i] <= 2.0 * mf.values[i] + 1e-12);
        assert!(msum.values[i] <= mf.values[i] + mg.values[i] + 1e-12);
        assert!(ssum.values[i] <= sf.values[i] + sg.values[i] + 1e-12);
        assert!(mf.values[i] >= f.values[i].abs());
    }
    // every family ball average is a lower bound at its members
    for b in s.family.balls().iter().filter(|b| b.level == 0).step_by(7) {
        let avg = b.members.iter().map(|&m| f.values[m as usize].abs()).sum::<f64>() / b.members.len() as f64;
        assert!(b.members.iter().all(|&m| mf.values[m as usize] >= avg - 1e-12));
    }
    let node = dom().nearest(&[0.2, -0.1]).unwrap();
    assert!((hl_maximal_at(f, &s.family, node).unwrap() - mf.values[node]).abs() < 1e-12);

    // a sub-family never gives larger values
    let small = s.family.up_to(0.3);
    assert_eq!(small.radii().len(), 2);
    let ms = hl_maximal(f, &small).unwrap();
    let ss = sharp_maximal(f, &small).unwrap();
    assert!(ms.values.iter().zip(&mf.values).all(|(a, b)| a <= b));
    assert!(ss.values.iter().zip(&sf.values).all(|(a, b)| a <= b));
}

#[test]
fn maximal_inequality_and_fefferman_stein() {
    let s = setup();
    let fs = functions();
    let enlarged = BallFamily::new(&s.metric, &FAMILY.enlarged()).unwrap();
    assert!(enlarged.len() > s.family.len());
    for p in [1.5, 2.0, 3.0] {
        let hl: Vec<f64> = fs.iter().map(|f| hl_inequality(f, &s.family, p).unwrap().ratio()).collect();
        let c_p = hl.iter().cloned().fold(0.0, f64::max);
        assert!(c_p.is_finite() && c_p >= 1.0, "p {p}: {hl:?}");
        let mut enlarged_mf = Vec::new();
        for f in &fs {
            let a = hl_maximal(f, &s.family).unwrap();
            let b = hl_maximal(f, &enlarged).unwrap();
            assert!(a.values.iter().zip(&b.values).all(|(x, y)| x <= &(y + 1e-12)));
            enlarged_mf.push(b.lp_norm(p) / f.lp_norm(p));
        }

        let fs_ratio: Vec<f64> = fs.iter().map(|f| fefferman_stein(f, &s.family, p).unwrap().ratio()).collect();
        let fs_enlarged: Vec<f64> = fs.iter().map(|f| fefferman_stein(f, &enlarged, p).unwrap().ratio()).collect();
        let c1 = fs_ratio.iter().cloned().fold(0.0, f64::max);
        let c2 = fs_enlarged.iter().cloned().fold(0.0, f64::max);
        println!("p {p}: c_p {c_p:.3} (enlarged {:.3}), Fefferman-Stein C_p {c1:.3} -> {c2:.3}", enlarged_mf.iter().cloned().fold(0.0, f64::max));
        assert!(c1.is_finite() && c2.is_finite());
        assert!((c1 - c2).abs() <= 0.1 * c1, "Fefferman-Stein constant moved from {c1} to {c2}");
    }
}

#[test]
fn vmo_moduli() {
    let s = setup();
    let fs = functions();
    for f in &fs {
        let r = vmo_modulus(f, &s.family).unwrap();
        assert!(r.eta.windows(2).all(|w| w[0] <= w[1]));
        assert!(r.eta.iter().all(|v| *v >= 0.0 && *v <= 2.0 * f.sup_norm() + 1e-12));
        let shifted = vmo_modulus(&f.map(|v| v + 3.0), &s.family).unwrap();
        for (a, b) in r.eta.iter().zip(&shifted.eta) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + a));
        }
    }
    // Lipschitz functions: eta(r) <= c r sum_i ||X_i f||_inf, with ||X_1 sin x1|| = 1 and X_2 sin x1 = 0
    let sine = GridFunction::from_fn(dom(), |x| x[0].sin());
    let r = vmo_modulus(&sine, &s.family).unwrap();
    let per_r: Vec<f64> = r.eta.iter().zip(&r.radii).map(|(e, r)| e / r).collect();
    let c = r.lipschitz_constant(1.0);
    println!("eta(r)/r for sin x1: {per_r:.4?}, fitted c {c:.4}");
    assert!(c.is_finite() && c > 0.0);
    assert!(r.eta.iter().zip(&r.radii).all(|(e, rr)| *e <= c * rr + 1e-12));
    assert!(spread(&per_r) <= 3.0);
    assert_eq!(r.at(0.05), 0.0);
    assert_eq!(r.at(0.5), r.eta[2]);
}

fn kernel_setup(eps: f64, r: f64, scale: f64) -> (GridMetric, BallFamily, OscillationSetup) {
    let l = lift("grushin1").unwrap();
    let cal = calibrate_equivalence(&l, 200, 3, 40).unwrap();
    let fs = FundamentalSolution::new(&l, &ConstantMatrix::identity(2)).unwrap();
    let op = KernelOperator::new(&fs, SmoothedKernelSpec::new(0, 0, ConstantMatrix::identity(2), eps, r).unwrap(), &cal, TRule::COARSE).unwrap();
    // x2 spacing at most half the x1 spacing, so that the dilated grid keeps x1 as the coarse axis
    let dom = BoxDomain::new(vec![-1.2 * scale, -1.0 * scale * scale], vec![1.2 * scale, 1.0 * scale * scale], vec![81, 161]).unwrap();
    let metric = GridMetric::new(&builtin("grushin1").unwrap(), dom.clone(), &CCGraphConfig::default()).unwrap();
    let family = BallFamily::new(&metric, &BallFamilyConfig::dyadic(2, 0.1 * scale, 4)).unwrap();
    let f0 = planar_family()[2].dilated(&[1, 2], 4.0 / scale);
    let f = GridFunction::from_fn(&dom, |x| f0.eval(x));
    let setup = OscillationSetup::singular_integral(&op, &f, &family, 3.0, 2.0).unwrap();
    (metric, family, setup)
}

/// Centres on the support of f and away from it, so that both the local and
/// the maximal term of the right-hand side get to dominate somewhere.
fn ball_sample(metric: &GridMetric, scale: f64) -> Vec<(usize, usize)> {
    let d = metric.domain();
    let mut out = Vec::new();
    let inside = [(0.0, 0.0), (0.1, 0.02), (-0.15, -0.01), (0.2, 0.0), (-0.05, 0.03), (0.25, -0.04), (0.05, -0.02)];
    let outside = [(0.45, 0.0), (-0.45, 0.05), (0.0, 0.25), (0.3, 0.2), (-0.3, -0.2), (0.6, -0.1)];
    for (cx, cy) in inside.into_iter().chain(outside) {
        let c = d.nearest(&[cx * scale, cy * scale * scale]).unwrap();
        let x0 = d.nearest(&[(cx + 0.03) * scale, cy * scale * scale]).unwrap();
        out.push((c, x0));
    }
    out
}

#[test]
fn singular_integral_oscillation() {
    let (metric, _, setup) = kernel_setup(0.02, 0.3, 1.0);
    let mut per_k = Vec::new();
    let mut all = Vec::new();
    for k in [2.0, 4.0, 8.0] {
        let mut recs = Vec::new();
        for (c, x0) in ball_sample(&metric, 1.0) {
            for r in [0.04, 0.06, 0.09] {
                recs.push(setup.check(&metric, c, r, x0, k).unwrap());
            }
        }
        let used = recs.iter().filter(|r| !r.skipped).count();
        assert!(used >= 20, "k {k}: only {used} balls");
        let c = fitted_constant(&recs);
        assert!(recs.iter().filter(|r| !r.skipped).all(|r| r.lhs <= c * r.rhs() * (1.0 + 1e-12)));
        per_k.push(c);
        all.extend(recs);
    }
    // the local term carries k^(q/p), so the per-k minimal constants drift
    // down with k; the spread is reported, a single c over all k is asserted
    println!("fitted c per k: {per_k:.4?}, spread {:.2}", spread(&per_k));
    assert!(per_k.iter().all(|c| c.is_finite() && *c > 0.0));
    let single = fitted_constant(&all);
    assert!(all.iter().filter(|r| !r.skipped).all(|r| r.lhs <= single * r.rhs() * (1.0 + 1e-12)));

    // zero input
    let zero = OscillationSetup::singular_integral(
        &KernelOperator::new(
            &FundamentalSolution::new(&lift("grushin1").unwrap(), &ConstantMatrix::identity(2)).unwrap(),
            SmoothedKernelSpec::new(0, 0, ConstantMatrix::identity(2), 0.02, 0.3).unwrap(),
            &calibrate_equivalence(&lift("grushin1").unwrap(), 200, 3, 40).unwrap(),
            TRule::COARSE,
        )
        .unwrap(),
        &GridFunction::zeros(metric.domain()),
        &BallFamily::new(&metric, &BallFamilyConfig::dyadic(4, 0.2, 2)).unwrap(),
        3.0,
        2.0,
    )
    .unwrap();
    let (c, x0) = ball_sample(&metric, 1.0)[0];
    let rec = zero.check(&metric, c, 0.1, x0, 2.0).unwrap();
    assert_eq!((rec.lhs, rec.rhs()), (0.0, 0.0));
    assert!(setup.check(&metric, c, 0.1, x0, 1.5).is_err());
    let far = metric.domain().nearest(&[0.9, 0.5]).unwrap();
    assert!(setup.check(&metric, c, 0.1, far, 2.0).is_err());

    // the same experiment dilated by 2
    let (m2, _, s2) = kernel_setup(0.04, 0.6, 2.0);
    for (((c, x0), (c2, x2)), r) in ball_sample(&metric, 1.0).into_iter().zip(ball_sample(&m2, 2.0)).zip([0.04, 0.06, 0.09].into_iter().cycle()) {
        let a = setup.check(&metric, c, r, x0, 2.0).unwrap();
        let b = s2.check(&m2, c2, 2.0 * r, x2, 2.0).unwrap();
        if a.skipped || b.skipped {
            continue;
        }
        let (ra, rb) = (a.lhs / a.rhs(), b.lhs / b.rhs());
        assert!((ra - rb).abs() <= 0.1 * ra.max(rb), "ratio {ra} vs dilated {rb}");
    }
}

fn bump_u() -> TestFunction {
    planar_family()[3].clone()
}

fn krylov_records(setup: &OscillationSetup, metric: &GridMetric, k: f64) -> Vec<OscillationRecord> {
    let mut recs = Vec::new();
    for c in interior_nodes(4) {
        let x0 = c + dom().stride(0);
        for r in [0.1, 0.2] {
            if let Ok(rec) = setup.check(metric, c, r, x0, k) {
                recs.push(rec);
            }
        }
    }
    recs
}

#[test]
fn constant_matrix_oscillation() {
    let s = setup();
    let sys = builtin("grushin1").unwrap();
    let u = bump_u();
    let ujet = |x: &[Jet]| u.jet(x);
    let id = ConstantMatrix::identity(2);
    let st = OscillationSetup::constant_matrix(&sys, &ujet, &id, 0, 0, &s.family, 2.0).unwrap();
    let mut per_k = Vec::new();
    let mut by_k = Vec::new();
    for k in [2.0, 4.0, 8.0] {
        let recs = krylov_records(&st, &s.metric, k);
        assert!(recs.iter().filter(|r| !r.skipped).count() >= 20);
        per_k.push(fitted_constant(&recs));
        by_k.push(recs);
    }
    println!("constant A: fitted c per k {per_k:.4?}");
    assert!(per_k.iter().all(|c| c.is_finite() && *c > 0.0));
    // the maximal term enters as (1/k) M, so doubling k halves it exactly
    for (a, b) in by_k[0].iter().zip(&by_k[1]) {
        assert_eq!(a.maximal / a.k, 2.0 * (b.maximal / b.k));
    }
    assert!(OscillationSetup::constant_matrix(&sys, &ujet, &id, 0, 2, &s.family, 2.0).is_err());
    assert!(OscillationSetup::constant_matrix(&sys, &ujet, &id, 0, 0, &s.family, 1.0).is_err());

    // x1 x2 is annihilated by X1^2 + X2^2; under a wide bump L u stays small near the origin
    let wide = Bump::new(vec![0.0, 0.0], vec![1.4, 1.4]);
    let harmonic = |x: &[Jet]| x[0].mul(&x[1]).mul(&wide.jet(x));
    let hs = OscillationSetup::constant_matrix(&sys, &harmonic, &id, 0, 1, &s.family, 2.0).unwrap();
    let mut recs = Vec::new();
    for c in interior_nodes(4).into_iter().filter(|i| {
        let x = dom().coords(*i);
        x[0].abs() <= 0.2 && x[1].abs() <= 0.2
    }) {
        if let Ok(r) = hs.check(&s.metric, c, 0.1, c, 2.0) {
            recs.push(r);
        }
    }
    let used: Vec<&OscillationRecord> = recs.iter().filter(|r| !r.skipped).collect();
    assert!(used.len() >= 5);
    assert!(used.iter().all(|r| r.maximal / r.k > r.local), "maximal term should dominate");
    assert!(fitted_constant(&recs).is_finite());

    // the fitted constant over the nu = 1/4 sweep
    let mut sweep = Vec::new();
    for a in matrix_sweep(0.25).unwrap() {
        let st = OscillationSetup::constant_matrix(&sys, &ujet, &a, 0, 0, &s.family, 2.0).unwrap();
        sweep.push(fitted_constant(&krylov_records(&st, &s.metric, 4.0)));
    }
    println!("constant A sweep: {sweep:.4?} spread {:.3}", spread(&sweep));
    assert!(sweep.iter().all(|c| c.is_finite() && *c > 0.0));
}

#[test]
fn variable_coefficient_oscillation() {
    let s = setup();
    let sys = builtin("grushin1").unwrap();
    let u = bump_u();
    let ujet = |x: &[Jet]| u.jet(x);
    let d = dom();
    let one = GridFunction::constant(d, 1.0);
    let zero = GridFunction::zeros(d);
    let constant = vec![vec![one.clone(), zero.clone()], vec![zero.clone(), one.clone()]];
    let vc = OscillationSetup::variable_coefficients(&sys, &ujet, &constant, 0, 0, &s.family, 2.0, 2.0, 0.8).unwrap();
    let cc = OscillationSetup::constant_matrix(&sys, &ujet, &ConstantMatrix::identity(2), 0, 0, &s.family, 2.0).unwrap();
    let node = d.nearest(&[0.1, 0.1]).unwrap();
    let a = vc.check(&s.metric, node, 0.2, node, 4.0).unwrap();
    let b = cc.check(&s.metric, node, 0.2, node, 4.0).unwrap();
    assert_eq!(a.vmo, 0.0);
    assert_eq!((a.lhs, a.maximal), (b.lhs, b.maximal));

    let a11 = GridFunction::from_fn(d, |x| 2.0 + x[0].sin());
    let coeffs = vec![vec![a11.clone(), zero.clone()], vec![zero.clone(), one.clone()]];
    let modulus = CoefficientModulus::new(&coeffs, &s.family).unwrap();
    assert!(modulus.a_sharp.windows(2).all(|w| w[0] <= w[1]));
    assert!(modulus.a_sharp[0] > 0.0);
    assert_eq!(modulus.a_sharp, modulus.entries[0][0].eta);
    let st = OscillationSetup::variable_coefficients(&sys, &ujet, &coeffs, 0, 0, &s.family, 2.0, 2.0, 0.8).unwrap();
    let recs = krylov_records(&st, &s.metric, 4.0);
    assert!(recs.iter().filter(|r| !r.skipped).count() >= 20);
    assert!(recs.iter().all(|r| r.skipped || r.vmo > 0.0));
    let c = fitted_constant(&recs);
    println!("variable coefficients: fitted c {c:.4}");
    assert!(c.is_finite() && c > 0.0);
    assert!(OscillationSetup::variable_coefficients(&sys, &ujet, &coeffs, 0, 0, &s.family, 2.0, 1.0, 0.8).is_err());
}
