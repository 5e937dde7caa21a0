use subelliptic::geometry::*;
use subelliptic::hvf::builtin;
use subelliptic::lift::*;

struct CenterRecord {
    min_inside: f64,
    sup_sum: f64,
    far_nonzero: usize,
    far_checked: usize,
}

fn check_center(cf: &CutoffFamily, metric: &GridMetric, c: [f64; 2], derivatives: bool) -> CenterRecord {
    let dom = metric.domain();
    let src = dom.nearest(&c).unwrap();
    let x = dom.coords(src);
    let view = metric.from_node(src, 2.0).unwrap();
    let r = cf.radius();
    let vol = view.ball_volume(r).unwrap();
    let mut rec = CenterRecord { min_inside: f64::INFINITY, sup_sum: 0.0, far_nonzero: 0, far_checked: 0 };
    for i in view.members(r) {
        rec.min_inside = rec.min_inside.min(cf.eval(&x, &dom.coords(i), vol, &[]).unwrap());
    }
    let mut sup = [0.0f64; 3];
    for i in (0..dom.len()).step_by(11) {
        let d = view.dist(i);
        let y = dom.coords(i);
        if d >= cf.support_radius() {
            rec.far_checked += 1;
            if cf.saturated(&x, &y, &[]).unwrap() != 0.0 {
                rec.far_nonzero += 1;
            }
        } else if derivatives {
            sup[0] = sup[0].max(cf.eval(&x, &y, vol, &[]).unwrap().abs());
            let d1: f64 = (0..2).map(|i| cf.eval(&x, &y, vol, &[i]).unwrap().abs()).sum();
            let d2: f64 = [[0, 0], [0, 1], [1, 0], [1, 1]].iter().map(|w| cf.eval(&x, &y, vol, w).unwrap().abs()).sum();
            sup[1] = sup[1].max(d1);
            sup[2] = sup[2].max(d2);
        }
    }
    rec.sup_sum = sup.iter().sum();
    rec
}

#[test]
fn cutoff_family_support_lower_bound_and_uniform_derivatives() {
    let g = lift("grushin1").unwrap();
    let cal = calibrate_equivalence(&g, 200, 3, 40).unwrap();
    let cf = CutoffFamily::new(&g, &cal, 0.1).unwrap();
    assert!((cf.support_radius() - cal.h * 0.1).abs() < 1e-12);
    let sys = builtin("grushin1").unwrap();
    let dom = BoxDomain::new(vec![-2.0, -2.0], vec![2.0, 2.0], vec![161, 161]).unwrap();
    let metric = GridMetric::new(&sys, dom, &CCGraphConfig::default()).unwrap();
    let centers = [[0.0, 0.0], [0.5, 0.0], [0.0, 0.4], [-0.4, -0.3], [0.25, 0.25], [-0.5, 0.1], [0.1, -0.5], [0.35, -0.2], [-0.2, 0.5], [0.45, 0.45]];
    let mut minima = Vec::new();
    let mut sups = Vec::new();
    for (k, c) in centers.iter().enumerate() {
        let rec = check_center(&cf, &metric, *c, k < 5);
        assert!(rec.far_checked > 100, "support test needs points beyond HR");
        assert_eq!(rec.far_nonzero, 0, "cutoff at {c:?} reaches beyond HR");
        minima.push(rec.min_inside);
        if k < 5 {
            sups.push(rec.sup_sum);
        }
    }
    let c1 = minima.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(c1 > 0.0, "{minima:?}");
    let c2 = sups.iter().cloned().fold(0.0, f64::max);
    assert!(c2.is_finite());
    // uniformity in the centre: the fitted constants stay within a small factor of each other
    let lo = sups.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(c2 / lo < 5.0, "{sups:?}");
}

#[test]
fn cutoff_profile_is_one_near_the_identity() {
    let g = lift("grushin1").unwrap();
    let cal = calibrate_equivalence(&g, 50, 1, 30).unwrap();
    let cf = CutoffFamily::new(&g, &cal, 0.2).unwrap();
    assert_eq!(cf.psi(&[0.0, 0.0, 0.0]), 1.0);
    let st = cf.step();
    assert_eq!(cf.psi(&[0.0, 0.0, 0.99 * st.inner]), 1.0);
    assert_eq!(cf.psi(&[0.0, 0.0, 1.01 * st.outer]), 0.0);
    assert!(CutoffFamily::new(&g, &cal, 0.0).is_err());
}
