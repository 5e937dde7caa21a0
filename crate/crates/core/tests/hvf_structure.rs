use proptest::prelude::*;
use subelliptic::hvf::*;
use subelliptic::Error;

fn r(a: i64) -> Coeff {
    Coeff::from_integer(a)
}

#[test]
fn catalog_structure_matches_hand_counts() {
    // (name, n, q, N) computed by hand from the bracket tables.
    let expected = [
        ("grushin1", 2, 3, 3),
        ("grushin2", 2, 4, 4),
        ("grushin3", 2, 5, 5),
        ("chain3", 3, 6, 4),
        ("powers3", 3, 6, 4),
        ("powers4", 4, 10, 5),
    ];
    for (name, n, q, big_n) in expected {
        let sys = builtin(name).unwrap();
        let s = validate(&sys).unwrap();
        assert_eq!(s.n, n, "{name}");
        assert_eq!(s.q, q, "{name}");
        assert_eq!(s.big_n, big_n, "{name}");
        assert_eq!(s.rank_at_origin, n, "{name}");
    }
}

#[test]
fn powers3_bracket_is_d2_plus_2x1_d3() {
    let sys = powers(3);
    let b = sys.fields()[0].bracket(&sys.fields()[1]);
    let expect = PolyVectorField::new(vec![
        Poly::zero(3),
        Poly::int(3, 1),
        Poly::var(3, 0).scale(r(2)),
    ])
    .unwrap();
    assert_eq!(b, expect);
}

#[test]
fn rank_deficient_away_from_generic_points_is_still_full_for_grushin() {
    let sys = grushin(1);
    let cl = lie_closure(&sys, 3).unwrap();
    for x in [[0.0, 0.0], [1.0, -2.0], [0.0, 5.0]] {
        assert_eq!(hormander_rank(&cl, &x), 2);
    }
    // the generating fields alone drop rank on the line x1 = 0
    let only_fields = LieClosure { basis: sys.fields().to_vec(), words: vec![vec![1], vec![2]], depth: 1 };
    assert_eq!(hormander_rank(&only_fields, &[0.0, 1.0]), 1);
}

#[test]
fn inhomogeneous_field_is_reported_with_offending_monomial() {
    // X2 = (x1 + x1^2) d2 with sigma = (1, 2): the x1^2 term has weight 2.
    let x1 = Poly::var(2, 0);
    let c = &x1 + &(&x1 * &x1);
    let f2 = PolyVectorField::new(vec![Poly::zero(2), c]).unwrap();
    let sys = HormanderSystem::new("bad", vec![PolyVectorField::coordinate(2, 0), f2], DilationFamily::new(vec![1, 2]).unwrap()).unwrap();
    let rep = sys.check_homogeneity();
    assert!(!rep.pass());
    assert!(rep.fields[0].pass);
    let off = &rep.fields[1].offenses;
    assert_eq!(off.len(), 1);
    assert_eq!(off[0].monomial, vec![2, 0]);
    assert_eq!(off[0].component, 2);
    assert!(matches!(validate(&sys), Err(Error::NotHomogeneous(_))));
}

#[test]
fn closure_depth_limit_is_enforced() {
    let sys = grushin(3);
    assert!(matches!(lie_closure(&sys, 3), Err(Error::ClosureDepthExceeded(3))));
    assert_eq!(lie_closure(&sys, default_max_depth(&sys)).unwrap().dim(), 5);
}

#[test]
fn rank_condition_failure_is_detected() {
    // X1 = d1, X2 = x1 d1 never reaches the second direction.
    let f2 = PolyVectorField::new(vec![Poly::var(2, 0), Poly::zero(2)]).unwrap();
    let sys = HormanderSystem::new("degenerate", vec![PolyVectorField::coordinate(2, 0), f2], DilationFamily::new(vec![1, 1]).unwrap()).unwrap();
    // x1 d1 has degree 0, so homogeneity already fails
    assert!(matches!(validate(&sys), Err(Error::NotHomogeneous(_))));
    let sys2 = HormanderSystem::new("flat", vec![PolyVectorField::coordinate(2, 0)], DilationFamily::new(vec![1, 1]).unwrap()).unwrap();
    assert!(matches!(validate(&sys2), Err(Error::RankDeficient { rank: 1, .. })));
}

#[test]
fn json_round_trip_and_errors() {
    let text = r#"{"n":2,"m":2,"sigma":[1,2],
        "fields":[[{"component":1,"monomial":[0,0],"coeff":1}],
                  [{"component":2,"monomial":[1,0],"coeff":"1/1"}]]}"#;
    let sys = from_json(text).unwrap();
    assert_eq!(sys.fields(), grushin(1).fields());
    let again = from_json(&to_json(&grushin(2))).unwrap();
    assert_eq!(again.fields(), grushin(2).fields());
    assert_eq!(again.sigma(), &[1, 3]);

    let bad_component = r#"{"n":2,"m":1,"sigma":[1,2],"fields":[[{"component":3,"monomial":[0,0],"coeff":1}]]}"#;
    assert!(matches!(from_json(bad_component), Err(Error::DimensionMismatch(_))));
    let bad_sigma = r#"{"n":2,"m":1,"sigma":[2,2],"fields":[[{"component":1,"monomial":[0,0],"coeff":1}]]}"#;
    assert!(matches!(from_json(bad_sigma), Err(Error::InvalidDilation(_))));
    assert!(matches!(builtin("nosuch"), Err(Error::UnknownSystem(_))));
}

fn small_field() -> impl Strategy<Value = PolyVectorField> {
    prop::collection::vec(prop::collection::vec((0u32..3, 0u32..3, -3i64..4), 0..3), 2).prop_map(|comps| {
        PolyVectorField::new(
            comps
                .into_iter()
                .map(|terms| Poly::from_terms(2, terms.into_iter().map(|(a, b, c)| (vec![a, b], r(c)))))
                .collect(),
        )
        .unwrap()
    })
}

proptest! {
    #[test]
    fn bracket_is_antisymmetric(a in small_field(), b in small_field()) {
        let ab = a.bracket(&b);
        let ba = b.bracket(&a);
        prop_assert_eq!(ab, ba.scale(r(-1)));
    }

    #[test]
    fn jacobi_identity(a in small_field(), b in small_field(), c in small_field()) {
        let t1 = a.bracket(&b.bracket(&c));
        let t2 = b.bracket(&c.bracket(&a));
        let t3 = c.bracket(&a.bracket(&b));
        let sum: Vec<Poly> = (0..2).map(|k| &(&t1.components()[k] + &t2.components()[k]) + &t3.components()[k]).collect();
        prop_assert!(sum.iter().all(Poly::is_zero));
    }

    #[test]
    fn dilation_scales_homogeneous_fields(lambda in 0.2f64..3.0, x in -2.0f64..2.0, y in -2.0f64..2.0) {
        // A degree-1 field satisfies X(delta_lambda x) = lambda^{sigma_k - 1} X_k(x) componentwise.
        let sys = powers(3);
        let p = [x, y, 0.5];
        let dp = sys.dilation().apply(lambda, &p);
        for f in sys.fields() {
            let a = f.eval(&dp);
            let b = f.eval(&p);
            for k in 0..3 {
                let s = lambda.powi(sys.sigma()[k] as i32 - 1);
                prop_assert!((a[k] - s * b[k]).abs() < 1e-9 * (1.0 + a[k].abs()));
            }
        }
    }
}
