use super::*;
use crate::{parse_phase, rat};
use proptest::prelude::*;

fn h(text: &str) -> Polynomial {
    parse_phase(text).unwrap()
}

fn roots_of(text: &str) -> PuiseuxRoots {
    let p = h(text);
    puiseux_roots(&p, &default_order(&p).unwrap()).unwrap()
}

fn near(a: Complex64, re: f64, im: f64) -> bool {
    (a - Complex64::new(re, im)).norm() < 1e-12
}

#[test]
fn cusp_has_two_half_integer_roots() {
    let r = roots_of("y^2 - x^3");
    assert_eq!((r.m, r.s), (0, 0));
    assert_eq!(r.roots.len(), 2);
    for (series, k) in &r.roots {
        assert_eq!(*k, 1);
        assert_eq!(series.terms.len(), 1);
        assert_eq!(series.terms[0].0, rat(3, 2));
        assert_eq!(series.polydromy, 2);
        assert!(series.exact);
    }
    assert!(near(r.roots[0].0.leading_coefficient(), -1.0, 0.0));
    assert!(near(r.roots[1].0.leading_coefficient(), 1.0, 0.0));
}

#[test]
fn monomial_has_only_trivial_factors() {
    let r = roots_of("4*x*y");
    assert_eq!((r.m, r.s), (1, 1));
    assert!(r.roots.is_empty());
}

#[test]
fn perturbed_double_line_splits_at_five_halves() {
    let r = roots_of("(y - x)^2 - x^5");
    assert_eq!(r.roots.len(), 2);
    let (lo, hi) = (&r.roots[0].0, &r.roots[1].0);
    assert_eq!(lo.terms.len(), 2);
    assert_eq!(lo.terms[0].0, rat(1, 1));
    assert_eq!(lo.terms[1].0, rat(5, 2));
    assert!(near(lo.terms[1].1, -1.0, 0.0));
    assert!(near(hi.terms[1].1, 1.0, 0.0));
}

#[test]
fn circle_gives_conjugate_pair() {
    let r = roots_of("3*x^2 + 3*y^2");
    assert_eq!(r.roots.len(), 2);
    assert!(near(r.roots[0].0.leading_coefficient(), 0.0, -1.0));
    assert!(near(r.roots[1].0.leading_coefficient(), 0.0, 1.0));
    assert_eq!(r.roots[0].0, r.roots[1].0.conj());
}

#[test]
fn triple_line_is_one_root_of_multiplicity_three() {
    let r = roots_of("(y - x)^3");
    assert_eq!(r.roots.len(), 1);
    assert_eq!(r.roots[0].1, 3);
    assert!(r.roots[0].0.exact);
}

#[test]
fn irrational_coefficients_take_the_numeric_path() {
    let r = roots_of("y^3 - 2*x^2");
    assert_eq!(r.total_multiplicity(), 3);
    let real: Vec<_> = r.roots.iter().filter(|(s, _)| s.has_real_coefficients()).collect();
    assert_eq!(real.len(), 1);
    assert!((real[0].0.leading_coefficient().re - 2f64.cbrt()).abs() < 1e-12);
}

#[test]
fn rejects_bad_input() {
    assert_eq!(
        puiseux_roots(&Polynomial::zero(), &rat(1, 1)),
        Err(PuiseuxError::ZeroPolynomial)
    );
    assert!(matches!(
        puiseux_roots(&h("y - x"), &rat(0, 1)),
        Err(PuiseuxError::NonPositiveOrder(_))
    ));
}

#[test]
fn roots_agreeing_past_the_order_are_too_coarse() {
    let p = h("(y - x)*(y - x - x^5)");
    assert!(matches!(
        puiseux_roots(&p, &rat(4, 1)),
        Err(PuiseuxError::TruncationTooCoarse { .. })
    ));
    assert_eq!(puiseux_roots(&p, &rat(6, 1)).unwrap().roots.len(), 2);
}

#[test]
fn classification_examples() {
    let t = classify_roots(&roots_of("y^2 - x^3")).unwrap();
    assert_eq!(t.levels.len(), 1);
    assert_eq!(t.levels[0].exponent, rat(3, 2));
    assert_eq!(t.levels[0].count, 2);
    assert_eq!(t.levels[0].classes.len(), 2);

    let t = classify_roots(&roots_of("(y - x)^2 - x^5")).unwrap();
    assert_eq!(t.levels.len(), 1);
    let class = &t.levels[0].classes;
    assert_eq!(class.len(), 1);
    assert_eq!(class[0].count, 2);
    assert_eq!(class[0].children.len(), 1);
    assert_eq!(class[0].children[0].exponent, rat(5, 2));
    assert_eq!(class[0].children[0].classes.len(), 2);

    let t = classify_roots(&roots_of("3*x^2 + 3*y^2")).unwrap();
    assert_eq!(t.levels[0].count, 2);
    assert_eq!(t.levels[0].classes.len(), 2);
}

#[test]
fn near_tolerance_coefficients_are_ambiguous() {
    let one = PuiseuxSeries::new(vec![(rat(1, 1), Complex64::new(1.0, 0.0))], rat(3, 1), true);
    let close = PuiseuxSeries::new(vec![(rat(1, 1), Complex64::new(1.0 + 1e-9, 0.0))], rat(3, 1), true);
    let roots = PuiseuxRoots {
        m: 0,
        s: 0,
        roots: vec![(one, 1), (close, 1)],
    };
    assert!(matches!(
        classify_roots(&roots),
        Err(ClusterError::AmbiguousCluster { .. })
    ));
}

#[test]
fn tree_json_uses_fraction_strings_and_pairs() {
    let t = classify_roots(&roots_of("y^2 - x^3")).unwrap();
    let v = serde_json::to_value(&t).unwrap();
    assert_eq!(v["levels"][0]["exponent"], "3/2");
    assert_eq!(v["levels"][0]["classes"][0]["coefficient"], serde_json::json!([-1.0, 0.0]));
}

#[test]
fn crosscheck_examples() {
    for (text, expect) in [
        ("4*x*y", vec![(1, 1)]),
        ("3*x^2 + 3*y^2", vec![(0, 2), (2, 0)]),
        ("y^2 - x^3", vec![(0, 2), (3, 0)]),
    ] {
        let p = h(text);
        let tree = classify_roots(&roots_of(text)).unwrap();
        let report = vertex_crosscheck(&p, &tree).unwrap();
        let want: Vec<LatticePoint> = expect.iter().map(|&(a, b)| LatticePoint::from_ints(a, b)).collect();
        assert_eq!(report.predicted, want, "{text}");
    }
}

#[test]
fn crosscheck_detects_a_wrong_tree() {
    let p = h("y^2 - x^3");
    let mut tree = classify_roots(&roots_of("y^2 - x^3")).unwrap();
    tree.levels[0].exponent = rat(1, 1);
    assert!(matches!(
        vertex_crosscheck(&p, &tree),
        Err(CrosscheckError::CrosscheckMismatch { .. })
    ));
}

/// Slope of `log|H(x, r(x))|` against `log x` on `x ∈ [1e-3, 0.1]`.
fn residual_slope(p: &Polynomial, r: &PuiseuxSeries) -> f64 {
    let pc = p.to_float::<f64>();
    let pts: Vec<(f64, f64)> = (0..12)
        .map(|i| {
            let x = 10f64.powf(-3.0 + 2.0 * i as f64 / 11.0);
            let y = r.eval(Complex64::new(x, 0.0));
            let v = pc.eval_complex(Complex64::new(x, 0.0), y).norm();
            (x.ln(), v.max(1e-300).ln())
        })
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn truncated_roots_have_residual_of_the_right_order() {
    for text in ["y^2 - x^3 - x^4", "(y - x)^2 - x^5 - x^3*y", "y^3 - x^2*y - x^5 + y*x^4"] {
        let p = h(text);
        let order = rat(4, 1);
        for (r, _) in puiseux_roots(&p, &order).unwrap().roots {
            if r.exact {
                continue;
            }
            let slope = residual_slope(&p, &r);
            assert!(slope >= 4.0 - 0.25, "{text}: {:?} slope {slope}", r.terms);
        }
    }
}

#[test]
fn inverse_of_linear_roots() {
    let series = |terms: Vec<(Rational, f64)>| {
        PuiseuxSeries::new(
            terms.into_iter().map(|(e, c)| (e, Complex64::new(c, 0.0))).collect(),
            rat(4, 1),
            true,
        )
    };
    assert_eq!(invert_linear_root(&series(vec![(rat(1, 1), 1.0)]), 0.25), Ok(0.25));
    assert!((invert_linear_root(&series(vec![(rat(1, 1), 2.0)]), 0.5).unwrap() - 0.25).abs() < 1e-15);

    let r = series(vec![(rat(1, 1), 1.0), (rat(5, 2), 1.0)]);
    let x = invert_linear_root(&r, 0.1).unwrap();
    // bisection oracle
    let f = |t: f64| t + t.powf(2.5) - 0.1;
    let (mut lo, mut hi) = (0.0, 0.1);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    assert!((x - lo).abs() < 1e-12);
    assert!((x - 0.0969).abs() < 1e-3);

    assert_eq!(
        invert_linear_root(&series(vec![(rat(3, 2), 1.0)]), 0.1),
        Err(InverseError::NotLinear)
    );
}

const FACTORS: &[&str] = &[
    "y",
    "x",
    "y - x",
    "y + 2*x",
    "y^2 - x^3",
    "y^2 + x^2",
    "y - x^2",
    "y^3 - 2*x^2",
    "(y - x)^2 - x^5",
    "y + x - x^2",
    "y^2 - 3*x*y + x^3",
    "1 + x + y",
];

fn product(idx: &[usize]) -> Polynomial {
    idx.iter()
        .fold(Polynomial::constant(rat(1, 1)), |acc, &i| &acc * &h(FACTORS[i]))
}

/// Roots tending to zero: order of vanishing of `H(0, y) / y^s`.
fn weierstrass_count(p: &Polynomial, m: u32, s: u32) -> usize {
    let reduced: Vec<u32> = p
        .terms()
        .filter(|(mono, _)| mono.dx == m)
        .map(|(mono, _)| mono.dy)
        .collect();
    (reduced.into_iter().min().unwrap() - s) as usize
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn corpus_crosscheck_and_conservation(idx in prop::collection::vec(0..FACTORS.len(), 1..4)) {
        let p = product(&idx);
        let order = default_order(&p).unwrap();
        let roots = puiseux_roots(&p, &order).unwrap();
        prop_assert_eq!(roots.total_multiplicity(), weierstrass_count(&p, roots.m, roots.s));

        // conjugate closure
        for (r, k) in &roots.roots {
            if !r.has_real_coefficients() {
                let c = r.conj();
                prop_assert!(roots.roots.iter().any(|(q, j)| j == k && q.terms.len() == c.terms.len()
                    && q.terms.iter().zip(&c.terms).all(|(a, b)| a.0 == b.0 && (a.1 - b.1).norm() < 1e-9)));
            }
        }
        let tree = classify_roots(&roots).unwrap();
        prop_assert!(vertex_crosscheck(&p, &tree).is_ok());
    }
}
