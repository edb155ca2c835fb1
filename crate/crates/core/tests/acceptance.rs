use std::time::Instant;

use num_complex::Complex;
use num_traits::ToPrimitive;
use oscint_core::damping::{build_damping, build_modified_damping, detect_special_form, outer_scale_index};
use oscint_core::lab::checks::{build_atom, critical_exponent_l1_check, h1e_atom_check, SliceConfig};
use oscint_core::lab::cutoff::{CutoffSpec, Profile};
use oscint_core::lab::norms::{l2_norm, lp_norm_estimate, random_vector};
use oscint_core::lab::operator::{DiscretizedOperator, Sign, DEFAULT_GRID_BUDGET};
use oscint_core::lab::sweep::{log_spaced, sweep, SweepConfig, SweepResult};
use oscint_core::newton::vertex_reports;
use oscint_core::puiseux::{classify_roots, default_order, puiseux_roots, vertex_crosscheck, RootClusterTree};
use oscint_core::{format_phase, parse_phase, rat, Complex64, Polynomial, Rational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, name: &str, pass: bool, measured: String) {
    println!("[{}] criterion {id}: {name}: {measured}", if pass { "PASS" } else { "FAIL" });
}

fn poly(text: &str) -> Polynomial {
    parse_phase(text).unwrap()
}

/// `S` with `∂x∂y S = h`.
fn antiderivative(h: &Polynomial) -> Polynomial {
    let mut s = Polynomial::zero();
    for (m, c) in h.terms() {
        let div = Rational::from_integer(((m.dx + 1) * (m.dy + 1)).into());
        s.add_term((m.dx + 1, m.dy + 1).into(), c / div);
    }
    s
}

fn tree_of(h: &Polynomial) -> RootClusterTree {
    let roots = puiseux_roots(h, &default_order(h).unwrap()).unwrap();
    classify_roots(&roots).unwrap()
}

/// Every acceptance sweep: 12 log-spaced `λ ∈ [30, 3000]`, box cutoff on
/// `[−1/2, 1/2]²`, default grid budget.
fn acceptance_sweep(phase: &str, p: f64, damping: Option<&oscint_core::DampingFactor>, duality: bool) -> SweepResult {
    let cfg = SweepConfig {
        duality_check: duality,
        ..Default::default()
    };
    let cutoff = CutoffSpec::new(0.5, Profile::Box);
    sweep::<f64>(&poly(phase), &cutoff, damping, p, &log_spaced(30.0, 3000.0, 12), &cfg).unwrap()
}

fn slope_within(r: &SweepResult, target: f64, tol: f64) -> (bool, String) {
    match &r.fit {
        Some(f) => (
            (f.slope - target).abs() <= tol,
            format!("slope {:.4} ± {:.4} (target {target} ± {tol}, n = {})", f.slope, f.stderr, f.n_samples),
        ),
        None => (false, "no fit".into()),
    }
}

const CORPUS_FACTORS: &[&str] = &[
    "y^2 - x^3",
    "(y - x)^2 - x^5",
    "x^2 + y^2",
    "y - x",
    "y + 2*x",
    "y - x^2",
    "y^3 - 2*x^2",
    "y^2 - 3*x*y + x^3",
    "1 + x + y",
];

#[test]
fn criterion_1_exact_vertex_crosscheck() {
    let start = Instant::now();
    let mut corpus: Vec<Polynomial> = [
        "y^2 - x^3",
        "(y - x)^2 - x^5",
        "x^2 + y^2",
        "x",
        "x^2*y^3",
        "y",
        "x^3*y^2*(y - x)",
        "(x^2 + y^2)*(y^2 - x^3)",
        "(y - x)^3*(y + x)",
        "x*(y - x^2)^2",
    ]
    .iter()
    .map(|t| poly(t))
    .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    while corpus.len() < 30 {
        let mut h = Polynomial::monomial((rng.gen_range(0..3), rng.gen_range(0..3)), rat(1, 1));
        for _ in 0..rng.gen_range(1..4) {
            h = &h * &poly(CORPUS_FACTORS[rng.gen_range(0..CORPUS_FACTORS.len())]);
        }
        corpus.push(h);
    }
    let mut failures = Vec::new();
    for h in &corpus {
        // the Hessian of its antiderivative is h again
        let s = antiderivative(h);
        let hess = s.mixed_hessian();
        assert_eq!(&hess, h);
        if let Err(e) = vertex_crosscheck(&hess, &tree_of(&hess)) {
            failures.push(format!("{}: {e}", format_phase(h)));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = failures.is_empty() && secs < 10.0;
    report(
        1,
        "exact vertex crosscheck",
        pass,
        format!("{} phases, {} mismatches, {secs:.2}s", corpus.len(), failures.len()),
    );
    assert!(pass, "{failures:?}");
}

#[test]
fn criterion_2_nondegenerate_decay() {
    let start = Instant::now();
    let r = acceptance_sweep("x*y", 2.0, None, false);
    let secs = start.elapsed().as_secs_f64();
    let (ok, msg) = slope_within(&r, -0.5, 0.05);
    let pass = ok && secs < 300.0;
    report(2, "S = xy, L² slope", pass, format!("{msg}, {secs:.1}s"));
    assert!(pass);
}

#[test]
fn criterion_3_degenerate_l2_decay() {
    let r = acceptance_sweep("x^2*y^2", 2.0, None, false);
    let (pass, msg) = slope_within(&r, -0.25, 0.05);
    report(3, "S = x²y², L² slope", pass, msg);
    assert!(pass);
}

#[test]
fn criterion_4_lp_decay_with_duality() {
    let r = acceptance_sweep("x^2*y", 1.5, None, true);
    let (ok, msg) = slope_within(&r, -0.333, 0.07);
    let worst_gap = r.samples.iter().filter_map(|s| s.duality_gap).fold(0.0, f64::max);
    let gaps_ok = r.samples.iter().all(|s| s.duality_gap.is_some_and(|g| g <= 1e-3));
    let pass = ok && gaps_ok;
    report(
        4,
        "S = x²y, p = 3/2 lower-bound slope",
        pass,
        format!("{msg} (lower bound), worst duality gap {worst_gap:.2e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_5_damping_improves_l2_rate() {
    let phase = "x^3*y + x*y^3";
    let h = poly(phase).mixed_hessian();
    let tree = tree_of(&h);
    let v = &vertex_reports(&poly(phase)).unwrap()[1];
    let re_z: f64 = v.damped_re_z.as_ref().and_then(|z| z.to_f64()).unwrap();
    let d = build_damping(&tree, 1, Complex64::new(re_z, 0.0)).unwrap();
    let damped = acceptance_sweep(phase, 2.0, Some(&d), false);
    let plain = acceptance_sweep(phase, 2.0, None, false);
    let (ok_d, msg_d) = slope_within(&damped, -0.5, 0.05);
    let (ok_p, msg_p) = slope_within(&plain, -0.25, 0.05);
    let pass = ok_d && ok_p && re_z == 0.5;
    report(
        5,
        "S = x³y + xy³ damped vs undamped",
        pass,
        format!("Re z = {re_z}; damped {msg_d}; undamped {msg_p}"),
    );
    assert!(pass);
}

#[test]
fn criterion_6_critical_exponent_boundedness() {
    let cutoff = CutoffSpec::default();
    let h = poly("x^2 + y^2");
    let tree = tree_of(&h);
    let d = build_damping(&tree, 1, Complex64::new(-0.5, 0.0)).unwrap();
    let a1 = tree.levels[0].exponent.clone();
    let circle = critical_exponent_l1_check(&d, &rat(2, 1), Some(&a1), &cutoff, &SliceConfig::default()).unwrap();

    let hx = poly("x");
    let tx = tree_of(&hx);
    let dx = build_damping(&tx, 0, Complex64::new(-1.0, 0.0)).unwrap();
    let line = critical_exponent_l1_check(&dx, &rat(1, 1), None, &cutoff, &SliceConfig::default()).unwrap();

    let pass = circle.passed && line.pointwise_bound == Some(1.0);
    report(
        6,
        "critical negative exponent",
        pass,
        format!(
            "D = x²+y²: sup {:.6}, refined {:.6}, growth {:.4}; D = x: pointwise constant {:?}",
            circle.sup_slice_integral.unwrap(),
            circle.refined_sup.unwrap(),
            circle.growth.unwrap(),
            line.pointwise_bound.unwrap()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_7_atom_uniformity() {
    let h = poly("(y - x)^2");
    let s = antiderivative(&h);
    let tree = tree_of(&h);
    let (root, _) = detect_special_form(&tree, 1).unwrap();
    let cutoff = CutoffSpec::default();
    let lambdas = [1e2, 1e3, 1e4];
    let d = build_modified_damping(&tree, lambdas[0], outer_scale_index(cutoff.half_width), Complex64::new(-0.5, 0.0))
        .unwrap();
    let r = h1e_atom_check(&s, &root, &d, &cutoff, &lambdas, 50, -2, DEFAULT_GRID_BUDGET, 11).unwrap();
    let worst_res = r.samples.iter().map(|s| s.max_condition_residual).fold(0.0, f64::max);

    // condition (iii) on freshly generated atoms
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let nodes: Vec<f64> = (0..2000).map(|i| -0.5 + (i as f64 + 0.5) / 2000.0).collect();
    let mut prop_res: f64 = 0.0;
    for _ in 0..200 {
        let lambda = 10f64.powf(rng.gen_range(1.0..4.0));
        let lo = rng.gen_range(0.125..0.4);
        let hi = rng.gen_range(lo + 0.01..0.5);
        let phase = |y: f64| lambda * (y * y * y / 3.0 - y * y * 0.1);
        if let Some((a, _, alpha)) = build_atom(phase, &nodes, 1.0 / 2000.0, lo, hi) {
            let sum: Complex<f64> = nodes
                .iter()
                .zip(&a)
                .map(|(&y, v)| Complex::from_polar(1.0 / 2000.0, phase(y)) * v)
                .sum();
            prop_res = prop_res.max(sum.norm() / alpha);
            assert!(a.iter().all(|v| v.norm() <= 1.0 / (hi - lo) * (1.0 + 1e-12)));
        }
    }
    let pass = r.growth_ratio <= 2.0 && worst_res <= 1e-12 && prop_res <= 1e-12;
    let maxima: Vec<String> = r.samples.iter().map(|s| format!("{:.4}", s.max_l1)).collect();
    report(
        7,
        "H¹_E atom uniformity",
        pass,
        format!(
            "max ‖W_z a‖₁ per λ [{}], ratio {:.3}, condition residual {:.1e} / {:.1e}, resampled {}",
            maxima.join(", "),
            r.growth_ratio,
            worst_res,
            prop_res,
            r.resampled
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_8_structural_properties() {
    let start = Instant::now();
    let mut failures: Vec<String> = Vec::new();

    for text in ["x^3*y + x*y^3", "-(x - 2/3*y)^2*x*y", "3/7*x^2*y^5 - y*x + 1"] {
        let p = poly(text);
        if parse_phase(&format_phase(&p)).unwrap() != p {
            failures.push(format!("round trip {text}"));
        }
    }

    let op = DiscretizedOperator::<f64>::discretize(&poly("x*y + x^3"), &CutoffSpec::default(), 50.0, None, DEFAULT_GRID_BUDGET)
        .unwrap();
    let f = random_vector::<f64>(op.len(), &mut ChaCha8Rng::seed_from_u64(5));
    let full = op.apply(&f);
    let mut sum = vec![Complex::new(0.0, 0.0); op.len()];
    for j in op.dyadic_range() {
        for k in op.dyadic_range() {
            for sx in Sign::BOTH {
                for sy in Sign::BOTH {
                    if let Ok(piece) = op.dyadic_piece(j, k, sx, sy) {
                        for (a, b) in sum.iter_mut().zip(piece.apply(&f)) {
                            *a += b;
                        }
                    }
                }
            }
        }
    }
    let num: f64 = full.iter().zip(&sum).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    let den: f64 = full.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if num / den > 1e-8 {
        failures.push(format!("partition of unity {:.1e}", num / den));
    }

    for text in ["y^2 - x^3 - x^4", "(y - x)^2 - x^5 - x^3*y", "(x^2 + y^2)*(y - x^2)"] {
        let h = poly(text);
        let roots = puiseux_roots(&h, &rat(4, 1)).unwrap();
        let hc = h.to_float::<f64>();
        for (r, _) in &roots.roots {
            if !r.has_real_coefficients() && !roots.roots.iter().any(|(q, _)| *q == r.conj()) {
                failures.push(format!("conjugate closure {text}"));
            }
            if r.exact {
                continue;
            }
            let pts: Vec<(f64, f64)> = (0..12)
                .map(|i| {
                    let x = 10f64.powf(-3.0 + 2.0 * i as f64 / 11.0);
                    let v = hc.eval_complex(Complex64::new(x, 0.0), r.eval(Complex64::new(x, 0.0))).norm();
                    (x.ln(), v.max(1e-300).ln())
                })
                .collect();
            let (slope, _, _) = oscint_core::lab::sweep::ols(&pts).unwrap();
            if slope < 4.0 - 0.25 {
                failures.push(format!("residual slope {slope} for {text}"));
            }
        }
    }

    for text in ["x^2 + y^2", "(x^2 + y^2)*(y^2 + 4*x^2)*(y - x)", "y^2 + x^3"] {
        let tree = tree_of(&poly(text));
        let d = build_damping(&tree, tree.levels.len(), Complex64::new(1.0, 0.0)).unwrap();
        for i in 0..100 {
            for j in 0..100 {
                let (x, y) = (-0.5 + i as f64 / 99.0, -0.5 + j as f64 / 99.0);
                let v = d.root_product(x, y);
                // |D| is O(1) on the square; zeros of real factors make a relative test meaningless
                if v.im.abs() > 1e-10 {
                    failures.push(format!("damping reality {text} at ({x}, {y})"));
                }
            }
        }
    }

    let op = DiscretizedOperator::<f64>::discretize(&poly("x^2*y"), &CutoffSpec::default(), 200.0, None, DEFAULT_GRID_BUDGET)
        .unwrap();
    let l2 = l2_norm(&op, 1).value;
    let lp = lp_norm_estimate(&op, 2.0, 8, 1).lower_bound;
    if ((l2 - lp) / l2).abs() > 1e-4 {
        failures.push(format!("p = 2 agreement {l2} vs {lp}"));
    }

    let once = || {
        let cutoff = CutoffSpec::default();
        let r = sweep::<f64>(&poly("x*y^2"), &cutoff, None, 2.0, &log_spaced(10.0, 300.0, 6), &SweepConfig::default())
            .unwrap();
        (r.to_csv(), r.fit_json())
    };
    if once() != once() {
        failures.push("rerun not byte-identical".into());
    }

    let secs = start.elapsed().as_secs_f64();
    let pass = failures.is_empty() && secs < 120.0;
    report(
        8,
        "structural property suite",
        pass,
        format!("{} failures, {secs:.1}s", failures.len()),
    );
    assert!(pass, "{failures:?}");
}
