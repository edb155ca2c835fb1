use std::fmt::Write as _;

use num_complex::Complex;
use num_traits::{ToPrimitive, Zero};
use oscint_core::damping::{build_damping, build_modified_damping, outer_scale_index};
use oscint_core::lab::checks::{critical_exponent_l1_check, h1e_atom_check, van_der_corput_check, SliceConfig};
use oscint_core::lab::norms::{l2_norm, lp_duality_check, lp_norm_estimate, random_vector, LP_RESTARTS};
use oscint_core::lab::operator::{DiscretizedOperator, Sign};
use oscint_core::lab::sweep::{log_spaced, sweep, SweepConfig, SweepResult};
use oscint_core::lab::{fmt_f64, CutoffSpec, LabError};
use oscint_core::report::{analyze, Analysis, CrosscheckStatus};
use oscint_core::{DampingFactor, Polynomial};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{RunConfig, Suite};
use crate::{cutoff_of, write_output, Failure, EXIT_VERIFY};

const SLOPE_TOL: f64 = 0.05;
const LP_SLOPE_TOL: f64 = 0.07;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, Serialize)]
pub struct Entry {
    pub check: String,
    pub outcome: Outcome,
    pub measured: String,
}

fn entry(check: &str, pass: bool, measured: String) -> Entry {
    Entry {
        check: check.into(),
        outcome: if pass { Outcome::Pass } else { Outcome::Fail },
        measured,
    }
}

fn not_applicable(check: &str, why: &str) -> Entry {
    Entry {
        check: check.into(),
        outcome: Outcome::NotApplicable,
        measured: why.into(),
    }
}

fn errored(check: &str, e: impl std::fmt::Display) -> Entry {
    entry(check, false, format!("error: {e}"))
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<(), Failure> {
    let text = cfg.phase.clone().unwrap_or_else(|| "x*y".into());
    let entries = run_suite(&text, cfg);
    let table = render(&entries);
    let json = serde_json::to_string_pretty(&entries).expect("entries serialize") + "\n";
    if cfg.out_dir.is_some() {
        write_output(cfg, "verify.txt", &table)?;
        write_output(cfg, "verify.json", &json)?;
        write_output(cfg, "config.txt", &cfg.to_text())?;
    }
    print!("{table}");
    let failed: Vec<&str> = entries
        .iter()
        .filter(|e| e.outcome == Outcome::Fail)
        .map(|e| e.check.as_str())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_VERIFY,
            kind: "VerificationFailed".into(),
            message: failed.join(", "),
        })
    }
}

fn render(entries: &[Entry]) -> String {
    let width = entries.iter().map(|e| e.check.len()).max().unwrap_or(0);
    let mut out = String::new();
    for e in entries {
        let tag = match e.outcome {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
            Outcome::NotApplicable => "N/A ",
        };
        let _ = writeln!(out, "{tag}  {:width$}  {}", e.check, e.measured);
    }
    out
}

pub fn run_suite(text: &str, cfg: &RunConfig) -> Vec<Entry> {
    let s = match oscint_core::parse_phase(text) {
        Ok(s) => s,
        Err(e) => return vec![errored("phase", oscint_core::report::AnalysisError::from(e).kind())],
    };
    let a = match analyze(&s) {
        Ok(a) => a,
        Err(e) => return vec![entry("analysis", false, format!("{}: {e}", e.kind()))],
    };
    let cutoff = cutoff_of(cfg);
    let mut out = vec![crosscheck(&a)];
    out.push(partition_of_unity(&s, &cutoff, cfg));
    out.push(p2_agreement(&s, &cutoff, cfg));
    out.push(duality(&s, &a, &cutoff, cfg));
    out.push(determinism(&s, &cutoff, cfg));
    out.push(l2_slope(&s, &a, &cutoff, cfg));
    out.push(van_der_corput(&s, &a, cfg));
    if cfg.suite == Suite::Full {
        out.push(lp_slope(&s, &a, &cutoff, cfg));
        out.push(damped_slope(&s, &a, &cutoff, cfg));
        out.extend(critical_exponent(&a, &cutoff));
        out.push(atoms(&s, &a, &cutoff, cfg));
    }
    out
}

fn crosscheck(a: &Analysis) -> Entry {
    match &a.crosscheck {
        CrosscheckStatus::Ok { vertices } => entry("crosscheck", true, format!("{} vertices agree exactly", vertices.len())),
        CrosscheckStatus::Mismatch { predicted, hull } => {
            entry("crosscheck", false, format!("predicted {predicted:?}, hull {hull:?}"))
        }
    }
}

fn operator(s: &Polynomial, cutoff: &CutoffSpec, lambda: f64, cfg: &RunConfig) -> Result<DiscretizedOperator<f64>, LabError> {
    DiscretizedOperator::discretize(s, cutoff, lambda, None, cfg.grid_budget)
}

fn partition_of_unity(s: &Polynomial, cutoff: &CutoffSpec, cfg: &RunConfig) -> Entry {
    let name = "partition-of-unity";
    let op = match operator(s, cutoff, 50.0, cfg) {
        Ok(op) => op,
        Err(e) => return errored(name, e),
    };
    let f = random_vector::<f64>(op.len(), &mut ChaCha8Rng::seed_from_u64(cfg.seed));
    let full = op.apply(&f);
    let mut sum = vec![Complex::zero(); op.len()];
    for j in op.dyadic_range() {
        for k in op.dyadic_range() {
            for sx in Sign::BOTH {
                for sy in Sign::BOTH {
                    if let Ok(piece) = op.dyadic_piece(j, k, sx, sy) {
                        sum.iter_mut().zip(piece.apply(&f)).for_each(|(a, b)| *a += b);
                    }
                }
            }
        }
    }
    let num: f64 = full.iter().zip(&sum).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    let den: f64 = full.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let rel = if den == 0.0 { num } else { num / den };
    entry(name, rel <= 1e-8, format!("relative error {}", fmt_f64(rel)))
}

fn p2_agreement(s: &Polynomial, cutoff: &CutoffSpec, cfg: &RunConfig) -> Entry {
    let name = "p2-estimator-agreement";
    let op = match operator(s, cutoff, 100.0, cfg) {
        Ok(op) => op,
        Err(e) => return errored(name, e),
    };
    let l2 = l2_norm(&op, cfg.seed).value;
    let lp = lp_norm_estimate(&op, 2.0, LP_RESTARTS, cfg.seed).lower_bound;
    let rel = ((l2 - lp) / l2).abs();
    entry(name, rel <= 1e-4, format!("relative gap {}", fmt_f64(rel)))
}

/// Exponent for the duality and Lᵖ checks: the first vertex with `p ≠ 2`.
fn off_diagonal_p(a: &Analysis) -> Option<f64> {
    a.vertices.iter().map(|v| v.p.to_f64().unwrap()).find(|&p| p != 2.0)
}

fn duality(s: &Polynomial, a: &Analysis, cutoff: &CutoffSpec, cfg: &RunConfig) -> Entry {
    let name = "transpose-duality";
    let p = off_diagonal_p(a).unwrap_or(1.5);
    let op = match operator(s, cutoff, 100.0, cfg) {
        Ok(op) => op,
        Err(e) => return errored(name, e),
    };
    let r = lp_duality_check(&op, p, LP_RESTARTS, cfg.seed);
    let pass = r.relative_gap <= 1e-3 && r.primal.monotone && r.dual.monotone;
    entry(
        name,
        pass,
        format!("p = {}, relative gap {}, monotone {}", fmt_f64(p), fmt_f64(r.relative_gap), r.primal.monotone && r.dual.monotone),
    )
}

fn determinism(s: &Polynomial, cutoff: &CutoffSpec, cfg: &RunConfig) -> Entry {
    let name = "deterministic-rerun";
    let run = || {
        let sc = SweepConfig {
            grid_budget: cfg.grid_budget,
            seed: cfg.seed,
            ..Default::default()
        };
        sweep::<f64>(s, cutoff, None, 2.0, &log_spaced(10.0, 100.0, 6), &sc).map(|r| (r.to_csv(), r.fit_json()))
    };
    match (run(), run()) {
        (Ok(a), Ok(b)) => entry(name, a == b, if a == b { "byte-identical".into() } else { "outputs differ".into() }),
        (Err(e), _) | (_, Err(e)) => errored(name, e),
    }
}

fn sweep_with(
    s: &Polynomial,
    cutoff: &CutoffSpec,
    damping: Option<&DampingFactor>,
    p: f64,
    cfg: &RunConfig,
    duality_check: bool,
) -> Result<SweepResult, LabError> {
    let sc = SweepConfig {
        grid_budget: cfg.grid_budget,
        seed: cfg.seed,
        duality_check,
        ..Default::default()
    };
    sweep::<f64>(s, cutoff, damping, p, &log_spaced(cfg.lambda_min, cfg.lambda_max, cfg.lambda_count), &sc)
}

fn slope_entry(name: &str, r: Result<SweepResult, LabError>, target: f64, tol: f64) -> Entry {
    match r {
        Ok(r) => match &r.fit {
            Some(f) => entry(
                name,
                (f.slope - target).abs() <= tol,
                format!(
                    "slope {} ± {} (target {} ± {}, {} samples{})",
                    fmt_f64(f.slope),
                    fmt_f64(f.stderr),
                    fmt_f64(target),
                    fmt_f64(tol),
                    f.n_samples,
                    if f.lower_bound { ", lower bounds" } else { "" }
                ),
            ),
            None => entry(name, false, "too few samples within the grid budget".into()),
        },
        Err(e) => errored(name, e),
    }
}

fn l2_slope(s: &Polynomial, a: &Analysis, cutoff: &CutoffSpec, cfg: &RunConfig) -> Entry {
    let target = -a.l2_decay.to_f64().unwrap();
    slope_entry("l2-slope", sweep_with(s, cutoff, None, 2.0, cfg, false), target, SLOPE_TOL)
}

fn van_der_corput(s: &Polynomial, a: &Analysis, cfg: &RunConfig) -> Entry {
    let name = "van-der-corput";
    let h = s.mixed_hessian();
    if a.vertices.len() != 1 || h.len() != 1 || h.degree_x() + h.degree_y() != 0 {
        return not_applicable(name, "Hessian is not a nonzero constant");
    }
    let mu = h.terms().next().map(|(_, c)| c.to_f64().unwrap().abs()).unwrap();
    let lambdas = log_spaced(cfg.lambda_min.max(1.0), cfg.lambda_max, cfg.lambda_count.min(6));
    match van_der_corput_check(s, &cutoff_of(cfg), (mu, mu), &lambdas, cfg.grid_budget, cfg.seed) {
        Ok(r) => entry(name, r.c_report <= 10.0, format!("C_report {}", fmt_f64(r.c_report))),
        Err(e) => errored(name, e),
    }
}

fn lp_slope(s: &Polynomial, a: &Analysis, cutoff: &CutoffSpec, cfg: &RunConfig) -> Entry {
    let name = "lp-slope";
    let Some(v) = a.vertices.iter().find(|v| v.p.to_f64() != Some(2.0)) else {
        return not_applicable(name, "every vertex has p = 2");
    };
    let p = v.p.to_f64().unwrap();
    let target = -v.decay.to_f64().unwrap();
    let r = sweep_with(s, cutoff, None, p, cfg, true);
    let mut e = slope_entry(name, r.clone(), target, LP_SLOPE_TOL);
    if let Ok(r) = r {
        let worst = r.samples.iter().filter_map(|s| s.duality_gap).fold(0.0, f64::max);
        if worst > 1e-3 {
            e.outcome = Outcome::Fail;
        }
        let _ = write!(e.measured, ", p = {}, worst duality gap {}", fmt_f64(p), fmt_f64(worst));
    }
    e
}

fn damped_slope(s: &Polynomial, a: &Analysis, cutoff: &CutoffSpec, cfg: &RunConfig) -> Entry {
    let name = "damped-l2-slope";
    let Some(v) = a.vertices.iter().find(|v| v.r >= 1 && v.damped_re_z.is_some()) else {
        return not_applicable(name, "no vertex r ≥ 1 with A > 0");
    };
    let re_z = v.damped_re_z.as_ref().and_then(|z| z.to_f64()).unwrap();
    let d = match build_damping(&a.cluster_tree, v.r, Complex::new(re_z, 0.0)) {
        Ok(d) => d,
        Err(e) => return errored(name, e),
    };
    let target = -v.damped_sigma.to_f64().unwrap();
    let mut e = slope_entry(name, sweep_with(s, cutoff, Some(&d), 2.0, cfg, false), target, SLOPE_TOL);
    let _ = write!(e.measured, ", vertex {}, Re z = {}", v.r, fmt_f64(re_z));
    e
}

fn critical_exponent(a: &Analysis, cutoff: &CutoffSpec) -> Vec<Entry> {
    let mut out = Vec::new();
    let tree = &a.cluster_tree;
    if tree.m > 0 {
        let name = "critical-exponent-r0";
        let a0 = &a.vertices[0].a;
        let r = build_damping(tree, 0, Complex::new(-1.0 / a0.to_f64().unwrap(), 0.0))
            .map_err(|e| e.to_string())
            .and_then(|d| critical_exponent_l1_check(&d, a0, None, cutoff, &SliceConfig::default()).map_err(|e| e.to_string()));
        out.push(match r {
            Ok(r) => entry(name, r.pointwise_bound == Some(1.0), format!("pointwise constant {:?}", r.pointwise_bound)),
            Err(e) => errored(name, e),
        });
    }
    let name = "critical-exponent-r1";
    if tree.levels.is_empty() || a.vertices.len() < 2 {
        out.push(not_applicable(name, "Hessian has no nontrivial root cluster"));
    } else if a.special_form.is_some() {
        out.push(not_applicable(name, "special form; covered by the atom check"));
    } else {
        let a1 = &a.vertices[1].a;
        let r = build_damping(tree, 1, Complex::new(-1.0 / a1.to_f64().unwrap(), 0.0))
            .map_err(|e| e.to_string())
            .and_then(|d| {
                critical_exponent_l1_check(&d, a1, Some(&tree.levels[0].exponent), cutoff, &SliceConfig::default())
                    .map_err(|e| e.to_string())
            });
        out.push(match r {
            Ok(r) => entry(
                name,
                r.passed,
                format!(
                    "sup {}, refined {}, growth {}",
                    fmt_f64(r.sup_slice_integral.unwrap()),
                    fmt_f64(r.refined_sup.unwrap()),
                    fmt_f64(r.growth.unwrap())
                ),
            ),
            Err(e) => errored(name, e),
        });
    }
    out
}

fn atoms(s: &Polynomial, a: &Analysis, cutoff: &CutoffSpec, cfg: &RunConfig) -> Entry {
    let name = "h1e-atoms";
    let Some(sf) = &a.special_form else {
        return not_applicable(name, "damping factor is not of special form");
    };
    let Some(re_z) = a.vertices.get(1).and_then(|v| v.critical_neg_re_z.as_ref()).and_then(|z| z.to_f64()) else {
        return not_applicable(name, "vertex 1 has A = 0");
    };
    let lambdas = [1e2, 1e3, 1e4];
    let k = outer_scale_index(cutoff.half_width);
    let d = match build_modified_damping(&a.cluster_tree, lambdas[0], k, Complex::new(re_z, 0.0)) {
        Ok(d) => d,
        Err(e) => return errored(name, e),
    };
    match h1e_atom_check(s, &sf.root, &d, cutoff, &lambdas, 50, k - 1, cfg.grid_budget, cfg.seed) {
        Ok(r) => {
            let res = r.samples.iter().map(|s| s.max_condition_residual).fold(0.0, f64::max);
            let maxima: Vec<String> = r.samples.iter().map(|s| fmt_f64(s.max_l1)).collect();
            entry(
                name,
                r.growth_ratio <= 2.0 && res <= 1e-12,
                format!("maxima [{}], ratio {}, residual {}", maxima.join(", "), fmt_f64(r.growth_ratio), fmt_f64(res)),
            )
        }
        Err(e) => errored(name, e),
    }
}
