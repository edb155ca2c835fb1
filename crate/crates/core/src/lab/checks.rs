use num_complex::Complex;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::cutoff::{dyadic_phi, CutoffSpec};
use super::norms::{l2_norm, Composed};
use super::operator::{DiscretizedOperator, Sign};
use super::LabError;
use crate::damping::{DampingFactor, DampingVariant};
use crate::poly::rational_to_f64;
use crate::puiseux::{invert_linear_root, PuiseuxSeries};
use crate::{Polynomial, Rational};

/// Range of `|S''_xy|` over the grid points where the cutoff is nonzero.
pub fn hessian_range(s: &Polynomial, cutoff: &CutoffSpec, resolution: usize) -> Option<(f64, f64)> {
    let hess = s.mixed_hessian().to_float::<f64>();
    let w = cutoff.half_width;
    let h = 2.0 * w / resolution as f64;
    let mut range: Option<(f64, f64)> = None;
    for i in 0..resolution {
        let x = -w + h * (i as f64 + 0.5);
        for j in 0..resolution {
            let y = -w + h * (j as f64 + 0.5);
            if cutoff.eval(x, y) == 0.0 {
                continue;
            }
            let v = hess.eval_real(x, y).abs();
            range = Some(match range {
                None => (v, v),
                Some((lo, hi)) => (lo.min(v), hi.max(v)),
            });
        }
    }
    range
}

fn check_window(s: &Polynomial, cutoffs: &[CutoffSpec], window: (f64, f64)) -> Result<(f64, f64), LabError> {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for c in cutoffs {
        let (a, b) = hessian_range(s, c, 256).ok_or(LabError::EmptyPiece { j: 0, k: 0 })?;
        lo = lo.min(a);
        hi = hi.max(b);
    }
    if lo < window.0 || hi > window.1 {
        return Err(LabError::HessianOutOfWindow {
            min: lo,
            max: hi,
            window,
        });
    }
    Ok((lo, hi))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaledSample {
    pub lambda: f64,
    pub norm: f64,
    /// `norm` divided by the predicted bound's shape.
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VanDerCorputReport {
    pub hessian_range: (f64, f64),
    pub samples: Vec<ScaledSample>,
    /// `sup_λ ‖T_λ‖ (|λ| μ_low)^{1/2}`.
    pub c_report: f64,
}

/// `‖T_λ‖ ≲ (|λ| μ)^{−1/2}` when `μ ≤ |S''_xy| ≤ Aμ` on the support.
pub fn van_der_corput_check(
    s: &Polynomial,
    cutoff: &CutoffSpec,
    mu_window: (f64, f64),
    lambdas: &[f64],
    grid_budget: usize,
    seed: u64,
) -> Result<VanDerCorputReport, LabError> {
    let range = check_window(s, &[*cutoff], mu_window)?;
    let mut samples = Vec::new();
    for &lambda in lambdas {
        let op = DiscretizedOperator::<f64>::discretize(s, cutoff, lambda, None, grid_budget)?;
        let norm = l2_norm(&op, seed).value;
        samples.push(ScaledSample {
            lambda,
            norm,
            constant: norm * (lambda.abs() * mu_window.0).sqrt(),
        });
    }
    let c_report = samples.iter().map(|s| s.constant).fold(0.0, f64::max);
    Ok(VanDerCorputReport {
        hessian_range: range,
        samples,
        c_report,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrthogonalityReport {
    pub hessian_range: (f64, f64),
    /// `‖T₁T₂*‖ · |λ| μ_low` per frequency.
    pub samples: Vec<ScaledSample>,
    pub max_ratio: f64,
}

/// `‖T₁ T₂*‖ ≲ (|λ| μ)^{−1}` for the first-quadrant dyadic pieces
/// `(j, k)` and `(j′, k′)` of `T_λ`.
pub fn almost_orthogonality_check(
    s: &Polynomial,
    cutoff: &CutoffSpec,
    piece1: (i32, i32),
    piece2: (i32, i32),
    mu_window: (f64, f64),
    lambdas: &[f64],
    grid_budget: usize,
    seed: u64,
) -> Result<OrthogonalityReport, LabError> {
    let restrict = |(j, k): (i32, i32)| CutoffSpec {
        dyadic: Some((j, k)),
        ..*cutoff
    };
    // expanded neighbourhood: the pieces' supports scanned on a fine grid
    let range = check_window(s, &[restrict(piece1), restrict(piece2)], mu_window)?;
    let mut samples = Vec::new();
    for &lambda in lambdas {
        let op = DiscretizedOperator::<f64>::discretize(s, cutoff, lambda, None, grid_budget)?;
        let t1 = op.dyadic_piece(piece1.0, piece1.1, Sign::Plus, Sign::Plus)?;
        let t2 = op.dyadic_piece(piece2.0, piece2.1, Sign::Plus, Sign::Plus)?;
        let norm = l2_norm(&Composed { a: &t1, b: &t2 }, seed).value;
        samples.push(ScaledSample {
            lambda,
            norm,
            constant: norm * lambda.abs() * mu_window.0,
        });
    }
    let max_ratio = samples.iter().map(|s| s.constant).fold(0.0, f64::max);
    Ok(OrthogonalityReport {
        hessian_range: range,
        samples,
        max_ratio,
    })
}

/// Configuration of the slice integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SliceConfig {
    /// Region mask `|y| > 2^{−N₀} |x|^{a_r}`.
    pub n0: i32,
    /// Midpoints per dyadic shell in `x`.
    pub points_per_shell: usize,
    /// Dyadic `y`-slices per octave.
    pub slices_per_octave: usize,
    /// Smallest `|y|` is `2^{−depth}`.
    pub depth: i32,
}

impl Default for SliceConfig {
    fn default() -> Self {
        SliceConfig {
            n0: 3,
            points_per_shell: 32,
            slices_per_octave: 2,
            depth: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalReport {
    /// Exact `sup |x| · |x|^{m Re z}` for `r = 0`.
    pub pointwise_bound: Option<f64>,
    /// `sup_y ∫ |D|^{Re z} φ dx` over the masked region, base and 4× refined.
    pub sup_slice_integral: Option<f64>,
    pub refined_sup: Option<f64>,
    pub growth: Option<f64>,
    pub passed: bool,
}

/// `sup_y ∫ |D(x, y)|^{−1/A_r} φ(x, y) dx` on `|y| > 2^{−N₀}|x|^{a_r}`,
/// or for `r = 0` the pointwise constant of `|x| · |W_z kernel|`.
pub fn critical_exponent_l1_check(
    damping: &DampingFactor,
    a_r: &Rational,
    leading_exponent: Option<&Rational>,
    cutoff: &CutoffSpec,
    cfg: &SliceConfig,
) -> Result<CriticalReport, LabError> {
    if damping.variant != DampingVariant::Plain {
        return Err(LabError::NotPlainDamping);
    }
    if a_r.is_zero() {
        return Err(LabError::InvalidExponent(0.0));
    }
    let re_z = -a_r.recip();
    if damping.r == 0 {
        // |x| · |x|^{m Re z} with m = A_0: the exponent cancels exactly
        let exponent = Rational::from_integer(1.into()) + Rational::from_integer(damping.m.into()) * &re_z;
        let bound = if exponent.is_zero() {
            1.0
        } else if exponent.is_positive() {
            cutoff.half_width.powf(rational_to_f64(&exponent))
        } else {
            f64::INFINITY
        };
        return Ok(CriticalReport {
            pointwise_bound: Some(bound),
            sup_slice_integral: None,
            refined_sup: None,
            growth: None,
            passed: bound.is_finite(),
        });
    }
    let a = leading_exponent.map(rational_to_f64).unwrap_or(1.0);
    let re_z = rational_to_f64(&re_z);
    let base = slice_sup(damping, re_z, a, cutoff, cfg)?;
    let fine = SliceConfig {
        points_per_shell: cfg.points_per_shell * 4,
        slices_per_octave: cfg.slices_per_octave * 4,
        ..*cfg
    };
    let refined = slice_sup(damping, re_z, a, cutoff, &fine)?;
    let growth = refined / base;
    Ok(CriticalReport {
        pointwise_bound: None,
        sup_slice_integral: Some(base),
        refined_sup: Some(refined),
        growth: Some(growth),
        passed: base.is_finite() && refined.is_finite() && growth < 2.0,
    })
}

fn slice_sup(d: &DampingFactor, re_z: f64, a: f64, cutoff: &CutoffSpec, cfg: &SliceConfig) -> Result<f64, LabError> {
    let w = cutoff.half_width;
    let mut sup: f64 = 0.0;
    let total = cfg.depth as usize * cfg.slices_per_octave;
    for i in 0..=total {
        let mag = w * (-(i as f64) / cfg.slices_per_octave as f64).exp2();
        for y in [mag, -mag] {
            // |x|^{a} < 2^{N₀}|y|
            let x_max = ((cfg.n0 as f64).exp2() * y.abs()).powf(1.0 / a).min(w);
            let v = slice_integral(d, re_z, y, x_max, cutoff, cfg.points_per_shell);
            if !v.is_finite() {
                return Err(LabError::DivergentSliceIntegral { y });
            }
            sup = sup.max(v);
        }
    }
    Ok(sup)
}

/// `∫_{|x|<x_max} |D(x, y)|^{re_z} φ(x, y) dx` by midpoints on dyadic shells.
fn slice_integral(d: &DampingFactor, re_z: f64, y: f64, x_max: f64, cutoff: &CutoffSpec, per_shell: usize) -> f64 {
    let mut acc = 0.0;
    let shells = 60;
    for s in 0..shells {
        let hi = x_max * (-(s as f64)).exp2();
        let lo = hi * 0.5;
        let h = (hi - lo) / per_shell as f64;
        for i in 0..per_shell {
            let t = lo + h * (i as f64 + 0.5);
            for x in [t, -t] {
                let m = d.magnitude(x, y);
                if m == 0.0 {
                    return f64::INFINITY;
                }
                acc += h * m.powf(re_z) * cutoff.eval(x, y);
            }
        }
    }
    acc
}

/// Tolerance below which `|Σ_{I⁺} e^{iλS}|` counts as degenerate.
pub const ATOM_DEGENERACY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomSample {
    pub lambda: f64,
    pub max_l1: f64,
    pub max_condition_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomReport {
    pub samples: Vec<AtomSample>,
    /// Max at the largest `λ` over max at the smallest.
    pub growth_ratio: f64,
    pub resampled: usize,
    pub dyadic_k: i32,
}

/// A discrete two-half atom on the grid points of `I = [lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub lo: f64,
    pub hi: f64,
    pub values: Vec<f64>,
    pub gamma: Complex<f64>,
    pub alpha: f64,
}

/// `a = α(χ_{I⁻} − γχ_{I⁺})` on the nodes, with `γ` cancelling
/// `Σ_I e^{iλS(x*, y)} a(y) h` and `α = 1/(|I| max(1, |γ|))`.
/// Returns `None` when the `I⁺` sum is degenerate.
pub fn build_atom(
    phase_on_probe: impl Fn(f64) -> f64,
    nodes: &[f64],
    h: f64,
    lo: f64,
    hi: f64,
) -> Option<(Vec<Complex<f64>>, Complex<f64>, f64)> {
    let mid = 0.5 * (lo + hi);
    let mut minus: Complex<f64> = Complex::zero();
    let mut plus: Complex<f64> = Complex::zero();
    let mut count = 0usize;
    for &y in nodes {
        if y < lo || y > hi {
            continue;
        }
        count += 1;
        let e = Complex::from_polar(h, phase_on_probe(y));
        if y < mid {
            minus += e;
        } else {
            plus += e;
        }
    }
    if count < 2 || plus.norm() < ATOM_DEGENERACY_TOL * h * count as f64 {
        return None;
    }
    let gamma = minus / plus;
    let alpha = 1.0 / ((hi - lo) * gamma.norm().max(1.0));
    let values = nodes
        .iter()
        .map(|&y| {
            if y < lo || y > hi {
                Complex::zero()
            } else if y < mid {
                Complex::new(alpha, 0.0)
            } else {
                -gamma * alpha
            }
        })
        .collect();
    Some((values, gamma, alpha))
}

/// `‖W_z a‖_{L¹}` stays bounded in `λ` for atoms adapted to the root.
pub fn h1e_atom_check(
    s: &Polynomial,
    root: &PuiseuxSeries,
    damping: &DampingFactor,
    cutoff: &CutoffSpec,
    lambdas: &[f64],
    trials: usize,
    dyadic_k: i32,
    grid_budget: usize,
    seed: u64,
) -> Result<AtomReport, LabError> {
    if !matches!(damping.variant, DampingVariant::Modified { .. }) {
        return Err(LabError::NotModifiedDamping);
    }
    let sf = s.to_float::<f64>();
    let i_lo = (dyadic_k as f64 - 1.0).exp2();
    let i_hi = ((dyadic_k as f64 + 1.0).exp2()).min(cutoff.half_width);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::new();
    let mut resampled = 0;
    for &lambda in lambdas {
        let tuned = damping.at_lambda(lambda);
        let op = DiscretizedOperator::<f64>::discretize(s, cutoff, lambda, Some(&tuned), grid_budget)?;
        let mut max_l1: f64 = 0.0;
        let mut max_res: f64 = 0.0;
        let mut done = 0;
        let mut attempts = 0;
        while done < trials {
            attempts += 1;
            if attempts > 20 * trials {
                return Err(LabError::NoValidAtom { lambda });
            }
            let len = rng.gen_range(4.0 * op.h..(i_hi - i_lo));
            let lo = rng.gen_range(i_lo..(i_hi - len));
            let hi = lo + len;
            let centre = 0.5 * (lo + hi);
            let x_star = invert_linear_root(root, centre)?;
            let probe = |y: f64| lambda * sf.eval_real(x_star, y);
            let Some((a, _, _)) = build_atom(probe, &op.nodes, op.h, lo, hi) else {
                resampled += 1;
                continue;
            };
            let residual: Complex<f64> = op
                .nodes
                .iter()
                .zip(&a)
                .map(|(&y, v)| Complex::from_polar(op.h, probe(y)) * v)
                .sum();
            let l1 = a.iter().map(|v| v.norm()).sum::<f64>() * op.h;
            max_res = max_res.max(residual.norm() / l1.max(f64::MIN_POSITIVE));
            let out = op.apply(&a);
            max_l1 = max_l1.max(out.iter().map(|v| v.norm()).sum::<f64>() * op.h);
            done += 1;
        }
        samples.push(AtomSample {
            lambda,
            max_l1,
            max_condition_residual: max_res,
        });
    }
    let first = samples.first().map_or(0.0, |s| s.max_l1);
    let last = samples.last().map_or(0.0, |s| s.max_l1);
    Ok(AtomReport {
        growth_ratio: if first > 0.0 { last / first } else { f64::INFINITY },
        samples,
        resampled,
        dyadic_k,
    })
}

/// `Φ` evaluated at the dyadic coordinates of a node, for callers that
/// assemble pieces by hand.
pub fn piece_weight(x: f64, y: f64, j: i32, k: i32, sx: Sign, sy: Sign) -> f64 {
    dyadic_phi(sx.value() * x / (j as f64).exp2()) * dyadic_phi(sy.value() * y / (k as f64).exp2())
}
