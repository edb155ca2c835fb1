use serde::Serialize;
use std::fmt::Write as _;

use super::cutoff::CutoffSpec;
use super::norms::{l2_norm, lp_duality_check, lp_norm_estimate, LP_RESTARTS};
use super::operator::{DiscretizedOperator, Real, DEFAULT_GRID_BUDGET};
use super::{fmt_f64, LabError};
use crate::damping::DampingFactor;
use crate::Polynomial;

/// Smallest number of usable samples a slope is fitted from.
pub const MIN_FIT_SAMPLES: usize = 6;
/// Largest relative gap between the `p` and adjoint `p′` estimates.
pub const DUALITY_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub grid_budget: usize,
    pub seed: u64,
    pub restarts: usize,
    /// Also run the adjoint estimator at `p′` and record the gap.
    pub duality_check: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            grid_budget: DEFAULT_GRID_BUDGET,
            seed: 0,
            restarts: LP_RESTARTS,
            duality_check: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleStatus {
    Converged,
    IterationCap,
    NotMonotone,
    DualityMismatch,
    GridBudgetExceeded,
}

impl SampleStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SampleStatus::Converged => "converged",
            SampleStatus::IterationCap => "iteration-cap",
            SampleStatus::NotMonotone => "not-monotone",
            SampleStatus::DualityMismatch => "duality-mismatch",
            SampleStatus::GridBudgetExceeded => "grid-budget-exceeded",
        }
    }

    /// Samples that carry a usable norm.
    pub fn has_norm(self) -> bool {
        !matches!(self, SampleStatus::GridBudgetExceeded)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub lambda: f64,
    /// `NaN` when no operator could be built.
    pub norm: f64,
    pub p: f64,
    pub status: SampleStatus,
    pub nodes: usize,
    pub duality_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    pub n_samples: usize,
    /// The norms are lower bounds (`p ≠ 2`), so is the fitted decay.
    pub lower_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub samples: Vec<Sample>,
    pub fit: Option<Fit>,
}

/// Ordinary least squares `y = a + b x`; returns `(b, stderr(b), a)`.
pub fn ols(points: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    let n = points.len();
    if n < 3 {
        return None;
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = (ssr / (nf - 2.0) / sxx).sqrt();
    Some((slope, stderr, intercept))
}

/// `count` log-spaced values from `lo` to `hi`, both endpoints exact.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| match i {
            0 => lo,
            i if i == count - 1 => hi,
            i => (a + (b - a) * i as f64 / (count - 1) as f64).exp(),
        })
        .collect()
}

/// Norm of one discretized operator at exponent `p`.
pub fn measure<F: Real>(op: &DiscretizedOperator<F>, p: f64, cfg: &SweepConfig) -> (f64, SampleStatus, Option<f64>) {
    if p == 2.0 {
        let est = l2_norm(op, cfg.seed);
        let status = if est.converged {
            SampleStatus::Converged
        } else {
            SampleStatus::IterationCap
        };
        return (est.value, status, None);
    }
    if cfg.duality_check {
        let report = lp_duality_check(op, p, cfg.restarts, cfg.seed);
        let status = if !(report.primal.monotone && report.dual.monotone) {
            SampleStatus::NotMonotone
        } else if report.relative_gap > DUALITY_TOL {
            SampleStatus::DualityMismatch
        } else if !report.primal.converged {
            SampleStatus::IterationCap
        } else {
            SampleStatus::Converged
        };
        return (report.primal.lower_bound, status, Some(report.relative_gap));
    }
    let est = lp_norm_estimate(op, p, cfg.restarts, cfg.seed);
    let status = if !est.monotone {
        SampleStatus::NotMonotone
    } else if !est.converged {
        SampleStatus::IterationCap
    } else {
        SampleStatus::Converged
    };
    (est.lower_bound, status, None)
}

/// Measures the norm at each `λ` and fits `log norm` against `log λ`.
///
/// A modified damping factor is retuned to each `λ`. Samples whose grid
/// would exceed the budget are kept with their status and no norm.
pub fn sweep<F: Real>(
    s: &Polynomial,
    cutoff: &CutoffSpec,
    damping: Option<&DampingFactor>,
    p: f64,
    lambdas: &[f64],
    cfg: &SweepConfig,
) -> Result<SweepResult, LabError> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(LabError::InvalidExponent(p));
    }
    let mut samples = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let tuned = damping.map(|d| d.at_lambda(lambda));
        match DiscretizedOperator::<F>::discretize(s, cutoff, lambda, tuned.as_ref(), cfg.grid_budget) {
            Ok(op) => {
                let (norm, status, duality_gap) = measure(&op, p, cfg);
                samples.push(Sample {
                    lambda,
                    norm,
                    p,
                    status,
                    nodes: op.len(),
                    duality_gap,
                });
            }
            Err(LabError::GridBudgetExceeded { nodes, .. }) => samples.push(Sample {
                lambda,
                norm: f64::NAN,
                p,
                status: SampleStatus::GridBudgetExceeded,
                nodes,
                duality_gap: None,
            }),
            Err(e) => return Err(e),
        }
    }
    let fit = fit_samples(&samples, p != 2.0);
    Ok(SweepResult { samples, fit })
}

pub fn fit_samples(samples: &[Sample], lower_bound: bool) -> Option<Fit> {
    let used: Vec<&Sample> = samples
        .iter()
        .filter(|s| s.status.has_norm() && s.norm > 0.0 && s.norm.is_finite())
        .collect();
    if used.len() < MIN_FIT_SAMPLES {
        return None;
    }
    let pts: Vec<(f64, f64)> = used.iter().map(|s| (s.lambda.ln(), s.norm.ln())).collect();
    let (slope, stderr, intercept) = ols(&pts)?;
    let lo = used.iter().map(|s| s.lambda).fold(f64::INFINITY, f64::min);
    let hi = used.iter().map(|s| s.lambda).fold(0.0, f64::max);
    Some(Fit {
        slope,
        stderr,
        intercept,
        window: (lo, hi),
        n_samples: used.len(),
        lower_bound,
    })
}

impl SweepResult {
    /// `lambda,norm,p,status`, one row per sample.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,norm,p,status\n");
        for s in &self.samples {
            let norm = if s.norm.is_finite() { fmt_f64(s.norm) } else { String::new() };
            let _ = writeln!(out, "{},{},{},{}", fmt_f64(s.lambda), norm, fmt_f64(s.p), s.status.as_str());
        }
        out
    }

    /// `{slope, stderr, window, n_samples}` (plus `lower_bound`), or an
    /// explanation when too few samples survived.
    pub fn fit_json(&self) -> String {
        match &self.fit {
            Some(f) => format!(
                "{{\"slope\":{},\"stderr\":{},\"window\":[{},{}],\"n_samples\":{},\"lower_bound\":{}}}",
                fmt_f64(f.slope),
                fmt_f64(f.stderr),
                fmt_f64(f.window.0),
                fmt_f64(f.window.1),
                f.n_samples,
                f.lower_bound
            ),
            None => format!(
                "{{\"slope\":null,\"stderr\":null,\"window\":null,\"n_samples\":{}}}",
                self.samples.iter().filter(|s| s.status.has_norm()).count()
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ols_recovers_exact_line() {
        let pts: Vec<(f64, f64)> = (0..8).map(|i| (i as f64, 2.0 - 0.5 * i as f64)).collect();
        let (b, se, a) = ols(&pts).unwrap();
        assert!((b + 0.5).abs() < 1e-14 && (a - 2.0).abs() < 1e-14 && se < 1e-14);
    }

    #[test]
    fn ols_stderr_oracle() {
        // hand-computed: x = 0..4, y = (0, 1, 1, 3, 3)
        let pts = [(0.0, 0.0), (1.0, 1.0), (2.0, 1.0), (3.0, 3.0), (4.0, 3.0)];
        let (b, se, a) = ols(&pts).unwrap();
        assert!((b - 0.8).abs() < 1e-14);
        assert!((a - 0.0).abs() < 1e-14);
        // residuals 0, 0.2, -0.6, 0.6, -0.2 → SSR 0.8; s² = 0.8/3; Sxx = 10
        assert!((se - (0.8f64 / 3.0 / 10.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn log_spacing() {
        let v = log_spaced(30.0, 3000.0, 12);
        assert_eq!(v.len(), 12);
        assert!(v[0] == 30.0 && v[11] == 3000.0);
        let r = v[1] / v[0];
        assert!(v.windows(2).all(|w| (w[1] / w[0] - r).abs() < 1e-12 * r));
    }

    #[test]
    fn too_few_samples_give_no_fit() {
        let samples: Vec<Sample> = (0..5)
            .map(|i| Sample {
                lambda: 10.0 * (i + 1) as f64,
                norm: 1.0 / (i + 1) as f64,
                p: 2.0,
                status: SampleStatus::Converged,
                nodes: 64,
                duality_gap: None,
            })
            .collect();
        assert!(fit_samples(&samples, false).is_none());
        let r = SweepResult { samples, fit: None };
        assert!(r.fit_json().contains("\"slope\":null"));
        assert!(r.to_csv().starts_with("lambda,norm,p,status\n1.0000000000000000e1,"));
    }
}
