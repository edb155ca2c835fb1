use num_complex::Complex;
use num_traits::{Float, Zero};
use rayon::prelude::*;
use std::f64::consts::PI;

use super::cutoff::{dyadic_phi, CutoffSpec};
use super::LabError;
use crate::damping::{DampedWeight, DampingFactor};
use crate::poly::rational_to_f64;
use crate::Polynomial;

/// Points per shortest oscillation period.
pub const OVERSAMPLING: f64 = 8.0;
/// Default cap on stored kernel entries (a 4096 × 4096 grid).
pub const DEFAULT_GRID_BUDGET: usize = 4096 * 4096;
/// Grids never get coarser than this, whatever the frequency.
pub const MIN_NODES: usize = 64;

/// Scalar type a kernel can be stored in.
pub trait Real: Float + Send + Sync + std::fmt::Debug + 'static {}
impl<F: Float + Send + Sync + std::fmt::Debug + 'static> Real for F {}

/// Midpoint discretization of `f ↦ ∫ e^{iλS} w φ f dy`, kernel stored densely.
#[derive(Debug, Clone)]
pub struct DiscretizedOperator<F> {
    pub lambda: f64,
    pub h: f64,
    pub nodes: Vec<f64>,
    /// `max |∇S|` bound the grid was sized from.
    pub gradient_bound: f64,
    /// `2π / (|λ| h max|∇S|)`.
    pub sampling_ratio: f64,
    kernel: Vec<Complex<F>>,
}

/// `max(Σ |c| k w^{k−1} w^l, Σ |c| l w^k w^{l−1})`, an upper bound for
/// `|∂ₓS|` and `|∂ᵧS|` on `[−w, w]²` that is attained at a corner whenever
/// all terms align there.
pub fn gradient_bound(s: &Polynomial, w: f64) -> f64 {
    let mut gx = 0.0;
    let mut gy = 0.0;
    for (m, c) in s.terms() {
        let c = rational_to_f64(c).abs();
        if m.dx > 0 {
            gx += c * m.dx as f64 * w.powi(m.dx as i32 - 1 + m.dy as i32);
        }
        if m.dy > 0 {
            gy += c * m.dy as f64 * w.powi(m.dx as i32 + m.dy as i32 - 1);
        }
    }
    f64::max(gx, gy)
}

/// Nodes per axis demanded by the oversampling guard (even, so that the
/// midpoint grid never contains 0).
pub fn required_nodes(lambda: f64, gradient: f64, half_width: f64) -> usize {
    let n = (2.0 * half_width * OVERSAMPLING * lambda.abs() * gradient / (2.0 * PI)).ceil() as usize;
    let n = n.max(MIN_NODES);
    n + n % 2
}

/// Largest `|λ|` whose guarded grid fits in `budget` entries.
pub fn lambda_cap(budget: usize, gradient: f64, half_width: f64) -> f64 {
    let mut n = (budget as f64).sqrt().floor() as usize;
    n -= n % 2;
    n as f64 * 2.0 * PI / (2.0 * half_width * OVERSAMPLING * gradient)
}

impl<F: Real> DiscretizedOperator<F> {
    pub fn discretize(
        s: &Polynomial,
        cutoff: &CutoffSpec,
        lambda: f64,
        damping: Option<&DampingFactor>,
        grid_budget: usize,
    ) -> Result<Self, LabError> {
        if lambda == 0.0 || !lambda.is_finite() {
            return Err(LabError::InvalidFrequency(lambda));
        }
        let w = cutoff.half_width;
        if !(w > 0.0 && w.is_finite()) {
            return Err(LabError::InvalidCutoff(w));
        }
        let g = gradient_bound(s, w);
        let n = required_nodes(lambda, g, w);
        if n * n > grid_budget {
            return Err(LabError::GridBudgetExceeded {
                lambda,
                nodes: n,
                budget: grid_budget,
                lambda_cap: lambda_cap(grid_budget, g, w),
            });
        }
        let h = 2.0 * w / n as f64;
        let nodes: Vec<f64> = (0..n).map(|i| -w + h * (i as f64 + 0.5)).collect();
        let sf = s.to_float::<f64>();
        let row_poly = sf.rows_in_y();
        let rows: Result<Vec<Vec<Complex<F>>>, LabError> = nodes
            .par_iter()
            .map(|&x| {
                let coeffs: Vec<f64> = row_poly
                    .iter()
                    .map(|r| r.iter().map(|(&dx, &c)| c * x.powi(dx as i32)).sum())
                    .collect();
                nodes
                    .iter()
                    .map(|&y| {
                        let phase = coeffs.iter().rev().fold(0.0, |acc, c| acc * y + c);
                        let mut v = Complex::from_polar(h * cutoff.eval(x, y), lambda * phase);
                        if let Some(d) = damping {
                            match d.weight(x, y) {
                                DampedWeight::Value(wt) => v *= wt,
                                DampedWeight::PositiveInfinity => return Err(LabError::SingularWeight { x, y }),
                            }
                        }
                        Ok(Complex::new(F::from(v.re).unwrap(), F::from(v.im).unwrap()))
                    })
                    .collect()
            })
            .collect();
        let kernel = rows?.into_iter().flatten().collect();
        Ok(DiscretizedOperator {
            lambda,
            h,
            nodes,
            gradient_bound: g,
            sampling_ratio: if g > 0.0 { 2.0 * PI / (lambda.abs() * h * g) } else { f64::INFINITY },
            kernel,
        })
    }

    /// Operator with an explicit kernel on a uniform grid, for tests and oracles.
    pub fn from_kernel(n: usize, kernel: Vec<Complex<F>>) -> Self {
        assert_eq!(kernel.len(), n * n);
        let h = 1.0 / n as f64;
        DiscretizedOperator {
            lambda: 0.0,
            h,
            nodes: (0..n).map(|i| h * (i as f64 + 0.5)).collect(),
            gradient_bound: 0.0,
            sampling_ratio: f64::INFINITY,
            kernel,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex<F> {
        self.kernel[i * self.len() + j]
    }

    pub fn kernel(&self) -> &[Complex<F>] {
        &self.kernel
    }

    pub fn apply(&self, f: &[Complex<F>]) -> Vec<Complex<F>> {
        let n = self.len();
        assert_eq!(f.len(), n);
        self.kernel
            .par_chunks(n)
            .map(|row| row.iter().zip(f).fold(Complex::zero(), |acc, (k, v)| acc + k * v))
            .collect()
    }

    /// `K* g`, accumulated over a fixed row blocking so results do not depend
    /// on scheduling.
    pub fn apply_adjoint(&self, g: &[Complex<F>]) -> Vec<Complex<F>> {
        let n = self.len();
        assert_eq!(g.len(), n);
        const BLOCKS: usize = 16;
        let per = n.div_ceil(BLOCKS).max(1);
        let partials: Vec<Vec<Complex<F>>> = (0..n.div_ceil(per))
            .into_par_iter()
            .map(|b| {
                let mut acc = vec![Complex::zero(); n];
                for i in b * per..((b + 1) * per).min(n) {
                    let gi = g[i];
                    if gi.is_zero() {
                        continue;
                    }
                    for (a, k) in acc.iter_mut().zip(&self.kernel[i * n..(i + 1) * n]) {
                        *a = *a + k.conj() * gi;
                    }
                }
                acc
            })
            .collect();
        let mut out = vec![Complex::zero(); n];
        for p in partials {
            for (o, v) in out.iter_mut().zip(p) {
                *o = *o + v;
            }
        }
        out
    }

    /// `Kᵀ` with conjugated entries, as an operator in its own right.
    pub fn adjoint(&self) -> Self {
        let n = self.len();
        let mut kernel = vec![Complex::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                kernel[j * n + i] = self.kernel[i * n + j].conj();
            }
        }
        self.with_kernel(kernel)
    }

    fn with_kernel(&self, kernel: Vec<Complex<F>>) -> Self {
        DiscretizedOperator {
            lambda: self.lambda,
            h: self.h,
            nodes: self.nodes.clone(),
            gradient_bound: self.gradient_bound,
            sampling_ratio: self.sampling_ratio,
            kernel,
        }
    }

    /// Entrywise multiplication by `m(x_i, y_j)`.
    pub fn masked(&self, m: impl Fn(f64, f64) -> f64 + Sync) -> Self {
        let n = self.len();
        let kernel = self
            .kernel
            .par_chunks(n)
            .enumerate()
            .flat_map_iter(|(i, row)| {
                let x = self.nodes[i];
                let m = &m;
                row.iter()
                    .zip(&self.nodes)
                    .map(move |(k, &y)| *k * F::from(m(x, y)).unwrap())
            })
            .collect();
        self.with_kernel(kernel)
    }

    /// `K · Φ(σ₁x/2^j) Φ(σ₂y/2^k)`.
    pub fn dyadic_piece(&self, j: i32, k: i32, sigma1: Sign, sigma2: Sign) -> Result<Self, LabError> {
        let (sx, sy) = (sigma1.value(), sigma2.value());
        let (scale_x, scale_y) = ((j as f64).exp2(), (k as f64).exp2());
        let hits = |s: f64, scale: f64| self.nodes.iter().any(|&t| dyadic_phi(s * t / scale) != 0.0);
        if !hits(sx, scale_x) || !hits(sy, scale_y) {
            return Err(LabError::EmptyPiece { j, k });
        }
        Ok(self.masked(|x, y| dyadic_phi(sx * x / scale_x) * dyadic_phi(sy * y / scale_y)))
    }

    /// Dyadic indices `j` with `Φ(|t|/2^j) ≠ 0` at some node.
    pub fn dyadic_range(&self) -> std::ops::RangeInclusive<i32> {
        let lo = self.nodes.iter().map(|t| t.abs()).fold(f64::INFINITY, f64::min);
        let hi = self.nodes.iter().map(|t| t.abs()).fold(0.0, f64::max);
        (lo.log2().floor() as i32 - 1)..=(hi.log2().ceil() as i32 + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}
