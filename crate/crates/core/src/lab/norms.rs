use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::operator::{DiscretizedOperator, Real};

pub const L2_TOL: f64 = 1e-6;
pub const L2_MAX_ITER: usize = 500;
pub const LP_TOL: f64 = 1e-9;
pub const LP_MAX_ITER: usize = 500;
pub const LP_RESTARTS: usize = 8;

/// Anything with a forward and an adjoint matrix-vector product.
pub trait Applier<F: Real>: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, f: &[Complex<F>]) -> Vec<Complex<F>>;
    fn apply_adjoint(&self, g: &[Complex<F>]) -> Vec<Complex<F>>;
}

impl<F: Real> Applier<F> for DiscretizedOperator<F> {
    fn dim(&self) -> usize {
        self.len()
    }
    fn apply(&self, f: &[Complex<F>]) -> Vec<Complex<F>> {
        DiscretizedOperator::apply(self, f)
    }
    fn apply_adjoint(&self, g: &[Complex<F>]) -> Vec<Complex<F>> {
        DiscretizedOperator::apply_adjoint(self, g)
    }
}

/// `A B*`.
pub struct Composed<'a, A, B> {
    pub a: &'a A,
    pub b: &'a B,
}

impl<F: Real, A: Applier<F>, B: Applier<F>> Applier<F> for Composed<'_, A, B> {
    fn dim(&self) -> usize {
        self.a.dim()
    }
    fn apply(&self, f: &[Complex<F>]) -> Vec<Complex<F>> {
        self.a.apply(&self.b.apply_adjoint(f))
    }
    fn apply_adjoint(&self, g: &[Complex<F>]) -> Vec<Complex<F>> {
        self.b.apply(&self.a.apply_adjoint(g))
    }
}

/// The adjoint of an applier, `K*`.
pub struct Adjoint<'a, A>(pub &'a A);

impl<F: Real, A: Applier<F>> Applier<F> for Adjoint<'_, A> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn apply(&self, f: &[Complex<F>]) -> Vec<Complex<F>> {
        self.0.apply_adjoint(f)
    }
    fn apply_adjoint(&self, g: &[Complex<F>]) -> Vec<Complex<F>> {
        self.0.apply(g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormEstimate {
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

fn to_f64<F: Real>(v: F) -> f64 {
    v.to_f64().unwrap()
}

fn from_f64<F: Real>(v: f64) -> F {
    F::from(v).unwrap()
}

pub fn random_vector<F: Real>(n: usize, rng: &mut ChaCha8Rng) -> Vec<Complex<F>> {
    (0..n)
        .map(|_| Complex::new(from_f64(rng.gen_range(-1.0..1.0)), from_f64(rng.gen_range(-1.0..1.0))))
        .collect()
}

pub fn norm_p<F: Real>(v: &[Complex<F>], p: f64) -> f64 {
    if p == 2.0 {
        return v.iter().map(|c| to_f64(c.norm_sqr())).sum::<f64>().sqrt();
    }
    let max = v.iter().map(|c| to_f64(c.norm())).fold(0.0, f64::max);
    if max == 0.0 {
        return 0.0;
    }
    max * v.iter().map(|c| (to_f64(c.norm()) / max).powf(p)).sum::<f64>().powf(1.0 / p)
}

/// `|y|^{p−1} sgn(y) / ‖y‖_p^{p−1}`: the unit vector of `ℓ^{p′}` norming `y`.
pub fn dual_p<F: Real>(y: &[Complex<F>], p: f64) -> Vec<Complex<F>> {
    let norm = norm_p(y, p);
    if norm == 0.0 {
        return vec![Complex::zero(); y.len()];
    }
    y.iter()
        .map(|c| {
            let r = to_f64(c.norm());
            if r == 0.0 {
                return Complex::zero();
            }
            let scale = (r / norm).powf(p - 1.0) / r;
            Complex::new(from_f64(to_f64(c.re) * scale), from_f64(to_f64(c.im) * scale))
        })
        .collect()
}

fn scaled<F: Real>(v: &[Complex<F>], s: f64) -> Vec<Complex<F>> {
    let s = from_f64::<F>(s);
    v.iter().map(|c| c * s).collect()
}

/// Largest singular value of `K`: Lanczos on `K*K` from a seeded random
/// start, with full reorthogonalization.
///
/// The top Ritz value increases monotonically to `‖K‖²` from below, so
/// every iterate is a lower bound. Iteration stops when the Ritz residual
/// `β_j |s_j|` falls below `L2_TOL` relative, or the Krylov space is
/// exhausted. Plain power iteration stalls on the clustered top singular
/// values typical of oscillatory kernels.
pub fn l2_norm<F: Real, A: Applier<F>>(op: &A, seed: u64) -> NormEstimate {
    let n = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = random_vector::<F>(n, &mut rng);
    let mut v: Vec<Complex<f64>> = start.iter().map(|c| Complex::new(to_f64(c.re), to_f64(c.im))).collect();
    let nv = l2(&v);
    v.iter_mut().for_each(|c| *c /= nv);

    let mut basis: Vec<Vec<Complex<f64>>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut theta = 0.0f64;
    let max_iter = L2_MAX_ITER.min(n.max(1));
    for it in 1..=max_iter {
        let x: Vec<Complex<F>> = v.iter().map(|c| Complex::new(from_f64(c.re), from_f64(c.im))).collect();
        let w = op.apply_adjoint(&op.apply(&x));
        let mut w: Vec<Complex<f64>> = w.iter().map(|c| Complex::new(to_f64(c.re), to_f64(c.im))).collect();
        let a = dot(&v, &w).re;
        basis.push(v);
        alpha.push(a);
        // w − Σ ⟨q, w⟩ q, twice
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= qi * c);
            }
        }
        let b = l2(&w);
        let (top, last) = top_ritz(&alpha, &beta);
        theta = theta.max(top);
        if theta == 0.0 {
            return NormEstimate {
                value: 0.0,
                converged: true,
                iterations: it,
            };
        }
        if b * last.abs() <= L2_TOL * theta || b <= 1e-14 * theta || it == n {
            return NormEstimate {
                value: theta.sqrt(),
                converged: true,
                iterations: it,
            };
        }
        beta.push(b);
        v = w.into_iter().map(|c| c / b).collect();
    }
    NormEstimate {
        value: theta.sqrt(),
        converged: false,
        iterations: max_iter,
    }
}

fn dot(a: &[Complex<f64>], b: &[Complex<f64>]) -> Complex<f64> {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn l2(a: &[Complex<f64>]) -> f64 {
    a.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest eigenvalue of the tridiagonal `(α, β)` and the last component
/// of its unit eigenvector.
fn top_ritz(alpha: &[f64], beta: &[f64]) -> (f64, f64) {
    let k = alpha.len();
    let t = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let (idx, top) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &e)| if e > acc.1 { (i, e) } else { acc });
    (top, eig.eigenvectors[(k - 1, idx)])
}

/// One chain of the dual-norm power iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Chain {
    pub estimates: Vec<f64>,
    pub converged: bool,
}

impl Chain {
    pub fn best(&self) -> f64 {
        self.estimates.iter().copied().fold(0.0, f64::max)
    }

    /// Nondecreasing up to round-off.
    pub fn is_monotone(&self) -> bool {
        self.estimates.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-10))
    }
}

/// `x ← dual_{p′}(K* dual_p(K x))`; estimates `‖K x‖_p` with `‖x‖_p = 1`.
pub fn lp_chain<F: Real, A: Applier<F>>(op: &A, p: f64, start: &[Complex<F>]) -> Chain {
    let q = p / (p - 1.0);
    let n0 = norm_p(start, p);
    let mut x = scaled(start, 1.0 / n0);
    let mut estimates = Vec::new();
    for _ in 0..LP_MAX_ITER {
        let y = op.apply(&x);
        let est = norm_p(&y, p);
        let done = estimates
            .last()
            .is_some_and(|&prev: &f64| (est - prev).abs() <= LP_TOL * est);
        estimates.push(est);
        if est == 0.0 || done {
            return Chain {
                estimates,
                converged: true,
            };
        }
        let z = op.apply_adjoint(&dual_p(&y, p));
        x = dual_p(&z, q);
    }
    Chain {
        estimates,
        converged: false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpEstimate {
    /// Best `‖Kx‖_p / ‖x‖_p` seen: a certified lower bound for `‖K‖_{p→p}`.
    pub lower_bound: f64,
    pub converged: bool,
    pub monotone: bool,
    pub restarts: usize,
}

fn starts<F: Real>(n: usize, restarts: usize, seed: u64) -> Vec<Vec<Complex<F>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..restarts).map(|_| random_vector(n, &mut rng)).collect()
}

pub fn lp_norm_estimate<F: Real, A: Applier<F>>(op: &A, p: f64, restarts: usize, seed: u64) -> LpEstimate {
    assert!(p > 1.0 && p.is_finite(), "p must lie in (1, ∞)");
    let chains: Vec<Chain> = starts::<F>(op.dim(), restarts, seed)
        .iter()
        .map(|s| lp_chain(op, p, s))
        .collect();
    summarize(&chains)
}

fn summarize(chains: &[Chain]) -> LpEstimate {
    let best = chains
        .iter()
        .max_by(|a, b| a.best().total_cmp(&b.best()))
        .expect("at least one restart");
    LpEstimate {
        lower_bound: best.best(),
        converged: best.converged,
        monotone: chains.iter().all(Chain::is_monotone),
        restarts: chains.len(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualityReport {
    pub primal: LpEstimate,
    /// Estimate of `‖K*‖_{p′→p′}`.
    pub dual: LpEstimate,
    pub relative_gap: f64,
}

/// Runs `K` at `p` and `K*` at `p′`, each adjoint chain started from the
/// `ℓ^{p′}` vector norming `K x₀` of the matching primal start. The two
/// chains interleave, so their limits coincide.
pub fn lp_duality_check<F: Real, A: Applier<F>>(op: &A, p: f64, restarts: usize, seed: u64) -> DualityReport {
    let q = p / (p - 1.0);
    let adj = Adjoint(op);
    let mut primal = Vec::new();
    let mut dual = Vec::new();
    for s in starts::<F>(op.dim(), restarts, seed) {
        let n0 = norm_p(&s, p);
        let x0 = scaled(&s, 1.0 / n0);
        let mut y0 = dual_p(&op.apply(&x0), p);
        if norm_p(&y0, q) == 0.0 {
            y0 = s.clone();
        }
        primal.push(lp_chain(op, p, &x0));
        dual.push(lp_chain(&adj, q, &y0));
    }
    let primal = summarize(&primal);
    let dual = summarize(&dual);
    let scale = primal.lower_bound.max(dual.lower_bound);
    let relative_gap = if scale == 0.0 {
        0.0
    } else {
        (primal.lower_bound - dual.lower_bound).abs() / scale
    };
    DualityReport {
        primal,
        dual,
        relative_gap,
    }
}
