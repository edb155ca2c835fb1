//! Puiseux factorisation of a Hessian `H = U · x^m · y^s · Π (y − r_ν(x))`
//! and the cluster hierarchy of its nontrivial roots.

mod cluster;
mod expand;
pub(crate) mod univariate;

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::newton::{polyhedron, GeometryError, LatticePoint};
use crate::poly::rational_to_f64;
use crate::{Complex64, Polynomial, Rational};

pub use cluster::{classify_roots, ClusterError, COEFF_CLUSTER_TOL, CoefficientClass, ExponentLevel, RootClusterTree};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PuiseuxError {
    #[error("the zero polynomial has no Puiseux factorisation")]
    ZeroPolynomial,
    #[error("truncation order must be positive, got {0}")]
    NonPositiveOrder(Rational),
    #[error("truncation order {order} too coarse: {note}")]
    TruncationTooCoarse { order: Rational, note: String },
    #[error("characteristic polynomial of degree {degree}: root solver failed")]
    NumericalRootFailure { degree: usize },
}

/// Truncated fractional power series `Σ c_k x^{e_k}` with `e_k` increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct PuiseuxSeries {
    pub terms: Vec<(Rational, Complex64)>,
    /// Common denominator of the exponents.
    pub polydromy: u64,
    /// Terms of valuation ≥ this are unknown (irrelevant when `exact`).
    pub truncation_order: Rational,
    /// The root is exactly the finite sum of `terms`.
    pub exact: bool,
}

impl PuiseuxSeries {
    pub fn new(terms: Vec<(Rational, Complex64)>, truncation_order: Rational, exact: bool) -> Self {
        let polydromy = terms
            .iter()
            .fold(1u64, |acc, (e, _)| acc.lcm(&e.denom().to_u64().unwrap_or(1)));
        PuiseuxSeries {
            terms,
            polydromy,
            truncation_order,
            exact,
        }
    }

    pub fn leading_exponent(&self) -> &Rational {
        &self.terms[0].0
    }

    pub fn leading_coefficient(&self) -> Complex64 {
        self.terms[0].1
    }

    /// Principal-branch evaluation: `x^{p/q} = exp((p/q) log x)`.
    ///
    /// Products over a full conjugacy class do not depend on the branch.
    pub fn eval(&self, x: Complex64) -> Complex64 {
        if x == Complex64::zero() {
            return Complex64::zero();
        }
        self.terms
            .iter()
            .map(|(e, c)| c * x.powf(rational_to_f64(e)))
            .sum()
    }

    /// Real evaluation; `None` when a term is not real-valued at `x`.
    pub fn eval_real(&self, x: f64) -> Option<f64> {
        let mut acc = 0.0;
        for (e, c) in &self.terms {
            if c.im != 0.0 {
                return None;
            }
            acc += c.re * real_power(x, e)?;
        }
        Some(acc)
    }

    fn derivative_real(&self, x: f64) -> Option<f64> {
        let mut acc = 0.0;
        for (e, c) in &self.terms {
            let e_minus_one = e - Rational::one();
            acc += c.re * rational_to_f64(e) * real_power(x, &e_minus_one)?;
        }
        Some(acc)
    }

    pub fn conj(&self) -> Self {
        PuiseuxSeries {
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c.conj())).collect(),
            ..self.clone()
        }
    }

    pub fn has_real_coefficients(&self) -> bool {
        self.terms.iter().all(|(_, c)| c.im == 0.0)
    }
}

/// `x^{p/q}` over the reals, defined for `x < 0` only when `q` is odd.
fn real_power(x: f64, e: &Rational) -> Option<f64> {
    if x >= 0.0 {
        return Some(x.powf(rational_to_f64(e)));
    }
    let q = e.denom().to_i64()?;
    let p = e.numer().to_i64()?;
    if q % 2 == 0 {
        return None;
    }
    let mag = (-x).powf(rational_to_f64(e));
    Some(if p.rem_euclid(2) == 1 { -mag } else { mag })
}

/// Output of [`puiseux_roots`].
#[derive(Debug, Clone, PartialEq)]
pub struct PuiseuxRoots {
    pub m: u32,
    pub s: u32,
    /// Nontrivial roots with multiplicity, sorted by `(a, Re c, Im c, …)`.
    pub roots: Vec<(PuiseuxSeries, usize)>,
}

impl PuiseuxRoots {
    pub fn total_multiplicity(&self) -> usize {
        self.roots.iter().map(|(_, k)| k).sum()
    }
}

/// Default truncation: largest `A` over the Hessian's vertices, plus two.
pub fn default_order(h: &Polynomial) -> Result<Rational, GeometryError> {
    let hull = polyhedron(h)?;
    let last = hull.vertices().last().expect("nonempty hull");
    Ok(&last.a + Rational::from_integer(2.into()))
}

/// Newton–Puiseux expansion of every root of `H` through the origin.
pub fn puiseux_roots(h: &Polynomial, order: &Rational) -> Result<PuiseuxRoots, PuiseuxError> {
    if h.is_zero() {
        return Err(PuiseuxError::ZeroPolynomial);
    }
    if !order.is_positive() {
        return Err(PuiseuxError::NonPositiveOrder(order.clone()));
    }
    let exp = expand::expand(h, order)?;
    let mut roots: Vec<(PuiseuxSeries, usize)> = exp
        .roots
        .into_iter()
        .map(|r| (PuiseuxSeries::new(r.terms, order.clone(), r.exact), r.multiplicity))
        .collect();
    roots.sort_by(|a, b| compare_series(&a.0, &b.0));
    Ok(PuiseuxRoots {
        m: exp.m,
        s: exp.s,
        roots,
    })
}

pub(crate) fn compare_series(a: &PuiseuxSeries, b: &PuiseuxSeries) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    for (ta, tb) in a.terms.iter().zip(&b.terms) {
        let ord = ta
            .0
            .cmp(&tb.0)
            .then(ta.1.re.partial_cmp(&tb.1.re).unwrap_or(Ordering::Equal))
            .then(ta.1.im.partial_cmp(&tb.1.im).unwrap_or(Ordering::Equal));
        if ord != Ordering::Equal {
            return ord;
        }
    }
    a.terms.len().cmp(&b.terms.len())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CrosscheckError {
    #[error("vertex identities disagree with the hull: predicted {predicted:?}, hull {hull:?}")]
    CrosscheckMismatch {
        predicted: Vec<(String, String)>,
        hull: Vec<(String, String)>,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CrosscheckReport {
    /// `(A_r, B_r)` from `m`, `s`, cluster sizes and leading exponents.
    pub predicted: Vec<LatticePoint>,
    /// Vertices of the Newton polyhedron of `H`.
    pub hull: Vec<LatticePoint>,
}

/// Vertices predicted by the cluster bookkeeping,
/// `A_r = m + Σ_{l≤r} N_l a_l`, `B_r = s + Σ_{l>r} N_l`.
pub fn predicted_vertices(tree: &RootClusterTree) -> Vec<LatticePoint> {
    let n_total: usize = tree.levels.iter().map(|l| l.count).sum();
    let mut a = Rational::from_integer(tree.m.into());
    let mut b = Rational::from_integer((tree.s as usize + n_total).into());
    let mut out = vec![LatticePoint::new(a.clone(), b.clone())];
    for level in &tree.levels {
        let n = Rational::from_integer(level.count.into());
        a += &n * &level.exponent;
        b -= n;
        out.push(LatticePoint::new(a.clone(), b.clone()));
    }
    out
}

/// Exact comparison of the bookkeeping vertices with the hull of `H`.
pub fn vertex_crosscheck(h: &Polynomial, tree: &RootClusterTree) -> Result<CrosscheckReport, CrosscheckError> {
    let hull = polyhedron(h)?.vertices().to_vec();
    let predicted = predicted_vertices(tree);
    if hull != predicted {
        let show = |v: &[LatticePoint]| {
            v.iter()
                .map(|p| (p.a.to_string(), p.b.to_string()))
                .collect::<Vec<_>>()
        };
        return Err(CrosscheckError::CrosscheckMismatch {
            predicted: show(&predicted),
            hull: show(&hull),
        });
    }
    Ok(CrosscheckReport { predicted, hull })
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InverseError {
    #[error("root must have leading exponent 1 and a real nonzero leading coefficient")]
    NotLinear,
    #[error("Newton iteration for r(x) = {target} did not converge")]
    NoConvergence { target: f64 },
}

/// Residual tolerance for [`invert_linear_root`].
pub const INVERSE_TOL: f64 = 1e-12;

/// Solves `r(x*) = c` by damped Newton iteration seeded at `c / C₁`.
pub fn invert_linear_root(r: &PuiseuxSeries, c: f64) -> Result<f64, InverseError> {
    let lead = r.leading_coefficient();
    if *r.leading_exponent() != Rational::one() || lead.im != 0.0 || lead.re == 0.0 || !r.has_real_coefficients() {
        return Err(InverseError::NotLinear);
    }
    let fail = InverseError::NoConvergence { target: c };
    let mut x = c / lead.re;
    let mut f = r.eval_real(x).ok_or(fail.clone())? - c;
    for _ in 0..200 {
        if f.abs() < INVERSE_TOL {
            return Ok(x);
        }
        let df = r.derivative_real(x).ok_or(fail.clone())?;
        if df == 0.0 || !df.is_finite() {
            return Err(fail);
        }
        let step = f / df;
        let mut t = 1.0;
        loop {
            let cand = x - t * step;
            if let Some(v) = r.eval_real(cand) {
                let fc = v - c;
                if fc.abs() < f.abs() || t < 1e-12 {
                    x = cand;
                    f = fc;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-12 {
                return Err(fail);
            }
        }
    }
    if f.abs() < INVERSE_TOL {
        Ok(x)
    } else {
        Err(fail)
    }
}

#[cfg(test)]
mod tests;
