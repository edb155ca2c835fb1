//! Univariate helpers for characteristic polynomials of Newton-polygon edges.
//!
//! Coefficient vectors are stored lowest degree first.

use nalgebra::{DMatrix, Schur};
use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::poly::rational_to_f64;
use crate::{Complex64, Rational};

fn trim<T: Zero>(p: &mut Vec<T>) {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
}

pub(crate) fn degree<T>(p: &[T]) -> usize {
    p.len().saturating_sub(1)
}

pub(crate) fn derivative_q(p: &[Rational]) -> Vec<Rational> {
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * Rational::from_integer(BigInt::from(i)))
        .collect()
}

fn monic_q(p: &[Rational]) -> Vec<Rational> {
    let lead = p.last().cloned().unwrap_or_else(Rational::one);
    p.iter().map(|c| c / &lead).collect()
}

/// `(quotient, remainder)` of exact division.
pub(crate) fn divrem_q(num: &[Rational], den: &[Rational]) -> (Vec<Rational>, Vec<Rational>) {
    let mut rem: Vec<Rational> = num.to_vec();
    trim(&mut rem);
    let dd = degree(den);
    let lead = den.last().expect("nonzero divisor").clone();
    if rem.len() < den.len() {
        return (vec![], rem);
    }
    let mut quot = vec![Rational::zero(); rem.len() - den.len() + 1];
    while rem.len() >= den.len() && !rem.is_empty() {
        let shift = rem.len() - 1 - dd;
        let factor = rem.last().unwrap() / &lead;
        for (i, d) in den.iter().enumerate() {
            rem[shift + i] = &rem[shift + i] - &factor * d;
        }
        quot[shift] = factor;
        rem.pop();
        trim(&mut rem);
    }
    trim(&mut quot);
    (quot, rem)
}

fn gcd_q(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    trim(&mut a);
    trim(&mut b);
    while !b.is_empty() {
        let (_, r) = divrem_q(&a, &b);
        a = b;
        b = r;
    }
    monic_q(&a)
}

/// Yun's square-free decomposition: `p = lc · Π f_k^k` with each `f_k` monic
/// and square-free. Returns the nonconstant `(f_k, k)`.
pub(crate) fn squarefree_q(p: &[Rational]) -> Vec<(Vec<Rational>, usize)> {
    let mut out = Vec::new();
    let p = monic_q(p);
    if degree(&p) == 0 {
        return out;
    }
    let dp = derivative_q(&p);
    let mut a = gcd_q(&p, &dp);
    let mut b = divrem_q(&p, &a).0;
    let mut c = divrem_q(&dp, &a).0;
    let mut k = 1;
    loop {
        let db = derivative_q(&b);
        let mut d: Vec<Rational> = c
            .iter()
            .cloned()
            .chain(std::iter::repeat(Rational::zero()))
            .zip(db.iter().cloned().chain(std::iter::repeat(Rational::zero())))
            .take(c.len().max(db.len()))
            .map(|(x, y)| x - y)
            .collect();
        trim(&mut d);
        a = gcd_q(&b, &d);
        if degree(&a) > 0 {
            out.push((a.clone(), k));
        }
        b = divrem_q(&b, &a).0;
        if degree(&b) == 0 {
            break;
        }
        c = divrem_q(&d, &a).0;
        k += 1;
    }
    out
}

pub(crate) fn eval_q(p: &[Rational], x: &Rational) -> Rational {
    p.iter().rev().fold(Rational::zero(), |acc, c| acc * x + c)
}

pub(crate) fn eval_c(p: &[Complex64], x: Complex64) -> Complex64 {
    p.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * x + c)
}

pub(crate) fn derivative_c(p: &[Complex64]) -> Vec<Complex64> {
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * i as f64)
        .collect()
}

/// Σ |c_i| |x|^i, the natural scale for judging `|p(x)|`.
pub(crate) fn abs_scale(p: &[Complex64], x: Complex64) -> f64 {
    let r = x.norm();
    p.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
}

pub(crate) fn to_complex_q(p: &[Rational]) -> Vec<Complex64> {
    p.iter()
        .map(|c| Complex64::new(rational_to_f64(c), 0.0))
        .collect()
}

/// Eigenvalues of the companion matrix of `p` (degree ≥ 1).
pub(crate) fn companion_roots(p: &[Complex64]) -> Option<Vec<Complex64>> {
    let n = degree(p);
    let lead = p[n];
    if n == 1 {
        return Some(vec![-p[0] / lead]);
    }
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..n {
        m[(i, n - 1)] = -p[i] / lead;
    }
    let schur = Schur::try_new(m, 1e-15, 10_000)?;
    let (_, t) = schur.unpack();
    let roots: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();
    roots.iter().all(|r| r.re.is_finite() && r.im.is_finite()).then_some(roots)
}

/// One Newton step on `p`; skipped when the derivative is too small to trust.
pub(crate) fn newton_polish(p: &[Complex64], x: Complex64) -> Complex64 {
    let dp = derivative_c(p);
    let f = eval_c(p, x);
    let df = eval_c(&dp, x);
    if df.norm() <= 1e-300 || !df.norm().is_finite() {
        return x;
    }
    let step = f / df;
    let candidate = x - step;
    if eval_c(p, candidate).norm() <= f.norm() {
        candidate
    } else {
        x
    }
}

/// Continued-fraction reconstruction of a float as `p/q` with `q ≤ max_den`.
pub(crate) fn rational_approximation(x: f64, max_den: i64) -> Option<Rational> {
    if !x.is_finite() || x.abs() > 1e12 {
        return None;
    }
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut v = x;
    for _ in 0..64 {
        let a = v.floor();
        let ai = a as i128;
        let h2 = ai * h1 + h0;
        let k2 = ai * k1 + k0;
        if k2 > max_den as i128 {
            break;
        }
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        let frac = v - a;
        if frac.abs() < 1e-15 {
            break;
        }
        v = 1.0 / frac;
    }
    if k1 == 0 {
        return None;
    }
    Some(Rational::new(BigInt::from(h1), BigInt::from(k1)))
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;

    fn q(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&c| rat(c, 1)).collect()
    }

    #[test]
    fn yun_detects_multiplicities() {
        // -(c-1)^3 (c-2)
        let p = q(&[-2, 7, -9, 5, -1]);
        let p: Vec<Rational> = p.iter().map(|c| -c).collect();
        let f = squarefree_q(&p);
        assert_eq!(f.len(), 2);
        assert_eq!(f[0], (q(&[-2, 1]), 1));
        assert_eq!(f[1], (q(&[-1, 1]), 3));
    }

    #[test]
    fn yun_on_square_free() {
        let f = squarefree_q(&q(&[1, 0, 1]));
        assert_eq!(f, vec![(q(&[1, 0, 1]), 1)]);
    }

    #[test]
    fn companion_finds_unit_roots() {
        let p = to_complex_q(&q(&[1, 0, 1]));
        let mut r = companion_roots(&p).unwrap();
        r.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        assert!((r[0] - Complex64::new(0.0, -1.0)).norm() < 1e-12);
        assert!((r[1] - Complex64::new(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn continued_fraction() {
        assert_eq!(rational_approximation(0.75, 1000), Some(rat(3, 4)));
        assert_eq!(rational_approximation(-2.0 / 3.0, 1000), Some(rat(-2, 3)));
        assert_eq!(rational_approximation(5.0, 10), Some(rat(5, 1)));
    }
}
