//! Sparse bivariate polynomials over a generic coefficient ring.
//!
//! Symbolic work (hulls, Hessians, Puiseux bookkeeping) runs over exact
//! rationals; numeric kernels promote to `f64` once with [`BivariatePolynomial::to_float`].

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::{Float, One, ToPrimitive, Zero};

use crate::Rational;

/// Exponent pair `x^dx * y^dy`.
///
/// Ordered graded-lexicographically: total degree first, then larger
/// `x`-degree first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Monomial {
    pub dx: u32,
    pub dy: u32,
}

impl Monomial {
    pub const ONE: Monomial = Monomial { dx: 0, dy: 0 };

    pub fn new(dx: u32, dy: u32) -> Self {
        Monomial { dx, dy }
    }

    pub fn degree(&self) -> u32 {
        self.dx + self.dy
    }

    /// True when both exponents are positive.
    pub fn is_mixed(&self) -> bool {
        self.dx > 0 && self.dy > 0
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.dx.cmp(&self.dx))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<(u32, u32)> for Monomial {
    fn from((dx, dy): (u32, u32)) -> Self {
        Monomial { dx, dy }
    }
}

/// Coefficient ring requirements for [`BivariatePolynomial`].
pub trait Coefficient:
    Clone
    + PartialEq
    + fmt::Debug
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    /// Embeds a nonnegative integer (used for derivative factors).
    fn from_u32(n: u32) -> Self;
}

impl Coefficient for Rational {
    fn from_u32(n: u32) -> Self {
        Rational::from_integer(n.into())
    }
}

impl Coefficient for f64 {
    fn from_u32(n: u32) -> Self {
        n as f64
    }
}

impl Coefficient for f32 {
    fn from_u32(n: u32) -> Self {
        n as f32
    }
}

impl<F: Float + fmt::Debug> Coefficient for Complex<F> {
    fn from_u32(n: u32) -> Self {
        Complex::new(F::from(n).unwrap(), F::zero())
    }
}

/// `Σ c_{kl} x^k y^l` with no stored zero coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct BivariatePolynomial<T> {
    terms: BTreeMap<Monomial, T>,
}

impl<T: Coefficient> Default for BivariatePolynomial<T> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<T: Coefficient> BivariatePolynomial<T> {
    pub fn zero() -> Self {
        BivariatePolynomial {
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(c: T) -> Self {
        Self::monomial(Monomial::ONE, c)
    }

    pub fn monomial(m: impl Into<Monomial>, c: T) -> Self {
        let mut p = Self::zero();
        p.add_term(m.into(), c);
        p
    }

    pub fn x() -> Self {
        Self::monomial((1, 0), T::one())
    }

    pub fn y() -> Self {
        Self::monomial((0, 1), T::one())
    }

    /// Builds a polynomial from `(dx, dy, coefficient)` triples, merging like terms.
    pub fn from_terms<I, M>(terms: I) -> Self
    where
        I: IntoIterator<Item = (M, T)>,
        M: Into<Monomial>,
    {
        let mut p = Self::zero();
        for (m, c) in terms {
            p.add_term(m.into(), c);
        }
        p
    }

    /// Adds `c * m`, dropping the entry if it cancels to zero.
    pub fn add_term(&mut self, m: Monomial, c: T) {
        if c.is_zero() {
            return;
        }
        let sum = match self.terms.remove(&m) {
            Some(old) => old + c,
            None => c,
        };
        if !sum.is_zero() {
            self.terms.insert(m, sum);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: impl Into<Monomial>) -> Option<&T> {
        self.terms.get(&m.into())
    }

    /// Terms in canonical (graded-lex) order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &T)> {
        self.terms.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = Monomial> + '_ {
        self.terms.keys().copied()
    }

    pub fn degree_x(&self) -> u32 {
        self.terms.keys().map(|m| m.dx).max().unwrap_or(0)
    }

    pub fn degree_y(&self) -> u32 {
        self.terms.keys().map(|m| m.dy).max().unwrap_or(0)
    }

    pub fn scale(&self, c: &T) -> Self {
        Self::from_terms(self.terms.iter().map(|(m, v)| (*m, v.clone() * c.clone())))
    }

    pub fn pow(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::constant(T::one());
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn derivative_x(&self) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .filter(|(m, _)| m.dx > 0)
                .map(|(m, c)| (Monomial::new(m.dx - 1, m.dy), c.clone() * T::from_u32(m.dx))),
        )
    }

    pub fn derivative_y(&self) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .filter(|(m, _)| m.dy > 0)
                .map(|(m, c)| (Monomial::new(m.dx, m.dy - 1), c.clone() * T::from_u32(m.dy))),
        )
    }

    /// The mixed second derivative `∂x∂y P`.
    pub fn mixed_hessian(&self) -> Self {
        self.derivative_x().derivative_y()
    }

    /// True iff `P = P1(x) + P2(y)`, i.e. no monomial with both exponents positive.
    pub fn is_split(&self) -> bool {
        !self.terms.keys().any(Monomial::is_mixed)
    }

    /// Swaps the roles of `x` and `y`.
    pub fn transpose(&self) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .map(|(m, c)| (Monomial::new(m.dy, m.dx), c.clone())),
        )
    }

    /// Only the monomials with both exponents positive.
    pub fn mixed_part(&self) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .filter(|(m, _)| m.is_mixed())
                .map(|(m, c)| (*m, c.clone())),
        )
    }

    pub fn map_coefficients<U: Coefficient>(&self, f: impl Fn(&T) -> U) -> BivariatePolynomial<U> {
        BivariatePolynomial::from_terms(self.terms.iter().map(|(m, c)| (*m, f(c))))
    }

    /// Coefficients of `y^0, y^1, …` as univariate polynomials in `x`,
    /// each given as dense `x`-degree → coefficient maps.
    pub fn rows_in_y(&self) -> Vec<BTreeMap<u32, T>> {
        let mut rows = vec![BTreeMap::new(); self.degree_y() as usize + 1];
        if self.is_zero() {
            return Vec::new();
        }
        for (m, c) in &self.terms {
            rows[m.dy as usize].insert(m.dx, c.clone());
        }
        rows
    }

    /// Horner evaluation in any ring the coefficients embed into.
    pub fn eval_with<S>(&self, x: S, y: S, embed: impl Fn(&T) -> S) -> S
    where
        S: Clone + Zero + Add<Output = S> + Mul<Output = S>,
    {
        let mut by_x: BTreeMap<u32, Vec<(u32, S)>> = BTreeMap::new();
        for (m, c) in &self.terms {
            by_x.entry(m.dx).or_default().push((m.dy, embed(c)));
        }
        let rows: Vec<(u32, S)> = by_x
            .into_iter()
            .rev()
            .map(|(dx, mut row)| {
                row.sort_by(|a, b| b.0.cmp(&a.0));
                (dx, horner(&row, &y))
            })
            .collect();
        horner(&rows, &x)
    }

    pub fn eval(&self, x: &T, y: &T) -> T {
        self.eval_with(x.clone(), y.clone(), |c| c.clone())
    }
}

impl BivariatePolynomial<Rational> {
    /// Promotes every coefficient to a float.
    pub fn to_float<F: Float + fmt::Debug>(&self) -> BivariatePolynomial<F>
    where
        F: Coefficient,
    {
        self.map_coefficients(|c| F::from(rational_to_f64(c)).unwrap())
    }
}

/// `coeffs` sorted by strictly descending degree.
fn horner<S>(coeffs: &[(u32, S)], t: &S) -> S
where
    S: Clone + Zero + Add<Output = S> + Mul<Output = S>,
{
    let mut acc = S::zero();
    let mut cur = coeffs.first().map_or(0, |c| c.0);
    for (d, c) in coeffs {
        while cur > *d {
            acc = acc * t.clone();
            cur -= 1;
        }
        acc = acc + c.clone();
    }
    for _ in 0..cur {
        acc = acc * t.clone();
    }
    acc
}

pub(crate) fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

impl<F: Float + fmt::Debug + Coefficient> BivariatePolynomial<F> {
    pub fn eval_real(&self, x: F, y: F) -> F {
        self.eval_with(x, y, |c| *c)
    }

    pub fn eval_complex(&self, x: Complex<F>, y: Complex<F>) -> Complex<F> {
        self.eval_with(x, y, |c| Complex::new(*c, F::zero()))
    }
}

impl<T: Coefficient> Add for &BivariatePolynomial<T> {
    type Output = BivariatePolynomial<T>;
    fn add(self, rhs: Self) -> Self::Output {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(*m, c.clone());
        }
        out
    }
}

impl<T: Coefficient> Sub for &BivariatePolynomial<T> {
    type Output = BivariatePolynomial<T>;
    fn sub(self, rhs: Self) -> Self::Output {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(*m, -c.clone());
        }
        out
    }
}

impl<T: Coefficient> Mul for &BivariatePolynomial<T> {
    type Output = BivariatePolynomial<T>;
    fn mul(self, rhs: Self) -> Self::Output {
        let mut out = BivariatePolynomial::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(
                    Monomial::new(ma.dx + mb.dx, ma.dy + mb.dy),
                    ca.clone() * cb.clone(),
                );
            }
        }
        out
    }
}

impl<T: Coefficient> Neg for &BivariatePolynomial<T> {
    type Output = BivariatePolynomial<T>;
    fn neg(self) -> Self::Output {
        self.map_coefficients(|c| -c.clone())
    }
}

macro_rules! forward_owned_binop {
    ($tr:ident, $method:ident) => {
        impl<T: Coefficient> $tr for BivariatePolynomial<T> {
            type Output = BivariatePolynomial<T>;
            fn $method(self, rhs: Self) -> Self::Output {
                (&self).$method(&rhs)
            }
        }
    };
}

forward_owned_binop!(Add, add);
forward_owned_binop!(Sub, sub);
forward_owned_binop!(Mul, mul);
