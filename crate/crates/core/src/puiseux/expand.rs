//! Newton–Puiseux recursion for the roots `y = r(x) → 0` of `H(x, y)`.
//!
//! A node is a polynomial in `y` whose coefficients are finite sums
//! `Σ c_e x^e` with rational `e ≥ 0`. Each lower edge of the node's Newton
//! polygon with slope `−a` contributes roots `y = x^a (c + y₁)` where `c`
//! solves the edge's characteristic polynomial; the substitution produces the
//! child node in `y₁`. Exponents stay exact; coefficients are exact rationals
//! for as long as every `c` on the path is rational, and complex doubles after.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::univariate::{
    abs_scale, companion_roots, derivative_c, eval_c, eval_q, newton_polish,
    rational_approximation, squarefree_q, to_complex_q,
};
use super::PuiseuxError;
use crate::poly::rational_to_f64;
use crate::{Complex64, Polynomial, Rational};

/// Coefficients below this fraction of the magnitude they were summed from
/// are treated as cancelled.
const CANCELLATION_TOL: f64 = 1e-9;
/// Eigenvalues closer than this (relative) are taken as one multiple root.
const MULTIPLE_ROOT_TOL: f64 = 1e-4;
/// Imaginary parts below this (relative) are snapped to zero on real nodes.
const REAL_SNAP_TOL: f64 = 1e-10;

pub(crate) trait Field:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn to_c(&self) -> Complex64;
    fn abs(&self) -> f64;
    fn from_usize(n: usize) -> Self;
    fn negligible(value: &Self, scale: f64) -> bool;
    fn is_real(&self) -> bool;
    /// Drops a round-off imaginary part.
    fn snap_real(self) -> Self;
    fn char_roots(coeffs: &[Self]) -> Result<Vec<CharRoot<Self>>, PuiseuxError>;
}

pub(crate) enum CharRoot<F> {
    /// Root representable in the node's own field.
    Same(F, usize),
    /// Root that forces a switch to complex arithmetic.
    Numeric(Complex64, usize),
}

impl Field for Rational {
    fn to_c(&self) -> Complex64 {
        Complex64::new(rational_to_f64(self), 0.0)
    }
    fn abs(&self) -> f64 {
        rational_to_f64(self).abs()
    }
    fn from_usize(n: usize) -> Self {
        Rational::from_integer(BigInt::from(n))
    }
    fn negligible(value: &Self, _scale: f64) -> bool {
        value.is_zero()
    }
    fn is_real(&self) -> bool {
        true
    }
    fn snap_real(self) -> Self {
        self
    }
    fn char_roots(coeffs: &[Self]) -> Result<Vec<CharRoot<Self>>, PuiseuxError> {
        let mut out = Vec::new();
        for (factor, mult) in squarefree_q(coeffs) {
            if factor.len() == 2 {
                out.push(CharRoot::Same(-&factor[0] / &factor[1], mult));
                continue;
            }
            let fc = to_complex_q(&factor);
            for root in numeric_simple_roots(&fc)? {
                let exact = (root.im.abs() <= REAL_SNAP_TOL * root.norm().max(1.0))
                    .then(|| rational_approximation(root.re, 1_000_000))
                    .flatten()
                    .filter(|q| eval_q(&factor, q).is_zero());
                match exact {
                    Some(q) => out.push(CharRoot::Same(q, mult)),
                    None => out.push(CharRoot::Numeric(root, mult)),
                }
            }
        }
        Ok(out)
    }
}

impl Field for Complex64 {
    fn to_c(&self) -> Complex64 {
        *self
    }
    fn abs(&self) -> f64 {
        self.norm()
    }
    fn from_usize(n: usize) -> Self {
        Complex64::new(n as f64, 0.0)
    }
    fn negligible(value: &Self, scale: f64) -> bool {
        value.norm() <= CANCELLATION_TOL * scale
    }
    fn is_real(&self) -> bool {
        self.im == 0.0
    }
    fn snap_real(self) -> Self {
        if self.im.abs() <= REAL_SNAP_TOL * self.norm() {
            Complex64::new(self.re, 0.0)
        } else {
            self
        }
    }
    fn char_roots(coeffs: &[Self]) -> Result<Vec<CharRoot<Self>>, PuiseuxError> {
        Ok(numeric_roots_with_multiplicity(coeffs)?
            .into_iter()
            .map(|(c, k)| CharRoot::Same(c, k))
            .collect())
    }
}

/// Roots of a square-free polynomial, each polished once.
fn numeric_simple_roots(p: &[Complex64]) -> Result<Vec<Complex64>, PuiseuxError> {
    let roots = companion_roots(p).ok_or(PuiseuxError::NumericalRootFailure {
        degree: p.len() - 1,
    })?;
    Ok(roots.into_iter().map(|r| newton_polish(p, r)).collect())
}

/// Clusters companion eigenvalues into multiple roots; each cluster's centre
/// is polished on the derivative whose simple root it is.
fn numeric_roots_with_multiplicity(p: &[Complex64]) -> Result<Vec<(Complex64, usize)>, PuiseuxError> {
    let degree = p.len() - 1;
    let raw = companion_roots(p).ok_or(PuiseuxError::NumericalRootFailure { degree })?;
    let mut clusters: Vec<Vec<Complex64>> = Vec::new();
    for r in raw {
        match clusters.iter_mut().find(|c| {
            let centre = mean(c);
            (centre - r).norm() <= MULTIPLE_ROOT_TOL * centre.norm().max(r.norm()).max(1.0)
        }) {
            Some(c) => c.push(r),
            None => clusters.push(vec![r]),
        }
    }
    let mut out = Vec::new();
    for c in clusters {
        let k = c.len();
        let mut deriv = p.to_vec();
        for _ in 1..k {
            deriv = derivative_c(&deriv);
        }
        let mut centre = mean(&c);
        centre = newton_polish(&deriv, newton_polish(&deriv, centre));
        // every lower derivative must vanish at a genuine k-fold root
        let mut lower = p.to_vec();
        for _ in 0..k.saturating_sub(1) {
            let v = eval_c(&lower, centre).norm();
            if v > 1e-6 * abs_scale(&lower, centre).max(1e-300) {
                return Err(PuiseuxError::NumericalRootFailure { degree });
            }
            lower = derivative_c(&lower);
        }
        out.push((centre, k));
    }
    Ok(out)
}

fn mean(c: &[Complex64]) -> Complex64 {
    c.iter().sum::<Complex64>() / c.len() as f64
}

/// Polynomial in `y` with fractional-power-series coefficients in `x`.
#[derive(Debug, Clone)]
pub(crate) struct Node<F> {
    /// `rows[j]` is the coefficient of `y^j`, keyed by `x`-exponent.
    rows: Vec<BTreeMap<Rational, F>>,
}

impl<F: Field> Node<F> {
    fn trim(&mut self) {
        while self.rows.last().is_some_and(|r| r.is_empty()) {
            self.rows.pop();
        }
    }

    fn valuation(&self, j: usize) -> Option<&Rational> {
        self.rows.get(j).and_then(|r| r.keys().next())
    }

    /// Removes and returns the largest power of `y` dividing the node.
    fn strip_y(&mut self) -> usize {
        let s = self.rows.iter().take_while(|r| r.is_empty()).count();
        if s < self.rows.len() {
            self.rows.drain(..s);
        }
        s
    }

    /// Removes and returns the largest power of `x` dividing the node.
    fn strip_x(&mut self) -> Rational {
        let m = self
            .rows
            .iter()
            .filter_map(|r| r.keys().next())
            .min()
            .cloned()
            .unwrap_or_else(Rational::zero);
        if !m.is_zero() {
            for row in &mut self.rows {
                *row = std::mem::take(row)
                    .into_iter()
                    .map(|(e, c)| (e - &m, c))
                    .collect();
            }
        }
        m
    }

    /// Number of roots tending to zero: the first `j` with `val(row_j) = 0`.
    fn weierstrass_degree(&self) -> usize {
        (0..self.rows.len())
            .find(|&j| self.valuation(j).is_some_and(|v| v.is_zero()))
            .unwrap_or(0)
    }

    fn is_real(&self) -> bool {
        self.rows.iter().all(|r| r.values().all(Field::is_real))
    }

    /// Lower edges of the Newton polygon between `(0, v_0)` and `(n, 0)`.
    fn lower_edges(&self, n: usize) -> Vec<(usize, usize, Rational)> {
        let pts: Vec<(usize, Rational)> = (0..=n)
            .filter_map(|j| self.valuation(j).map(|v| (j, v.clone())))
            .collect();
        let mut hull: Vec<(usize, Rational)> = Vec::new();
        for p in pts {
            while hull.len() >= 2 {
                let (j0, v0) = &hull[hull.len() - 2];
                let (j1, v1) = &hull[hull.len() - 1];
                let lhs = (v1 - v0) * Rational::from_usize(p.0 - j0);
                let rhs = (&p.1 - v0) * Rational::from_usize(j1 - j0);
                if lhs >= rhs {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        hull.windows(2)
            .map(|w| {
                let slope = (&w[0].1 - &w[1].1) / Rational::from_usize(w[1].0 - w[0].0);
                (w[0].0, w[1].0, slope)
            })
            .collect()
    }

    /// Characteristic polynomial `Σ coeff(j, v_start − a(j − j0)) c^{j − j0}`.
    fn edge_polynomial(&self, j0: usize, j1: usize, a: &Rational) -> Vec<F> {
        let v0 = self.valuation(j0).expect("edge start").clone();
        (j0..=j1)
            .map(|j| {
                let e = &v0 - a * Rational::from_usize(j - j0);
                self.rows[j].get(&e).cloned().unwrap_or_else(F::zero)
            })
            .collect()
    }

    /// `G(x, x^a (c + y₁)) / x^{intercept}`.
    fn substitute(&self, a: &Rational, c: &F, intercept: &Rational) -> Node<F> {
        let deg = self.rows.len();
        let mut values: Vec<BTreeMap<Rational, F>> = vec![BTreeMap::new(); deg];
        let mut scales: Vec<BTreeMap<Rational, f64>> = vec![BTreeMap::new(); deg];
        // c^k and binomial coefficients
        let mut cpow = vec![F::one()];
        for k in 1..deg {
            let next = cpow[k - 1].clone() * c.clone();
            cpow.push(next);
        }
        let binom = binomials(deg);
        for (j, row) in self.rows.iter().enumerate() {
            let shift = a * Rational::from_usize(j) - intercept;
            for (e, coef) in row {
                let e_new = e + &shift;
                for i in 0..=j {
                    let factor = F::from_usize(binom[j][i]) * cpow[j - i].clone();
                    let term = factor * coef.clone();
                    let mag = term.abs();
                    let slot = values[i].entry(e_new.clone()).or_insert_with(F::zero);
                    *slot = slot.clone() + term;
                    *scales[i].entry(e_new.clone()).or_insert(0.0) += mag;
                }
            }
        }
        let rows = values
            .into_iter()
            .zip(scales)
            .map(|(row, scale)| {
                row.into_iter()
                    .filter(|(e, v)| !v.is_zero() && !F::negligible(v, scale[e]))
                    .collect()
            })
            .collect();
        let mut node = Node { rows };
        node.trim();
        node
    }

    fn to_complex(&self) -> Node<Complex64> {
        Node {
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|(e, c)| (e.clone(), c.to_c())).collect())
                .collect(),
        }
    }
}

fn binomials(n: usize) -> Vec<Vec<usize>> {
    let mut t = vec![vec![1usize]];
    for j in 1..n {
        let prev = &t[j - 1];
        let mut row = vec![1usize; j + 1];
        for i in 1..j {
            row[i] = prev[i - 1] + prev[i];
        }
        t.push(row);
    }
    t
}

impl Node<Rational> {
    pub(crate) fn from_polynomial(h: &Polynomial) -> Self {
        let rows = h
            .rows_in_y()
            .into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|(dx, c)| (Rational::from_integer(dx.into()), c))
                    .collect()
            })
            .collect();
        let mut node = Node { rows };
        node.trim();
        node
    }
}

/// A root produced by the recursion before it is packaged as a series.
#[derive(Debug, Clone)]
pub(crate) struct RawRoot {
    pub terms: Vec<(Rational, Complex64)>,
    pub exact: bool,
    pub multiplicity: usize,
}

pub(crate) struct Expansion {
    pub m: u32,
    pub s: u32,
    pub roots: Vec<RawRoot>,
}

/// Splits `H = x^m y^s G` and expands every root of `G` tending to zero.
pub(crate) fn expand(h: &Polynomial, order: &Rational) -> Result<Expansion, PuiseuxError> {
    let mut node = Node::from_polynomial(h);
    let s = node.strip_y();
    let m = node.strip_x();
    let roots = branch(node, Vec::new(), Rational::zero(), order, 0, true)?;
    Ok(Expansion {
        m: m.to_integer().try_into().expect("x-power fits in u32"),
        s: s as u32,
        roots,
    })
}

const MAX_DEPTH: usize = 256;

fn branch<F: Field>(
    mut node: Node<F>,
    prefix: Vec<(Rational, Complex64)>,
    base: Rational,
    order: &Rational,
    depth: usize,
    check: bool,
) -> Result<Vec<RawRoot>, PuiseuxError> {
    let top = prefix.is_empty();
    let mut out = Vec::new();
    let s = if top { 0 } else { node.strip_y() };
    if s > 0 {
        out.push(RawRoot {
            terms: prefix.clone(),
            exact: true,
            multiplicity: s,
        });
    }
    let n = node.weierstrass_degree();
    if n == 0 {
        return Ok(out);
    }
    if depth > MAX_DEPTH {
        return Err(PuiseuxError::TruncationTooCoarse {
            order: order.clone(),
            note: "recursion depth exceeded".into(),
        });
    }

    let edges = node.lower_edges(n);
    let mut truncated = 0usize;
    for (j0, j1, a) in &edges {
        let exponent = &base + a;
        if !top && &exponent >= order {
            truncated += j1 - j0;
            continue;
        }
        let v0 = node.valuation(*j0).expect("edge start").clone();
        let intercept = &v0 + a * Rational::from_usize(*j0);
        let char_poly = node.edge_polynomial(*j0, *j1, a);
        let real_node = node.is_real();
        let roots = F::char_roots(&char_poly)?;
        let total: usize = roots
            .iter()
            .map(|r| match r {
                CharRoot::Same(_, k) | CharRoot::Numeric(_, k) => *k,
            })
            .sum();
        if total != j1 - j0 {
            return Err(PuiseuxError::NumericalRootFailure { degree: j1 - j0 });
        }
        for root in roots {
            match root {
                CharRoot::Same(c, _) => {
                    let c = if real_node { c.snap_real() } else { c };
                    let cc = c.to_c();
                    if real_node && cc.im < 0.0 {
                        continue;
                    }
                    let child = node.substitute(a, &c, &intercept);
                    let mut p = prefix.clone();
                    p.push((exponent.clone(), cc));
                    let sub = branch(child, p, exponent.clone(), order, depth + 1, check)?;
                    push_with_conjugates(&mut out, sub, real_node && cc.im > 0.0, prefix.len());
                }
                CharRoot::Numeric(c, _) => {
                    let c = if real_node { c.snap_real() } else { c };
                    if real_node && c.im < 0.0 {
                        continue;
                    }
                    let child = node.to_complex().substitute(a, &c, &intercept);
                    let mut p = prefix.clone();
                    p.push((exponent.clone(), c));
                    let sub = branch(child, p, exponent.clone(), order, depth + 1, check)?;
                    push_with_conjugates(&mut out, sub, real_node && c.im > 0.0, prefix.len());
                }
            }
        }
    }
    if truncated > 0 {
        if check && s > 0 {
            return Err(PuiseuxError::TruncationTooCoarse {
                order: order.clone(),
                note: format!("an exact root and {truncated} other root(s) agree below the requested order"),
            });
        }
        if check && truncated > 1 {
            check_unsplit(&node, &prefix, &base, order, truncated, depth)?;
        }
        out.push(RawRoot {
            terms: prefix,
            exact: false,
            multiplicity: truncated,
        });
    }
    Ok(out)
}

/// Roots with next exponent ≥ `order` are reported as one truncated series.
/// That is only sound if they still coincide well beyond the requested order;
/// the probe itself does not recurse into further checks.
fn check_unsplit<F: Field>(
    node: &Node<F>,
    prefix: &[(Rational, Complex64)],
    base: &Rational,
    order: &Rational,
    count: usize,
    depth: usize,
) -> Result<(), PuiseuxError> {
    let two = Rational::from_integer(2.into());
    let extended = order * &two + &two;
    let probe = branch(node.clone(), prefix.to_vec(), base.clone(), &extended, depth + 1, false)?;
    let beyond: Vec<&RawRoot> = probe
        .iter()
        .filter(|r| r.terms.get(prefix.len()).map_or(true, |t| &t.0 >= order))
        .collect();
    let mut distinct: Vec<&[(Rational, Complex64)]> = Vec::new();
    for r in &beyond {
        if !distinct.iter().any(|d| same_terms(d, &r.terms)) {
            distinct.push(&r.terms);
        }
    }
    if distinct.len() > 1 {
        let split_at = beyond
            .iter()
            .filter_map(|r| r.terms.get(prefix.len()).map(|t| t.0.clone()))
            .min()
            .unwrap_or(extended);
        return Err(PuiseuxError::TruncationTooCoarse {
            order: order.clone(),
            note: format!(
                "{count} roots agree below the requested order and only separate from x^{split_at} on"
            ),
        });
    }
    Ok(())
}

fn same_terms(a: &[(Rational, Complex64)], b: &[(Rational, Complex64)]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(p, q)| {
            p.0 == q.0 && (p.1 - q.1).norm() <= 1e-9 * p.1.norm().max(q.1.norm()).max(1e-300)
        })
}

fn push_with_conjugates(out: &mut Vec<RawRoot>, sub: Vec<RawRoot>, conjugate: bool, from: usize) {
    for r in sub {
        if conjugate {
            let mut c = r.clone();
            for t in c.terms.iter_mut().skip(from) {
                t.1 = t.1.conj();
            }
            out.push(r);
            out.push(c);
        } else {
            out.push(r);
        }
    }
}
