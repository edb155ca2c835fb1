//! Newton polyhedra and the exponent formulas attached to their vertices.

use num_traits::{One, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::poly::{BivariatePolynomial, Coefficient};
use crate::{Polynomial, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("the zero polynomial has no Newton polyhedron")]
    ZeroPolynomial,
    #[error("phase is split (S = P(x) + Q(y)); its mixed Hessian vanishes and T_λ has no power decay")]
    DegeneratePhase,
    #[error("({k}, {l}) is not a mixed support point of the phase")]
    NotInSupport { k: u32, l: u32 },
}

/// A point `(A, B)` of the exponent plane.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LatticePoint {
    pub a: Rational,
    pub b: Rational,
}

impl LatticePoint {
    pub fn new(a: Rational, b: Rational) -> Self {
        LatticePoint { a, b }
    }

    pub fn from_ints(a: i64, b: i64) -> Self {
        LatticePoint::new(Rational::from_integer(a.into()), Rational::from_integer(b.into()))
    }
}

impl Serialize for LatticePoint {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("LatticePoint", 2)?;
        st.serialize_field("A", &self.a.to_string())?;
        st.serialize_field("B", &self.b.to_string())?;
        st.end()
    }
}

/// Boundary of `conv(∪ {(u, v) : u ≥ k, v ≥ l})` over the support.
///
/// Vertices are ordered with `A` strictly increasing and `B` strictly
/// decreasing; `edges()` yields consecutive pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewtonPolyhedron {
    vertices: Vec<LatticePoint>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub from: LatticePoint,
    pub to: LatticePoint,
    /// `ΔB / ΔA`, strictly negative.
    pub slope: Rational,
}

impl NewtonPolyhedron {
    /// Staircase-then-lower-hull sweep over an arbitrary finite point set.
    pub fn from_points(points: impl IntoIterator<Item = LatticePoint>) -> Result<Self, GeometryError> {
        let mut pts: Vec<LatticePoint> = points.into_iter().collect();
        if pts.is_empty() {
            return Err(GeometryError::ZeroPolynomial);
        }
        pts.sort();
        // keep the minimal B for each A, then the strictly decreasing envelope
        let mut stair: Vec<LatticePoint> = Vec::new();
        for p in pts {
            match stair.last() {
                Some(last) if p.b >= last.b => {}
                _ => stair.push(p),
            }
        }
        // lower convex hull of the staircase; collinear points are dropped
        let mut hull: Vec<LatticePoint> = Vec::new();
        for p in stair {
            while hull.len() >= 2 {
                let o = &hull[hull.len() - 2];
                let a = &hull[hull.len() - 1];
                let cross = (&a.a - &o.a) * (&p.b - &o.b) - (&a.b - &o.b) * (&p.a - &o.a);
                if cross <= Rational::zero() {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        Ok(NewtonPolyhedron { vertices: hull })
    }

    pub fn vertices(&self) -> &[LatticePoint] {
        &self.vertices
    }

    pub fn edges(&self) -> Vec<Edge> {
        self.vertices
            .windows(2)
            .map(|w| Edge {
                from: w[0].clone(),
                to: w[1].clone(),
                slope: (&w[1].b - &w[0].b) / (&w[1].a - &w[0].a),
            })
            .collect()
    }

    /// The `t` where the diagonal `(t, t)` enters the polyhedron.
    pub fn newton_distance(&self) -> Rational {
        let first = &self.vertices[0];
        if first.a >= first.b {
            return first.a.clone();
        }
        let last = &self.vertices[self.vertices.len() - 1];
        if last.b >= last.a {
            return last.b.clone();
        }
        let e = self
            .edges()
            .into_iter()
            .find(|e| e.from.a < e.from.b && e.to.a >= e.to.b)
            .expect("the diagonal crosses some edge");
        let (du, dv) = (&e.to.a - &e.from.a, &e.to.b - &e.from.b);
        let t = (&e.from.b - &e.from.a) / (&du - &dv);
        &e.from.a + t * du
    }

    /// Membership in the (closed) polyhedron.
    pub fn contains(&self, p: &LatticePoint) -> bool {
        let first = &self.vertices[0];
        let last = &self.vertices[self.vertices.len() - 1];
        if p.a < first.a || p.b < last.b {
            return false;
        }
        self.supporting_values(p).into_iter().all(|v| v >= Rational::zero())
    }

    /// Membership in the topological boundary.
    pub fn on_boundary(&self, p: &LatticePoint) -> bool {
        if !self.contains(p) {
            return false;
        }
        let first = &self.vertices[0];
        let last = &self.vertices[self.vertices.len() - 1];
        if p.a == first.a || p.b == last.b {
            return true;
        }
        self.supporting_values(p).into_iter().any(|v| v.is_zero())
    }

    /// Signed offsets of `p` from each edge line (≥ 0 on the polyhedron side).
    fn supporting_values(&self, p: &LatticePoint) -> Vec<Rational> {
        self.edges()
            .iter()
            .map(|e| {
                // normal (ΔB_abs, ΔA) points into the polyhedron
                let da = &e.to.a - &e.from.a;
                let db = &e.from.b - &e.to.b;
                &db * (&p.a - &e.from.a) + &da * (&p.b - &e.from.b)
            })
            .collect()
    }
}

/// Newton polyhedron of the support of `p`.
pub fn polyhedron<T: Coefficient>(p: &BivariatePolynomial<T>) -> Result<NewtonPolyhedron, GeometryError> {
    if p.is_zero() {
        return Err(GeometryError::ZeroPolynomial);
    }
    NewtonPolyhedron::from_points(p.support().map(|m| LatticePoint::from_ints(m.dx as i64, m.dy as i64)))
}

/// Decay and exponent predicted for a single mixed support point `(k, l)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SharpPair {
    #[serde(serialize_with = "ser_rational")]
    pub decay: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub p: Rational,
    pub on_boundary: bool,
}

/// `decay = 1/(k+l)` at `p = (k+l)/k`, plus whether `(k, l)` is on the
/// boundary of the polyhedron of the mixed part of `S`.
///
/// Pure `x^k` / `y^l` terms only contribute unimodular factors to the kernel,
/// so boundary membership is decided on the mixed monomials.
pub fn sharp_pair_estimate(s: &Polynomial, k: u32, l: u32) -> Result<SharpPair, GeometryError> {
    if k == 0 || l == 0 || s.coefficient((k, l)).is_none() {
        return Err(GeometryError::NotInSupport { k, l });
    }
    let hull = polyhedron(&s.mixed_part())?;
    let kl = Rational::from_integer((k + l).into());
    Ok(SharpPair {
        decay: kl.recip(),
        p: kl / Rational::from_integer(k.into()),
        on_boundary: hull.on_boundary(&LatticePoint::from_ints(k as i64, l as i64)),
    })
}

/// Exponents attached to vertex `r` of the Hessian polyhedron.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VertexReport {
    pub r: usize,
    #[serde(rename = "A", serialize_with = "ser_rational")]
    pub a: Rational,
    #[serde(rename = "B", serialize_with = "ser_rational")]
    pub b: Rational,
    /// `(A + B + 2) / (A + 1)`
    #[serde(serialize_with = "ser_rational")]
    pub p: Rational,
    /// `1 / (A + B + 2)`
    #[serde(serialize_with = "ser_rational")]
    pub decay: Rational,
    /// `1 / (2 (1 + B))`
    #[serde(serialize_with = "ser_rational")]
    pub damped_sigma: Rational,
    /// `(A − B) / (2 A (1 + B))`, absent when `A = 0`.
    #[serde(serialize_with = "ser_opt_rational")]
    pub damped_re_z: Option<Rational>,
    /// `−1 / A`, absent when `A = 0`.
    #[serde(serialize_with = "ser_opt_rational")]
    pub critical_neg_re_z: Option<Rational>,
}

impl VertexReport {
    pub fn from_vertex(r: usize, v: &LatticePoint) -> Self {
        let one = Rational::one();
        let two = Rational::from_integer(2.into());
        let a = v.a.clone();
        let b = v.b.clone();
        let total = &a + &b + &two;
        let (damped_re_z, critical_neg_re_z) = if a.is_zero() {
            (None, None)
        } else {
            (
                Some((&a - &b) / (&two * &a * (&one + &b))),
                Some(-a.recip()),
            )
        };
        VertexReport {
            r,
            p: &total / (&a + &one),
            decay: total.recip(),
            damped_sigma: (&two * (&one + &b)).recip(),
            damped_re_z,
            critical_neg_re_z,
            a,
            b,
        }
    }
}

/// One report per vertex of `N(∂x∂y S)`.
pub fn vertex_reports(s: &Polynomial) -> Result<Vec<VertexReport>, GeometryError> {
    let hessian = s.mixed_hessian();
    if hessian.is_zero() {
        return Err(GeometryError::DegeneratePhase);
    }
    Ok(polyhedron(&hessian)?
        .vertices()
        .iter()
        .enumerate()
        .map(|(r, v)| VertexReport::from_vertex(r, v))
        .collect())
}

pub(crate) fn ser_rational<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

pub(crate) fn ser_opt_rational<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
    match r {
        Some(r) => s.serialize_str(&r.to_string()),
        None => s.serialize_str("undefined"),
    }
}
