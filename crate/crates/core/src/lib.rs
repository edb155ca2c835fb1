//! Newton-polyhedron and Puiseux-cluster analysis of polynomial phases, with a
//! numerical laboratory for (damped) oscillatory integral operators
//!
//! ```text
//! T_λ f(x) = ∫ e^{iλS(x,y)} |D(x,y)|^z φ(x,y) f(y) dy
//! ```
//!
//! The symbolic side ([`phase`], [`poly`], [`newton`], [`puiseux`]) works over
//! exact rationals. The numeric side ([`damping`], [`lab`]) is generic over
//! the float type; [`Operator`] and friends fix it to `f64`.

pub mod damping;
pub mod lab;
pub mod newton;
pub mod phase;
pub mod poly;
pub mod puiseux;
pub mod report;

use num_bigint::BigInt;

pub use damping::{DampingFactor, DampingVariant};
pub use newton::{NewtonPolyhedron, VertexReport};
pub use phase::{format_phase, parse_phase, PhaseError};
pub use poly::{BivariatePolynomial, Monomial};
pub use puiseux::{PuiseuxSeries, RootClusterTree};

/// Exact rational scalar used by every symbolic stage.
pub type Rational = num_rational::BigRational;

/// Exact-coefficient polynomial; the carrier of phases and Hessians.
pub type Polynomial = BivariatePolynomial<Rational>;

/// Double-precision discretized operator.
pub type Operator = lab::DiscretizedOperator<f64>;

/// Single-precision discretized operator.
pub type OperatorF32 = lab::DiscretizedOperator<f32>;

pub type Complex64 = num_complex::Complex<f64>;

/// Shorthand for `n/d` as a [`Rational`].
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}
