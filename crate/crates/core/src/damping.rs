//! Damping factors `D = x^m Π_{l≤r} Π (y − r_ν(x))` and their floor-regularised
//! variant `D̃ = (|λ| 2^{k B₁})^{−N₁/(N₁+2)} + Π_{l=1} |y − r_ν(x)|`.

use num_traits::Zero;
use thiserror::Error;

use crate::poly::rational_to_f64;
use crate::puiseux::{compare_series, PuiseuxSeries, RootClusterTree};
use crate::{Complex64, Rational};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DampingError {
    #[error("vertex index {r} out of range 0..={n}")]
    VertexOutOfRange { r: usize, n: usize },
    #[error("modified damping needs D = (y - r(x))^d with r(x) = C x + o(x), C real")]
    NotSpecialForm,
    #[error("modified damping needs a nonzero frequency")]
    ZeroFrequency,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DampingVariant {
    Plain,
    Modified {
        lambda: f64,
        /// Dyadic index of the `y`-scale the floor is tuned to.
        k: i32,
        b1: Rational,
        n1: usize,
    },
}

/// Immutable, evaluable `|D|^z`.
#[derive(Debug, Clone, PartialEq)]
pub struct DampingFactor {
    pub m: u32,
    /// Number of cluster levels included, `l = 1..=r`.
    pub r: usize,
    pub roots: Vec<(PuiseuxSeries, usize)>,
    pub variant: DampingVariant,
    pub z: Complex64,
}

/// `|D|^z` at a point; `PositiveInfinity` marks `0^z` with `Re z ≤ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DampedWeight {
    Value(Complex64),
    PositiveInfinity,
}

impl DampedWeight {
    pub fn value(self) -> Option<Complex64> {
        match self {
            DampedWeight::Value(v) => Some(v),
            DampedWeight::PositiveInfinity => None,
        }
    }
}

pub fn build_damping(tree: &RootClusterTree, r: usize, z: Complex64) -> Result<DampingFactor, DampingError> {
    let n = tree.levels.len();
    if r > n {
        return Err(DampingError::VertexOutOfRange { r, n });
    }
    Ok(DampingFactor {
        m: tree.m,
        r,
        roots: tree.roots_up_to(r),
        variant: DampingVariant::Plain,
        z,
    })
}

/// `Some((r_ν, d))` iff `D = (y − r_ν(x))^d` with `r_ν = C₁x + o(x)`, `C₁ ∈ ℝ∖{0}`.
pub fn detect_special_form(tree: &RootClusterTree, r: usize) -> Option<(PuiseuxSeries, usize)> {
    if tree.m != 0 || r == 0 {
        return None;
    }
    let selected = tree.roots_up_to(r);
    let first = selected.first()?;
    let distinct = selected
        .iter()
        .all(|(s, _)| compare_series(s, &first.0).is_eq());
    if !distinct {
        return None;
    }
    let series = &first.0;
    let c1 = series.leading_coefficient();
    let linear = *series.leading_exponent() == Rational::from_integer(1.into());
    if !linear || c1.im != 0.0 || c1.re == 0.0 || !series.has_real_coefficients() {
        return None;
    }
    let d = selected.iter().map(|(_, k)| k).sum();
    Some((series.clone(), d))
}

/// `(|λ| 2^{k B₁})^{−N₁/(N₁+2)}`.
pub fn modified_floor(lambda: f64, k: i32, b1: &Rational, n1: usize) -> f64 {
    let scale = lambda.abs() * (k as f64 * rational_to_f64(b1)).exp2();
    scale.powf(-(n1 as f64) / (n1 as f64 + 2.0))
}

pub fn build_modified_damping(
    tree: &RootClusterTree,
    lambda: f64,
    k: i32,
    z: Complex64,
) -> Result<DampingFactor, DampingError> {
    if lambda == 0.0 {
        return Err(DampingError::ZeroFrequency);
    }
    detect_special_form(tree, 1).ok_or(DampingError::NotSpecialForm)?;
    let n1 = tree.levels[0].count;
    let b1 = Rational::from_integer((tree.s as usize + tree.total() - n1).into());
    Ok(DampingFactor {
        m: 0,
        r: 1,
        roots: tree.roots_up_to(1),
        variant: DampingVariant::Modified { lambda, k, b1, n1 },
        z,
    })
}

/// Dyadic index of a support's outer scale: the `k` with `2^k ≤ w < 2^{k+1}`.
pub fn outer_scale_index(half_width: f64) -> i32 {
    half_width.log2().floor() as i32
}

impl DampingFactor {
    /// Same factor with the modified floor retuned to a new frequency.
    pub fn at_lambda(&self, lambda: f64) -> Self {
        let mut out = self.clone();
        if let DampingVariant::Modified { lambda: l, .. } = &mut out.variant {
            *l = lambda;
        }
        out
    }

    pub fn with_z(&self, z: Complex64) -> Self {
        DampingFactor { z, ..self.clone() }
    }

    pub fn floor(&self) -> Option<f64> {
        match &self.variant {
            DampingVariant::Plain => None,
            DampingVariant::Modified { lambda, k, b1, n1 } => Some(modified_floor(*lambda, *k, b1, *n1)),
        }
    }

    /// `Π (y − r_ν(x))^{mult}`, conjugate pairs multiplied first so the
    /// result is real up to round-off on real inputs.
    pub fn root_product(&self, x: f64, y: f64) -> Complex64 {
        let xc = Complex64::new(x, 0.0);
        let yc = Complex64::new(y, 0.0);
        let mut used = vec![false; self.roots.len()];
        let mut acc = Complex64::new(1.0, 0.0);
        for i in 0..self.roots.len() {
            if used[i] {
                continue;
            }
            used[i] = true;
            let (ri, ki) = &self.roots[i];
            let fi = yc - ri.eval(xc);
            let partner = (!ri.has_real_coefficients())
                .then(|| {
                    let conj = ri.conj();
                    (i + 1..self.roots.len()).find(|&j| {
                        !used[j] && self.roots[j].1 == *ki && compare_series(&self.roots[j].0, &conj).is_eq()
                    })
                })
                .flatten();
            let factor = match partner {
                Some(j) => {
                    used[j] = true;
                    let fj = yc - self.roots[j].0.eval(xc);
                    let pair = fi * fj;
                    // the pair is real when both branches are evaluated consistently
                    if x >= 0.0 {
                        Complex64::new(pair.re, 0.0)
                    } else {
                        pair
                    }
                }
                None => fi,
            };
            acc *= factor.powu(*ki as u32);
        }
        acc
    }

    /// `|D(x, y)|` or `D̃(x, y)`.
    pub fn magnitude(&self, x: f64, y: f64) -> f64 {
        match &self.variant {
            DampingVariant::Plain => x.abs().powi(self.m as i32) * self.root_product(x, y).norm(),
            DampingVariant::Modified { .. } => {
                let prod: f64 = self
                    .roots
                    .iter()
                    .map(|(r, k)| (Complex64::new(y, 0.0) - r.eval(Complex64::new(x, 0.0))).norm().powi(*k as i32))
                    .product();
                self.floor().unwrap_or(0.0) + prod
            }
        }
    }

    /// `|D|^z = exp(z log|D|)`, with `0^z = 0` for `Re z > 0`.
    pub fn weight(&self, x: f64, y: f64) -> DampedWeight {
        eval_damped_weight(self, x, y)
    }

    pub fn is_trivial(&self) -> bool {
        self.z.is_zero()
    }
}

pub fn eval_damped_weight(d: &DampingFactor, x: f64, y: f64) -> DampedWeight {
    let mag = d.magnitude(x, y);
    if mag == 0.0 {
        if d.z.is_zero() {
            return DampedWeight::Value(Complex64::new(1.0, 0.0));
        }
        return if d.z.re > 0.0 {
            DampedWeight::Value(Complex64::new(0.0, 0.0))
        } else {
            DampedWeight::PositiveInfinity
        };
    }
    DampedWeight::Value((d.z * mag.ln()).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::puiseux::{classify_roots, default_order, puiseux_roots};
    use crate::{parse_phase, rat, Polynomial};

    fn tree(text: &str) -> RootClusterTree {
        tree_of(&parse_phase(text).unwrap())
    }

    fn tree_of(h: &Polynomial) -> RootClusterTree {
        classify_roots(&puiseux_roots(h, &default_order(h).unwrap()).unwrap()).unwrap()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn circle_pair_expands_to_sum_of_squares() {
        let d = build_damping(&tree("3*x^2 + 3*y^2"), 1, c(0.5)).unwrap();
        let w = d.weight(0.3, 0.4).value().unwrap();
        assert!((w - c(0.5)).norm() < 1e-15);
        for (x, y) in [(0.1, -0.2), (-0.37, 0.05), (0.5, 0.5)] {
            let p = d.root_product(x, y);
            assert!((p.re - (x * x + y * y)).abs() < 1e-15 && p.im.abs() < 1e-15);
        }
    }

    #[test]
    fn vertex_zero_is_the_x_power() {
        let d = build_damping(&tree("4*x*y"), 0, c(-1.0)).unwrap();
        assert!(d.roots.is_empty());
        assert_eq!(d.magnitude(0.25, 0.7), 0.25);
        assert!((d.weight(0.125, 0.3).value().unwrap() - c(8.0)).norm() < 1e-12);
        assert_eq!(
            build_damping(&tree("4*x*y"), 1, c(1.0)),
            Err(DampingError::VertexOutOfRange { r: 1, n: 0 })
        );
    }

    #[test]
    fn zero_exponent_gives_unit_weight() {
        let d = build_damping(&tree("y^2 - x^3"), 1, c(0.0)).unwrap();
        for (x, y) in [(0.2, 0.1), (-0.3, 0.4), (0.0, 0.0)] {
            assert_eq!(d.weight(x, y), DampedWeight::Value(c(1.0)));
        }
    }

    #[test]
    fn zeros_of_d() {
        let d = build_damping(&tree("4*x*y"), 0, c(0.5)).unwrap();
        assert_eq!(d.weight(0.0, 0.3), DampedWeight::Value(c(0.0)));
        let d = d.with_z(c(-0.5));
        assert_eq!(d.weight(0.0, 0.3), DampedWeight::PositiveInfinity);
        let d = d.with_z(Complex64::new(0.0, 2.0));
        assert_eq!(d.weight(0.0, 0.3), DampedWeight::PositiveInfinity);
    }

    #[test]
    fn special_form_detection() {
        assert!(detect_special_form(&tree("(y - x)^2 - x^5"), 1).is_none());
        let (root, d) = detect_special_form(&tree("(y - x)^3"), 1).unwrap();
        assert_eq!(d, 3);
        assert_eq!(root.terms, vec![(rat(1, 1), c(1.0))]);
        assert!(detect_special_form(&tree("x^2 + y^2"), 1).is_none());
        assert!(detect_special_form(&tree("x*(y - x)^2"), 1).is_none());
        assert!(detect_special_form(&tree("(y - x)^2"), 0).is_none());
    }

    #[test]
    fn special_form_survives_a_unit() {
        let unit = parse_phase("1 + x/10").unwrap();
        for text in ["(y - x)^3", "(y + 2*x - x^2)^2", "(y - x)^2 - x^5", "x^2 + y^2"] {
            let h = parse_phase(text).unwrap();
            let plain = detect_special_form(&tree_of(&h), 1).map(|(_, d)| d);
            let scaled = detect_special_form(&tree_of(&(&h * &unit)), 1).map(|(_, d)| d);
            assert_eq!(plain, scaled, "{text}");
        }
    }

    #[test]
    fn modified_floor_examples() {
        let t = tree("(y - x)^2");
        let d = build_modified_damping(&t, 1024.0, 0, c(-0.5)).unwrap();
        assert_eq!(d.floor(), Some(1.0 / 32.0));
        // on the root curve only the floor is left
        assert_eq!(d.magnitude(0.3, 0.3), 1.0 / 32.0);
        assert!(d.at_lambda(1e12).floor().unwrap() < 1e-5);
        assert!(d.magnitude(-0.4, 0.45) > 0.0);
        assert_eq!(
            build_modified_damping(&tree("x^2 + y^2"), 10.0, 0, c(1.0)),
            Err(DampingError::NotSpecialForm)
        );
        assert_eq!(build_modified_damping(&t, 0.0, 0, c(1.0)), Err(DampingError::ZeroFrequency));
    }

    #[test]
    fn outer_scale() {
        assert_eq!(outer_scale_index(0.5), -1);
        assert_eq!(outer_scale_index(0.7), -1);
        assert_eq!(outer_scale_index(1.0), 0);
    }

    #[test]
    fn monomial_homogeneity() {
        let d = build_damping(&tree("x^3*y"), 0, Complex64::new(0.7, 1.3)).unwrap();
        assert_eq!(d.m, 3);
        for (x, y) in [(0.1, 0.2), (0.21, -0.4)] {
            let a = d.weight(2.0 * x, y).value().unwrap().norm();
            let b = d.weight(x, y).value().unwrap().norm();
            assert!((a / b - 2f64.powf(3.0 * 0.7)).abs() < 1e-12);
        }
    }

    #[test]
    fn plain_product_is_real_on_a_grid() {
        for text in ["3*x^2 + 3*y^2", "y^2 - x^3", "y^3 - 2*x^2", "(y^2 + x^2)*(y - x^2)", "(y - x)^2 - x^5"] {
            let t = tree(text);
            let d = build_damping(&t, t.levels.len(), c(1.0)).unwrap();
            for i in 0..100 {
                for j in 0..100 {
                    let x = -0.5 + (i as f64 + 0.5) / 100.0;
                    let y = -0.5 + (j as f64 + 0.5) / 100.0;
                    let p = d.root_product(x, y);
                    assert!(p.im.abs() <= 1e-10 * (1.0 + p.norm()), "{text} at ({x}, {y}): {p}");
                }
            }
        }
    }
}
