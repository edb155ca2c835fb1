use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    SmoothBump,
    Box,
}

impl std::str::FromStr for Profile {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "smooth-bump" | "bump" => Ok(Profile::SmoothBump),
            "box" => Ok(Profile::Box),
            other => Err(format!("unknown profile `{other}` (expected smooth-bump or box)")),
        }
    }
}

/// `φ(x, y) = ψ(x) ψ(y)` on `[−w, w]²`, optionally times `Φ(x/2^j) Φ(y/2^k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub half_width: f64,
    pub profile: Profile,
    pub dyadic: Option<(i32, i32)>,
}

impl Default for CutoffSpec {
    fn default() -> Self {
        CutoffSpec {
            half_width: 0.5,
            profile: Profile::SmoothBump,
            dyadic: None,
        }
    }
}

impl CutoffSpec {
    pub fn new(half_width: f64, profile: Profile) -> Self {
        CutoffSpec {
            half_width,
            profile,
            dyadic: None,
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let base = match self.profile {
            Profile::SmoothBump => bump(x, self.half_width) * bump(y, self.half_width),
            Profile::Box => {
                if x.abs() <= self.half_width && y.abs() <= self.half_width {
                    1.0
                } else {
                    0.0
                }
            }
        };
        match self.dyadic {
            None => base,
            Some((j, k)) => base * dyadic_phi(x.abs() / (j as f64).exp2()) * dyadic_phi(y.abs() / (k as f64).exp2()),
        }
    }
}

/// `e^{−1/s}` for `s > 0`, else 0.
fn flat(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

/// Smooth step: 1 for `s ≤ 0`, 0 for `s ≥ 1`.
fn step(s: f64) -> f64 {
    let a = flat(1.0 - s);
    let b = flat(s);
    a / (a + b)
}

/// `C^∞` bump: 1 on `[−w/2, w/2]`, 0 off `(−w, w)`.
pub fn bump(t: f64, w: f64) -> f64 {
    let half = 0.5 * w;
    step((t.abs() - half) / half)
}

/// `β = 1` on `t ≤ 1`, `0` on `t ≥ 2`.
fn beta(t: f64) -> f64 {
    step(t - 1.0)
}

/// `Φ(t) = β(t) − β(2t)`, supported in `[1/2, 2]`; `Σ_j Φ(t/2^j) = 1` for `t > 0`.
pub fn dyadic_phi(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    beta(t) - beta(2.0 * t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_shape() {
        assert_eq!(bump(0.0, 0.5), 1.0);
        assert_eq!(bump(0.25, 0.5), 1.0);
        assert_eq!(bump(-0.2, 0.5), 1.0);
        assert_eq!(bump(0.5, 0.5), 0.0);
        assert_eq!(bump(0.7, 0.5), 0.0);
        let mid = bump(0.375, 0.5);
        assert!(mid > 0.0 && mid < 1.0);
        assert!((mid - 0.5).abs() < 1e-15);
    }

    #[test]
    fn dyadic_partition_of_unity() {
        for i in 1..2000 {
            let t = 1e-3 * i as f64;
            let sum: f64 = (-20..=20).map(|j| dyadic_phi(t / (j as f64).exp2())).sum();
            assert!((sum - 1.0).abs() < 1e-12, "t = {t}: {sum}");
        }
        assert_eq!(dyadic_phi(0.5), 0.0);
        assert_eq!(dyadic_phi(2.0), 0.0);
        assert_eq!(dyadic_phi(3.0), 0.0);
    }

    #[test]
    fn box_and_profiles() {
        let c = CutoffSpec::new(0.5, Profile::Box);
        assert_eq!(c.eval(0.49, -0.49), 1.0);
        assert_eq!(c.eval(0.51, 0.0), 0.0);
        assert_eq!("box".parse::<Profile>(), Ok(Profile::Box));
        assert!("tent".parse::<Profile>().is_err());
    }
}
