use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use super::{compare_series, PuiseuxRoots, PuiseuxSeries};
use crate::newton::ser_rational;
use crate::{Complex64, Rational};

/// Relative distance below which two coefficients are one class.
pub const COEFF_CLUSTER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClusterError {
    #[error("coefficients {a} and {b} at x^{exponent} are too close to the clustering tolerance to separate")]
    AmbiguousCluster {
        exponent: Rational,
        a: Complex64,
        b: Complex64,
    },
}

/// Roots grouped by leading exponent, then by leading coefficient, then
/// recursively by the following terms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootClusterTree {
    pub m: u32,
    pub s: u32,
    pub levels: Vec<ExponentLevel>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentLevel {
    #[serde(serialize_with = "ser_rational")]
    pub exponent: Rational,
    /// Multiplicity-weighted number of roots with this exponent.
    pub count: usize,
    pub classes: Vec<CoefficientClass>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientClass {
    #[serde(serialize_with = "ser_complex")]
    pub coefficient: Complex64,
    pub count: usize,
    /// Refinement by the next term; roots that end here have no child.
    pub children: Vec<ExponentLevel>,
    pub roots: Vec<(PuiseuxSeries, usize)>,
}

impl RootClusterTree {
    /// Every root with multiplicity, in sorted order.
    pub fn roots(&self) -> Vec<(PuiseuxSeries, usize)> {
        self.levels
            .iter()
            .flat_map(|l| l.classes.iter().flat_map(|c| c.roots.iter().cloned()))
            .collect()
    }

    /// Roots of the first `r` exponent levels, i.e. the clusters `l ≤ r`.
    pub fn roots_up_to(&self, r: usize) -> Vec<(PuiseuxSeries, usize)> {
        self.levels
            .iter()
            .take(r)
            .flat_map(|l| l.classes.iter().flat_map(|c| c.roots.iter().cloned()))
            .collect()
    }

    pub fn total(&self) -> usize {
        self.levels.iter().map(|l| l.count).sum()
    }
}

pub(crate) fn ser_complex<S: Serializer>(c: &Complex64, s: S) -> Result<S::Ok, S::Error> {
    [c.re, c.im].serialize(s)
}

impl Serialize for PuiseuxSeries {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Term<'a> {
            #[serde(serialize_with = "ser_rational")]
            exponent: &'a Rational,
            #[serde(serialize_with = "ser_complex")]
            coefficient: &'a Complex64,
        }
        let terms: Vec<Term> = self
            .terms
            .iter()
            .map(|(e, c)| Term {
                exponent: e,
                coefficient: c,
            })
            .collect();
        let mut st = s.serialize_struct("PuiseuxSeries", 4)?;
        st.serialize_field("terms", &terms)?;
        st.serialize_field("polydromy", &self.polydromy)?;
        st.serialize_field("truncation_order", &self.truncation_order.to_string())?;
        st.serialize_field("exact", &self.exact)?;
        st.end()
    }
}

enum Relation {
    Same,
    Distinct,
    Ambiguous,
}

fn relate(a: Complex64, b: Complex64) -> Relation {
    let d = (a - b).norm() / a.norm().max(b.norm()).max(f64::MIN_POSITIVE);
    if d < COEFF_CLUSTER_TOL / 10.0 {
        Relation::Same
    } else if d > COEFF_CLUSTER_TOL * 10.0 {
        Relation::Distinct
    } else {
        Relation::Ambiguous
    }
}

pub fn classify_roots(roots: &PuiseuxRoots) -> Result<RootClusterTree, ClusterError> {
    let all: Vec<(PuiseuxSeries, usize)> = roots.roots.clone();
    Ok(RootClusterTree {
        m: roots.m,
        s: roots.s,
        levels: group(all, 0)?,
    })
}

fn group(mut roots: Vec<(PuiseuxSeries, usize)>, depth: usize) -> Result<Vec<ExponentLevel>, ClusterError> {
    roots.retain(|(r, _)| r.terms.len() > depth);
    roots.sort_by(|a, b| compare_series(&a.0, &b.0));
    let mut levels: Vec<ExponentLevel> = Vec::new();
    let mut buckets: Vec<(Rational, Vec<(Complex64, Vec<(PuiseuxSeries, usize)>)>)> = Vec::new();
    for (series, k) in roots {
        let (e, c) = series.terms[depth].clone();
        let idx = match buckets.iter().position(|(be, _)| *be == e) {
            Some(i) => i,
            None => {
                buckets.push((e.clone(), Vec::new()));
                buckets.len() - 1
            }
        };
        let classes = &mut buckets[idx].1;
        let mut home = None;
        for (i, (rep, _)) in classes.iter().enumerate() {
            match relate(*rep, c) {
                Relation::Same => {
                    home = Some(i);
                    break;
                }
                Relation::Ambiguous => {
                    return Err(ClusterError::AmbiguousCluster {
                        exponent: e,
                        a: *rep,
                        b: c,
                    })
                }
                Relation::Distinct => {}
            }
        }
        match home {
            Some(i) => classes[i].1.push((series, k)),
            None => classes.push((c, vec![(series, k)])),
        }
    }
    for (exponent, classes) in buckets {
        let mut out = Vec::new();
        for (coefficient, members) in classes {
            let count = members.iter().map(|(_, k)| k).sum();
            let children = group(members.clone(), depth + 1)?;
            out.push(CoefficientClass {
                coefficient,
                count,
                children,
                roots: members,
            });
        }
        levels.push(ExponentLevel {
            count: out.iter().map(|c| c.count).sum(),
            exponent,
            classes: out,
        });
    }
    Ok(levels)
}
