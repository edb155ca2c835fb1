use serde::Serialize;
use thiserror::Error;

use crate::damping::detect_special_form;
use crate::newton::{polyhedron, vertex_reports, GeometryError, LatticePoint, VertexReport};
use crate::phase::{format_phase, parse_phase, PhaseError};
use crate::puiseux::{
    classify_roots, default_order, puiseux_roots, vertex_crosscheck, ClusterError, CrosscheckError, PuiseuxError,
    PuiseuxSeries, RootClusterTree,
};
use crate::{Polynomial, Rational};
use num_traits::One;

fn ser_rational<S: serde::Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Phase(#[from] PhaseError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Puiseux(#[from] PuiseuxError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
}

impl AnalysisError {
    /// Stable machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            AnalysisError::Phase(PhaseError::SyntaxError { .. }) => "SyntaxError",
            AnalysisError::Phase(PhaseError::NonPolynomial { .. }) => "NonPolynomial",
            AnalysisError::Phase(PhaseError::UnknownSymbol { .. }) => "UnknownSymbol",
            AnalysisError::Geometry(GeometryError::DegeneratePhase) => "DegeneratePhase",
            AnalysisError::Geometry(GeometryError::ZeroPolynomial) => "ZeroPolynomial",
            AnalysisError::Geometry(_) => "GeometryError",
            AnalysisError::Puiseux(PuiseuxError::TruncationTooCoarse { .. }) => "TruncationTooCoarse",
            AnalysisError::Puiseux(_) => "PuiseuxError",
            AnalysisError::Cluster(_) => "AmbiguousCluster",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpecialForm {
    pub root: PuiseuxSeries,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum CrosscheckStatus {
    Ok { vertices: Vec<LatticePoint> },
    Mismatch { predicted: Vec<(String, String)>, hull: Vec<(String, String)> },
}

/// Everything `analyze` reports about a phase.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Analysis {
    pub phase: String,
    pub hessian: String,
    pub phase_polyhedron: Vec<LatticePoint>,
    pub hessian_polyhedron: Vec<LatticePoint>,
    pub vertices: Vec<VertexReport>,
    /// Where the diagonal meets the Hessian polyhedron.
    #[serde(serialize_with = "ser_rational")]
    pub newton_distance: Rational,
    /// `1 / (2 (1 + d))`: the decay of `‖T_λ‖_{L²}`.
    #[serde(serialize_with = "ser_rational")]
    pub l2_decay: Rational,
    pub cluster_tree: RootClusterTree,
    /// `D = (y − r(x))^d` with `r` tangent to a real line, for the first cluster.
    pub special_form: Option<SpecialForm>,
    pub crosscheck: CrosscheckStatus,
}

pub fn analyze_text(text: &str) -> Result<Analysis, AnalysisError> {
    analyze(&parse_phase(text)?)
}

pub fn analyze(s: &Polynomial) -> Result<Analysis, AnalysisError> {
    let vertices = vertex_reports(s)?;
    let h = s.mixed_hessian();
    let order = default_order(&h)?;
    let tree = classify_roots(&puiseux_roots(&h, &order)?)?;
    let special_form = if tree.levels.is_empty() {
        None
    } else {
        detect_special_form(&tree, 1).map(|(root, multiplicity)| SpecialForm { root, multiplicity })
    };
    let crosscheck = match vertex_crosscheck(&h, &tree) {
        Ok(r) => CrosscheckStatus::Ok { vertices: r.hull },
        Err(CrosscheckError::CrosscheckMismatch { predicted, hull }) => CrosscheckStatus::Mismatch { predicted, hull },
        Err(CrosscheckError::Geometry(e)) => return Err(e.into()),
    };
    let hull = polyhedron(&h)?;
    let d = hull.newton_distance();
    let two = Rational::from_integer(2.into());
    Ok(Analysis {
        phase: format_phase(s),
        hessian: format_phase(&h),
        phase_polyhedron: polyhedron(s)?.vertices().to_vec(),
        hessian_polyhedron: hull.vertices().to_vec(),
        vertices,
        l2_decay: (&two * (Rational::one() + &d)).recip(),
        newton_distance: d,
        cluster_tree: tree,
        special_form,
        crosscheck,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hyperbolic_phase() {
        let a = analyze_text("x*y").unwrap();
        assert_eq!(a.vertices.len(), 1);
        let json = serde_json::to_value(&a).unwrap();
        assert_eq!(json["vertices"][0]["p"], "2");
        assert_eq!(json["vertices"][0]["decay"], "1/2");
        assert_eq!(json["crosscheck"]["status"], "ok");
        assert!(a.special_form.is_none());
    }

    #[test]
    fn two_vertices() {
        let a = analyze_text("x^3*y+x*y^3").unwrap();
        let json = serde_json::to_value(&a).unwrap();
        let pairs: Vec<(String, String)> = json["vertices"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| (v["p"].as_str().unwrap().to_owned(), v["decay"].as_str().unwrap().to_owned()))
            .collect();
        assert_eq!(pairs, [("4".into(), "1/4".into()), ("4/3".into(), "1/4".into())]);
        assert_eq!(json["newton_distance"], "1");
        assert_eq!(json["l2_decay"], "1/4");
    }

    #[test]
    fn special_form_flag() {
        let a = analyze_text("1/3*x^3*y - 1/2*x^2*y^2 + 1/3*x*y^3").unwrap();
        assert_eq!(a.hessian, format_phase(&parse_phase("(y - x)^2").unwrap()));
        assert_eq!(a.special_form.unwrap().multiplicity, 2);
    }

    #[test]
    fn split_phase_is_degenerate() {
        let e = analyze_text("x^3+y^2").unwrap_err();
        assert_eq!(e.kind(), "DegeneratePhase");
        assert_eq!(analyze_text("x^^2").unwrap_err().kind(), "SyntaxError");
    }
}
