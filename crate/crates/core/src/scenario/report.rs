use serde::Serialize;

use crate::flat::FinderOutcome;
use crate::identity::IdentityRecord;
use crate::lie::{Factor, LieAlgebraSpec};

/// Formula anchors of the non-identity records. Identity records carry
/// [`crate::identity::Identity::anchor`].
pub const ANCHORS: &[(&str, &str)] = &[
    ("twisting", "f(x + 2pi e_k) = h_k^-1 . f(x)"),
    ("cs", "CS(A) = int_T3 cs(A)"),
    ("degree", "deg u = int_T3 u*Theta"),
    ("oracle", "deg u = sum of orientation signs over u^-1(q)"),
    ("gauge_change", "CS(u.A) - CS(A) = deg u"),
    (
        "flat_gauge_change_pointwise",
        "cs(u.A) - cs(A) - (u*Theta)^H = d<Ad(u^-1)(A-A0) ^ (u*theta)^H>",
    ),
    ("gauge_change_independent_of_connection", "CS(u.A) - CS(A) is independent of A"),
    ("gauge_change_independent_of_reference", "CS(u.A) - CS(A) is independent of the flat A0"),
    ("degree_independent_of_reference", "deg u is independent of the flat A0"),
    ("gradient_law", "d/dt CS(A + t a)|0 = 2 int <F_A ^ a>"),
    ("orbit_pairing", "2 int <F_A ^ d_A X> = 0"),
    ("initial_residual", "R(A) = int |F_A|^2"),
    ("flatness", "R(A) = int |F_A|^2"),
    ("haar_volume", "vol SU(2) = 2 pi^2"),
    ("theta_integral", "int_SU(2) Theta = -4 pi^2 at lambda = 1"),
    ("lambda_star", "lambda* = -1 / int_SU(2) Theta = 1/(4 pi^2)"),
    ("theta_basis", "Theta(X,Y,Z) = -<X,[Y,Z]> = -2 at (i,j,k), lambda = 1"),
];

/// Anchor of a record name; `name:suffix` uses the anchor of `name`.
pub fn anchor(name: &str) -> &'static str {
    let base = name.split(':').next().unwrap_or(name);
    ANCHORS
        .iter()
        .find(|(n, _)| *n == base)
        .map(|(_, a)| *a)
        .unwrap_or_else(|| panic!("no anchor registered for {name}"))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Record {
    pub name: String,
    pub anchor: String,
    /// Computed quantity, if the record has one.
    pub value: Option<f64>,
    /// Distance from the expected result; `None` for informational records.
    pub residual: Option<f64>,
    pub tolerance: Option<f64>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Record {
    /// A check: passes iff `residual <= tolerance` (NaN fails).
    pub fn check(name: impl Into<String>, value: Option<f64>, residual: f64, tolerance: f64) -> Record {
        let name = name.into();
        Record {
            anchor: anchor(&name).into(),
            name,
            value,
            residual: Some(residual),
            tolerance: Some(tolerance),
            pass: residual <= tolerance,
            note: None,
        }
    }

    /// A reported value with no expectation; passes iff finite.
    pub fn value(name: impl Into<String>, value: f64) -> Record {
        let name = name.into();
        Record {
            anchor: anchor(&name).into(),
            name,
            value: Some(value),
            residual: None,
            tolerance: None,
            pass: value.is_finite(),
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Record {
        self.note = Some(note.into());
        self
    }
}

impl From<IdentityRecord> for Record {
    fn from(r: IdentityRecord) -> Record {
        Record {
            name: r.name.into(),
            anchor: r.anchor.into(),
            value: None,
            residual: Some(r.residual),
            tolerance: Some(r.tolerance),
            pass: r.pass,
            note: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Quadrature {
    pub grid: usize,
    pub summation: &'static str,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormalizationInfo {
    pub factors: Vec<Factor>,
    pub scales: Vec<f64>,
    /// Whether every `su(2)` factor carries `λ*`.
    pub normalized: bool,
}

impl NormalizationInfo {
    pub fn new(spec: &LieAlgebraSpec, normalized: bool) -> Self {
        NormalizationInfo {
            factors: spec.algebra.factors().to_vec(),
            scales: spec.scales().to_vec(),
            normalized,
        }
    }
}

/// Result of one command. Serializes deterministically: field order is
/// fixed and records appear in evaluation order.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub version: &'static str,
    pub scenario: String,
    pub command: String,
    pub quadrature: Quadrature,
    pub normalization: Option<NormalizationInfo>,
    pub records: Vec<Record>,
    pub warnings: Vec<String>,
    pub pass: bool,
    /// Optimizer trace of `flatten`, written separately as CSV.
    #[serde(skip)]
    pub finder: Option<FinderOutcome>,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_anchor_name_is_unique() {
        let mut names: Vec<_> = ANCHORS.iter().map(|a| a.0).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), ANCHORS.len());
        assert_eq!(anchor("twisting:A"), anchor("twisting"));
    }

    #[test]
    fn nan_residual_fails() {
        assert!(!Record::check("cs", None, f64::NAN, 1.0).pass);
        assert!(Record::check("cs", Some(1.0), 0.5, 1.0).pass);
        assert!(!Record::value("cs", f64::INFINITY).pass);
    }
}
