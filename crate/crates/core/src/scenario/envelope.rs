//! The JSON envelope of a scenario file and its resolution into typed
//! fields.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::expr::Expr;
use super::parser::parse_expr;
use super::typing::{radius_warnings, Env, Value};
use super::Diagnostic;
use crate::error::{Error, Result};
use crate::flat::{
    make_twisted_algebra_field, make_twisted_gauge_field, random_recipe, validate_twisting, HolonomyData,
    Metric, Optimizer, TwistedField, TWIST_TOLERANCE,
};
use crate::forms::{FormExpr, ValueSpace};
use crate::gauge::GaugeField;
use crate::group_field::{GroupExpr, GroupField};
use crate::lie::{Algebra, Factor, GroupElement, LieAlgebraSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scales {
    /// `"normalized"` (λ*) or `"euclidean"` (λ = 1) for every factor.
    Named(String),
    Values(Vec<f64>),
}

impl Default for Scales {
    fn default() -> Self {
        Scales::Named("normalized".into())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSection {
    pub factors: Vec<Factor>,
    #[serde(default)]
    pub scales: Scales,
}

/// One holonomy element: a constant group expression or per-factor group
/// coordinates (`[w, x, y, z]` for `su2`, `[cos, sin]` for `u1`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HolonomyEntry {
    Expr(String),
    Coords(Vec<Vec<f64>>),
}

/// A number, or a constant scalar expression such as `"4*pi^3"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Value(f64),
    Expr(String),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cs: Option<Number>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<Number>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlattenSection {
    #[serde(default = "default_bandwidth")]
    pub bandwidth: usize,
    /// Euclidean norm of the random coefficient perturbation.
    #[serde(default)]
    pub perturbation: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<Optimizer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Metric>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
}

fn default_bandwidth() -> usize {
    4
}

impl Default for FlattenSection {
    fn default() -> Self {
        FlattenSection {
            bandwidth: default_bandwidth(),
            perturbation: 0.0,
            seed: 0,
            optimizer: None,
            metric: None,
            max_iters: None,
        }
    }
}

/// Seeded random fields for every conventional name not given explicitly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSection {
    pub seed: u64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
}

fn default_amplitude() -> f64 {
    0.3
}

/// The scenario file as written.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Envelope {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub group: GroupSection,
    pub dim: usize,
    pub grid: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holonomy: Option<Vec<HolonomyEntry>>,
    #[serde(default)]
    pub fields: BTreeMap<String, String>,
    #[serde(default)]
    pub checks: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<ExpectSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flatten: Option<FlattenSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random: Option<RandomSection>,
    /// `c` of a second flat reference `A₀' = c n dx₁` for invariance checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second_reference: Option<f64>,
    /// Seed of the random sample points of identity checks.
    #[serde(default)]
    pub seed: u64,
}

/// Expected values after evaluation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Expect {
    pub cs: Option<f64>,
    pub degree: Option<f64>,
}

/// A parsed, type-checked scenario whose fields satisfy the twisting law
/// of its holonomy.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub id: String,
    pub spec: LieAlgebraSpec,
    pub normalized: bool,
    pub dim: usize,
    pub grid: usize,
    /// Declared holonomy; trivial when none is given.
    pub holonomy: HolonomyData,
    pub exprs: BTreeMap<String, Expr>,
    pub fields: BTreeMap<String, Value>,
    pub checks: Vec<String>,
    pub expect: Expect,
    pub flatten: Option<FlattenSection>,
    pub second_reference: Option<f64>,
    pub seed: u64,
    pub warnings: Vec<String>,
    envelope: Envelope,
}

/// Non-identity entries allowed in `checks`.
pub const CHECKS: [&str; 6] = ["cs", "degree", "oracle", "grad", "flatten", "normalize"];

/// Names random fields are generated for.
pub const RANDOM_FIELDS: [&str; 6] = ["A", "B", "a", "u", "v", "X"];

fn json_diagnostic(e: serde_json::Error) -> Error {
    Error::Parse(Diagnostic {
        source: None,
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
        expected: Vec::new(),
    })
}

fn scenario_error(message: impl Into<String>) -> Error {
    Error::Scenario(message.into())
}

fn spec_of(group: &GroupSection) -> Result<(LieAlgebraSpec, bool)> {
    let algebra = Algebra::new(&group.factors)?;
    match &group.scales {
        Scales::Named(n) if n == "normalized" => Ok((LieAlgebraSpec::normalized(algebra), true)),
        Scales::Named(n) if n == "euclidean" => Ok((LieAlgebraSpec::euclidean(algebra), false)),
        Scales::Named(n) => Err(scenario_error(format!(
            "unknown scales {n:?}; expected \"normalized\", \"euclidean\" or a list"
        ))),
        Scales::Values(v) => {
            let normalized = LieAlgebraSpec::normalized(algebra);
            let spec = LieAlgebraSpec::new(algebra, v)?;
            Ok((spec, spec == normalized))
        }
    }
}

fn constant_number(n: &Number, env: &Env, source: &str) -> Result<f64> {
    match n {
        Number::Value(v) => Ok(*v),
        Number::Expr(text) => {
            let e = parse_expr(text).map_err(|d| Error::Parse(d.within(source)))?;
            match env.eval(&e).map_err(|d| Error::Parse(d.within(source)))? {
                Value::Scalar(s) => s
                    .as_const()
                    .ok_or_else(|| scenario_error(format!("{source} must be a constant"))),
                v => Err(scenario_error(format!("{source} must be a scalar, found {v}"))),
            }
        }
    }
}

fn holonomy_element(entry: &HolonomyEntry, env: &Env, source: &str) -> Result<GroupElement> {
    match entry {
        HolonomyEntry::Coords(lists) => GroupElement::from_factor_coords(env.algebra, lists),
        HolonomyEntry::Expr(text) => {
            let e = parse_expr(text).map_err(|d| Error::Parse(d.within(source)))?;
            let Value::Group(g) = env.eval(&e).map_err(|d| Error::Parse(d.within(source)))? else {
                return Err(scenario_error(format!("{source} must be a group element")));
            };
            let p: Vec<f64> = (0..env.dim).map(|a| 0.1 + 0.7 * a as f64).collect();
            let q: Vec<f64> = (0..env.dim).map(|a| 2.9 + 0.4 * a as f64).collect();
            let (gp, gq) = (g.eval(env.algebra, &p).value(), g.eval(env.algebra, &q).value());
            if gp.distance(&gq) > 1e-14 {
                return Err(scenario_error(format!("{source} must be constant")));
            }
            Ok(gp)
        }
    }
}

/// The field as a twisted object, for validation.
fn twisted(value: &Value, algebra: Algebra, dim: usize) -> Result<TwistedField> {
    Ok(match value {
        Value::Scalar(s) => TwistedField::Real(
            FormExpr {
                degree: 0,
                space: ValueSpace::Real,
                terms: vec![(0, vec![s.clone()])],
            }
            .to_vform(dim)?,
        ),
        Value::Algebra(x) => TwistedField::algebra(x, dim),
        Value::Group(g) => TwistedField::Group(GroupField::new(g.clone(), algebra, dim)?),
        Value::Form(f) if f.space == ValueSpace::Real => TwistedField::Real(f.to_vform(dim)?),
        Value::Form(f) => TwistedField::Lie(f.to_vform(dim)?),
    })
}

fn random_field(name: &str, h: &HolonomyData, dim: usize, amp: f64, rng: &mut ChaCha8Rng) -> Result<Value> {
    let alg = h.algebra();
    let recipe = |rng: &mut ChaCha8Rng| random_recipe(rng, alg, dim, 3, 2, amp);
    Ok(match name {
        "A" | "B" | "a" => {
            let recipes: Vec<_> = (0..dim).map(|_| recipe(rng)).collect();
            Value::Form(make_twisted_gauge_field(h, &recipes)?)
        }
        "u" | "v" => Value::Group(GroupExpr::Qexp(make_twisted_algebra_field(h, &recipe(rng))?)),
        "X" => Value::Algebra(make_twisted_algebra_field(h, &recipe(rng))?),
        _ => unreachable!("only conventional names are generated"),
    })
}

impl Scenario {
    /// Parses a scenario file. The result is a complete scenario or an
    /// error; JSON and expression errors carry positions.
    pub fn parse(text: &str) -> Result<Scenario> {
        let envelope: Envelope = serde_json::from_str(text).map_err(json_diagnostic)?;
        Self::from_envelope(envelope)
    }

    pub fn from_envelope(envelope: Envelope) -> Result<Scenario> {
        let (spec, normalized) = spec_of(&envelope.group)?;
        let dim = envelope.dim;
        if !(1..=crate::jet::MAX_DIM).contains(&dim) {
            return Err(scenario_error(format!("dim must be in 1..={}, got {dim}", crate::jet::MAX_DIM)));
        }
        if envelope.grid < 2 {
            return Err(scenario_error("grid must be at least 2"));
        }
        let env = Env {
            algebra: spec.algebra,
            dim,
        };
        let holonomy = match &envelope.holonomy {
            None => HolonomyData::trivial(spec.algebra, dim),
            Some(entries) => {
                if entries.len() != dim {
                    return Err(scenario_error(format!(
                        "holonomy needs {dim} elements, one per axis, got {}",
                        entries.len()
                    )));
                }
                let elements = entries
                    .iter()
                    .enumerate()
                    .map(|(a, e)| holonomy_element(e, &env, &format!("holonomy[{a}]")))
                    .collect::<Result<Vec<_>>>()?;
                HolonomyData::new(elements)?
            }
        };

        let mut exprs = BTreeMap::new();
        let mut fields = BTreeMap::new();
        let mut warnings = Vec::new();
        for (name, text) in &envelope.fields {
            let source = format!("fields.{name}");
            let e = parse_expr(text).map_err(|d| Error::Parse(d.within(&source)))?;
            let v = env.eval(&e).map_err(|d| Error::Parse(d.within(&source)))?;
            warnings.extend(radius_warnings(&e).into_iter().map(|w| format!("{source}:{w}")));
            exprs.insert(name.clone(), e);
            fields.insert(name.clone(), v);
        }
        if let Some(r) = &envelope.random {
            let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
            for name in RANDOM_FIELDS {
                // drawn unconditionally so explicit fields do not shift the stream
                let v = random_field(name, &holonomy, dim, r.amplitude, &mut rng)?;
                fields.entry(name.to_string()).or_insert(v);
            }
        }
        for (name, v) in &fields {
            let residual = validate_twisting(&twisted(v, spec.algebra, dim)?, &holonomy);
            if !(residual <= TWIST_TOLERANCE) {
                return Err(scenario_error(format!(
                    "field {name} violates the twisting law of the holonomy: boundary residual {residual:.3e} exceeds {TWIST_TOLERANCE:.0e}"
                )));
            }
        }

        for c in &envelope.checks {
            if !CHECKS.contains(&c.as_str()) && crate::identity::Identity::from_name(c).is_err() {
                return Err(scenario_error(format!(
                    "unknown check {c:?}; expected an identity name or one of {CHECKS:?}"
                )));
            }
        }
        let expect = match &envelope.expect {
            None => Expect::default(),
            Some(x) => Expect {
                cs: x.cs.as_ref().map(|n| constant_number(n, &env, "expect.cs")).transpose()?,
                degree: x
                    .degree
                    .as_ref()
                    .map(|n| constant_number(n, &env, "expect.degree"))
                    .transpose()?,
            },
        };
        Ok(Scenario {
            id: envelope.id.clone().unwrap_or_else(|| "scenario".into()),
            spec,
            normalized,
            dim,
            grid: envelope.grid,
            holonomy,
            exprs,
            fields,
            checks: envelope.checks.clone(),
            expect,
            flatten: envelope.flatten.clone(),
            second_reference: envelope.second_reference,
            seed: envelope.seed,
            warnings,
            envelope,
        })
    }

    /// Canonical text: the envelope with every expression pretty-printed.
    pub fn to_text(&self) -> String {
        let mut env = self.envelope.clone();
        for (name, e) in &self.exprs {
            env.fields.insert(name.clone(), e.to_string());
        }
        serde_json::to_string_pretty(&env).expect("serializable") + "\n"
    }

    /// The envelope with expressions replaced by their trees; two
    /// scenarios are structurally identical when these agree.
    pub fn structure(&self) -> (Envelope, &BTreeMap<String, Expr>) {
        let mut env = self.envelope.clone();
        env.fields.clear();
        (env, &self.exprs)
    }

    pub fn field(&self, name: &str) -> Option<&Value> {
        self.fields.get(name)
    }

    /// Field `name` as a connection.
    pub fn connection(&self, name: &str) -> Result<Option<GaugeField>> {
        let Some(v) = self.fields.get(name) else {
            return Ok(None);
        };
        let f = v.as_connection(self.spec.algebra).ok_or_else(|| {
            scenario_error(format!("field {name} must be an algebra-valued 1-form, found {v}"))
        })?;
        Ok(Some(GaugeField::from_expr(&f, self.dim)?))
    }

    pub fn group_field(&self, name: &str) -> Result<Option<GroupField>> {
        match self.fields.get(name) {
            None => Ok(None),
            Some(Value::Group(g)) => Ok(Some(GroupField::new(g.clone(), self.spec.algebra, self.dim)?)),
            Some(v) => Err(scenario_error(format!("field {name} must be a group element, found {v}"))),
        }
    }

    pub fn algebra_field(&self, name: &str) -> Result<Option<crate::forms::AlgebraExpr>> {
        match self.fields.get(name) {
            None => Ok(None),
            Some(Value::Algebra(x)) => Ok(Some(x.clone())),
            Some(v) => Err(scenario_error(format!("field {name} must be an algebra element, found {v}"))),
        }
    }

    /// The reference connection `A0`, zero when absent.
    pub fn reference(&self) -> Result<GaugeField> {
        Ok(self
            .connection("A0")?
            .unwrap_or_else(|| GaugeField::zero(self.spec.algebra, self.dim)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const U1: &str = r#"{
        "id": "u1",
        "group": {"factors": ["u1"], "scales": [1.0]},
        "dim": 3, "grid": 16,
        "fields": {"A": "i*sin(x)*dy + i*cos(x)/2*dz"},
        "checks": ["cs"],
        "expect": {"cs": "4*pi^3"}
    }"#;

    #[test]
    fn parses_and_resolves() {
        let s = Scenario::parse(U1).unwrap();
        assert_eq!(s.id, "u1");
        assert_eq!(s.spec.scales(), [1.0]);
        assert!((s.expect.cs.unwrap() - 4.0 * std::f64::consts::PI.powi(3)).abs() < 1e-12);
        assert!(s.connection("A").unwrap().is_some());
        assert!(s.holonomy.is_trivial());
    }

    #[test]
    fn canonical_text_reparses_to_the_same_structure() {
        let s = Scenario::parse(U1).unwrap();
        let t = Scenario::parse(&s.to_text()).unwrap();
        assert_eq!(s.structure(), t.structure());
        assert_eq!(t.to_text(), s.to_text());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = U1.replace("\"grid\"", "\"grdi\": 3, \"grid\"");
        match Scenario::parse(&bad) {
            Err(Error::Parse(d)) => assert!(d.message.contains("unknown field") && d.line > 0),
            other => panic!("{other:?}"),
        }
        let bad = U1.replace("\"scales\": [1.0]", "\"scales\": [1.0], \"extra\": 1");
        assert!(Scenario::parse(&bad).is_err());
    }

    #[test]
    fn unknown_checks_are_rejected() {
        let bad = U1.replace("[\"cs\"]", "[\"cs\", \"bianchi\", \"nonsense\"]");
        assert!(matches!(Scenario::parse(&bad), Err(Error::Scenario(m)) if m.contains("nonsense")));
    }

    #[test]
    fn expression_errors_name_their_field() {
        let bad = U1.replace("i*sin(x)*dy", "i*sin(x)*dy +");
        match Scenario::parse(&bad) {
            Err(Error::Parse(d)) => assert_eq!(d.source.as_deref(), Some("fields.A")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_periodic_fields_are_rejected() {
        let bad = U1.replace("i*sin(x)*dy", "i*x*dy");
        assert!(matches!(Scenario::parse(&bad), Err(Error::Scenario(m)) if m.contains("twisting")));
    }

    #[test]
    fn twisted_holonomy_from_expressions() {
        let text = r#"{
            "group": {"factors": ["su2"]}, "dim": 3, "grid": 8,
            "holonomy": ["qexp([pi/2, 0, 0])", "id", [[1, 0, 0, 0]]],
            "fields": {"u": "qexp([sin(y), cos(x/2), sin(x/2)])"}
        }"#;
        let s = Scenario::parse(text).unwrap();
        assert!(!s.holonomy.is_trivial() && s.normalized);
        // the same field is not periodic without the holonomy
        let untwisted = text.replace("\"qexp([pi/2, 0, 0])\"", "\"id\"");
        assert!(Scenario::parse(&untwisted).is_err());
    }

    #[test]
    fn random_fields_fill_conventional_names() {
        let text = r#"{
            "group": {"factors": ["su2"]}, "dim": 3, "grid": 8,
            "holonomy": ["qexp([pi/2, 0, 0])", "id", "id"],
            "random": {"seed": 4}
        }"#;
        let s = Scenario::parse(text).unwrap();
        for name in RANDOM_FIELDS {
            assert!(s.field(name).is_some(), "{name}");
        }
        assert!(s.connection("A").unwrap().is_some() && s.group_field("u").unwrap().is_some());
    }
}
