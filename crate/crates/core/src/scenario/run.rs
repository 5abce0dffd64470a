use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::report::{NormalizationInfo, Quadrature, Record, Report};
use super::Scenario;
use crate::error::{Error, Result};
use crate::flat::{
    degree_flat, find_flat_connection, gauge_change_vs_degree, validate_twisting, FinderOptions, FinderOutcome,
    FlatContext, FourierConnection, GaugeDegreeCheck, TwistedField, TWIST_TOLERANCE,
};
use crate::gauge::{cs_finite_difference, cs_functional, cs_gauge_change, cs_gradient_pairing, orbit_direction, CSContext};
use crate::group_field::{
    brouwer_degree_oracle, default_regular_value, degree_trivial, normalization, theta_on_basis, GroupField,
};
use crate::identity::{Identity, IdentityInputs};
use crate::lie::GroupElement;

/// Step of the central difference in the gradient check. CS is cubic in
/// the step, so the truncation error is `O(t²)` with a small constant.
pub const GRADIENT_STEP: f64 = 1e-4;

pub const CS_TOLERANCE: f64 = 1e-9;
pub const DEGREE_TOLERANCE: f64 = 1e-6;
pub const GRADIENT_TOLERANCE: f64 = 1e-6;
pub const ORBIT_TOLERANCE: f64 = 1e-8;
pub const REFERENCE_TOLERANCE: f64 = 1e-8;
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;
pub const THETA_BASIS_TOLERANCE: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Verify,
    Cs,
    Degree,
    Grad,
    Flatten,
    Normalize,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Verify,
        Command::Cs,
        Command::Degree,
        Command::Grad,
        Command::Flatten,
        Command::Normalize,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Cs => "cs",
            Command::Degree => "degree",
            Command::Grad => "grad",
            Command::Flatten => "flatten",
            Command::Normalize => "normalize",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Command> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Scenario(format!("unknown command {s:?}")))
    }
}

/// Command-line overrides.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub grid: Option<usize>,
    /// Replaces the tolerance of every value check.
    pub tol: Option<f64>,
    pub oracle: bool,
    pub regular_value: Option<GroupElement>,
    pub bandwidth: Option<usize>,
}

fn require<T>(field: Option<T>, name: &str, command: Command) -> Result<T> {
    field.ok_or_else(|| Error::Scenario(format!("{command} needs field {name}")))
}

struct Runner<'a> {
    s: &'a Scenario,
    opts: &'a RunOptions,
    grid: usize,
    records: Vec<Record>,
}

impl Runner<'_> {
    fn tol(&self, default: f64) -> f64 {
        self.opts.tol.unwrap_or(default)
    }

    fn cs_context(&self) -> Result<CSContext> {
        Ok(CSContext::new(self.s.spec, self.s.reference()?, self.grid))
    }

    fn flat_context(&self) -> Result<FlatContext> {
        Ok(FlatContext {
            holonomy: self.s.holonomy.clone(),
            cs: self.cs_context()?,
        })
    }

    fn verify(&mut self) -> Result<()> {
        let s = self.s;
        for (name, v) in &s.fields {
            let f = match v {
                super::Value::Group(g) => TwistedField::Group(GroupField::new(g.clone(), s.spec.algebra, s.dim)?),
                super::Value::Algebra(x) => TwistedField::algebra(x, s.dim),
                super::Value::Form(f) if f.space != crate::forms::ValueSpace::Real => TwistedField::Lie(f.to_vform(s.dim)?),
                super::Value::Form(f) => TwistedField::Real(f.to_vform(s.dim)?),
                super::Value::Scalar(_) => continue,
            };
            let r = validate_twisting(&f, &s.holonomy);
            self.records.push(Record::check(format!("twisting:{name}"), None, r, TWIST_TOLERANCE));
        }
        let inputs = IdentityInputs {
            spec: s.spec,
            dim: s.dim,
            connection: s.connection("A")?,
            reference: Some(s.reference()?),
            direction: s.connection("a")?,
            gauge: s.group_field("u")?,
            second_gauge: s.group_field("v")?,
            generator: s.algebra_field("X")?,
            seed: s.seed,
        };
        let listed: Vec<Identity> = s.checks.iter().filter_map(|c| Identity::from_name(c).ok()).collect();
        let ids: Vec<Identity> = if listed.is_empty() {
            let present = |n: &str| n == "A0" || s.fields.contains_key(n);
            Identity::ALL
                .into_iter()
                .filter(|id| id.dims().contains(&s.dim) && id.needs().iter().all(|n| present(n)))
                .collect()
        } else {
            listed
        };
        for id in ids {
            let mut r: Record = inputs.verify(id)?.into();
            if let Some(t) = self.opts.tol {
                r.tolerance = Some(t);
                r.pass = r.residual.is_some_and(|x| x <= t);
            }
            self.records.push(r);
        }
        Ok(())
    }

    fn cs(&mut self) -> Result<()> {
        let a = require(self.s.connection("A")?, "A", Command::Cs)?;
        let value = cs_functional(&a, &self.cs_context()?)?;
        self.records.push(match self.s.expect.cs {
            Some(e) => Record::check("cs", Some(value), (value - e).abs(), self.tol(CS_TOLERANCE)),
            None => Record::value("cs", value),
        });
        Ok(())
    }

    fn degree_record(&self, degree: f64) -> Record {
        let tol = self.tol(DEGREE_TOLERANCE);
        match self.s.expect.degree {
            Some(e) => Record::check("degree", Some(degree), (degree - e).abs(), tol),
            None if self.s.normalized => {
                Record::check("degree", Some(degree), (degree - degree.round()).abs(), tol)
                    .with_note("distance to the nearest integer")
            }
            None => Record::value("degree", degree).with_note("not integral: the inner product is not normalized"),
        }
    }

    fn degree(&mut self) -> Result<()> {
        let s = self.s;
        let u = require(s.group_field("u")?, "u", Command::Degree)?;
        let ctx = self.flat_context()?;
        let a = if s.dim == 3 { s.connection("A")? } else { None };
        let check: Option<GaugeDegreeCheck> = a.as_ref().map(|a| gauge_change_vs_degree(a, &u, &ctx)).transpose()?;
        let degree = match &check {
            Some(c) => c.degree,
            None if s.holonomy.is_trivial() && !s.fields.contains_key("A0") => degree_trivial(&u, &s.spec, self.grid)?,
            None => degree_flat(&u, &ctx)?.degree,
        };
        self.records.push(self.degree_record(degree));

        if self.opts.oracle || s.checks.iter().any(|c| c == "oracle") {
            let q = self.opts.regular_value.unwrap_or_else(default_regular_value);
            let o = brouwer_degree_oracle(&u, &q, self.grid)?;
            self.records.push(
                Record::check("oracle", Some(o.degree as f64), (degree - o.degree as f64).abs(), self.tol(DEGREE_TOLERANCE))
                    .with_note(format!("{} preimages", o.preimages.len())),
            );
        }

        let (Some(a), Some(check)) = (a, check) else {
            return Ok(());
        };
        let tol = self.tol(DEGREE_TOLERANCE);
        self.records
            .push(Record::check("gauge_change", Some(check.cs_change), check.difference, tol));
        self.records.push(Record::check(
            "flat_gauge_change_pointwise",
            None,
            check.pointwise_residual,
            self.tol(Identity::FlatGaugeChange.tolerance()),
        ));
        if let Some(b) = s.connection("B")? {
            let other = cs_gauge_change(&u, &b, &ctx.cs)?;
            self.records.push(Record::check(
                "gauge_change_independent_of_connection",
                Some(other),
                (other - check.cs_change).abs(),
                tol,
            ));
        }
        if let Some(c) = s.second_reference {
            let ctx2 = FlatContext::constant_reference(s.holonomy.clone(), c, self.grid);
            let other = gauge_change_vs_degree(&a, &u, &ctx2)?;
            let tol = self.tol(REFERENCE_TOLERANCE);
            self.records.push(Record::check(
                "gauge_change_independent_of_reference",
                Some(other.cs_change),
                (other.cs_change - check.cs_change).abs(),
                tol,
            ));
            self.records.push(Record::check(
                "degree_independent_of_reference",
                Some(other.degree),
                (other.degree - check.degree).abs(),
                tol,
            ));
        }
        Ok(())
    }

    fn grad(&mut self) -> Result<()> {
        let a = require(self.s.connection("A")?, "A", Command::Grad)?;
        let ctx = self.cs_context()?;
        if let Some(dir) = self.s.connection("a")? {
            let pairing = cs_gradient_pairing(&a, &dir, &ctx)?;
            let fd = cs_finite_difference(&a, &dir, &ctx, GRADIENT_STEP)?;
            self.records.push(Record::check(
                "gradient_law",
                Some(pairing),
                (pairing - fd).abs(),
                self.tol(GRADIENT_TOLERANCE),
            ));
        }
        if let Some(x) = self.s.algebra_field("X")? {
            let pairing = cs_gradient_pairing(&a, &orbit_direction(&a, &x)?, &ctx)?;
            self.records
                .push(Record::check("orbit_pairing", Some(pairing), pairing.abs(), self.tol(ORBIT_TOLERANCE)));
        }
        if self.records.is_empty() {
            return Err(Error::Scenario("grad needs field a or X".into()));
        }
        Ok(())
    }

    fn flatten(&mut self) -> Result<FinderOutcome> {
        let s = self.s;
        let section = s.flatten.clone().unwrap_or_default();
        let bandwidth = self.opts.bandwidth.unwrap_or(section.bandwidth);
        let mut init = match s.connection("A")? {
            Some(a) => FourierConnection::from_gauge_field(&a, &s.holonomy, bandwidth)?,
            None => FourierConnection::zero(&s.holonomy, bandwidth)?,
        };
        if section.perturbation > 0.0 {
            init.perturb(&mut ChaCha8Rng::seed_from_u64(section.seed), section.perturbation);
        }
        let defaults = FinderOptions::default();
        let opts = FinderOptions {
            optimizer: section.optimizer.unwrap_or(defaults.optimizer),
            metric: section.metric.unwrap_or(defaults.metric),
            max_iters: section.max_iters.unwrap_or(defaults.max_iters),
            tol: self.tol(defaults.tol),
            ..defaults
        };
        self.records.push(Record::value("initial_residual", init.residual()));
        match find_flat_connection(&init, &opts) {
            Ok(out) => {
                self.records.push(
                    Record::check("flatness", Some(out.residual), out.residual, opts.tol)
                        .with_note(format!("{} iterations", out.iterations)),
                );
                Ok(out)
            }
            Err(Error::NonConvergence {
                iterations, residual, ..
            }) => {
                self.records.push(
                    Record::check("flatness", Some(residual), residual, opts.tol)
                        .with_note(format!("no convergence after {iterations} iterations")),
                );
                Err(Error::NonConvergence {
                    iterations,
                    residual,
                    iterate: Vec::new(),
                })
            }
            Err(e) => Err(e),
        }
    }
}

/// Runs `command` on a scenario. Failed checks are records with
/// `pass = false`; errors mean the command could not be evaluated.
pub fn run(command: Command, scenario: &Scenario, opts: &RunOptions) -> Result<Report> {
    if command == Command::Normalize {
        let mut report = run_normalize(opts);
        report.scenario = scenario.id.clone();
        report.warnings = scenario.warnings.clone();
        return Ok(report);
    }
    let grid = opts.grid.unwrap_or(scenario.grid);
    let mut runner = Runner {
        s: scenario,
        opts,
        grid,
        records: Vec::new(),
    };
    let mut finder = None;
    match command {
        Command::Verify => runner.verify()?,
        Command::Cs => runner.cs()?,
        Command::Degree => runner.degree()?,
        Command::Grad => runner.grad()?,
        Command::Flatten => match runner.flatten() {
            Ok(out) => finder = Some(out),
            Err(Error::NonConvergence { .. }) => {}
            Err(e) => return Err(e),
        },
        Command::Normalize => unreachable!(),
    }
    let pass = runner.records.iter().all(|r| r.pass);
    Ok(Report {
        version: env!("CARGO_PKG_VERSION"),
        scenario: scenario.id.clone(),
        command: command.to_string(),
        quadrature: Quadrature {
            grid,
            summation: "neumaier",
        },
        normalization: Some(NormalizationInfo::new(&scenario.spec, scenario.normalized)),
        records: runner.records,
        warnings: scenario.warnings.clone(),
        pass,
        finder,
    })
}

/// The normalization derivation: `vol SU(2)`, `∫Θ` at `λ = 1`, `λ*` and
/// `Θ(i, j, k)`. Needs no scenario.
pub fn run_normalize(opts: &RunOptions) -> Report {
    let n = normalization();
    let tol = |d: f64| opts.tol.unwrap_or(d);
    let theta = theta_on_basis(1.0).expect("positive scale");
    let records = vec![
        Record::check("haar_volume", Some(n.volume), (n.volume - 2.0 * PI * PI).abs(), tol(NORMALIZATION_TOLERANCE)),
        Record::check(
            "theta_integral",
            Some(n.theta_integral),
            (n.theta_integral + 4.0 * PI * PI).abs(),
            tol(NORMALIZATION_TOLERANCE),
        ),
        Record::check(
            "lambda_star",
            Some(n.lambda),
            (n.lambda - 1.0 / (4.0 * PI * PI)).abs(),
            tol(NORMALIZATION_TOLERANCE),
        ),
        Record::check("theta_basis", Some(theta), (theta + 2.0).abs(), tol(THETA_BASIS_TOLERANCE)),
    ];
    Report {
        version: env!("CARGO_PKG_VERSION"),
        scenario: "none".into(),
        command: Command::Normalize.to_string(),
        quadrature: Quadrature {
            grid: crate::group_field::HAAR_NODES,
            summation: "neumaier",
        },
        normalization: None,
        pass: records.iter().all(|r| r.pass),
        records,
        warnings: Vec::new(),
        finder: None,
    }
}
