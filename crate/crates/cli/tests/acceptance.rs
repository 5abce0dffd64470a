//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runtime budgets are part of each criterion.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::{Command as Process, ExitCode};
use std::time::{Duration, Instant};

use flatcs::gauge::{cs_finite_difference, cs_gradient_pairing, orbit_direction, CSContext};
use flatcs::group_field::{
    brouwer_degree_oracle, default_regular_value, degree_one_bump_map, degree_trivial, normalization,
    normalization_constant, theta_on_basis, GroupExpr, GroupField,
};
use flatcs::identity::{Identity, IdentityInputs};
use flatcs::lie::{Algebra, LieAlgebraSpec};
use flatcs::scenario::{run, Command, Report, RunOptions, Scenario};

type Outcome = Result<String, String>;

fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../scenarios/{name}.json"))
}

fn scenario(name: &str) -> Scenario {
    Scenario::parse(&std::fs::read_to_string(scenario_path(name)).unwrap()).unwrap()
}

fn require(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn failed_records(report: &Report) -> String {
    let bad: Vec<_> = report
        .records
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("{} residual={:?}", r.name, r.residual))
        .collect();
    bad.join(", ")
}

fn maurer_cartan_value() -> Outcome {
    let v = theta_on_basis(1.0).map_err(|e| e.to_string())?;
    require((v + 2.0).abs() <= 1e-14, format!("Theta(i,j,k) = {v:e} at lambda = 1"))
}

fn normalization_derivation() -> Outcome {
    let n = normalization();
    let vol = (n.volume - 2.0 * PI * PI).abs();
    let theta = (n.theta_integral + 4.0 * PI * PI).abs();
    let lambda = (normalization_constant() - 1.0 / (4.0 * PI * PI)).abs();
    let ratio = (n.lambda + 1.0 / n.theta_integral).abs();
    require(
        vol <= 1e-9 && theta <= 1e-9 && lambda <= 1e-15 && ratio <= 1e-15,
        format!("|vol - 2pi^2| = {vol:.1e}, |int Theta + 4pi^2| = {theta:.1e}, |lambda* - 1/(4pi^2)| = {lambda:.1e}"),
    )
}

fn identity_suite() -> Outcome {
    let cases = [
        (Identity::AlphaExteriorDerivative, 4),
        (Identity::CsChernWeil, 4),
        (Identity::GaugeChange, 3),
        (Identity::FlatGaugeChange, 3),
        (Identity::Bianchi, 3),
        (Identity::McCocycle, 3),
        (Identity::ThetaBiInvariance, 3),
    ];
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for seed in 1..=5u64 {
        for dim in [3, 4] {
            let inputs = IdentityInputs::random(Algebra::su2(), dim, seed);
            for (id, d) in cases.iter().filter(|c| c.1 == dim) {
                let r = inputs.verify(*id).map_err(|e| e.to_string())?;
                worst = worst.max(r.residual);
                if !(r.residual < 1e-8) {
                    failures.push(format!("{} on T^{d} seed {seed}: {:e}", r.name, r.residual));
                }
            }
        }
    }
    require(
        failures.is_empty(),
        if failures.is_empty() {
            format!("7 identities x 5 seeds, max residual {worst:.1e}")
        } else {
            failures.join("; ")
        },
    )
}

fn gradient_law() -> Outcome {
    let spec = LieAlgebraSpec::normalized(Algebra::su2());
    let (mut worst_fd, mut worst_orbit) = (0.0f64, 0.0f64);
    for seed in 1..=10u64 {
        let inputs = IdentityInputs::random(Algebra::su2(), 3, 100 + seed);
        let (a, dir, x) = (
            inputs.connection.unwrap(),
            inputs.direction.unwrap(),
            inputs.generator.unwrap(),
        );
        let ctx = CSContext::trivial(spec, 3, 16);
        let err = |e: flatcs::Error| e.to_string();
        let pairing = cs_gradient_pairing(&a, &dir, &ctx).map_err(err)?;
        let fd = cs_finite_difference(&a, &dir, &ctx, 1e-4).map_err(err)?;
        worst_fd = worst_fd.max((pairing - fd).abs());
        let orbit = cs_gradient_pairing(&a, &orbit_direction(&a, &x).map_err(err)?, &ctx).map_err(err)?;
        worst_orbit = worst_orbit.max(orbit.abs());
    }
    require(
        worst_fd < 1e-6 && worst_orbit < 1e-8,
        format!("10 pairs: max |pairing - FD| = {worst_fd:.1e}, max |orbit pairing| = {worst_orbit:.1e}"),
    )
}

fn abelian_cs_value() -> Outcome {
    let opts = RunOptions { grid: Some(16), ..RunOptions::default() };
    let report = run(Command::Cs, &scenario("u1_cs"), &opts).map_err(|e| e.to_string())?;
    let cs = report.records[0].value.unwrap_or(f64::NAN);
    let diff = (cs - 4.0 * PI.powi(3)).abs();
    require(diff <= 1e-9, format!("CS = {cs:.12} at N = 16, |CS - 4pi^3| = {diff:.1e}"))
}

fn degree_integrality() -> Outcome {
    let spec = LieAlgebraSpec::normalized(Algebra::su2());
    let q = default_regular_value();
    let mut parts = Vec::new();
    let mut ok = true;
    for m in -2..=3 {
        let u = GroupField::new(GroupExpr::pow(degree_one_bump_map(), m), Algebra::su2(), 3)
            .map_err(|e| e.to_string())?;
        let d = degree_trivial(&u, &spec, 32).map_err(|e| e.to_string())?;
        let oracle = brouwer_degree_oracle(&u, &q, 32).map_err(|e| e.to_string())?.degree;
        let err = (d - m as f64).abs();
        ok &= err <= 1e-6 && oracle == m as i64;
        parts.push(format!("m={m}: {err:.0e}/oracle {oracle}"));
    }
    require(ok, format!("N = 32, |deg - m| and oracle: {}", parts.join(", ")))
}

fn gauge_change() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for name in ["gauge_change_trivial", "gauge_change_twisted"] {
        let report = run(Command::Degree, &scenario(name), &RunOptions::default()).map_err(|e| e.to_string())?;
        let find = |n: &str| report.records.iter().find(|r| r.name == n).and_then(|r| r.residual);
        let expected = [
            "gauge_change",
            "gauge_change_independent_of_connection",
            "gauge_change_independent_of_reference",
        ];
        for n in expected {
            ok &= find(n).is_some();
        }
        ok &= report.pass;
        if !report.pass {
            parts.push(format!("{name} failed: {}", failed_records(&report)));
        } else {
            parts.push(format!(
                "{name} (N = {}): {:.1e}, across A {:.1e}, across A0 {:.1e}",
                report.quadrature.grid,
                find(expected[0]).unwrap_or(f64::NAN),
                find(expected[1]).unwrap_or(f64::NAN),
                find(expected[2]).unwrap_or(f64::NAN),
            ));
        }
    }
    require(ok, parts.join("; "))
}

fn flat_connection_finder() -> Outcome {
    let s = scenario("flatten_twisted");
    let section = s.flatten.clone().unwrap_or_default();
    let report = run(Command::Flatten, &s, &RunOptions::default()).map_err(|e| e.to_string())?;
    let outcome = report.finder.as_ref().ok_or("no finder outcome")?;
    require(
        section.bandwidth == 4
            && section.perturbation == 1e-2
            && outcome.residual < 1e-10
            && outcome.iterations <= 10_000
            && report.pass,
        format!(
            "bandwidth {}, perturbation {:e}: R = {:.2e} after {} iterations",
            section.bandwidth, section.perturbation, outcome.residual, outcome.iterations
        ),
    )
}

fn determinism() -> Outcome {
    let path = scenario_path("verify_t4");
    let verify = |threads: &str| {
        Process::new(env!("CARGO_BIN_EXE_flatcs"))
            .args(["verify", "--scenario", path.to_str().unwrap()])
            .env("FLATCS_THREADS", threads)
            .output()
            .map_err(|e| e.to_string())
    };
    let (a, b) = (verify("1")?, verify("3")?);
    require(
        a.status.success() && !a.stdout.is_empty() && a.stdout == b.stdout,
        format!("FLATCS_THREADS=1 vs 3: {} vs {} bytes, identical: {}", a.stdout.len(), b.stdout.len(), a.stdout == b.stdout),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, Duration); 9] = [
        ("Maurer-Cartan value", maurer_cartan_value, Duration::from_secs(1)),
        ("normalization derivation", normalization_derivation, Duration::from_secs(30)),
        ("identity residual suite", identity_suite, Duration::from_secs(60)),
        ("gradient law", gradient_law, Duration::from_secs(60)),
        ("abelian CS value", abelian_cs_value, Duration::from_secs(10)),
        ("degree integrality and oracle", degree_integrality, Duration::from_secs(120)),
        ("gauge change equals degree", gauge_change, Duration::from_secs(120)),
        ("flat-connection finder", flat_connection_finder, Duration::from_secs(120)),
        ("determinism across thread counts", determinism, Duration::from_secs(120)),
    ];
    let mut all = true;
    for (n, (name, check, budget)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let (pass, detail) = match outcome {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        all &= pass;
        let timing = format!("{:.1}s of {}s", elapsed.as_secs_f64(), budget.as_secs());
        let over = if in_time { "" } else { ", over budget" };
        println!(
            "criterion {}: {} {name}: {detail} [{timing}{over}]",
            n + 1,
            if pass { "PASS" } else { "FAIL" }
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
