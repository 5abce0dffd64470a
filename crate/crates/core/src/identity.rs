//! Pointwise residual checks of the exact local identities behind the
//! Chern-Simons machinery.
//!
//! Every identity is evaluated at the `8^n` grid points plus 100 seeded
//! random points. All coordinate frames are compared at once, since a form
//! is determined by its components. The reduction is a maximum, so the
//! result does not depend on evaluation order.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::grid_point;
use crate::forms::{AlgebraExpr, FormExpr, JetForm, Pairing};
use crate::gauge::{
    alpha_at, chern_weil_at, cs_at, cs_transgression_at, curvature_at, gauge_act_at, CSContext, GaugeField,
};
use crate::group_field::{mc_three_form_at, GroupField, GroupJet};
use crate::lie::{Algebra, LieAlgebraSpec};

/// Grid resolution of identity sampling.
pub const SAMPLE_GRID: usize = 8;
/// Random points added to the grid.
pub const SAMPLE_RANDOM: usize = 100;
/// Step of the central difference in the generator check.
pub const GENERATOR_STEP: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Identity {
    /// `d α(A) = ⟨F ∧ F⟩`.
    AlphaExteriorDerivative,
    /// `d cs(A) = ⟨F ∧ F⟩ - ⟨F₀ ∧ F₀⟩`.
    CsChernWeil,
    /// `α(u·A) - α(A) = u*Θ + d⟨Ad_{u⁻¹}A ∧ u*θ⟩`.
    GaugeChange,
    /// `d/dt|₀ u_t⁻¹ du_t = dX` for `u_t = exp(tX)`.
    GaugeGenerator,
    /// Horizontal version of [`Identity::GaugeChange`] relative to a flat `A₀`.
    FlatGaugeChange,
    /// `dF + [A ∧ F] = 0`.
    Bianchi,
    /// `(uv)*θ = Ad_{v⁻¹} u*θ + v*θ`.
    McCocycle,
    /// `(g u h)*Θ = u*Θ` for constants `g, h`.
    ThetaBiInvariance,
    /// Closed form of `cs(A)` equals the transgression integral.
    CsTransgression,
    /// `F_{u·A} = Ad_{u⁻¹} F_A`.
    CurvatureCovariance,
    /// `F_{A+a} = F_A + d_A a + ½[a ∧ a]`.
    CurvatureVariation,
    /// `d⟨F ∧ F⟩ = 0`.
    ChernWeilClosed,
    /// `⟨F_{u·A} ∧ F_{u·A}⟩ = ⟨F_A ∧ F_A⟩`.
    ChernWeilGaugeInvariance,
    /// `d(u*Θ) = 0`.
    McClosed,
}

impl Identity {
    pub const ALL: [Identity; 14] = [
        Identity::AlphaExteriorDerivative,
        Identity::CsChernWeil,
        Identity::GaugeChange,
        Identity::GaugeGenerator,
        Identity::FlatGaugeChange,
        Identity::Bianchi,
        Identity::McCocycle,
        Identity::ThetaBiInvariance,
        Identity::CsTransgression,
        Identity::CurvatureCovariance,
        Identity::CurvatureVariation,
        Identity::ChernWeilClosed,
        Identity::ChernWeilGaugeInvariance,
        Identity::McClosed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Identity::AlphaExteriorDerivative => "alpha_exterior_derivative",
            Identity::CsChernWeil => "cs_chern_weil",
            Identity::GaugeChange => "gauge_change",
            Identity::GaugeGenerator => "gauge_generator",
            Identity::FlatGaugeChange => "flat_gauge_change",
            Identity::Bianchi => "bianchi",
            Identity::McCocycle => "mc_cocycle",
            Identity::ThetaBiInvariance => "theta_bi_invariance",
            Identity::CsTransgression => "cs_transgression",
            Identity::CurvatureCovariance => "curvature_covariance",
            Identity::CurvatureVariation => "curvature_variation",
            Identity::ChernWeilClosed => "chern_weil_closed",
            Identity::ChernWeilGaugeInvariance => "chern_weil_gauge_invariance",
            Identity::McClosed => "mc_closed",
        }
    }

    /// The formula checked, as recorded in reports.
    pub fn anchor(self) -> &'static str {
        match self {
            Identity::AlphaExteriorDerivative => "d(<A^F> - 1/6<A^[A^A]>) = <F^F>",
            Identity::CsChernWeil => "d cs(A) = <F^F> - <F0^F0>",
            Identity::GaugeChange => "alpha(u.A) - alpha(A) = u*Theta + d<Ad(u^-1)A ^ u*theta>",
            Identity::GaugeGenerator => "d/dt|0 exp(-tX) d exp(tX) = dX",
            Identity::FlatGaugeChange => {
                "cs(u.A) - cs(A) - (u*Theta)^H = d<Ad(u^-1)(A-A0) ^ (u*theta)^H>"
            }
            Identity::Bianchi => "dF + [A^F] = 0",
            Identity::McCocycle => "(uv)*theta = Ad(v^-1) u*theta + v*theta",
            Identity::ThetaBiInvariance => "(g u h)*Theta = u*Theta",
            Identity::CsTransgression => "cs(A) = 2 int_0^1 <(A-A0) ^ F(A0 + t(A-A0))> dt",
            Identity::CurvatureCovariance => "F(u.A) = Ad(u^-1) F(A)",
            Identity::CurvatureVariation => "F(A+a) = F(A) + d_A a + 1/2[a^a]",
            Identity::ChernWeilClosed => "d<F^F> = 0",
            Identity::ChernWeilGaugeInvariance => "<F(u.A)^F(u.A)> = <F^F>",
            Identity::McClosed => "d(u*Theta) = 0",
        }
    }

    pub fn tolerance(self) -> f64 {
        match self {
            Identity::GaugeGenerator => 1e-6,
            Identity::CsTransgression | Identity::ChernWeilClosed | Identity::McClosed => 1e-9,
            Identity::Bianchi | Identity::CurvatureCovariance | Identity::CurvatureVariation => 1e-10,
            _ => 1e-8,
        }
    }

    /// Torus dimensions on which the identity is non-vacuous.
    pub fn dims(self) -> std::ops::RangeInclusive<usize> {
        match self {
            Identity::AlphaExteriorDerivative
            | Identity::CsChernWeil
            | Identity::ChernWeilClosed
            | Identity::ChernWeilGaugeInvariance
            | Identity::McClosed => 4..=4,
            Identity::GaugeChange
            | Identity::FlatGaugeChange
            | Identity::ThetaBiInvariance
            | Identity::CsTransgression => 3..=4,
            Identity::Bianchi | Identity::CurvatureCovariance | Identity::CurvatureVariation => 2..=4,
            Identity::GaugeGenerator | Identity::McCocycle => 1..=4,
        }
    }

    pub fn from_name(name: &str) -> Result<Identity> {
        Identity::ALL
            .into_iter()
            .find(|i| i.name() == name)
            .ok_or_else(|| Error::UnknownIdentity(name.to_string()))
    }

    /// Names of the inputs the identity reads.
    pub fn needs(self) -> &'static [&'static str] {
        match self {
            Identity::AlphaExteriorDerivative | Identity::Bianchi | Identity::ChernWeilClosed => &["A"],
            Identity::CsChernWeil | Identity::CsTransgression => &["A", "A0"],
            Identity::GaugeChange
            | Identity::CurvatureCovariance
            | Identity::ChernWeilGaugeInvariance => &["A", "u"],
            Identity::FlatGaugeChange => &["A", "A0", "u"],
            Identity::GaugeGenerator => &["X"],
            Identity::McCocycle | Identity::ThetaBiInvariance => &["u", "v"],
            Identity::CurvatureVariation => &["A", "a"],
            Identity::McClosed => &["u"],
        }
    }
}

/// Fields an identity may read. `reference` must be flat for
/// [`Identity::FlatGaugeChange`].
#[derive(Clone, Debug)]
pub struct IdentityInputs {
    pub spec: LieAlgebraSpec,
    pub dim: usize,
    pub connection: Option<GaugeField>,
    pub reference: Option<GaugeField>,
    pub direction: Option<GaugeField>,
    pub gauge: Option<GroupField>,
    pub second_gauge: Option<GroupField>,
    pub generator: Option<AlgebraExpr>,
    pub seed: u64,
}

impl IdentityInputs {
    pub fn new(spec: LieAlgebraSpec, dim: usize) -> Self {
        IdentityInputs {
            spec,
            dim,
            connection: None,
            reference: None,
            direction: None,
            gauge: None,
            second_gauge: None,
            generator: None,
            seed: 0,
        }
    }

    /// Random trigonometric inputs; the reference is the flat constant
    /// toral field `0.3 i dx₁` so every identity applies.
    pub fn random(algebra: Algebra, dim: usize, seed: u64) -> Self {
        use crate::random::{random_algebra_expr, random_group_expr, random_lie_form};
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scales: Vec<f64> = algebra.factors().iter().map(|_| rng.gen_range(0.5..2.0)).collect();
        let spec = LieAlgebraSpec::new(algebra, &scales).expect("positive scales");
        let gauge_field = |rng: &mut ChaCha8Rng| {
            GaugeField::from_expr(&random_lie_form(rng, algebra, dim, 1), dim).expect("1-form")
        };
        let connection = gauge_field(&mut rng);
        let direction = gauge_field(&mut rng);
        let mut n = vec![0.0; algebra.dim()];
        n[0] = 0.3;
        let reference = GaugeField::from_expr(
            &FormExpr::differential(0)
                .times_algebra(&AlgebraExpr::constant(algebra, &n))
                .expect("real form"),
            dim,
        )
        .expect("1-form");
        let group = |rng: &mut ChaCha8Rng| {
            GroupField::new(random_group_expr(rng, algebra, dim), algebra, dim).expect("valid field")
        };
        let gauge = group(&mut rng);
        let second_gauge = group(&mut rng);
        let generator = random_algebra_expr(&mut rng, algebra, dim);
        IdentityInputs {
            spec,
            dim,
            connection: Some(connection),
            reference: Some(reference),
            direction: Some(direction),
            gauge: Some(gauge),
            second_gauge: Some(second_gauge),
            generator: Some(generator),
            seed,
        }
    }

    fn missing(id: Identity, what: &str) -> Error {
        Error::Scenario(format!("identity {} needs field {what}", id.name()))
    }

    fn field<'a, T>(id: Identity, f: &'a Option<T>, what: &str) -> Result<&'a T> {
        f.as_ref().ok_or_else(|| Self::missing(id, what))
    }

    /// The residual at one point.
    pub fn residual_at(&self, id: Identity, x: &[f64]) -> Result<f64> {
        let spec = self.spec;
        let inner = Pairing::Inner(spec);
        let a = || Self::field(id, &self.connection, "A").map(|a| a.at(x));
        let a0 = || Self::field(id, &self.reference, "A0").map(|a| a.at(x));
        let u = || Self::field(id, &self.gauge, "u").map(|u| u.eval(x));
        let v = || Self::field(id, &self.second_gauge, "v").map(|v| v.eval(x));
        let (lhs, rhs): (JetForm, JetForm) = match id {
            Identity::AlphaExteriorDerivative => {
                let a = a()?;
                (alpha_at(&a, &spec).d()?, chern_weil_at(&a, &spec))
            }
            Identity::CsChernWeil => {
                let (a, a0) = (a()?, a0()?);
                (
                    cs_at(&a, &a0, &spec).d()?,
                    chern_weil_at(&a, &spec).sub(&chern_weil_at(&a0, &spec))?,
                )
            }
            Identity::GaugeChange => {
                let (a, g) = (a()?, u()?);
                let theta = g.mc_form(self.dim);
                let inv = g.inverse();
                let lhs = alpha_at(&gauge_act_at(&g, &a), &spec).sub(&alpha_at(&a, &spec))?;
                let exact = a.adjoint(inv.coords(), g.order)?.wedge(inner, &theta)?.d()?;
                (lhs, mc_three_form_at(&theta, &spec).add(&exact)?)
            }
            Identity::GaugeGenerator => {
                let gen = Self::field(id, &self.generator, "X")?;
                let jets = gen.eval(x);
                let theta_at = |t: f64| {
                    let scaled: Vec<_> = jets.iter().map(|j| j.scale(t)).collect();
                    GroupJet::qexp(gen.algebra, &scaled).mc_form(self.dim)
                };
                let h = GENERATOR_STEP;
                let fd = theta_at(h).sub(&theta_at(-h))?.scale(1.0 / (2.0 * h));
                (fd, gen.to_vform(self.dim).at(x).d()?)
            }
            Identity::FlatGaugeChange => {
                let ctx = CSContext::new(
                    spec,
                    Self::field(id, &self.reference, "A0")?.clone(),
                    SAMPLE_GRID,
                );
                let a = Self::field(id, &self.connection, "A")?;
                let u = Self::field(id, &self.gauge, "u")?;
                return Ok(crate::flat::flat_gauge_change_residual_at(u, a, &ctx, x));
            }
            Identity::Bianchi => {
                let a = a()?;
                let f = curvature_at(&a);
                (f.d()?.add(&a.wedge(Pairing::Bracket, &f)?)?, zero_like(&f, 3))
            }
            Identity::McCocycle => {
                let (g, h) = (u()?, v()?);
                let hinv = h.inverse();
                let rhs = g
                    .mc_form(self.dim)
                    .adjoint(hinv.coords(), h.order)?
                    .add(&h.mc_form(self.dim))?;
                (g.mul(&h).mc_form(self.dim), rhs)
            }
            Identity::ThetaBiInvariance => {
                let (g, h) = (u()?, v()?);
                let offset: Vec<f64> = x.iter().map(|c| c + 1.0).collect();
                let left = GroupJet::constant(&h.value());
                let right = GroupJet::constant(
                    &Self::field(id, &self.second_gauge, "v")?.eval(&offset).value(),
                );
                let moved = left.mul(&g).mul(&right);
                (
                    mc_three_form_at(&moved.mc_form(self.dim), &spec),
                    mc_three_form_at(&g.mc_form(self.dim), &spec),
                )
            }
            Identity::CsTransgression => {
                let (a, a0) = (a()?, a0()?);
                (cs_at(&a, &a0, &spec), cs_transgression_at(&a, &a0, &spec, 8))
            }
            Identity::CurvatureCovariance => {
                let (a, g) = (a()?, u()?);
                let inv = g.inverse();
                (
                    curvature_at(&gauge_act_at(&g, &a)),
                    curvature_at(&a).adjoint(inv.coords(), g.order)?,
                )
            }
            Identity::CurvatureVariation => {
                let a = a()?;
                let b = Self::field(id, &self.direction, "a")?.at(x);
                let dab = b.d()?.add(&a.wedge(Pairing::Bracket, &b)?)?;
                let rhs = curvature_at(&a)
                    .add(&dab)?
                    .add(&b.wedge(Pairing::Bracket, &b)?.scale(0.5))?;
                (curvature_at(&a.add(&b)?), rhs)
            }
            Identity::ChernWeilClosed => {
                let cw = chern_weil_at(&a()?, &spec);
                let d = cw.d()?;
                let z = zero_like(&d, d.degree);
                (d, z)
            }
            Identity::ChernWeilGaugeInvariance => {
                let (a, g) = (a()?, u()?);
                (chern_weil_at(&gauge_act_at(&g, &a), &spec), chern_weil_at(&a, &spec))
            }
            Identity::McClosed => {
                let d = mc_three_form_at(&u()?.mc_form(self.dim), &spec).d()?;
                let z = zero_like(&d, 4);
                (d, z)
            }
        };
        lhs.max_diff(&rhs)
    }

    /// Largest residual over the standard sample set.
    pub fn verify(&self, id: Identity) -> Result<IdentityRecord> {
        if !id.dims().contains(&self.dim) {
            return Err(Error::DimensionMismatch {
                expected: *id.dims().start(),
                got: self.dim,
            });
        }
        // surface missing inputs before the parallel sweep
        self.residual_at(id, &vec![0.5; self.dim])?;
        let points = sample_points(self.dim, self.seed);
        let residual = max_residual(&points, |x| {
            self.residual_at(id, x).unwrap_or(f64::INFINITY)
        });
        Ok(IdentityRecord::new(id, residual))
    }
}

fn zero_like(f: &JetForm, degree: usize) -> JetForm {
    JetForm::zero(degree, f.dim, f.space, 0)
}

/// Outcome of one identity check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityRecord {
    pub identity: Identity,
    pub name: &'static str,
    pub anchor: &'static str,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl IdentityRecord {
    pub fn new(identity: Identity, residual: f64) -> Self {
        let tolerance = identity.tolerance();
        IdentityRecord {
            identity,
            name: identity.name(),
            anchor: identity.anchor(),
            residual,
            tolerance,
            pass: residual < tolerance,
        }
    }
}

/// `SAMPLE_GRID^dim` grid points followed by `SAMPLE_RANDOM` seeded points.
pub fn sample_points(dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let total = SAMPLE_GRID.pow(dim as u32);
    let mut out: Vec<Vec<f64>> = (0..total)
        .map(|i| {
            let mut p = vec![0.0; dim];
            grid_point(dim, SAMPLE_GRID, i, &mut p);
            p
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    out.extend((0..SAMPLE_RANDOM).map(|_| (0..dim).map(|_| rng.gen_range(0.0..2.0 * PI)).collect()));
    out
}

/// Parallel maximum; NaN counts as infinite.
pub fn max_residual<F>(points: &[Vec<f64>], f: F) -> f64
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    points
        .par_iter()
        .map(|p| {
            let r = f(p);
            if r.is_nan() {
                f64::INFINITY
            } else {
                r
            }
        })
        .reduce(|| 0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_round_trips_names() {
        for id in Identity::ALL {
            assert_eq!(Identity::from_name(id.name()).unwrap(), id);
            assert!(!id.anchor().is_empty());
        }
        assert!(matches!(Identity::from_name("nope"), Err(Error::UnknownIdentity(_))));
    }

    #[test]
    fn zero_connection_gives_exact_zero() {
        let mut inputs = IdentityInputs::new(LieAlgebraSpec::euclidean(Algebra::su2()), 4);
        inputs.connection = Some(GaugeField::zero(Algebra::su2(), 4));
        let r = inputs.verify(Identity::AlphaExteriorDerivative).unwrap();
        assert_eq!(r.residual, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn three_dimensional_identities_hold_on_random_inputs() {
        let inputs = IdentityInputs::random(Algebra::su2(), 3, 11);
        for id in Identity::ALL.into_iter().filter(|i| i.dims().contains(&3)) {
            let r = inputs.verify(id).unwrap();
            assert!(r.pass, "{} residual {:e}", r.name, r.residual);
        }
    }

    #[test]
    fn missing_input_is_reported() {
        let inputs = IdentityInputs::new(LieAlgebraSpec::euclidean(Algebra::su2()), 3);
        assert!(matches!(inputs.verify(Identity::Bianchi), Err(Error::Scenario(_))));
    }

    #[test]
    fn wrong_dimension_is_rejected() {
        let inputs = IdentityInputs::random(Algebra::su2(), 3, 1);
        assert!(matches!(
            inputs.verify(Identity::AlphaExteriorDerivative),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sample_set_is_seeded() {
        assert_eq!(sample_points(3, 4), sample_points(3, 4));
        assert_eq!(sample_points(2, 4).len(), 64 + SAMPLE_RANDOM);
    }
}
