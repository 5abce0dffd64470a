//! Connections on trivial bundles over `T^n` in a fixed global gauge.
//!
//! Conventions:
//! - curvature `F_A = dA + ½[A ∧ A]`;
//! - a gauge transformation `u` acts on the right, `u·A = Ad_{u⁻¹} A + u⁻¹du`;
//! - with reference connection `A₀` and `a = A - A₀`,
//!   `cs(A) = ⟨(F_A + F_{A₀}) ∧ a⟩ - 1/6 ⟨a ∧ [a ∧ a]⟩`,
//!   which equals the transgression `2 ∫₀¹ ⟨a ∧ F_{A₀ + t a}⟩ dt`.

use crate::error::{Error, Result};
use crate::forms::{AlgebraExpr, FormExpr, JetForm, Pairing, VForm, ValueSpace};
use crate::group_field::GroupField;
use crate::lie::{Algebra, LieAlgebraSpec};
use crate::quad::gauss_legendre_on;

/// A 𝔤-valued 1-form on `T^n`.
#[derive(Clone, Debug)]
pub struct GaugeField(VForm);

impl GaugeField {
    pub fn new(form: VForm) -> Result<Self> {
        match form.space {
            ValueSpace::Lie(_) if form.degree == 1 => Ok(GaugeField(form)),
            _ => Err(Error::FormType(format!(
                "a gauge field is a 𝔤-valued 1-form, got {form:?}"
            ))),
        }
    }

    pub fn from_expr(expr: &FormExpr, dim: usize) -> Result<Self> {
        Self::new(expr.to_vform(dim)?)
    }

    pub fn zero(algebra: Algebra, dim: usize) -> Self {
        GaugeField(VForm::zero(1, dim, ValueSpace::Lie(algebra)))
    }

    pub fn form(&self) -> &VForm {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn algebra(&self) -> Algebra {
        match self.0.space {
            ValueSpace::Lie(a) => a,
            _ => unreachable!("checked on construction"),
        }
    }

    pub fn at(&self, x: &[f64]) -> JetForm {
        self.0.at(x)
    }

    pub fn add(&self, other: &GaugeField) -> Result<GaugeField> {
        Ok(GaugeField(self.0.add(&other.0)?))
    }

    pub fn sub(&self, other: &GaugeField) -> Result<GaugeField> {
        Ok(GaugeField(self.0.sub(&other.0)?))
    }

    pub fn scale(&self, c: f64) -> GaugeField {
        GaugeField(self.0.scale(c))
    }
}

/// `dA + ½[A ∧ A]` at a point.
pub fn curvature_at(a: &JetForm) -> JetForm {
    let da = a.d().expect("connection carries derivatives");
    let aa = a.wedge(Pairing::Bracket, a).expect("𝔤-valued");
    da.add(&aa.scale(0.5)).expect("same shape")
}

pub fn curvature(a: &GaugeField) -> VForm {
    let a = a.clone();
    VForm::from_fn(2, a.dim(), a.0.space, move |x| curvature_at(&a.at(x)))
}

/// `Ad_{u⁻¹} A + u⁻¹du` at a point.
pub fn gauge_act_at(u: &crate::group_field::GroupJet, a: &JetForm) -> JetForm {
    let inv = u.inverse();
    a.adjoint(inv.coords(), u.order)
        .expect("𝔤-valued")
        .add(&u.mc_form(a.dim))
        .expect("same shape")
}

pub fn gauge_act(u: &GroupField, a: &GaugeField) -> Result<GaugeField> {
    if u.algebra != a.algebra() || u.dim != a.dim() {
        return Err(Error::AlgebraMismatch(format!(
            "gauge transformation {:?} on T^{} vs connection {:?} on T^{}",
            u.algebra,
            u.dim,
            a.algebra(),
            a.dim()
        )));
    }
    let (u, a) = (u.clone(), a.clone());
    let space = a.0.space;
    Ok(GaugeField(VForm::from_fn(1, a.dim(), space, move |x| {
        gauge_act_at(&u.eval(x), &a.at(x))
    })))
}

/// `⟨A ∧ F⟩ - 1/6 ⟨A ∧ [A ∧ A]⟩` at a point.
pub fn alpha_at(a: &JetForm, spec: &LieAlgebraSpec) -> JetForm {
    let f = curvature_at(a);
    let af = a.wedge(Pairing::Inner(*spec), &f).expect("𝔤-valued");
    af.sub(&cubic_at(a, spec)).expect("same shape")
}

/// `1/6 ⟨a ∧ [a ∧ a]⟩` at a point.
fn cubic_at(a: &JetForm, spec: &LieAlgebraSpec) -> JetForm {
    let aa = a.wedge(Pairing::Bracket, a).expect("𝔤-valued");
    a.wedge(Pairing::Inner(*spec), &aa)
        .expect("𝔤-valued")
        .scale(1.0 / 6.0)
}

/// Closed form of `cs(A)` relative to `A₀` at a point.
pub fn cs_at(a: &JetForm, a0: &JetForm, spec: &LieAlgebraSpec) -> JetForm {
    let b = a.sub(a0).expect("same shape");
    let f = curvature_at(a).add(&curvature_at(a0)).expect("same shape");
    f.wedge(Pairing::Inner(*spec), &b)
        .expect("𝔤-valued")
        .sub(&cubic_at(&b, spec))
        .expect("same shape")
}

/// `2 ∫₀¹ ⟨a ∧ F_{A₀ + t a}⟩ dt` by Gauss-Legendre in `t`.
pub fn cs_transgression_at(a: &JetForm, a0: &JetForm, spec: &LieAlgebraSpec, nodes: usize) -> JetForm {
    let b = a.sub(a0).expect("same shape");
    let (ts, ws) = gauss_legendre_on(nodes, 0.0, 1.0);
    let mut out = JetForm::zero(3, a.dim, ValueSpace::Real, a.order.min(a0.order).saturating_sub(1));
    for (t, w) in ts.iter().zip(&ws) {
        let at = a0.add(&b.scale(*t)).expect("same shape");
        let term = b
            .wedge(Pairing::Inner(*spec), &curvature_at(&at))
            .expect("𝔤-valued");
        out = out.add(&term.scale(2.0 * w)).expect("same shape");
    }
    out
}

/// Spec, reference connection and quadrature grid for Chern-Simons
/// computations.
#[derive(Clone, Debug)]
pub struct CSContext {
    pub spec: LieAlgebraSpec,
    pub reference: GaugeField,
    pub grid: usize,
}

impl CSContext {
    pub fn new(spec: LieAlgebraSpec, reference: GaugeField, grid: usize) -> Self {
        CSContext {
            spec,
            reference,
            grid,
        }
    }

    /// Reference `A₀ = 0`.
    pub fn trivial(spec: LieAlgebraSpec, dim: usize, grid: usize) -> Self {
        Self::new(spec, GaugeField::zero(spec.algebra, dim), grid)
    }
}

pub fn cs_form(a: &GaugeField, ctx: &CSContext) -> VForm {
    let (a, a0, spec) = (a.clone(), ctx.reference.clone(), ctx.spec);
    VForm::from_fn(3, a.dim(), ValueSpace::Real, move |x| {
        cs_at(&a.at(x), &a0.at(x), &spec)
    })
}

pub fn cs_form_transgression(a: &GaugeField, ctx: &CSContext) -> VForm {
    let (a, a0, spec) = (a.clone(), ctx.reference.clone(), ctx.spec);
    VForm::from_fn(3, a.dim(), ValueSpace::Real, move |x| {
        cs_transgression_at(&a.at(x), &a0.at(x), &spec, 8)
    })
}

fn require_dim(a: &GaugeField, dim: usize) -> Result<()> {
    if a.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: a.dim(),
        });
    }
    Ok(())
}

/// `CS(A) = ∫_{T³} cs(A)`.
pub fn cs_functional(a: &GaugeField, ctx: &CSContext) -> Result<f64> {
    require_dim(a, 3)?;
    cs_form(a, ctx).integrate(ctx.grid)
}

/// `CS(u·A) - CS(A)` as one integral, evaluating `u` and `A` once per node.
pub fn cs_gauge_change(u: &GroupField, a: &GaugeField, ctx: &CSContext) -> Result<f64> {
    require_dim(a, 3)?;
    gauge_act(u, a)?;
    let (u, a, a0, spec) = (u.clone(), a.clone(), ctx.reference.clone(), ctx.spec);
    VForm::from_fn(3, 3, ValueSpace::Real, move |x| {
        let (ax, a0x) = (a.at(x), a0.at(x));
        cs_at(&gauge_act_at(&u.eval(x), &ax), &a0x, &spec)
            .sub(&cs_at(&ax, &a0x, &spec))
            .expect("same shape")
    })
    .integrate(ctx.grid)
}

/// `dCS_A(a) = 2 ∫ ⟨F_A ∧ a⟩`.
pub fn cs_gradient_pairing(a: &GaugeField, direction: &GaugeField, ctx: &CSContext) -> Result<f64> {
    require_dim(a, 3)?;
    let (a, d, spec) = (a.clone(), direction.clone(), ctx.spec);
    VForm::from_fn(3, 3, ValueSpace::Real, move |x| {
        curvature_at(&a.at(x))
            .wedge(Pairing::Inner(spec), &d.at(x))
            .expect("𝔤-valued")
            .scale(2.0)
    })
    .integrate(ctx.grid)
}

/// Central difference `(CS(A + t a) - CS(A - t a)) / 2t`.
pub fn cs_finite_difference(a: &GaugeField, direction: &GaugeField, ctx: &CSContext, t: f64) -> Result<f64> {
    let plus = cs_functional(&a.add(&direction.scale(t))?, ctx)?;
    let minus = cs_functional(&a.sub(&direction.scale(t))?, ctx)?;
    Ok((plus - minus) / (2.0 * t))
}

/// Gauge-orbit direction `d_A X = dX + [A, X]`.
pub fn orbit_direction(a: &GaugeField, x: &AlgebraExpr) -> Result<GaugeField> {
    GaugeField::new(x.to_vform(a.dim()).twisted_derivative(a.form())?)
}

/// `⟨F_A ∧ F_A⟩` on `T⁴`.
pub fn chern_weil_4form(a: &GaugeField, spec: &LieAlgebraSpec) -> Result<VForm> {
    require_dim(a, 4)?;
    let (a, spec) = (a.clone(), *spec);
    Ok(VForm::from_fn(4, 4, ValueSpace::Real, move |x| {
        chern_weil_at(&a.at(x), &spec)
    }))
}

pub fn chern_weil_at(a: &JetForm, spec: &LieAlgebraSpec) -> JetForm {
    let f = curvature_at(a);
    f.wedge(Pairing::Inner(*spec), &f).expect("𝔤-valued")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ScalarExpr as S;
    use crate::forms::{AlgebraExpr, FormExpr};
    use crate::lie::Algebra;
    use crate::random::{random_algebra_expr, random_group_expr, random_lie_form};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn su2() -> Algebra {
        Algebra::su2()
    }

    fn basis_form(c: usize, axis: usize, coeff: S) -> FormExpr {
        FormExpr::differential(axis)
            .scale(&coeff)
            .times_algebra(&AlgebraExpr::basis(su2(), 0, c).unwrap())
            .unwrap()
    }

    #[test]
    fn curvature_examples() {
        let zero = GaugeField::zero(su2(), 3);
        assert_eq!(curvature(&zero).at(&[0.1, 0.2, 0.3]).max_abs(), 0.0);
        let eps = 0.3;
        let a = basis_form(0, 0, S::Const(eps))
            .add(&basis_form(1, 1, S::Const(eps)))
            .unwrap();
        let f = curvature(&GaugeField::from_expr(&a, 3).unwrap()).at(&[1.0, 2.0, 3.0]);
        assert!((f.component(0b011)[2].value - 2.0 * eps * eps).abs() < 1e-15);
        let single = basis_form(0, 0, S::sin(S::var(1)));
        let g = GaugeField::from_expr(&single, 3).unwrap();
        let f = curvature(&g).at(&[0.0, 0.7, 0.0]);
        let da = g.form().d().at(&[0.0, 0.7, 0.0]);
        assert!(f.max_diff(&da).unwrap() < 1e-15);
    }

    #[test]
    fn identity_gauge_transformation_is_trivial() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = GaugeField::from_expr(&random_lie_form(&mut rng, su2(), 3, 1), 3).unwrap();
        let one = GroupField::identity(su2(), 3);
        let x = [0.4, 1.4, 2.4];
        assert!(gauge_act(&one, &a).unwrap().at(&x).max_diff(&a.at(&x)).unwrap() < 1e-15);
    }

    #[test]
    fn gauge_action_is_a_right_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = GaugeField::from_expr(&random_lie_form(&mut rng, su2(), 3, 1), 3).unwrap();
        let u = GroupField::new(random_group_expr(&mut rng, su2(), 3), su2(), 3).unwrap();
        let v = GroupField::new(random_group_expr(&mut rng, su2(), 3), su2(), 3).unwrap();
        let lhs = gauge_act(&v, &gauge_act(&u, &a).unwrap()).unwrap();
        let rhs = gauge_act(&u.times(&v), &a).unwrap();
        for x in [[0.3, 0.9, 5.1], [4.0, 2.0, 1.0]] {
            assert!(lhs.at(&x).max_diff(&rhs.at(&x)).unwrap() < 1e-10);
        }
        let pure = gauge_act(&u, &GaugeField::zero(su2(), 3)).unwrap();
        let theta = crate::group_field::mc_pullback(&u);
        assert!(pure.at(&[1.0; 3]).max_diff(&theta.at(&[1.0; 3])).unwrap() < 1e-15);
    }

    #[test]
    fn abelian_beltrami_field_has_cs_eight_pi_cubed() {
        let u1 = Algebra::u1();
        let i = AlgebraExpr::basis(u1, 0, 0).unwrap();
        let a = FormExpr::differential(1)
            .scale(&S::sin(S::var(0)))
            .add(&FormExpr::differential(2).scale(&S::cos(S::var(0))))
            .unwrap()
            .times_algebra(&i)
            .unwrap();
        let spec = LieAlgebraSpec::euclidean(u1);
        let ctx = CSContext::trivial(spec, 3, 16);
        let cs = cs_functional(&GaugeField::from_expr(&a, 3).unwrap(), &ctx).unwrap();
        assert!((cs - 8.0 * PI.powi(3)).abs() < 1e-9);
    }

    #[test]
    fn cs_closed_form_matches_transgression() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = LieAlgebraSpec::new(su2(), &[0.8]).unwrap();
        let a = GaugeField::from_expr(&random_lie_form(&mut rng, su2(), 3, 1), 3).unwrap();
        let a0 = GaugeField::from_expr(&random_lie_form(&mut rng, su2(), 3, 1), 3).unwrap();
        let ctx = CSContext::new(spec, a0.clone(), 8);
        let closed = cs_form(&a, &ctx);
        let quad = cs_form_transgression(&a, &ctx);
        for x in [[0.1, 0.2, 0.3], [5.0, 1.0, 3.0]] {
            assert!(closed.at(&x).max_diff(&quad.at(&x)).unwrap() < 1e-10);
        }
        assert_eq!(cs_form(&a0, &ctx).at(&[1.0, 1.0, 1.0]).max_abs(), 0.0);
    }

    #[test]
    fn gradient_vanishes_along_gauge_orbits() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let spec = LieAlgebraSpec::euclidean(su2());
        let ctx = CSContext::trivial(spec, 3, 12);
        let a = GaugeField::from_expr(&random_lie_form(&mut rng, su2(), 3, 1), 3).unwrap();
        let x = random_algebra_expr(&mut rng, su2(), 3);
        let dir = orbit_direction(&a, &x).unwrap();
        assert!(cs_gradient_pairing(&a, &dir, &ctx).unwrap().abs() < 1e-8);
    }

    #[test]
    fn dimension_requirements() {
        let spec = LieAlgebraSpec::euclidean(su2());
        let a4 = GaugeField::zero(su2(), 4);
        assert!(cs_functional(&a4, &CSContext::trivial(spec, 4, 4)).is_err());
        let a3 = GaugeField::zero(su2(), 3);
        assert!(chern_weil_4form(&a3, &spec).is_err());
        assert_eq!(
            chern_weil_4form(&a4, &spec).unwrap().at(&[0.0; 4]).max_abs(),
            0.0
        );
    }
}
