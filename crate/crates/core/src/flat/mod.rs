//! Flat bundles over `T^n` presented by commuting holonomies.
//!
//! A flat bundle is the quotient of `ℝ^n × G` by `(x + 2π e_k, g) ~ (x, h_k⁻¹ g)`.
//! In this twisted gauge the canonical flat connection is `A₀ = 0` and
//! sections of associated bundles become twisted-periodic fields:
//!
//! - 𝔤-valued fields and forms: `a(x + 2π e_k) = Ad_{h_k⁻¹} a(x)`;
//! - gauge transformations: `u(x + 2π e_k) = h_k⁻¹ u(x) h_k`.
//!
//! Holonomies are required to lie in a common maximal torus, factor by
//! factor: `h_k = exp(φ_k n)` for one unit axis `n` per `su(2)` factor.
//! Completing `n` to a right-handed frame `(n, e₂, e₃)`, `Ad_{h⁻¹}` rotates
//! `w = w₂ + i w₃` (the `span{e₂, e₃}` part) by `e^{-2iφ}`, so
//! `w = e^{i(m + θ)·x}` with `θ_k = -φ_k / π` is correctly twisted.

pub mod finder;

use std::f64::consts::PI;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::ScalarExpr;
use crate::forms::{AlgebraExpr, FormExpr, JetForm, Pairing, VForm, ValueSpace};
use crate::gauge::{cs_at, cs_gauge_change, gauge_act_at, CSContext, GaugeField};
use crate::group_field::{mc_three_form_at, GroupField, GroupJet};
use crate::identity::{max_residual, sample_points};
use crate::jet::MAX_DIM;
use crate::lie::{exp, AlgebraElement, Algebra, Factor, GroupElement, LieAlgebraSpec};

pub use finder::{find_flat_connection, FinderOptions, FinderOutcome, FourierConnection, Metric, Optimizer};

/// Boundary residual allowed for twisted fields.
pub const TWIST_TOLERANCE: f64 = 1e-8;
/// Boundary residual allowed for `u*Θ`, which must be strictly periodic.
pub const PERIODIC_TOLERANCE: f64 = 1e-9;
const COMMUTING_TOLERANCE: f64 = 1e-12;

/// Toral data of one factor: axis frame and holonomy phases.
#[derive(Clone, Debug, PartialEq)]
pub struct ToralFrame {
    pub factor: Factor,
    /// `n, e₂, e₃` for `su(2)`; unused for `u(1)`.
    pub frame: [[f64; 3]; 3],
    /// `h_k = exp(φ_k n)` (`e^{iφ_k}` for `u(1)`).
    pub phases: Vec<f64>,
}

impl ToralFrame {
    /// Frequency shifts `θ_k = -φ_k / π` of the `span{e₂, e₃}` part.
    pub fn shifts(&self) -> Vec<f64> {
        self.phases.iter().map(|p| -p / PI).collect()
    }
}

/// One commuting holonomy per torus axis.
#[derive(Clone, Debug, PartialEq)]
pub struct HolonomyData {
    elements: Vec<GroupElement>,
    frames: Vec<ToralFrame>,
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

impl HolonomyData {
    pub fn new(elements: Vec<GroupElement>) -> Result<Self> {
        let Some(first) = elements.first() else {
            return Err(Error::Scenario("holonomy needs one element per axis".into()));
        };
        let algebra = first.algebra();
        for (a, g) in elements.iter().enumerate() {
            if g.algebra() != algebra {
                return Err(Error::AlgebraMismatch(format!("holonomy element {}", a + 1)));
            }
            for h in &elements[..a] {
                let defect = g.commutator_defect(h)?;
                if defect > COMMUTING_TOLERANCE {
                    return Err(Error::NonCommuting(defect));
                }
            }
        }
        let mut frames = Vec::new();
        for (idx, (f, _, o)) in algebra.layout().enumerate() {
            let phases: Vec<f64>;
            let mut frame = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
            match f {
                Factor::U1 => {
                    phases = elements
                        .iter()
                        .map(|g| g.coords()[o + 1].atan2(g.coords()[o]))
                        .collect();
                }
                Factor::Su2 => {
                    let quats: Vec<[f64; 4]> =
                        elements.iter().map(|g| g.quaternion(idx).unwrap()).collect();
                    let axis = quats
                        .iter()
                        .map(|q| [q[1], q[2], q[3]])
                        .find(|v| norm(*v) > 1e-9)
                        .map(|v| {
                            let n = norm(v);
                            [v[0] / n, v[1] / n, v[2] / n]
                        })
                        .unwrap_or([1.0, 0.0, 0.0]);
                    for q in &quats {
                        if norm(cross(axis, [q[1], q[2], q[3]])) > 1e-9 {
                            return Err(Error::NonToral);
                        }
                    }
                    // least-aligned basis vector, orthogonalized
                    let pick = (0..3)
                        .min_by(|&a, &b| axis[a].abs().total_cmp(&axis[b].abs()))
                        .unwrap();
                    let mut e2 = [0.0; 3];
                    e2[pick] = 1.0;
                    let dot = axis[pick];
                    for c in 0..3 {
                        e2[c] -= dot * axis[c];
                    }
                    let n2 = norm(e2);
                    e2 = e2.map(|c| c / n2);
                    frame = [axis, e2, cross(axis, e2)];
                    phases = quats
                        .iter()
                        .map(|q| {
                            let s = q[1] * axis[0] + q[2] * axis[1] + q[3] * axis[2];
                            s.atan2(q[0])
                        })
                        .collect();
                }
            }
            frames.push(ToralFrame {
                factor: f,
                frame,
                phases,
            });
        }
        Ok(HolonomyData { elements, frames })
    }

    pub fn trivial(algebra: Algebra, dim: usize) -> Self {
        Self::new(vec![GroupElement::identity(algebra); dim]).expect("identity commutes")
    }

    /// `h_k = exp(φ_k i)` in every `su(2)` factor.
    pub fn toral(algebra: Algebra, phases: &[f64]) -> Result<Self> {
        let elements = phases
            .iter()
            .map(|&p| {
                let coords: Vec<f64> = algebra
                    .layout()
                    .flat_map(|(f, _, _)| match f {
                        Factor::U1 => vec![0.0],
                        Factor::Su2 => vec![p, 0.0, 0.0],
                    })
                    .collect();
                exp(&AlgebraElement::from_coords(algebra, &coords).expect("layout"))
            })
            .collect();
        Self::new(elements)
    }

    pub fn algebra(&self) -> Algebra {
        self.elements[0].algebra()
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn frames(&self) -> &[ToralFrame] {
        &self.frames
    }

    pub fn is_trivial(&self) -> bool {
        let one = GroupElement::identity(self.algebra());
        self.elements.iter().all(|h| h.distance(&one) < COMMUTING_TOLERANCE)
    }
}

/// One Fourier mode `(re + i·im) e^{i k·x}` of a recipe.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TwistMode {
    pub k: Vec<i32>,
    pub re: f64,
    pub im: f64,
}

/// Modes of one factor: `periodic` builds the `n`-component as
/// `Σ re cos(k·x) + im sin(k·x)`; `shifted` builds `w = Σ (re + i·im) e^{i(k + θ)·x}`.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FactorRecipe {
    pub periodic: Vec<TwistMode>,
    pub shifted: Vec<TwistMode>,
}

pub type TwistRecipe = Vec<FactorRecipe>;

/// A random recipe with `modes` modes per part, frequencies in
/// `[-bandwidth, bandwidth]`.
pub fn random_recipe<R: Rng>(rng: &mut R, algebra: Algebra, dim: usize, modes: usize, bandwidth: i32, amp: f64) -> TwistRecipe {
    let mode = |rng: &mut R| TwistMode {
        k: (0..dim).map(|_| rng.gen_range(-bandwidth..=bandwidth)).collect(),
        re: rng.gen_range(-amp..amp),
        im: rng.gen_range(-amp..amp),
    };
    algebra
        .factors()
        .iter()
        .map(|f| FactorRecipe {
            periodic: (0..modes).map(|_| mode(rng)).collect(),
            shifted: match f {
                Factor::U1 => Vec::new(),
                Factor::Su2 => (0..modes).map(|_| mode(rng)).collect(),
            },
        })
        .collect()
}

fn shifted_phase(k: &[i32], shift: &[f64]) -> ScalarExpr {
    k.iter()
        .zip(shift)
        .enumerate()
        .fold(ScalarExpr::zero(), |acc, (a, (&ka, &s))| {
            acc + ScalarExpr::Const(ka as f64 + s) * ScalarExpr::var(a)
        })
}

/// Builds `a = f n + w₂ e₂ + w₃ e₃` per factor from a recipe; the result is
/// twisted-periodic for `h`.
pub fn make_twisted_algebra_field(h: &HolonomyData, recipe: &TwistRecipe) -> Result<AlgebraExpr> {
    let algebra = h.algebra();
    if recipe.len() != algebra.factors().len() {
        return Err(Error::DimensionMismatch {
            expected: algebra.factors().len(),
            got: recipe.len(),
        });
    }
    let dim = h.elements.len();
    let mut out = AlgebraExpr::zero(algebra);
    for ((frame, part), (f, off, _)) in h.frames.iter().zip(recipe).zip(algebra.layout()) {
        for m in part.periodic.iter().chain(&part.shifted) {
            if m.k.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: m.k.len(),
                });
            }
        }
        let periodic = part.periodic.iter().fold(ScalarExpr::zero(), |acc, m| {
            let p = shifted_phase(&m.k, &vec![0.0; dim]);
            acc + ScalarExpr::Const(m.re) * ScalarExpr::cos(p.clone())
                + ScalarExpr::Const(m.im) * ScalarExpr::sin(p)
        });
        match f {
            Factor::U1 => {
                if !part.shifted.is_empty() {
                    return Err(Error::Scenario("u1 factors carry no shifted modes".into()));
                }
                out.coords[off] = periodic;
            }
            Factor::Su2 => {
                let shift = frame.shifts();
                let (mut w2, mut w3) = (ScalarExpr::zero(), ScalarExpr::zero());
                for m in &part.shifted {
                    let p = shifted_phase(&m.k, &shift);
                    let (c, s) = (ScalarExpr::cos(p.clone()), ScalarExpr::sin(p));
                    w2 = w2 + ScalarExpr::Const(m.re) * c.clone() - ScalarExpr::Const(m.im) * s.clone();
                    w3 = w3 + ScalarExpr::Const(m.re) * s + ScalarExpr::Const(m.im) * c;
                }
                let [n, e2, e3] = frame.frame;
                for c in 0..3 {
                    out.coords[off + c] = ScalarExpr::Const(n[c]) * periodic.clone()
                        + ScalarExpr::Const(e2[c]) * w2.clone()
                        + ScalarExpr::Const(e3[c]) * w3.clone();
                }
            }
        }
    }
    Ok(out)
}

/// A twisted gauge field with one recipe per axis component.
pub fn make_twisted_gauge_field(h: &HolonomyData, recipes: &[TwistRecipe]) -> Result<FormExpr> {
    let algebra = h.algebra();
    let mut out = FormExpr::zero(1, ValueSpace::Lie(algebra));
    for (axis, r) in recipes.iter().enumerate() {
        let a = make_twisted_algebra_field(h, r)?;
        out = out.add(&FormExpr::differential(axis).times_algebra(&a)?)?;
    }
    Ok(out)
}

/// A field together with the twisting law it must satisfy.
#[derive(Clone, Debug)]
pub enum TwistedField {
    /// 𝔤-valued form of any degree (gauge fields, algebra fields as 0-forms).
    Lie(VForm),
    /// Real form; must be strictly periodic.
    Real(VForm),
    Group(GroupField),
}

impl TwistedField {
    pub fn gauge(a: &GaugeField) -> Self {
        TwistedField::Lie(a.form().clone())
    }

    pub fn algebra(x: &AlgebraExpr, dim: usize) -> Self {
        TwistedField::Lie(x.to_vform(dim))
    }

    fn dim(&self) -> usize {
        match self {
            TwistedField::Lie(v) | TwistedField::Real(v) => v.dim,
            TwistedField::Group(u) => u.dim,
        }
    }
}

/// Face sample points: `x_axis = 0`, other coordinates on a shifted grid.
fn face_points(dim: usize, axis: usize) -> Vec<Vec<f64>> {
    const M: usize = 5;
    let others = dim - 1;
    (0..M.pow(others as u32))
        .map(|mut idx| {
            let mut p = vec![0.0; dim];
            for a in (0..dim).filter(|&a| a != axis) {
                p[a] = 0.37 + 2.0 * PI * (idx % M) as f64 / M as f64;
                idx /= M;
            }
            p
        })
        .collect()
}

/// Largest boundary residual of the twisting law, over sample points on
/// every face `x_k = 0` paired with `x_k = 2π`.
pub fn validate_twisting(field: &TwistedField, h: &HolonomyData) -> f64 {
    let dim = field.dim();
    let mut worst: f64 = 0.0;
    for (axis, hk) in h.elements.iter().enumerate().take(dim) {
        let hinv = hk.inverse();
        let hinv_jet = GroupJet::constant(&hinv);
        for p in face_points(dim, axis) {
            let mut q = p.clone();
            q[axis] += 2.0 * PI;
            let r = match field {
                TwistedField::Lie(v) => {
                    let expected = v.at(&p).adjoint(hinv_jet.coords(), 2).expect("𝔤-valued");
                    v.at(&q).max_diff(&expected).expect("same shape")
                }
                TwistedField::Real(v) => v.at(&q).max_diff(&v.at(&p)).expect("same shape"),
                TwistedField::Group(u) => {
                    let expected = hinv.mul(&u.eval(&p).value()).unwrap().mul(hk).unwrap();
                    u.eval(&q).value().distance(&expected)
                }
            };
            worst = worst.max(if r.is_nan() { f64::INFINITY } else { r });
        }
    }
    worst
}

/// Holonomy data, flat reference connection and normalized inner product.
#[derive(Clone, Debug)]
pub struct FlatContext {
    pub holonomy: HolonomyData,
    pub cs: CSContext,
}

impl FlatContext {
    /// `A₀ = 0` in the twisted gauge, `λ = λ*`.
    pub fn canonical(holonomy: HolonomyData, grid: usize) -> Self {
        let spec = LieAlgebraSpec::normalized(holonomy.algebra());
        let dim = holonomy.elements.len();
        FlatContext {
            cs: CSContext::trivial(spec, dim, grid),
            holonomy,
        }
    }

    /// The constant toral connection `A₀ = c n dx₁`, with `n` the torus axis
    /// of every `su(2)` factor and the generator of every `u(1)` factor.
    /// It is flat and correctly twisted.
    pub fn constant_reference(holonomy: HolonomyData, c: f64, grid: usize) -> Self {
        let mut ctx = Self::canonical(holonomy, grid);
        let alg = ctx.holonomy.algebra();
        let mut coords = vec![0.0; alg.dim()];
        for (frame, (f, off, _)) in ctx.holonomy.frames.iter().zip(alg.layout()) {
            match f {
                Factor::U1 => coords[off] = c,
                Factor::Su2 => {
                    for m in 0..3 {
                        coords[off + m] = c * frame.frame[0][m];
                    }
                }
            }
        }
        let dim = ctx.holonomy.elements.len();
        let expr = FormExpr::differential(0)
            .times_algebra(&AlgebraExpr::constant(alg, &coords))
            .expect("real form");
        ctx.cs.reference = GaugeField::from_expr(&expr, dim).expect("constant field");
        ctx
    }

    pub fn spec(&self) -> &LieAlgebraSpec {
        &self.cs.spec
    }

    pub fn reference(&self) -> &GaugeField {
        &self.cs.reference
    }
}

/// Holonomy of the reference connection around the `axis`-th cycle from
/// `base`: `h_k · P`, with `P` the ordered product of
/// `exp(-A₀(∂_k) Δt)` over `steps` midpoint steps.
pub fn holonomy_oracle(ctx: &FlatContext, axis: usize, base: &[f64], steps: usize) -> Result<GroupElement> {
    let alg = ctx.holonomy.algebra();
    let dt = 2.0 * PI / steps as f64;
    let mut p = GroupElement::identity(alg);
    let mut x = base.to_vec();
    let mut e = vec![0.0; x.len()];
    e[axis] = 1.0;
    for s in 0..steps {
        x[axis] = base[axis] + (s as f64 + 0.5) * dt;
        let a = ctx.reference().at(&x).evaluate(&[e.clone()])?;
        let step = AlgebraElement::from_coords(alg, &a)? * (-dt);
        p = p.mul(&exp(&step))?;
    }
    ctx.holonomy.elements[axis].mul(&p)
}

/// `(u*θ)^{H₀} = u⁻¹du + Ad_{u⁻¹}A₀ - A₀` at a point.
pub fn horizontal_mc_at(u: &GroupJet, a0: &JetForm) -> JetForm {
    let inv = u.inverse();
    u.mc_form(a0.dim)
        .add(&a0.adjoint(inv.coords(), u.order).expect("𝔤-valued"))
        .expect("same shape")
        .sub(a0)
        .expect("same shape")
}

/// `(u*Θ)^{H₀} = -1/6 ⟨θ_H ∧ [θ_H ∧ θ_H]⟩` as a real 3-form.
pub fn horizontal_theta(u: &GroupField, ctx: &FlatContext) -> VForm {
    let (u, a0, spec) = (u.clone(), ctx.reference().clone(), *ctx.spec());
    VForm::from_fn(3, u.dim, ValueSpace::Real, move |x| {
        mc_three_form_at(&horizontal_mc_at(&u.eval(x), &a0.at(x)), &spec)
    })
}

/// Degree of a twisted gauge transformation and the periodicity residual of
/// its 3-form.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FlatDegree {
    pub degree: f64,
    pub twist_residual: f64,
    pub periodicity_residual: f64,
}

/// `∫_{T³} (u*Θ)^{H₀}` for a gauge transformation twisted by the context's
/// holonomy.
pub fn degree_flat(u: &GroupField, ctx: &FlatContext) -> Result<FlatDegree> {
    if u.dim != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: u.dim,
        });
    }
    let twist_residual = validate_twisting(&TwistedField::Group(u.clone()), &ctx.holonomy);
    if twist_residual > TWIST_TOLERANCE {
        return Err(Error::Twisting {
            residual: twist_residual,
            tolerance: TWIST_TOLERANCE,
        });
    }
    let theta = horizontal_theta(u, ctx);
    let periodicity_residual = validate_twisting(&TwistedField::Real(theta.clone()), &ctx.holonomy);
    if periodicity_residual > PERIODIC_TOLERANCE {
        return Err(Error::Twisting {
            residual: periodicity_residual,
            tolerance: PERIODIC_TOLERANCE,
        });
    }
    Ok(FlatDegree {
        degree: theta.integrate(ctx.cs.grid)?,
        twist_residual,
        periodicity_residual,
    })
}

/// Pointwise residual of
/// `cs(u·A) - cs(A) - (u*Θ)^{H₀} = d⟨Ad_{u⁻¹}(A - A₀) ∧ (u*θ)^{H₀}⟩`.
/// `ctx.reference` must be flat.
pub fn flat_gauge_change_residual_at(u: &GroupField, a: &GaugeField, ctx: &CSContext, x: &[f64]) -> f64 {
    let spec = ctx.spec;
    let g = u.eval(x);
    let (ax, a0) = (a.at(x), ctx.reference.at(x));
    let moved = gauge_act_at(&g, &ax);
    let theta_h = horizontal_mc_at(&g, &a0);
    let lhs = cs_at(&moved, &a0, &spec)
        .sub(&cs_at(&ax, &a0, &spec))
        .and_then(|d| d.sub(&mc_three_form_at(&theta_h, &spec)))
        .expect("same shape");
    let b = ax.sub(&a0).expect("same shape");
    let inv = g.inverse();
    let rhs = b
        .adjoint(inv.coords(), g.order)
        .and_then(|b| b.wedge(Pairing::Inner(spec), &theta_h))
        .and_then(|w| w.d())
        .expect("𝔤-valued with derivatives");
    lhs.max_diff(&rhs).expect("same shape")
}

/// Both sides of `CS(u·A) - CS(A) = deg u` plus the pointwise residual of
/// the underlying local identity.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GaugeDegreeCheck {
    pub cs_change: f64,
    pub degree: f64,
    pub difference: f64,
    pub pointwise_residual: f64,
}

pub fn gauge_change_vs_degree(a: &GaugeField, u: &GroupField, ctx: &FlatContext) -> Result<GaugeDegreeCheck> {
    let cs_change = cs_gauge_change(u, a, &ctx.cs)?;
    let degree = degree_flat(u, ctx)?.degree;
    let points = sample_points(3, 0x5eed);
    let pointwise_residual = max_residual(&points, |x| flat_gauge_change_residual_at(u, a, &ctx.cs, x));
    Ok(GaugeDegreeCheck {
        cs_change,
        degree,
        difference: (cs_change - degree).abs(),
        pointwise_residual,
    })
}

/// Axis-aligned base point used by holonomy checks.
pub fn origin(dim: usize) -> Vec<f64> {
    vec![0.0; dim.min(MAX_DIM)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group_field::GroupExpr;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn quarter_turn() -> HolonomyData {
        HolonomyData::toral(Algebra::su2(), &[PI / 2.0, 0.0, 0.0]).unwrap()
    }

    #[test]
    fn periodic_field_with_trivial_holonomy() {
        let h = HolonomyData::trivial(Algebra::su2(), 3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = crate::random::random_algebra_expr(&mut rng, Algebra::su2(), 3);
        assert!(validate_twisting(&TwistedField::algebra(&x, 3), &h) < 1e-12);
    }

    #[test]
    fn quarter_turn_makes_w_antiperiodic() {
        let h = quarter_turn();
        let recipe = vec![FactorRecipe {
            periodic: vec![],
            shifted: vec![TwistMode {
                k: vec![0, 0, 0],
                re: 1.0,
                im: 0.0,
            }],
        }];
        let a = make_twisted_algebra_field(&h, &recipe).unwrap();
        let p = [0.3, 1.0, 2.0];
        let q = [0.3 + 2.0 * PI, 1.0, 2.0];
        let (ap, aq) = (a.eval(&p), a.eval(&q));
        for c in 1..3 {
            assert!((aq[c].value + ap[c].value).abs() < 1e-12);
        }
        assert!((ap[1].value - (0.15f64).cos()).abs() < 1e-15);
        assert!((ap[2].value + (0.15f64).sin()).abs() < 1e-15);
        assert!(validate_twisting(&TwistedField::algebra(&a, 3), &h) < 1e-10);
    }

    #[test]
    fn adjoint_rotates_the_normal_plane_by_twice_the_phase() {
        let h = HolonomyData::toral(Algebra::su2(), &[0.4, 0.0, 0.0]).unwrap();
        let j = AlgebraElement::basis(Algebra::su2(), 0, 1).unwrap();
        let rotated = h.elements()[0].adjoint(&j).unwrap();
        assert!((rotated.coords()[1] - 0.8f64.cos()).abs() < 1e-15);
        assert!((rotated.coords()[2] - 0.8f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn exp_of_twisted_field_is_twisted() {
        let h = quarter_turn();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = random_recipe(&mut rng, Algebra::su2(), 3, 3, 2, 0.5);
        let a = make_twisted_algebra_field(&h, &r).unwrap();
        let u = GroupField::new(GroupExpr::Qexp(a), Algebra::su2(), 3).unwrap();
        assert!(validate_twisting(&TwistedField::Group(u), &h) < 1e-10);
    }

    #[test]
    fn broken_field_is_detected() {
        let h = quarter_turn();
        let x = AlgebraExpr {
            algebra: Algebra::su2(),
            coords: vec![
                ScalarExpr::zero(),
                ScalarExpr::cos(ScalarExpr::var(0)),
                ScalarExpr::zero(),
            ],
        };
        assert!(validate_twisting(&TwistedField::algebra(&x, 3), &h) > 1.0);
    }

    #[test]
    fn non_commuting_holonomy_is_rejected() {
        let alg = Algebra::su2();
        let i = exp(&AlgebraElement::from_coords(alg, &[0.5, 0.0, 0.0]).unwrap());
        let j = exp(&AlgebraElement::from_coords(alg, &[0.0, 0.5, 0.0]).unwrap());
        let one = GroupElement::identity(alg);
        assert!(matches!(
            HolonomyData::new(vec![i, j, one]),
            Err(Error::NonCommuting(_))
        ));
    }

    #[test]
    fn canonical_reference_has_the_prescribed_holonomy() {
        let ctx = FlatContext::canonical(quarter_turn(), 8);
        for k in 0..3 {
            let hol = holonomy_oracle(&ctx, k, &[0.2, 0.3, 0.4], 256).unwrap();
            assert!(hol.distance(&ctx.holonomy.elements()[k]) < 1e-6);
        }
        let alt = FlatContext::constant_reference(quarter_turn(), 0.3, 8);
        assert!(crate::gauge::curvature(alt.reference()).at(&[1.0, 1.0, 1.0]).max_abs() < 1e-15);
        assert!(validate_twisting(&TwistedField::gauge(alt.reference()), &alt.holonomy) < 1e-12);
    }

    #[test]
    fn centralizer_constant_has_degree_zero() {
        let h = quarter_turn();
        let g = exp(&AlgebraElement::from_coords(Algebra::su2(), &[0.7, 0.0, 0.0]).unwrap());
        let u = GroupField::constant(&g, 3);
        let ctx = FlatContext::canonical(h, 8);
        assert_eq!(degree_flat(&u, &ctx).unwrap().degree, 0.0);
    }
}
