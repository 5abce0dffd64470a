//! Group-valued fields `u: T^n → G`, their Maurer-Cartan pullbacks, Haar
//! integration over `SU(2)` and the degree of a gauge transformation.
//!
//! Orientation: `S³` is oriented so that the Maurer-Cartan 3-form
//! `Θ = -1/6 ⟨θ ∧ [θ ∧ θ]⟩` is positive. Since `Θ(i, j, k) = -2λ`, this is
//! opposite to the orientation in which `(i, j, k)` is a positive frame at
//! `1`. With `λ = λ* = 1/(4π²)` the integral of `Θ` over `SU(2)` in the
//! `(i, j, k)` orientation is `-1`, and `∫ u*Θ` over `T³` is the Brouwer
//! degree of `u` for the `Θ` orientation.

use std::f64::consts::PI;

use once_cell::sync::Lazy;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{sample_grid, ScalarExpr};
use crate::forms::{determinant, AlgebraExpr, JetForm, Pairing, VForm, ValueSpace, FULL_ORDER};
use crate::jet::Jet2;
use crate::lie::{qconj, qmul, Algebra, Factor, GroupElement, LieAlgebraSpec, MAX_GROUP_DIM};
use crate::quad::gauss_legendre_on;
use crate::sum::neumaier_sum;

/// Expression for a group-valued field.
#[derive(Clone, Debug, PartialEq)]
pub enum GroupExpr {
    Identity,
    /// `(w, x, y, z) / |(w, x, y, z)|`; only for a single `su(2)` factor.
    Quat(Box<[ScalarExpr; 4]>),
    Qexp(AlgebraExpr),
    Mul(Box<GroupExpr>, Box<GroupExpr>),
    /// `conj(u, w) = w⁻¹ u w`.
    Conj(Box<GroupExpr>, Box<GroupExpr>),
    Pow(Box<GroupExpr>, i32),
    Inv(Box<GroupExpr>),
}

impl GroupExpr {
    pub fn mul(a: GroupExpr, b: GroupExpr) -> GroupExpr {
        match (a, b) {
            (GroupExpr::Identity, e) | (e, GroupExpr::Identity) => e,
            (a, b) => GroupExpr::Mul(Box::new(a), Box::new(b)),
        }
    }

    pub fn conj(u: GroupExpr, w: GroupExpr) -> GroupExpr {
        match (u, w) {
            (GroupExpr::Identity, _) => GroupExpr::Identity,
            (u, GroupExpr::Identity) => u,
            (u, w) => GroupExpr::Conj(Box::new(u), Box::new(w)),
        }
    }

    pub fn pow(u: GroupExpr, n: i32) -> GroupExpr {
        match (u, n) {
            (_, 0) | (GroupExpr::Identity, _) => GroupExpr::Identity,
            (u, 1) => u,
            (u, n) => GroupExpr::Pow(Box::new(u), n),
        }
    }

    pub fn inv(u: GroupExpr) -> GroupExpr {
        match u {
            GroupExpr::Identity => GroupExpr::Identity,
            GroupExpr::Inv(e) => *e,
            e => GroupExpr::Inv(Box::new(e)),
        }
    }

    pub fn quat(c: [ScalarExpr; 4]) -> GroupExpr {
        GroupExpr::Quat(Box::new(c))
    }

    pub fn max_var(&self) -> Option<usize> {
        match self {
            GroupExpr::Identity => None,
            GroupExpr::Quat(c) => c.iter().filter_map(|e| e.max_var()).max(),
            GroupExpr::Qexp(a) => a.max_var(),
            GroupExpr::Mul(a, b) | GroupExpr::Conj(a, b) => a.max_var().max(b.max_var()),
            GroupExpr::Pow(a, _) | GroupExpr::Inv(a) => a.max_var(),
        }
    }

    fn uses_quat(&self) -> bool {
        match self {
            GroupExpr::Quat(_) => true,
            GroupExpr::Identity | GroupExpr::Qexp(_) => false,
            GroupExpr::Mul(a, b) | GroupExpr::Conj(a, b) => a.uses_quat() || b.uses_quat(),
            GroupExpr::Pow(a, _) | GroupExpr::Inv(a) => a.uses_quat(),
        }
    }

    pub fn eval(&self, algebra: Algebra, x: &[f64]) -> GroupJet {
        match self {
            GroupExpr::Identity => GroupJet::identity(algebra),
            GroupExpr::Quat(c) => {
                let mut g = GroupJet::identity(algebra);
                for m in 0..4 {
                    g.coords[m] = c[m].eval(x);
                }
                g.renormalize();
                g
            }
            GroupExpr::Qexp(a) => GroupJet::qexp(algebra, &a.eval(x)),
            GroupExpr::Mul(a, b) => a.eval(algebra, x).mul(&b.eval(algebra, x)),
            GroupExpr::Conj(u, w) => {
                let w = w.eval(algebra, x);
                w.inverse().mul(&u.eval(algebra, x)).mul(&w)
            }
            GroupExpr::Pow(u, n) => u.eval(algebra, x).pow(*n),
            GroupExpr::Inv(u) => u.eval(algebra, x).inverse(),
        }
    }
}

/// Group coordinates as jets at a point.
#[derive(Clone, Copy, Debug)]
pub struct GroupJet {
    pub algebra: Algebra,
    pub coords: [Jet2; MAX_GROUP_DIM],
    pub order: u8,
}

/// `cos √s` with first and second derivatives in `s`.
fn cos_sqrt(s: f64) -> (f64, f64, f64) {
    if s < 0.25 {
        // Σ (-s)^k / (2k)!
        series(s, |k| factorial(2 * k))
    } else {
        let t = s.sqrt();
        let (sn, cs) = t.sin_cos();
        (cs, -sn / (2.0 * t), (sn - t * cs) / (4.0 * t * t * t))
    }
}

/// `sin √s / √s` with first and second derivatives in `s`.
fn sinc_sqrt(s: f64) -> (f64, f64, f64) {
    if s < 0.25 {
        series(s, |k| factorial(2 * k + 1))
    } else {
        let t = s.sqrt();
        let (sn, cs) = t.sin_cos();
        let t2 = t * t;
        (
            sn / t,
            (t * cs - sn) / (2.0 * t2 * t),
            (3.0 * sn - 3.0 * t * cs - t2 * sn) / (4.0 * t2 * t2 * t),
        )
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `Σ_k (-s)^k / denom(k)` and its first two derivatives, `k ≤ 14`.
fn series(s: f64, denom: impl Fn(usize) -> f64) -> (f64, f64, f64) {
    let (mut f, mut df, mut ddf) = (0.0, 0.0, 0.0);
    for k in (0..=14).rev() {
        let a = if k % 2 == 0 { 1.0 } else { -1.0 } / denom(k);
        let kf = k as f64;
        f = f * s + a;
        if k >= 1 {
            df = df * s + kf * a;
        }
        if k >= 2 {
            ddf = ddf * s + kf * (kf - 1.0) * a;
        }
    }
    (f, df, ddf)
}

impl GroupJet {
    pub fn identity(algebra: Algebra) -> Self {
        let mut coords = [Jet2::ZERO; MAX_GROUP_DIM];
        for (_, _, o) in algebra.layout() {
            coords[o] = Jet2::constant(1.0);
        }
        GroupJet {
            algebra,
            coords,
            order: 2,
        }
    }

    pub fn constant(g: &GroupElement) -> Self {
        let mut out = Self::identity(g.algebra());
        for (o, &c) in out.coords.iter_mut().zip(g.coords()) {
            *o = Jet2::constant(c);
        }
        out
    }

    /// `exp` of algebra-coordinate jets.
    pub fn qexp(algebra: Algebra, x: &[Jet2]) -> Self {
        let mut g = Self::identity(algebra);
        for (f, a, o) in algebra.layout() {
            match f {
                Factor::U1 => {
                    g.coords[o] = x[a].cos();
                    g.coords[o + 1] = x[a].sin();
                }
                Factor::Su2 => {
                    let s = x[a] * x[a] + x[a + 1] * x[a + 1] + x[a + 2] * x[a + 2];
                    let (c, dc, ddc) = cos_sqrt(s.value);
                    let (sn, dsn, ddsn) = sinc_sqrt(s.value);
                    let cj = s.compose(c, dc, ddc);
                    let sj = s.compose(sn, dsn, ddsn);
                    g.coords[o] = cj;
                    for m in 0..3 {
                        g.coords[o + 1 + m] = sj * x[a + m];
                    }
                }
            }
        }
        g
    }

    fn renormalize(&mut self) {
        for (f, _, o) in self.algebra.layout() {
            let n = f.group_dim();
            let mut s = Jet2::ZERO;
            for c in &self.coords[o..o + n] {
                s += *c * *c;
            }
            let inv = s.sqrt().recip();
            for c in &mut self.coords[o..o + n] {
                *c = *c * inv;
            }
        }
    }

    pub fn mul(&self, other: &GroupJet) -> GroupJet {
        let mut out = *self;
        out.order = self.order.min(other.order);
        for (f, _, o) in self.algebra.layout() {
            let (a, b) = (&self.coords, &other.coords);
            match f {
                Factor::U1 => {
                    out.coords[o] = a[o] * b[o] - a[o + 1] * b[o + 1];
                    out.coords[o + 1] = a[o] * b[o + 1] + a[o + 1] * b[o];
                }
                Factor::Su2 => {
                    let q = qmul(&a[o..o + 4], &b[o..o + 4]);
                    out.coords[o..o + 4].copy_from_slice(&q);
                }
            }
        }
        out.renormalize();
        out
    }

    pub fn inverse(&self) -> GroupJet {
        let mut out = *self;
        for (f, _, o) in self.algebra.layout() {
            for c in &mut out.coords[o + 1..o + f.group_dim()] {
                *c = -*c;
            }
        }
        out
    }

    pub fn pow(&self, n: i32) -> GroupJet {
        let base = if n < 0 { self.inverse() } else { *self };
        let mut out = GroupJet::identity(self.algebra);
        out.order = self.order;
        for _ in 0..n.unsigned_abs() {
            out = out.mul(&base);
        }
        out
    }

    pub fn coords(&self) -> &[Jet2] {
        &self.coords[..self.algebra.group_dim()]
    }

    pub fn value(&self) -> GroupElement {
        let c: Vec<f64> = self.coords().iter().map(|j| j.value).collect();
        GroupElement::from_coords(self.algebra, &c).expect("unit coordinates")
    }

    /// `u⁻¹ du` as a 𝔤-valued 1-form on `T^dim`.
    pub fn mc_form(&self, dim: usize) -> JetForm {
        assert!(self.order >= 1, "Maurer-Cartan form needs first derivatives");
        let space = ValueSpace::Lie(self.algebra);
        let mut out = JetForm::zero(1, dim, space, self.order - 1);
        for axis in 0..dim {
            let comp = out.component_mut(1 << axis);
            for (f, a, o) in self.algebra.layout() {
                let q = &self.coords[o..o + f.group_dim()];
                match f {
                    Factor::U1 => {
                        let (dc, ds) = (q[0].derivative(axis), q[1].derivative(axis));
                        comp[a] = q[0] * ds - q[1] * dc;
                    }
                    Factor::Su2 => {
                        let dq: Vec<Jet2> = q.iter().map(|c| c.derivative(axis)).collect();
                        let r = qmul(&qconj(q), &dq);
                        comp[a..a + 3].copy_from_slice(&r[1..4]);
                    }
                }
            }
        }
        out
    }
}

/// A group-valued field on `T^dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupField {
    pub expr: GroupExpr,
    pub algebra: Algebra,
    pub dim: usize,
}

impl GroupField {
    pub fn new(expr: GroupExpr, algebra: Algebra, dim: usize) -> Result<Self> {
        if let Some(a) = expr.max_var() {
            if a >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: a + 1,
                });
            }
        }
        if expr.uses_quat() && algebra.factors() != [Factor::Su2] {
            return Err(Error::InvalidAlgebra(
                "quaternion literals need a single su2 factor".into(),
            ));
        }
        Ok(GroupField { expr, algebra, dim })
    }

    pub fn constant(g: &GroupElement, dim: usize) -> Self {
        let expr = match crate::lie::log(g) {
            Ok(x) => GroupExpr::Qexp(AlgebraExpr::constant(g.algebra(), x.coords())),
            Err(_) => {
                // -1 in some factor: go through the midpoint.
                let half: Vec<f64> = g
                    .algebra()
                    .layout()
                    .flat_map(|(f, _, _)| match f {
                        Factor::U1 => vec![PI / 2.0],
                        Factor::Su2 => vec![PI / 2.0, 0.0, 0.0],
                    })
                    .collect();
                let h = crate::lie::exp(
                    &crate::lie::AlgebraElement::from_coords(g.algebra(), &half).unwrap(),
                );
                let rest = h.inverse().mul(g).unwrap();
                return GroupField::constant(&h, dim).times(&GroupField::constant(&rest, dim));
            }
        };
        GroupField {
            expr,
            algebra: g.algebra(),
            dim,
        }
    }

    pub fn identity(algebra: Algebra, dim: usize) -> Self {
        GroupField {
            expr: GroupExpr::Identity,
            algebra,
            dim,
        }
    }

    pub fn times(&self, other: &GroupField) -> GroupField {
        GroupField {
            expr: GroupExpr::mul(self.expr.clone(), other.expr.clone()),
            ..self.clone()
        }
    }

    pub fn pow(&self, n: i32) -> GroupField {
        GroupField {
            expr: GroupExpr::pow(self.expr.clone(), n),
            ..self.clone()
        }
    }

    /// `w⁻¹ u w`.
    pub fn conjugated_by(&self, w: &GroupField) -> GroupField {
        GroupField {
            expr: GroupExpr::conj(self.expr.clone(), w.expr.clone()),
            ..self.clone()
        }
    }

    pub fn eval(&self, x: &[f64]) -> GroupJet {
        self.expr.eval(self.algebra, x)
    }
}

/// `u*θ = u⁻¹ du`.
pub fn mc_pullback(u: &GroupField) -> VForm {
    let u = u.clone();
    let dim = u.dim;
    VForm::from_fn(1, dim, ValueSpace::Lie(u.algebra), move |x| {
        u.eval(x).mc_form(dim)
    })
}

/// `-1/6 ⟨θ ∧ [θ ∧ θ]⟩` for a 𝔤-valued 1-form `θ` at a point.
pub fn mc_three_form_at(theta: &JetForm, spec: &LieAlgebraSpec) -> JetForm {
    let tt = theta.wedge(Pairing::Bracket, theta).expect("𝔤-valued");
    theta
        .wedge(Pairing::Inner(*spec), &tt)
        .expect("𝔤-valued")
        .scale(-1.0 / 6.0)
}

/// `Θ(i, j, k)` on a single `su(2)` factor with scale `λ`: the 3-form
/// evaluated on the form `θ = i dx₁ + j dx₂ + k dx₃`, equal to `-2λ`.
pub fn theta_on_basis(lambda: f64) -> Result<f64> {
    let spec = LieAlgebraSpec::new(Algebra::su2(), &[lambda])?;
    let mut theta = JetForm::zero(1, 3, ValueSpace::Lie(Algebra::su2()), FULL_ORDER);
    for a in 0..3 {
        theta.component_mut(1 << a)[a] = Jet2::constant(1.0);
    }
    Ok(mc_three_form_at(&theta, &spec).component(0b111)[0].value)
}

/// `-1/6 ⟨θ ∧ [θ ∧ θ]⟩` for a field-level 𝔤-valued 1-form.
pub fn mc_three_form(theta: &VForm, spec: &LieAlgebraSpec) -> VForm {
    let (theta, spec) = (theta.clone(), *spec);
    VForm::from_fn(3, theta.dim, ValueSpace::Real, move |x| {
        mc_three_form_at(&theta.at(x), &spec)
    })
}

/// `u*Θ`.
pub fn mc_three_form_pullback(u: &GroupField, spec: &LieAlgebraSpec) -> VForm {
    mc_three_form(&mc_pullback(u), spec)
}

/// Nodes per Hopf coordinate in [`haar_integral`] (a `64³` product rule).
pub const HAAR_NODES: usize = 64;

/// `∫_{S³} f` against the round volume form, in Hopf coordinates
/// `q = (cos η cos ξ₁, cos η sin ξ₁, sin η cos ξ₂, sin η sin ξ₂)` with
/// Gauss-Legendre in `η ∈ [0, π/2]` and the rectangle rule in `ξ₁, ξ₂`.
pub fn haar_integral<F>(f: F) -> f64
where
    F: Fn([f64; 4]) -> f64 + Sync,
{
    sphere_chart_integral(|eta, x1, x2| {
        let q = hopf(eta, x1, x2);
        f(q) * eta.sin() * eta.cos()
    })
}

fn hopf(eta: f64, x1: f64, x2: f64) -> [f64; 4] {
    [
        eta.cos() * x1.cos(),
        eta.cos() * x1.sin(),
        eta.sin() * x2.cos(),
        eta.sin() * x2.sin(),
    ]
}

/// `∫ density(η, ξ₁, ξ₂) dη dξ₁ dξ₂` over the Hopf chart.
fn sphere_chart_integral<F>(density: F) -> f64
where
    F: Fn(f64, f64, f64) -> f64 + Sync,
{
    let (eta, w) = gauss_legendre_on(HAAR_NODES, 0.0, PI / 2.0);
    let n = HAAR_NODES;
    let h = 2.0 * PI / n as f64;
    let terms: Vec<f64> = (0..n * n * n)
        .into_par_iter()
        .map(|idx| {
            let (i, j, k) = (idx / (n * n), (idx / n) % n, idx % n);
            w[i] * density(eta[i], j as f64 * h, k as f64 * h) * h * h
        })
        .collect();
    neumaier_sum(&terms)
}

/// `∫_{S³} Θ` at `λ = 1` with the orientation in which `(i, j, k)` is
/// positive at `1`. Θ is pulled back through the Hopf chart; the chart's
/// orientation sign is `sign det[q, ∂_η q, ∂_ξ₁ q, ∂_ξ₂ q]`.
pub fn theta_sphere_integral() -> f64 {
    let spec = LieAlgebraSpec::euclidean(Algebra::su2());
    let (c, s) = (ScalarExpr::cos, ScalarExpr::sin);
    let v = ScalarExpr::var;
    let chart = GroupExpr::quat([
        c(v(0)) * c(v(1)),
        c(v(0)) * s(v(1)),
        s(v(0)) * c(v(2)),
        s(v(0)) * s(v(2)),
    ]);
    let chart = GroupField::new(chart, Algebra::su2(), 3).expect("chart");
    sphere_chart_integral(|eta, x1, x2| {
        let p = [eta, x1, x2];
        let g = chart.eval(&p);
        let density = mc_three_form_at(&g.mc_form(3), &spec).component(0b111)[0].value;
        let rows: Vec<Vec<f64>> = std::iter::once(g.coords().iter().map(|j| j.value).collect())
            .chain((0..3).map(|a| g.coords().iter().map(|j| j.grad[a]).collect()))
            .collect();
        determinant(&rows).signum() * density
    })
}

/// Derivation of the integral normalization.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Normalization {
    /// `vol(S³)`, expected `2π²`.
    pub volume: f64,
    /// `∫_{S³} Θ` at `λ = 1`, expected `-4π²`.
    pub theta_integral: f64,
    /// `λ* = -1 / ∫Θ`, expected `1/(4π²)`.
    pub lambda: f64,
}

static NORMALIZATION: Lazy<Normalization> = Lazy::new(|| {
    let volume = haar_integral(|_| 1.0);
    let theta_integral = theta_sphere_integral();
    Normalization {
        volume,
        theta_integral,
        lambda: -1.0 / theta_integral,
    }
});

pub fn normalization() -> Normalization {
    *NORMALIZATION
}

/// `λ*` for an `su(2)` factor, computed by quadrature.
pub fn normalization_constant() -> f64 {
    NORMALIZATION.lambda
}

/// `∫_{T³} u*Θ` for a strictly periodic `u`.
pub fn degree_trivial(u: &GroupField, spec: &LieAlgebraSpec, grid: usize) -> Result<f64> {
    if u.dim != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: u.dim,
        });
    }
    let trivial = crate::flat::HolonomyData::trivial(u.algebra, 3);
    let residual = crate::flat::validate_twisting(&crate::flat::TwistedField::Group(u.clone()), &trivial);
    if residual > crate::flat::TWIST_TOLERANCE {
        return Err(Error::Twisting {
            residual,
            tolerance: crate::flat::TWIST_TOLERANCE,
        });
    }
    mc_three_form_pullback(u, spec).integrate(grid)
}

/// A preimage found by the Brouwer oracle.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Preimage {
    pub point: [f64; 3],
    /// Sign in the Θ orientation.
    pub sign: i32,
    /// Determinant of `Im(u⁻¹ ∂_a u)` in the `(i, j, k)` frame.
    pub determinant: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleResult {
    pub degree: i64,
    pub preimages: Vec<Preimage>,
}

pub const MIN_DETERMINANT: f64 = 1e-6;
const DEDUP_DISTANCE: f64 = 1e-4;

/// Regular value used when none is given.
pub fn default_regular_value() -> GroupElement {
    GroupElement::from_coords(Algebra::su2(), &[0.2, 0.7, -0.4, 0.55]).expect("nonzero")
}

fn wrap(d: f64) -> f64 {
    let t = d.rem_euclid(2.0 * PI);
    if t > PI {
        t - 2.0 * PI
    } else {
        t
    }
}

/// `Im(q⁻¹ u(x))` and its Jacobian at `x`; also `Re(q⁻¹ u(x))`.
fn oracle_residual(u: &GroupField, qinv: &[f64; 4], x: &[f64]) -> ([f64; 3], [[f64; 3]; 3], f64) {
    let g = u.eval(x);
    let c = g.coords();
    let val = qmul(&qinv[..], &c.iter().map(|j| j.value).collect::<Vec<_>>());
    let mut jac = [[0.0; 3]; 3];
    for a in 0..3 {
        let d: Vec<f64> = c.iter().map(|j| j.grad[a]).collect();
        let dv = qmul(&qinv[..], &d);
        for r in 0..3 {
            jac[r][a] = dv[r + 1];
        }
    }
    ([val[1], val[2], val[3]], jac, val[0])
}

fn solve3(m: &[[f64; 3]; 3], b: &[f64; 3]) -> Option<[f64; 3]> {
    let rows: Vec<Vec<f64>> = m.iter().map(|r| r.to_vec()).collect();
    let det = determinant(&rows);
    if det.abs() < 1e-300 {
        return None;
    }
    let mut out = [0.0; 3];
    for (c, o) in out.iter_mut().enumerate() {
        let mut mc = rows.clone();
        for r in 0..3 {
            mc[r][c] = b[r];
        }
        *o = determinant(&mc) / det;
    }
    Some(out)
}

/// Brouwer degree of `u: T³ → SU(2)` at `regular_value`: the sum over
/// preimages of the orientation sign in the Θ orientation. Preimages are
/// found by Newton iteration seeded on an `n³` grid. A seed whose first
/// Newton step is shorter than two grid spacings lies next to a preimage
/// and must converge.
pub fn brouwer_degree_oracle(u: &GroupField, regular_value: &GroupElement, n: usize) -> Result<OracleResult> {
    if u.dim != 3 || u.algebra.factors() != [Factor::Su2] {
        return Err(Error::InvalidAlgebra(
            "the degree oracle needs a single su2 factor on T³".into(),
        ));
    }
    let q = regular_value.quaternion(0).expect("su2");
    let qinv = qconj(&q[..]);
    let h = 2.0 * PI / n as f64;
    let attempts: Vec<Option<Result<[f64; 3]>>> = sample_grid(3, n, |x| {
        let (f, jac, re) = oracle_residual(u, &qinv, x);
        if re <= 0.0 {
            return None;
        }
        let step = solve3(&jac, &f)?;
        if step.iter().map(|s| s * s).sum::<f64>().sqrt() >= 2.0 * h {
            return None;
        }
        let mut p = [x[0], x[1], x[2]];
        for _ in 0..60 {
            let (f, jac, re) = oracle_residual(u, &qinv, &p);
            let norm = f.iter().map(|c| c.abs()).fold(0.0, f64::max);
            if norm < 1e-13 && re > 0.0 {
                return Some(Ok(p.map(|c| c.rem_euclid(2.0 * PI))));
            }
            let Some(step) = solve3(&jac, &f) else { break };
            for a in 0..3 {
                p[a] -= step[a];
            }
        }
        Some(Err(Error::NotRegular(format!(
            "Newton iteration seeded at ({:.4}, {:.4}, {:.4}) did not converge",
            x[0], x[1], x[2]
        ))))
    });
    let mut found: Vec<[f64; 3]> = Vec::new();
    for a in attempts.into_iter().flatten() {
        let p = a?;
        let dup = found.iter().any(|f| {
            (0..3).map(|k| wrap(f[k] - p[k]).powi(2)).sum::<f64>().sqrt() < DEDUP_DISTANCE
        });
        if !dup {
            found.push(p);
        }
    }
    let mut preimages = Vec::new();
    for p in found {
        let (_, jac, _) = oracle_residual(u, &qinv, &p);
        let rows: Vec<Vec<f64>> = jac.iter().map(|r| r.to_vec()).collect();
        let det = determinant(&rows);
        if det.abs() < MIN_DETERMINANT {
            return Err(Error::NotRegular(format!(
                "Jacobian determinant {det:.3e} at a preimage"
            )));
        }
        preimages.push(Preimage {
            point: p,
            sign: if det < 0.0 { 1 } else { -1 },
            determinant: det,
        });
    }
    Ok(OracleResult {
        degree: preimages.iter().map(|p| p.sign as i64).sum(),
        preimages,
    })
}

/// The radial collapse map of degree one: `-exp(-s(r) (x - c))` with
/// `s(r) = π (1 - bump(r, 0.3, 3.1)) / r`, equal to `1` outside the ball
/// of radius 3.1 around the centre `c = (π, π, π)` and to `-1` near `c`.
pub fn degree_one_bump_map() -> GroupExpr {
    let s = ScalarExpr::Const(-PI) * (1.0 - ScalarExpr::bump(ScalarExpr::Radius, 0.3, 3.1))
        / ScalarExpr::Radius;
    let coords = (0..3)
        .map(|a| s.clone() * (ScalarExpr::var(a) - PI))
        .collect();
    GroupExpr::mul(
        GroupExpr::quat([
            ScalarExpr::Const(-1.0),
            ScalarExpr::zero(),
            ScalarExpr::zero(),
            ScalarExpr::zero(),
        ]),
        GroupExpr::Qexp(AlgebraExpr {
            algebra: Algebra::su2(),
            coords,
        }),
    )
}
