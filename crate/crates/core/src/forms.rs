//! Differential forms on `T^n` with values in `ℝ`, `𝔤` or `𝔤 ⊗ 𝔤`.
//!
//! Components are indexed by strictly increasing multi-indices, stored as
//! bitmasks (`dx_1 ∧ dx_3` is `0b101`). Wedge products follow the
//! factorial-free shuffle convention
//!
//! ```text
//! (α ∧_P β)_K = Σ_{I ⊔ J = K} sign(I, J) P(α_I, β_J)
//! ```
//!
//! so that for 1-forms `(α ∧_P β)(X, Y) = P(α(X), β(Y)) - P(α(Y), β(X))`,
//! and evaluation on vectors uses the determinant, `(dx ∧ dy)(e₁, e₂) = 1`.
//!
//! Two layers are provided. [`JetForm`] is a form at one point, each
//! component a [`Jet2`]; its `order` records how many derivatives are still
//! exact (`d` consumes one). [`VForm`] is a field-level form: a shared
//! closure producing the `JetForm` at any point, so composite forms such as
//! `cs(A)` evaluate their inputs once per point.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{integrate_grid, ScalarExpr};
use crate::jet::{Jet2, MAX_DIM};
use crate::lie::{adjoint_coords, bracket_coords, Algebra, LieAlgebraSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValueSpace {
    Real,
    Lie(Algebra),
    Tensor(Algebra),
}

impl ValueSpace {
    pub fn width(&self) -> usize {
        match self {
            ValueSpace::Real => 1,
            ValueSpace::Lie(a) => a.dim(),
            ValueSpace::Tensor(a) => a.dim() * a.dim(),
        }
    }

    fn name(&self) -> String {
        match self {
            ValueSpace::Real => "R".into(),
            ValueSpace::Lie(a) => format!("{a:?}"),
            ValueSpace::Tensor(a) => format!("{a:?}⊗{a:?}"),
        }
    }
}

/// Bilinear pairing used by [`JetForm::wedge`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Pairing {
    /// `⟨·,·⟩`: 𝔤 × 𝔤 → ℝ with per-factor scales.
    Inner(LieAlgebraSpec),
    /// `[·,·]`: 𝔤 × 𝔤 → 𝔤.
    Bracket,
    /// `⊗`: 𝔤 × 𝔤 → 𝔤 ⊗ 𝔤.
    Tensor,
    /// Multiplication by a real-valued form on either side.
    Scalar,
}

impl Pairing {
    fn name(&self) -> &'static str {
        match self {
            Pairing::Inner(_) => "inner",
            Pairing::Bracket => "bracket",
            Pairing::Tensor => "tensor",
            Pairing::Scalar => "scalar",
        }
    }

    /// Value space of the product, or `None` if undefined.
    pub fn output(&self, left: ValueSpace, right: ValueSpace) -> Option<ValueSpace> {
        use ValueSpace::*;
        match (self, left, right) {
            (Pairing::Inner(s), Lie(a), Lie(b)) if a == b && s.algebra == a => Some(Real),
            (Pairing::Bracket, Lie(a), Lie(b)) if a == b => Some(Lie(a)),
            (Pairing::Tensor, Lie(a), Lie(b)) if a == b => Some(Tensor(a)),
            (Pairing::Scalar, Real, v) | (Pairing::Scalar, v, Real) => Some(v),
            _ => None,
        }
    }
}

/// All multi-indices of `degree` elements of `{0..dim}`, in numeric order.
pub fn masks(dim: usize, degree: usize) -> impl Iterator<Item = usize> {
    (0..1usize << dim).filter(move |m| m.count_ones() as usize == degree)
}

/// `(-1)^{#(a ∈ I, b ∈ J, a > b)}`, the sign of the shuffle `(I, J)`.
pub fn shuffle_sign(i: usize, j: usize) -> f64 {
    let mut inversions = 0;
    let mut rest = j;
    while rest != 0 {
        let b = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        inversions += (i >> (b + 1)).count_ones();
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Axes in a mask, increasing.
pub fn mask_axes(mask: usize) -> Vec<usize> {
    (0..MAX_DIM).filter(|a| mask & (1 << a) != 0).collect()
}

/// Full order: values, gradients and Hessians are exact.
pub const FULL_ORDER: u8 = 2;

/// A form at a single point.
#[derive(Clone, Debug, PartialEq)]
pub struct JetForm {
    pub degree: usize,
    pub dim: usize,
    pub space: ValueSpace,
    /// Number of exact derivative orders carried by the components.
    pub order: u8,
    comps: Vec<Jet2>,
}

impl JetForm {
    pub fn zero(degree: usize, dim: usize, space: ValueSpace, order: u8) -> Self {
        JetForm {
            degree,
            dim,
            space,
            order,
            comps: vec![Jet2::ZERO; (1 << dim) * space.width()],
        }
    }

    pub fn width(&self) -> usize {
        self.space.width()
    }

    pub fn component(&self, mask: usize) -> &[Jet2] {
        let w = self.width();
        &self.comps[mask * w..(mask + 1) * w]
    }

    pub fn component_mut(&mut self, mask: usize) -> &mut [Jet2] {
        let w = self.width();
        &mut self.comps[mask * w..(mask + 1) * w]
    }

    pub fn masks(&self) -> impl Iterator<Item = usize> {
        masks(self.dim, self.degree)
    }

    fn same_shape(&self, other: &JetForm, op: &'static str) -> Result<()> {
        if self.degree != other.degree || self.dim != other.dim || self.space != other.space {
            return Err(Error::FormType(format!(
                "{op}: degree {} {} vs degree {} {}",
                self.degree,
                self.space.name(),
                other.degree,
                other.space.name()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &JetForm) -> Result<JetForm> {
        self.same_shape(other, "sum")?;
        let mut out = self.clone();
        out.order = self.order.min(other.order);
        for (a, b) in out.comps.iter_mut().zip(&other.comps) {
            *a += *b;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &JetForm) -> Result<JetForm> {
        self.same_shape(other, "difference")?;
        let mut out = self.clone();
        out.order = self.order.min(other.order);
        for (a, b) in out.comps.iter_mut().zip(&other.comps) {
            *a -= *b;
        }
        Ok(out)
    }

    pub fn scale(&self, c: f64) -> JetForm {
        let mut out = self.clone();
        out.comps.iter_mut().for_each(|j| *j = j.scale(c));
        out
    }

    /// `P`-wedge product, see the module documentation.
    pub fn wedge(&self, pairing: Pairing, other: &JetForm) -> Result<JetForm> {
        let space = pairing
            .output(self.space, other.space)
            .ok_or_else(|| Error::PairingMismatch {
                pairing: pairing.name(),
                left: self.space.name(),
                right: other.space.name(),
            })?;
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let degree = self.degree + other.degree;
        let mut out = JetForm::zero(degree, self.dim, space, self.order.min(other.order));
        if degree > self.dim {
            return Ok(out);
        }
        let (wl, wr) = (self.width(), other.width());
        let mut tmp = vec![Jet2::ZERO; space.width()];
        for i in self.masks() {
            for j in other.masks() {
                if i & j != 0 {
                    continue;
                }
                let sign = shuffle_sign(i, j);
                let (a, b) = (self.component(i), other.component(j));
                match pairing {
                    Pairing::Inner(spec) => {
                        let mut s = Jet2::ZERO;
                        for c in 0..wl {
                            s += (a[c] * b[c]).scale(spec.weight(c));
                        }
                        tmp[0] = s;
                    }
                    Pairing::Bracket => {
                        let ValueSpace::Lie(alg) = space else { unreachable!() };
                        bracket_coords(&alg, a, b, &mut tmp);
                    }
                    Pairing::Tensor => {
                        for c in 0..wl {
                            for e in 0..wr {
                                tmp[c * wr + e] = a[c] * b[e];
                            }
                        }
                    }
                    Pairing::Scalar => {
                        if self.space == ValueSpace::Real {
                            for c in 0..wr {
                                tmp[c] = a[0] * b[c];
                            }
                        } else {
                            for c in 0..wl {
                                tmp[c] = a[c] * b[0];
                            }
                        }
                    }
                }
                for (o, t) in out.component_mut(i | j).iter_mut().zip(&tmp) {
                    *o += t.scale(sign);
                }
            }
        }
        Ok(out)
    }

    /// Exterior derivative. A top-degree form maps to the zero object of
    /// degree `n + 1`.
    pub fn d(&self) -> Result<JetForm> {
        if self.order == 0 {
            return Err(Error::FormType(
                "exterior derivative of a form with no derivative data".into(),
            ));
        }
        let w = self.width();
        let mut out = JetForm::zero(self.degree + 1, self.dim, self.space, self.order - 1);
        if self.degree >= self.dim {
            return Ok(out);
        }
        for k in masks(self.dim, self.degree + 1) {
            for a in mask_axes(k) {
                let i = k & !(1 << a);
                let sign = if (i & ((1 << a) - 1)).count_ones() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                for c in 0..w {
                    let t = self.component(i)[c].derivative(a).scale(sign);
                    out.component_mut(k)[c] += t;
                }
            }
        }
        Ok(out)
    }

    /// `Ad_g` applied to every component, `g` given by group-coordinate jets.
    pub fn adjoint(&self, g: &[Jet2], g_order: u8) -> Result<JetForm> {
        let ValueSpace::Lie(alg) = self.space else {
            return Err(Error::FormType("adjoint action needs a 𝔤-valued form".into()));
        };
        let mut out = self.clone();
        out.order = self.order.min(g_order);
        for m in self.masks() {
            adjoint_coords(&alg, g, self.component(m), out.component_mut(m));
        }
        Ok(out)
    }

    /// Contracts a `𝔤 ⊗ 𝔤`-valued form with the inner product.
    pub fn contract_inner(&self, spec: &LieAlgebraSpec) -> Result<JetForm> {
        let ValueSpace::Tensor(alg) = self.space else {
            return Err(Error::FormType("contraction needs a 𝔤⊗𝔤-valued form".into()));
        };
        let d = alg.dim();
        let mut out = JetForm::zero(self.degree, self.dim, ValueSpace::Real, self.order);
        for m in self.masks() {
            let t = self.component(m);
            let mut s = Jet2::ZERO;
            for c in 0..d {
                s += t[c * d + c].scale(spec.weight(c));
            }
            out.component_mut(m)[0] = s;
        }
        Ok(out)
    }

    /// Contracts a `𝔤 ⊗ 𝔤`-valued form with the bracket.
    pub fn contract_bracket(&self) -> Result<JetForm> {
        let ValueSpace::Tensor(alg) = self.space else {
            return Err(Error::FormType("contraction needs a 𝔤⊗𝔤-valued form".into()));
        };
        let d = alg.dim();
        let mut out = JetForm::zero(self.degree, self.dim, ValueSpace::Lie(alg), self.order);
        let mut e = vec![0.0; d];
        let mut f = vec![0.0; d];
        let mut b = vec![0.0; d];
        for m in self.masks() {
            for c in 0..d {
                for c2 in 0..d {
                    e.iter_mut().for_each(|v| *v = 0.0);
                    f.iter_mut().for_each(|v| *v = 0.0);
                    e[c] = 1.0;
                    f[c2] = 1.0;
                    bracket_coords(&alg, &e, &f, &mut b);
                    let t = self.component(m)[c * d + c2];
                    for (o, bv) in out.component_mut(m).iter_mut().zip(&b) {
                        if *bv != 0.0 {
                            *o += t.scale(*bv);
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// `α(v_1, …, v_k)` by the determinant convention.
    pub fn evaluate(&self, vectors: &[Vec<f64>]) -> Result<Vec<f64>> {
        if vectors.len() != self.degree {
            return Err(Error::DimensionMismatch {
                expected: self.degree,
                got: vectors.len(),
            });
        }
        if let Some(v) = vectors.iter().find(|v| v.len() != self.dim) {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        let mut out = vec![0.0; self.width()];
        for m in self.masks() {
            let axes = mask_axes(m);
            let mat: Vec<Vec<f64>> = axes
                .iter()
                .map(|&a| vectors.iter().map(|v| v[a]).collect())
                .collect();
            let det = determinant(&mat);
            for (o, c) in out.iter_mut().zip(self.component(m)) {
                *o += det * c.value;
            }
        }
        Ok(out)
    }

    /// Values of all components, mask by mask.
    pub fn values(&self) -> Vec<f64> {
        self.masks()
            .flat_map(|m| self.component(m).iter().map(|j| j.value).collect::<Vec<_>>())
            .collect()
    }

    /// Largest absolute component value; NaN counts as infinite.
    pub fn max_abs(&self) -> f64 {
        self.values()
            .iter()
            .fold(0.0, |m, v| if v.is_nan() { f64::INFINITY } else { m.max(v.abs()) })
    }

    /// Largest absolute difference of component values.
    pub fn max_diff(&self, other: &JetForm) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }
}

pub(crate) fn determinant(m: &[Vec<f64>]) -> f64 {
    match m.len() {
        0 => 1.0,
        1 => m[0][0],
        n => (0..n)
            .map(|col| {
                let minor: Vec<Vec<f64>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|(c, _)| *c != col)
                            .map(|(_, v)| *v)
                            .collect()
                    })
                    .collect();
                let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
                sign * m[0][col] * determinant(&minor)
            })
            .sum(),
    }
}

type FormFn = dyn Fn(&[f64]) -> JetForm + Send + Sync;

/// A form field on `T^n`, evaluated lazily.
#[derive(Clone)]
pub struct VForm {
    pub degree: usize,
    pub dim: usize,
    pub space: ValueSpace,
    eval: Arc<FormFn>,
}

impl fmt::Debug for VForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "VForm(degree {}, dim {}, {})",
            self.degree,
            self.dim,
            self.space.name()
        )
    }
}

impl VForm {
    /// Wraps a pointwise evaluator. The closure must return forms of the
    /// declared shape.
    pub fn from_fn<F>(degree: usize, dim: usize, space: ValueSpace, f: F) -> Self
    where
        F: Fn(&[f64]) -> JetForm + Send + Sync + 'static,
    {
        VForm {
            degree,
            dim,
            space,
            eval: Arc::new(f),
        }
    }

    pub fn zero(degree: usize, dim: usize, space: ValueSpace) -> Self {
        Self::from_fn(degree, dim, space, move |_| {
            JetForm::zero(degree, dim, space, FULL_ORDER)
        })
    }

    pub fn at(&self, x: &[f64]) -> JetForm {
        (self.eval)(x)
    }

    pub fn wedge(&self, pairing: Pairing, other: &VForm) -> Result<VForm> {
        let space = pairing
            .output(self.space, other.space)
            .ok_or_else(|| Error::PairingMismatch {
                pairing: pairing.name(),
                left: self.space.name(),
                right: other.space.name(),
            })?;
        let (a, b) = (self.clone(), other.clone());
        Ok(VForm::from_fn(
            self.degree + other.degree,
            self.dim,
            space,
            move |x| a.at(x).wedge(pairing, &b.at(x)).expect("checked pairing"),
        ))
    }

    pub fn d(&self) -> VForm {
        let a = self.clone();
        VForm::from_fn(self.degree + 1, self.dim, self.space, move |x| {
            a.at(x).d().expect("field-level forms carry derivatives")
        })
    }

    fn check_shape(&self, other: &VForm) -> Result<()> {
        if self.degree != other.degree || self.dim != other.dim || self.space != other.space {
            return Err(Error::FormType(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }

    pub fn add(&self, other: &VForm) -> Result<VForm> {
        self.check_shape(other)?;
        let (a, b) = (self.clone(), other.clone());
        Ok(VForm::from_fn(self.degree, self.dim, self.space, move |x| {
            a.at(x).add(&b.at(x)).expect("checked shape")
        }))
    }

    pub fn sub(&self, other: &VForm) -> Result<VForm> {
        self.check_shape(other)?;
        let (a, b) = (self.clone(), other.clone());
        Ok(VForm::from_fn(self.degree, self.dim, self.space, move |x| {
            a.at(x).sub(&b.at(x)).expect("checked shape")
        }))
    }

    pub fn scale(&self, c: f64) -> VForm {
        let a = self.clone();
        VForm::from_fn(self.degree, self.dim, self.space, move |x| a.at(x).scale(c))
    }

    /// `dα + [A ∧ α]` for a 𝔤-valued 1-form `A`.
    pub fn twisted_derivative(&self, connection: &VForm) -> Result<VForm> {
        if !matches!(self.space, ValueSpace::Lie(_)) || connection.degree != 1 {
            return Err(Error::FormType(
                "twisted derivative needs a 𝔤-valued form and a connection 1-form".into(),
            ));
        }
        self.d().add(&connection.wedge(Pairing::Bracket, self)?)
    }

    pub fn evaluate(&self, x: &[f64], vectors: &[Vec<f64>]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        self.at(x).evaluate(vectors)
    }

    /// `∫_{T^n} ω` for a real top-degree form, positive orientation
    /// `dx_1 ∧ … ∧ dx_n`.
    pub fn integrate(&self, grid: usize) -> Result<f64> {
        if self.degree != self.dim || self.space != ValueSpace::Real {
            return Err(Error::FormType(format!(
                "integration needs a real top-degree form, got {self:?}"
            )));
        }
        let top = (1 << self.dim) - 1;
        Ok(integrate_grid(self.dim, grid, |x| {
            self.at(x).component(top)[0].value
        }))
    }
}

/// A 𝔤-valued function given by one expression per algebra coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraExpr {
    pub algebra: Algebra,
    pub coords: Vec<ScalarExpr>,
}

impl AlgebraExpr {
    pub fn zero(algebra: Algebra) -> Self {
        AlgebraExpr {
            algebra,
            coords: vec![ScalarExpr::zero(); algebra.dim()],
        }
    }

    pub fn constant(algebra: Algebra, coords: &[f64]) -> Self {
        AlgebraExpr {
            algebra,
            coords: coords.iter().map(|&c| ScalarExpr::Const(c)).collect(),
        }
    }

    /// Basis vector `index` of factor `factor`.
    pub fn basis(algebra: Algebra, factor: usize, index: usize) -> Result<Self> {
        let (f, off, _) = algebra
            .layout()
            .nth(factor)
            .ok_or_else(|| Error::InvalidAlgebra(format!("no factor {}", factor + 1)))?;
        if index >= f.algebra_dim() {
            return Err(Error::InvalidAlgebra(format!(
                "factor {} ({f}) has no basis vector {}",
                factor + 1,
                ["i", "j", "k"][index.min(2)]
            )));
        }
        let mut out = Self::zero(algebra);
        out.coords[off + index] = ScalarExpr::one();
        Ok(out)
    }

    pub fn add(&self, other: &AlgebraExpr) -> Result<AlgebraExpr> {
        if self.algebra != other.algebra {
            return Err(Error::AlgebraMismatch(format!(
                "{:?} vs {:?}",
                self.algebra, other.algebra
            )));
        }
        Ok(AlgebraExpr {
            algebra: self.algebra,
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| ScalarExpr::add(a.clone(), b.clone()))
                .collect(),
        })
    }

    pub fn neg(&self) -> AlgebraExpr {
        self.map(|c| ScalarExpr::neg(c.clone()))
    }

    pub fn scale(&self, s: &ScalarExpr) -> AlgebraExpr {
        self.map(|c| ScalarExpr::mul(s.clone(), c.clone()))
    }

    pub fn map(&self, f: impl Fn(&ScalarExpr) -> ScalarExpr) -> AlgebraExpr {
        AlgebraExpr {
            algebra: self.algebra,
            coords: self.coords.iter().map(f).collect(),
        }
    }

    pub fn max_var(&self) -> Option<usize> {
        self.coords.iter().filter_map(|c| c.max_var()).max()
    }

    pub fn eval(&self, x: &[f64]) -> Vec<Jet2> {
        self.coords.iter().map(|c| c.eval(x)).collect()
    }

    /// The field as a degree-0 form.
    pub fn to_vform(&self, dim: usize) -> VForm {
        let e = self.clone();
        let space = ValueSpace::Lie(self.algebra);
        VForm::from_fn(0, dim, space, move |x| {
            let mut out = JetForm::zero(0, dim, space, FULL_ORDER);
            for (o, c) in out.component_mut(0).iter_mut().zip(&e.coords) {
                *o = c.eval(x);
            }
            out
        })
    }
}

/// A form with expression coefficients: `Σ_I c_I dx_I`, masks increasing.
#[derive(Clone, Debug, PartialEq)]
pub struct FormExpr {
    pub degree: usize,
    pub space: ValueSpace,
    /// `(mask, coefficients)`, one coefficient per value coordinate.
    pub terms: Vec<(usize, Vec<ScalarExpr>)>,
}

impl FormExpr {
    pub fn zero(degree: usize, space: ValueSpace) -> Self {
        FormExpr {
            degree,
            space,
            terms: Vec::new(),
        }
    }

    /// `dx_axis`.
    pub fn differential(axis: usize) -> Self {
        FormExpr {
            degree: 1,
            space: ValueSpace::Real,
            terms: vec![(1 << axis, vec![ScalarExpr::one()])],
        }
    }

    fn normalized(mut self) -> Self {
        self.terms.sort_by_key(|t| t.0);
        let mut merged: Vec<(usize, Vec<ScalarExpr>)> = Vec::new();
        for (m, c) in self.terms {
            match merged.last_mut() {
                Some((lm, lc)) if *lm == m => {
                    for (a, b) in lc.iter_mut().zip(c) {
                        *a = ScalarExpr::add(a.clone(), b);
                    }
                }
                _ => merged.push((m, c)),
            }
        }
        merged.retain(|(_, c)| c.iter().any(|e| !e.is_zero()));
        self.terms = merged;
        self
    }

    pub fn add(&self, other: &FormExpr) -> Result<FormExpr> {
        if self.degree != other.degree || self.space != other.space {
            return Err(Error::FormType(format!(
                "cannot add a degree-{} {} form to a degree-{} {} form",
                self.degree,
                self.space.name(),
                other.degree,
                other.space.name()
            )));
        }
        let mut out = self.clone();
        out.terms.extend(other.terms.iter().cloned());
        Ok(out.normalized())
    }

    pub fn neg(&self) -> FormExpr {
        self.map(|c| ScalarExpr::neg(c.clone()))
    }

    fn map(&self, f: impl Fn(&ScalarExpr) -> ScalarExpr) -> FormExpr {
        FormExpr {
            degree: self.degree,
            space: self.space,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (*m, c.iter().map(&f).collect()))
                .collect(),
        }
        .normalized()
    }

    /// Multiplies every coefficient by a scalar function.
    pub fn scale(&self, s: &ScalarExpr) -> FormExpr {
        self.map(|c| ScalarExpr::mul(s.clone(), c.clone()))
    }

    /// `X · ω` for a real form `ω`, giving a 𝔤-valued form.
    pub fn times_algebra(&self, x: &AlgebraExpr) -> Result<FormExpr> {
        if self.space != ValueSpace::Real {
            return Err(Error::FormType(
                "an algebra element can only multiply a real form".into(),
            ));
        }
        Ok(FormExpr {
            degree: self.degree,
            space: ValueSpace::Lie(x.algebra),
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (*m, x.scale(&c[0]).coords))
                .collect(),
        }
        .normalized())
    }

    /// Wedge product where at least one side is real.
    pub fn wedge(&self, other: &FormExpr) -> Result<FormExpr> {
        let space = match (self.space, other.space) {
            (ValueSpace::Real, s) | (s, ValueSpace::Real) => s,
            _ => {
                return Err(Error::FormType(
                    "wedge of two 𝔤-valued forms needs an explicit pairing".into(),
                ))
            }
        };
        let mut terms = Vec::new();
        for (i, a) in &self.terms {
            for (j, b) in &other.terms {
                if i & j != 0 {
                    continue;
                }
                let sign = shuffle_sign(*i, *j);
                let coeffs: Vec<ScalarExpr> = if self.space == ValueSpace::Real {
                    b.iter().map(|c| ScalarExpr::mul(a[0].clone(), c.clone())).collect()
                } else {
                    a.iter().map(|c| ScalarExpr::mul(c.clone(), b[0].clone())).collect()
                };
                let coeffs = if sign < 0.0 {
                    coeffs.into_iter().map(ScalarExpr::neg).collect()
                } else {
                    coeffs
                };
                terms.push((i | j, coeffs));
            }
        }
        Ok(FormExpr {
            degree: self.degree + other.degree,
            space,
            terms,
        }
        .normalized())
    }

    pub fn max_var(&self) -> Option<usize> {
        self.terms
            .iter()
            .map(|(m, c)| {
                let top = (usize::BITS - m.leading_zeros()) as usize;
                let coeff = c.iter().filter_map(|e| e.max_var()).max();
                coeff.max(top.checked_sub(1))
            })
            .max()
            .flatten()
    }

    pub fn to_vform(&self, dim: usize) -> Result<VForm> {
        if let Some(a) = self.max_var() {
            if a >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: a + 1,
                });
            }
        }
        let e = self.clone();
        let (degree, space) = (self.degree, self.space);
        Ok(VForm::from_fn(degree, dim, space, move |x| {
            let mut out = JetForm::zero(degree, dim, space, FULL_ORDER);
            for (m, coeffs) in &e.terms {
                for (o, c) in out.component_mut(*m).iter_mut().zip(coeffs) {
                    *o = c.eval(x);
                }
            }
            out
        }))
    }
}

/// Real coordinate 1-forms `dx_a` at the given order, for tests and
/// builders.
pub fn basis_one_form(axis: usize, dim: usize) -> JetForm {
    let mut out = JetForm::zero(1, dim, ValueSpace::Real, FULL_ORDER);
    out.component_mut(1 << axis)[0] = Jet2::constant(1.0);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_form_expr, random_lie_form};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use ScalarExpr as S;

    fn su2() -> Algebra {
        Algebra::su2()
    }

    fn lie1(coeffs: &[(usize, [f64; 3])], dim: usize) -> JetForm {
        let mut f = JetForm::zero(1, dim, ValueSpace::Lie(su2()), FULL_ORDER);
        for (axis, c) in coeffs {
            for m in 0..3 {
                f.component_mut(1 << axis)[m] = Jet2::constant(c[m]);
            }
        }
        f
    }

    #[test]
    fn inner_wedge_of_i_dx_and_i_dy() {
        let spec = LieAlgebraSpec::euclidean(su2());
        let a = lie1(&[(0, [1.0, 0.0, 0.0])], 3);
        let b = lie1(&[(1, [1.0, 0.0, 0.0])], 3);
        let w = a.wedge(Pairing::Inner(spec), &b).unwrap();
        assert_eq!(w.component(0b011)[0].value, 1.0);
        assert_eq!(w.max_abs(), 1.0);
    }

    #[test]
    fn bracket_wedge_by_basis_expansion() {
        let a = lie1(&[(0, [1.0, 0.0, 0.0])], 3);
        let b = lie1(&[(1, [0.0, 1.0, 0.0])], 3);
        let w = a.wedge(Pairing::Bracket, &b).unwrap();
        // [A(∂x), B(∂y)] - [A(∂y), B(∂x)] = [i, j] = 2k
        let on = w.evaluate(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        assert_eq!(on, vec![0.0, 0.0, 2.0]);
        assert_eq!(w.component(0b011)[2].value, 2.0);
    }

    #[test]
    fn tensor_wedge_contracts_to_bracket_wedge() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = [0.3, 1.7, 4.4];
        let a = random_lie_form(&mut rng, su2(), 3, 1).to_vform(3).unwrap().at(&x);
        let b = random_lie_form(&mut rng, su2(), 3, 1).to_vform(3).unwrap().at(&x);
        let via_tensor = a.wedge(Pairing::Tensor, &b).unwrap().contract_bracket().unwrap();
        let direct = a.wedge(Pairing::Bracket, &b).unwrap();
        assert!(via_tensor.max_diff(&direct).unwrap() < 1e-13);
        let spec = LieAlgebraSpec::new(su2(), &[2.5]).unwrap();
        let via_tensor = a.wedge(Pairing::Tensor, &b).unwrap().contract_inner(&spec).unwrap();
        let direct = a.wedge(Pairing::Inner(spec), &b).unwrap();
        assert!(via_tensor.max_diff(&direct).unwrap() < 1e-13);
    }

    #[test]
    fn mismatched_pairings_are_rejected() {
        let a = lie1(&[(0, [1.0, 0.0, 0.0])], 3);
        let r = basis_one_form(1, 3);
        assert!(matches!(
            a.wedge(Pairing::Bracket, &r),
            Err(Error::PairingMismatch { .. })
        ));
        let spec = LieAlgebraSpec::euclidean(Algebra::u1());
        assert!(a.wedge(Pairing::Inner(spec), &a).is_err());
    }

    #[test]
    fn exterior_derivative_examples() {
        let f = FormExpr::differential(1).scale(&S::sin(S::var(0)));
        let df = f.to_vform(3).unwrap().d().at(&[0.4, 0.0, 0.0]);
        assert!((df.component(0b011)[0].value - 0.4f64.cos()).abs() < 1e-15);
        assert_eq!(df.max_abs(), df.component(0b011)[0].value.abs());
        let c = FormExpr::differential(0).scale(&S::Const(3.0));
        assert_eq!(c.to_vform(3).unwrap().d().at(&[1.0, 2.0, 3.0]).max_abs(), 0.0);
    }

    #[test]
    fn d_of_top_form_is_the_zero_object() {
        let top = FormExpr::differential(0)
            .wedge(&FormExpr::differential(1))
            .unwrap()
            .to_vform(2)
            .unwrap();
        let dd = top.d().at(&[0.1, 0.2]);
        assert_eq!(dd.degree, 3);
        assert_eq!(dd.max_abs(), 0.0);
    }

    #[test]
    fn evaluate_examples() {
        let w = FormExpr::differential(0)
            .wedge(&FormExpr::differential(1))
            .unwrap()
            .to_vform(3)
            .unwrap();
        let (e1, e2) = (vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]);
        let x = [0.0; 3];
        assert_eq!(w.evaluate(&x, &[e1.clone(), e2.clone()]).unwrap(), vec![1.0]);
        assert_eq!(w.evaluate(&x, &[e2, e1]).unwrap(), vec![-1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = random_form_expr(&mut rng, 3, 2).to_vform(3).unwrap();
        let v = vec![0.3, -1.2, 0.8];
        assert_eq!(r.evaluate(&[1.0, 2.0, 3.0], &[v.clone(), v]).unwrap(), vec![0.0]);
        assert!(w.evaluate(&[0.0; 2], &[vec![1.0; 3], vec![1.0; 3]]).is_err());
    }

    #[test]
    fn integrate_examples() {
        use std::f64::consts::PI;
        let vol = FormExpr::differential(0)
            .wedge(&FormExpr::differential(1))
            .unwrap()
            .wedge(&FormExpr::differential(2))
            .unwrap();
        let v = vol.to_vform(3).unwrap();
        assert!((v.integrate(8).unwrap() - 8.0 * PI.powi(3)).abs() < 1e-12);
        let c2 = vol.scale(&S::pow(S::cos(S::var(0)), 2)).to_vform(3).unwrap();
        assert!((c2.integrate(16).unwrap() - 4.0 * PI.powi(3)).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let beta = random_form_expr(&mut rng, 3, 2).to_vform(3).unwrap();
        assert!(beta.d().integrate(32).unwrap().abs() < 1e-11);
        assert!(beta.integrate(8).is_err());
    }

    #[test]
    fn twisted_derivative_example() {
        let alg = su2();
        let a = FormExpr::differential(0)
            .times_algebra(&AlgebraExpr::basis(alg, 0, 0).unwrap())
            .unwrap()
            .to_vform(3)
            .unwrap();
        let alpha = FormExpr::differential(1)
            .times_algebra(&AlgebraExpr::basis(alg, 0, 1).unwrap())
            .unwrap()
            .to_vform(3)
            .unwrap();
        let got = alpha.twisted_derivative(&a).unwrap().at(&[0.5, 0.5, 0.5]);
        assert_eq!(got.component(0b011)[2].value, 2.0);
        let zero = VForm::zero(1, 3, ValueSpace::Lie(alg));
        let plain = alpha.twisted_derivative(&zero).unwrap().at(&[0.5, 0.5, 0.5]);
        assert_eq!(plain.max_abs(), 0.0);
    }

    #[test]
    fn shuffle_signs() {
        assert_eq!(shuffle_sign(0b01, 0b10), 1.0);
        assert_eq!(shuffle_sign(0b10, 0b01), -1.0);
        assert_eq!(shuffle_sign(0b100, 0b011), 1.0);
        assert_eq!(shuffle_sign(0b010, 0b101), -1.0);
    }

    #[test]
    fn symbolic_wedge_is_antisymmetric() {
        let dx = FormExpr::differential(0);
        let dy = FormExpr::differential(1);
        let a = dx.wedge(&dy).unwrap();
        let b = dy.wedge(&dx).unwrap();
        assert_eq!(a.add(&b).unwrap(), FormExpr::zero(2, ValueSpace::Real));
        assert_eq!(dx.wedge(&dx).unwrap().terms.len(), 0);
    }
}
