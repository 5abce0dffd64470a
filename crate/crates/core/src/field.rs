//! Smooth scalar fields on the flat torus `T^n = (ℝ / 2πℤ)^n` and their
//! quadrature.
//!
//! A field is an expression tree evaluated as a [`Jet2`]. Constructors
//! fold trivial constants (`0 + e`, `1 * e`, `-c`, ...) so that printing and
//! reparsing an expression reproduces the same tree.

use std::f64::consts::PI;
use std::ops::{Add, Div, Mul, Neg, Sub};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::jet::{Jet2, MAX_DIM};
use crate::sum::neumaier_sum;

/// Dimension of the torus; every axis has period `2π`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TorusSpec {
    dim: usize,
}

impl TorusSpec {
    pub fn new(dim: usize) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::DimensionMismatch {
                expected: MAX_DIM,
                got: dim,
            });
        }
        Ok(TorusSpec { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn volume(&self) -> f64 {
        (2.0 * PI).powi(self.dim as i32)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScalarExpr {
    Const(f64),
    /// Coordinate `x_{k+1}`.
    Var(usize),
    /// Distance to the centre `(π, …, π)` of the fundamental domain.
    Radius,
    Neg(Box<ScalarExpr>),
    Add(Box<ScalarExpr>, Box<ScalarExpr>),
    Sub(Box<ScalarExpr>, Box<ScalarExpr>),
    Mul(Box<ScalarExpr>, Box<ScalarExpr>),
    Div(Box<ScalarExpr>, Box<ScalarExpr>),
    Pow(Box<ScalarExpr>, i32),
    Sin(Box<ScalarExpr>),
    Cos(Box<ScalarExpr>),
    Exp(Box<ScalarExpr>),
    /// `1` on `[0, r0]`, `0` on `[r1, ∞)`, a C² quintic step in between.
    Bump(Box<ScalarExpr>, f64, f64),
}

use ScalarExpr as S;

impl ScalarExpr {
    pub fn zero() -> Self {
        S::Const(0.0)
    }

    pub fn one() -> Self {
        S::Const(1.0)
    }

    pub fn var(axis: usize) -> Self {
        S::Var(axis)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            S::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn add(a: Self, b: Self) -> Self {
        match (a, b) {
            (S::Const(x), S::Const(y)) => S::Const(x + y),
            (S::Const(z), e) | (e, S::Const(z)) if z == 0.0 => e,
            (a, b) => S::Add(Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(a: Self, b: Self) -> Self {
        match (a, b) {
            (S::Const(x), S::Const(y)) => S::Const(x - y),
            (e, S::Const(z)) if z == 0.0 => e,
            (S::Const(z), e) if z == 0.0 => Self::neg(e),
            (a, b) => S::Sub(Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(a: Self, b: Self) -> Self {
        match (a, b) {
            (S::Const(x), S::Const(y)) => S::Const(x * y),
            (S::Const(z), _) | (_, S::Const(z)) if z == 0.0 => S::Const(0.0),
            (S::Const(o), e) | (e, S::Const(o)) if o == 1.0 => e,
            (a, b) => S::Mul(Box::new(a), Box::new(b)),
        }
    }

    pub fn div(a: Self, b: Self) -> Self {
        match (a, b) {
            (S::Const(x), S::Const(y)) if y != 0.0 => S::Const(x / y),
            (S::Const(z), _) if z == 0.0 => S::Const(0.0),
            (e, S::Const(o)) if o == 1.0 => e,
            (a, b) => S::Div(Box::new(a), Box::new(b)),
        }
    }

    pub fn neg(a: Self) -> Self {
        match a {
            S::Const(c) => S::Const(-c),
            S::Neg(e) => *e,
            e => S::Neg(Box::new(e)),
        }
    }

    pub fn pow(a: Self, n: i32) -> Self {
        match (a, n) {
            (_, 0) => S::Const(1.0),
            (e, 1) => e,
            (S::Const(c), n) => S::Const(c.powi(n)),
            (e, n) => S::Pow(Box::new(e), n),
        }
    }

    pub fn sin(a: Self) -> Self {
        match a {
            S::Const(c) => S::Const(c.sin()),
            e => S::Sin(Box::new(e)),
        }
    }

    pub fn cos(a: Self) -> Self {
        match a {
            S::Const(c) => S::Const(c.cos()),
            e => S::Cos(Box::new(e)),
        }
    }

    pub fn exp(a: Self) -> Self {
        match a {
            S::Const(c) => S::Const(c.exp()),
            e => S::Exp(Box::new(e)),
        }
    }

    pub fn bump(a: Self, r0: f64, r1: f64) -> Self {
        S::Bump(Box::new(a), r0, r1)
    }

    /// Largest coordinate index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            S::Var(a) => Some(*a),
            S::Const(_) | S::Radius => None,
            S::Neg(e) | S::Pow(e, _) | S::Sin(e) | S::Cos(e) | S::Exp(e) | S::Bump(e, _, _) => {
                e.max_var()
            }
            S::Add(a, b) | S::Sub(a, b) | S::Mul(a, b) | S::Div(a, b) => {
                a.max_var().max(b.max_var())
            }
        }
    }

    pub fn uses_radius(&self) -> bool {
        match self {
            S::Radius => true,
            S::Const(_) | S::Var(_) => false,
            S::Neg(e) | S::Pow(e, _) | S::Sin(e) | S::Cos(e) | S::Exp(e) | S::Bump(e, _, _) => {
                e.uses_radius()
            }
            S::Add(a, b) | S::Sub(a, b) | S::Mul(a, b) | S::Div(a, b) => {
                a.uses_radius() || b.uses_radius()
            }
        }
    }

    /// Evaluates the 2-jet at `x`. Coordinates beyond `x.len()` read as 0.
    pub fn eval(&self, x: &[f64]) -> Jet2 {
        match self {
            S::Const(c) => Jet2::constant(*c),
            S::Var(a) => Jet2::variable(*a, x.get(*a).copied().unwrap_or(0.0)),
            S::Radius => radius_jet(x),
            S::Neg(e) => -e.eval(x),
            S::Add(a, b) => a.eval(x) + b.eval(x),
            S::Sub(a, b) => a.eval(x) - b.eval(x),
            S::Mul(a, b) => a.eval(x) * b.eval(x),
            S::Div(a, b) => a.eval(x) / b.eval(x),
            S::Pow(e, n) => {
                let j = e.eval(x);
                if *n < 0 {
                    j.powi(-n).recip()
                } else {
                    j.powi(*n)
                }
            }
            S::Sin(e) => e.eval(x).sin(),
            S::Cos(e) => e.eval(x).cos(),
            S::Exp(e) => e.eval(x).exp(),
            S::Bump(e, r0, r1) => bump_jet(&e.eval(x), *r0, *r1),
        }
    }

    /// Plain value at `x`, without derivatives.
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            S::Const(c) => *c,
            S::Var(a) => x.get(*a).copied().unwrap_or(0.0),
            S::Radius => x.iter().map(|c| (c - PI) * (c - PI)).sum::<f64>().sqrt(),
            S::Neg(e) => -e.value(x),
            S::Add(a, b) => a.value(x) + b.value(x),
            S::Sub(a, b) => a.value(x) - b.value(x),
            S::Mul(a, b) => a.value(x) * b.value(x),
            S::Div(a, b) => {
                let n = a.value(x);
                if n == 0.0 {
                    0.0
                } else {
                    n / b.value(x)
                }
            }
            S::Pow(e, n) => e.value(x).powi(*n),
            S::Sin(e) => e.value(x).sin(),
            S::Cos(e) => e.value(x).cos(),
            S::Exp(e) => e.value(x).exp(),
            S::Bump(e, r0, r1) => bump_value(e.value(x), *r0, *r1),
        }
    }
}

macro_rules! scalar_op {
    ($tr:ident, $method:ident) => {
        impl $tr for ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: ScalarExpr) -> ScalarExpr {
                ScalarExpr::$method(self, rhs)
            }
        }
        impl $tr<f64> for ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: f64) -> ScalarExpr {
                ScalarExpr::$method(self, S::Const(rhs))
            }
        }
        impl $tr<ScalarExpr> for f64 {
            type Output = ScalarExpr;
            fn $method(self, rhs: ScalarExpr) -> ScalarExpr {
                ScalarExpr::$method(S::Const(self), rhs)
            }
        }
    };
}

scalar_op!(Add, add);
scalar_op!(Sub, sub);
scalar_op!(Mul, mul);
scalar_op!(Div, div);

impl Neg for ScalarExpr {
    type Output = ScalarExpr;
    fn neg(self) -> ScalarExpr {
        ScalarExpr::neg(self)
    }
}

/// The radial coordinate is not differentiable at the centre; there it
/// evaluates to the zero jet, which the bump idiom never differentiates
/// through because its numerator vanishes identically near `r = 0`.
fn radius_jet(x: &[f64]) -> Jet2 {
    let mut s = Jet2::ZERO;
    for (a, &c) in x.iter().enumerate() {
        let v = Jet2::variable(a, c) - Jet2::constant(PI);
        s += v * v;
    }
    if s.value == 0.0 {
        return Jet2::ZERO;
    }
    s.sqrt()
}

fn smoothstep(t: f64) -> (f64, f64, f64) {
    // 10t³ - 15t⁴ + 6t⁵: the C² step, derivative 30 t²(1-t)²
    let s = 1.0 - t;
    (
        t * t * t * (10.0 + t * (-15.0 + 6.0 * t)),
        30.0 * t * t * s * s,
        60.0 * t * s * (1.0 - 2.0 * t),
    )
}

pub fn bump_value(s: f64, r0: f64, r1: f64) -> f64 {
    let t = (s - r0) / (r1 - r0);
    if t <= 0.0 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        1.0 - smoothstep(t).0
    }
}

fn bump_jet(s: &Jet2, r0: f64, r1: f64) -> Jet2 {
    let w = r1 - r0;
    let t = (s.value - r0) / w;
    if t <= 0.0 {
        Jet2::constant(1.0)
    } else if t >= 1.0 {
        Jet2::ZERO
    } else {
        let (f, df, ddf) = smoothstep(t);
        s.compose(1.0 - f, -df / w, -ddf / (w * w))
    }
}

/// A scalar expression bound to a torus dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct JetScalarField {
    pub expr: ScalarExpr,
    pub torus: TorusSpec,
}

impl JetScalarField {
    pub fn new(expr: ScalarExpr, torus: TorusSpec) -> Result<Self> {
        if let Some(a) = expr.max_var() {
            if a >= torus.dim() {
                return Err(Error::DimensionMismatch {
                    expected: torus.dim(),
                    got: a + 1,
                });
            }
        }
        Ok(JetScalarField { expr, torus })
    }

    pub fn eval_jet(&self, x: &[f64]) -> Result<Jet2> {
        if x.len() != self.torus.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.torus.dim(),
                got: x.len(),
            });
        }
        Ok(self.expr.eval(x))
    }

    pub fn quadrature(&self, grid: usize) -> f64 {
        let e = &self.expr;
        integrate_grid(self.torus.dim(), grid, |x| e.value(x))
    }
}

/// Uniform grid of `n^dim` points `2π i / n`, in lexicographic order with
/// the first axis slowest.
pub fn grid_point(dim: usize, n: usize, mut index: usize, out: &mut [f64]) {
    let h = 2.0 * PI / n as f64;
    for a in (0..dim).rev() {
        out[a] = (index % n) as f64 * h;
        index /= n;
    }
}

/// Evaluates `f` at every grid point in parallel; results are returned in
/// lexicographic order.
pub fn sample_grid<T, F>(dim: usize, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&[f64]) -> T + Sync,
{
    let total = n.pow(dim as u32);
    (0..total)
        .into_par_iter()
        .map(|i| {
            let mut x = [0.0; MAX_DIM];
            grid_point(dim, n, i, &mut x);
            f(&x[..dim])
        })
        .collect()
}

/// Rectangle rule `(2π/n)^dim Σ f(x)` with compensated summation in fixed
/// lexicographic order. The result does not depend on the thread count.
pub fn integrate_grid<F>(dim: usize, n: usize, f: F) -> f64
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    assert!(n >= 2, "quadrature needs at least two points per axis");
    let values = sample_grid(dim, n, f);
    let h = 2.0 * PI / n as f64;
    neumaier_sum(&values) * h.powi(dim as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn x(a: usize) -> ScalarExpr {
        ScalarExpr::var(a)
    }

    fn t3() -> TorusSpec {
        TorusSpec::new(3).unwrap()
    }

    #[test]
    fn sin_jet_at_origin() {
        let f = JetScalarField::new(ScalarExpr::sin(x(0)), t3()).unwrap();
        let j = f.eval_jet(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!((j.value, j.grad[0], j.hess[0][0]), (0.0, 1.0, 0.0));
    }

    #[test]
    fn constant_jet_is_flat() {
        let f = JetScalarField::new(S::Const(2.5), t3()).unwrap();
        let j = f.eval_jet(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(j, Jet2::constant(2.5));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        assert!(JetScalarField::new(x(3), t3()).is_err());
        let f = JetScalarField::new(x(0), t3()).unwrap();
        assert!(f.eval_jet(&[0.0, 0.0]).is_err());
        assert!(TorusSpec::new(5).is_err());
    }

    #[test]
    fn gradient_matches_central_differences() {
        let f = ScalarExpr::sin(x(0)) * ScalarExpr::cos(x(1));
        let p = [0.37, 2.1, 4.0];
        let j = f.eval(&p);
        let h = 1e-5;
        for a in 0..3 {
            let (mut lo, mut hi) = (p, p);
            lo[a] -= h;
            hi[a] += h;
            let fd = (f.value(&hi) - f.value(&lo)) / (2.0 * h);
            assert!((fd - j.grad[a]).abs() < 1e-8);
        }
    }

    #[test]
    fn quadrature_examples() {
        let one = JetScalarField::new(S::one(), t3()).unwrap();
        for n in [2, 5, 8] {
            assert_relative_eq!(one.quadrature(n), (2.0 * PI).powi(3), max_relative = 1e-14);
        }
        let s = JetScalarField::new(ScalarExpr::sin(x(0)), t3()).unwrap();
        assert!(s.quadrature(8).abs() < 1e-14);
        let c2 = JetScalarField::new(ScalarExpr::pow(ScalarExpr::cos(x(0)), 2), t3()).unwrap();
        assert!((c2.quadrature(16) - 4.0 * PI.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn doubling_the_grid_past_the_bandwidth_is_stable() {
        let f = ScalarExpr::pow(ScalarExpr::sin(2.0 * x(0) + x(2)), 2) * ScalarExpr::cos(x(1));
        let g = JetScalarField::new(f + 1.0, t3()).unwrap();
        assert!((g.quadrature(8) - g.quadrature(16)).abs() < 1e-13);
    }

    #[test]
    fn bump_is_c2_and_flat_outside() {
        let (r0, r1) = (0.3, 3.1);
        assert_eq!(bump_value(0.1, r0, r1), 1.0);
        assert_eq!(bump_value(3.2, r0, r1), 0.0);
        // One-sided derivatives at both knots vanish to second order.
        for knot in [r0, r1] {
            for side in [-1.0, 1.0] {
                let j = bump_jet(&Jet2::variable(0, knot + side * 1e-9), r0, r1);
                assert!(j.grad[0].abs() < 1e-7 && j.hess[0][0].abs() < 1e-6);
            }
        }
        // jet derivatives match central differences inside the step; the second
        // difference needs a wider step to stay above roundoff
        let h = 1e-5;
        let h2 = 1e-3;
        for s in [0.5, 1.7, 2.9] {
            let j = bump_jet(&Jet2::variable(0, s), r0, r1);
            let fd = (bump_value(s + h, r0, r1) - bump_value(s - h, r0, r1)) / (2.0 * h);
            let fd2 =
                (bump_value(s + h2, r0, r1) - 2.0 * j.value + bump_value(s - h2, r0, r1)) / (h2 * h2);
            assert!((j.grad[0] - fd).abs() < 1e-8);
            assert!((j.hess[0][0] - fd2).abs() < 1e-5);
        }
    }

    #[test]
    fn radial_quotient_is_finite_at_the_centre() {
        let s = S::mul(S::Const(PI), S::sub(S::one(), S::bump(S::Radius, 0.3, 3.1)));
        let q = S::div(s, S::Radius);
        let j = q.eval(&[PI, PI, PI]);
        assert!(j.is_zero());
        let far = q.eval(&[PI + 2.0, PI, PI]);
        assert!(far.value.is_finite() && far.value > 0.0);
    }

    #[test]
    fn constructors_fold_constants() {
        assert_eq!(S::mul(S::one(), x(0)), x(0));
        assert_eq!(S::add(x(0), S::zero()), x(0));
        assert_eq!(S::mul(S::zero(), x(1)), S::zero());
        assert_eq!(S::neg(S::Const(2.0)), S::Const(-2.0));
        assert_eq!(S::neg(S::neg(x(2))), x(2));
        assert_eq!(S::pow(x(0), 1), x(0));
    }

    #[test]
    fn grid_order_is_lexicographic() {
        let pts = sample_grid(2, 3, |x| (x[0], x[1]));
        let h = 2.0 * PI / 3.0;
        assert_eq!(pts[1], (0.0, h));
        assert_eq!(pts[3], (h, 0.0));
    }
}
