//! Second-order jets: a value together with its exact gradient and Hessian.
//!
//! Jets are the carrier for every pointwise computation in the crate. A
//! jet of a smooth function at a point is propagated through arithmetic
//! and analytic primitives with the product and chain rules truncated at
//! order two, so first and second derivatives are exact up to rounding.
//!
//! The torus dimension never exceeds [`MAX_DIM`]; unused slots stay zero.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

/// Largest supported torus dimension.
pub const MAX_DIM: usize = 4;

/// Value, gradient and Hessian of a real function at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub grad: [f64; MAX_DIM],
    pub hess: [[f64; MAX_DIM]; MAX_DIM],
}

impl Default for Jet2 {
    fn default() -> Self {
        Self::ZERO
    }
}

impl Jet2 {
    pub const ZERO: Jet2 = Jet2 {
        value: 0.0,
        grad: [0.0; MAX_DIM],
        hess: [[0.0; MAX_DIM]; MAX_DIM],
    };

    pub fn constant(value: f64) -> Self {
        Jet2 {
            value,
            ..Self::ZERO
        }
    }

    /// The coordinate function `x_axis` evaluated at `at`.
    pub fn variable(axis: usize, at: f64) -> Self {
        let mut j = Self::constant(at);
        j.grad[axis] = 1.0;
        j
    }

    /// True when value, gradient and Hessian are all exactly zero.
    pub fn is_zero(&self) -> bool {
        self.value == 0.0
            && self.grad.iter().all(|&g| g == 0.0)
            && self.hess.iter().flatten().all(|&h| h == 0.0)
    }

    /// Partial derivative along `axis`. The result is only a 1-jet: its
    /// Hessian is unknown and set to NaN so accidental use is visible.
    pub fn derivative(&self, axis: usize) -> Jet2 {
        Jet2 {
            value: self.grad[axis],
            grad: self.hess[axis],
            hess: [[f64::NAN; MAX_DIM]; MAX_DIM],
        }
    }

    /// Chain rule for `f(self)` given `f`, `f'` and `f''` at `self.value`.
    pub fn compose(&self, f: f64, df: f64, ddf: f64) -> Jet2 {
        let mut out = Jet2::constant(f);
        for a in 0..MAX_DIM {
            out.grad[a] = df * self.grad[a];
            for b in 0..MAX_DIM {
                out.hess[a][b] = ddf * self.grad[a] * self.grad[b] + df * self.hess[a][b];
            }
        }
        out
    }

    pub fn scale(&self, c: f64) -> Jet2 {
        let mut out = *self;
        out.value *= c;
        for a in 0..MAX_DIM {
            out.grad[a] *= c;
            for b in 0..MAX_DIM {
                out.hess[a][b] *= c;
            }
        }
        out
    }

    pub fn sin(&self) -> Jet2 {
        let (s, c) = self.value.sin_cos();
        self.compose(s, c, -s)
    }

    pub fn cos(&self) -> Jet2 {
        let (s, c) = self.value.sin_cos();
        self.compose(c, -s, -c)
    }

    pub fn exp(&self) -> Jet2 {
        let e = self.value.exp();
        self.compose(e, e, e)
    }

    pub fn sqrt(&self) -> Jet2 {
        let s = self.value.sqrt();
        self.compose(s, 0.5 / s, -0.25 / (s * s * s))
    }

    pub fn recip(&self) -> Jet2 {
        let v = self.value;
        self.compose(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }

    pub fn powi(&self, n: i32) -> Jet2 {
        match n {
            0 => Jet2::constant(1.0),
            1 => *self,
            _ => {
                let v = self.value;
                let nf = n as f64;
                self.compose(
                    v.powi(n),
                    nf * v.powi(n - 1),
                    nf * (nf - 1.0) * v.powi(n - 2),
                )
            }
        }
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(mut self, rhs: Jet2) -> Jet2 {
        self += rhs;
        self
    }
}

impl AddAssign for Jet2 {
    fn add_assign(&mut self, rhs: Jet2) {
        self.value += rhs.value;
        for a in 0..MAX_DIM {
            self.grad[a] += rhs.grad[a];
            for b in 0..MAX_DIM {
                self.hess[a][b] += rhs.hess[a][b];
            }
        }
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(mut self, rhs: Jet2) -> Jet2 {
        self -= rhs;
        self
    }
}

impl SubAssign for Jet2 {
    fn sub_assign(&mut self, rhs: Jet2) {
        self.value -= rhs.value;
        for a in 0..MAX_DIM {
            self.grad[a] -= rhs.grad[a];
            for b in 0..MAX_DIM {
                self.hess[a][b] -= rhs.hess[a][b];
            }
        }
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: Jet2) -> Jet2 {
        let (u, v) = (self, rhs);
        let mut out = Jet2::constant(u.value * v.value);
        for a in 0..MAX_DIM {
            out.grad[a] = u.grad[a] * v.value + u.value * v.grad[a];
            for b in 0..MAX_DIM {
                out.hess[a][b] = u.hess[a][b] * v.value
                    + u.grad[a] * v.grad[b]
                    + u.grad[b] * v.grad[a]
                    + u.value * v.hess[a][b];
            }
        }
        out
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: f64) -> Jet2 {
        self.scale(rhs)
    }
}

/// Quotient of jets. A numerator that is the exact zero jet yields the
/// zero jet whatever the denominator; this keeps `(1 - bump(r, r0, r1)) / r`
/// well defined at the centre of the radial chart, where the numerator
/// vanishes identically on a neighbourhood.
impl Div for Jet2 {
    type Output = Jet2;
    fn div(self, rhs: Jet2) -> Jet2 {
        if self.is_zero() {
            return Jet2::ZERO;
        }
        self * rhs.recip()
    }
}

/// Minimal ring interface shared by `f64` and [`Jet2`], so quaternion and
/// bracket formulas are written once.
pub trait Ring:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn zero() -> Self;
    fn from_f64(c: f64) -> Self;
    fn scale(self, c: f64) -> Self;
}

impl Ring for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_f64(c: f64) -> Self {
        c
    }
    fn scale(self, c: f64) -> Self {
        self * c
    }
}

impl Ring for Jet2 {
    fn zero() -> Self {
        Jet2::ZERO
    }
    fn from_f64(c: f64) -> Self {
        Jet2::constant(c)
    }
    fn scale(self, c: f64) -> Self {
        Jet2::scale(&self, c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var(x: &[f64], a: usize) -> Jet2 {
        Jet2::variable(a, x[a])
    }

    #[test]
    fn sin_at_origin() {
        let j = Jet2::variable(0, 0.0).sin();
        assert_eq!(j.value, 0.0);
        assert_eq!(j.grad[0], 1.0);
        assert_eq!(j.hess[0][0], 0.0);
    }

    #[test]
    fn product_and_chain_rule_match_hand_expansion() {
        let x = [0.3, -1.1, 2.0, 0.0];
        // f = sin(x0) * exp(x1) * x2^3
        let f = var(&x, 0).sin() * var(&x, 1).exp() * var(&x, 2).powi(3);
        let (s, c, e, z) = (x[0].sin(), x[0].cos(), x[1].exp(), x[2]);
        assert!((f.value - s * e * z.powi(3)).abs() < 1e-13);
        assert!((f.grad[0] - c * e * z.powi(3)).abs() < 1e-13);
        assert!((f.grad[1] - s * e * z.powi(3)).abs() < 1e-13);
        assert!((f.grad[2] - 3.0 * s * e * z * z).abs() < 1e-13);
        assert!((f.hess[0][0] + s * e * z.powi(3)).abs() < 1e-13);
        assert!((f.hess[0][2] - 3.0 * c * e * z * z).abs() < 1e-13);
        assert!((f.hess[2][2] - 6.0 * s * e * z).abs() < 1e-13);
        assert!((f.hess[1][2] - f.hess[2][1]).abs() < 1e-14);
    }

    #[test]
    fn quotient_and_sqrt() {
        let x = [0.7, 1.3, 0.0, 0.0];
        let q = var(&x, 0) / (var(&x, 1).sqrt());
        let expect_dy = -0.5 * x[0] * x[1].powf(-1.5);
        assert!((q.grad[1] - expect_dy).abs() < 1e-13);
        let expect_dyy = 0.75 * x[0] * x[1].powf(-2.5);
        assert!((q.hess[1][1] - expect_dyy).abs() < 1e-13);
    }

    #[test]
    fn zero_numerator_quotient_is_zero() {
        let q = Jet2::ZERO / Jet2::ZERO;
        assert!(q.is_zero());
    }

    #[test]
    fn derivative_drops_to_first_order() {
        let x = [0.2, 0.5, 0.0, 0.0];
        let f = var(&x, 0).sin() * var(&x, 1).cos();
        let d = f.derivative(0);
        assert!((d.value - x[0].cos() * x[1].cos()).abs() < 1e-15);
        assert!((d.grad[1] + x[0].cos() * x[1].sin()).abs() < 1e-15);
        assert!(d.hess[0][0].is_nan());
    }
}
