//! Compact Lie algebras and groups assembled from `u(1)` and `su(2)` factors.
//!
//! `su(2)` is modelled as the pure quaternions with the commutator bracket
//! `[X, Y] = XY - YX`, so `[i, j] = 2k`. `SU(2)` is the unit quaternions and
//! `U(1)` the unit complex numbers. The Euclidean inner product makes
//! `{i, j, k}` orthonormal; an admissible Ad-invariant inner product is a
//! positive multiple `λ_f` of it on each factor.
//!
//! Coordinates are laid out factor by factor. A `u(1)` factor contributes
//! one algebra coordinate (the rate `x` of `e^{ix}`) and two group
//! coordinates `(cos, sin)`; an `su(2)` factor contributes three algebra
//! coordinates `(x_i, x_j, x_k)` and four group coordinates `(w, x, y, z)`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::jet::Ring;

pub const MAX_FACTORS: usize = 4;
pub const MAX_ALGEBRA_DIM: usize = 3 * MAX_FACTORS;
pub const MAX_GROUP_DIM: usize = 4 * MAX_FACTORS;

/// Unit quaternions drift from the sphere by at most this much before
/// being renormalized.
pub const UNIT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Factor {
    U1,
    Su2,
}

impl Factor {
    pub fn algebra_dim(self) -> usize {
        match self {
            Factor::U1 => 1,
            Factor::Su2 => 3,
        }
    }

    pub fn group_dim(self) -> usize {
        match self {
            Factor::U1 => 2,
            Factor::Su2 => 4,
        }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Factor::U1 => write!(f, "u1"),
            Factor::Su2 => write!(f, "su2"),
        }
    }
}

/// Factor layout of a product algebra.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Algebra {
    len: usize,
    factors: [Factor; MAX_FACTORS],
}

impl Algebra {
    pub fn new(factors: &[Factor]) -> Result<Self> {
        if factors.is_empty() || factors.len() > MAX_FACTORS {
            return Err(Error::InvalidAlgebra(format!(
                "expected 1..={MAX_FACTORS} factors, got {}",
                factors.len()
            )));
        }
        let mut out = [Factor::U1; MAX_FACTORS];
        out[..factors.len()].copy_from_slice(factors);
        Ok(Algebra {
            len: factors.len(),
            factors: out,
        })
    }

    pub fn su2() -> Self {
        Self::new(&[Factor::Su2]).unwrap()
    }

    pub fn u1() -> Self {
        Self::new(&[Factor::U1]).unwrap()
    }

    pub fn su2_su2() -> Self {
        Self::new(&[Factor::Su2, Factor::Su2]).unwrap()
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors[..self.len]
    }

    pub fn dim(&self) -> usize {
        self.factors().iter().map(|f| f.algebra_dim()).sum()
    }

    pub fn group_dim(&self) -> usize {
        self.factors().iter().map(|f| f.group_dim()).sum()
    }

    pub fn is_abelian(&self) -> bool {
        self.factors().iter().all(|&f| f == Factor::U1)
    }

    /// `(factor, algebra offset, group offset)` for every factor.
    pub fn layout(&self) -> impl Iterator<Item = (Factor, usize, usize)> + '_ {
        let mut a = 0;
        let mut g = 0;
        self.factors().iter().map(move |&f| {
            let item = (f, a, g);
            a += f.algebra_dim();
            g += f.group_dim();
            item
        })
    }

    /// Index of the factor owning algebra coordinate `coord`.
    pub fn factor_of(&self, coord: usize) -> usize {
        let mut acc = 0;
        for (idx, f) in self.factors().iter().enumerate() {
            acc += f.algebra_dim();
            if coord < acc {
                return idx;
            }
        }
        panic!("coordinate {coord} out of range for {self:?}")
    }

    fn check(&self, other: &Algebra) -> Result<()> {
        if self != other {
            return Err(Error::AlgebraMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

impl fmt::Debug for Algebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.factors().iter().map(|x| x.to_string()).collect();
        write!(f, "{}", names.join("+"))
    }
}

/// An algebra together with one positive inner-product scale per factor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LieAlgebraSpec {
    pub algebra: Algebra,
    scales: [f64; MAX_FACTORS],
}

impl LieAlgebraSpec {
    pub fn new(algebra: Algebra, scales: &[f64]) -> Result<Self> {
        if scales.len() != algebra.factors().len() {
            return Err(Error::DimensionMismatch {
                expected: algebra.factors().len(),
                got: scales.len(),
            });
        }
        if let Some(bad) = scales.iter().find(|&&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidAlgebra(format!(
                "inner-product scale must be positive, got {bad}"
            )));
        }
        let mut s = [1.0; MAX_FACTORS];
        s[..scales.len()].copy_from_slice(scales);
        Ok(LieAlgebraSpec { algebra, scales: s })
    }

    /// Every factor with the Euclidean scale `λ = 1`.
    pub fn euclidean(algebra: Algebra) -> Self {
        LieAlgebraSpec {
            algebra,
            scales: [1.0; MAX_FACTORS],
        }
    }

    /// `λ = λ*` on every `su(2)` factor (integral Maurer-Cartan class) and
    /// `λ = 1` on `u(1)` factors, which carry no 3-form.
    pub fn normalized(algebra: Algebra) -> Self {
        let lambda = crate::group_field::normalization_constant();
        let scales: Vec<f64> = algebra
            .factors()
            .iter()
            .map(|f| match f {
                Factor::Su2 => lambda,
                Factor::U1 => 1.0,
            })
            .collect();
        Self::new(algebra, &scales).expect("λ* is positive")
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales[..self.algebra.factors().len()]
    }

    /// Inner-product weight of algebra coordinate `coord`.
    pub fn weight(&self, coord: usize) -> f64 {
        self.scales[self.algebra.factor_of(coord)]
    }

    /// Weights of all coordinates, in layout order.
    pub fn weights(&self) -> Vec<f64> {
        (0..self.algebra.dim()).map(|c| self.weight(c)).collect()
    }
}

/// Bracket of coordinate vectors, generic over the scalar ring.
pub fn bracket_coords<T: Ring>(algebra: &Algebra, x: &[T], y: &[T], out: &mut [T]) {
    for (f, a, _) in algebra.layout() {
        match f {
            Factor::U1 => out[a] = T::zero(),
            Factor::Su2 => {
                let (x0, x1, x2) = (x[a], x[a + 1], x[a + 2]);
                let (y0, y1, y2) = (y[a], y[a + 1], y[a + 2]);
                out[a] = (x1 * y2 - x2 * y1).scale(2.0);
                out[a + 1] = (x2 * y0 - x0 * y2).scale(2.0);
                out[a + 2] = (x0 * y1 - x1 * y0).scale(2.0);
            }
        }
    }
}

/// Hamilton product `(w, x, y, z)`.
pub fn qmul<T: Ring>(a: &[T], b: &[T]) -> [T; 4] {
    let (a0, a1, a2, a3) = (a[0], a[1], a[2], a[3]);
    let (b0, b1, b2, b3) = (b[0], b[1], b[2], b[3]);
    [
        a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
        a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
        a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
        a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
    ]
}

pub fn qconj<T: Ring>(a: &[T]) -> [T; 4] {
    [a[0], -a[1], -a[2], -a[3]]
}

/// `Ad_g X = g X g⁻¹` on coordinates; `g` given by group coordinates.
pub fn adjoint_coords<T: Ring>(algebra: &Algebra, g: &[T], x: &[T], out: &mut [T]) {
    for (f, a, o) in algebra.layout() {
        match f {
            Factor::U1 => out[a] = x[a],
            Factor::Su2 => {
                let q = &g[o..o + 4];
                let pure = [T::zero(), x[a], x[a + 1], x[a + 2]];
                let r = qmul(&qmul(q, &pure), &qconj(q));
                out[a] = r[1];
                out[a + 1] = r[2];
                out[a + 2] = r[3];
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
pub struct AlgebraElement {
    algebra: Algebra,
    coords: [f64; MAX_ALGEBRA_DIM],
}

impl AlgebraElement {
    pub fn zero(algebra: Algebra) -> Self {
        AlgebraElement {
            algebra,
            coords: [0.0; MAX_ALGEBRA_DIM],
        }
    }

    pub fn from_coords(algebra: Algebra, coords: &[f64]) -> Result<Self> {
        if coords.len() != algebra.dim() {
            return Err(Error::DimensionMismatch {
                expected: algebra.dim(),
                got: coords.len(),
            });
        }
        let mut out = Self::zero(algebra);
        out.coords[..coords.len()].copy_from_slice(coords);
        Ok(out)
    }

    /// From per-factor coordinate lists, the JSON layout.
    pub fn from_factor_coords(algebra: Algebra, lists: &[Vec<f64>]) -> Result<Self> {
        if lists.len() != algebra.factors().len() {
            return Err(Error::DimensionMismatch {
                expected: algebra.factors().len(),
                got: lists.len(),
            });
        }
        let flat: Vec<f64> = lists.iter().flatten().copied().collect();
        for (list, f) in lists.iter().zip(algebra.factors()) {
            if list.len() != f.algebra_dim() {
                return Err(Error::DimensionMismatch {
                    expected: f.algebra_dim(),
                    got: list.len(),
                });
            }
        }
        Self::from_coords(algebra, &flat)
    }

    /// Basis vector `index` of factor `factor` (`0, 1, 2` = `i, j, k`).
    pub fn basis(algebra: Algebra, factor: usize, index: usize) -> Result<Self> {
        let (f, off, _) = algebra
            .layout()
            .nth(factor)
            .ok_or_else(|| Error::InvalidAlgebra(format!("no factor {factor}")))?;
        if index >= f.algebra_dim() {
            return Err(Error::InvalidAlgebra(format!(
                "factor {factor} ({f}) has no basis vector {index}"
            )));
        }
        let mut out = Self::zero(algebra);
        out.coords[off + index] = 1.0;
        Ok(out)
    }

    pub fn algebra(&self) -> Algebra {
        self.algebra
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.algebra.dim()]
    }

    pub fn factor_coords(&self) -> Vec<Vec<f64>> {
        self.algebra
            .layout()
            .map(|(f, a, _)| self.coords[a..a + f.algebra_dim()].to_vec())
            .collect()
    }

    pub fn norm(&self) -> f64 {
        self.coords().iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn bracket(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        bracket(self, other)
    }
}

impl fmt::Debug for AlgebraElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}{:?}", self.algebra, self.coords())
    }
}

impl Serialize for AlgebraElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.factor_coords().serialize(s)
    }
}

impl Add for AlgebraElement {
    type Output = AlgebraElement;
    fn add(mut self, rhs: AlgebraElement) -> AlgebraElement {
        assert_eq!(self.algebra, rhs.algebra, "algebra mismatch");
        for (a, b) in self.coords.iter_mut().zip(rhs.coords) {
            *a += b;
        }
        self
    }
}

impl Sub for AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: AlgebraElement) -> AlgebraElement {
        self + (-rhs)
    }
}

impl Neg for AlgebraElement {
    type Output = AlgebraElement;
    fn neg(self) -> AlgebraElement {
        self * -1.0
    }
}

impl Mul<f64> for AlgebraElement {
    type Output = AlgebraElement;
    fn mul(mut self, rhs: f64) -> AlgebraElement {
        self.coords.iter_mut().for_each(|c| *c *= rhs);
        self
    }
}

#[derive(Clone, Copy, PartialEq)]
pub struct GroupElement {
    algebra: Algebra,
    coords: [f64; MAX_GROUP_DIM],
}

impl GroupElement {
    pub fn identity(algebra: Algebra) -> Self {
        let mut coords = [0.0; MAX_GROUP_DIM];
        for (_, _, o) in algebra.layout() {
            coords[o] = 1.0;
        }
        GroupElement { algebra, coords }
    }

    /// Builds an element from group coordinates, projecting each factor
    /// back onto the unit sphere.
    pub fn from_coords(algebra: Algebra, coords: &[f64]) -> Result<Self> {
        if coords.len() != algebra.group_dim() {
            return Err(Error::DimensionMismatch {
                expected: algebra.group_dim(),
                got: coords.len(),
            });
        }
        let mut out = Self::identity(algebra);
        out.coords[..coords.len()].copy_from_slice(coords);
        for (f, _, o) in algebra.layout() {
            let n: f64 = out.coords[o..o + f.group_dim()]
                .iter()
                .map(|c| c * c)
                .sum::<f64>()
                .sqrt();
            if !(n > 0.0) {
                return Err(Error::InvalidAlgebra("zero group coordinates".into()));
            }
        }
        out.renormalize();
        Ok(out)
    }

    pub fn from_factor_coords(algebra: Algebra, lists: &[Vec<f64>]) -> Result<Self> {
        if lists.len() != algebra.factors().len() {
            return Err(Error::DimensionMismatch {
                expected: algebra.factors().len(),
                got: lists.len(),
            });
        }
        for (list, f) in lists.iter().zip(algebra.factors()) {
            if list.len() != f.group_dim() {
                return Err(Error::DimensionMismatch {
                    expected: f.group_dim(),
                    got: list.len(),
                });
            }
        }
        let flat: Vec<f64> = lists.iter().flatten().copied().collect();
        Self::from_coords(algebra, &flat)
    }

    pub fn algebra(&self) -> Algebra {
        self.algebra
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.algebra.group_dim()]
    }

    pub fn factor_coords(&self) -> Vec<Vec<f64>> {
        self.algebra
            .layout()
            .map(|(f, _, o)| self.coords[o..o + f.group_dim()].to_vec())
            .collect()
    }

    /// Quaternion of the `factor`-th factor, if it is `su(2)`.
    pub fn quaternion(&self, factor: usize) -> Option<[f64; 4]> {
        let (f, _, o) = self.algebra.layout().nth(factor)?;
        (f == Factor::Su2).then(|| [self.coords[o], self.coords[o + 1], self.coords[o + 2], self.coords[o + 3]])
    }

    fn renormalize(&mut self) {
        for (f, _, o) in self.algebra.layout() {
            let part = &mut self.coords[o..o + f.group_dim()];
            let n = part.iter().map(|c| c * c).sum::<f64>().sqrt();
            part.iter_mut().for_each(|c| *c /= n);
        }
    }

    pub fn mul(&self, other: &GroupElement) -> Result<GroupElement> {
        self.algebra.check(&other.algebra)?;
        let mut out = *self;
        for (f, _, o) in self.algebra.layout() {
            match f {
                Factor::U1 => {
                    let (a, b) = (self.coords[o], self.coords[o + 1]);
                    let (c, d) = (other.coords[o], other.coords[o + 1]);
                    out.coords[o] = a * c - b * d;
                    out.coords[o + 1] = a * d + b * c;
                }
                Factor::Su2 => {
                    let q = qmul(&self.coords[o..o + 4], &other.coords[o..o + 4]);
                    out.coords[o..o + 4].copy_from_slice(&q);
                }
            }
        }
        out.renormalize();
        Ok(out)
    }

    pub fn inverse(&self) -> GroupElement {
        let mut out = *self;
        for (f, _, o) in self.algebra.layout() {
            let n = f.group_dim();
            out.coords[o + 1..o + n].iter_mut().for_each(|c| *c = -*c);
        }
        out
    }

    /// Max-abs distance between coordinate vectors.
    pub fn distance(&self, other: &GroupElement) -> f64 {
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `|gh - hg|` in max-abs coordinates.
    pub fn commutator_defect(&self, other: &GroupElement) -> Result<f64> {
        Ok(self.mul(other)?.distance(&other.mul(self)?))
    }

    pub fn adjoint(&self, x: &AlgebraElement) -> Result<AlgebraElement> {
        adjoint(self, x)
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}{:?}", self.algebra, self.coords())
    }
}

impl Serialize for GroupElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.factor_coords().serialize(s)
    }
}

/// `[X, Y] = XY - YX` factorwise.
pub fn bracket(x: &AlgebraElement, y: &AlgebraElement) -> Result<AlgebraElement> {
    x.algebra.check(&y.algebra)?;
    let mut out = AlgebraElement::zero(x.algebra);
    let d = x.algebra.dim();
    bracket_coords(&x.algebra, &x.coords[..d], &y.coords[..d], &mut out.coords[..d]);
    Ok(out)
}

/// `Ad_g X = g X g⁻¹`.
pub fn adjoint(g: &GroupElement, x: &AlgebraElement) -> Result<AlgebraElement> {
    g.algebra.check(&x.algebra)?;
    let mut out = AlgebraElement::zero(x.algebra);
    let d = x.algebra.dim();
    adjoint_coords(&x.algebra, g.coords(), &x.coords[..d], &mut out.coords[..d]);
    Ok(out)
}

/// `exp(t n̂) = cos t + n̂ sin t` on each `su(2)` factor, `e^{ix}` on `u(1)`.
pub fn exp(x: &AlgebraElement) -> GroupElement {
    let algebra = x.algebra;
    let mut g = GroupElement::identity(algebra);
    for (f, a, o) in algebra.layout() {
        match f {
            Factor::U1 => {
                let (s, c) = x.coords[a].sin_cos();
                g.coords[o] = c;
                g.coords[o + 1] = s;
            }
            Factor::Su2 => {
                let v = &x.coords[a..a + 3];
                let t = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                let sinc = if t < 1e-8 { 1.0 - t * t / 6.0 } else { t.sin() / t };
                g.coords[o] = t.cos();
                for m in 0..3 {
                    g.coords[o + 1 + m] = sinc * v[m];
                }
            }
        }
    }
    g.renormalize();
    g
}

/// Principal logarithm, `|log| ≤ π` per factor. Errors at `-1` in any
/// `su(2)` factor, where the branch is not unique.
pub fn log(g: &GroupElement) -> Result<AlgebraElement> {
    let algebra = g.algebra;
    let mut x = AlgebraElement::zero(algebra);
    for (f, a, o) in algebra.layout() {
        match f {
            Factor::U1 => x.coords[a] = g.coords[o + 1].atan2(g.coords[o]),
            Factor::Su2 => {
                let w = g.coords[o];
                let v = &g.coords[o + 1..o + 4];
                let s = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                if s < 1e-14 {
                    if w < 0.0 {
                        return Err(Error::CutLocus);
                    }
                    continue;
                }
                let angle = s.atan2(w);
                for m in 0..3 {
                    x.coords[a + m] = angle * v[m] / s;
                }
            }
        }
    }
    Ok(x)
}

/// `⟨X, Y⟩ = Σ_f λ_f (X_f · Y_f)`.
pub fn inner(x: &AlgebraElement, y: &AlgebraElement, spec: &LieAlgebraSpec) -> f64 {
    assert_eq!(x.algebra, spec.algebra, "algebra mismatch");
    assert_eq!(y.algebra, spec.algebra, "algebra mismatch");
    x.coords()
        .iter()
        .zip(y.coords())
        .enumerate()
        .map(|(c, (a, b))| spec.weight(c) * a * b)
        .sum()
}
