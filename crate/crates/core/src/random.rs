//! Seeded random trigonometric fields for property checks.

use rand::Rng;

use crate::field::ScalarExpr;
use crate::forms::{masks, AlgebraExpr, FormExpr, ValueSpace};
use crate::group_field::GroupExpr;
use crate::lie::Algebra;

/// Frequencies drawn from `[-BANDWIDTH, BANDWIDTH]` per axis.
pub const BANDWIDTH: i32 = 2;
const TERMS: usize = 3;

/// `k · x` for an integer frequency vector.
pub fn phase(k: &[i32]) -> ScalarExpr {
    k.iter()
        .enumerate()
        .fold(ScalarExpr::zero(), |acc, (a, &ka)| {
            acc + ScalarExpr::mul(ScalarExpr::Const(ka as f64), ScalarExpr::var(a))
        })
}

/// `Σ a cos(k·x) + b sin(k·x)` with a few random modes of amplitude ≤ `amp`.
pub fn random_trig<R: Rng>(rng: &mut R, dim: usize, amp: f64) -> ScalarExpr {
    let mut out = ScalarExpr::Const(rng.gen_range(-amp..amp));
    for _ in 0..TERMS {
        let k: Vec<i32> = (0..dim).map(|_| rng.gen_range(-BANDWIDTH..=BANDWIDTH)).collect();
        let p = phase(&k);
        let a = rng.gen_range(-amp..amp);
        let b = rng.gen_range(-amp..amp);
        out = out
            + ScalarExpr::Const(a) * ScalarExpr::cos(p.clone())
            + ScalarExpr::Const(b) * ScalarExpr::sin(p);
    }
    out
}

pub fn random_algebra_expr<R: Rng>(rng: &mut R, algebra: Algebra, dim: usize) -> AlgebraExpr {
    AlgebraExpr {
        algebra,
        coords: (0..algebra.dim()).map(|_| random_trig(rng, dim, 0.5)).collect(),
    }
}

/// A real form of the given degree with random trigonometric coefficients.
pub fn random_form_expr<R: Rng>(rng: &mut R, dim: usize, degree: usize) -> FormExpr {
    FormExpr {
        degree,
        space: ValueSpace::Real,
        terms: masks(dim, degree)
            .map(|m| (m, vec![random_trig(rng, dim, 0.5)]))
            .collect(),
    }
}

/// A 𝔤-valued form of the given degree with random trigonometric
/// coefficients.
pub fn random_lie_form<R: Rng>(rng: &mut R, algebra: Algebra, dim: usize, degree: usize) -> FormExpr {
    FormExpr {
        degree,
        space: ValueSpace::Lie(algebra),
        terms: masks(dim, degree)
            .map(|m| (m, random_algebra_expr(rng, algebra, dim).coords))
            .collect(),
    }
}

/// `qexp` of a random algebra field times a random constant element.
pub fn random_group_expr<R: Rng>(rng: &mut R, algebra: Algebra, dim: usize) -> GroupExpr {
    let constant: Vec<f64> = (0..algebra.dim()).map(|_| rng.gen_range(-2.0..2.0)).collect();
    GroupExpr::mul(
        GroupExpr::Qexp(random_algebra_expr(rng, algebra, dim)),
        GroupExpr::Qexp(AlgebraExpr::constant(algebra, &constant)),
    )
}
