//! Flat-connection search by descent on the curvature residual
//! `R(A) = Σ_{μ<ν} ∫_{T³} |F_μν|²` (Euclidean coordinates on 𝔤).
//!
//! Connections are truncated Fourier series respecting the twisting law:
//! per axis `ν` and factor, the `n`-component is `Re Σ C_m e^{i m·x}` and
//! the `span{e₂, e₃}` component is `w = Σ D_m e^{i(m + θ)·x}`, with
//! `m ∈ [-B, B]³`. On the grid `N = 4B + 6` the rectangle rule integrates
//! `|F|²` exactly, so the discrete residual is the continuous one and its
//! gradient is exact.
//!
//! With `P_μν = 2W F_μν`, `r_ν = 2W Σ_μ [F_μν, A_μ]` and `W = (2π/N)³`,
//! the gradient of `R` in a coefficient block of axis `ν` with frequencies
//! `κ` is `Σ_x (s - i Σ_μ κ_μ π_μ) e^{-iκ·x}`, where `s` and `π_μ` are
//! the block's components of `r_ν` and `P_μν` (complexified as
//! `⟨·, e₂⟩ + i⟨·, e₃⟩` for `w`).

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64 as C;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{make_twisted_gauge_field, FactorRecipe, HolonomyData, TwistMode, TwistRecipe};
use crate::error::{Error, Result};
use crate::gauge::GaugeField;
use crate::lie::{bracket_coords, Algebra, Factor};
use crate::sum::neumaier_sum;

const DIM: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    /// `Re Σ C_m e^{i m·x}` along the torus axis `n`.
    Periodic,
    /// `Σ D_m e^{i(m + θ)·x}` in `span{e₂, e₃}`.
    Shifted,
}

#[derive(Clone, Debug)]
struct Block {
    axis: usize,
    offset: usize,
    width: usize,
    part: Part,
    /// `[n, -]` for periodic blocks, `[e₂, e₃]` for shifted ones.
    dirs: [[f64; 3]; 2],
    theta: [f64; DIM],
    coeffs: Vec<C>,
}

impl Block {
    fn project(&self, v: &[f64], which: usize) -> f64 {
        (0..self.width).map(|j| v[self.offset + j] * self.dirs[which][j]).sum()
    }
}

/// A twisted gauge field on `T³` as truncated Fourier coefficients.
#[derive(Clone, Debug)]
pub struct FourierConnection {
    holonomy: HolonomyData,
    bandwidth: usize,
    blocks: Vec<Block>,
}

/// Per-axis tables `e^{iκ x}` for one frequency shift.
#[derive(Clone, Debug)]
struct Tables {
    /// `tab[a][x * M + m]`.
    tab: [Vec<C>; DIM],
    /// `κ_a(m)`.
    kappa: [Vec<f64>; DIM],
}

impl Tables {
    fn new(n: usize, bandwidth: usize, theta: [f64; DIM]) -> Self {
        let m = 2 * bandwidth + 1;
        let kappa: [Vec<f64>; DIM] = std::array::from_fn(|a| {
            (0..m).map(|i| i as f64 - bandwidth as f64 + theta[a]).collect()
        });
        let tab = std::array::from_fn(|a| {
            let mut t = Vec::with_capacity(n * m);
            for x in 0..n {
                let xv = 2.0 * PI * x as f64 / n as f64;
                for k in &kappa[a] {
                    t.push(C::from_polar(1.0, k * xv));
                }
            }
            t
        });
        Tables { tab, kappa }
    }
}

/// Separable synthesis `g(x) = Σ_m c_m e^{iκ_m·x}` on the `N³` grid.
fn synthesize(c: &[C], t: &Tables, n: usize, m: usize) -> Vec<C> {
    let mut t1 = vec![C::new(0.0, 0.0); m * m * n];
    for m12 in 0..m * m {
        for x3 in 0..n {
            let row = &t.tab[2][x3 * m..(x3 + 1) * m];
            t1[m12 * n + x3] = c[m12 * m..(m12 + 1) * m].iter().zip(row).map(|(a, b)| a * b).sum();
        }
    }
    let mut t2 = vec![C::new(0.0, 0.0); m * n * n];
    for m1 in 0..m {
        for x2 in 0..n {
            for x3 in 0..n {
                let mut acc = C::new(0.0, 0.0);
                for m2 in 0..m {
                    acc += t1[(m1 * m + m2) * n + x3] * t.tab[1][x2 * m + m2];
                }
                t2[(m1 * n + x2) * n + x3] = acc;
            }
        }
    }
    let mut g = vec![C::new(0.0, 0.0); n * n * n];
    g.par_chunks_mut(n * n).enumerate().for_each(|(x1, slab)| {
        for (i, out) in slab.iter_mut().enumerate() {
            let mut acc = C::new(0.0, 0.0);
            for m1 in 0..m {
                acc += t2[m1 * n * n + i] * t.tab[0][x1 * m + m1];
            }
            *out = acc;
        }
    });
    g
}

/// Adjoint of [`synthesize`]: `Σ_x g(x) e^{-iκ_m·x}`.
fn analyze(g: &[C], t: &Tables, n: usize, m: usize) -> Vec<C> {
    let mut u1 = vec![C::new(0.0, 0.0); n * n * m];
    u1.par_chunks_mut(n * m).enumerate().for_each(|(x1, slab)| {
        for x2 in 0..n {
            let line = &g[(x1 * n + x2) * n..(x1 * n + x2 + 1) * n];
            for m3 in 0..m {
                let mut acc = C::new(0.0, 0.0);
                for (x3, v) in line.iter().enumerate() {
                    acc += v * t.tab[2][x3 * m + m3].conj();
                }
                slab[x2 * m + m3] = acc;
            }
        }
    });
    let mut u2 = vec![C::new(0.0, 0.0); n * m * m];
    for x1 in 0..n {
        for m2 in 0..m {
            for m3 in 0..m {
                let mut acc = C::new(0.0, 0.0);
                for x2 in 0..n {
                    acc += u1[(x1 * n + x2) * m + m3] * t.tab[1][x2 * m + m2].conj();
                }
                u2[(x1 * m + m2) * m + m3] = acc;
            }
        }
    }
    let mut out = vec![C::new(0.0, 0.0); m * m * m];
    for m1 in 0..m {
        for m23 in 0..m * m {
            let mut acc = C::new(0.0, 0.0);
            for x1 in 0..n {
                acc += u2[x1 * m * m + m23] * t.tab[0][x1 * m + m1].conj();
            }
            out[m1 * m * m + m23] = acc;
        }
    }
    out
}

/// Grid resolution at which the rectangle rule is exact for `|F|²`.
pub fn finder_grid(bandwidth: usize) -> usize {
    4 * bandwidth + 6
}

impl FourierConnection {
    /// All coefficients zero, i.e. the canonical flat connection `A₀ = 0`.
    pub fn zero(holonomy: &HolonomyData, bandwidth: usize) -> Result<Self> {
        if holonomy.elements().len() != DIM {
            return Err(Error::DimensionMismatch {
                expected: DIM,
                got: holonomy.elements().len(),
            });
        }
        let algebra = holonomy.algebra();
        let size = (2 * bandwidth + 1).pow(DIM as u32);
        let mut blocks = Vec::new();
        for axis in 0..DIM {
            for (frame, (f, offset, _)) in holonomy.frames().iter().zip(algebra.layout()) {
                let width = f.algebra_dim();
                let [n, e2, e3] = frame.frame;
                blocks.push(Block {
                    axis,
                    offset,
                    width,
                    part: Part::Periodic,
                    dirs: [n, [0.0; 3]],
                    theta: [0.0; DIM],
                    coeffs: vec![C::new(0.0, 0.0); size],
                });
                if f == Factor::Su2 {
                    let shift = frame.shifts();
                    blocks.push(Block {
                        axis,
                        offset,
                        width,
                        part: Part::Shifted,
                        dirs: [e2, e3],
                        theta: [shift[0], shift[1], shift[2]],
                        coeffs: vec![C::new(0.0, 0.0); size],
                    });
                }
            }
        }
        Ok(FourierConnection {
            holonomy: holonomy.clone(),
            bandwidth,
            blocks,
        })
    }

    /// Fourier analysis of a twisted gauge field, normalized by `1/N³`.
    /// Exact when the field lies in the truncated space.
    pub fn from_gauge_field(a: &GaugeField, holonomy: &HolonomyData, bandwidth: usize) -> Result<Self> {
        let mut out = Self::zero(holonomy, bandwidth)?;
        if a.dim() != DIM || a.algebra() != holonomy.algebra() {
            return Err(Error::AlgebraMismatch("initial field vs holonomy".into()));
        }
        let n = finder_grid(bandwidth);
        let m = 2 * bandwidth + 1;
        let dim_alg = holonomy.algebra().dim();
        // values[(x * DIM + ν) * dim_alg + c]
        let values: Vec<f64> = crate::field::sample_grid(DIM, n, |x| {
            let jet = a.at(x);
            let mut v = Vec::with_capacity(DIM * dim_alg);
            for axis in 0..DIM {
                v.extend(jet.component(1 << axis).iter().map(|j| j.value));
            }
            v
        })
        .into_iter()
        .flatten()
        .collect();
        let norm = 1.0 / (n * n * n) as f64;
        for b in &mut out.blocks {
            let tables = Tables::new(n, bandwidth, b.theta);
            let g: Vec<C> = (0..n * n * n)
                .map(|x| {
                    let v = &values[(x * DIM + b.axis) * dim_alg..(x * DIM + b.axis + 1) * dim_alg];
                    match b.part {
                        Part::Periodic => C::new(b.project(v, 0), 0.0),
                        Part::Shifted => C::new(b.project(v, 0), b.project(v, 1)),
                    }
                })
                .collect();
            b.coeffs = analyze(&g, &tables, n, m).into_iter().map(|c| c * norm).collect();
        }
        Ok(out)
    }

    pub fn holonomy(&self) -> &HolonomyData {
        &self.holonomy
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// Raw coefficients as `(re, im)` pairs, block by block.
    pub fn coefficients(&self) -> Vec<f64> {
        self.blocks
            .iter()
            .flat_map(|b| b.coeffs.iter().flat_map(|c| [c.re, c.im]))
            .collect()
    }

    /// Adds a seeded perturbation whose coefficient vector has Euclidean
    /// norm `size`.
    pub fn perturb<R: Rng>(&mut self, rng: &mut R, size: f64) {
        let count: usize = self.blocks.iter().map(|b| b.coeffs.len()).sum();
        let mut delta: Vec<C> = (0..count)
            .map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let norm = delta.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        delta.iter_mut().for_each(|c| *c *= size / norm);
        let mut it = delta.into_iter();
        for b in &mut self.blocks {
            for c in &mut b.coeffs {
                *c += it.next().expect("same length");
            }
        }
    }

    /// The field as an analytic expression.
    pub fn to_gauge_field(&self) -> Result<GaugeField> {
        let algebra = self.holonomy.algebra();
        let mut recipes: Vec<TwistRecipe> = vec![vec![FactorRecipe::default(); algebra.factors().len()]; DIM];
        let m = 2 * self.bandwidth as i32 + 1;
        let b0 = self.bandwidth as i32;
        for b in &self.blocks {
            let factor = algebra.factor_of(b.offset);
            let recipe = &mut recipes[b.axis][factor];
            for (idx, c) in b.coeffs.iter().enumerate() {
                if c.norm_sqr() == 0.0 {
                    continue;
                }
                let i = idx as i32;
                let k = vec![i / (m * m) - b0, (i / m) % m - b0, i % m - b0];
                match b.part {
                    // Re(c e^{ikx}) = re cos(kx) - im sin(kx)
                    Part::Periodic => recipe.periodic.push(TwistMode { k, re: c.re, im: -c.im }),
                    Part::Shifted => recipe.shifted.push(TwistMode { k, re: c.re, im: c.im }),
                }
            }
        }
        GaugeField::from_expr(&make_twisted_gauge_field(&self.holonomy, &recipes)?, DIM)
    }

    /// Exact projection onto flat connections for `u(1)` blocks:
    /// every mode vector `c_m ∈ ℂ³` becomes `(m·c_m / |m|²) m`.
    pub fn project_abelian(&mut self) {
        let algebra = self.holonomy.algebra();
        let m = 2 * self.bandwidth + 1;
        let b0 = self.bandwidth as f64;
        let factors: Vec<usize> = algebra
            .layout()
            .filter(|(f, _, _)| *f == Factor::U1)
            .map(|(_, off, _)| off)
            .collect();
        for off in factors {
            let ids: Vec<usize> = (0..self.blocks.len())
                .filter(|&i| self.blocks[i].offset == off)
                .collect();
            for idx in 0..m * m * m {
                let k = [
                    (idx / (m * m)) as f64 - b0,
                    ((idx / m) % m) as f64 - b0,
                    (idx % m) as f64 - b0,
                ];
                let k2: f64 = k.iter().map(|v| v * v).sum();
                if k2 == 0.0 {
                    continue;
                }
                let dot: C = ids.iter().map(|&i| self.blocks[i].coeffs[idx] * k[self.blocks[i].axis]).sum();
                for &i in &ids {
                    let axis = self.blocks[i].axis;
                    self.blocks[i].coeffs[idx] = dot * (k[axis] / k2);
                }
            }
        }
    }

    /// Curvature residual `R`.
    pub fn residual(&self) -> f64 {
        self.evaluate(false).0
    }

    /// `R` and its gradient, block by block.
    pub fn residual_and_gradient(&self) -> (f64, Vec<Vec<C>>) {
        let (r, g) = self.evaluate(true);
        (r, g.expect("requested"))
    }

    fn evaluate(&self, want_gradient: bool) -> (f64, Option<Vec<Vec<C>>>) {
        let algebra: Algebra = self.holonomy.algebra();
        let d = algebra.dim();
        let n = finder_grid(self.bandwidth);
        let m = 2 * self.bandwidth + 1;
        let p = n * n * n;
        let w = (2.0 * PI / n as f64).powi(DIM as i32);
        let tables: Vec<Tables> = self
            .blocks
            .iter()
            .map(|b| Tables::new(n, self.bandwidth, b.theta))
            .collect();

        // a[(ν d + c) p + x], da[((μ DIM + ν) d + c) p + x]
        let mut a = vec![0.0; DIM * d * p];
        let mut da = vec![0.0; DIM * DIM * d * p];
        for (b, t) in self.blocks.iter().zip(&tables) {
            let scatter = |g: &[C], out: &mut [f64], base: usize| {
                for j in 0..b.width {
                    let col = &mut out[(base * d + b.offset + j) * p..(base * d + b.offset + j + 1) * p];
                    for (o, v) in col.iter_mut().zip(g) {
                        *o += match b.part {
                            Part::Periodic => v.re * b.dirs[0][j],
                            Part::Shifted => v.re * b.dirs[0][j] + v.im * b.dirs[1][j],
                        };
                    }
                }
            };
            scatter(&synthesize(&b.coeffs, t, n, m), &mut a, b.axis);
            for mu in 0..DIM {
                let dc = scale_by_kappa(&b.coeffs, &t.kappa, mu, m);
                scatter(&synthesize(&dc, t, n, m), &mut da, mu * DIM + b.axis);
            }
        }

        // curvature per point: f[((μ DIM + ν) d + c)] for μ < ν
        let pairs: Vec<(usize, usize)> = (0..DIM).flat_map(|mu| (mu + 1..DIM).map(move |nu| (mu, nu))).collect();
        let per_point: Vec<(f64, Vec<f64>)> = (0..p)
            .into_par_iter()
            .map(|x| {
                let av = |nu: usize, c: usize| a[(nu * d + c) * p + x];
                let dav = |mu: usize, nu: usize, c: usize| da[((mu * DIM + nu) * d + c) * p + x];
                let mut f = vec![0.0; DIM * DIM * d];
                let mut br = vec![0.0; d];
                let mut energy = 0.0;
                for &(mu, nu) in &pairs {
                    let amu: Vec<f64> = (0..d).map(|c| av(mu, c)).collect();
                    let anu: Vec<f64> = (0..d).map(|c| av(nu, c)).collect();
                    bracket_coords(&algebra, &amu, &anu, &mut br);
                    for c in 0..d {
                        let v = dav(mu, nu, c) - dav(nu, mu, c) + br[c];
                        f[(mu * DIM + nu) * d + c] = v;
                        f[(nu * DIM + mu) * d + c] = -v;
                        energy += v * v;
                    }
                }
                (energy, f)
            })
            .collect();
        let residual = w * neumaier_sum(&per_point.iter().map(|(e, _)| *e).collect::<Vec<_>>());
        if !want_gradient {
            return (residual, None);
        }

        // r[(ν d + c) p + x] = 2W Σ_μ [F_μν, A_μ]
        let r: Vec<Vec<f64>> = (0..p)
            .into_par_iter()
            .map(|x| {
                let f = &per_point[x].1;
                let mut out = vec![0.0; DIM * d];
                let mut br = vec![0.0; d];
                for nu in 0..DIM {
                    for mu in 0..DIM {
                        if mu == nu {
                            continue;
                        }
                        let fmn = &f[(mu * DIM + nu) * d..(mu * DIM + nu + 1) * d];
                        let amu: Vec<f64> = (0..d).map(|c| a[(mu * d + c) * p + x]).collect();
                        bracket_coords(&algebra, fmn, &amu, &mut br);
                        for c in 0..d {
                            out[nu * d + c] += 2.0 * w * br[c];
                        }
                    }
                }
                out
            })
            .collect();

        let gradient = self
            .blocks
            .iter()
            .zip(&tables)
            .map(|(b, t)| {
                let complexify = |v: &[f64]| match b.part {
                    Part::Periodic => C::new(b.project(v, 0), 0.0),
                    Part::Shifted => C::new(b.project(v, 0), b.project(v, 1)),
                };
                let s: Vec<C> = (0..p).map(|x| complexify(&r[x][b.axis * d..(b.axis + 1) * d])).collect();
                let mut grad = analyze(&s, t, n, m);
                for mu in (0..DIM).filter(|&mu| mu != b.axis) {
                    let pi: Vec<C> = (0..p)
                        .map(|x| {
                            let f = &per_point[x].1;
                            let row = &f[(mu * DIM + b.axis) * d..(mu * DIM + b.axis + 1) * d];
                            complexify(row) * (2.0 * w)
                        })
                        .collect();
                    let an = analyze(&pi, t, n, m);
                    let scaled = scale_by_kappa(&an, &t.kappa, mu, m);
                    // s - i Σ κ_μ π_μ, and scale_by_kappa already multiplies by iκ
                    for (g, v) in grad.iter_mut().zip(scaled) {
                        *g -= v;
                    }
                }
                grad
            })
            .collect();
        (residual, Some(gradient))
    }

    /// Replaces all coefficients from `(re, im)` pairs in block order.
    pub fn with_coefficients(&self, v: &[f64]) -> FourierConnection {
        let mut out = self.clone();
        let mut it = v.chunks_exact(2);
        for b in &mut out.blocks {
            for c in &mut b.coeffs {
                let p = it.next().expect("one pair per coefficient");
                *c = C::new(p[0], p[1]);
            }
        }
        out
    }

    /// `1 / sqrt(G)` per real coefficient, so that `c = S y` turns the
    /// metric `G` into the Euclidean one.
    fn metric_scales(&self, metric: Metric) -> Vec<f64> {
        let m = 2 * self.bandwidth + 1;
        let b0 = self.bandwidth as f64;
        self.blocks
            .iter()
            .flat_map(|b| {
                (0..b.coeffs.len()).flat_map(move |idx| {
                    let k2: f64 = [idx / (m * m), (idx / m) % m, idx % m]
                        .iter()
                        .zip(b.theta)
                        .map(|(&i, t)| (i as f64 - b0 + t).powi(2))
                        .sum();
                    let s = match metric {
                        Metric::L2 => 1.0,
                        Metric::H1 => 1.0 / (1.0 + k2).sqrt(),
                    };
                    [s, s]
                })
            })
            .collect()
    }

    /// `-G⁻¹ ∇R` for the metric `G`.
    fn descent_direction(&self, grad: &[Vec<C>], metric: Metric) -> Vec<Vec<C>> {
        let m = 2 * self.bandwidth + 1;
        let b0 = self.bandwidth as f64;
        self.blocks
            .iter()
            .zip(grad)
            .map(|(b, g)| {
                g.iter()
                    .enumerate()
                    .map(|(idx, c)| match metric {
                        Metric::L2 => -c,
                        Metric::H1 => {
                            let k2: f64 = [idx / (m * m), (idx / m) % m, idx % m]
                                .iter()
                                .zip(b.theta)
                                .map(|(&i, t)| (i as f64 - b0 + t).powi(2))
                                .sum();
                            -c / (1.0 + k2)
                        }
                    })
                    .collect()
            })
            .collect()
    }

    fn axpy(&self, t: f64, dir: &[Vec<C>]) -> FourierConnection {
        let mut out = self.clone();
        for (b, d) in out.blocks.iter_mut().zip(dir) {
            for (c, v) in b.coeffs.iter_mut().zip(d) {
                *c += v * t;
            }
        }
        out
    }
}

/// Multiplies coefficient `m` by `i κ_μ(m)`.
fn scale_by_kappa(c: &[C], kappa: &[Vec<f64>; DIM], mu: usize, m: usize) -> Vec<C> {
    c.iter()
        .enumerate()
        .map(|(idx, v)| {
            let i = [idx / (m * m), (idx / m) % m, idx % m][mu];
            v * C::new(0.0, kappa[mu][i])
        })
        .collect()
}

/// Metric in which the gradient is taken.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Plain coefficient gradient.
    L2,
    /// Sobolev gradient: mode `κ` scaled by `1 / (1 + |κ|²)`.
    H1,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    /// Quasi-Newton with a Moré-Thuente line search.
    Lbfgs,
    /// Steepest descent with Armijo backtracking.
    GradientDescent,
}

#[derive(Clone, Debug, Serialize)]
pub struct FinderOptions {
    pub optimizer: Optimizer,
    pub tol: f64,
    pub metric: Metric,
    /// Correction pairs kept by L-BFGS.
    pub memory: usize,
    pub max_iters: usize,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    pub initial_step: f64,
}

impl Default for FinderOptions {
    fn default() -> Self {
        FinderOptions {
            optimizer: Optimizer::Lbfgs,
            tol: 1e-10,
            metric: Metric::H1,
            memory: 30,
            max_iters: 10_000,
            armijo: 1e-4,
            initial_step: 1e-2,
        }
    }
}

/// One row of the iteration log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogRow {
    pub iteration: usize,
    pub residual: f64,
    pub step: f64,
}

#[derive(Clone, Debug)]
pub struct FinderOutcome {
    pub connection: FourierConnection,
    pub residual: f64,
    pub iterations: usize,
    pub log: Vec<LogRow>,
}

impl FinderOutcome {
    /// Writes the iteration log as CSV with a header row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.log {
            w.serialize(row).map_err(|e| Error::Scenario(format!("csv: {e}")))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `R(S y)` and its gradient in the scaled coordinates `y`.
struct ScaledResidual {
    base: FourierConnection,
    scales: Vec<f64>,
}

impl ScaledResidual {
    fn connection(&self, y: &[f64]) -> FourierConnection {
        let c: Vec<f64> = y.iter().zip(&self.scales).map(|(a, b)| a * b).collect();
        self.base.with_coefficients(&c)
    }
}

impl argmin::core::CostFunction for ScaledResidual {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, y: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.connection(y).residual())
    }
}

impl argmin::core::Gradient for ScaledResidual {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, y: &Self::Param) -> std::result::Result<Vec<f64>, argmin::core::Error> {
        let (_, g) = self.connection(y).residual_and_gradient();
        Ok(g.iter()
            .flatten()
            .flat_map(|c| [c.re, c.im])
            .zip(&self.scales)
            .map(|(g, s)| g * s)
            .collect())
    }
}

/// Records residual and step length after every iteration.
struct LogObserver(std::sync::Arc<std::sync::Mutex<(Vec<LogRow>, Option<Vec<f64>>)>>);

impl<I> argmin::core::observers::Observe<I> for LogObserver
where
    I: argmin::core::State<Param = Vec<f64>, Float = f64>,
{
    fn observe_iter(&mut self, state: &I, _kv: &argmin::core::KV) -> std::result::Result<(), argmin::core::Error> {
        let mut guard = self.0.lock().expect("observer lock");
        let (log, prev) = &mut *guard;
        let param = state.get_param().cloned();
        let step = match (&param, prev.as_ref()) {
            (Some(p), Some(q)) => p.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt(),
            _ => 0.0,
        };
        log.push(LogRow {
            iteration: state.get_iter() as usize,
            residual: state.get_cost(),
            step,
        });
        *prev = param;
        Ok(())
    }
}

/// Minimizes `R` from `init` until `R < opts.tol`. `u(1)` blocks are first
/// projected exactly, so purely abelian problems finish without iterating.
///
/// Along linearized gauge directions `dX` the truncated space contains no
/// exactly flat fields, so `R` grows only quartically there. Steepest
/// descent crawls in such valleys; L-BFGS in the `H¹` metric does not, and
/// is the default.
pub fn find_flat_connection(init: &FourierConnection, opts: &FinderOptions) -> Result<FinderOutcome> {
    let mut start = init.clone();
    start.project_abelian();
    let residual = start.residual();
    if residual < opts.tol {
        return Ok(FinderOutcome {
            connection: start,
            residual,
            iterations: 0,
            log: vec![LogRow {
                iteration: 0,
                residual,
                step: 0.0,
            }],
        });
    }
    match opts.optimizer {
        Optimizer::Lbfgs => lbfgs(start, opts),
        Optimizer::GradientDescent => gradient_descent(start, opts),
    }
}

fn lbfgs(start: FourierConnection, opts: &FinderOptions) -> Result<FinderOutcome> {
    use argmin::core::{observers::ObserverMode, Executor, State};
    use argmin::solver::linesearch::MoreThuenteLineSearch;
    use argmin::solver::quasinewton::LBFGS;
    let scales = start.metric_scales(opts.metric);
    let y0: Vec<f64> = start.coefficients().iter().zip(&scales).map(|(c, s)| c / s).collect();
    let problem = ScaledResidual {
        base: start,
        scales,
    };
    let shared = std::sync::Arc::new(std::sync::Mutex::new((Vec::new(), None)));
    let solver = LBFGS::new(MoreThuenteLineSearch::new(), opts.memory)
        .with_tolerance_grad(0.0)
        .and_then(|s| s.with_tolerance_cost(0.0))
        .map_err(|e| Error::Scenario(e.to_string()))?;
    let res = Executor::new(problem, solver)
        .configure(|s| s.param(y0).max_iters(opts.max_iters as u64).target_cost(opts.tol))
        .add_observer(LogObserver(shared.clone()), ObserverMode::Always)
        .run()
        .map_err(|e| Error::Scenario(e.to_string()))?;
    let state = res.state();
    let y = state.get_best_param().cloned().expect("solver ran");
    let residual = state.get_best_cost();
    let connection = res.problem.problem.as_ref().expect("problem").connection(&y);
    let log = std::mem::take(&mut shared.lock().expect("observer lock").0);
    let iterations = state.get_iter() as usize;
    if residual >= opts.tol {
        return Err(Error::NonConvergence {
            iterations,
            residual,
            iterate: connection.coefficients(),
        });
    }
    Ok(FinderOutcome {
        connection,
        residual,
        iterations,
        log,
    })
}

/// The trial step doubles after every accepted step and halves on
/// rejection.
fn gradient_descent(mut current: FourierConnection, opts: &FinderOptions) -> Result<FinderOutcome> {
    let mut log = Vec::new();
    let mut step = opts.initial_step;
    let (mut residual, mut grad) = current.residual_and_gradient();
    log.push(LogRow {
        iteration: 0,
        residual,
        step: 0.0,
    });
    let mut iteration = 0;
    while residual >= opts.tol {
        if iteration >= opts.max_iters {
            return Err(Error::NonConvergence {
                iterations: iteration,
                residual,
                iterate: current.coefficients(),
            });
        }
        iteration += 1;
        let dir = current.descent_direction(&grad, opts.metric);
        let slope: f64 = -grad
            .iter()
            .flatten()
            .zip(dir.iter().flatten())
            .map(|(g, d)| g.re * d.re + g.im * d.im)
            .sum::<f64>();
        loop {
            let trial = current.axpy(step, &dir);
            let r = trial.residual();
            if r <= residual - opts.armijo * step * slope {
                current = trial;
                break;
            }
            step *= 0.5;
            if step < 1e-300 {
                return Err(Error::NonConvergence {
                    iterations: iteration,
                    residual,
                    iterate: current.coefficients(),
                });
            }
        }
        (residual, grad) = current.residual_and_gradient();
        log.push(LogRow {
            iteration,
            residual,
            step,
        });
        step *= 2.0;
    }
    Ok(FinderOutcome {
        connection: current,
        residual,
        iterations: iteration,
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{AlgebraExpr, FormExpr};
    use crate::gauge::{curvature, GaugeField};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn quarter_turn() -> HolonomyData {
        HolonomyData::toral(Algebra::su2(), &[PI / 2.0, 0.0, 0.0]).unwrap()
    }

    #[test]
    fn transforms_are_adjoint() {
        let (n, b) = (8, 2);
        let m = 2 * b + 1;
        let t = Tables::new(n, b, [-0.5, 0.25, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c: Vec<C> = (0..m * m * m).map(|_| C::new(rng.gen(), rng.gen())).collect();
        let g: Vec<C> = (0..n * n * n).map(|_| C::new(rng.gen(), rng.gen())).collect();
        let lhs: C = synthesize(&c, &t, n, m).iter().zip(&g).map(|(a, b)| a * b.conj()).sum();
        let rhs: C = c.iter().zip(analyze(&g, &t, n, m)).map(|(a, b)| a * b.conj()).sum();
        assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn analysis_recovers_a_band_limited_field() {
        let h = quarter_turn();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let recipes: Vec<TwistRecipe> = (0..3)
            .map(|_| super::super::random_recipe(&mut rng, Algebra::su2(), 3, 2, 2, 0.3))
            .collect();
        let a = GaugeField::from_expr(&make_twisted_gauge_field(&h, &recipes).unwrap(), 3).unwrap();
        let fc = FourierConnection::from_gauge_field(&a, &h, 2).unwrap();
        let back = fc.to_gauge_field().unwrap();
        for x in [[0.1, 0.2, 0.3], [2.0, 5.0, 1.0]] {
            assert!(back.at(&x).max_diff(&a.at(&x)).unwrap() < 1e-12);
        }
    }

    #[test]
    fn residual_matches_curvature_quadrature() {
        let h = quarter_turn();
        let mut fc = FourierConnection::zero(&h, 2).unwrap();
        fc.perturb(&mut ChaCha8Rng::seed_from_u64(5), 0.5);
        let a = fc.to_gauge_field().unwrap();
        let f = curvature(&a);
        let direct = crate::field::integrate_grid(3, 24, |x| {
            let v = f.at(x).values();
            v.iter().map(|c| c * c).sum()
        });
        assert!((fc.residual() - direct).abs() < 1e-10 * direct.max(1.0));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let h = quarter_turn();
        let mut fc = FourierConnection::zero(&h, 1).unwrap();
        fc.perturb(&mut ChaCha8Rng::seed_from_u64(6), 0.8);
        let (_, grad) = fc.residual_and_gradient();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let dir: Vec<Vec<C>> = grad
            .iter()
            .map(|g| g.iter().map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
            .collect();
        let t = 1e-5;
        let fd = (fc.axpy(t, &dir).residual() - fc.axpy(-t, &dir).residual()) / (2.0 * t);
        let exact: f64 = grad
            .iter()
            .flatten()
            .zip(dir.iter().flatten())
            .map(|(g, d)| g.re * d.re + g.im * d.im)
            .sum();
        assert!((fd - exact).abs() < 1e-6 * exact.abs().max(1.0), "{fd} vs {exact}");
    }

    #[test]
    fn flat_start_returns_immediately() {
        let h = quarter_turn();
        let alg = h.algebra();
        let a0 = FormExpr::differential(0)
            .times_algebra(&AlgebraExpr::constant(alg, &[0.3, 0.0, 0.0]))
            .unwrap();
        let a0 = GaugeField::from_expr(&a0, 3).unwrap();
        let fc = FourierConnection::from_gauge_field(&a0, &h, 2).unwrap();
        let out = find_flat_connection(&fc, &FinderOptions::default()).unwrap();
        assert_eq!(out.iterations, 0);
        assert!(out.residual < 1e-20);
    }

    #[test]
    fn abelian_projection_is_exact() {
        let h = HolonomyData::trivial(Algebra::u1(), 3);
        let mut fc = FourierConnection::zero(&h, 3).unwrap();
        fc.perturb(&mut ChaCha8Rng::seed_from_u64(8), 1.0);
        assert!(fc.residual() > 1e-3);
        let out = find_flat_connection(&fc, &FinderOptions::default()).unwrap();
        assert_eq!(out.iterations, 0);
        assert!(out.residual < 1e-12);
    }

    #[test]
    fn csv_log_has_header() {
        let h = HolonomyData::trivial(Algebra::u1(), 3);
        let fc = FourierConnection::zero(&h, 1).unwrap();
        let out = find_flat_connection(&fc, &FinderOptions::default()).unwrap();
        let mut buf = Vec::new();
        out.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("iteration,residual,step\n"));
    }
}
