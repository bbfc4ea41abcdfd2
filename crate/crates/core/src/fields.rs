//! Smooth operator fields built from the splitting, and vector fields that
//! can be differentiated through them.
//!
//! The projectors onto the vertical, horizontal, complex and slant parts are
//! written as closed-form matrix functions of the point (normal equations
//! for the vertical/horizontal split, a matrix sign function for the
//! spectral pieces), so evaluating them over dual numbers gives their exact
//! derivatives.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::christoffel;
use crate::linalg::{inner, projector_above, Mat};
use crate::real::{Dual, Real};
use crate::submersion::{SemiSlantAnalysis, SubmersionMap};

/// A map together with the spectral cuts fixed at the base point.
#[derive(Clone, Copy, Debug)]
pub struct Ctx<'a> {
    pub map: &'a SubmersionMap,
    pub d1_cut: f64,
    pub mu_cut: f64,
    /// Projector derivatives at one point, used to answer first-order
    /// dual evaluations there without re-running the sign iteration.
    pub jets: Option<&'a ProjectorJets>,
}

impl<'a> Ctx<'a> {
    pub fn new(map: &'a SubmersionMap, analysis: &SemiSlantAnalysis) -> Self {
        Self {
            map,
            d1_cut: analysis.d1_cut,
            mu_cut: analysis.mu_cut,
            jets: None,
        }
    }

    pub fn with_jets(self, jets: &'a ProjectorJets) -> Self {
        Self {
            jets: Some(jets),
            ..self
        }
    }

    pub fn dim(&self) -> usize {
        self.map.source_dim()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Proj {
    Vertical,
    Horizontal,
    D1,
    D2,
    Mu,
    OmegaD2,
}

/// `(P_V, P_H)` at `q`, with `P_H = g⁻¹Dᵀ(Dg⁻¹Dᵀ)⁻¹D`.
pub fn vertical_horizontal<T: Real>(ctx: &Ctx, q: &[T]) -> Result<(Mat<T>, Mat<T>)> {
    let (_, ginv) = ctx.map.metric().eval_with_inverse(q)?;
    let d = ctx.map.jacobian(q)?;
    let ginv_dt = ginv.mul(&d.transpose());
    let normal = d.mul(&ginv_dt).inverse().map_err(|_| Error::NotSubmersion {
        rank: 0,
        expected: ctx.map.target_dim(),
    })?;
    let ph = ginv_dt.mul(&normal).mul(&d);
    let pv = Mat::identity(ctx.dim()).sub(&ph);
    Ok((pv, ph))
}

fn unit_part<T: Real>(ctx: &Ctx, p: &Mat<T>, cut: f64) -> Result<Mat<T>> {
    let j: Mat<T> = ctx.map.complex_structure().eval(&[] as &[T]);
    let a = p.mul(&j).mul(p);
    let s = a.mul(&a).scale(T::from_f64(-1.0));
    Ok(projector_above(&s, cut)?)
}

impl Proj {
    pub const ALL: [Proj; 6] = [
        Proj::Vertical,
        Proj::Horizontal,
        Proj::D1,
        Proj::D2,
        Proj::Mu,
        Proj::OmegaD2,
    ];

    fn index(self) -> usize {
        self as usize
    }
}

/// All six projectors at `q`, sharing the common factorizations.
pub fn all_projectors<T: Real>(ctx: &Ctx, q: &[T]) -> Result<[Mat<T>; 6]> {
    let (pv, ph) = vertical_horizontal(ctx, q)?;
    let d1 = unit_part(ctx, &pv, ctx.d1_cut)?;
    let mu = unit_part(ctx, &ph, ctx.mu_cut)?;
    let d2 = pv.sub(&d1);
    let od2 = ph.sub(&mu);
    Ok([pv, ph, d1, d2, mu, od2])
}

/// The projector `which` at `q`.
pub fn projector<T: Real>(ctx: &Ctx, which: Proj, q: &[T]) -> Result<Mat<T>> {
    if T::ORDER <= 1 {
        if let Some(j) = ctx.jets.filter(|j| j.matches(q)) {
            return Ok(j.eval(which, q));
        }
    }
    let (pv, ph) = vertical_horizontal(ctx, q)?;
    Ok(match which {
        Proj::Vertical => pv,
        Proj::Horizontal => ph,
        Proj::D1 => unit_part(ctx, &pv, ctx.d1_cut)?,
        Proj::D2 => {
            let d1 = unit_part(ctx, &pv, ctx.d1_cut)?;
            pv.sub(&d1)
        }
        Proj::Mu => unit_part(ctx, &ph, ctx.mu_cut)?,
        Proj::OmegaD2 => {
            let mu = unit_part(ctx, &ph, ctx.mu_cut)?;
            ph.sub(&mu)
        }
    })
}

/// Values and coordinate partials of every projector at one point.
#[derive(Clone, Debug)]
pub struct ProjectorJets {
    point: Vec<f64>,
    values: Vec<Mat<f64>>,
    /// `partials[proj][k] = ∂_k P`.
    partials: Vec<Vec<Mat<f64>>>,
}

impl ProjectorJets {
    pub fn new(ctx: &Ctx, p: &[f64]) -> Result<Self> {
        let plain = Ctx { jets: None, ..*ctx };
        let values = all_projectors::<f64>(&plain, p)?.to_vec();
        let m = p.len();
        let mut partials: Vec<Vec<_>> = (0..6).map(|_| Vec::with_capacity(m)).collect();
        for k in 0..m {
            let dir: Vec<f64> = (0..m).map(|i| if i == k { 1.0 } else { 0.0 }).collect();
            let mats = all_projectors(&plain, &Dual::seed(p, &dir))?;
            for (slot, mat) in partials.iter_mut().zip(mats.iter()) {
                slot.push(mat.map(|d| d.eps));
            }
        }
        Ok(Self {
            point: p.to_vec(),
            values,
            partials,
        })
    }

    fn matches<T: Real>(&self, q: &[T]) -> bool {
        q.len() == self.point.len() && q.iter().zip(&self.point).all(|(a, b)| a.value() == *b)
    }

    fn eval<T: Real>(&self, which: Proj, q: &[T]) -> Mat<T> {
        let i = which.index();
        let v: Vec<f64> = q.iter().map(|x| x.tangent_value()).collect();
        let base = &self.values[i];
        Mat::from_fn(base.rows(), base.cols(), |r, c| {
            let d = if T::ORDER == 0 {
                0.0
            } else {
                self.partials[i].iter().zip(&v).map(|(dp, vk)| dp[(r, c)] * vk).sum()
            };
            T::from_parts(base[(r, c)], d)
        })
    }
}

/// Componentwise polynomial of degree ≤ 2 centred at a point.
#[derive(Clone, Debug)]
pub struct Poly {
    center: Vec<f64>,
    c0: Vec<f64>,
    c1: Vec<Vec<f64>>,
    c2: Vec<Vec<Vec<f64>>>,
}

impl Poly {
    /// Coefficients drawn from U[−1, 1].
    pub fn random<R: Rng>(rng: &mut R, center: &[f64]) -> Self {
        let n = center.len();
        let mut u = || rng.gen_range(-1.0..=1.0);
        let c0 = (0..n).map(|_| u()).collect();
        let c1 = (0..n).map(|_| (0..n).map(|_| u()).collect()).collect();
        let c2 = (0..n)
            .map(|_| (0..n).map(|_| (0..n).map(|_| u()).collect()).collect())
            .collect();
        Self {
            center: center.to_vec(),
            c0,
            c1,
            c2,
        }
    }

    pub fn eval<T: Real>(&self, q: &[T]) -> Vec<T> {
        let n = self.center.len();
        let dx: Vec<T> = q.iter().zip(&self.center).map(|(&x, &c)| x - T::from_f64(c)).collect();
        (0..n)
            .map(|k| {
                let mut acc = T::from_f64(self.c0[k]);
                for i in 0..n {
                    let mut lin = T::from_f64(self.c1[k][i]);
                    for j in 0..n {
                        lin = lin + dx[j].scale(self.c2[k][i][j]);
                    }
                    acc = acc + lin * dx[i];
                }
                acc
            })
            .collect()
    }
}

/// Vector fields assembled from polynomials, projectors and J.
#[derive(Clone, Debug)]
pub enum Field {
    Const(Vec<f64>),
    Poly(Box<Poly>),
    Project(Proj, Box<Field>),
    ApplyJ(Box<Field>),
    Sum(Vec<Field>),
    /// Horizontal lift of the target field `w(y) = c0 + c1·y`.
    Basic(Box<BasicLift>),
}

#[derive(Clone, Debug)]
pub struct BasicLift {
    pub c0: Vec<f64>,
    pub c1: Vec<Vec<f64>>,
}

impl BasicLift {
    pub fn random<R: Rng>(rng: &mut R, n: usize) -> Self {
        let mut u = || rng.gen_range(-1.0..=1.0);
        let c0 = (0..n).map(|_| u()).collect();
        let c1 = (0..n).map(|_| (0..n).map(|_| u()).collect()).collect();
        Self { c0, c1 }
    }

    pub fn eval<T: Real>(&self, ctx: &Ctx, q: &[T]) -> Result<Vec<T>> {
        let y = ctx.map.eval(q)?;
        let w: Vec<T> = self
            .c0
            .iter()
            .zip(&self.c1)
            .map(|(&a, row)| {
                row.iter()
                    .zip(&y)
                    .fold(T::from_f64(a), |acc, (&c, &yi)| acc + yi.scale(c))
            })
            .collect();
        let (_, ginv) = ctx.map.metric().eval_with_inverse(q)?;
        let d = ctx.map.jacobian(q)?;
        let ginv_dt = ginv.mul(&d.transpose());
        let normal = d.mul(&ginv_dt).inverse().map_err(|_| Error::NotSubmersion {
            rank: 0,
            expected: ctx.map.target_dim(),
        })?;
        Ok(ginv_dt.mul(&normal).mul_vec(&w))
    }
}

impl Field {
    pub fn project(which: Proj, f: Field) -> Field {
        Field::Project(which, Box::new(f))
    }

    pub fn j(f: Field) -> Field {
        Field::ApplyJ(Box::new(f))
    }

    /// Random polynomial field projected into `which`.
    pub fn random_in<R: Rng>(rng: &mut R, which: Proj, center: &[f64]) -> Field {
        Field::project(which, Field::Poly(Box::new(Poly::random(rng, center))))
    }

    /// Random basic horizontal field.
    pub fn random_basic<R: Rng>(rng: &mut R, target_dim: usize) -> Field {
        Field::Basic(Box::new(BasicLift::random(rng, target_dim)))
    }

    /// `φY` for a vertical field Y.
    pub fn phi(y: Field) -> Field {
        Field::project(Proj::Vertical, Field::j(y))
    }

    /// `ωY` (or `CZ`): horizontal part of `J·`.
    pub fn h_of_j(y: Field) -> Field {
        Field::project(Proj::Horizontal, Field::j(y))
    }

    pub fn eval<T: Real>(&self, ctx: &Ctx, q: &[T]) -> Result<Vec<T>> {
        Ok(match self {
            Field::Const(v) => v.iter().map(|&x| T::from_f64(x)).collect(),
            Field::Poly(p) => p.eval(q),
            Field::Project(which, inner) => {
                let v = inner.eval(ctx, q)?;
                projector(ctx, *which, q)?.mul_vec(&v)
            }
            Field::ApplyJ(inner) => ctx.map.complex_structure().apply(&inner.eval(ctx, q)?),
            Field::Basic(b) => b.eval(ctx, q)?,
            Field::Sum(parts) => {
                let mut acc = vec![T::zero(); ctx.dim()];
                for p in parts {
                    for (a, b) in acc.iter_mut().zip(p.eval(ctx, q)?) {
                        *a = *a + b;
                    }
                }
                acc
            }
        })
    }

    /// Value at `q` and derivative along `v`.
    pub fn eval_with_derivative<T: Real>(&self, ctx: &Ctx, q: &[T], v: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        let out = self.eval(ctx, &Dual::seed(q, v))?;
        Ok((out.iter().map(|d| d.re).collect(), out.iter().map(|d| d.eps).collect()))
    }
}

/// `∇_x Y` at `q`.
pub fn nabla<T: Real>(ctx: &Ctx, x: &[T], y: &Field, q: &[T]) -> Result<Vec<T>> {
    let (yv, dy) = y.eval_with_derivative(ctx, q, x)?;
    let gamma = christoffel(ctx.map.metric(), q)?;
    Ok(dy.iter().zip(gamma.contract(x, &yv)).map(|(&a, b)| a + b).collect())
}

/// `[X, Y]` at `q`.
pub fn bracket(ctx: &Ctx, x: &Field, y: &Field, q: &[f64]) -> Result<Vec<f64>> {
    let xv = x.eval(ctx, q)?;
    let yv = y.eval(ctx, q)?;
    let (_, dy) = y.eval_with_derivative(ctx, q, &xv)?;
    let (_, dx) = x.eval_with_derivative(ctx, q, &yv)?;
    Ok(dy.iter().zip(dx).map(|(a, b)| a - b).collect())
}

/// The projectors and J at one point, for applying φ, ω, B, C, P, Q to
/// plain vectors.
#[derive(Clone, Debug)]
pub struct PointOps {
    pub g: Mat<f64>,
    pub j: Mat<f64>,
    pub pv: Mat<f64>,
    pub ph: Mat<f64>,
    pub d1: Mat<f64>,
    pub d2: Mat<f64>,
    pub mu: Mat<f64>,
    pub omega_d2: Mat<f64>,
}

impl PointOps {
    pub fn new(ctx: &Ctx, p: &[f64]) -> Result<Self> {
        let (pv, ph) = vertical_horizontal(ctx, p)?;
        let d1 = unit_part(ctx, &pv, ctx.d1_cut)?;
        let mu = unit_part(ctx, &ph, ctx.mu_cut)?;
        Ok(Self {
            g: ctx.map.metric().eval(p)?,
            j: ctx.map.complex_structure().matrix().clone(),
            d2: pv.sub(&d1),
            omega_d2: ph.sub(&mu),
            pv,
            ph,
            d1,
            mu,
        })
    }

    pub fn get(&self, which: Proj) -> &Mat<f64> {
        match which {
            Proj::Vertical => &self.pv,
            Proj::Horizontal => &self.ph,
            Proj::D1 => &self.d1,
            Proj::D2 => &self.d2,
            Proj::Mu => &self.mu,
            Proj::OmegaD2 => &self.omega_d2,
        }
    }

    pub fn apply(&self, which: Proj, v: &[f64]) -> Vec<f64> {
        self.get(which).mul_vec(v)
    }

    pub fn v(&self, x: &[f64]) -> Vec<f64> {
        self.pv.mul_vec(x)
    }

    pub fn h(&self, x: &[f64]) -> Vec<f64> {
        self.ph.mul_vec(x)
    }

    pub fn jv(&self, x: &[f64]) -> Vec<f64> {
        self.j.mul_vec(x)
    }

    /// φ and B: vertical part of J on vertical and horizontal input.
    pub fn phi(&self, x: &[f64]) -> Vec<f64> {
        self.v(&self.jv(&self.v(x)))
    }

    pub fn omega(&self, x: &[f64]) -> Vec<f64> {
        self.h(&self.jv(&self.v(x)))
    }

    pub fn b(&self, z: &[f64]) -> Vec<f64> {
        self.v(&self.jv(&self.h(z)))
    }

    pub fn c(&self, z: &[f64]) -> Vec<f64> {
        self.h(&self.jv(&self.h(z)))
    }

    /// P and Q: projections onto D1 and D2.
    pub fn p(&self, x: &[f64]) -> Vec<f64> {
        self.d1.mul_vec(x)
    }

    pub fn q(&self, x: &[f64]) -> Vec<f64> {
        self.d2.mul_vec(x)
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        inner(&self.g, x, x).max(0.0).sqrt()
    }

    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        inner(&self.g, x, y)
    }
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(s: f64, a: &[f64]) -> Vec<f64> {
    a.iter().map(|x| s * x).collect()
}
