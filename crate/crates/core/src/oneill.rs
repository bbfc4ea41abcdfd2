//! O'Neill tensors, the second fundamental form of the map, mean curvature
//! of the fibers and the harmonicity traces.

use crate::error::Result;
use crate::fields::{add, nabla, scale, sub, vertical_horizontal, Ctx, Field, PointOps, Proj};
use crate::geometry::christoffel;
use crate::linalg::Mat;
use crate::real::{Dual, Real};
use crate::submersion::SemiSlantAnalysis;

/// Shared core of 𝒯 and 𝒜: `ℋ∇_d(𝒱F̃) + 𝒱∇_d(ℋF̃)` with the projected
/// extensions `F̃(q) = P(q)f`.
fn split_derivative<T: Real>(ctx: &Ctx, q: &[T], dir: &[T], f: &[T], pv: &Mat<T>, ph: &Mat<T>) -> Result<Vec<T>> {
    let (pvd, phd) = vertical_horizontal(ctx, &Dual::seed(q, dir))?;
    let gamma = christoffel(ctx.map.metric(), q)?;
    let vf = pv.mul_vec(f);
    let hf = ph.mul_vec(f);
    let dvf: Vec<T> = pvd
        .map(|x| x.eps)
        .mul_vec(f)
        .into_iter()
        .zip(gamma.contract(dir, &vf))
        .map(|(a, b)| a + b)
        .collect();
    let dhf: Vec<T> = phd
        .map(|x| x.eps)
        .mul_vec(f)
        .into_iter()
        .zip(gamma.contract(dir, &hf))
        .map(|(a, b)| a + b)
        .collect();
    Ok(ph
        .mul_vec(&dvf)
        .into_iter()
        .zip(pv.mul_vec(&dhf))
        .map(|(a, b)| a + b)
        .collect())
}

/// `𝒯_E F = ℋ∇_{𝒱E}𝒱F + 𝒱∇_{𝒱E}ℋF`.
pub fn tensor_t<T: Real>(ctx: &Ctx, q: &[T], e: &[T], f: &[T]) -> Result<Vec<T>> {
    let (pv, ph) = vertical_horizontal(ctx, q)?;
    let dir = pv.mul_vec(e);
    split_derivative(ctx, q, &dir, f, &pv, &ph)
}

/// `𝒜_E F = ℋ∇_{ℋE}𝒱F + 𝒱∇_{ℋE}ℋF`.
pub fn tensor_a<T: Real>(ctx: &Ctx, q: &[T], e: &[T], f: &[T]) -> Result<Vec<T>> {
    let (pv, ph) = vertical_horizontal(ctx, q)?;
    let dir = ph.mul_vec(e);
    split_derivative(ctx, q, &dir, f, &pv, &ph)
}

/// 𝒯 with an arbitrary extension `G̃` of the second argument, for
/// tensoriality checks.
pub fn tensor_t_extended(ctx: &Ctx, q: &[f64], e: &[f64], g: &Field) -> Result<Vec<f64>> {
    let ops = PointOps::new(ctx, q)?;
    let v = ops.v(e);
    let a = nabla(ctx, &v, &Field::project(Proj::Vertical, g.clone()), q)?;
    let b = nabla(ctx, &v, &Field::project(Proj::Horizontal, g.clone()), q)?;
    Ok(add(&ops.h(&a), &ops.v(&b)))
}

/// `∇̂_X Y = 𝒱∇_X Y`.
pub fn hat_nabla(ctx: &Ctx, ops: &PointOps, p: &[f64], x: &[f64], y: &Field) -> Result<Vec<f64>> {
    Ok(ops.v(&nabla(ctx, x, y, p)?))
}

/// `ℋ∇_X Y`.
pub fn h_nabla(ctx: &Ctx, ops: &PointOps, p: &[f64], x: &[f64], y: &Field) -> Result<Vec<f64>> {
    Ok(ops.h(&nabla(ctx, x, y, p)?))
}

/// `(∇_X φ)Y = ∇̂_X φY − φ∇̂_X Y`.
pub fn nabla_phi(ctx: &Ctx, ops: &PointOps, p: &[f64], x: &[f64], y: &Field) -> Result<Vec<f64>> {
    let a = hat_nabla(ctx, ops, p, x, &Field::phi(y.clone()))?;
    let b = ops.phi(&hat_nabla(ctx, ops, p, x, y)?);
    Ok(sub(&a, &b))
}

/// `(∇_X ω)Y = ℋ∇_X ωY − ω∇̂_X Y`.
pub fn nabla_omega(ctx: &Ctx, ops: &PointOps, p: &[f64], x: &[f64], y: &Field) -> Result<Vec<f64>> {
    let a = h_nabla(ctx, ops, p, x, &Field::h_of_j(y.clone()))?;
    let b = ops.omega(&hat_nabla(ctx, ops, p, x, y)?);
    Ok(sub(&a, &b))
}

/// `(∇F_*)(X, Y)` on a flat target:
/// `Σ XⁱYʲ(∂ᵢ∂ⱼF^α − Γᵏᵢⱼ ∂ₖF^α)`.
pub fn second_fundamental_form(ctx: &Ctx, p: &[f64], x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let jets = ctx.map.jets(p)?;
    let gamma = christoffel(ctx.map.metric(), p)?;
    let gxy = gamma.contract(x, y);
    let n = p.len();
    Ok(jets
        .iter()
        .map(|f| {
            let mut acc = 0.0;
            for i in 0..n {
                if x[i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    acc += x[i] * y[j] * f.dd(i, j);
                }
            }
            for k in 0..n {
                acc -= gxy[k] * f.d(k);
            }
            acc
        })
        .collect())
}

/// `H = (1/dim V) Σ 𝒯_{e_i} e_i` over the orthonormal vertical frame.
pub fn mean_curvature(ctx: &Ctx, analysis: &SemiSlantAnalysis) -> Result<Vec<f64>> {
    mean_curvature_in(ctx, &analysis.point, &analysis.vertical.vectors())
}

/// Mean curvature from a caller-supplied orthonormal vertical frame.
pub fn mean_curvature_in(ctx: &Ctx, p: &[f64], frame: &[Vec<f64>]) -> Result<Vec<f64>> {
    let mut h = vec![0.0; p.len()];
    for e in frame {
        h = add(&h, &tensor_t(ctx, p, e, e)?);
    }
    Ok(scale(1.0 / frame.len().max(1) as f64, &h))
}

/// Sectional curvature of the fiber through `p` on the plane of the vertical
/// vectors `x, y`, from the ambient curvature by the Gauss equation
/// `K̂ = K + (g(𝒯_X X, 𝒯_Y Y) − |𝒯_X Y|²) / (|X|²|Y|² − g(X, Y)²)`.
pub fn fiber_sectional(ctx: &Ctx, p: &[f64], x: &[f64], y: &[f64]) -> Result<f64> {
    let g = ctx.map.metric().eval(p)?;
    let ip = |a: &[f64], b: &[f64]| crate::linalg::dot(&g.mul_vec(a), b);
    let area = ip(x, x) * ip(y, y) - ip(x, y).powi(2);
    let k = crate::geometry::riemann(ctx.map.metric(), p)?.sectional(x, y)?;
    let txx = tensor_t(ctx, p, x, x)?;
    let tyy = tensor_t(ctx, p, y, y)?;
    let txy = tensor_t(ctx, p, x, y)?;
    Ok(k + (ip(&txx, &tyy) - ip(&txy, &txy)) / area)
}

/// `max |𝒯_X Y − g(X, Y)H|` over the given vertical pairs.
pub fn umbilical_residual(
    ctx: &Ctx,
    ops: &PointOps,
    p: &[f64],
    h: &[f64],
    pairs: &[(Vec<f64>, Vec<f64>)],
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (x, y) in pairs {
        let t = tensor_t(ctx, p, x, y)?;
        let r = sub(&t, &scale(ops.inner(x, y), h));
        worst = worst.max(ops.norm(&r));
    }
    Ok(worst)
}

/// Trace of `∇F_*` over a full orthonormal frame, and
/// `Σ_j F_*(∇_{v_j} v_j)` over the D2 frame with projected extensions.
#[derive(Clone, Debug)]
pub struct HarmonicTrace {
    pub full: Vec<f64>,
    pub d2: Vec<f64>,
    /// Largest `|F_*(∇_{Je}Je) + F_*(∇_e e)|` over the paired D1 frame.
    pub d1_pairing: f64,
}

pub fn harmonic_trace(ctx: &Ctx, analysis: &SemiSlantAnalysis) -> Result<HarmonicTrace> {
    let p = &analysis.point;
    let n = ctx.map.target_dim();
    let mut full = vec![0.0; n];
    for e in analysis
        .vertical
        .vectors()
        .into_iter()
        .chain(analysis.horizontal.vectors())
    {
        full = add(&full, &second_fundamental_form(ctx, p, &e, &e)?);
    }
    let d = &analysis.differential;
    let push = |field: &Field, v: &[f64]| -> Result<Vec<f64>> { Ok(d.mul_vec(&nabla(ctx, v, field, p)?)) };
    let mut d2 = vec![0.0; n];
    for v in analysis.d2.vectors() {
        d2 = add(&d2, &push(&Field::project(Proj::D2, Field::Const(v.clone())), &v)?);
    }
    let ops = PointOps::new(ctx, p)?;
    let mut d1_pairing: f64 = 0.0;
    for e in paired_d1_frame(&ops, &analysis.d1.vectors()) {
        let ext = Field::project(Proj::D1, Field::Const(e.clone()));
        let je = ops.jv(&e);
        let a = push(&ext, &e)?;
        let b = push(&Field::j(ext), &je)?;
        d1_pairing = d1_pairing.max(add(&a, &b).iter().fold(0.0, |m, x| m.max(x.abs())));
    }
    Ok(HarmonicTrace { full, d2, d1_pairing })
}

/// Orthonormal D1 vectors `e_1, e_3, …` such that `{e, Je}` is an
/// orthonormal frame of D1; only the odd members are returned.
pub fn paired_d1_frame(ops: &PointOps, d1: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut done: Vec<Vec<f64>> = Vec::new();
    let mut out = Vec::new();
    for v in d1 {
        let mut w = v.clone();
        for u in &done {
            w = sub(&w, &scale(ops.inner(u, &w), u));
        }
        let nw = ops.norm(&w);
        if nw < 1e-6 {
            continue;
        }
        let e = scale(1.0 / nw, &w);
        let je = ops.jv(&e);
        done.push(e.clone());
        done.push(je);
        out.push(e);
    }
    out
}

/// `F̂ = JP + φQ` as a field transform.
pub fn fhat_field(y: &Field) -> Field {
    Field::Sum(vec![
        Field::j(Field::project(Proj::D1, y.clone())),
        Field::phi(Field::project(Proj::D2, y.clone())),
    ])
}

/// Both sides of the `F̂` identity for vertical X and field Y:
/// `(∇_X F̂)Y` and `φ(∇̂_X PY − ∇̂_X Y) + B𝒯_X PY + ∇̂_X φQY`.
pub fn endomorphism_fhat(ctx: &Ctx, ops: &PointOps, p: &[f64], x: &[f64], y: &Field) -> Result<(Vec<f64>, Vec<f64>)> {
    let yv = y.eval(ctx, p)?;
    let fhat = |v: &[f64]| add(&ops.jv(&ops.p(v)), &ops.phi(&ops.q(v)));
    let lhs = sub(
        &hat_nabla(ctx, ops, p, x, &fhat_field(y))?,
        &fhat(&hat_nabla(ctx, ops, p, x, y)?),
    );
    let py = Field::project(Proj::D1, y.clone());
    let phi_qy = Field::phi(Field::project(Proj::D2, y.clone()));
    let t = tensor_t(ctx, p, x, &ops.p(&yv))?;
    let rhs = add(
        &add(
            &ops.phi(&sub(&hat_nabla(ctx, ops, p, x, &py)?, &hat_nabla(ctx, ops, p, x, y)?)),
            &ops.b(&t),
        ),
        &hat_nabla(ctx, ops, p, x, &phi_qy)?,
    );
    Ok((lhs, rhs))
}

/// `(∇_E 𝒯)(X, Y) = ∇_E(𝒯_X Y) − 𝒯_{∇_E X}Y − 𝒯_X ∇_E Y` with constant
/// coordinate extensions of X and Y.
pub fn nabla_tensor_t(ctx: &Ctx, p: &[f64], e: &[f64], x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let gamma = christoffel(ctx.map.metric(), p)?;
    let qd = Dual::seed(p, e);
    let lift = |v: &[f64]| -> Vec<Dual<f64>> { v.iter().map(|&a| Dual::constant(a)).collect() };
    let td = tensor_t(ctx, &qd, &lift(x), &lift(y))?;
    let t: Vec<f64> = td.iter().map(|d| d.re).collect();
    let dt: Vec<f64> = td.iter().map(|d| d.eps).collect();
    let nabla_t = add(&dt, &gamma.contract(e, &t));
    let ex = gamma.contract(e, x);
    let ey = gamma.contract(e, y);
    Ok(sub(
        &sub(&nabla_t, &tensor_t(ctx, p, &ex, y)?),
        &tensor_t(ctx, p, x, &ey)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::geometry::{product_j, standard_j, MetricField};
    use crate::submersion::{split_d1_d2, SubmersionMap};

    /// R² ×_f R² → R², f = exp(x1), projecting to the base.
    fn warped_projection() -> SubmersionMap {
        let warp = parse("exp(x1)", 4).unwrap();
        let g = MetricField::warped(2, 2, warp).unwrap();
        let j = product_j(&standard_j(2).unwrap(), &standard_j(2).unwrap()).unwrap();
        let comps = vec![parse("x1", 4).unwrap(), parse("x2", 4).unwrap()];
        SubmersionMap::new(comps, g, j).unwrap()
    }

    #[test]
    fn flat_linear_map_has_vanishing_tensors() {
        let m = 6;
        let comps = vec![parse("0.6*x3 - 0.8*x5", m).unwrap(), parse("x6", m).unwrap()];
        let f = SubmersionMap::new(comps, MetricField::euclidean(m), standard_j(m).unwrap()).unwrap();
        let p = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        let a = split_d1_d2(&f, &p).unwrap();
        let ctx = Ctx::new(&f, &a);
        let e = [1.0, 0.5, -0.3, 0.2, 0.7, -1.0];
        let g = [0.3, -0.2, 1.0, 0.1, 0.0, 0.4];
        let t = tensor_t(&ctx, &p, &e, &g).unwrap();
        let aa = tensor_a(&ctx, &p, &e, &g).unwrap();
        assert!(t.iter().chain(&aa).all(|v| v.abs() < 1e-12));
        assert!(second_fundamental_form(&ctx, &p, &e, &g)
            .unwrap()
            .iter()
            .all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn warped_fiber_shape_operator() {
        // 𝒯_X X = −f grad f for unit fiber X; with f = e^{x1}, grad f = f ∂1
        let f = warped_projection();
        let x1: f64 = 0.2;
        let p = [x1, -0.1, 0.4, 0.3];
        let a = split_d1_d2(&f, &p).unwrap();
        let ctx = Ctx::new(&f, &a);
        let fx = x1.exp();
        let unit = [0.0, 0.0, 1.0 / fx, 0.0];
        let t = tensor_t(&ctx, &p, &unit, &unit).unwrap();
        // −f grad f on a unit fiber vector scaled by |X|² = 1 gives −(f'/f) ∂1 after
        // normalisation: g(∂3/f, ∂3/f) = 1 and ∇_{∂3}∂3 = −f f' ∂1
        assert!((t[0] + 1.0).abs() < 1e-12, "{t:?}");
        assert!(t[1].abs() < 1e-12 && t[2].abs() < 1e-12 && t[3].abs() < 1e-12);
        let h = mean_curvature(&ctx, &a).unwrap();
        assert!((h[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn a_tensor_matches_half_bracket_on_polar_map() {
        use rand::SeedableRng;
        let m = 4;
        let comps = vec![parse("sqrt(x1^2 + x2^2)", m).unwrap(), parse("x3", m).unwrap()];
        let f = SubmersionMap::new(comps, MetricField::euclidean(m), standard_j(m).unwrap()).unwrap();
        let p = [0.8, 0.6, 0.1, -0.2];
        let a = split_d1_d2(&f, &p).unwrap();
        let ctx = Ctx::new(&f, &a);
        let ops = PointOps::new(&ctx, &p).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let z = Field::random_in(&mut rng, Proj::Horizontal, &p);
        let w = Field::random_in(&mut rng, Proj::Horizontal, &p);
        let zv = z.eval(&ctx, &p).unwrap();
        let wv = w.eval(&ctx, &p).unwrap();
        let lhs = tensor_a(&ctx, &p, &zv, &wv).unwrap();
        let br = crate::fields::bracket(&ctx, &z, &w, &p).unwrap();
        let rhs = scale(0.5, &ops.v(&br));
        assert!(ops.norm(&sub(&lhs, &rhs)) < 1e-10);
    }
}
