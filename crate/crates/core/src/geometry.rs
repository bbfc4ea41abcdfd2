//! Metrics, almost complex structures, and the Levi-Civita calculus on a
//! single global coordinate chart.

use thiserror::Error;

use crate::expr::{Expr, ExprError, Params};
use crate::jet::Jet2;
use crate::linalg::{inner, LinalgError, Mat};
use crate::real::{primal, tangent, Dual, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("metric not invertible at p")]
    MetricNotInvertible,
    #[error("warp function must be positive, got {0}")]
    NonPositiveWarp(f64),
    #[error("warp function depends on x{0}, which is not a first-factor coordinate")]
    WarpOutsideBase(usize),
    #[error("almost complex structure needs an even dimension, got {0}")]
    OddDimension(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("degenerate plane: the two vectors are (nearly) linearly dependent")]
    DegeneratePlane,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Condition-number ceiling for metric inverses.
pub const MAX_METRIC_CONDITION: f64 = 1e12;

#[derive(Clone, Debug, PartialEq)]
pub enum MetricKind {
    Euclidean,
    /// Block diagonal `a^2 I_{n1} (+) b^2 I_{n2}` with constant scales.
    Product {
        split: (usize, usize),
        scales: (f64, f64),
    },
    /// `I_{n1} (+) f^2 I_{n2}` with `f` a function of the first n1 coordinates.
    WarpedProduct {
        split: (usize, usize),
        warp: Expr,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricField {
    dim: usize,
    kind: MetricKind,
}

impl MetricField {
    pub fn euclidean(dim: usize) -> Self {
        Self {
            dim,
            kind: MetricKind::Euclidean,
        }
    }

    pub fn product(n1: usize, n2: usize, scales: (f64, f64)) -> Self {
        Self {
            dim: n1 + n2,
            kind: MetricKind::Product {
                split: (n1, n2),
                scales,
            },
        }
    }

    /// Warped product metric. The warp must already have its parameters
    /// bound and may only read the first `n1` coordinates.
    pub fn warped(n1: usize, n2: usize, warp: Expr) -> Result<Self, GeometryError> {
        if let Some(p) = warp.params().first() {
            return Err(ExprError::UnboundParameter { name: p.clone() }.into());
        }
        for i in n1..n1 + n2 {
            if warp.uses_variable(i) {
                return Err(GeometryError::WarpOutsideBase(i + 1));
            }
        }
        Ok(Self {
            dim: n1 + n2,
            kind: MetricKind::WarpedProduct { split: (n1, n2), warp },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &MetricKind {
        &self.kind
    }

    /// True when the coefficients do not depend on the point.
    pub fn is_constant(&self) -> bool {
        match &self.kind {
            MetricKind::Euclidean | MetricKind::Product { .. } => true,
            MetricKind::WarpedProduct { warp, .. } => warp.max_variable() == 0,
        }
    }

    pub fn eval<T: Real>(&self, p: &[T]) -> Result<Mat<T>, GeometryError> {
        if p.len() != self.dim {
            return Err(GeometryError::Dimension {
                expected: self.dim,
                got: p.len(),
            });
        }
        Ok(match &self.kind {
            MetricKind::Euclidean => Mat::identity(self.dim),
            MetricKind::Product { split, scales } => {
                let (a, b) = (scales.0 * scales.0, scales.1 * scales.1);
                Mat::from_fn(self.dim, self.dim, |i, j| {
                    if i != j {
                        T::zero()
                    } else if i < split.0 {
                        T::from_f64(a)
                    } else {
                        T::from_f64(b)
                    }
                })
            }
            MetricKind::WarpedProduct { split, warp } => {
                let f = warp.eval(p, &Params::new())?;
                if f.value() <= 0.0 {
                    return Err(GeometryError::NonPositiveWarp(f.value()));
                }
                let f2 = f * f;
                Mat::from_fn(self.dim, self.dim, |i, j| {
                    if i != j {
                        T::zero()
                    } else if i < split.0 {
                        T::one()
                    } else {
                        f2
                    }
                })
            }
        })
    }

    /// Metric and its inverse, failing when the condition estimate exceeds
    /// [`MAX_METRIC_CONDITION`].
    pub fn eval_with_inverse<T: Real>(&self, p: &[T]) -> Result<(Mat<T>, Mat<T>), GeometryError> {
        let g = self.eval(p)?;
        let inv = g.inverse().map_err(|_| GeometryError::MetricNotInvertible)?;
        let cond = row_sum_norm(&g) * row_sum_norm(&inv);
        if !(cond <= MAX_METRIC_CONDITION) {
            return Err(GeometryError::MetricNotInvertible);
        }
        Ok((g, inv))
    }
}

fn row_sum_norm<T: Real>(m: &Mat<T>) -> f64 {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m[(i, j)].value().abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Christoffel symbols of the second kind, `get(k, i, j) = Γ^k_{ij}`.
#[derive(Clone, Debug)]
pub struct Christoffel<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> Christoffel<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> T {
        self.data[(k * self.n + i) * self.n + j]
    }

    fn set(&mut self, k: usize, i: usize, j: usize, v: T) {
        self.data[(k * self.n + i) * self.n + j] = v;
    }

    /// `Σ_{ij} Γ^k_{ij} x^i y^j` for every k.
    pub fn contract(&self, x: &[T], y: &[T]) -> Vec<T> {
        let n = self.n;
        (0..n)
            .map(|k| {
                let mut acc = T::zero();
                for i in 0..n {
                    if x[i].is_zero() {
                        continue;
                    }
                    for j in 0..n {
                        acc = acc + self.get(k, i, j) * x[i] * y[j];
                    }
                }
                acc
            })
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.value().abs()).fold(0.0, f64::max)
    }
}

/// Levi-Civita Christoffel symbols from the Koszul formula, with metric
/// derivatives taken by forward-mode duals.
pub fn christoffel<T: Real>(g: &MetricField, p: &[T]) -> Result<Christoffel<T>, GeometryError> {
    let n = g.dim();
    if g.is_constant() {
        g.eval_with_inverse(p)?;
        return Ok(Christoffel::zeros(n));
    }
    let (_, ginv) = g.eval_with_inverse(p)?;
    // dg[l] = ∂_l g
    let mut dg = Vec::with_capacity(n);
    for l in 0..n {
        let dir: Vec<T> = (0..n).map(|i| if i == l { T::one() } else { T::zero() }).collect();
        let seeded = Dual::seed(p, &dir);
        let gd = g.eval(&seeded)?;
        dg.push(gd.map(|v| v.eps));
    }
    let half = T::from_f64(0.5);
    let mut out = Christoffel::zeros(n);
    for k in 0..n {
        for i in 0..n {
            for j in 0..=i {
                let mut acc = T::zero();
                for l in 0..n {
                    let gkl = ginv[(k, l)];
                    if gkl.is_zero() {
                        continue;
                    }
                    acc = acc + gkl * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                }
                let v = half * acc;
                out.set(k, i, j, v);
                out.set(k, j, i, v);
            }
        }
    }
    Ok(out)
}

/// A tangent vector field on a coordinate chart, evaluable over any scalar.
pub trait VectorField {
    fn dim(&self) -> usize;
    fn eval<T: Real>(&self, p: &[T]) -> Result<Vec<T>, GeometryError>;
}

/// Vector field given by one closed-form expression per component.
#[derive(Clone, Debug)]
pub struct ExprField {
    components: Vec<Expr>,
    params: Params,
}

impl ExprField {
    pub fn new(components: Vec<Expr>, params: Params) -> Self {
        Self { components, params }
    }

    /// Parses one component per entry of `texts` over `n` variables.
    pub fn parse(texts: &[&str]) -> Result<Self, GeometryError> {
        let n = texts.len();
        let components = texts
            .iter()
            .map(|t| crate::expr::parse(t, n))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::new(components, Params::new()))
    }
}

impl VectorField for ExprField {
    fn dim(&self) -> usize {
        self.components.len()
    }

    fn eval<T: Real>(&self, p: &[T]) -> Result<Vec<T>, GeometryError> {
        self.components
            .iter()
            .map(|c| c.eval(p, &self.params).map_err(GeometryError::from))
            .collect()
    }
}

/// Constant-coefficient field.
#[derive(Clone, Debug)]
pub struct ConstantField(pub Vec<f64>);

impl VectorField for ConstantField {
    fn dim(&self) -> usize {
        self.0.len()
    }

    fn eval<T: Real>(&self, _p: &[T]) -> Result<Vec<T>, GeometryError> {
        Ok(self.0.iter().map(|&v| T::from_f64(v)).collect())
    }
}

/// Value of `y` at `p` and its directional derivative along `v`.
pub fn directional<T: Real, Y: VectorField>(y: &Y, p: &[T], v: &[T]) -> Result<(Vec<T>, Vec<T>), GeometryError> {
    let out = y.eval(&Dual::seed(p, v))?;
    Ok((primal(&out), tangent(&out)))
}

/// `∇_X Y` at `p`.
pub fn covariant_derivative<T: Real, X: VectorField, Y: VectorField>(
    g: &MetricField,
    x: &X,
    y: &Y,
    p: &[T],
) -> Result<Vec<T>, GeometryError> {
    let xv = x.eval(p)?;
    covariant_derivative_along(g, &xv, y, p)
}

/// `∇_v Y` at `p` for a tangent vector `v`.
pub fn covariant_derivative_along<T: Real, Y: VectorField>(
    g: &MetricField,
    v: &[T],
    y: &Y,
    p: &[T],
) -> Result<Vec<T>, GeometryError> {
    let (yv, dy) = directional(y, p, v)?;
    let gamma = christoffel(g, p)?;
    let corr = gamma.contract(v, &yv);
    Ok(dy.iter().zip(corr).map(|(&a, b)| a + b).collect())
}

/// `[X, Y]` at `p`.
pub fn lie_bracket<T: Real, X: VectorField, Y: VectorField>(x: &X, y: &Y, p: &[T]) -> Result<Vec<T>, GeometryError> {
    let xv = x.eval(p)?;
    let yv = y.eval(p)?;
    let (_, dy) = directional(y, p, &xv)?;
    let (_, dx) = directional(x, p, &yv)?;
    Ok(dy.iter().zip(dx).map(|(&a, b)| a - b).collect())
}

/// Riemann tensor at a point, `R(∂_i, ∂_j)∂_k = Σ_l r(l, i, j, k) ∂_l` with
/// `R(X, Y) = ∇_X ∇_Y − ∇_Y ∇_X − ∇_[X,Y]`.
#[derive(Clone, Debug)]
pub struct Riemann {
    n: usize,
    data: Vec<f64>,
    metric: Mat<f64>,
}

impl Riemann {
    pub fn get(&self, l: usize, i: usize, j: usize, k: usize) -> f64 {
        self.data[((l * self.n + i) * self.n + j) * self.n + k]
    }

    pub fn metric(&self) -> &Mat<f64> {
        &self.metric
    }

    /// `R(X, Y)Z`.
    pub fn apply(&self, x: &[f64], y: &[f64], z: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|l| {
                let mut acc = 0.0;
                for i in 0..n {
                    if x[i] == 0.0 {
                        continue;
                    }
                    for j in 0..n {
                        if y[j] == 0.0 {
                            continue;
                        }
                        for k in 0..n {
                            acc += self.get(l, i, j, k) * x[i] * y[j] * z[k];
                        }
                    }
                }
                acc
            })
            .collect()
    }

    /// `g(R(X,Y)Z, W)`.
    pub fn covariant(&self, x: &[f64], y: &[f64], z: &[f64], w: &[f64]) -> f64 {
        inner(&self.metric, &self.apply(x, y, z), w)
    }

    pub fn sectional(&self, x: &[f64], y: &[f64]) -> Result<f64, GeometryError> {
        let xx = inner(&self.metric, x, x);
        let yy = inner(&self.metric, y, y);
        let xy = inner(&self.metric, x, y);
        let denom = xx * yy - xy * xy;
        if denom < 1e-12 * xx * yy || denom <= 0.0 {
            return Err(GeometryError::DegeneratePlane);
        }
        Ok(self.covariant(x, y, y, x) / denom)
    }
}

/// Riemann tensor from the metric's value, gradient and Hessian (one
/// [`Jet2`] evaluation).
pub fn riemann(g: &MetricField, p: &[f64]) -> Result<Riemann, GeometryError> {
    let n = g.dim();
    let (gv, ginv) = g.eval_with_inverse(p)?;
    if g.is_constant() {
        return Ok(Riemann {
            n,
            data: vec![0.0; n * n * n * n],
            metric: gv,
        });
    }
    let jets = g.eval(&Jet2::seed(p))?;
    let dg = |m: usize, i: usize, j: usize| jets[(i, j)].d(m);
    let ddg = |m: usize, q: usize, i: usize, j: usize| jets[(i, j)].dd(m, q);
    // ∂_m g^{kl} = −g^{ka} ∂_m g_{ab} g^{bl}
    let dginv = |m: usize, k: usize, l: usize| {
        let mut acc = 0.0;
        for a in 0..n {
            for b in 0..n {
                acc -= ginv[(k, a)] * dg(m, a, b) * ginv[(b, l)];
            }
        }
        acc
    };
    let idx3 = |k: usize, i: usize, j: usize| (k * n + i) * n + j;
    let mut gamma = vec![0.0; n * n * n];
    // dgamma[m][k][i][j] = ∂_m Γ^k_{ij}
    let mut dgamma = vec![0.0; n * n * n * n];
    let mut dginv_cache = vec![0.0; n * n * n];
    for m in 0..n {
        for k in 0..n {
            for l in 0..n {
                dginv_cache[idx3(m, k, l)] = dginv(m, k, l);
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for l in 0..n {
                    acc += ginv[(k, l)] * (dg(i, j, l) + dg(j, i, l) - dg(l, i, j));
                }
                gamma[idx3(k, i, j)] = 0.5 * acc;
                for m in 0..n {
                    let mut d = 0.0;
                    for l in 0..n {
                        let koszul = dg(i, j, l) + dg(j, i, l) - dg(l, i, j);
                        let dkoszul = ddg(m, i, j, l) + ddg(m, j, i, l) - ddg(m, l, i, j);
                        d += dginv_cache[idx3(m, k, l)] * koszul + ginv[(k, l)] * dkoszul;
                    }
                    dgamma[m * n * n * n + idx3(k, i, j)] = 0.5 * d;
                }
            }
        }
    }
    let mut data = vec![0.0; n * n * n * n];
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut v = dgamma[i * n * n * n + idx3(l, j, k)] - dgamma[j * n * n * n + idx3(l, i, k)];
                    for m in 0..n {
                        v += gamma[idx3(l, i, m)] * gamma[idx3(m, j, k)] - gamma[idx3(l, j, m)] * gamma[idx3(m, i, k)];
                    }
                    data[((l * n + i) * n + j) * n + k] = v;
                }
            }
        }
    }
    Ok(Riemann { n, data, metric: gv })
}

/// Sectional curvature of the plane spanned by `x` and `y` at `p`.
pub fn sectional_curvature(g: &MetricField, p: &[f64], x: &[f64], y: &[f64]) -> Result<f64, GeometryError> {
    riemann(g, p)?.sectional(x, y)
}

/// Constant almost complex structure on a coordinate chart.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexStructureField {
    matrix: Mat<f64>,
    kind: ComplexKind,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ComplexKind {
    Standard,
    Product(usize, usize),
}

impl ComplexStructureField {
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn kind(&self) -> &ComplexKind {
        &self.kind
    }

    pub fn matrix(&self) -> &Mat<f64> {
        &self.matrix
    }

    pub fn eval<T: Real>(&self, _p: &[T]) -> Mat<T> {
        Mat::lift_f64(&self.matrix)
    }

    pub fn apply<T: Real>(&self, v: &[T]) -> Vec<T> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut acc = T::zero();
                for j in 0..n {
                    let a = self.matrix[(i, j)];
                    if a != 0.0 {
                        acc = acc + v[j].scale(a);
                    }
                }
                acc
            })
            .collect()
    }

    /// `max |J^2 + I|`.
    pub fn square_residual(&self) -> f64 {
        let n = self.dim();
        self.matrix.mul(&self.matrix).add(&Mat::identity(n)).max_abs()
    }

    /// `|g(JX, JY) − g(X, Y)|` at `p`.
    pub fn compatibility_residual(
        &self,
        g: &MetricField,
        p: &[f64],
        x: &[f64],
        y: &[f64],
    ) -> Result<f64, GeometryError> {
        let gm = g.eval(p)?;
        let jx = self.apply(x);
        let jy = self.apply(y);
        Ok((inner(&gm, &jx, &jy) - inner(&gm, x, y)).abs())
    }
}

/// `J∂_{2i−1} = ∂_{2i}`, `J∂_{2i} = −∂_{2i−1}`.
pub fn standard_j(n: usize) -> Result<ComplexStructureField, GeometryError> {
    if !n.is_multiple_of(2) || n == 0 {
        return Err(GeometryError::OddDimension(n));
    }
    let mut m = Mat::zeros(n, n);
    for k in 0..n / 2 {
        m[(2 * k + 1, 2 * k)] = 1.0;
        m[(2 * k, 2 * k + 1)] = -1.0;
    }
    Ok(ComplexStructureField {
        matrix: m,
        kind: ComplexKind::Standard,
    })
}

/// Block-diagonal structure acting factor-wise.
pub fn product_j(
    j1: &ComplexStructureField,
    j2: &ComplexStructureField,
) -> Result<ComplexStructureField, GeometryError> {
    let (n1, n2) = (j1.dim(), j2.dim());
    if n1 % 2 != 0 {
        return Err(GeometryError::OddDimension(n1));
    }
    if n2 % 2 != 0 {
        return Err(GeometryError::OddDimension(n2));
    }
    let n = n1 + n2;
    let m = Mat::from_fn(n, n, |i, j| {
        if i < n1 && j < n1 {
            j1.matrix[(i, j)]
        } else if i >= n1 && j >= n1 {
            j2.matrix[(i - n1, j - n1)]
        } else {
            0.0
        }
    });
    Ok(ComplexStructureField {
        matrix: m,
        kind: ComplexKind::Product(n1, n2),
    })
}

/// Product structure whose dimensions must match a metric split.
pub fn product_j_for(
    metric: &MetricField,
    j1: &ComplexStructureField,
    j2: &ComplexStructureField,
) -> Result<ComplexStructureField, GeometryError> {
    let split = match metric.kind() {
        MetricKind::Product { split, .. } | MetricKind::WarpedProduct { split, .. } => *split,
        MetricKind::Euclidean => (j1.dim(), j2.dim()),
    };
    if split != (j1.dim(), j2.dim()) {
        return Err(GeometryError::Dimension {
            expected: split.0,
            got: j1.dim(),
        });
    }
    product_j(j1, j2)
}

/// `max |(∇_{∂_a} J)∂_b|` at `p`, zero exactly when J is parallel there.
/// J is constant in coordinates, so `(∇_E J)F = Γ(E, JF) − JΓ(E, F)`.
pub fn kahler_residual(g: &MetricField, j: &ComplexStructureField, p: &[f64]) -> Result<f64, GeometryError> {
    let n = g.dim();
    let gamma = christoffel(g, p)?;
    let mut worst: f64 = 0.0;
    for a in 0..n {
        let e: Vec<f64> = (0..n).map(|i| if i == a { 1.0 } else { 0.0 }).collect();
        for b in 0..n {
            let f: Vec<f64> = (0..n).map(|i| if i == b { 1.0 } else { 0.0 }).collect();
            let lhs = gamma.contract(&e, &j.apply(&f));
            let rhs = j.apply(&gamma.contract(&e, &f));
            for (l, r) in lhs.iter().zip(&rhs) {
                worst = worst.max((l - r).abs());
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn warped_1_1_exp() -> MetricField {
        MetricField::warped(1, 1, parse("exp(x1)", 2).unwrap()).unwrap()
    }

    #[test]
    fn flat_christoffel_vanish() {
        let g = MetricField::euclidean(4);
        let gamma = christoffel(&g, &[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(gamma.max_abs(), 0.0);
    }

    #[test]
    fn constant_warp_is_flat() {
        let g = MetricField::warped(1, 1, parse("2", 2).unwrap()).unwrap();
        assert_eq!(christoffel(&g, &[0.3, -0.2]).unwrap().max_abs(), 0.0);
        let r = riemann(&g, &[0.3, -0.2]).unwrap();
        assert_eq!(r.sectional(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn warped_christoffel_closed_form() {
        // g = dx^2 + e^{2x} dy^2: Γ^x_yy = −e^{2x}, Γ^y_xy = 1
        let g = warped_1_1_exp();
        let x: f64 = 0.3;
        let gamma = christoffel(&g, &[x, 0.7]).unwrap();
        assert!((gamma.get(0, 1, 1) + (2.0 * x).exp()).abs() < 1e-13);
        assert!((gamma.get(1, 0, 1) - 1.0).abs() < 1e-14);
        assert!((gamma.get(1, 1, 0) - 1.0).abs() < 1e-14);
        assert_eq!(gamma.get(0, 0, 0), 0.0);
    }

    #[test]
    fn warp_must_stay_on_base() {
        let err = MetricField::warped(1, 1, parse("exp(x2)", 2).unwrap()).unwrap_err();
        assert_eq!(err, GeometryError::WarpOutsideBase(2));
    }

    #[test]
    fn non_positive_warp_rejected() {
        let g = MetricField::warped(1, 1, parse("x1", 2).unwrap()).unwrap();
        assert!(matches!(g.eval(&[-1.0, 0.0]), Err(GeometryError::NonPositiveWarp(_))));
    }

    #[test]
    fn ill_conditioned_metric_rejected() {
        let g = MetricField::warped(1, 1, parse("exp(20*x1)", 2).unwrap()).unwrap();
        assert_eq!(
            christoffel(&g, &[1.0, 0.0]).unwrap_err(),
            GeometryError::MetricNotInvertible
        );
    }

    #[test]
    fn flat_directional_derivative() {
        let g = MetricField::euclidean(3);
        let y = ExprField::parse(&["x1^2", "0", "0"]).unwrap();
        let x = ConstantField(vec![1.0, 0.0, 0.0]);
        let v = covariant_derivative(&g, &x, &y, &[1.5, 0.0, 2.0]).unwrap();
        assert_eq!(v, vec![3.0, 0.0, 0.0]);
    }

    #[test]
    fn bracket_examples() {
        let d1 = ConstantField(vec![1.0, 0.0]);
        let d2 = ConstantField(vec![0.0, 1.0]);
        assert_eq!(lie_bracket(&d1, &d2, &[0.4, 0.9]).unwrap(), vec![0.0, 0.0]);
        let x = ExprField::parse(&["x2", "0"]).unwrap();
        assert_eq!(lie_bracket(&x, &d2, &[0.4, 0.9]).unwrap(), vec![-1.0, 0.0]);
    }

    #[test]
    fn warped_curvature_is_minus_one() {
        let g = warped_1_1_exp();
        for &x in &[-0.5, 0.0, 0.25, 0.5] {
            let k = sectional_curvature(&g, &[x, 0.3], &[1.0, 0.0], &[0.0, 1.0]).unwrap();
            assert!((k + 1.0).abs() < 1e-12, "K = {k}");
        }
    }

    #[test]
    fn sectional_is_symmetric() {
        let g = MetricField::warped(2, 2, parse("1 + x1^2 + 0.5*x2", 4).unwrap()).unwrap();
        let r = riemann(&g, &[0.2, 0.1, 0.0, 0.0]).unwrap();
        let x = [0.3, -0.4, 1.0, 0.2];
        let y = [0.1, 0.9, -0.3, 0.5];
        assert!((r.sectional(&x, &y).unwrap() - r.sectional(&y, &x).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn degenerate_plane_rejected() {
        let g = MetricField::euclidean(2);
        assert_eq!(
            sectional_curvature(&g, &[0.0, 0.0], &[1.0, 1.0], &[2.0, 2.0]).unwrap_err(),
            GeometryError::DegeneratePlane
        );
    }

    #[test]
    fn standard_structure() {
        let j = standard_j(2).unwrap();
        assert_eq!(j.apply(&[1.0, 0.0]), vec![0.0, 1.0]);
        assert_eq!(j.square_residual(), 0.0);
        assert!(matches!(standard_j(3), Err(GeometryError::OddDimension(3))));
        let j8 = standard_j(8).unwrap();
        let mut v = vec![0.0; 8];
        v[4] = 1.0;
        v[7] = 1.0;
        assert_eq!(j8.apply(&v), vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0, -1.0, 0.0]);
    }

    #[test]
    fn product_of_standard_is_standard() {
        let j = product_j(&standard_j(4).unwrap(), &standard_j(2).unwrap()).unwrap();
        assert_eq!(j.matrix(), standard_j(6).unwrap().matrix());
        assert_eq!(j.square_residual(), 0.0);
    }

    #[test]
    fn kahler_gate() {
        let j = standard_j(4).unwrap();
        let flat = MetricField::euclidean(4);
        assert_eq!(kahler_residual(&flat, &j, &[0.0; 4]).unwrap(), 0.0);
        let warped = MetricField::warped(2, 2, parse("exp(x1)", 4).unwrap()).unwrap();
        assert!(kahler_residual(&warped, &j, &[0.1, 0.0, 0.0, 0.0]).unwrap() > 0.1);
    }
}
