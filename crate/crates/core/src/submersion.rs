//! Pointwise structure of a submersion: differential, vertical and
//! horizontal frames, the operators φ, ω, B, C, the split of the vertical
//! space into its complex and slant parts, and the resulting class.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen, SVD};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{eval_jet2, Expr, Params};
use crate::geometry::{ComplexStructureField, MetricField};
use crate::jet::Jet2;
use crate::linalg::{from_nalgebra, to_nalgebra, Mat};
use crate::real::{Dual, Real};

/// Relative singular-value cutoff for the Jacobian rank.
pub const TAU_RANK: f64 = 1e-9;
/// Eigenvalue tolerance for detecting the complex part and angle clusters.
pub const TAU_CLUSTER: f64 = 1e-7;
/// Eigenvalues this close to a class threshold mark the point as a boundary.
pub const BOUNDARY_BAND: f64 = 1e-4;

#[derive(Clone, Debug)]
pub struct SubmersionMap {
    components: Vec<Expr>,
    source_dim: usize,
    metric: MetricField,
    j: ComplexStructureField,
    uses: Vec<Vec<bool>>,
}

impl SubmersionMap {
    /// Components must have their parameters already bound.
    pub fn new(components: Vec<Expr>, metric: MetricField, j: ComplexStructureField) -> Result<Self> {
        let m = metric.dim();
        if j.dim() != m {
            return Err(Error::Invalid(format!(
                "complex structure has dimension {}, metric has {m}",
                j.dim()
            )));
        }
        if components.is_empty() || components.len() >= m {
            return Err(Error::Invalid(format!(
                "target dimension {} must be between 1 and {}",
                components.len(),
                m - 1
            )));
        }
        for (i, c) in components.iter().enumerate() {
            if c.max_variable() > m {
                return Err(Error::Invalid(format!(
                    "component {} reads x{}",
                    i + 1,
                    c.max_variable()
                )));
            }
            if let Some(name) = c.params().first() {
                return Err(crate::expr::ExprError::UnboundParameter { name: name.clone() }.into());
            }
        }
        let uses = components
            .iter()
            .map(|c| (0..m).map(|v| c.uses_variable(v)).collect())
            .collect();
        Ok(Self {
            components,
            source_dim: m,
            metric,
            j,
            uses,
        })
    }

    pub fn source_dim(&self) -> usize {
        self.source_dim
    }

    pub fn target_dim(&self) -> usize {
        self.components.len()
    }

    pub fn fiber_dim(&self) -> usize {
        self.source_dim - self.components.len()
    }

    pub fn metric(&self) -> &MetricField {
        &self.metric
    }

    pub fn complex_structure(&self) -> &ComplexStructureField {
        &self.j
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn eval<T: Real>(&self, p: &[T]) -> Result<Vec<T>> {
        let none = Params::new();
        self.components
            .iter()
            .map(|c| c.eval(p, &none).map_err(Error::from))
            .collect()
    }

    /// `dF` at `p` over any scalar, one forward-mode sweep per source
    /// direction.
    pub fn jacobian<T: Real>(&self, p: &[T]) -> Result<Mat<T>> {
        let (n, m) = (self.target_dim(), self.source_dim);
        let none = Params::new();
        let mut d = Mat::zeros(n, m);
        let mut dir = vec![T::zero(); m];
        for col in 0..m {
            if !(0..n).any(|i| self.uses[i][col]) {
                continue;
            }
            dir[col] = T::one();
            let q = Dual::seed(p, &dir);
            for i in 0..n {
                if self.uses[i][col] {
                    d[(i, col)] = self.components[i].eval(&q, &none)?.eps;
                }
            }
            dir[col] = T::zero();
        }
        Ok(d)
    }

    /// Component jets at `p`: values, gradients and Hessians.
    pub fn jets(&self, p: &[f64]) -> Result<Vec<Jet2>> {
        let none = Params::new();
        self.components
            .iter()
            .map(|c| eval_jet2(c, p, &none).map_err(Error::from))
            .collect()
    }

    /// `dF` at `p`, row i being the gradient of component i.
    pub fn differential(&self, p: &[f64]) -> Result<Mat<f64>> {
        let jets = self.jets(p)?;
        Ok(Mat::from_fn(self.target_dim(), self.source_dim, |i, j| jets[i].d(j)))
    }
}

/// Tangent vectors at a point, stored as the columns of a matrix.
#[derive(Clone, Debug)]
pub struct Frame {
    pub point: Vec<f64>,
    pub vectors: Mat<f64>,
    pub orthonormal: bool,
}

impl Frame {
    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.vectors.column(i)
    }

    pub fn vectors(&self) -> Vec<Vec<f64>> {
        (0..self.dim()).map(|i| self.vector(i)).collect()
    }

    /// `max |E^T g E − I|`.
    pub fn gram_residual(&self, g: &Mat<f64>) -> f64 {
        let e = &self.vectors;
        e.transpose().mul(g).mul(e).sub(&Mat::identity(self.dim())).max_abs()
    }

    /// g-orthogonal projector onto the span, `E E^T g`. Requires an
    /// orthonormal frame.
    pub fn projector(&self, g: &Mat<f64>) -> Mat<f64> {
        let e = &self.vectors;
        e.mul(&e.transpose()).mul(g)
    }

    /// Linear combination `Σ c_i E_i`.
    pub fn combine(&self, coeffs: &[f64]) -> Vec<f64> {
        self.vectors.mul_vec(coeffs)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Invariant,
    AntiInvariant,
    Slant,
    SemiInvariant,
    SemiSlant,
    Generic,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Invariant => "invariant",
            Verdict::AntiInvariant => "anti-invariant",
            Verdict::Slant => "slant",
            Verdict::SemiInvariant => "semi-invariant",
            Verdict::SemiSlant => "semi-slant",
            Verdict::Generic => "generic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.as_str() == s)
    }

    pub const ALL: [Verdict; 6] = [
        Verdict::Invariant,
        Verdict::AntiInvariant,
        Verdict::Slant,
        Verdict::SemiInvariant,
        Verdict::SemiSlant,
        Verdict::Generic,
    ];

    /// Every class except `generic` has a single angle on the slant part.
    pub fn has_angle(self) -> bool {
        self != Verdict::Generic
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Everything the classifier learns at one point. Frames are g-orthonormal
/// coordinate vectors; φ, ω, B, C are written in the vertical and
/// horizontal frames.
#[derive(Clone, Debug)]
pub struct SemiSlantAnalysis {
    pub point: Vec<f64>,
    pub metric: Mat<f64>,
    pub differential: Mat<f64>,
    pub singular_values: Vec<f64>,
    pub vertical: Frame,
    pub horizontal: Frame,
    pub d1: Frame,
    pub d2: Frame,
    pub omega_d2: Frame,
    pub mu: Frame,
    pub phi: Mat<f64>,
    pub omega: Mat<f64>,
    pub b: Mat<f64>,
    pub c: Mat<f64>,
    /// D1 and D2 bases in vertical-frame coordinates.
    pub d1_local: Mat<f64>,
    pub d2_local: Mat<f64>,
    /// Eigenvalues of −φ², ascending.
    pub spectrum: Vec<f64>,
    /// Means of the angle clusters on D2, as cos²θ.
    pub clusters: Vec<f64>,
    pub verdict: Verdict,
    /// Radians; 0 when D2 is empty, `None` for generic points.
    pub theta: Option<f64>,
    pub boundary: bool,
    pub submersion_residual: f64,
    /// Spectral cut between the eigenvalue 1 and the rest of −φ² and −C².
    pub d1_cut: f64,
    pub mu_cut: f64,
}

impl SemiSlantAnalysis {
    pub fn dims(&self) -> (usize, usize) {
        (self.d1.dim(), self.d2.dim())
    }

    /// φ²+Bω+id, C²+ωB+id, ωφ+Cω, BC+φB in operator norm.
    pub fn algebraic_residuals(&self) -> [f64; 4] {
        let (k, n) = (self.phi.rows(), self.c.rows());
        let (phi, om, b, c) = (&self.phi, &self.omega, &self.b, &self.c);
        [
            op_norm(&phi.mul(phi).add(&b.mul(om)).add(&Mat::identity(k))),
            op_norm(&c.mul(c).add(&om.mul(b)).add(&Mat::identity(n))),
            op_norm(&om.mul(phi).add(&c.mul(om))),
            op_norm(&b.mul(c).add(&phi.mul(b))),
        ]
    }

    /// Residuals of φD1 = D1, ωD1 = 0, φD2 ⊂ D2, B(H) ⊂ D2, B(H) ⊇ D2
    /// (singular values of B onto D2 all equal sin θ) and Jμ = μ.
    pub fn subspace_residuals(&self) -> [f64; 6] {
        let k = self.phi.rows();
        let p = self.d1_local.mul(&self.d1_local.transpose());
        let q = Mat::identity(k).sub(&p);
        let phi_d1 = op_norm(&q.mul(&self.phi).mul(&p));
        let omega_d1 = op_norm(&self.omega.mul(&p));
        let phi_d2 = op_norm(&p.mul(&self.phi).mul(&q));
        let b_in_d2 = op_norm(&p.mul(&self.b));
        let b_onto = match self.theta {
            Some(theta) if self.d2.dim() > 0 => {
                let qb = self.d2_local.transpose().mul(&self.b);
                let sv = SVD::new(to_nalgebra(&qb), false, false).singular_values;
                let s = theta.sin();
                sv.iter().map(|v| (v - s).abs()).fold(0.0, f64::max)
            }
            _ => 0.0,
        };
        [phi_d1, omega_d1, phi_d2, b_in_d2, b_onto, self.mu_invariance()]
    }

    fn mu_invariance(&self) -> f64 {
        if self.mu.dim() == 0 {
            return 0.0;
        }
        // μ in horizontal-frame coordinates, then |(I − Π_μ) C Π_μ|
        let hg = self.horizontal.vectors.transpose().mul(&self.metric);
        let mu_loc = hg.mul(&self.mu.vectors);
        let pi = mu_loc.mul(&mu_loc.transpose());
        let n = pi.rows();
        op_norm(&Mat::identity(n).sub(&pi).mul(&self.c).mul(&pi))
    }

    /// `|−φ²|_{D2} − cos²θ id|` with cos²θ the cluster mean, or the spread
    /// of the spectrum when there are several clusters.
    pub fn slant_residual(&self) -> f64 {
        let d2 = &self.spectrum[..self.d2.dim()];
        if d2.is_empty() {
            return 0.0;
        }
        let mean = d2.iter().sum::<f64>() / d2.len() as f64;
        d2.iter().map(|l| (l - mean).abs()).fold(0.0, f64::max)
    }

    /// `cos θ(X) = |φX| / |JX|` for `X = Σ c_i d2_i`.
    pub fn direct_cos_angle(&self, coeffs: &[f64]) -> f64 {
        let x = self.d2_local.mul_vec(coeffs);
        let fx = self.phi.mul_vec(&x);
        norm2(&fx) / norm2(&x)
    }

    /// `|Ĵ² + id|` on the vertical space with `Ĵ = JP + φQ / cos θ`;
    /// `None` when θ = π/2 or the angle is undefined.
    pub fn jhat_residual(&self) -> Option<f64> {
        let theta = self.theta?;
        let cos = theta.cos();
        if self.d2.dim() > 0 && cos < TAU_CLUSTER.sqrt() {
            return None;
        }
        let k = self.phi.rows();
        let p = self.d1_local.mul(&self.d1_local.transpose());
        let q = Mat::identity(k).sub(&p);
        let jhat = self.phi.mul(&p).add(&self.phi.mul(&q).scale(1.0 / cos));
        Some(op_norm(&jhat.mul(&jhat).add(&Mat::identity(k))))
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Spectral norm.
pub fn op_norm(m: &Mat<f64>) -> f64 {
    if m.rows() == 0 || m.cols() == 0 {
        return 0.0;
    }
    SVD::new(to_nalgebra(m), false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Orthonormal basis of `ker dF` under `g(p)`.
pub fn vertical_space(map: &SubmersionMap, p: &[f64]) -> Result<Frame> {
    Ok(Splitting::new(map, p)?.vertical)
}

/// `max |g_N(F_* Z_a, F_* Z_b) − δ_ab|` over an orthonormal horizontal frame.
pub fn riemannian_submersion_residual(map: &SubmersionMap, p: &[f64]) -> Result<f64> {
    Ok(Splitting::new(map, p)?.submersion_residual)
}

/// `(φ, ω)` in the vertical/horizontal frames.
pub fn phi_omega(map: &SubmersionMap, p: &[f64]) -> Result<(Mat<f64>, Mat<f64>)> {
    let s = Splitting::new(map, p)?;
    Ok((s.block(&s.v_o, &s.v_o), s.block(&s.h_o, &s.v_o)))
}

/// `(B, C)` in the vertical/horizontal frames.
pub fn b_c(map: &SubmersionMap, p: &[f64]) -> Result<(Mat<f64>, Mat<f64>)> {
    let s = Splitting::new(map, p)?;
    Ok((s.block(&s.v_o, &s.h_o), s.block(&s.h_o, &s.h_o)))
}

/// Orthonormal-coordinate view of the tangent space at p: with g = L L^T,
/// coordinate vectors are `L^{-T} u`.
struct Splitting {
    g: Mat<f64>,
    l_inv_t: DMatrix<f64>,
    j_o: DMatrix<f64>,
    v_o: DMatrix<f64>,
    h_o: DMatrix<f64>,
    d: Mat<f64>,
    singular_values: Vec<f64>,
    vertical: Frame,
    horizontal: Frame,
    submersion_residual: f64,
}

impl Splitting {
    fn new(map: &SubmersionMap, p: &[f64]) -> Result<Self> {
        let (m, n) = (map.source_dim(), map.target_dim());
        let g = map.metric().eval_with_inverse(p)?.0;
        let chol =
            nalgebra::Cholesky::new(to_nalgebra(&g)).ok_or(crate::geometry::GeometryError::MetricNotInvertible)?;
        let l = chol.l();
        let l_inv_t = l
            .clone()
            .try_inverse()
            .ok_or(crate::geometry::GeometryError::MetricNotInvertible)?
            .transpose();
        let j = to_nalgebra(map.complex_structure().matrix());
        let j_o = l.transpose() * &j * &l_inv_t;
        let compat = (j_o.transpose() * &j_o - DMatrix::identity(m, m)).amax();
        if compat > 1e-10 {
            return Err(Error::Invalid(format!(
                "J is not orthogonal for g at this point (residual {compat:.2e})"
            )));
        }
        let d = map.differential(p)?;
        let d_o = to_nalgebra(&d) * &l_inv_t;
        let mut padded = DMatrix::zeros(m, m);
        padded.view_mut((0, 0), (n, m)).copy_from(&d_o);
        let svd = SVD::new(padded, false, true);
        let v_t = svd
            .v_t
            .ok_or_else(|| Error::Inconsistent("SVD without right vectors".into()))?;
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
        let smax = sv[0];
        let rank = sv.iter().filter(|&&s| s > TAU_RANK * smax && smax > 0.0).count();
        if rank < n {
            return Err(Error::NotSubmersion { rank, expected: n });
        }
        let pick = |idx: &[usize]| DMatrix::from_fn(m, idx.len(), |r, c| v_t[(idx[c], r)]);
        let h_o = pick(&order[..n]);
        let v_o = pick(&order[n..]);
        let frame = |o: &DMatrix<f64>| Frame {
            point: p.to_vec(),
            vectors: from_nalgebra(&(&l_inv_t * o)),
            orthonormal: true,
        };
        let pushed = &d_o * &h_o;
        let submersion_residual = (pushed.transpose() * &pushed - DMatrix::identity(n, n)).amax();
        Ok(Self {
            vertical: frame(&v_o),
            horizontal: frame(&h_o),
            g,
            l_inv_t,
            j_o,
            v_o,
            h_o,
            d,
            singular_values: sv[..n].to_vec(),
            submersion_residual,
        })
    }

    /// `rowsᵀ J_o cols`.
    fn block(&self, rows: &DMatrix<f64>, cols: &DMatrix<f64>) -> Mat<f64> {
        from_nalgebra(&(rows.transpose() * &self.j_o * cols))
    }

    fn frame_from_local(&self, basis: &DMatrix<f64>, local: &DMatrix<f64>) -> Frame {
        Frame {
            point: self.vertical.point.clone(),
            vectors: from_nalgebra(&(&self.l_inv_t * basis * local)),
            orthonormal: true,
        }
    }
}

/// Eigen-split of `−X²` for a skew matrix X: eigenvectors with eigenvalue
/// 1 (within τ) and the rest, both ascending, plus the full spectrum.
fn unit_split(x: &Mat<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>, Vec<f64>)> {
    let k = x.rows();
    if k == 0 {
        return Ok((DMatrix::zeros(0, 0), DMatrix::zeros(0, 0), vec![]));
    }
    let s = x.mul(x).scale(-1.0);
    let s = s.add(&s.transpose()).scale(0.5);
    let eig = SymmetricEigen::new(to_nalgebra(&s));
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let spectrum: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    if let Some(bad) = spectrum
        .iter()
        .find(|&&l| !(-TAU_CLUSTER..=1.0 + TAU_CLUSTER).contains(&l))
    {
        return Err(Error::Inconsistent(format!("eigenvalue {bad} of −φ² outside [0, 1]")));
    }
    let ones: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| (eig.eigenvalues[i] - 1.0).abs() < TAU_CLUSTER)
        .collect();
    let rest: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| (eig.eigenvalues[i] - 1.0).abs() >= TAU_CLUSTER)
        .collect();
    let cols = |idx: &[usize]| DMatrix::from_fn(k, idx.len(), |r, c| eig.eigenvectors[(r, idx[c])]);
    Ok((cols(&ones), cols(&rest), spectrum))
}

fn cut_between(spectrum: &[f64]) -> f64 {
    spectrum
        .iter()
        .cloned()
        .filter(|&l| l < 1.0 - TAU_CLUSTER)
        .fold(None, |m: Option<f64>, l| Some(m.map_or(l, |m| m.max(l))))
        .map_or(0.5, |top| 0.5 * (1.0 + top.max(0.0)))
}

/// Classifies the vertical space at `p`.
pub fn split_d1_d2(map: &SubmersionMap, p: &[f64]) -> Result<SemiSlantAnalysis> {
    let s = Splitting::new(map, p)?;
    let phi = s.block(&s.v_o, &s.v_o);
    let omega = s.block(&s.h_o, &s.v_o);
    let b = s.block(&s.v_o, &s.h_o);
    let c = s.block(&s.h_o, &s.h_o);

    let (d1_loc, d2_loc, spectrum_all) = unit_split(&phi)?;
    let (mu_loc, wd2_loc, c_spectrum) = unit_split(&c)?;
    let d2_spec: Vec<f64> = spectrum_all
        .iter()
        .cloned()
        .filter(|&l| (l - 1.0).abs() >= TAU_CLUSTER)
        .collect();
    let mut clusters: Vec<Vec<f64>> = Vec::new();
    for &l in &d2_spec {
        match clusters.last_mut() {
            Some(cl) if l - cl.last().unwrap() < TAU_CLUSTER => cl.push(l),
            _ => clusters.push(vec![l]),
        }
    }
    let means: Vec<f64> = clusters
        .iter()
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();
    let has_d1 = d1_loc.ncols() > 0;
    let (verdict, theta) = match means.as_slice() {
        [] => (Verdict::Invariant, Some(0.0)),
        [mean] => {
            let right = *mean < TAU_CLUSTER;
            let theta = if right {
                std::f64::consts::FRAC_PI_2
            } else {
                mean.min(1.0).sqrt().acos()
            };
            let v = match (has_d1, right) {
                (false, true) => Verdict::AntiInvariant,
                (false, false) => Verdict::Slant,
                (true, true) => Verdict::SemiInvariant,
                (true, false) => Verdict::SemiSlant,
            };
            (v, Some(theta))
        }
        _ => (Verdict::Generic, None),
    };
    let near = |l: f64| {
        let a = (l - 1.0).abs();
        (TAU_CLUSTER..BOUNDARY_BAND).contains(&a) || (TAU_CLUSTER..BOUNDARY_BAND).contains(&l)
    };
    let boundary = spectrum_all.iter().cloned().any(near);

    let to_mat = |m: &DMatrix<f64>| from_nalgebra(m);
    // D2 as the eigenvectors of −φ² in ascending order, D1 after them
    let d1 = s.frame_from_local(&s.v_o, &d1_loc);
    let d2 = s.frame_from_local(&s.v_o, &d2_loc);
    let mu = s.frame_from_local(&s.h_o, &mu_loc);
    let omega_d2 = s.frame_from_local(&s.h_o, &wd2_loc);
    Ok(SemiSlantAnalysis {
        point: p.to_vec(),
        metric: s.g.clone(),
        differential: s.d.clone(),
        singular_values: s.singular_values.clone(),
        vertical: s.vertical.clone(),
        horizontal: s.horizontal.clone(),
        d1,
        d2,
        omega_d2,
        mu,
        phi,
        omega,
        b,
        c,
        d1_local: to_mat(&d1_loc),
        d2_local: to_mat(&d2_loc),
        spectrum: spectrum_all.clone(),
        clusters: means,
        verdict,
        theta,
        boundary,
        submersion_residual: s.submersion_residual,
        d1_cut: cut_between(&spectrum_all),
        mu_cut: cut_between(&c_spectrum),
    })
}

/// Angle statistics over many points and random directions in D2.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleConstancy {
    pub theta: f64,
    /// Largest deviation of any spectral or direct angle from `theta`.
    pub deviation: f64,
    /// Largest gap between the spectral and the direct angle at one point.
    pub spectral_vs_direct: f64,
}

/// Aggregates θ across analyses and `draws` random unit directions of D2
/// per point.
pub fn slant_angle_constancy<R: Rng>(
    analyses: &[SemiSlantAnalysis],
    draws: usize,
    rng: &mut R,
) -> Result<AngleConstancy> {
    let first = analyses
        .first()
        .ok_or_else(|| Error::Invalid("no sample points".into()))?;
    if let Some(a) = analyses.iter().find(|a| a.verdict != first.verdict) {
        return Err(Error::Invalid(format!(
            "not globally semi-slant: verdict {} at one point and {} at another",
            first.verdict, a.verdict
        )));
    }
    let thetas: Vec<f64> = analyses
        .iter()
        .map(|a| a.theta)
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::Invalid("not globally semi-slant: several angles".into()))?;
    let theta = thetas.iter().sum::<f64>() / thetas.len() as f64;
    let mut deviation = thetas.iter().map(|t| (t - theta).abs()).fold(0.0, f64::max);
    let mut spectral_vs_direct: f64 = 0.0;
    for (a, &t) in analyses.iter().zip(&thetas) {
        let l = a.d2.dim();
        if l == 0 {
            continue;
        }
        for _ in 0..draws {
            let c: Vec<f64> = (0..l).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if c.iter().all(|&x| x == 0.0) {
                continue;
            }
            let direct = a.direct_cos_angle(&c).min(1.0).acos();
            spectral_vs_direct = spectral_vs_direct.max((direct - t).abs());
            deviation = deviation.max((direct - theta).abs());
        }
    }
    Ok(AngleConstancy {
        theta,
        deviation,
        spectral_vs_direct,
    })
}

/// The even-dimension theorem at one point. `None` when its hypothesis
/// (a single angle below π/2) fails; otherwise whether both the target
/// and the fiber dimension are even.
pub fn even_dimension_check(map: &SubmersionMap, analysis: &SemiSlantAnalysis) -> Option<bool> {
    let theta = analysis.theta?;
    if analysis.d2.dim() > 0 && theta.cos() < TAU_CLUSTER.sqrt() {
        return None;
    }
    Some(map.target_dim().is_multiple_of(2) && map.fiber_dim().is_multiple_of(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, parse_with_params};
    use crate::geometry::standard_j;

    fn linear(texts: &[&str], m: usize) -> SubmersionMap {
        let comps = texts.iter().map(|t| parse(t, m).unwrap()).collect();
        SubmersionMap::new(comps, MetricField::euclidean(m), standard_j(m).unwrap()).unwrap()
    }

    fn example5(alpha: f64) -> SubmersionMap {
        let mut params = Params::new();
        params.insert("a".into(), alpha);
        let c1 = parse_with_params("x3*sin(a) - x5*cos(a)", 6, &["a"]).unwrap();
        let comps = vec![c1.bind(&params).unwrap(), parse("x6", 6).unwrap()];
        SubmersionMap::new(comps, MetricField::euclidean(6), standard_j(6).unwrap()).unwrap()
    }

    #[test]
    fn differential_example6() {
        let f = linear(&["(x5-x8)/sqrt(2)", "x6"], 8);
        let d = f.differential(&[0.3; 8]).unwrap();
        let r = 1.0 / 2f64.sqrt();
        assert!((d[(0, 4)] - r).abs() < 1e-15 && (d[(0, 7)] + r).abs() < 1e-15);
        assert_eq!(d[(1, 5)], 1.0);
        assert_eq!(f.jacobian(&[0.3; 8]).unwrap(), d);
    }

    #[test]
    fn vertical_of_projection() {
        let f = linear(&["x1", "x2"], 4);
        let v = vertical_space(&f, &[0.0; 4]).unwrap();
        assert_eq!(v.dim(), 2);
        for e in v.vectors() {
            assert!(e[0].abs() < 1e-15 && e[1].abs() < 1e-15);
        }
        let a = split_d1_d2(&f, &[0.0; 4]).unwrap();
        assert_eq!(a.verdict, Verdict::Invariant);
        assert_eq!(a.dims(), (2, 0));
    }

    #[test]
    fn scaled_map_is_not_riemannian() {
        let f = linear(&["2*x1"], 2);
        let r = riemannian_submersion_residual(&f, &[0.0, 0.0]).unwrap();
        assert!((r - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rank_deficiency_detected() {
        let f = linear(&["x1", "2*x1"], 4);
        assert!(matches!(
            split_d1_d2(&f, &[0.0; 4]),
            Err(Error::NotSubmersion { rank: 1, expected: 2 })
        ));
    }

    #[test]
    fn example5_angle_is_alpha() {
        let a = split_d1_d2(&example5(1.0), &[0.1; 6]).unwrap();
        assert_eq!(a.verdict, Verdict::SemiSlant);
        assert_eq!(a.dims(), (2, 2));
        assert!((a.theta.unwrap() - 1.0).abs() < 1e-12);
        assert!(a.algebraic_residuals().iter().all(|&r| r < 1e-12));
        assert!(a.jhat_residual().unwrap() < 1e-12);
    }

    #[test]
    fn example6_b_and_c_of_d6() {
        let f = linear(&["(x5-x8)/sqrt(2)", "x6"], 8);
        let a = split_d1_d2(&f, &[0.0; 8]).unwrap();
        // Z = ∂6 in horizontal-frame coordinates, then back to coordinates
        let hg = a.horizontal.vectors.transpose().mul(&a.metric);
        let mut z = vec![0.0; 8];
        z[5] = 1.0;
        let zl = hg.mul_vec(&z);
        let bz = a.vertical.vectors.mul_vec(&a.b.mul_vec(&zl));
        let cz = a.horizontal.vectors.mul_vec(&a.c.mul_vec(&zl));
        let want_b = [0.0, 0.0, 0.0, 0.0, -0.5, 0.0, 0.0, -0.5];
        let want_c = [0.0, 0.0, 0.0, 0.0, -0.5, 0.0, 0.0, 0.5];
        for i in 0..8 {
            assert!((bz[i] - want_b[i]).abs() < 1e-12, "{bz:?}");
            assert!((cz[i] - want_c[i]).abs() < 1e-12, "{cz:?}");
        }
    }

    #[test]
    fn generic_two_angles() {
        let f = linear(
            &["x1*sin(0.3) - x3*cos(0.3)", "x4", "x5*sin(0.9) - x7*cos(0.9)", "x8"],
            8,
        );
        let a = split_d1_d2(&f, &[0.0; 8]).unwrap();
        assert_eq!(a.verdict, Verdict::Generic);
        assert_eq!(a.clusters.len(), 2);
        assert!(a.theta.is_none());
        assert!(even_dimension_check(&f, &a).is_none());
    }

    #[test]
    fn angle_constancy_example5() {
        use rand::SeedableRng;
        let f = example5(0.6);
        let pts: Vec<SemiSlantAnalysis> = (0..5).map(|i| split_d1_d2(&f, &[0.1 * i as f64; 6]).unwrap()).collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let c = slant_angle_constancy(&pts, 20, &mut rng).unwrap();
        assert!((c.theta - 0.6).abs() < 1e-12);
        assert!(c.deviation < 1e-9 && c.spectral_vs_direct < 1e-9);
    }
}
