//! The check catalog: each entry pairs a hypothesis with a residual, and
//! biconditional entries compute the geometric side and the tensor
//! condition independently so their zero-verdicts can be compared.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{add, bracket, nabla, scale, sub, Ctx, Field, PointOps, Proj, ProjectorJets};
use crate::geometry::{kahler_residual, riemann};
use crate::oneill::{
    endomorphism_fhat, fiber_sectional, harmonic_trace, mean_curvature, mean_curvature_in, nabla_tensor_t,
    second_fundamental_form, tensor_a, tensor_t, tensor_t_extended, umbilical_residual,
};
use crate::submersion::{split_d1_d2, SemiSlantAnalysis, SubmersionMap, Verdict, TAU_CLUSTER};

/// Residuals below this are indistinguishable from rounding.
pub const NOISE_FLOOR: f64 = 1e-11;
/// Kähler gate threshold on `|∇J|`.
pub const KAHLER_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Identity,
    Biconditional,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Gate {
    None,
    Kahler,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckSpec {
    pub id: &'static str,
    pub anchor: &'static str,
    pub hypothesis: &'static str,
    pub kind: CheckKind,
    pub gate: Gate,
    pub tolerance: f64,
    pub exploratory: bool,
}

const fn spec(
    id: &'static str,
    anchor: &'static str,
    hypothesis: &'static str,
    kind: CheckKind,
    gate: Gate,
    tolerance: f64,
) -> CheckSpec {
    CheckSpec {
        id,
        anchor,
        hypothesis,
        kind,
        gate,
        tolerance,
        exploratory: false,
    }
}

use CheckKind::{Biconditional as Bi, Identity as Id};
use Gate::{Kahler, None as Free};

pub const CATALOG: &[CheckSpec] = &[
    spec(
        "riemannian_submersion",
        "g_N(F_*Z, F_*W) = g_M(Z, W) for Z, W horizontal",
        "none",
        Id,
        Free,
        1e-10,
    ),
    spec(
        "algebraic_identities",
        "φ²+Bω = −id, C²+ωB = −id, ωφ+Cω = 0, BC+φB = 0",
        "none",
        Id,
        Free,
        1e-9,
    ),
    spec(
        "subspace_relations",
        "φD₁ = D₁, ωD₁ = 0, φD₂ ⊂ D₂, B((ker F_*)^⊥) = D₂, Jμ = μ",
        "none",
        Id,
        Free,
        1e-9,
    ),
    spec(
        "slant_characterization",
        "φ²X = −cos²θ X on D₂ ⟺ constant angle on D₂",
        "none",
        Bi,
        Free,
        1e-7,
    ),
    spec(
        "angle_consistency",
        "cos θ = |φX| / |JX| for X ∈ D₂",
        "single angle on D₂",
        Id,
        Free,
        1e-8,
    ),
    spec(
        "jhat_squared",
        "Ĵ = JP + (1/cos θ)φQ, Ĵ² = −id on ker F_*",
        "θ < π/2",
        Id,
        Free,
        1e-8,
    ),
    spec("even_dimension", "θ ∈ [0, π/2) ⟹ dim N even", "θ < π/2", Id, Free, 0.5),
    spec(
        "kahler_vertical",
        "∇̂_X φY+𝒯_X ωY = φ∇̂_X Y+B𝒯_X Y; 𝒯_X φY+ℋ∇_X ωY = ω∇̂_X Y+C𝒯_X Y",
        "Kähler source",
        Id,
        Kahler,
        1e-8,
    ),
    spec(
        "kahler_horizontal",
        "𝒱∇_Z BW+𝒜_Z CW = φ𝒜_Z W+Bℋ∇_Z W; 𝒜_Z BW+ℋ∇_Z CW = ω𝒜_Z W+Cℋ∇_Z W",
        "Kähler source",
        Id,
        Kahler,
        1e-8,
    ),
    spec(
        "kahler_mixed",
        "∇̂_X BZ+𝒯_X CZ = φ𝒯_X Z+Bℋ∇_X Z; 𝒯_X BZ+ℋ∇_X CZ = ω𝒯_X Z+Cℋ∇_X Z",
        "Kähler source",
        Id,
        Kahler,
        1e-8,
    ),
    spec(
        "fhat_lemma",
        "(∇_X F̂)Y = φ(∇̂_X PY−∇̂_X Y)+B𝒯_X PY+∇̂_X φQY, F̂ = JP+φQ",
        "Kähler source",
        Id,
        Kahler,
        1e-8,
    ),
    spec(
        "d1_integrability",
        "D₁ integrable ⟺ ω(∇̂_X Y−∇̂_Y X) = C(𝒯_Y X−𝒯_X Y)",
        "D₁ ≠ 0",
        Bi,
        Free,
        1e-8,
    ),
    spec(
        "d2_integrability",
        "D₂ integrable ⟺ P(φ(∇̂_X Y−∇̂_Y X)+B(𝒯_X Y−𝒯_Y X)) = 0",
        "D₂ ≠ 0",
        Bi,
        Free,
        1e-8,
    ),
    spec(
        "d2_integrability_kahler",
        "D₂ integrable ⟺ P(∇̂_X φY−∇̂_Y φX+𝒯_X ωY−𝒯_Y ωX) = 0",
        "Kähler source, D₂ ≠ 0",
        Bi,
        Kahler,
        1e-8,
    ),
    spec(
        "d1_integrability_kahler",
        "D₁ integrable ⟺ Q(∇̂_X φY−∇̂_Y φX) = 0 and 𝒯_X φY = 𝒯_Y φX",
        "Kähler source, D₁ ≠ 0",
        Bi,
        Kahler,
        1e-8,
    ),
    spec(
        "vertical_foliation",
        "ker F_* totally geodesic ⟺ ω(∇̂_X φY+𝒯_X ωY)+C(𝒯_X φY+ℋ∇_X ωY) = 0",
        "Kähler source",
        Bi,
        Kahler,
        1e-8,
    ),
    spec(
        "horizontal_foliation",
        "(ker F_*)^⊥ totally geodesic ⟺ φ(𝒱∇_X BY+𝒜_X CY)+B(𝒜_X BY+ℋ∇_X CY) = 0",
        "Kähler source",
        Bi,
        Kahler,
        1e-8,
    ),
    spec(
        "d1_foliation",
        "D₁ totally geodesic ⟺ Q(φ∇̂_X φY+B𝒯_X φY) = 0 and ω∇̂_X φY+C𝒯_X φY = 0",
        "Kähler source, D₁ ≠ 0",
        Bi,
        Kahler,
        1e-8,
    ),
    spec(
        "d2_foliation",
        "D₂ totally geodesic ⟺ P(φ(∇̂_X φY+𝒯_X ωY)+B(𝒯_X φY+ℋ∇_X ωY)) = 0 and ω(∇̂_X φY+𝒯_X ωY)+C(𝒯_X φY+ℋ∇_X ωY) = 0",
        "Kähler source, D₂ ≠ 0",
        Bi,
        Kahler,
        1e-8,
    ),
    spec(
        "totally_geodesic",
        "∇F_* = 0 ⟺ ω(∇̂_X φY+𝒯_X ωY)+C(𝒯_X φY+ℋ∇_X ωY) = 0 and ω(∇̂_X BZ+𝒯_X CZ)+C(𝒯_X BZ+ℋ∇_X CZ) = 0",
        "Kähler source",
        Bi,
        Kahler,
        1e-8,
    ),
    spec(
        "harmonic",
        "trace ∇F_* = 0 ⟺ Σ_j F_*(∇_{v_j} v_j) = 0 over D₂",
        "Kähler source, D₁ integrable",
        Bi,
        Kahler,
        1e-8,
    ),
    spec(
        "harmonic_d1_pairing",
        "F_*(∇_{Je}Je) = −F_*(∇_e e) for e ∈ D₁",
        "Kähler source, D₁ integrable",
        Id,
        Kahler,
        1e-8,
    ),
    spec(
        "umbilical_mean_curvature",
        "𝒯_X Y = g_M(X, Y)H ⟹ H ∈ ωD₂",
        "Kähler source, totally umbilical fibers",
        Id,
        Kahler,
        1e-8,
    ),
    spec(
        "curvature_item1",
        "K(P) = K̂(P)+|𝒯_X X|²−|𝒯_X JX|²−g_M(𝒯_X X, J[JX, X]), P ⊂ D₁",
        "Kähler source, D₁ ≠ 0",
        Id,
        Kahler,
        1e-5,
    ),
    CheckSpec {
        exploratory: true,
        ..spec(
            "curvature_item2",
            "K(P) = cos²θ K(X∧φX)+2g_M((∇_{φX}𝒯)(X,X)−(∇_X 𝒯)(φX,X), ωX)+sin²θ K(X∧ωX), X ∈ D₂",
            "Kähler source, D₂ ≠ 0",
            Id,
            Kahler,
            1e-5,
        )
    },
    spec(
        "curvature_item3",
        "K(P) = K_*(P)−3|𝒱J∇_X X|², P ⊂ μ",
        "Kähler source, μ ≠ 0",
        Id,
        Kahler,
        1e-5,
    ),
    spec(
        "a_tensor_bracket",
        "𝒜_Z W = ½𝒱[Z, W] for Z, W horizontal",
        "none",
        Id,
        Free,
        1e-8,
    ),
    spec(
        "oneill_tensoriality",
        "𝒯, 𝒜 tensorial and skew; 𝒯_X Y = 𝒯_Y X on ker F_*",
        "none",
        Id,
        Free,
        1e-9,
    ),
    spec(
        "sff_properties",
        "(∇F_*)(X,Z) = (∇F_*)(Z,X); (∇F_*)(Z₁,Z₂) = 0 for Z₁, Z₂ horizontal",
        "none",
        Id,
        Free,
        1e-9,
    ),
    spec(
        "mean_curvature_frame",
        "H = (1/dim ker F_*) Σ 𝒯_{e_i} e_i independent of the frame",
        "none",
        Id,
        Free,
        1e-10,
    ),
];

pub fn catalog_ids() -> Vec<&'static str> {
    CATALOG.iter().map(|c| c.id).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplePlan {
    pub seed: u64,
    /// Random field draws per point and check.
    pub draws: usize,
    pub tol_override: Option<f64>,
    pub only: Option<Vec<String>>,
}

impl Default for SamplePlan {
    fn default() -> Self {
        Self {
            seed: 42,
            draws: 2,
            tol_override: None,
            only: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Vacuous,
    Skipped,
}

#[derive(Clone, Debug, Serialize)]
pub struct PointBreakdown {
    pub point: usize,
    pub residual: Option<f64>,
    pub direct: Option<f64>,
    pub condition: Option<f64>,
    pub agree: Option<bool>,
    pub vacuous: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub id: String,
    pub anchor: String,
    pub kind: CheckKind,
    pub hypothesis: String,
    pub tolerance: f64,
    pub status: Status,
    pub exploratory: bool,
    pub max_residual: Option<f64>,
    pub max_direct: Option<f64>,
    pub max_condition: Option<f64>,
    /// Biconditionals: whether the two sides agreed at every draw.
    pub agreement: Option<bool>,
    /// Biconditionals: whether the geometric property held at every draw.
    pub holds: Option<bool>,
    /// A biconditional disagreement above the noise floor.
    pub hard_failure: bool,
    /// Failed only because the tolerance is below rounding noise.
    pub noise_limited: bool,
    pub reason: Option<String>,
    /// Index of the point with the largest residual.
    pub worst_point: Option<usize>,
    /// Per-point breakdown, kept for failing checks only.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<PointBreakdown>,
}

#[derive(Clone, Debug)]
enum Measure {
    Residual(f64),
    Pair(Vec<(f64, f64)>),
    Vacuous(String),
}

/// Per-point state shared by all checks.
struct PointEnv<'a> {
    ctx: Ctx<'a>,
    ops: PointOps,
    a: &'a SemiSlantAnalysis,
}

impl PointEnv<'_> {
    fn p(&self) -> &[f64] {
        &self.a.point
    }

    fn rand_vec<R: Rng>(&self, rng: &mut R, which: Proj) -> Vec<f64> {
        let raw: Vec<f64> = (0..self.p().len()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        self.ops.apply(which, &raw)
    }

    fn rand_any<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.p().len()).map(|_| rng.gen_range(-1.0..=1.0)).collect()
    }

    fn rand_unit<R: Rng>(&self, rng: &mut R, which: Proj) -> Option<Vec<f64>> {
        let v = self.rand_vec(rng, which);
        let n = self.ops.norm(&v);
        (n > 1e-8).then(|| scale(1.0 / n, &v))
    }

    fn rand_field<R: Rng>(&self, rng: &mut R, which: Proj) -> Field {
        Field::random_in(rng, which, self.p())
    }

    fn nabla(&self, x: &[f64], y: &Field) -> Result<Vec<f64>> {
        nabla(&self.ctx, x, y, self.p())
    }

    fn hat(&self, x: &[f64], y: &Field) -> Result<Vec<f64>> {
        Ok(self.ops.v(&self.nabla(x, y)?))
    }

    fn hnab(&self, x: &[f64], y: &Field) -> Result<Vec<f64>> {
        Ok(self.ops.h(&self.nabla(x, y)?))
    }

    fn t(&self, e: &[f64], f: &[f64]) -> Result<Vec<f64>> {
        tensor_t(&self.ctx, self.p(), e, f)
    }

    fn at(&self, e: &[f64], f: &[f64]) -> Result<Vec<f64>> {
        tensor_a(&self.ctx, self.p(), e, f)
    }

    fn val(&self, f: &Field) -> Result<Vec<f64>> {
        f.eval(&self.ctx, self.p())
    }

    fn n(&self, v: &[f64]) -> f64 {
        self.ops.norm(v)
    }

    fn dim(&self, which: Proj) -> usize {
        match which {
            Proj::Vertical => self.a.vertical.dim(),
            Proj::Horizontal => self.a.horizontal.dim(),
            Proj::D1 => self.a.d1.dim(),
            Proj::D2 => self.a.d2.dim(),
            Proj::Mu => self.a.mu.dim(),
            Proj::OmegaD2 => self.a.omega_d2.dim(),
        }
    }

    fn sectional(&self, r: &crate::geometry::Riemann, x: &[f64], y: &[f64]) -> Result<f64> {
        Ok(r.sectional(x, y)?)
    }

    /// `ω(∇̂_X φY+𝒯_X ωY)+C(𝒯_X φY+ℋ∇_X ωY)` and its P/φ, B companion
    /// `φ(∇̂_X φY+𝒯_X ωY)+B(𝒯_X φY+ℋ∇_X ωY)` for a vertical field Y.
    fn vertical_geodesic_terms(&self, x: &[f64], y: &Field) -> Result<(Vec<f64>, Vec<f64>)> {
        let yv = self.val(y)?;
        let u = add(&self.hat(x, &Field::phi(y.clone()))?, &self.t(x, &self.ops.omega(&yv))?);
        let w = add(
            &self.t(x, &self.ops.phi(&yv))?,
            &self.hnab(x, &Field::h_of_j(y.clone()))?,
        );
        let h_part = add(&self.ops.omega(&u), &self.ops.c(&w));
        let v_part = add(&self.ops.phi(&u), &self.ops.b(&w));
        Ok((h_part, v_part))
    }
}

fn measure<R: Rng>(id: &str, env: &PointEnv, draws: usize, rng: &mut R) -> Result<Measure> {
    let a = env.a;
    let ops = &env.ops;
    let p = env.p();
    let mut worst: f64 = 0.0;
    let mut pairs = Vec::new();
    match id {
        "riemannian_submersion" => worst = a.submersion_residual,
        "algebraic_identities" => worst = a.algebraic_residuals().into_iter().fold(0.0, f64::max),
        "subspace_relations" => worst = a.subspace_residuals().into_iter().fold(0.0, f64::max),
        "slant_characterization" => {
            if a.d2.dim() == 0 {
                return Ok(Measure::Vacuous("D₂ = 0".into()));
            }
            let l = a.d2.dim();
            let mut cos2 = Vec::new();
            for _ in 0..draws.max(2) * 4 {
                let c: Vec<f64> = (0..l).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                let v = a.direct_cos_angle(&c);
                cos2.push(v * v);
            }
            let lo = cos2.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = cos2.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            pairs.push((hi - lo, a.slant_residual()));
        }
        "angle_consistency" => {
            let Some(theta) = a.theta.filter(|_| a.d2.dim() > 0) else {
                return Ok(Measure::Vacuous("no single angle on D₂".into()));
            };
            for _ in 0..draws.max(1) * 4 {
                let c: Vec<f64> = (0..a.d2.dim()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                worst = worst.max((a.direct_cos_angle(&c) - theta.cos()).abs());
            }
        }
        "jhat_squared" => match a.jhat_residual() {
            Some(r) => worst = r,
            None => return Ok(Measure::Vacuous("θ = π/2 or no single angle".into())),
        },
        "even_dimension" => match crate::submersion::even_dimension_check(env.ctx.map, a) {
            Some(even) => worst = if even { 0.0 } else { 1.0 },
            None => return Ok(Measure::Vacuous("θ = π/2 or no single angle".into())),
        },
        "kahler_vertical" => {
            for _ in 0..draws {
                let x = env.rand_vec(rng, Proj::Vertical);
                let y = env.rand_field(rng, Proj::Vertical);
                let yv = env.val(&y)?;
                let hy = env.hat(&x, &y)?;
                let txy = env.t(&x, &yv)?;
                let l1 = add(&env.hat(&x, &Field::phi(y.clone()))?, &env.t(&x, &ops.omega(&yv))?);
                let r1 = add(&ops.phi(&hy), &ops.b(&txy));
                let l2 = add(&env.t(&x, &ops.phi(&yv))?, &env.hnab(&x, &Field::h_of_j(y.clone()))?);
                let r2 = add(&ops.omega(&hy), &ops.c(&txy));
                worst = worst.max(env.n(&sub(&l1, &r1))).max(env.n(&sub(&l2, &r2)));
            }
        }
        "kahler_horizontal" => {
            for _ in 0..draws {
                let z = env.rand_vec(rng, Proj::Horizontal);
                let w = env.rand_field(rng, Proj::Horizontal);
                let wv = env.val(&w)?;
                let azw = env.at(&z, &wv)?;
                let hzw = env.hnab(&z, &w)?;
                let l1 = add(&env.hat(&z, &Field::phi(w.clone()))?, &env.at(&z, &ops.c(&wv))?);
                let r1 = add(&ops.phi(&azw), &ops.b(&hzw));
                let l2 = add(&env.at(&z, &ops.b(&wv))?, &env.hnab(&z, &Field::h_of_j(w.clone()))?);
                let r2 = add(&ops.omega(&azw), &ops.c(&hzw));
                worst = worst.max(env.n(&sub(&l1, &r1))).max(env.n(&sub(&l2, &r2)));
            }
        }
        "kahler_mixed" => {
            for _ in 0..draws {
                let x = env.rand_vec(rng, Proj::Vertical);
                let z = env.rand_field(rng, Proj::Horizontal);
                let zv = env.val(&z)?;
                let txz = env.t(&x, &zv)?;
                let hxz = env.hnab(&x, &z)?;
                let l1 = add(&env.hat(&x, &Field::phi(z.clone()))?, &env.t(&x, &ops.c(&zv))?);
                let r1 = add(&ops.phi(&txz), &ops.b(&hxz));
                let l2 = add(&env.t(&x, &ops.b(&zv))?, &env.hnab(&x, &Field::h_of_j(z.clone()))?);
                let r2 = add(&ops.omega(&txz), &ops.c(&hxz));
                worst = worst.max(env.n(&sub(&l1, &r1))).max(env.n(&sub(&l2, &r2)));
            }
        }
        "fhat_lemma" => {
            for _ in 0..draws {
                let x = env.rand_vec(rng, Proj::Vertical);
                let y = env.rand_field(rng, Proj::Vertical);
                let (l, r) = endomorphism_fhat(&env.ctx, ops, p, &x, &y)?;
                worst = worst.max(env.n(&sub(&l, &r)));
            }
        }
        "d1_integrability" | "d1_integrability_kahler" => {
            if a.d1.dim() == 0 {
                return Ok(Measure::Vacuous("D₁ = 0".into()));
            }
            for _ in 0..draws {
                let x = env.rand_field(rng, Proj::D1);
                let y = env.rand_field(rng, Proj::D1);
                let (xv, yv) = (env.val(&x)?, env.val(&y)?);
                let br = bracket(&env.ctx, &x, &y, p)?;
                let direct = env.n(&sub(&br, &ops.p(&br)));
                let cond = if id == "d1_integrability" {
                    let lhs = ops.omega(&sub(&env.hat(&xv, &y)?, &env.hat(&yv, &x)?));
                    let rhs = ops.c(&sub(&env.t(&yv, &xv)?, &env.t(&xv, &yv)?));
                    env.n(&sub(&lhs, &rhs))
                } else {
                    let u = sub(
                        &env.hat(&xv, &Field::phi(y.clone()))?,
                        &env.hat(&yv, &Field::phi(x.clone()))?,
                    );
                    let w = sub(&env.t(&xv, &ops.phi(&yv))?, &env.t(&yv, &ops.phi(&xv))?);
                    env.n(&ops.q(&u)).max(env.n(&w))
                };
                pairs.push((direct, cond));
            }
        }
        "d2_integrability" | "d2_integrability_kahler" => {
            if a.d2.dim() == 0 {
                return Ok(Measure::Vacuous("D₂ = 0".into()));
            }
            for _ in 0..draws {
                let x = env.rand_field(rng, Proj::D2);
                let y = env.rand_field(rng, Proj::D2);
                let (xv, yv) = (env.val(&x)?, env.val(&y)?);
                let br = bracket(&env.ctx, &x, &y, p)?;
                let direct = env.n(&sub(&br, &ops.q(&br)));
                let inner = if id == "d2_integrability" {
                    add(
                        &ops.phi(&sub(&env.hat(&xv, &y)?, &env.hat(&yv, &x)?)),
                        &ops.b(&sub(&env.t(&xv, &yv)?, &env.t(&yv, &xv)?)),
                    )
                } else {
                    let u = sub(
                        &env.hat(&xv, &Field::phi(y.clone()))?,
                        &env.hat(&yv, &Field::phi(x.clone()))?,
                    );
                    let w = sub(&env.t(&xv, &ops.omega(&yv))?, &env.t(&yv, &ops.omega(&xv))?);
                    add(&u, &w)
                };
                pairs.push((direct, env.n(&ops.p(&inner))));
            }
        }
        "vertical_foliation" => {
            for _ in 0..draws {
                let x = env.rand_vec(rng, Proj::Vertical);
                let y = env.rand_field(rng, Proj::Vertical);
                let direct = env.n(&env.hnab(&x, &y)?);
                let (h_part, _) = env.vertical_geodesic_terms(&x, &y)?;
                pairs.push((direct, env.n(&h_part)));
            }
        }
        "horizontal_foliation" => {
            for _ in 0..draws {
                let x = env.rand_vec(rng, Proj::Horizontal);
                let y = env.rand_field(rng, Proj::Horizontal);
                let yv = env.val(&y)?;
                let direct = env.n(&env.hat(&x, &y)?);
                let u = add(&env.hat(&x, &Field::phi(y.clone()))?, &env.at(&x, &ops.c(&yv))?);
                let w = add(&env.at(&x, &ops.b(&yv))?, &env.hnab(&x, &Field::h_of_j(y.clone()))?);
                let cond = add(&ops.phi(&u), &ops.b(&w));
                pairs.push((direct, env.n(&cond)));
            }
        }
        "d1_foliation" => {
            if a.d1.dim() == 0 {
                return Ok(Measure::Vacuous("D₁ = 0".into()));
            }
            for _ in 0..draws {
                let x = env.rand_vec(rng, Proj::D1);
                let y = env.rand_field(rng, Proj::D1);
                let yv = env.val(&y)?;
                let nxy = env.nabla(&x, &y)?;
                let direct = env.n(&sub(&nxy, &ops.p(&nxy)));
                let u = env.hat(&x, &Field::phi(y.clone()))?;
                let t = env.t(&x, &ops.phi(&yv))?;
                let c1 = ops.q(&add(&ops.phi(&u), &ops.b(&t)));
                let c2 = add(&ops.omega(&u), &ops.c(&t));
                pairs.push((direct, env.n(&c1).max(env.n(&c2))));
            }
        }
        "d2_foliation" => {
            if a.d2.dim() == 0 {
                return Ok(Measure::Vacuous("D₂ = 0".into()));
            }
            for _ in 0..draws {
                let x = env.rand_vec(rng, Proj::D2);
                let y = env.rand_field(rng, Proj::D2);
                let nxy = env.nabla(&x, &y)?;
                let direct = env.n(&sub(&nxy, &ops.q(&nxy)));
                let (h_part, v_part) = env.vertical_geodesic_terms(&x, &y)?;
                pairs.push((direct, env.n(&ops.p(&v_part)).max(env.n(&h_part))));
            }
        }
        "totally_geodesic" => {
            for _ in 0..draws {
                let x = env.rand_vec(rng, Proj::Vertical);
                let y = env.rand_field(rng, Proj::Vertical);
                // the mixed condition reads ℋ∇_X Z = −(∇F_*)(X, Z), true for basic Z
                let z = Field::random_basic(rng, env.ctx.map.target_dim());
                let (yv, zv) = (env.val(&y)?, env.val(&z)?);
                let z2 = env.rand_vec(rng, Proj::Horizontal);
                let sff = |u: &[f64], v: &[f64]| second_fundamental_form(&env.ctx, p, u, v);
                let direct = norm(&sff(&x, &yv)?)
                    .max(norm(&sff(&x, &zv)?))
                    .max(norm(&sff(&zv, &z2)?));
                let (c1, _) = env.vertical_geodesic_terms(&x, &y)?;
                let u = add(&env.hat(&x, &Field::phi(z.clone()))?, &env.t(&x, &ops.c(&zv))?);
                let w = add(&env.t(&x, &ops.b(&zv))?, &env.hnab(&x, &Field::h_of_j(z.clone()))?);
                let c2 = add(&ops.omega(&u), &ops.c(&w));
                pairs.push((direct, env.n(&c1).max(env.n(&c2))));
            }
        }
        "harmonic" | "harmonic_d1_pairing" => {
            if let Some(reason) = d1_not_integrable(env, rng)? {
                return Ok(Measure::Vacuous(reason));
            }
            let tr = harmonic_trace(&env.ctx, a)?;
            if id == "harmonic" {
                pairs.push((norm(&tr.full), norm(&tr.d2)));
            } else {
                worst = tr.d1_pairing;
            }
        }
        "umbilical_mean_curvature" => {
            let h = mean_curvature(&env.ctx, a)?;
            let mut draws_xy = Vec::new();
            for _ in 0..draws.max(2) {
                draws_xy.push((env.rand_vec(rng, Proj::Vertical), env.rand_vec(rng, Proj::Vertical)));
            }
            let umb = umbilical_residual(&env.ctx, ops, p, &h, &draws_xy)?;
            if umb >= 1e-8 {
                return Ok(Measure::Vacuous(format!(
                    "fibers not totally umbilical (residual {umb:.2e})"
                )));
            }
            worst = env.n(&sub(&h, &ops.apply(Proj::OmegaD2, &h)));
        }
        "curvature_item1" => {
            if a.d1.dim() == 0 {
                return Ok(Measure::Vacuous("D₁ = 0".into()));
            }
            let r = riemann(env.ctx.map.metric(), p)?;
            for _ in 0..draws {
                let Some(x) = env.rand_unit(rng, Proj::D1) else {
                    continue;
                };
                let jx = ops.jv(&x);
                let k = env.sectional(&r, &x, &jx)?;
                let txx = env.t(&x, &x)?;
                let txjx = env.t(&x, &jx)?;
                let k_fiber = fiber_sectional(&env.ctx, p, &x, &jx)?;
                let xf = Field::project(Proj::D1, Field::Const(x.clone()));
                let br = bracket(&env.ctx, &Field::j(xf.clone()), &xf, p)?;
                let rhs = k_fiber + ops.inner(&txx, &txx) - ops.inner(&txjx, &txjx) - ops.inner(&txx, &ops.jv(&br));
                worst = worst.max((k - rhs).abs());
            }
        }
        "curvature_item2" => {
            let Some(theta) = a.theta.filter(|_| a.d2.dim() > 0) else {
                return Ok(Measure::Vacuous("D₂ = 0 or no single angle".into()));
            };
            let r = riemann(env.ctx.map.metric(), p)?;
            let (c2, s2) = (theta.cos().powi(2), theta.sin().powi(2));
            for _ in 0..draws {
                let Some(x) = env.rand_unit(rng, Proj::D2) else {
                    continue;
                };
                let jx = ops.jv(&x);
                let fx = ops.phi(&x);
                let wx = ops.omega(&x);
                let k = env.sectional(&r, &x, &jx)?;
                let k_phi = if env.n(&fx) > 1e-8 {
                    c2 * env.sectional(&r, &x, &fx)?
                } else {
                    0.0
                };
                let k_omega = if env.n(&wx) > 1e-8 {
                    s2 * env.sectional(&r, &x, &wx)?
                } else {
                    0.0
                };
                let d1 = nabla_tensor_t(&env.ctx, p, &fx, &x, &x)?;
                let d2 = nabla_tensor_t(&env.ctx, p, &x, &fx, &x)?;
                let mid = 2.0 * ops.inner(&sub(&d1, &d2), &wx);
                worst = worst.max((k - (k_phi + mid + k_omega)).abs());
            }
        }
        "curvature_item3" => {
            if a.mu.dim() == 0 {
                return Ok(Measure::Vacuous("μ = 0".into()));
            }
            let r = riemann(env.ctx.map.metric(), p)?;
            for _ in 0..draws {
                let Some(x) = env.rand_unit(rng, Proj::Mu) else {
                    continue;
                };
                let jx = ops.jv(&x);
                let k = env.sectional(&r, &x, &jx)?;
                let xf = Field::project(Proj::Mu, Field::Const(x.clone()));
                let v = ops.v(&ops.jv(&env.nabla(&x, &xf)?));
                // flat target: K_* = 0
                worst = worst.max((k - (0.0 - 3.0 * ops.inner(&v, &v))).abs());
            }
        }
        "a_tensor_bracket" => {
            for _ in 0..draws {
                let z = env.rand_field(rng, Proj::Horizontal);
                let w = env.rand_field(rng, Proj::Horizontal);
                let (zv, wv) = (env.val(&z)?, env.val(&w)?);
                let br = bracket(&env.ctx, &z, &w, p)?;
                let r = sub(&env.at(&zv, &wv)?, &scale(0.5, &ops.v(&br)));
                worst = worst.max(env.n(&r));
            }
        }
        "oneill_tensoriality" => {
            for _ in 0..draws {
                let e = env.rand_vec(rng, Proj::Vertical);
                let y = Field::Poly(Box::new(crate::fields::Poly::random(rng, p)));
                let yv = env.val(&y)?;
                let ext = tensor_t_extended(&env.ctx, p, &e, &y)?;
                worst = worst.max(env.n(&sub(&ext, &env.t(&e, &yv)?)));
                let u = env.rand_vec(rng, Proj::Vertical);
                let v = env.rand_vec(rng, Proj::Vertical);
                worst = worst.max(env.n(&sub(&env.t(&u, &v)?, &env.t(&v, &u)?)));
                let f = env.rand_any(rng);
                let g = env.rand_any(rng);
                let skew_t = ops.inner(&env.t(&e, &f)?, &g) + ops.inner(&f, &env.t(&e, &g)?);
                let z = env.rand_vec(rng, Proj::Horizontal);
                let skew_a = ops.inner(&env.at(&z, &f)?, &g) + ops.inner(&f, &env.at(&z, &g)?);
                worst = worst.max(skew_t.abs()).max(skew_a.abs());
            }
        }
        "sff_properties" => {
            for _ in 0..draws {
                let x = env.rand_any(rng);
                let z = env.rand_any(rng);
                let sff = |u: &[f64], v: &[f64]| second_fundamental_form(&env.ctx, p, u, v);
                worst = worst.max(norm(&sub(&sff(&x, &z)?, &sff(&z, &x)?)));
                let z1 = env.rand_vec(rng, Proj::Horizontal);
                let z2 = env.rand_vec(rng, Proj::Horizontal);
                worst = worst.max(norm(&sff(&z1, &z2)?));
            }
        }
        "mean_curvature_frame" => {
            let frame = a.vertical.vectors();
            let base = mean_curvature_in(&env.ctx, p, &frame)?;
            for _ in 0..draws {
                let rotated = rotate_frame(&frame, rng);
                let h = mean_curvature_in(&env.ctx, p, &rotated)?;
                worst = worst.max(env.n(&sub(&h, &base)));
            }
        }
        other => return Err(Error::Invalid(format!("unknown check id `{other}`"))),
    }
    if pairs.is_empty() {
        Ok(Measure::Residual(worst))
    } else {
        Ok(Measure::Pair(pairs))
    }
}

fn d1_not_integrable<R: Rng>(env: &PointEnv, rng: &mut R) -> Result<Option<String>> {
    if env.dim(Proj::D1) == 0 {
        return Ok(None);
    }
    let x = env.rand_field(rng, Proj::D1);
    let y = env.rand_field(rng, Proj::D1);
    let br = bracket(&env.ctx, &x, &y, env.p())?;
    let r = env.n(&sub(&br, &env.ops.p(&br)));
    Ok((r >= 1e-8).then(|| format!("D₁ not integrable (bracket residual {r:.2e})")))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `frame · O` for a random orthogonal O.
fn rotate_frame<R: Rng>(frame: &[Vec<f64>], rng: &mut R) -> Vec<Vec<f64>> {
    let k = frame.len();
    let m = nalgebra::DMatrix::from_fn(k, k, |_, _| rng.gen_range(-1.0..=1.0));
    let q = m.qr().q();
    (0..k)
        .map(|c| {
            let mut v = vec![0.0; frame[0].len()];
            for (r, e) in frame.iter().enumerate() {
                for (vi, ei) in v.iter_mut().zip(e) {
                    *vi += q[(r, c)] * ei;
                }
            }
            v
        })
        .collect()
}

/// splitmix64 finalizer, used to derive independent per-task seeds.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn task_rng(seed: u64, point: usize, check: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(mix(seed ^ mix(point as u64)) ^ (check as u64 + 1)))
}

/// Uniform points in a box, reproducible from the seed.
pub fn sample_points(bounds: &[(f64, f64)], count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed));
    (0..count)
        .map(|_| {
            bounds
                .iter()
                .map(|&(lo, hi)| lo + (hi - lo) * rng.gen::<f64>())
                .collect()
        })
        .collect()
}

/// Analyses at every point, in order.
pub fn analyze_points(map: &SubmersionMap, points: &[Vec<f64>]) -> Result<Vec<SemiSlantAnalysis>> {
    points.par_iter().map(|p| split_d1_d2(map, p)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct KahlerGate {
    pub kahler: bool,
    pub max_residual: f64,
}

pub fn kahler_gate(map: &SubmersionMap, points: &[Vec<f64>]) -> Result<KahlerGate> {
    let mut worst: f64 = 0.0;
    for p in points {
        worst = worst.max(kahler_residual(map.metric(), map.complex_structure(), p)?);
    }
    Ok(KahlerGate {
        kahler: worst < KAHLER_TOL,
        max_residual: worst,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub kahler_gate: KahlerGate,
    pub checks: Vec<CheckResult>,
}

impl CheckReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks
            .iter()
            .filter(|c| c.status == Status::Fail && !c.exploratory)
    }

    pub fn hard_failure(&self) -> bool {
        self.checks.iter().any(|c| c.hard_failure)
    }
}

/// Runs the selected catalog entries over pre-computed analyses.
pub fn run_suite(map: &SubmersionMap, analyses: &[SemiSlantAnalysis], plan: &SamplePlan) -> Result<CheckReport> {
    if let Some(only) = &plan.only {
        if let Some(bad) = only.iter().find(|id| !CATALOG.iter().any(|c| c.id == id.as_str())) {
            return Err(Error::Invalid(format!("unknown check id `{bad}`")));
        }
    }
    let selected: Vec<(usize, &CheckSpec)> = CATALOG
        .iter()
        .enumerate()
        .filter(|(_, c)| plan.only.as_ref().is_none_or(|o| o.iter().any(|id| id == c.id)))
        .collect();
    let points: Vec<Vec<f64>> = analyses.iter().map(|a| a.point.clone()).collect();
    let gate = kahler_gate(map, &points)?;

    let per_point: Vec<Vec<Measure>> = analyses
        .par_iter()
        .enumerate()
        .map(|(pi, a)| -> Result<Vec<Measure>> {
            let plain = Ctx::new(map, a);
            let jets = ProjectorJets::new(&plain, &a.point)?;
            let ctx = plain.with_jets(&jets);
            let env = PointEnv {
                ops: PointOps::new(&ctx, &a.point)?,
                ctx,
                a,
            };
            selected
                .iter()
                .map(|(ci, c)| measure(c.id, &env, plan.draws, &mut task_rng(plan.seed, pi, *ci)))
                .collect()
        })
        .collect::<Result<_>>()?;

    let checks = selected
        .iter()
        .enumerate()
        .map(|(k, (_, c))| {
            let measures: Vec<&Measure> = per_point.iter().map(|m| &m[k]).collect();
            aggregate(c, &measures, &gate, plan.tol_override)
        })
        .collect();
    Ok(CheckReport {
        kahler_gate: gate,
        checks,
    })
}

fn aggregate(c: &CheckSpec, measures: &[&Measure], gate: &KahlerGate, tol_override: Option<f64>) -> CheckResult {
    let tol = tol_override.unwrap_or(c.tolerance);
    let mut points = Vec::new();
    let (mut max_res, mut max_d, mut max_c): (Option<f64>, Option<f64>, Option<f64>) = (None, None, None);
    let mut agreement = true;
    let mut holds = true;
    let mut hard = false;
    let mut noise_only = true;
    let mut vacuous_reason = None;
    let mut active = 0;
    let upd = |slot: &mut Option<f64>, v: f64| *slot = Some(slot.map_or(v, |s: f64| s.max(v)));
    for (i, m) in measures.iter().enumerate() {
        match m {
            Measure::Vacuous(r) => {
                vacuous_reason.get_or_insert_with(|| r.clone());
                points.push(PointBreakdown {
                    point: i,
                    residual: None,
                    direct: None,
                    condition: None,
                    agree: None,
                    vacuous: Some(r.clone()),
                });
            }
            Measure::Residual(r) => {
                active += 1;
                upd(&mut max_res, *r);
                if !(*r < tol) && *r > NOISE_FLOOR {
                    noise_only = false;
                }
                points.push(PointBreakdown {
                    point: i,
                    residual: Some(*r),
                    direct: None,
                    condition: None,
                    agree: None,
                    vacuous: None,
                });
            }
            Measure::Pair(pairs) => {
                active += 1;
                let mut agree_here = true;
                let (mut wd, mut wc): (f64, f64) = (0.0, 0.0);
                for &(d, cond) in pairs {
                    wd = wd.max(d);
                    wc = wc.max(cond);
                    let zd = d < tol;
                    let zc = cond < tol;
                    holds &= zd;
                    if zd != zc {
                        agree_here = false;
                        if d.max(cond) > NOISE_FLOOR {
                            noise_only = false;
                        }
                    }
                }
                agreement &= agree_here;
                upd(&mut max_d, wd);
                upd(&mut max_c, wc);
                upd(&mut max_res, wc);
                points.push(PointBreakdown {
                    point: i,
                    residual: None,
                    direct: Some(wd),
                    condition: Some(wc),
                    agree: Some(agree_here),
                    vacuous: None,
                });
            }
        }
    }
    let kahler_skip = c.gate == Gate::Kahler && !gate.kahler;
    let bi = c.kind == CheckKind::Biconditional;
    let passed = if bi { agreement } else { max_res.is_none_or(|r| r < tol) };
    let (status, reason) = if kahler_skip {
        (
            Status::Skipped,
            Some(format!("source not Kähler (|∇J| = {:.2e})", gate.max_residual)),
        )
    } else if active == 0 {
        (Status::Vacuous, vacuous_reason)
    } else if passed {
        (Status::Pass, None)
    } else {
        (Status::Fail, None)
    };
    let failed = status == Status::Fail;
    if bi && failed && !noise_only {
        hard = true;
    }
    let worst_point = points
        .iter()
        .filter_map(|b| {
            b.residual
                .or(b.condition.zip(b.direct).map(|(c, d)| c.max(d)))
                .map(|r| (b.point, r))
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i);
    if !failed {
        points.clear();
    }
    CheckResult {
        id: c.id.to_string(),
        anchor: c.anchor.to_string(),
        kind: c.kind,
        hypothesis: c.hypothesis.to_string(),
        tolerance: tol,
        status,
        exploratory: c.exploratory,
        max_residual: max_res,
        max_direct: max_d,
        max_condition: max_c,
        agreement: bi.then_some(agreement).filter(|_| active > 0),
        holds: bi.then_some(holds).filter(|_| active > 0),
        hard_failure: hard,
        noise_limited: failed && noise_only,
        reason,
        worst_point,
        points,
    }
}

/// Whether a verdict admits a single angle strictly below π/2.
pub fn angle_below_right(a: &SemiSlantAnalysis) -> bool {
    a.verdict != Verdict::Generic
        && a.theta
            .is_some_and(|t| a.d2.dim() == 0 || t.cos() >= TAU_CLUSTER.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::geometry::{standard_j, MetricField};

    fn linear(texts: &[&str], m: usize) -> SubmersionMap {
        let comps = texts.iter().map(|t| parse(t, m).unwrap()).collect();
        SubmersionMap::new(comps, MetricField::euclidean(m), standard_j(m).unwrap()).unwrap()
    }

    #[test]
    fn catalog_ids_unique() {
        let mut ids = catalog_ids();
        ids.sort();
        let n = ids.len();
        ids.dedup();
        assert_eq!(ids.len(), n);
    }

    #[test]
    fn example6_suite_has_no_failures() {
        let f = linear(&["(x5-x8)/sqrt(2)", "x6"], 8);
        let pts = sample_points(&[(-1.0, 1.0); 8], 3, 1);
        let an = analyze_points(&f, &pts).unwrap();
        let rep = run_suite(&f, &an, &SamplePlan::default()).unwrap();
        for c in &rep.checks {
            assert!(
                matches!(c.status, Status::Pass | Status::Vacuous),
                "{} -> {:?} {:?}",
                c.id,
                c.status,
                c.max_residual
            );
        }
    }

    #[test]
    fn polar_map_is_not_harmonic_by_both_routes() {
        let f = linear(&["sqrt(x1^2 + x2^2)", "x3"], 4);
        let pts = sample_points(&[(0.5, 1.5), (0.5, 1.5), (-1.0, 1.0), (-1.0, 1.0)], 3, 5);
        let an = analyze_points(&f, &pts).unwrap();
        let plan = SamplePlan {
            only: Some(vec!["harmonic".into(), "vertical_foliation".into()]),
            ..Default::default()
        };
        let rep = run_suite(&f, &an, &plan).unwrap();
        for c in &rep.checks {
            assert_eq!(c.status, Status::Pass, "{}", c.id);
            assert_eq!(c.holds, Some(false), "{}", c.id);
        }
    }

    #[test]
    fn unknown_only_id_rejected() {
        let f = linear(&["x1"], 2);
        let an = analyze_points(&f, &[vec![0.0, 0.0]]).unwrap();
        let plan = SamplePlan {
            only: Some(vec!["nope".into()]),
            ..Default::default()
        };
        assert!(run_suite(&f, &an, &plan).is_err());
    }

    fn spec(id: &str) -> &'static CheckSpec {
        CATALOG.iter().find(|c| c.id == id).unwrap()
    }

    #[test]
    fn disagreement_is_hard_unless_noise_or_gated() {
        let c = spec("d1_integrability");
        let kahler = KahlerGate {
            kahler: true,
            max_residual: 0.0,
        };
        let agree = Measure::Pair(vec![(0.3, 0.7), (1e-14, 1e-13)]);
        let r = aggregate(c, &[&agree], &kahler, None);
        assert_eq!(
            (r.status, r.hard_failure, r.agreement),
            (Status::Pass, false, Some(true))
        );

        let clash = Measure::Pair(vec![(0.3, 1e-14)]);
        let r = aggregate(c, &[&agree, &clash], &kahler, None);
        assert_eq!((r.status, r.hard_failure, r.noise_limited), (Status::Fail, true, false));
        assert_eq!(r.points.len(), 2);

        let faint = Measure::Pair(vec![(1e-12, 1e-15)]);
        let r = aggregate(c, &[&faint], &kahler, Some(1e-13));
        assert_eq!((r.status, r.hard_failure, r.noise_limited), (Status::Fail, false, true));

        let gated = spec("vertical_foliation");
        let flat_not_kahler = KahlerGate {
            kahler: false,
            max_residual: 0.5,
        };
        let r = aggregate(gated, &[&clash], &flat_not_kahler, None);
        assert_eq!(
            (r.status, r.hard_failure, r.agreement),
            (Status::Skipped, false, Some(false))
        );
    }
}
