//! Declarative map definitions with expected analysis results.
//!
//! A file describes one map family. Parameters may be given as lists; the
//! cartesian product of all lists expands into concrete instances.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::expr::{parse, parse_with_params, Expr, Params};
use crate::geometry::{product_j, standard_j, MetricField};
use crate::submersion::{SemiSlantAnalysis, SubmersionMap, Verdict, BOUNDARY_BAND, TAU_CLUSTER};

pub const THETA_TOL: f64 = 1e-8;
pub const SUBSPACE_TOL: f64 = 1e-8;
pub const DEFAULT_POINTS: usize = 100;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{origin}: {path}: {message}")]
pub struct CorpusError {
    pub origin: String,
    /// Dotted path of the offending field, or `-` for whole-file errors.
    pub path: String,
    pub message: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    name: String,
    description: Option<String>,
    map: RawMap,
    metric: Option<RawMetric>,
    #[serde(rename = "J")]
    j: Option<RawJ>,
    #[serde(default)]
    params: BTreeMap<String, RawParam>,
    expected: RawExpected,
    sampling: Option<RawSampling>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMap {
    source_dim: usize,
    components: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMetric {
    kind: String,
    split: Option<usize>,
    warp: Option<String>,
    scales: Option<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJ {
    kind: String,
    split: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Scalar {
    Num(f64),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawParam {
    One(Scalar),
    Grid(Vec<Scalar>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExpected {
    verdict: String,
    theta: Option<String>,
    cos_theta: Option<String>,
    d1_dim: usize,
    d2_dim: usize,
    d1_basis: Option<Vec<Vec<Scalar>>>,
    d2_basis: Option<Vec<Vec<Scalar>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSampling {
    #[serde(rename = "box")]
    bounds: Option<Vec<[f64; 2]>>,
    points: Option<usize>,
}

/// Expected analysis of one instance, after boundary adjustment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Expectation {
    pub verdict: Verdict,
    pub theta: Option<f64>,
    pub d1_dim: usize,
    pub d2_dim: usize,
    /// The stated formula put the instance at a class threshold.
    pub boundary: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d1_basis: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d2_basis: Option<Vec<Vec<f64>>>,
}

/// A fully bound map with its expectation and sampling plan.
#[derive(Clone, Debug)]
pub struct Instance {
    pub entry: String,
    pub label: String,
    pub params: Params,
    pub map: SubmersionMap,
    pub expected: Expectation,
    pub bounds: Vec<(f64, f64)>,
    pub points: usize,
    /// Every bound expression in the file (components, then warp).
    pub expressions: Vec<Expr>,
}

#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub name: String,
    pub description: Option<String>,
    pub origin: String,
    pub instances: Vec<Instance>,
}

macro_rules! bundled_files {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../corpus/v1/", $name, ".toml")))),*]
    };
}

/// Bundled definitions as `(name, text)`.
pub const BUNDLED: &[(&str, &str)] = bundled_files![
    "example5",
    "example6",
    "example7",
    "example8",
    "example9",
    "warped10",
    "projection_r4_r2",
    "slant_r4_r2",
    "anti_invariant_polar",
    "semi_invariant_polar",
    "generic_two_angles",
    "warped_const",
    "warped_projection",
];

pub fn bundled_names() -> Vec<&'static str> {
    BUNDLED.iter().map(|(n, _)| *n).collect()
}

pub fn load_bundled(name: &str, overrides: &Params) -> Result<CorpusEntry, CorpusError> {
    let (_, text) = BUNDLED
        .iter()
        .find(|(n, _)| *n == name || format!("{n}.toml") == name)
        .ok_or_else(|| CorpusError {
            origin: name.to_string(),
            path: "-".into(),
            message: "no bundled entry with this name".into(),
        })?;
    load_str(text, &format!("bundled:{name}"), overrides)
}

pub fn load_all_bundled(overrides: &Params) -> Result<Vec<CorpusEntry>, CorpusError> {
    BUNDLED
        .iter()
        .map(|(n, t)| load_str(t, &format!("bundled:{n}"), overrides))
        .collect()
}

/// Loads a file from disk, falling back to the bundled entry of that name
/// when no such file exists.
pub fn load(path: &Path, overrides: &Params) -> Result<CorpusEntry, CorpusError> {
    match std::fs::read_to_string(path) {
        Ok(text) => load_str(&text, &path.display().to_string(), overrides),
        Err(e) => {
            let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            let bare = path.parent().is_none_or(|p| p.as_os_str().is_empty());
            if bare && BUNDLED.iter().any(|(n, _)| *n == name) {
                load_bundled(name, overrides)
            } else {
                Err(CorpusError {
                    origin: path.display().to_string(),
                    path: "-".into(),
                    message: format!("cannot read file: {e}"),
                })
            }
        }
    }
}

pub fn bundled_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus").join("v1")
}

struct Ctx<'a> {
    origin: &'a str,
}

impl Ctx<'_> {
    fn err(&self, path: impl Into<String>, message: impl std::fmt::Display) -> CorpusError {
        CorpusError {
            origin: self.origin.to_string(),
            path: path.into(),
            message: message.to_string(),
        }
    }

    fn constant(&self, path: &str, s: &Scalar, params: &Params) -> Result<f64, CorpusError> {
        match s {
            Scalar::Num(x) => Ok(*x),
            Scalar::Text(t) => {
                let names: Vec<&str> = params.keys().map(String::as_str).collect();
                let e = parse_with_params(t, 1, &names).map_err(|e| self.err(path, e))?;
                if e.max_variable() != 0 {
                    return Err(self.err(path, "expected a constant expression"));
                }
                e.eval_f64(&[0.0], params).map_err(|e| self.err(path, e))
            }
        }
    }
}

/// Parses and validates definition text, expanding parameter grids.
/// `overrides` replace the grid of any parameter they name.
pub fn load_str(text: &str, origin: &str, overrides: &Params) -> Result<CorpusEntry, CorpusError> {
    let cx = Ctx { origin };
    let raw: RawEntry = toml::from_str(text).map_err(|e| {
        let msg = e.message().to_string();
        let span = e
            .span()
            .map(|s| format!("byte {}", s.start))
            .unwrap_or_else(|| "-".into());
        cx.err(span, msg)
    })?;

    if let Some(bad) = overrides.keys().find(|k| !raw.params.contains_key(*k)) {
        return Err(cx.err(format!("params.{bad}"), "override names an undeclared parameter"));
    }
    let empty = Params::new();
    let mut grid: Vec<(String, Vec<f64>)> = Vec::new();
    for (name, p) in &raw.params {
        let path = format!("params.{name}");
        let values = if let Some(v) = overrides.get(name) {
            vec![*v]
        } else {
            match p {
                RawParam::One(s) => vec![cx.constant(&path, s, &empty)?],
                RawParam::Grid(list) if list.is_empty() => return Err(cx.err(path, "empty parameter list")),
                RawParam::Grid(list) => list
                    .iter()
                    .enumerate()
                    .map(|(i, s)| cx.constant(&format!("{path}[{i}]"), s, &empty))
                    .collect::<Result<_, _>>()?,
            }
        };
        grid.push((name.clone(), values));
    }

    let m = raw.map.source_dim;
    if m == 0 {
        return Err(cx.err("map.source_dim", "must be positive"));
    }
    let n = raw.map.components.len();
    if n == 0 || n >= m {
        return Err(cx.err("map.components", format!("need 1 ≤ target dim < {m}, got {n}")));
    }
    if raw.expected.d1_dim + raw.expected.d2_dim != m - n {
        return Err(cx.err(
            "expected",
            format!(
                "d1_dim + d2_dim = {} but the fiber has dimension {}",
                raw.expected.d1_dim + raw.expected.d2_dim,
                m - n
            ),
        ));
    }
    let verdict = Verdict::parse(&raw.expected.verdict).ok_or_else(|| {
        cx.err(
            "expected.verdict",
            format!("unknown verdict `{}`", raw.expected.verdict),
        )
    })?;
    if raw.expected.theta.is_some() && raw.expected.cos_theta.is_some() {
        return Err(cx.err("expected", "give at most one of theta and cos_theta"));
    }
    if verdict.has_angle() && raw.expected.theta.is_none() && raw.expected.cos_theta.is_none() {
        return Err(cx.err("expected.theta", "required for this verdict"));
    }
    for (key, basis, dim) in [
        ("expected.d1_basis", &raw.expected.d1_basis, raw.expected.d1_dim),
        ("expected.d2_basis", &raw.expected.d2_basis, raw.expected.d2_dim),
    ] {
        if let Some(b) = basis {
            if b.len() != dim {
                return Err(cx.err(key, format!("{} vectors for dimension {dim}", b.len())));
            }
            if let Some(i) = b.iter().position(|v| v.len() != m) {
                return Err(cx.err(format!("{key}[{i}]"), format!("vector must have {m} entries")));
            }
        }
    }

    let names: Vec<&str> = raw.params.keys().map(String::as_str).collect();
    let components: Vec<Expr> = raw
        .map
        .components
        .iter()
        .enumerate()
        .map(|(i, t)| parse_with_params(t, m, &names).map_err(|e| cx.err(format!("map.components[{i}]"), e)))
        .collect::<Result<_, _>>()?;

    let metric_kind = raw.metric.as_ref().map_or("euclidean", |r| r.kind.as_str());
    let warp = match (metric_kind, raw.metric.as_ref()) {
        ("euclidean", _) => None,
        ("warped", Some(r)) => {
            let split = r
                .split
                .ok_or_else(|| cx.err("metric.split", "required for warped metrics"))?;
            if split == 0 || split >= m {
                return Err(cx.err("metric.split", format!("must lie in 1..{m}")));
            }
            let w = r
                .warp
                .as_ref()
                .ok_or_else(|| cx.err("metric.warp", "required for warped metrics"))?;
            Some((
                split,
                parse_with_params(w, m, &names).map_err(|e| cx.err("metric.warp", e))?,
            ))
        }
        ("product", Some(r)) => {
            let split = r
                .split
                .ok_or_else(|| cx.err("metric.split", "required for product metrics"))?;
            if split == 0 || split >= m {
                return Err(cx.err("metric.split", format!("must lie in 1..{m}")));
            }
            let s = r.scales.unwrap_or([1.0, 1.0]);
            if s.iter().any(|x| !(*x > 0.0)) {
                return Err(cx.err("metric.scales", "scales must be positive"));
            }
            None
        }
        (other, _) => return Err(cx.err("metric.kind", format!("unknown metric kind `{other}`"))),
    };

    let j = match raw.j.as_ref().map_or("standard", |r| r.kind.as_str()) {
        "standard" => standard_j(m).map_err(|e| cx.err("J", e))?,
        "product" => {
            let split = raw
                .j
                .as_ref()
                .and_then(|r| r.split)
                .or_else(|| raw.metric.as_ref().and_then(|r| r.split))
                .ok_or_else(|| cx.err("J.split", "required for product structures"))?;
            if split == 0 || split >= m {
                return Err(cx.err("J.split", format!("must lie in 1..{m}")));
            }
            let j1 = standard_j(split).map_err(|e| cx.err("J.split", e))?;
            let j2 = standard_j(m - split).map_err(|e| cx.err("J.split", e))?;
            product_j(&j1, &j2).map_err(|e| cx.err("J", e))?
        }
        other => return Err(cx.err("J.kind", format!("unknown complex structure `{other}`"))),
    };

    let bounds: Vec<(f64, f64)> = match raw.sampling.as_ref().and_then(|s| s.bounds.as_ref()) {
        None => vec![(-1.0, 1.0); m],
        Some(b) if b.len() == 1 => vec![(b[0][0], b[0][1]); m],
        Some(b) if b.len() == m => b.iter().map(|r| (r[0], r[1])).collect(),
        Some(b) => return Err(cx.err("sampling.box", format!("{} ranges for dimension {m}", b.len()))),
    };
    if let Some(i) = bounds
        .iter()
        .position(|(lo, hi)| !(lo <= hi) || !lo.is_finite() || !hi.is_finite())
    {
        return Err(cx.err(format!("sampling.box[{i}]"), "need finite lo ≤ hi"));
    }
    let points = raw.sampling.as_ref().and_then(|s| s.points).unwrap_or(DEFAULT_POINTS);
    if points == 0 {
        return Err(cx.err("sampling.points", "must be at least 1"));
    }

    let mut instances = Vec::new();
    for params in expand(&grid) {
        let label = if params.is_empty() {
            raw.name.clone()
        } else {
            let kv: Vec<String> = params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            format!("{}[{}]", raw.name, kv.join(","))
        };
        let bind = |e: &Expr, path: &str| e.bind(&params).map_err(|e| cx.err(path, e));
        let comps: Vec<Expr> = components
            .iter()
            .enumerate()
            .map(|(i, e)| bind(e, &format!("map.components[{i}]")))
            .collect::<Result<_, _>>()?;
        let mut expressions = comps.clone();
        let metric = match (metric_kind, &warp) {
            ("warped", Some((split, w))) => {
                let w = bind(w, "metric.warp")?;
                expressions.push(w.clone());
                MetricField::warped(*split, m - split, w).map_err(|e| cx.err("metric.warp", e))?
            }
            ("product", _) => {
                let r = raw.metric.as_ref().expect("checked above");
                let split = r.split.expect("checked above");
                let s = r.scales.unwrap_or([1.0, 1.0]);
                MetricField::product(split, m - split, (s[0], s[1]))
            }
            _ => MetricField::euclidean(m),
        };
        let map = SubmersionMap::new(comps, metric, j.clone()).map_err(|e| cx.err("map", e))?;
        let expected = expectation(&cx, &raw.expected, verdict, &params)?;
        instances.push(Instance {
            entry: raw.name.clone(),
            label,
            params,
            map,
            expected,
            bounds: bounds.clone(),
            points,
            expressions,
        });
    }
    Ok(CorpusEntry {
        name: raw.name,
        description: raw.description,
        origin: origin.to_string(),
        instances,
    })
}

fn expand(grid: &[(String, Vec<f64>)]) -> Vec<Params> {
    let mut out = vec![Params::new()];
    for (name, values) in grid {
        out = out
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.insert(name.clone(), v);
                    q
                })
            })
            .collect();
    }
    out
}

fn expectation(cx: &Ctx, raw: &RawExpected, verdict: Verdict, params: &Params) -> Result<Expectation, CorpusError> {
    let basis = |key: &str, b: &Option<Vec<Vec<Scalar>>>| -> Result<Option<Vec<Vec<f64>>>, CorpusError> {
        b.as_ref()
            .map(|vs| {
                vs.iter()
                    .enumerate()
                    .map(|(i, v)| {
                        v.iter()
                            .enumerate()
                            .map(|(k, s)| cx.constant(&format!("{key}[{i}][{k}]"), s, params))
                            .collect()
                    })
                    .collect()
            })
            .transpose()
    };
    let theta = match (&raw.theta, &raw.cos_theta) {
        (Some(t), _) => Some(cx.constant("expected.theta", &Scalar::Text(t.clone()), params)?),
        (_, Some(c)) => {
            let c = cx.constant("expected.cos_theta", &Scalar::Text(c.clone()), params)?;
            if !(-1e-12..=1.0 + 1e-12).contains(&c) {
                return Err(cx.err("expected.cos_theta", format!("value {c} outside [0, 1]")));
            }
            Some(c.clamp(0.0, 1.0).acos())
        }
        _ => None,
    };
    let mut e = Expectation {
        verdict,
        theta,
        d1_dim: raw.d1_dim,
        d2_dim: raw.d2_dim,
        boundary: false,
        d1_basis: basis("expected.d1_basis", &raw.d1_basis)?,
        d2_basis: basis("expected.d2_basis", &raw.d2_basis)?,
    };
    adjust_for_boundary(&mut e);
    Ok(e)
}

/// Moves an expectation whose angle formula sits on a class threshold to
/// the class the classifier must report there.
fn adjust_for_boundary(e: &mut Expectation) {
    let Some(theta) = e.theta else { return };
    if e.d2_dim == 0 {
        return;
    }
    let c2 = theta.cos().powi(2);
    e.boundary = c2 < BOUNDARY_BAND || (1.0 - c2) < BOUNDARY_BAND;
    if 1.0 - c2 < TAU_CLUSTER {
        e.verdict = Verdict::Invariant;
        e.theta = Some(0.0);
        e.d1_dim += e.d2_dim;
        e.d2_dim = 0;
        if let (Some(d1), Some(d2)) = (&mut e.d1_basis, e.d2_basis.take()) {
            d1.extend(d2);
        } else {
            e.d1_basis = None;
        }
    } else if c2 < TAU_CLUSTER {
        e.theta = Some(std::f64::consts::FRAC_PI_2);
        e.verdict = if e.d1_dim == 0 {
            Verdict::AntiInvariant
        } else {
            Verdict::SemiInvariant
        };
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diff {
    pub field: String,
    pub expected: String,
    pub actual: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Comparison {
    pub expected: Expectation,
    pub theta_error: Option<f64>,
    /// Sine of the largest principal angle between expected and actual D1.
    pub d1_subspace_angle: Option<f64>,
    pub d2_subspace_angle: Option<f64>,
    pub diffs: Vec<Diff>,
}

/// Compares one analysis against the expectation.
pub fn expected_vs_actual(e: &Expectation, a: &SemiSlantAnalysis) -> Comparison {
    let mut diffs = Vec::new();
    let mut diff = |field: &str, exp: String, act: String| {
        diffs.push(Diff {
            field: field.into(),
            expected: exp,
            actual: act,
        })
    };
    if e.verdict != a.verdict {
        diff("verdict", e.verdict.to_string(), a.verdict.to_string());
    }
    let (d1, d2) = a.dims();
    if (e.d1_dim, e.d2_dim) != (d1, d2) {
        diff("dims", format!("({}, {})", e.d1_dim, e.d2_dim), format!("({d1}, {d2})"));
    }
    let theta_error = match (e.theta, a.theta) {
        (Some(t), Some(u)) => {
            let err = (t - u).abs();
            if !(err < THETA_TOL) {
                diff("theta", format!("{t}"), format!("{u}"));
            }
            Some(err)
        }
        (None, None) => None,
        (t, u) => {
            diff("theta", format!("{t:?}"), format!("{u:?}"));
            None
        }
    };
    let mut angle = |field: &str, basis: &Option<Vec<Vec<f64>>>, frame: Vec<Vec<f64>>| {
        let b = basis.as_ref()?;
        let s = subspace_distance(b, &frame);
        if !(s < SUBSPACE_TOL) {
            diff(field, "matching span".into(), format!("principal angle sine {s:.3e}"));
        }
        Some(s)
    };
    let d1_subspace_angle = angle("d1_span", &e.d1_basis, a.d1.vectors());
    let d2_subspace_angle = angle("d2_span", &e.d2_basis, a.d2.vectors());
    Comparison {
        expected: e.clone(),
        theta_error,
        d1_subspace_angle,
        d2_subspace_angle,
        diffs,
    }
}

/// Sine of the largest principal angle between two spans, or 1 when their
/// dimensions differ.
pub fn subspace_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let qa = orthonormal(a);
    let qb = orthonormal(b);
    match (qa, qb) {
        (None, None) => 0.0,
        (Some(qa), Some(qb)) if qa.ncols() == qb.ncols() => {
            let resid = &qb - &qa * (qa.transpose() * &qb);
            resid.singular_values().max().min(1.0)
        }
        _ => 1.0,
    }
}

fn orthonormal(vs: &[Vec<f64>]) -> Option<nalgebra::DMatrix<f64>> {
    let first = vs.first()?;
    let m = nalgebra::DMatrix::from_fn(first.len(), vs.len(), |i, j| vs[j][i]);
    let svd = m.svd(true, false);
    let smax = svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|s| **s > 1e-12 * smax).count();
    let u = svd.u?;
    Some(u.columns(0, rank).into_owned())
}

/// Parses `k=v` with `v` a constant expression.
pub fn parse_override(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let e = parse(v.trim(), 1).map_err(|e| format!("{k}: {e}"))?;
    if e.max_variable() != 0 {
        return Err(format!("{k}: value must be constant"));
    }
    let x = e.eval_f64(&[0.0], &Params::new()).map_err(|e| format!("{k}: {e}"))?;
    Ok((k.trim().to_string(), x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::submersion::split_d1_d2;

    #[test]
    fn all_bundled_load() {
        let entries = load_all_bundled(&Params::new()).unwrap();
        assert_eq!(entries.len(), BUNDLED.len());
        let classes: std::collections::BTreeSet<_> = entries
            .iter()
            .flat_map(|e| e.instances.iter().map(|i| i.expected.verdict))
            .collect();
        assert_eq!(classes.len(), 6);
    }

    #[test]
    fn example5_grid_has_three_instances() {
        let e = load_bundled("example5", &Params::new()).unwrap();
        assert_eq!(e.instances.len(), 3);
        for i in &e.instances {
            assert_eq!(i.expected.theta, Some(i.params["alpha"]));
        }
    }

    #[test]
    fn example7_expectation() {
        let e = load_bundled("example7", &Params::new()).unwrap();
        let x = &e.instances[0].expected;
        assert_eq!((x.d1_dim, x.d2_dim), (4, 1));
        assert_eq!(x.theta, Some(std::f64::consts::FRAC_PI_2));
    }

    #[test]
    fn example9_anti_diagonal_is_boundary() {
        let e = load_bundled("example9", &Params::new()).unwrap();
        assert_eq!(e.instances.len(), 25);
        let diag: Vec<_> = e
            .instances
            .iter()
            .filter(|i| ((i.params["alpha"] + i.params["beta"]) - std::f64::consts::FRAC_PI_2).abs() < 1e-12)
            .collect();
        assert_eq!(diag.len(), 5);
        for i in diag {
            assert!(i.expected.boundary);
            assert_eq!(i.expected.verdict, Verdict::Invariant);
            assert_eq!((i.expected.d1_dim, i.expected.d2_dim), (4, 0));
        }
    }

    #[test]
    fn override_replaces_grid() {
        let mut o = Params::new();
        o.insert("alpha".into(), 0.3);
        o.insert("beta".into(), 0.4);
        let e = load_bundled("example9", &o).unwrap();
        assert_eq!(e.instances.len(), 1);
        let a = split_d1_d2(&e.instances[0].map, &[0.1; 8]).unwrap();
        assert!((a.theta.unwrap() - 0.7f64.sin().acos()).abs() < 1e-8);
        assert!(load_bundled("example6", &o).is_err());
    }

    #[test]
    fn inconsistent_dims_rejected() {
        let text = r#"
name = "bad"
[map]
source_dim = 7
components = ["x1", "x2"]
[expected]
verdict = "semi-slant"
theta = "pi/4"
d1_dim = 4
d2_dim = 2
"#;
        let err = load_str(text, "bad.toml", &Params::new()).unwrap_err();
        assert_eq!(err.path, "expected");
    }

    #[test]
    fn schema_errors_carry_location() {
        let err = load_str("name = 3", "x.toml", &Params::new()).unwrap_err();
        assert_eq!(err.origin, "x.toml");
        let text = "name = \"x\"\n[map]\nsource_dim = 4\ncomponents = [\"x1 +\"]\n[expected]\nverdict = \"generic\"\nd1_dim = 0\nd2_dim = 3\n";
        let err = load_str(text, "x.toml", &Params::new()).unwrap_err();
        assert_eq!(err.path, "map.components[0]");
    }

    #[test]
    fn subspace_distance_basics() {
        let a = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        let b = vec![vec![1.0, 1.0, 0.0], vec![1.0, -1.0, 0.0]];
        assert!(subspace_distance(&a, &b) < 1e-15);
        let c = vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]];
        assert!((subspace_distance(&a, &c) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn overrides_parse() {
        assert_eq!(parse_override("alpha=pi/2").unwrap().1, std::f64::consts::FRAC_PI_2);
        assert!(parse_override("alpha").is_err());
        assert!(parse_override("alpha=x1").is_err());
    }
}
