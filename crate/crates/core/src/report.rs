//! Running corpus instances and assembling the report document.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{expected_vs_actual, Comparison, Diff, Instance};
use crate::error::Error;
use crate::submersion::{slant_angle_constancy, SemiSlantAnalysis, Verdict};
use crate::theorems::{
    analyze_points, mix, run_suite, sample_points, CheckKind, CheckReport, SamplePlan, Status, CATALOG,
};

pub const SCHEMA_VERSION: &str = "1";
/// Horizontal-length residual above which a map is rejected outright.
pub const RIEMANNIAN_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Classify,
    Check,
    CorpusVerify,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    /// Overrides each entry's sample count.
    pub points: Option<usize>,
    pub draws: usize,
    pub tol: Option<f64>,
    pub only: Option<Vec<String>>,
    pub params: BTreeMap<String, f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            points: None,
            draws: 2,
            tol: None,
            only: None,
            params: BTreeMap::new(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.points == Some(0) {
            return Err("--points must be at least 1".into());
        }
        if self.draws == 0 {
            return Err("draws must be at least 1".into());
        }
        if let Some(t) = self.tol {
            if !(t > 0.0) || !t.is_finite() {
                return Err("--tol must be a positive number".into());
            }
        }
        if let Some(only) = &self.only {
            if let Some(bad) = only.iter().find(|id| !CATALOG.iter().any(|c| c.id == id.as_str())) {
                return Err(format!("unknown check id `{bad}`"));
            }
        }
        Ok(())
    }

    fn plan(&self) -> SamplePlan {
        SamplePlan {
            seed: self.seed,
            draws: self.draws,
            tol_override: self.tol,
            only: self.only.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalysisSummary {
    pub verdict: Verdict,
    pub theta: Option<f64>,
    pub cos_theta: Option<f64>,
    pub d1_dim: usize,
    pub d2_dim: usize,
    pub mu_dim: usize,
    pub omega_d2_dim: usize,
    /// Some spectral value lies near a class threshold at some point, or the
    /// instance's stated angle puts it on one (the spectrum alone cannot tell
    /// an exact boundary instance from a map of the limiting class).
    pub boundary: bool,
    /// Largest deviation of any point or direction angle from the mean.
    pub angle_spread: Option<f64>,
    pub spectral_vs_direct: Option<f64>,
    pub max_submersion_residual: f64,
    /// Spectrum of −φ² on the fiber at the first point, ascending.
    pub spectrum: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Input,
    Internal,
}

#[derive(Clone, Debug, Serialize)]
pub struct ErrorInfo {
    pub kind: ErrorKind,
    pub message: String,
}

impl From<&Error> for ErrorInfo {
    fn from(e: &Error) -> Self {
        Self {
            kind: if e.is_internal() {
                ErrorKind::Internal
            } else {
                ErrorKind::Input
            },
            message: e.to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Overall {
    Pass,
    Fail,
    Error,
}

#[derive(Clone, Debug, Serialize)]
pub struct WorstCheck {
    pub id: String,
    pub residual: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EntryReport {
    pub entry: String,
    pub label: String,
    pub origin: String,
    pub params: BTreeMap<String, f64>,
    pub source_dim: usize,
    pub target_dim: usize,
    pub points: usize,
    pub analysis: Option<AnalysisSummary>,
    pub expectation: Option<Comparison>,
    pub checks: Option<CheckReport>,
    /// The identity check whose residual is largest relative to its tolerance.
    pub worst_check: Option<WorstCheck>,
    pub error: Option<ErrorInfo>,
    pub status: Overall,
    pub exit_code: u8,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportDocument {
    pub schema_version: &'static str,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: Command,
    pub config: RunConfig,
    pub entries: Vec<EntryReport>,
    pub status: Overall,
    pub exit_code: u8,
}

fn summarize(analyses: &[SemiSlantAnalysis], seed: u64) -> Result<(AnalysisSummary, Vec<Diff>), Error> {
    let first = &analyses[0];
    let mut diffs = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed ^ 0xA11CE));
    let constancy = match slant_angle_constancy(analyses, 16, &mut rng) {
        Ok(c) => Some(c),
        Err(Error::Invalid(msg)) => {
            if analyses.iter().any(|a| a.verdict != first.verdict) {
                diffs.push(Diff {
                    field: "verdict".into(),
                    expected: "the same verdict at every point".into(),
                    actual: msg,
                });
            }
            None
        }
        Err(e) => return Err(e),
    };
    let theta = constancy.as_ref().map(|c| c.theta).or(first.theta);
    let (d1, d2) = first.dims();
    Ok((
        AnalysisSummary {
            verdict: first.verdict,
            theta,
            cos_theta: theta.map(f64::cos),
            d1_dim: d1,
            d2_dim: d2,
            mu_dim: first.mu.dim(),
            omega_d2_dim: first.omega_d2.dim(),
            boundary: analyses.iter().any(|a| a.boundary),
            angle_spread: constancy.as_ref().map(|c| c.deviation),
            spectral_vs_direct: constancy.as_ref().map(|c| c.spectral_vs_direct),
            max_submersion_residual: analyses.iter().map(|a| a.submersion_residual).fold(0.0, f64::max),
            spectrum: first.spectrum.clone(),
        },
        diffs,
    ))
}

/// Worst expectation comparison across all points.
fn compare_all(inst: &Instance, analyses: &[SemiSlantAnalysis]) -> Comparison {
    let mut acc: Option<Comparison> = None;
    for a in analyses {
        let c = expected_vs_actual(&inst.expected, a);
        acc = Some(match acc {
            None => c,
            Some(mut prev) => {
                let max = |x: Option<f64>, y: Option<f64>| match (x, y) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    (x, y) => x.or(y),
                };
                prev.theta_error = max(prev.theta_error, c.theta_error);
                prev.d1_subspace_angle = max(prev.d1_subspace_angle, c.d1_subspace_angle);
                prev.d2_subspace_angle = max(prev.d2_subspace_angle, c.d2_subspace_angle);
                for d in c.diffs {
                    if !prev.diffs.iter().any(|p| p.field == d.field) {
                        prev.diffs.push(d);
                    }
                }
                prev
            }
        });
    }
    acc.expect("at least one point")
}

fn worst_check(rep: &CheckReport) -> Option<WorstCheck> {
    rep.checks
        .iter()
        .filter(|c| matches!(c.status, Status::Pass | Status::Fail) && !c.exploratory)
        .filter(|c| c.kind == CheckKind::Identity)
        .filter_map(|c| c.max_residual.map(|r| (c, r)))
        .max_by(|(a, ra), (b, rb)| (ra / a.tolerance).total_cmp(&(rb / b.tolerance)))
        .map(|(c, r)| WorstCheck {
            id: c.id.clone(),
            residual: r,
            tolerance: c.tolerance,
        })
}

/// Classifies (and for `Check`/`CorpusVerify` also checks) one instance.
pub fn run_instance(inst: &Instance, origin: &str, command: Command, cfg: &RunConfig) -> EntryReport {
    let points = cfg.points.unwrap_or(inst.points);
    let mut rep = EntryReport {
        entry: inst.entry.clone(),
        label: inst.label.clone(),
        origin: origin.to_string(),
        params: inst.params.clone(),
        source_dim: inst.map.source_dim(),
        target_dim: inst.map.target_dim(),
        points,
        analysis: None,
        expectation: None,
        checks: None,
        worst_check: None,
        error: None,
        status: Overall::Pass,
        exit_code: 0,
    };
    let fail = |rep: &mut EntryReport, e: &Error| {
        let info = ErrorInfo::from(e);
        rep.exit_code = if info.kind == ErrorKind::Internal { 3 } else { 2 };
        rep.status = Overall::Error;
        rep.error = Some(info);
    };
    let pts = sample_points(&inst.bounds, points, cfg.seed);
    let analyses = match analyze_points(&inst.map, &pts) {
        Ok(a) => a,
        Err(e) => {
            fail(&mut rep, &e);
            return rep;
        }
    };
    let (summary, mut diffs) = match summarize(&analyses, cfg.seed) {
        Ok(s) => s,
        Err(e) => {
            fail(&mut rep, &e);
            return rep;
        }
    };
    let riem = summary.max_submersion_residual;
    rep.analysis = Some(summary);
    if !(riem < RIEMANNIAN_TOL) {
        fail(&mut rep, &Error::NotRiemannian { residual: riem });
        return rep;
    }
    let mut cmp = compare_all(inst, &analyses);
    if cmp.expected.boundary {
        if let Some(s) = rep.analysis.as_mut() {
            s.boundary = true;
        }
    }
    cmp.diffs.append(&mut diffs);
    let mismatch = !cmp.diffs.is_empty();
    rep.expectation = Some(cmp);

    let mut check_failed = false;
    if command != Command::Classify {
        match run_suite(&inst.map, &analyses, &cfg.plan()) {
            Ok(cr) => {
                check_failed = cr.failures().next().is_some();
                if cr.hard_failure() {
                    rep.exit_code = 3;
                }
                rep.worst_check = worst_check(&cr);
                rep.checks = Some(cr);
            }
            Err(e) => {
                fail(&mut rep, &e);
                return rep;
            }
        }
    }
    if rep.exit_code == 3 {
        rep.status = Overall::Error;
    } else if mismatch || check_failed {
        rep.status = Overall::Fail;
        rep.exit_code = 1;
    }
    rep
}

/// Runs every instance of every entry; order of the output follows input.
pub fn run(entries: &[(String, Vec<Instance>)], command: Command, cfg: &RunConfig) -> ReportDocument {
    let jobs: Vec<(&str, &Instance)> = entries
        .iter()
        .flat_map(|(origin, insts)| insts.iter().map(move |i| (origin.as_str(), i)))
        .collect();
    let reports: Vec<EntryReport> = jobs
        .par_iter()
        .map(|(origin, inst)| run_instance(inst, origin, command, cfg))
        .collect();
    assemble(command, cfg, reports)
}

pub fn assemble(command: Command, cfg: &RunConfig, entries: Vec<EntryReport>) -> ReportDocument {
    let exit_code = combine_exit(entries.iter().map(|e| e.exit_code));
    let status = match exit_code {
        0 => Overall::Pass,
        1 => Overall::Fail,
        _ => Overall::Error,
    };
    ReportDocument {
        schema_version: SCHEMA_VERSION,
        tool: "subcheck",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config: cfg.clone(),
        entries,
        status,
        exit_code,
    }
}

/// Internal failures dominate input errors, which dominate mismatches.
pub fn combine_exit(codes: impl IntoIterator<Item = u8>) -> u8 {
    codes.into_iter().fold(0, |acc, c| match (acc, c) {
        (3, _) | (_, 3) => 3,
        (2, _) | (_, 2) => 2,
        (1, _) | (_, 1) => 1,
        _ => 0,
    })
}

impl ReportDocument {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<44} {:<15} {:>12} {:>7} {:>10} {:<6}",
            "entry", "verdict", "theta", "dims", "worst", "status"
        );
        for e in &self.entries {
            let (verdict, theta, dims) = match &e.analysis {
                Some(a) => (
                    a.verdict.to_string(),
                    a.theta.map_or("-".into(), |t| format!("{t:.9}")),
                    format!("({},{})", a.d1_dim, a.d2_dim),
                ),
                None => ("-".into(), "-".into(), "-".into()),
            };
            let worst = e
                .worst_check
                .as_ref()
                .map_or("-".into(), |w| format!("{:.2e}", w.residual));
            let _ = writeln!(
                out,
                "{:<44} {:<15} {:>12} {:>7} {:>10} {:<6}",
                truncate(&e.label, 44),
                verdict,
                theta,
                dims,
                worst,
                status_str(e.status)
            );
            if let Some(err) = &e.error {
                let _ = writeln!(out, "    error ({:?}): {}", err.kind, err.message);
            }
            if let Some(c) = &e.expectation {
                for d in &c.diffs {
                    let _ = writeln!(
                        out,
                        "    mismatch {}: expected {}, got {}",
                        d.field, d.expected, d.actual
                    );
                }
            }
            if let Some(cr) = &e.checks {
                if self.command == Command::Check {
                    for c in &cr.checks {
                        let res = c.max_residual.map_or("-".into(), |r| format!("{r:.3e}"));
                        let mut note = String::new();
                        if c.exploratory {
                            note.push_str(" exploratory");
                        }
                        if c.noise_limited {
                            note.push_str(" noise-limited");
                        }
                        if c.hard_failure {
                            note.push_str(" DISAGREEMENT");
                        }
                        if let Some(h) = c.holds {
                            let _ = write!(note, " holds={h}");
                        }
                        let _ = writeln!(
                            out,
                            "    {:<28} {:<8} {:>11} tol {:.0e}{}",
                            c.id,
                            format!("{:?}", c.status).to_lowercase(),
                            res,
                            c.tolerance,
                            note
                        );
                    }
                } else {
                    for c in cr.checks.iter().filter(|c| c.status == Status::Fail || c.hard_failure) {
                        let _ = writeln!(
                            out,
                            "    {} {}{}",
                            c.id,
                            if c.exploratory { "fail (exploratory)" } else { "fail" },
                            if c.noise_limited { " noise-limited" } else { "" }
                        );
                    }
                }
            }
        }
        let _ = writeln!(out, "overall: {} (exit {})", status_str(self.status), self.exit_code);
        out
    }
}

fn status_str(s: Overall) -> &'static str {
    match s {
        Overall::Pass => "pass",
        Overall::Fail => "FAIL",
        Overall::Error => "ERROR",
    }
}

fn truncate(s: &str, n: usize) -> String {
    if s.chars().count() <= n {
        s.to_string()
    } else {
        let mut t: String = s.chars().take(n - 1).collect();
        t.push('…');
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::load_bundled;
    use crate::expr::Params;

    #[test]
    fn exit_code_precedence() {
        assert_eq!(combine_exit([0, 1, 0]), 1);
        assert_eq!(combine_exit([1, 2]), 2);
        assert_eq!(combine_exit([2, 3, 1]), 3);
        assert_eq!(combine_exit(Vec::<u8>::new()), 0);
    }

    #[test]
    fn classify_example6() {
        let e = load_bundled("example6", &Params::new()).unwrap();
        let cfg = RunConfig {
            points: Some(5),
            ..Default::default()
        };
        let r = run_instance(&e.instances[0], &e.origin, Command::Classify, &cfg);
        assert_eq!(r.exit_code, 0, "{:?}", r.expectation);
        let a = r.analysis.unwrap();
        assert_eq!(a.verdict, Verdict::SemiSlant);
        assert!((a.theta.unwrap() - std::f64::consts::FRAC_PI_4).abs() < 1e-8);
    }

    #[test]
    fn non_riemannian_map_is_input_error() {
        let text = "name = \"scaled\"\n[map]\nsource_dim = 4\ncomponents = [\"2*x1\", \"x2\"]\n[expected]\nverdict = \"invariant\"\ntheta = \"0\"\nd1_dim = 2\nd2_dim = 0\n";
        let e = crate::corpus::load_str(text, "scaled.toml", &Params::new()).unwrap();
        let r = run_instance(&e.instances[0], &e.origin, Command::Classify, &RunConfig::default());
        assert_eq!(r.exit_code, 2);
        assert_eq!(r.error.unwrap().kind, ErrorKind::Input);
    }

    #[test]
    fn wrong_expectation_is_mismatch() {
        let text = "name = \"p\"\n[map]\nsource_dim = 4\ncomponents = [\"x1\", \"x2\"]\n[expected]\nverdict = \"slant\"\ntheta = \"0.5\"\nd1_dim = 0\nd2_dim = 2\n";
        let e = crate::corpus::load_str(text, "p.toml", &Params::new()).unwrap();
        let cfg = RunConfig {
            points: Some(3),
            ..Default::default()
        };
        let r = run_instance(&e.instances[0], &e.origin, Command::Classify, &cfg);
        assert_eq!(r.exit_code, 1);
        let fields: Vec<_> = r.expectation.unwrap().diffs.into_iter().map(|d| d.field).collect();
        assert!(fields.contains(&"verdict".to_string()) && fields.contains(&"dims".to_string()));
    }
}
