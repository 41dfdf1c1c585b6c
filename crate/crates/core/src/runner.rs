//! Configuration, orchestration and artifact emission for batch runs.

use crate::criteria::{run_criteria, CriteriaOptions, CriteriaReport, CriterionKind};
use crate::field::{DilatationSource, MuProfile, ProfileSource};
use crate::geometry::catalog_domain;
use crate::harmonic::sample_angles;
use crate::numeric::is_power_of_two;
use crate::pipeline::{
    composite_residual, loop_report, solve_multivalent, solve_regular, verify_boundary, verify_extension, DirichletProblem, PhiSpec,
};
use crate::solver::{beltrami_residual, principal_solution, SolverOptions};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Check,
    SolveQc,
    Solve,
    SolveMultivalent,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::SolveQc => "solve-qc",
            Command::Solve => "solve",
            Command::SolveMultivalent => "solve-multivalent",
            Command::Verify => "verify",
        }
    }
}

/// Catalog entry reference: `{"id": ..., "params": [...]}` or a file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub id: String,
    #[serde(default)]
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl Entry {
    pub fn new(id: &str, params: &[f64]) -> Self {
        Self { id: id.into(), params: params.to_vec(), path: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_solver_tol")]
    pub solver: f64,
    #[serde(default = "default_verify_tol")]
    pub verify: f64,
}

fn default_solver_tol() -> f64 {
    1e-10
}
fn default_verify_tol() -> f64 {
    1e-2
}
fn default_grid() -> usize {
    512
}
fn default_samples() -> usize {
    256
}
fn default_max_iter() -> usize {
    200
}
fn default_prime_ends() -> usize {
    64
}
fn default_points() -> usize {
    32
}
fn default_criterion() -> String {
    "all".into()
}
fn default_loops() -> usize {
    100
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { solver: default_solver_tol(), verify: default_verify_tol() }
    }
}

/// One run, as read from a JSON config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    pub domain: Entry,
    pub mu: Entry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<Entry>,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub tol: Tolerances,
    #[serde(default)]
    pub trunc: f64,
    /// Truncation levels for `verify`; defaults to `[trunc]`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trunc_levels: Vec<f64>,
    pub out: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_criterion")]
    pub criterion: String,
    /// Orlicz function, `exp:a`, `power:p` or `tlogq:q`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orlicz: Option<String>,
    /// Boundary points for `check`.
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_prime_ends")]
    pub prime_ends: usize,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_loops")]
    pub loops: usize,
}

impl RunConfig {
    pub fn new(domain: Entry, mu: Entry, out: impl Into<PathBuf>) -> Self {
        Self {
            command: None,
            domain,
            mu,
            phi: None,
            grid: default_grid(),
            samples: default_samples(),
            tol: Tolerances::default(),
            trunc: 0.0,
            trunc_levels: vec![],
            out: out.into(),
            seed: 0,
            criterion: default_criterion(),
            orlicz: None,
            points: default_points(),
            prime_ends: default_prime_ends(),
            max_iter: default_max_iter(),
            loops: default_loops(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        // Relative data paths are taken relative to the config file.
        let base = path.parent().unwrap_or(Path::new("."));
        for entry in [Some(&mut cfg.mu), cfg.phi.as_mut()].into_iter().flatten() {
            if let Some(p) = &entry.path {
                if p.is_relative() {
                    entry.path = Some(base.join(p));
                }
            }
        }
        Ok(cfg)
    }

    /// Every rule that can be checked before any computation.
    pub fn validate(&self) -> Result<()> {
        if !is_power_of_two(self.grid) {
            return Err(Error::NotPowerOfTwo(self.grid));
        }
        if !is_power_of_two(self.samples) || self.samples < 64 {
            return Err(Error::Config(format!("samples = {} must be a power of two and at least 64", self.samples)));
        }
        for (name, v) in [("tol.solver", self.tol.solver), ("tol.verify", self.tol.verify)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} = {v} must be positive")));
            }
        }
        for &t in std::iter::once(&self.trunc).chain(&self.trunc_levels) {
            if !(0.0..1.0).contains(&t) {
                return Err(Error::Config(format!("truncation {t} must lie in [0, 1)")));
            }
        }
        if self.prime_ends == 0 || self.points == 0 || self.max_iter == 0 {
            return Err(Error::Config("prime_ends, points and max_iter must be positive".into()));
        }
        catalog_domain(&self.domain.id, &self.domain.params)?;
        self.profile()?;
        if let Some(phi) = &self.phi {
            self.phi_spec_of(phi)?;
        }
        CriterionKind::parse(&self.criterion, self.orlicz.as_deref())?;
        Ok(())
    }

    pub fn profile(&self) -> Result<MuProfile> {
        match (&self.mu.path, self.mu.id.as_str()) {
            (Some(p), "custom-grid") => MuProfile::custom_from_csv(p),
            (None, "custom-grid") => Err(Error::Config("mu `custom-grid` needs a `path`".into())),
            _ => MuProfile::from_id(&self.mu.id, &self.mu.params),
        }
    }

    fn phi_spec_of(&self, phi: &Entry) -> Result<PhiSpec> {
        match (&phi.path, phi.id.as_str()) {
            (Some(p), "csv") => PhiSpec::table_from_csv(&fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?),
            (None, "csv") => Err(Error::Config("phi `csv` needs a `path`".into())),
            _ => PhiSpec::from_id(&phi.id, &phi.params),
        }
    }

    pub fn phi_spec(&self) -> Result<PhiSpec> {
        let phi = self.phi.as_ref().ok_or_else(|| Error::Config("this command needs `phi`".into()))?;
        self.phi_spec_of(phi)
    }

    fn solver_options(&self, trunc: f64) -> SolverOptions {
        SolverOptions { tol: self.tol.solver, trunc, max_iter: self.max_iter }
    }

    fn problem(&self, trunc: f64) -> Result<DirichletProblem> {
        let mut p = DirichletProblem::catalog(&self.domain.id, &self.domain.params, &self.profile()?, self.grid, trunc, self.phi_spec()?, self.samples)?;
        p.solver = self.solver_options(trunc);
        p.eps = self.tol.verify;
        Ok(p)
    }
}

/// Files written by a run, relative to the output directory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub artifacts: Vec<String>,
    /// Headline verdicts and numbers.
    pub headline: serde_json::Map<String, serde_json::Value>,
}

struct Out<'a> {
    dir: &'a Path,
    summary: RunSummary,
}

impl Out<'_> {
    fn write(&mut self, name: &str, bytes: &str) -> Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.summary.artifacts.push(name.into());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(name, &s)
    }

    fn headline(&mut self, key: &str, value: serde_json::Value) {
        self.summary.headline.insert(key.into(), value);
    }
}

/// `x,y,Re,Im` rows.
pub fn csv(rows: &[(C64, C64)]) -> String {
    let mut s = String::from("x,y,Re,Im\n");
    for (z, f) in rows {
        let _ = writeln!(s, "{},{},{},{}", z.re, z.im, f.re, f.im);
    }
    s
}

fn manifest(cfg: &RunConfig, command: Command, status: &str, summary: Option<&RunSummary>, error: Option<&Error>) -> serde_json::Value {
    let mut m = json!({
        "program": "beltrami",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command.name(),
        "status": status,
        "config": cfg,
        "grid": cfg.grid,
        "samples": cfg.samples,
        "tolerances": cfg.tol,
        "truncation": cfg.trunc,
        "seed": cfg.seed,
        "note": "the Jacobian sign is checked as a surrogate; discreteness and openness are not decidable from grid data",
    });
    if let Some(s) = summary {
        m["artifacts"] = json!(s.artifacts);
        m["results"] = json!(s.headline);
    }
    if let Some(e) = error {
        m["error"] = error_json(e);
    }
    m
}

/// Machine-readable error record.
pub fn error_json(e: &Error) -> serde_json::Value {
    let kind = match e {
        Error::UnknownId(_) => "unknown-id",
        Error::InvalidParams { .. } => "invalid-params",
        Error::Degenerate { .. } => "degenerate",
        Error::NotPowerOfTwo(_) => "not-power-of-two",
        Error::IndexOutOfRange { .. } => "index-out-of-range",
        Error::OutsideBox(_) => "outside-box",
        Error::BoundaryLayer { .. } => "boundary-layer",
        Error::Polyline(_) => "polyline",
        Error::Path(_) => "path",
        Error::Family(_) => "family",
        Error::Orlicz(_) => "orlicz",
        Error::Unsupported(_) => "unsupported",
        Error::Config(_) => "config",
        Error::Io(_) => "io",
    };
    json!({ "error": kind, "message": e.to_string() })
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

/// Validate, write the manifest, execute, then rewrite the manifest with
/// the outcome. Errors leave `error.json` and a failure manifest behind.
pub fn run(cfg: &RunConfig, command: Command) -> Result<RunSummary> {
    if let Err(e) = cfg.validate() {
        let _ = fs::create_dir_all(&cfg.out);
        let _ = write_json(&cfg.out.join("error.json"), &error_json(&e));
        return Err(e);
    }
    fs::create_dir_all(&cfg.out)?;
    let manifest_path = cfg.out.join("manifest.json");
    write_json(&manifest_path, &manifest(cfg, command, "running", None, None))?;
    let mut out = Out { dir: &cfg.out, summary: RunSummary::default() };
    let result = match command {
        Command::Check => run_check(cfg, &mut out),
        Command::SolveQc => run_solve_qc(cfg, &mut out),
        Command::Solve => run_solve(cfg, &mut out),
        Command::SolveMultivalent => run_multivalent(cfg, &mut out),
        Command::Verify => run_verify(cfg, &mut out),
    };
    match result {
        Ok(()) => {
            write_json(&manifest_path, &manifest(cfg, command, "ok", Some(&out.summary), None))?;
            Ok(out.summary)
        }
        Err(e) => {
            let _ = write_json(&cfg.out.join("error.json"), &error_json(&e));
            let _ = write_json(&manifest_path, &manifest(cfg, command, "failed", Some(&out.summary), Some(&e)));
            Err(e)
        }
    }
}

/// Boundary points at equispaced chart angles plus the profile's
/// distinguished point, if any.
fn check_points(cfg: &RunConfig, profile: &MuProfile, count: usize) -> Result<Vec<C64>> {
    let (_, chart) = catalog_domain(&cfg.domain.id, &cfg.domain.params)?;
    let mut pts = Vec::with_capacity(count + 1);
    for t in sample_angles(count) {
        pts.push(chart.boundary_point(0, t)?);
    }
    let special = match profile {
        MuProfile::BoundaryLog { z0 } => Some(*z0),
        MuProfile::PowerLog { center, .. } => Some(*center),
        _ => None,
    };
    if let Some(s) = special {
        if pts.iter().all(|p| (p - s).norm() > 1e-9) {
            pts.push(s);
        }
    }
    Ok(pts)
}

fn criteria_report(cfg: &RunConfig, points: usize) -> Result<CriteriaReport> {
    let (domain, _) = catalog_domain(&cfg.domain.id, &cfg.domain.params)?;
    let profile = cfg.profile()?;
    let source = ProfileSource::on_domain(profile.clone(), domain);
    let kinds = CriterionKind::parse(&cfg.criterion, cfg.orlicz.as_deref())?;
    let opts = CriteriaOptions { seed: cfg.seed, ..Default::default() };
    let pts = check_points(cfg, &profile, points)?;
    let (lo, hi) = source.region();
    let pts: Vec<C64> = pts.into_iter().filter(|p| p.re >= lo.re && p.re <= hi.re && p.im >= lo.im && p.im <= hi.im).collect();
    run_criteria(&source, &pts, &kinds, &opts)
}

fn run_check(cfg: &RunConfig, out: &mut Out) -> Result<()> {
    let report = criteria_report(cfg, cfg.points)?;
    out.json("criteria.json", &report)?;
    out.headline("verdicts", json!(report.verdicts));
    Ok(())
}

/// Every `stride`-th lattice node inside the domain.
fn sampled_nodes(p: &DirichletProblem, max_side: usize) -> Vec<C64> {
    let lat = &p.mu.lattice;
    let stride = (lat.n / max_side).max(1);
    let mut v = Vec::new();
    for j in (0..lat.n).step_by(stride) {
        for i in (0..lat.n).step_by(stride) {
            let z = lat.point(i, j);
            if p.domain.contains(z) {
                v.push(z);
            }
        }
    }
    v
}

fn run_solve_qc(cfg: &RunConfig, out: &mut Out) -> Result<()> {
    let (domain, _) = catalog_domain(&cfg.domain.id, &cfg.domain.params)?;
    let mu = crate::field::sample_mu(&cfg.profile()?, &domain, cfg.grid, cfg.trunc)?;
    let f = principal_solution(&mu, cfg.solver_options(cfg.trunc))?;
    let lat = f.lattice().clone();
    let stride = (lat.n / 256).max(1);
    let mut rows = Vec::new();
    for j in (0..lat.n).step_by(stride) {
        for i in (0..lat.n).step_by(stride) {
            rows.push((lat.point(i, j), f.w[lat.index(i, j)]));
        }
    }
    out.write("qcmap.csv", &csv(&rows))?;
    let residual = beltrami_residual(&f);
    let report = json!({
        "iterations": f.iterations,
        "converged": f.converged,
        "increments": f.increments,
        "contraction": f.contraction(),
        "margin_ok": f.margin_ok,
        "truncation": f.truncation,
        "truncated_cells": f.mu.truncated_cells,
        "residual": residual,
    });
    out.json("solver.json", &report)?;
    out.headline("converged", json!(f.converged));
    out.headline("beltrami_residual", json!(residual.residual));
    Ok(())
}

fn run_solve(cfg: &RunConfig, out: &mut Out) -> Result<()> {
    let p = cfg.problem(cfg.trunc)?;
    // Criteria annotate the run; they never gate it.
    let criteria = criteria_report(&RunConfig { criterion: "all".into(), ..cfg.clone() }, 8)?;
    out.json("criteria.json", &criteria)?;
    let s = solve_regular(&p)?;
    let rows: Result<Vec<(C64, C64)>> = sampled_nodes(&p, 128).into_iter().map(|z| Ok((z, s.eval(z)?))).collect();
    out.write("solution.csv", &csv(&rows?))?;
    let report = verify_boundary(&|z| s.re(z), &p.chart, &p.phi, cfg.prime_ends, cfg.tol.verify)?;
    out.json("boundary.json", &report)?;
    let comp = composite_residual(&s, &p, (p.mu.lattice.n / 128).max(1))?;
    out.json("composite.json", &json!({ "composite": comp, "solver": s.solver, "transported_samples": s.transported.len() }))?;
    out.headline("boundary_pass", json!(report.pass));
    out.headline("boundary_p95", json!(report.p95));
    out.headline("composite_residual", json!(comp.residual));
    out.headline("criteria", json!(criteria.verdicts));
    Ok(())
}

fn run_multivalent(cfg: &RunConfig, out: &mut Out) -> Result<()> {
    let p = cfg.problem(cfg.trunc)?;
    let s = solve_multivalent(&p)?;
    let rows: Vec<(C64, C64)> = sampled_nodes(&p, 128)
        .into_iter()
        .map(|z| {
            let w = s.g.eval(z);
            (z, s.u.h_branch(w, w.arg()))
        })
        .collect();
    out.write("solution.csv", &csv(&rows))?;
    let loops = loop_report(&s, cfg.loops, cfg.seed)?;
    let report = verify_boundary(&|z| Ok(s.re(z)), &p.chart, &p.phi, cfg.prime_ends, cfg.tol.verify)?;
    out.json("boundary.json", &report)?;
    out.json(
        "multivalent.json",
        &json!({
            "period": s.period,
            "image_inner_radius": s.image_rho,
            "c0": s.u.c0,
            "modes": s.u.n_max,
            "condition": s.u.condition,
            "boundary_error": s.u.boundary_error,
            "warnings": s.u.warnings,
            "loops": loops,
            "solver": s.solver,
        }),
    )?;
    out.headline("period", json!(s.period));
    out.headline("re_jump", json!(loops.re_jump));
    out.headline("boundary_pass", json!(report.pass));
    Ok(())
}

fn run_verify(cfg: &RunConfig, out: &mut Out) -> Result<()> {
    let (domain, chart) = catalog_domain(&cfg.domain.id, &cfg.domain.params)?;
    let levels = if cfg.trunc_levels.is_empty() { vec![cfg.trunc] } else { cfg.trunc_levels.clone() };
    let mut reports = Vec::new();
    for &t in &levels {
        let mu = crate::field::sample_mu(&cfg.profile()?, &domain, cfg.grid, t)?;
        let f = principal_solution(&mu, cfg.solver_options(t))?;
        let r = verify_extension(&f, &chart, cfg.points, cfg.tol.verify)?;
        reports.push(json!({
            "truncation": t,
            "truncated_cells": f.mu.truncated_cells,
            "max_modulus": f.mu.max_modulus(),
            "converged": f.converged,
            "report": r,
        }));
    }
    out.json("extension.json", &reports)?;
    out.headline("verdicts", json!(reports.iter().map(|r| r["report"]["verdict"].clone()).collect::<Vec<_>>()));
    Ok(())
}
