//! Admissibility checks on the dilatation quotient.
//!
//! Every check reports a verdict together with the sequence it was decided
//! from. Divergence of an improper integral cannot be decided from finitely
//! many samples, so the rules below look at the last few dyadic levels and
//! answer `inconclusive` when the evidence is mixed.

use crate::field::{radial_profile, DilatationSource, RadialProfile};
use crate::numeric::{gauss_integrate, gauss_legendre, linear_fit};
use crate::{Error, Result, C64};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::{E, PI};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    /// Combine verdicts across points: any failure fails, then any
    /// inconclusive result is inconclusive.
    pub fn worst(items: impl IntoIterator<Item = Verdict>) -> Verdict {
        let mut out = Verdict::Pass;
        for v in items {
            match v {
                Verdict::Fail => return Verdict::Fail,
                Verdict::Inconclusive => out = Verdict::Inconclusive,
                Verdict::Pass => {}
            }
        }
        out
    }
}

/// One verdict with its evidence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub criterion: String,
    pub verdict: Verdict,
    pub numeric: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbolic: Option<Verdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<C64>,
    /// Scale variable of the sequence (level, radius, `T`, ...).
    pub scales: Vec<f64>,
    pub sequence: Vec<f64>,
    pub fitted: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl CriterionResult {
    fn new(criterion: &str, numeric: Verdict) -> Self {
        Self {
            criterion: criterion.into(),
            verdict: numeric,
            numeric,
            symbolic: None,
            point: None,
            scales: vec![],
            sequence: vec![],
            fitted: BTreeMap::new(),
            note: String::new(),
        }
    }

    fn with_symbolic(mut self, s: Option<Verdict>) -> Self {
        self.symbolic = s;
        if let Some(v) = s {
            self.verdict = v;
        }
        self
    }
}

/// Collected verdicts for one run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CriteriaReport {
    /// Aggregated verdict per criterion (worst over points).
    pub verdicts: BTreeMap<String, Verdict>,
    pub points: Vec<C64>,
    pub results: Vec<CriterionResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_spacing: Option<f64>,
}

impl CriteriaReport {
    pub fn push(&mut self, r: CriterionResult) {
        let entry = self.verdicts.entry(r.criterion.clone()).or_insert(Verdict::Pass);
        *entry = Verdict::worst([*entry, r.verdict]);
        self.results.push(r);
    }
}

/// Shared numeric settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriteriaOptions {
    /// Outer radius `eps0`.
    pub eps0: f64,
    /// Dyadic levels below `eps0` for closed-form sources.
    pub levels: usize,
    pub seed: u64,
    pub subdisks: usize,
}

impl Default for CriteriaOptions {
    fn default() -> Self {
        Self { eps0: 0.25, levels: 30, seed: 0, subdisks: 50 }
    }
}

/// Number of usable dyadic levels below `eps0` for a source.
fn usable_levels(source: &dyn DilatationSource, opts: &CriteriaOptions) -> usize {
    match source.resolution() {
        None => opts.levels,
        Some(h) => {
            let l = (opts.eps0 / (2.0 * h)).log2().floor();
            if l < 0.0 {
                0
            } else {
                (l as usize).min(opts.levels)
            }
        }
    }
}

/// Radii for the circle-norm profile: eight per dyadic level.
pub fn profile_radii(eps0: f64, levels: usize) -> Vec<f64> {
    (0..=8 * levels).rev().map(|j| eps0 * 2f64.powf(-(j as f64) / 8.0)).collect()
}

/// Circle-norm profile used by the divergence and growth checks.
pub fn criteria_profile(source: &dyn DilatationSource, z0: C64, opts: &CriteriaOptions) -> Result<RadialProfile> {
    let levels = usable_levels(source, opts).max(1);
    radial_profile(source, z0, &profile_radii(opts.eps0, levels))
}

/// Decide divergence of `sum d_n` from the last five increments, with the
/// scale variable `s_n` (growing to infinity) used for the exponent fit.
fn divergence_rule(increments: &[f64], scales: &[f64], fitted: &mut BTreeMap<String, f64>) -> Verdict {
    if increments.len() < 5 {
        return Verdict::Inconclusive;
    }
    let k = increments.len();
    let d = &increments[k - 5..];
    let s = &scales[k - 5..];
    if d.iter().any(|v| !v.is_finite()) {
        return Verdict::Inconclusive;
    }
    if d.iter().any(|&v| v <= 0.0) {
        fitted.insert("ratio".into(), 0.0);
        return Verdict::Fail;
    }
    let ratio = (d[4] / d[0]).powf(0.25);
    fitted.insert("ratio".into(), ratio);
    if ratio >= 0.98 {
        return Verdict::Pass;
    }
    if ratio <= 0.75 {
        return Verdict::Fail;
    }
    let x: Vec<f64> = s.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = d.iter().map(|v| v.ln()).collect();
    let beta = -linear_fit(&x, &y).0;
    fitted.insert("beta".into(), beta);
    if beta <= 1.1 {
        Verdict::Pass
    } else if beta >= 1.5 {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    }
}

fn interp_log(radii: &[f64], values: &[f64], r: f64) -> f64 {
    let lr = r.ln();
    for k in 0..radii.len() - 1 {
        let (a, b) = (radii[k].ln(), radii[k + 1].ln());
        if lr >= a - 1e-12 && lr <= b + 1e-12 {
            let t = if b > a { (lr - a) / (b - a) } else { 0.0 };
            return values[k] + t * (values[k + 1] - values[k]);
        }
    }
    f64::NAN
}

/// Divergence of `int_r^eps0 dr / ||K||(z0, r)` as `r -> 0`.
pub fn check_divergence_integral(profile: &RadialProfile, eps0: f64) -> CriterionResult {
    let radii: Vec<f64> = profile.radii.iter().cloned().filter(|&r| r <= eps0 * (1.0 + 1e-12)).collect();
    let norms = &profile.circle_norm[..radii.len()];
    let mut res = CriterionResult::new("divergence", Verdict::Inconclusive);
    res.point = Some(profile.center);
    let symbolic = profile.catalog_tag.map(|(p, q)| {
        if p > 1 || (p == 1 && q <= 1) {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    });
    if radii.len() < 2 || radii[0] > 1e-4 * eps0 {
        res.note = "profile does not reach 1e-4 eps0".into();
        return res.with_symbolic(symbolic);
    }
    // Cumulative integral from eps0 downwards, trapezoid in log r.
    let n = radii.len();
    let mut cum = vec![0.0; n];
    for k in (0..n - 1).rev() {
        let f = |j: usize| if norms[j] > 0.0 { radii[j] / norms[j] } else { f64::INFINITY };
        cum[k] = cum[k + 1] + 0.5 * (f(k) + f(k + 1)) * (radii[k + 1].ln() - radii[k].ln());
    }
    let levels = (eps0 / radii[0]).log2().floor() as usize;
    let partial: Vec<f64> = (0..=levels).map(|l| interp_log(&radii, &cum, eps0 * 2f64.powi(-(l as i32)))).collect();
    let increments: Vec<f64> = partial.windows(2).map(|w| w[1] - w[0]).collect();
    let scales: Vec<f64> = (1..=levels).map(|l| (1.0 / (eps0 * 2f64.powf(-(l as f64) + 0.5))).ln()).collect();
    let numeric = divergence_rule(&increments, &scales, &mut res.fitted);
    res.numeric = numeric;
    res.verdict = numeric;
    res.scales = (0..=levels).map(|l| eps0 * 2f64.powi(-(l as i32))).collect();
    res.sequence = partial;
    res.with_symbolic(symbolic)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthMode {
    Log,
    Loglog,
}

/// Boundedness of `k(r) / log(1/r)` (or `/ (log(1/r) log log(1/r))`).
pub fn check_growth(profile: &RadialProfile, mode: GrowthMode) -> CriterionResult {
    let name = match mode {
        GrowthMode::Log => "log",
        GrowthMode::Loglog => "loglog",
    };
    let mut res = CriterionResult::new(name, Verdict::Inconclusive);
    res.point = Some(profile.center);
    // Dyadic radii only: every eighth radius from the largest downwards.
    let n = profile.radii.len();
    let mut pts: Vec<(f64, f64)> = (0..n)
        .rev()
        .step_by(8)
        .map(|k| (profile.radii[k], profile.circle_mean[k]))
        .filter(|&(r, _)| {
            let l = (1.0 / r).ln();
            l > 0.0 && (mode == GrowthMode::Log || l.ln() > 0.0)
        })
        .collect();
    pts.reverse();
    if pts.len() < 6 {
        res.note = "fewer than 6 usable radii".into();
        return res;
    }
    let bound = |r: f64| {
        let l = (1.0 / r).ln();
        match mode {
            GrowthMode::Log => l,
            GrowthMode::Loglog => l * l.ln(),
        }
    };
    res.scales = pts.iter().map(|p| p.0).collect();
    res.sequence = pts.iter().map(|&(r, k)| k / bound(r)).collect();
    let last: Vec<(f64, f64)> = pts[..6].to_vec();
    if last.iter().any(|&(r, k)| !(k / bound(r)).is_finite() || k <= 0.0) {
        res.numeric = Verdict::Fail;
        res.verdict = Verdict::Fail;
        return res;
    }
    let x: Vec<f64> = last.iter().map(|&(r, _)| (1.0 / r).ln().ln()).collect();
    let y: Vec<f64> = last.iter().map(|&(r, k)| (k / bound(r)).ln()).collect();
    let gamma = linear_fit(&x, &y).0;
    res.fitted.insert("gamma".into(), gamma);
    let v = if gamma <= 0.1 {
        Verdict::Pass
    } else if gamma >= 0.3 {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    };
    res.numeric = v;
    res.verdict = v;
    res
}

/// Polar quadrature samples of a disk: `(weight, K or None)`.
fn disk_samples(source: &dyn DilatationSource, c: C64, radius: f64) -> Vec<(f64, Option<f64>)> {
    const SHELLS: i32 = 12;
    const ANGLES: usize = 64;
    let (x, w) = gauss_legendre(8);
    let mut out = Vec::with_capacity((SHELLS as usize + 1) * 8 * ANGLES);
    let mut edges: Vec<(f64, f64)> = (0..SHELLS).map(|s| (radius * 2f64.powi(-s - 1), radius * 2f64.powi(-s))).collect();
    edges.push((0.0, radius * 2f64.powi(-SHELLS)));
    for (a, b) in edges {
        for (xi, wi) in x.iter().zip(&w) {
            let r = 0.5 * (a + b) + 0.5 * (b - a) * xi;
            let wr = 0.5 * (b - a) * wi * r * 2.0 * PI / ANGLES as f64;
            for t in 0..ANGLES {
                let z = c + C64::from_polar(r, (t as f64 + 0.5) * 2.0 * PI / ANGLES as f64);
                out.push((wr, source.k_at(z)));
            }
        }
    }
    out
}

/// Mean of `K` and mean oscillation `|K - mean|` over `B(c, r)` intersected
/// with the domain. `None` when the intersection is empty.
pub fn disk_mean_oscillation(source: &dyn DilatationSource, c: C64, radius: f64) -> Option<(f64, f64)> {
    let s = disk_samples(source, c, radius);
    let area: f64 = s.iter().filter(|p| p.1.is_some()).map(|p| p.0).sum();
    if area <= 0.0 {
        return None;
    }
    let mean = s.iter().filter_map(|p| p.1.map(|k| p.0 * k)).sum::<f64>() / area;
    let osc = s.iter().filter_map(|p| p.1.map(|k| p.0 * (k - mean).abs())).sum::<f64>() / area;
    Some((mean, osc))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OscillationMode {
    Fmo,
    BmoLocal,
    LimsupMean,
}

/// Bounded mean oscillation / bounded means on shrinking disks about `z0`.
pub fn check_mean_oscillation(source: &dyn DilatationSource, z0: C64, mode: OscillationMode, opts: &CriteriaOptions) -> CriterionResult {
    let name = match mode {
        OscillationMode::Fmo => "fmo",
        OscillationMode::BmoLocal => "bmo",
        OscillationMode::LimsupMean => "limsup",
    };
    let mut res = CriterionResult::new(name, Verdict::Inconclusive);
    res.point = Some(z0);
    let levels = usable_levels(source, opts);
    if let Some(h) = source.resolution() {
        if PI * opts.eps0 * opts.eps0 / (h * h) < 100.0 {
            res.note = "coarsest disk has fewer than 100 cells".into();
            return res;
        }
    }
    if levels + 1 < 6 {
        res.note = "fewer than 6 resolvable dyadic levels".into();
        return res;
    }
    let offsets: Vec<(C64, f64)> = {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        (0..opts.subdisks)
            .map(|_| {
                let r = rng.random::<f64>().sqrt();
                let t = rng.random::<f64>() * 2.0 * PI;
                let s = 0.25 + 0.75 * rng.random::<f64>();
                (C64::from_polar(r, t), s)
            })
            .collect()
    };
    let mut values = Vec::with_capacity(levels + 1);
    for j in 0..=levels {
        let eps = opts.eps0 * 2f64.powi(-(j as i32));
        let v = match mode {
            OscillationMode::Fmo => disk_mean_oscillation(source, z0, eps).map(|p| p.1),
            OscillationMode::LimsupMean => disk_mean_oscillation(source, z0, eps).map(|p| p.0),
            OscillationMode::BmoLocal => offsets
                .iter()
                .filter_map(|&(u, s)| disk_mean_oscillation(source, z0 + u * (2.0 * eps), s * eps).map(|p| p.1))
                .reduce(f64::max),
        };
        values.push(v.unwrap_or(f64::NAN));
    }
    res.scales = (0..=levels).map(|j| j as f64).collect();
    res.sequence = values.clone();
    let k = values.len();
    let tail = &values[k - 6..];
    if tail.iter().any(|v| v.is_nan()) {
        res.note = "empty disk intersection".into();
        return res;
    }
    if !tail[5].is_finite() {
        res.numeric = Verdict::Fail;
        res.verdict = Verdict::Fail;
        return res;
    }
    let x: Vec<f64> = res.scales[k - 6..].to_vec();
    let slope = linear_fit(&x, tail).0;
    res.fitted.insert("slope".into(), slope);
    let v = if slope <= 0.05 { Verdict::Pass } else { Verdict::Fail };
    res.numeric = v;
    res.verdict = v;
    res
}

/// Test functions `psi` for the calibrated integral condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TestFunctionFamily {
    InverseT,
    InverseTLog,
    /// `(t, psi(t))` samples with increasing `t`.
    CustomTable { table: Vec<(f64, f64)> },
}

impl TestFunctionFamily {
    pub fn psi(&self, t: f64) -> f64 {
        match self {
            TestFunctionFamily::InverseT => 1.0 / t,
            TestFunctionFamily::InverseTLog => 1.0 / (t * (1.0 / t).ln()),
            TestFunctionFamily::CustomTable { table } => {
                let lt = t.ln();
                for w in table.windows(2) {
                    if t >= w[0].0 && t <= w[1].0 {
                        let s = (lt - w[0].0.ln()) / (w[1].0.ln() - w[0].0.ln());
                        return (w[0].1.ln() + s * (w[1].1.ln() - w[0].1.ln())).exp();
                    }
                }
                f64::NAN
            }
        }
    }

    /// `I(eps) = int_eps^eps0 psi(t) dt`.
    pub fn calibration(&self, eps: f64, eps0: f64) -> f64 {
        match self {
            TestFunctionFamily::InverseT => (eps0 / eps).ln(),
            TestFunctionFamily::InverseTLog => (1.0 / eps).ln().ln() - (1.0 / eps0).ln().ln(),
            TestFunctionFamily::CustomTable { .. } => {
                let rule = gauss_legendre(16);
                let (a, b) = (eps.ln(), eps0.ln());
                let steps = ((b - a) / 0.25).ceil().max(1.0) as usize;
                (0..steps)
                    .map(|k| {
                        let lo = a + (b - a) * k as f64 / steps as f64;
                        let hi = a + (b - a) * (k + 1) as f64 / steps as f64;
                        gauss_integrate(|s| self.psi(s.exp()) * s.exp(), lo, hi, &rule)
                    })
                    .sum()
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TestFunctionFamily::InverseT => "inverse-t",
            TestFunctionFamily::InverseTLog => "inverse-t-log",
            TestFunctionFamily::CustomTable { .. } => "custom-table",
        }
    }
}

/// `int_{eps < |z - z0| < eps0} K psi^2 dm` over one dyadic shell.
fn shell_integral(source: &dyn DilatationSource, z0: C64, a: f64, b: f64, family: &TestFunctionFamily) -> f64 {
    const ANGLES: usize = 64;
    let (x, w) = gauss_legendre(8);
    let mut s = 0.0;
    for (xi, wi) in x.iter().zip(&w) {
        // Nodes in log r for the 1/r-type weights.
        let (la, lb) = (a.ln(), b.ln());
        let lr = 0.5 * (la + lb) + 0.5 * (lb - la) * xi;
        let r = lr.exp();
        let psi = family.psi(r);
        let ring: f64 = (0..ANGLES)
            .map(|t| source.k_or_zero(z0 + C64::from_polar(r, (t as f64 + 0.5) * 2.0 * PI / ANGLES as f64)))
            .sum::<f64>()
            * 2.0
            * PI
            / ANGLES as f64;
        s += 0.5 * (lb - la) * wi * ring * psi * psi * r * r;
    }
    s
}

/// `J(eps) / I(eps)^2 -> 0` along dyadic `eps`.
pub fn check_calibrated_integral(
    source: &dyn DilatationSource,
    z0: C64,
    family: &TestFunctionFamily,
    opts: &CriteriaOptions,
) -> Result<CriterionResult> {
    let name = format!("calibrated:{}", family.name());
    let mut res = CriterionResult::new(&name, Verdict::Inconclusive);
    res.point = Some(z0);
    let levels = usable_levels(source, opts);
    let eps0 = opts.eps0;
    let mut ratios = Vec::new();
    let mut cal = Vec::new();
    let mut j_acc = 0.0;
    for j in 1..=levels {
        let eps = eps0 * 2f64.powi(-(j as i32));
        let i = family.calibration(eps, eps0);
        if !(i.is_finite() && i > 0.0) {
            return Err(Error::Family(format!("I({eps:e}) = {i} is not finite and positive")));
        }
        j_acc += shell_integral(source, z0, eps, 2.0 * eps, family);
        cal.push(i);
        ratios.push(j_acc / (i * i));
    }
    res.scales = (1..=levels).map(|j| eps0 * 2f64.powi(-(j as i32))).collect();
    res.sequence = ratios.clone();
    if ratios.len() < 6 {
        res.note = "fewer than 6 resolvable levels".into();
        return Ok(res);
    }
    let k = ratios.len();
    let tail = &ratios[k - 6..];
    if tail.iter().any(|v| !v.is_finite()) {
        res.numeric = Verdict::Fail;
        res.verdict = Verdict::Fail;
        return Ok(res);
    }
    let decreasing = tail.windows(2).all(|w| w[1] < w[0]);
    let inv: Vec<f64> = cal[k - 6..].iter().map(|i| 1.0 / i).collect();
    let (_, limit) = linear_fit(&inv, tail);
    let final_ratio = tail[5];
    res.fitted.insert("limit".into(), limit);
    res.fitted.insert("final_over_initial".into(), final_ratio / ratios[0]);
    let v = if decreasing && (final_ratio < 0.1 * ratios[0] || limit <= 0.1 * final_ratio) {
        Verdict::Pass
    } else if tail[5] >= tail[0] || limit >= 0.5 * final_ratio {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    };
    res.numeric = v;
    res.verdict = v;
    Ok(res)
}

/// Convex increasing function for the integrability condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OrliczPhi {
    Exp { alpha: f64 },
    Power { p: f64 },
    /// `t log^q(e + t)`.
    TLogQ { q: f64 },
    /// `(t, Phi(t))` samples with increasing `t`.
    Table { table: Vec<(f64, f64)> },
}

impl OrliczPhi {
    /// Parse `exp:a`, `power:p` or `tlogq:q`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, arg) = spec.split_once(':').ok_or_else(|| Error::Orlicz(format!("expected kind:value, got `{spec}`")))?;
        let x: f64 = arg.parse().map_err(|_| Error::Orlicz(format!("bad number `{arg}`")))?;
        match kind {
            "exp" if x > 0.0 => Ok(OrliczPhi::Exp { alpha: x }),
            "power" if x >= 1.0 => Ok(OrliczPhi::Power { p: x }),
            "tlogq" if x >= 0.0 => Ok(OrliczPhi::TLogQ { q: x }),
            "exp" | "power" | "tlogq" => Err(Error::Orlicz(format!("parameter {x} out of range for {kind}"))),
            other => Err(Error::Orlicz(format!("unknown kind `{other}`"))),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            OrliczPhi::Exp { alpha } => (alpha * t).exp(),
            OrliczPhi::Power { p } => t.powf(*p),
            OrliczPhi::TLogQ { q } => t * (E + t).ln().powf(*q),
            OrliczPhi::Table { table } => {
                if t <= table[0].0 {
                    return table[0].1;
                }
                for w in table.windows(2) {
                    if t <= w[1].0 {
                        let s = (t - w[0].0) / (w[1].0 - w[0].0);
                        return w[0].1 + s * (w[1].1 - w[0].1);
                    }
                }
                let n = table.len();
                let slope = (table[n - 1].1 - table[n - 2].1) / (table[n - 1].0 - table[n - 2].0);
                table[n - 1].1 + slope * (t - table[n - 1].0)
            }
        }
    }

    /// Inverse on the increasing branch.
    pub fn inverse(&self, tau: f64) -> f64 {
        match self {
            OrliczPhi::Exp { alpha } => tau.ln() / alpha,
            OrliczPhi::Power { p } => tau.powf(1.0 / p),
            _ => {
                let (mut lo, mut hi) = (0.0, 1.0);
                while self.eval(hi) < tau {
                    hi *= 2.0;
                    if !hi.is_finite() {
                        return f64::INFINITY;
                    }
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.eval(mid) < tau {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }

    /// Closed-form verdict on `int^inf dtau / (tau Phi^-1(tau)) = inf`.
    pub fn symbolic_divergence(&self) -> Option<bool> {
        match self {
            OrliczPhi::Exp { .. } => Some(true),
            OrliczPhi::Power { .. } => Some(false),
            OrliczPhi::TLogQ { .. } => Some(false),
            OrliczPhi::Table { .. } => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            OrliczPhi::Exp { alpha } => format!("exp:{alpha}"),
            OrliczPhi::Power { p } => format!("power:{p}"),
            OrliczPhi::TLogQ { q } => format!("tlogq:{q}"),
            OrliczPhi::Table { .. } => "table".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrliczSpec {
    pub phi: OrliczPhi,
    /// Lower limit of the calibration integral; defaults to `Phi(0) + 1`.
    #[serde(default)]
    pub delta_star: Option<f64>,
}

impl OrliczSpec {
    pub fn new(phi: OrliczPhi) -> Self {
        Self { phi, delta_star: None }
    }

    /// Monotonicity and convexity on a sample set.
    pub fn validate(&self) -> Result<f64> {
        let ts: Vec<f64> = match &self.phi {
            OrliczPhi::Table { table } => {
                if table.len() < 3 || table.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::Orlicz("table needs 3+ points with increasing t".into()));
                }
                table.iter().map(|p| p.0).collect()
            }
            _ => (0..=500).map(|k| k as f64 * 0.05).collect(),
        };
        let v: Vec<f64> = ts.iter().map(|&t| self.phi.eval(t)).collect();
        let scale = v.iter().fold(1.0f64, |a, b| a.max(b.abs()));
        if v.windows(2).any(|w| w[1] < w[0] - 1e-12 * scale) {
            return Err(Error::Orlicz("Phi is not nondecreasing".into()));
        }
        for k in 1..ts.len() - 1 {
            let s1 = (v[k] - v[k - 1]) / (ts[k] - ts[k - 1]);
            let s2 = (v[k + 1] - v[k]) / (ts[k + 1] - ts[k]);
            if s2 - s1 < -1e-12 * scale {
                return Err(Error::Orlicz(format!("Phi is not convex near t = {}", ts[k])));
            }
        }
        let phi0 = self.phi.eval(0.0);
        let delta = self.delta_star.unwrap_or(phi0 + 1.0);
        if delta <= phi0 {
            return Err(Error::Orlicz(format!("delta* = {delta} must exceed Phi(0) = {phi0}")));
        }
        Ok(delta)
    }
}

/// Cell-centred sum of `Phi(K)` over the source region on an `n x n` grid.
fn phi_integral(source: &dyn DilatationSource, phi: &OrliczPhi, n: usize) -> f64 {
    let (lo, hi) = source.region();
    let (w, h) = ((hi.re - lo.re) / n as f64, (hi.im - lo.im) / n as f64);
    let mut s = 0.0;
    for j in 0..n {
        for i in 0..n {
            let z = lo + C64::new((i as f64 + 0.5) * w, (j as f64 + 0.5) * h);
            if let Some(k) = source.k_at(z) {
                s += phi.eval(k);
            }
        }
    }
    s * w * h
}

/// Integrability of `Phi(K)` together with divergence of
/// `int_{delta*}^inf dtau / (tau Phi^-1(tau))`.
pub fn check_orlicz(source: &dyn DilatationSource, spec: &OrliczSpec) -> Result<CriterionResult> {
    let delta = spec.validate()?;
    let mut res = CriterionResult::new(&format!("orlicz:{}", spec.phi.label()), Verdict::Inconclusive);
    let n = match source.resolution() {
        Some(h) => {
            let (lo, hi) = source.region();
            (((hi.re - lo.re) / h).round() as usize).clamp(64, 1024)
        }
        None => 256,
    };
    let coarse = phi_integral(source, &spec.phi, n);
    let fine = phi_integral(source, &spec.phi, 2 * n);
    let integrable = coarse.is_finite() && fine.is_finite() && (fine - coarse).abs() < 0.1 * fine.abs();
    res.fitted.insert("integral_coarse".into(), coarse);
    res.fitted.insert("integral_fine".into(), fine);
    // Calibration integral in s = log tau over dyadic T = delta 2^n.
    let rule = gauss_legendre(16);
    let levels = 64;
    let mut partial = vec![0.0];
    for l in 0..levels {
        let a = delta.ln() + l as f64 * 2f64.ln();
        let piece = gauss_integrate(|s| 1.0 / spec.phi.inverse(s.exp()), a, a + 2f64.ln(), &rule);
        partial.push(partial[l] + piece);
    }
    let increments: Vec<f64> = partial.windows(2).map(|w| w[1] - w[0]).collect();
    let scales: Vec<f64> = (0..levels).map(|l| delta.ln() + (l as f64 + 0.5) * 2f64.ln()).collect();
    let numeric_b = divergence_rule(&increments, &scales, &mut res.fitted);
    let symbolic_b = spec.phi.symbolic_divergence().map(|d| if d { Verdict::Pass } else { Verdict::Fail });
    let combine = |b: Verdict| {
        if !integrable {
            Verdict::Fail
        } else {
            b
        }
    };
    res.scales = (0..=levels).map(|l| delta * 2f64.powi(l as i32)).collect();
    res.sequence = partial;
    res.numeric = combine(numeric_b);
    res.verdict = res.numeric;
    res.note = format!("integrable: {integrable}");
    Ok(res.clone().with_symbolic(symbolic_b.map(combine)))
}

/// Which checks to run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "criterion", rename_all = "kebab-case")]
pub enum CriterionKind {
    Divergence,
    Log,
    Loglog,
    Fmo,
    Bmo,
    Limsup,
    Calibrated { family: TestFunctionFamily },
    Orlicz { spec: OrliczSpec },
}

impl CriterionKind {
    /// Parse a CLI criterion name.
    pub fn parse(name: &str, phi: Option<&str>) -> Result<Vec<Self>> {
        Ok(match name {
            "divergence" => vec![Self::Divergence],
            "log" => vec![Self::Log],
            "loglog" => vec![Self::Loglog],
            "fmo" => vec![Self::Fmo],
            "bmo" => vec![Self::Bmo],
            "limsup" => vec![Self::Limsup],
            "calibrated" => vec![
                Self::Calibrated { family: TestFunctionFamily::InverseT },
                Self::Calibrated { family: TestFunctionFamily::InverseTLog },
            ],
            "orlicz" => vec![Self::Orlicz { spec: OrliczSpec::new(OrliczPhi::parse(phi.unwrap_or("exp:1"))?) }],
            "all" => {
                let mut v = vec![Self::Divergence, Self::Log, Self::Loglog, Self::Fmo, Self::Bmo, Self::Limsup];
                v.extend(Self::parse("calibrated", None)?);
                v.extend(Self::parse("orlicz", phi)?);
                v
            }
            other => return Err(Error::Config(format!("unknown criterion `{other}`"))),
        })
    }
}

/// Run the selected checks at every point.
pub fn run_criteria(source: &dyn DilatationSource, points: &[C64], kinds: &[CriterionKind], opts: &CriteriaOptions) -> Result<CriteriaReport> {
    let mut report = CriteriaReport { points: points.to_vec(), grid_spacing: source.resolution(), ..Default::default() };
    for kind in kinds {
        if let CriterionKind::Orlicz { spec } = kind {
            report.push(check_orlicz(source, spec)?);
            continue;
        }
        for &z0 in points {
            let r = match kind {
                CriterionKind::Divergence => check_divergence_integral(&criteria_profile(source, z0, opts)?, opts.eps0),
                CriterionKind::Log => check_growth(&criteria_profile(source, z0, opts)?, GrowthMode::Log),
                CriterionKind::Loglog => check_growth(&criteria_profile(source, z0, opts)?, GrowthMode::Loglog),
                CriterionKind::Fmo => check_mean_oscillation(source, z0, OscillationMode::Fmo, opts),
                CriterionKind::Bmo => check_mean_oscillation(source, z0, OscillationMode::BmoLocal, opts),
                CriterionKind::Limsup => check_mean_oscillation(source, z0, OscillationMode::LimsupMean, opts),
                CriterionKind::Calibrated { family } => check_calibrated_integral(source, z0, family, opts)?,
                CriterionKind::Orlicz { .. } => unreachable!(),
            };
            report.push(r);
        }
    }
    Ok(report)
}
