//! Composed solutions `f = h o g` of the Dirichlet problem and their
//! boundary verification.
//!
//! For simply connected domains `g = R* o F`, where `F` is the principal
//! solution and `R*` maps the image `F(D)` onto the disk. Boundary data are
//! functions of the prime end, i.e. of the chart angle, and are carried to
//! the disk through the boundary correspondence of `g`.

use crate::conformal::{zipper_map, ConformalMap};
use crate::field::{sample_mu, Lattice, MuField, MuProfile};
use crate::geometry::{approach_point, catalog_domain, ApproachPath, DomainKind, DomainSpec, PrimeEndChart};
use crate::harmonic::{annulus_dirichlet, conjugate_period, contour_integral, multivalent_eval, sample_angles, AnnulusHarmonic, BoundaryData, SchwarzSeries};
use crate::numeric::{percentile, wrap_angle, wrap_positive};
use crate::solver::{principal_solution, QcMap, SolverOptions};
use crate::{Error, Result, C64};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Boundary data as a function of the prime end.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "kebab-case")]
pub enum PhiSpec {
    /// `a0 + sum a_n cos(n theta) + b_n sin(n theta)`, from `[a0, a1, b1, a2, b2, ...]`.
    Fourier { coeffs: Vec<f64> },
    /// `hi` on the upper side of the slit, `lo` on the lower side, with a
    /// smooth ramp of half-width `ramp` around the tip and a sine blend along
    /// the circle.
    SlitJump { hi: f64, lo: f64, ramp: f64 },
    /// `a + b x + c y` at the impression point: a plane-point function.
    PlaneLinear { a: f64, b: f64, c: f64 },
    Constant { value: f64 },
    /// Constant on each circle of an annulus.
    Annulus { inner: f64, outer: f64 },
    /// Periodic linear interpolation of `(theta, value)` samples.
    Table { theta: Vec<f64>, values: Vec<f64> },
}

impl PhiSpec {
    pub fn from_id(id: &str, params: &[f64]) -> Result<Self> {
        let bad = |reason: &str| Error::InvalidParams { id: id.into(), reason: reason.into() };
        match id {
            "fourier" => {
                if params.is_empty() || params.len() % 2 == 0 {
                    return Err(bad("expected [a0, a1, b1, ...] with an odd count"));
                }
                Ok(PhiSpec::Fourier { coeffs: params.to_vec() })
            }
            "slit-jump" => match params {
                [] => Ok(PhiSpec::SlitJump { hi: 1.0, lo: -1.0, ramp: 0.05 }),
                [hi, lo] => Ok(PhiSpec::SlitJump { hi: *hi, lo: *lo, ramp: 0.05 }),
                [hi, lo, ramp] if *ramp > 0.0 && *ramp < PI / 2.0 => Ok(PhiSpec::SlitJump { hi: *hi, lo: *lo, ramp: *ramp }),
                _ => Err(bad("expected [hi, lo] or [hi, lo, ramp] with 0 < ramp < pi/2")),
            },
            "plane-linear" => match params {
                [a, b, c] => Ok(PhiSpec::PlaneLinear { a: *a, b: *b, c: *c }),
                _ => Err(bad("expected [a, b, c]")),
            },
            "constant" => match params {
                [v] => Ok(PhiSpec::Constant { value: *v }),
                _ => Err(bad("expected [value]")),
            },
            "annulus" => match params {
                [inner, outer] => Ok(PhiSpec::Annulus { inner: *inner, outer: *outer }),
                _ => Err(bad("expected [inner, outer]")),
            },
            other => Err(Error::UnknownId(other.into())),
        }
    }

    /// Read `theta,value` rows (header optional).
    pub fn table_from_csv(text: &str) -> Result<Self> {
        let mut theta = Vec::new();
        let mut values = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed: Option<Vec<f64>> = cols.iter().map(|c| c.parse().ok()).collect();
            match parsed {
                Some(v) if v.len() == 2 => {
                    theta.push(wrap_positive(v[0]));
                    values.push(v[1]);
                }
                None if theta.is_empty() => continue,
                _ => return Err(Error::InvalidParams { id: "phi csv".into(), reason: format!("bad row `{line}`") }),
            }
        }
        if theta.len() < 2 || theta.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParams { id: "phi csv".into(), reason: "need 2+ rows with increasing theta".into() });
        }
        Ok(PhiSpec::Table { theta, values })
    }

    /// `phi(P)` for the prime end at chart angle `theta` on `circle`.
    pub fn value(&self, chart: &PrimeEndChart, circle: usize, theta: f64) -> Result<f64> {
        Ok(match self {
            PhiSpec::Fourier { coeffs } => {
                let mut s = coeffs[0];
                for (n, ab) in coeffs[1..].chunks(2).enumerate() {
                    let k = (n + 1) as f64;
                    s += ab[0] * (k * theta).cos() + ab[1] * (k * theta).sin();
                }
                s
            }
            PhiSpec::SlitJump { hi, lo, ramp } => {
                let t = wrap_angle(theta);
                let (mid, half) = ((hi + lo) / 2.0, (hi - lo) / 2.0);
                if t.abs() < *ramp {
                    mid + half * (PI * t / (2.0 * ramp)).sin()
                } else if t.abs() <= PI / 2.0 {
                    if t > 0.0 {
                        *hi
                    } else {
                        *lo
                    }
                } else {
                    mid + half * wrap_positive(theta).sin()
                }
            }
            PhiSpec::PlaneLinear { a, b, c } => {
                let p = chart.boundary_point(circle, theta)?;
                a + b * p.re + c * p.im
            }
            PhiSpec::Constant { value } => *value,
            PhiSpec::Annulus { inner, outer } => {
                if circle == 0 {
                    *outer
                } else {
                    *inner
                }
            }
            PhiSpec::Table { theta: ts, values } => {
                let t = wrap_positive(theta);
                let n = ts.len();
                let k = ts.partition_point(|&x| x <= t);
                let (i0, i1) = if k == 0 || k == n { (n - 1, 0) } else { (k - 1, k) };
                let (t0, mut t1) = (ts[i0], ts[i1]);
                let mut tt = t;
                if t1 <= t0 {
                    t1 += 2.0 * PI;
                    if tt < t0 {
                        tt += 2.0 * PI;
                    }
                }
                let s = (tt - t0) / (t1 - t0);
                values[i0] + s * (values[i1] - values[i0])
            }
        })
    }

    /// Samples at `m` equispaced chart angles on every circle of the chart.
    pub fn sample(&self, chart: &PrimeEndChart, m: usize) -> Result<BoundaryData> {
        let outer: Result<Vec<f64>> = sample_angles(m).map(|t| self.value(chart, 0, t)).collect();
        if chart.circle_count > 1 {
            let inner: Result<Vec<f64>> = sample_angles(m).map(|t| self.value(chart, 1, t)).collect();
            BoundaryData::annulus(inner?, outer?)
        } else {
            BoundaryData::disk(outer?)
        }
    }
}

/// Problem statement: domain with its chart, coefficient, prime-end data.
#[derive(Clone, Debug)]
pub struct DirichletProblem {
    pub domain: DomainSpec,
    pub chart: PrimeEndChart,
    pub mu: MuField,
    pub phi: PhiSpec,
    /// Boundary samples `M` for the harmonic step.
    pub samples: usize,
    /// Boundary points used to trace the image domain.
    pub trace_points: usize,
    pub solver: SolverOptions,
    /// Verification tolerance.
    pub eps: f64,
}

impl DirichletProblem {
    pub fn new(domain: DomainSpec, chart: PrimeEndChart, mu: MuField, phi: PhiSpec, samples: usize) -> Self {
        Self {
            domain,
            chart,
            mu,
            phi,
            samples,
            trace_points: 2048,
            solver: SolverOptions::default(),
            eps: 1e-2,
        }
    }

    /// Catalog domain, coefficient sampled on an `n x n` lattice.
    pub fn catalog(domain_id: &str, params: &[f64], profile: &MuProfile, n: usize, trunc: f64, phi: PhiSpec, samples: usize) -> Result<Self> {
        let (domain, chart) = catalog_domain(domain_id, params)?;
        let mu = sample_mu(profile, &domain, n, trunc)?;
        let mut p = Self::new(domain, chart, mu, phi, samples);
        p.solver.trunc = trunc;
        Ok(p)
    }

    /// `phi` sampled in the chart.
    pub fn data(&self) -> Result<BoundaryData> {
        self.phi.sample(&self.chart, self.samples)
    }
}

/// Solver statistics kept with a composed solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSummary {
    pub iterations: usize,
    pub converged: bool,
    pub increment: f64,
    pub max_contraction: f64,
    pub margin_ok: bool,
}

impl SolverSummary {
    fn of(map: &QcMap) -> Self {
        Self {
            iterations: map.iterations,
            converged: map.converged,
            increment: map.residual,
            max_contraction: map.contraction().into_iter().fold(0.0, f64::max),
            margin_ok: map.margin_ok,
        }
    }
}

/// `f = h o R* o F` on a simply connected domain.
#[derive(Clone, Debug)]
pub struct RegularSolution {
    pub chart: PrimeEndChart,
    /// `None` when the coefficient vanishes and `F` is the identity.
    pub map: Option<QcMap>,
    /// Map of the disk onto `F(D)`; `None` means the chart itself.
    pub rstar: Option<ConformalMap>,
    pub h: SchwarzSeries,
    /// Data carried to the unit circle.
    pub transported: BoundaryData,
    pub solver: Option<SolverSummary>,
}

impl RegularSolution {
    /// `g(z) = R*(F(z))` in the unit disk.
    pub fn g(&self, z: C64) -> Result<C64> {
        match (&self.map, &self.rstar) {
            (Some(f), Some(r)) => Ok(r.inverse(f.eval(z))),
            _ => Ok(self.chart.reference_map()?.inverse(z)),
        }
    }

    pub fn eval(&self, z: C64) -> Result<C64> {
        Ok(self.h.eval(self.g(z)?))
    }

    pub fn re(&self, z: C64) -> Result<f64> {
        Ok(self.eval(z)?.re)
    }
}

/// Angles `theta(alpha_m)` at `m` equispaced `alpha`, from a monotone
/// table of `(theta_j, alpha_j)` pairs given in increasing `theta`, by
/// cubic Hermite interpolation with centred slopes.
fn resample_monotone(theta: &[f64], alpha: &[f64], m: usize) -> Result<Vec<f64>> {
    let n = theta.len();
    let mut a = Vec::with_capacity(n + 1);
    a.push(alpha[0]);
    for k in 1..n {
        let step = wrap_angle(alpha[k] - alpha[k - 1]);
        if step <= 0.0 {
            return Err(Error::Polyline(format!(
                "image boundary correspondence is not monotone at sample {k}; suspect the truncation level or the grid"
            )));
        }
        a.push(a[k - 1] + step);
    }
    let closing = wrap_angle(alpha[0] - alpha[n - 1]);
    let total = a[n - 1] - a[0] + closing;
    if closing <= 0.0 || (total - 2.0 * PI).abs() > 1e-6 {
        return Err(Error::Polyline(format!("image boundary winds {total:.6} instead of 2 pi")));
    }
    let mut t: Vec<f64> = theta.to_vec();
    t.push(theta[0] + 2.0 * PI);
    a.push(alpha[0] + 2.0 * PI);
    // Centred slopes of theta(alpha) for cubic Hermite interpolation.
    let slope = |k: usize| {
        let (ip, tp) = if k == 0 { (a[n - 1] - 2.0 * PI, t[n - 1] - 2.0 * PI) } else { (a[k - 1], t[k - 1]) };
        let (inx, tn) = if k >= n - 1 { (a[(k + 1) % n] + 2.0 * PI, t[(k + 1) % n] + 2.0 * PI) } else { (a[k + 1], t[k + 1]) };
        (tn - tp) / (inx - ip)
    };
    let mut out = Vec::with_capacity(m);
    for target in sample_angles(m) {
        let mut x = target;
        while x < a[0] {
            x += 2.0 * PI;
        }
        while x >= a[n] {
            x -= 2.0 * PI;
        }
        let k = a.partition_point(|&v| v <= x).clamp(1, n);
        let (a0, a1) = (a[k - 1], a[k]);
        let d = a1 - a0;
        let s = (x - a0) / d;
        let (m0, m1) = (slope(k - 1) * d, slope(k) * d);
        let (s2, s3) = (s * s, s * s * s);
        out.push(
            (2.0 * s3 - 3.0 * s2 + 1.0) * t[k - 1] + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * t[k] + (s3 - s2) * m1,
        );
    }
    Ok(out)
}

/// Regular solution with the image anchor `F(psi(0))`.
pub fn solve_regular(problem: &DirichletProblem) -> Result<RegularSolution> {
    solve_regular_with_anchor(problem, None)
}

/// Regular solution; `anchor` overrides the normalisation `R*(anchor) = 0`.
pub fn solve_regular_with_anchor(problem: &DirichletProblem, anchor: Option<C64>) -> Result<RegularSolution> {
    if !problem.domain.is_simply_connected() {
        return Err(Error::Unsupported(format!("domain `{}` is not simply connected", problem.domain.id)));
    }
    let chart = problem.chart.clone();
    if problem.mu.is_zero() && anchor.is_none() {
        let transported = problem.data()?;
        return Ok(RegularSolution {
            h: SchwarzSeries::new(&transported),
            chart,
            map: None,
            rstar: None,
            transported,
            solver: None,
        });
    }
    let f = principal_solution(&problem.mu, problem.solver)?;
    let b = problem.trace_points;
    let thetas: Vec<f64> = sample_angles(b).collect();
    let mut image = Vec::with_capacity(b);
    for &t in &thetas {
        image.push(f.eval(chart.boundary_point(0, t)?));
    }
    let anchor = anchor.unwrap_or(f.eval(chart.point(0, 0.0, 0.0)?));
    let rstar = zipper_map(&image, anchor).map_err(|e| match e {
        Error::Polyline(msg) => Error::Polyline(format!("traced image boundary rejected ({msg}); suspect the truncation level or the grid")),
        other => other,
    })?;
    let alpha = rstar.vertex_angles.clone().ok_or_else(|| Error::Polyline("zipper map without vertex angles".into()))?;
    let resampled = resample_monotone(&thetas, &alpha, problem.samples)?;
    let values: Result<Vec<f64>> = resampled.iter().map(|&t| problem.phi.value(&chart, 0, t)).collect();
    let transported = BoundaryData::disk(values?)?;
    Ok(RegularSolution {
        h: SchwarzSeries::new(&transported),
        chart,
        solver: Some(SolverSummary::of(&f)),
        map: Some(f),
        rstar: Some(rstar),
        transported,
    })
}

/// Discrete Beltrami residual of the composite map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositeReport {
    /// `||f_zbar - mu f_z|| / ||f_z||` over the probed nodes.
    pub residual: f64,
    pub nodes: usize,
    /// Share of probed nodes with `|h'| > 1e-6` and positive Jacobian.
    pub positive_fraction: f64,
    pub min_jacobian: f64,
    pub note: String,
}

/// Central differences of `f` at every `stride`-th lattice node at least
/// three spacings inside the domain.
pub fn composite_residual(solution: &RegularSolution, problem: &DirichletProblem, stride: usize) -> Result<CompositeReport> {
    let lat: &Lattice = &problem.mu.lattice;
    let h = lat.spacing();
    let (mut num, mut den) = (0.0, 0.0);
    let (mut nodes, mut checked, mut positive) = (0, 0, 0);
    let mut min_jac = f64::INFINITY;
    for j in (0..lat.n).step_by(stride.max(1)) {
        for i in (0..lat.n).step_by(stride.max(1)) {
            let z = lat.point(i, j);
            if !problem.domain.contains(z) || problem.domain.boundary_distance(z) < 3.0 * h {
                continue;
            }
            let fx = (solution.eval(z + h)? - solution.eval(z - h)?) / (2.0 * h);
            let fy = (solution.eval(z + C64::new(0.0, h))? - solution.eval(z - C64::new(0.0, h))?) / (2.0 * h);
            let iy = C64::new(0.0, 1.0) * fy;
            let (fz, fzb) = ((fx - iy) * 0.5, (fx + iy) * 0.5);
            let mu = problem.mu.values[lat.index(i, j)];
            num += (fzb - mu * fz).norm_sqr();
            den += fz.norm_sqr();
            nodes += 1;
            if solution.h.derivative(solution.g(z)?).norm() > 1e-6 {
                let jac = fz.norm_sqr() - fzb.norm_sqr();
                checked += 1;
                if jac > 0.0 {
                    positive += 1;
                }
                min_jac = min_jac.min(jac);
            }
        }
    }
    Ok(CompositeReport {
        residual: if den > 0.0 { (num / den).sqrt() } else { 0.0 },
        nodes,
        positive_fraction: if checked > 0 { positive as f64 / checked as f64 } else { 1.0 },
        min_jacobian: min_jac,
        note: "discreteness and openness are not decidable from grid data; only the Jacobian sign is checked".into(),
    })
}

/// Approach data for one prime end.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndReport {
    pub circle: usize,
    pub theta: f64,
    pub impression: C64,
    pub target: f64,
    pub radii: Vec<f64>,
    /// `Re f` along the approach path.
    pub values: Vec<f64>,
    /// Largest `|Re f - phi(P)|` over the last five approach points.
    pub raw_tail: f64,
    /// Richardson estimates `2 u_k - u_{k-1}` of the limit.
    pub extrapolated: Vec<f64>,
    /// Largest deviation of the last five estimates from `phi(P)`.
    pub tail_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub ends: Vec<EndReport>,
    pub p95: f64,
    pub max: f64,
    pub raw_p95: f64,
    pub eps: f64,
    pub pass: bool,
}

impl BoundaryReport {
    /// The report entry nearest to a chart angle.
    pub fn end_at(&self, circle: usize, theta: f64) -> Option<&EndReport> {
        self.ends
            .iter()
            .filter(|e| e.circle == circle)
            .min_by(|a, b| wrap_angle(a.theta - theta).abs().total_cmp(&wrap_angle(b.theta - theta).abs()))
    }
}

/// Evaluate one prime end along radii `1 - 2^-k`, `k = 3..12`.
pub fn approach_end(re_f: &dyn Fn(C64) -> Result<f64>, chart: &PrimeEndChart, phi: &PhiSpec, circle: usize, theta: f64) -> Result<EndReport> {
    let path = ApproachPath::dyadic(chart, circle, theta, 3, 12)?;
    let target = phi.value(chart, circle, theta)?;
    let mut values = Vec::with_capacity(path.radii.len());
    for k in 0..path.radii.len() {
        values.push(re_f(approach_point(&path, k)?)?);
    }
    let extrapolated: Vec<f64> = values.windows(2).map(|w| 2.0 * w[1] - w[0]).collect();
    let tail = |v: &[f64]| v[v.len().saturating_sub(5)..].iter().map(|u| (u - target).abs()).fold(0.0, f64::max);
    Ok(EndReport {
        circle,
        theta,
        impression: chart.boundary_point(circle, theta)?,
        target,
        radii: path.radii.clone(),
        raw_tail: tail(&values),
        tail_residual: tail(&extrapolated),
        values,
        extrapolated,
    })
}

/// Tail residuals at `count` equispaced prime ends on every circle.
pub fn verify_boundary(re_f: &dyn Fn(C64) -> Result<f64>, chart: &PrimeEndChart, phi: &PhiSpec, count: usize, eps: f64) -> Result<BoundaryReport> {
    let mut ends = Vec::new();
    for circle in 0..chart.circle_count {
        for theta in sample_angles(count) {
            ends.push(approach_end(re_f, chart, phi, circle, theta)?);
        }
    }
    let tails: Vec<f64> = ends.iter().map(|e| e.tail_residual).collect();
    let raws: Vec<f64> = ends.iter().map(|e| e.raw_tail).collect();
    let p95 = percentile(&tails, 0.95);
    Ok(BoundaryReport {
        p95,
        max: tails.iter().cloned().fold(0.0, f64::max),
        raw_p95: percentile(&raws, 0.95),
        eps,
        pass: p95 < eps,
        ends,
    })
}

/// Map of the plane with an inverse defined on its image.
pub trait PlaneMap {
    fn eval(&self, z: C64) -> C64;
    fn eval_inverse(&self, w: C64) -> Option<C64>;
}

impl PlaneMap for QcMap {
    fn eval(&self, z: C64) -> C64 {
        QcMap::eval(self, z)
    }

    fn eval_inverse(&self, w: C64) -> Option<C64> {
        self.inverse(w)
    }
}

/// `z + k conj(z)`.
#[derive(Clone, Copy, Debug)]
pub struct AffineMap {
    pub k: C64,
}

impl PlaneMap for AffineMap {
    fn eval(&self, z: C64) -> C64 {
        z + self.k * z.conj()
    }

    fn eval_inverse(&self, w: C64) -> Option<C64> {
        Some((w - self.k * w.conj()) / (1.0 - self.k.norm_sqr()))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct IdentityMap;

impl PlaneMap for IdentityMap {
    fn eval(&self, z: C64) -> C64 {
        z
    }

    fn eval_inverse(&self, w: C64) -> Option<C64> {
        Some(w)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtensionVerdict {
    ConsistentWithExtension,
    NotObserved,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtensionEnd {
    pub theta: f64,
    /// Image diameters of chart neighbourhoods, `k = 1..12`.
    pub forward: Vec<f64>,
    /// Preimage diameters of image balls of radius `2^-k`, `k = 4..12`.
    pub inverse: Vec<f64>,
    pub forward_ok: bool,
    pub inverse_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtensionReport {
    pub ends: Vec<ExtensionEnd>,
    pub eps: f64,
    pub probes: usize,
    pub inversion_failures: usize,
    pub verdict: ExtensionVerdict,
}

fn diameter(pts: &[C64]) -> f64 {
    let mut d: f64 = 0.0;
    for (k, a) in pts.iter().enumerate() {
        for b in &pts[k + 1..] {
            d = d.max((a - b).norm());
        }
    }
    d
}

fn decays(seq: &[f64], eps: f64) -> bool {
    seq.windows(2).all(|w| w[1] <= w[0]) && seq.last().is_some_and(|&d| d < eps)
}

/// Oscillation decay of `map` and of its inverse at `count` prime ends of
/// the outer circle.
pub fn verify_extension(map: &dyn PlaneMap, chart: &PrimeEndChart, count: usize, eps: f64) -> Result<ExtensionReport> {
    let mut ends = Vec::with_capacity(count);
    let (mut probes, mut failures) = (0, 0);
    for theta in sample_angles(count) {
        let mut forward = Vec::with_capacity(12);
        for k in 1..=12 {
            let w = 2f64.powi(-k);
            let mut img = Vec::with_capacity(81);
            for a in 0..9 {
                let r = 1.0 - w * (0.001 + 0.999 * a as f64 / 8.0);
                for b in 0..9 {
                    let t = theta + w * (1.0 - 1e-9) * (b as f64 / 4.0 - 1.0);
                    img.push(map.eval(chart.point(0, t, r)?));
                }
            }
            forward.push(diameter(&img));
        }
        let w0 = map.eval(chart.boundary_point(0, theta)?);
        let mut inverse = Vec::with_capacity(9);
        for k in 4..=12 {
            let rad = 2f64.powi(-k);
            let mut pre = Vec::with_capacity(97);
            for a in 0..=6 {
                for b in 0..16 {
                    let w = w0 + C64::from_polar(rad * a as f64 / 6.0, 2.0 * PI * (b as f64 + 0.5) / 16.0);
                    probes += 1;
                    match map.eval_inverse(w) {
                        None => failures += 1,
                        Some(z) if chart.domain.contains(z) => pre.push(z),
                        Some(_) => {}
                    }
                }
            }
            inverse.push(diameter(&pre));
        }
        ends.push(ExtensionEnd {
            theta,
            forward_ok: decays(&forward, eps),
            inverse_ok: decays(&inverse, eps),
            forward,
            inverse,
        });
    }
    let verdict = if failures as f64 > 1e-3 * probes as f64 {
        ExtensionVerdict::Inconclusive
    } else if ends.iter().all(|e| e.forward_ok && e.inverse_ok) {
        ExtensionVerdict::ConsistentWithExtension
    } else {
        ExtensionVerdict::NotObserved
    };
    Ok(ExtensionReport { ends, eps, probes, inversion_failures: failures, verdict })
}

/// Map of the annulus onto a canonical annulus `rho' < |w| < 1`.
#[derive(Clone, Debug)]
pub enum AnnulusMap {
    Identity,
    /// Principal solution rescaled so the outer circle goes to `|w| = 1`.
    Solver { map: QcMap, scale: f64 },
}

impl AnnulusMap {
    pub fn eval(&self, z: C64) -> C64 {
        match self {
            AnnulusMap::Identity => z,
            AnnulusMap::Solver { map, scale } => map.eval(z) / scale,
        }
    }
}

/// Multivalent solution `f = H o g` on an annulus.
#[derive(Clone, Debug)]
pub struct MultivalentSolution {
    pub rho: f64,
    /// Inner radius of the canonical image annulus.
    pub image_rho: f64,
    pub g: AnnulusMap,
    pub u: AnnulusHarmonic,
    /// Increment of `Im f` once around the hole.
    pub period: f64,
    pub transported: BoundaryData,
    pub solver: Option<SolverSummary>,
}

impl MultivalentSolution {
    /// `Re f`, single-valued.
    pub fn re(&self, z: C64) -> f64 {
        self.u.u(self.g.eval(z))
    }

    /// `f` continued along a path of the domain.
    pub fn continue_along(&self, path: &[C64]) -> Result<C64> {
        let image: Vec<C64> = path.iter().map(|&z| self.g.eval(z)).collect();
        multivalent_eval(&self.u, &image)
    }
}

/// Multivalent solution on an annulus for the zero or radial-power
/// coefficient.
pub fn solve_multivalent(problem: &DirichletProblem) -> Result<MultivalentSolution> {
    if problem.domain.kind != DomainKind::Annulus {
        return Err(Error::Unsupported(format!(
            "multivalent solutions need the annulus catalog domain, got `{}`",
            problem.domain.id
        )));
    }
    let rho = problem.domain.inner_radius.unwrap_or(0.5);
    let m = problem.samples;
    let chart = &problem.chart;
    let kind = if problem.mu.is_zero() { "zero" } else { problem.mu.profile.as_str() };
    let (g, image_rho, transported, solver) = match kind {
        "zero" => (AnnulusMap::Identity, rho, problem.data()?, None),
        "radial-power" => {
            let f = principal_solution(&problem.mu, problem.solver)?;
            let b = problem.trace_points;
            let thetas: Vec<f64> = sample_angles(b).collect();
            let outer: Vec<C64> = thetas.iter().map(|&t| f.eval(C64::from_polar(1.0, t))).collect();
            let inner: Vec<C64> = thetas.iter().map(|&t| f.eval(C64::from_polar(rho, t))).collect();
            let mean = |v: &[C64]| v.iter().map(|w| w.norm()).sum::<f64>() / v.len() as f64;
            let scale = mean(&outer);
            let image_rho = mean(&inner) / scale;
            let carry = |pts: &[C64], circle: usize| -> Result<Vec<f64>> {
                let alpha: Vec<f64> = pts.iter().map(|w| w.arg()).collect();
                resample_monotone(&thetas, &alpha, m)?.iter().map(|&t| problem.phi.value(chart, circle, t)).collect()
            };
            let data = BoundaryData::annulus(carry(&inner, 1)?, carry(&outer, 0)?)?;
            let summary = SolverSummary::of(&f);
            (AnnulusMap::Solver { map: f, scale }, image_rho, data, Some(summary))
        }
        other => {
            return Err(Error::Unsupported(format!(
                "multivalent solutions support only the zero and radial-power coefficients, got `{other}`"
            )))
        }
    };
    let u = annulus_dirichlet(&transported, image_rho, m / 2)?;
    let period = conjugate_period(&u);
    Ok(MultivalentSolution { rho, image_rho, g, u, period, transported, solver })
}

/// Closed loops for single-valuedness checks: half wind once around the
/// hole, half are small contractible circles.
pub fn random_loops(rho: f64, count: usize, seed: u64) -> Vec<(Vec<C64>, i32)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = 1.0 - rho;
    (0..count)
        .map(|k| {
            let n = 256;
            if k % 2 == 0 {
                let r0 = rho + width * (0.3 + 0.4 * rng.random::<f64>());
                let amp = 0.1 * width * rng.random::<f64>();
                let freq = 1.0 + (rng.random::<f64>() * 5.0).floor();
                let phase = 2.0 * PI * rng.random::<f64>();
                let pts = (0..=n)
                    .map(|j| {
                        let t = 2.0 * PI * j as f64 / n as f64;
                        C64::from_polar(r0 + amp * (freq * t + phase).sin(), t)
                    })
                    .collect();
                (pts, 1)
            } else {
                let c = C64::from_polar(rho + width * (0.4 + 0.2 * rng.random::<f64>()), 2.0 * PI * rng.random::<f64>());
                let r = 0.15 * width * (0.2 + 0.8 * rng.random::<f64>());
                let pts = (0..=n).map(|j| c + C64::from_polar(r, 2.0 * PI * j as f64 / n as f64)).collect();
                (pts, 0)
            }
        })
        .collect()
}

/// Single-valuedness of `Re f` and the `Im f` increments over closed loops.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopReport {
    pub loops: usize,
    /// Largest `|Re f(end) - Re f(start)|`.
    pub re_jump: f64,
    /// Largest `|Im f(end) - Im f(start) - winding * period|`.
    pub period_error: f64,
}

pub fn loop_report(solution: &MultivalentSolution, count: usize, seed: u64) -> Result<LoopReport> {
    let mut re_jump: f64 = 0.0;
    let mut period_error: f64 = 0.0;
    for (path, winding) in random_loops(solution.rho, count, seed) {
        let end = solution.continue_along(&path)?;
        let start = solution.re(path[0]);
        re_jump = re_jump.max((end.re - start).abs());
        period_error = period_error.max((end.im - winding as f64 * solution.period).abs());
    }
    Ok(LoopReport { loops: count, re_jump, period_error })
}

/// Largest `|Im of the integral of f'|` over closed loops in a simply
/// connected domain with a holomorphic composite (`mu = 0`).
pub fn monodromy_period(solution: &RegularSolution, count: usize, seed: u64) -> Result<f64> {
    if solution.map.is_some() {
        return Err(Error::Unsupported("monodromy check needs a holomorphic composite (zero coefficient)".into()));
    }
    let chart = solution.chart.reference_map()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let c = C64::from_polar(0.5 * rng.random::<f64>(), 2.0 * PI * rng.random::<f64>());
        let r = 0.05 + 0.3 * rng.random::<f64>();
        let path: Vec<C64> = (0..=128).map(|j| chart.forward(c + C64::from_polar(r, 2.0 * PI * j as f64 / 128.0))).collect();
        let df = |z: C64| {
            let zeta = chart.inverse(z);
            solution.h.derivative(zeta) * chart.inverse_derivative(z, 1.0)
        };
        worst = worst.max(contour_integral(df, &path).im.abs());
    }
    Ok(worst)
}
