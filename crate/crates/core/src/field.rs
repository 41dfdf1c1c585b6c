//! Sampled Beltrami coefficients, the dilatation quotient and its circle
//! statistics.

use crate::geometry::DomainSpec;
use crate::numeric::is_power_of_two;
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

/// `(1 + |mu|) / (1 - |mu|)`.
pub fn dilatation(mu: C64) -> Result<f64> {
    let m = mu.norm();
    if !(m < 1.0) {
        return Err(Error::Degenerate { modulus: m, location: "sample".into() });
    }
    Ok((1.0 + m) / (1.0 - m))
}

/// Uniform cell-centred square lattice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub n: usize,
    pub center: C64,
    /// Side length of the box.
    pub length: f64,
}

impl Lattice {
    pub fn new(n: usize, center: C64, length: f64) -> Result<Self> {
        if !is_power_of_two(n) {
            return Err(Error::NotPowerOfTwo(n));
        }
        Ok(Self { n, center, length })
    }

    /// Box 10% larger than the domain's bounding box.
    pub fn for_domain(domain: &DomainSpec, n: usize) -> Result<Self> {
        let (lo, hi) = domain.bounding_box();
        let side = (hi.re - lo.re).max(hi.im - lo.im) * 1.1;
        Self::new(n, (lo + hi) * 0.5, side)
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn corner(&self) -> C64 {
        self.center - C64::new(self.length, self.length) * 0.5
    }

    /// Centre of cell `(i, j)`; `i` runs along x, `j` along y.
    pub fn point(&self, i: usize, j: usize) -> C64 {
        let h = self.spacing();
        self.corner() + C64::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h)
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    pub fn points(&self) -> impl Iterator<Item = C64> + '_ {
        (0..self.n).flat_map(move |j| (0..self.n).map(move |i| self.point(i, j)))
    }

    /// Cell containing `z`, if inside the box.
    pub fn cell_of(&self, z: C64) -> Option<(usize, usize)> {
        let h = self.spacing();
        let p = (z - self.corner()) / h;
        if p.re < 0.0 || p.im < 0.0 || p.re >= self.n as f64 || p.im >= self.n as f64 || !p.re.is_finite() || !p.im.is_finite() {
            return None;
        }
        Some((p.re as usize, p.im as usize))
    }

    /// Bilinear interpolation stencil between cell centres:
    /// base indices and fractional offsets, clamped to the node range.
    pub fn stencil(&self, z: C64) -> Option<(usize, usize, f64, f64)> {
        let h = self.spacing();
        let p = (z - self.corner()) / h - C64::new(0.5, 0.5);
        let top = (self.n - 1) as f64;
        if !(p.re >= -0.5 && p.im >= -0.5 && p.re <= top + 0.5 && p.im <= top + 0.5) {
            return None;
        }
        let x = p.re.clamp(0.0, top);
        let y = p.im.clamp(0.0, top);
        let i = (x.floor() as usize).min(self.n - 2);
        let j = (y.floor() as usize).min(self.n - 2);
        Some((i, j, x - i as f64, y - j as f64))
    }

    pub fn contains(&self, z: C64) -> bool {
        self.cell_of(z).is_some()
    }
}

/// Named coefficient profiles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "kebab-case")]
pub enum MuProfile {
    Zero,
    Constant { k: C64 },
    /// `(a / (1 + a)) z / conj(z)`; the map `z |z|^{2a}` solves the equation.
    RadialPower { a: f64 },
    /// `K = max(1, log(1/|z - z0|))`, degenerate at the boundary point `z0`.
    BoundaryLog { z0: C64 },
    /// `K = max(1, r^{p-1} log^q(1/r))` with `r = |z - center|` (circle
    /// norm proportional to `r^p log^q(1/r)`).
    PowerLog { center: C64, p: i32, q: i32 },
    /// Tabulated samples on a regular lattice, interpolated bilinearly.
    CustomGrid { lattice: Lattice, values: Vec<C64> },
}

/// Profile ids accepted by [`MuProfile::from_id`].
pub const MU_PROFILES: [&str; 6] = ["zero", "constant", "radial-power", "boundary-log", "power-log", "custom-grid"];

impl MuProfile {
    pub fn from_id(id: &str, params: &[f64]) -> Result<Self> {
        let need = |n: usize| -> Result<()> {
            if params.len() < n {
                return Err(Error::InvalidParams { id: id.into(), reason: format!("expected {n} parameters") });
            }
            Ok(())
        };
        match id {
            "zero" => Ok(MuProfile::Zero),
            "constant" => {
                need(1)?;
                Ok(MuProfile::Constant { k: C64::new(params[0], params.get(1).copied().unwrap_or(0.0)) })
            }
            "radial-power" => {
                need(1)?;
                let a = params[0];
                if !(a > -0.5) || !a.is_finite() {
                    return Err(Error::InvalidParams { id: id.into(), reason: format!("a = {a} gives |mu| >= 1") });
                }
                Ok(MuProfile::RadialPower { a })
            }
            "boundary-log" => {
                let z0 = if params.len() >= 2 { C64::new(params[0], params[1]) } else { C64::new(1.0, 0.0) };
                Ok(MuProfile::BoundaryLog { z0 })
            }
            "power-log" => {
                need(2)?;
                let center = if params.len() >= 4 { C64::new(params[2], params[3]) } else { C64::new(0.0, 0.0) };
                Ok(MuProfile::PowerLog { center, p: params[0] as i32, q: params[1] as i32 })
            }
            "custom-grid" => Err(Error::InvalidParams { id: id.into(), reason: "custom grids are read from CSV".into() }),
            other => Err(Error::UnknownId(other.to_string())),
        }
    }

    /// Read `(x, y, Re mu, Im mu)` rows lying on a regular square lattice.
    pub fn custom_from_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut rows = Vec::new();
        for line in text.lines() {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 4 {
                continue;
            }
            let vals: std::result::Result<Vec<f64>, _> = cols.iter().map(|c| c.parse::<f64>()).collect();
            if let Ok(v) = vals {
                rows.push(v);
            }
        }
        Self::custom_from_rows(&rows)
    }

    pub fn custom_from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let bad = |reason: &str| Error::InvalidParams { id: "custom-grid".into(), reason: reason.into() };
        let mut xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let n = xs.len();
        if n < 2 || rows.len() != n * n || !is_power_of_two(n) {
            return Err(bad("rows must cover an N x N lattice with N a power of two"));
        }
        let h = xs[1] - xs[0];
        let mut ys: Vec<f64> = rows.iter().map(|r| r[1]).collect();
        ys.sort_by(f64::total_cmp);
        let y0 = ys[0];
        let lattice = Lattice::new(n, C64::new(xs[0] + h * (n as f64 - 1.0) / 2.0, y0 + h * (n as f64 - 1.0) / 2.0), h * n as f64)?;
        let mut values = vec![C64::new(0.0, 0.0); n * n];
        for r in rows {
            let i = ((r[0] - xs[0]) / h).round() as usize;
            let j = ((r[1] - y0) / h).round() as usize;
            if i >= n || j >= n {
                return Err(bad("row off the lattice"));
            }
            values[lattice.index(i, j)] = C64::new(r[2], r[3]);
        }
        Ok(MuProfile::CustomGrid { lattice, values })
    }

    pub fn name(&self) -> &'static str {
        match self {
            MuProfile::Zero => "zero",
            MuProfile::Constant { .. } => "constant",
            MuProfile::RadialPower { .. } => "radial-power",
            MuProfile::BoundaryLog { .. } => "boundary-log",
            MuProfile::PowerLog { .. } => "power-log",
            MuProfile::CustomGrid { .. } => "custom-grid",
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            MuProfile::Zero => true,
            MuProfile::Constant { k } => k.norm() == 0.0,
            MuProfile::RadialPower { a } => *a == 0.0,
            MuProfile::CustomGrid { values, .. } => values.iter().all(|v| v.norm() == 0.0),
            _ => false,
        }
    }

    fn radial(k: f64, d: C64) -> C64 {
        if d.norm() == 0.0 {
            return C64::new(0.0, 0.0);
        }
        let m = (k - 1.0) / (k + 1.0);
        m * d / d.conj()
    }

    /// Coefficient at `z`, before any truncation.
    pub fn mu_at(&self, z: C64) -> C64 {
        match self {
            MuProfile::Zero => C64::new(0.0, 0.0),
            MuProfile::Constant { k } => *k,
            MuProfile::RadialPower { a } => {
                if z.norm() == 0.0 {
                    C64::new(0.0, 0.0)
                } else {
                    a / (1.0 + a) * z / z.conj()
                }
            }
            MuProfile::BoundaryLog { z0 } => Self::radial(self.k_at(z), z - z0),
            MuProfile::PowerLog { center, .. } => Self::radial(self.k_at(z), z - center),
            MuProfile::CustomGrid { lattice, values } => match lattice.stencil(z) {
                None => C64::new(0.0, 0.0),
                Some((i, j, fx, fy)) => {
                    let v = |a: usize, b: usize| values[lattice.index(a, b)];
                    v(i, j) * (1.0 - fx) * (1.0 - fy) + v(i + 1, j) * fx * (1.0 - fy) + v(i, j + 1) * (1.0 - fx) * fy + v(i + 1, j + 1) * fx * fy
                }
            },
        }
    }

    /// Dilatation at `z`, computed directly where a closed form exists.
    pub fn k_at(&self, z: C64) -> f64 {
        match self {
            MuProfile::BoundaryLog { z0 } => {
                let r = (z - z0).norm();
                (1.0f64).max((1.0 / r).ln())
            }
            MuProfile::PowerLog { center, p, q } => {
                let r = (z - center).norm();
                if r >= 1.0 {
                    return 1.0;
                }
                let v = r.powi(p - 1) * (1.0 / r).ln().powi(*q);
                if v.is_nan() {
                    f64::INFINITY
                } else {
                    v.max(1.0)
                }
            }
            _ => {
                let m = self.mu_at(z).norm();
                if m >= 1.0 {
                    f64::INFINITY
                } else {
                    (1.0 + m) / (1.0 - m)
                }
            }
        }
    }
}

/// Grid-sampled coefficient, zero outside the domain.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MuField {
    pub lattice: Lattice,
    pub values: Vec<C64>,
    /// Fraction of each cell covered by the domain.
    pub coverage: Vec<f64>,
    /// Radius about the lattice centre outside which `mu` vanishes.
    pub support_radius: f64,
    pub truncation: f64,
    pub truncated_cells: usize,
    pub profile: String,
}

/// Modulus truncation: samples above `1 - eps` are radially rescaled.
pub fn truncate(mu: C64, eps: f64) -> (C64, bool) {
    let cap = 1.0 - eps;
    let m = mu.norm();
    if eps > 0.0 && m > cap {
        (mu * (cap / m), true)
    } else {
        (mu, false)
    }
}

fn coverage_fraction(domain: &DomainSpec, lattice: &Lattice, i: usize, j: usize) -> f64 {
    let h = lattice.spacing();
    let base = lattice.point(i, j) - C64::new(h, h) * 0.5;
    let mut inside = 0;
    for a in 0..4 {
        for b in 0..4 {
            let z = base + C64::new((a as f64 + 0.5) * h / 4.0, (b as f64 + 0.5) * h / 4.0);
            if domain.contains(z) {
                inside += 1;
            }
        }
    }
    inside as f64 / 16.0
}

/// Sample a profile on the lattice of `domain` with `n` cells per side.
///
/// Cells cut by the boundary are weighted by their covered fraction. With
/// `trunc > 0` samples of modulus above `1 - trunc` are rescaled; with
/// `trunc == 0` a sample of modulus `>= 1` is an error.
pub fn sample_mu(profile: &MuProfile, domain: &DomainSpec, n: usize, trunc: f64) -> Result<MuField> {
    if !(0.0..1.0).contains(&trunc) {
        return Err(Error::InvalidParams { id: "trunc".into(), reason: format!("{trunc} not in [0, 1)") });
    }
    let lattice = Lattice::for_domain(domain, n)?;
    let inside: Vec<bool> = lattice.points().map(|z| domain.contains(z)).collect();
    let mut coverage: Vec<f64> = inside.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    for j in 0..n {
        for i in 0..n {
            let me = inside[lattice.index(i, j)];
            let edge = (i > 0 && inside[lattice.index(i - 1, j)] != me)
                || (i + 1 < n && inside[lattice.index(i + 1, j)] != me)
                || (j > 0 && inside[lattice.index(i, j - 1)] != me)
                || (j + 1 < n && inside[lattice.index(i, j + 1)] != me);
            if edge {
                coverage[lattice.index(i, j)] = coverage_fraction(domain, &lattice, i, j);
            }
        }
    }
    let mut values = vec![C64::new(0.0, 0.0); n * n];
    let mut truncated_cells = 0;
    let mut support_radius: f64 = 0.0;
    let half_diag = lattice.spacing() * std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..n {
        for i in 0..n {
            let idx = lattice.index(i, j);
            if coverage[idx] == 0.0 {
                continue;
            }
            let z = lattice.point(i, j);
            let raw = profile.mu_at(z);
            let (mu, cut) = truncate(raw, trunc);
            if mu.norm() >= 1.0 || !mu.re.is_finite() || !mu.im.is_finite() {
                return Err(Error::Degenerate { modulus: raw.norm(), location: format!("{z}") });
            }
            truncated_cells += cut as usize;
            let v = mu * coverage[idx];
            if v.norm() > 0.0 {
                support_radius = support_radius.max((z - lattice.center).norm() + half_diag);
            }
            values[idx] = v;
        }
    }
    Ok(MuField {
        lattice,
        values,
        coverage,
        support_radius,
        truncation: trunc,
        truncated_cells,
        profile: profile.name().into(),
    })
}

impl MuField {
    pub fn max_modulus(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn l2_norm(&self) -> f64 {
        let h = self.lattice.spacing();
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * h * h).sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.norm() == 0.0)
    }

    pub fn dilatation_field(&self) -> DilatationField {
        let k = self.values.iter().map(|v| (1.0 + v.norm()) / (1.0 - v.norm())).collect();
        DilatationField {
            lattice: self.lattice.clone(),
            k,
            inside: self.coverage.iter().map(|&c| c > 0.0).collect(),
        }
    }
}

/// Dilatation derived from a [`MuField`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DilatationField {
    pub lattice: Lattice,
    pub k: Vec<f64>,
    pub inside: Vec<bool>,
}

/// Anything that can report the dilatation at a point.
pub trait DilatationSource {
    /// `K(z)`, or `None` outside the domain.
    fn k_at(&self, z: C64) -> Option<f64>;
    /// Grid spacing, if the source is sampled.
    fn resolution(&self) -> Option<f64>;
    /// Box containing the domain, as lower-left and upper-right corners.
    fn region(&self) -> (C64, C64);
    /// `(p, q)` for catalog power-log profiles.
    fn catalog_tag(&self) -> Option<(i32, i32)> {
        None
    }

    /// `K` extended by zero outside the domain.
    fn k_or_zero(&self, z: C64) -> f64 {
        self.k_at(z).unwrap_or(0.0)
    }
}

impl DilatationSource for DilatationField {
    fn k_at(&self, z: C64) -> Option<f64> {
        let (i, j) = self.lattice.cell_of(z)?;
        let idx = self.lattice.index(i, j);
        self.inside[idx].then(|| self.k[idx])
    }

    fn resolution(&self) -> Option<f64> {
        Some(self.lattice.spacing())
    }

    fn region(&self) -> (C64, C64) {
        let c = self.lattice.corner();
        (c, c + C64::new(self.lattice.length, self.lattice.length))
    }
}

/// Closed-form dilatation of a profile restricted to a domain, or to a box
/// of the plane when no domain is given.
#[derive(Clone, Debug)]
pub struct ProfileSource {
    pub profile: MuProfile,
    pub domain: Option<DomainSpec>,
    pub bounds: (C64, C64),
}

impl ProfileSource {
    pub fn on_domain(profile: MuProfile, domain: DomainSpec) -> Self {
        let bounds = domain.bounding_box();
        Self { profile, domain: Some(domain), bounds }
    }

    pub fn on_plane(profile: MuProfile, lo: C64, hi: C64) -> Self {
        Self { profile, domain: None, bounds: (lo, hi) }
    }
}

impl DilatationSource for ProfileSource {
    fn k_at(&self, z: C64) -> Option<f64> {
        if let Some(d) = &self.domain {
            if !d.contains(z) {
                return None;
            }
        }
        Some(self.profile.k_at(z))
    }

    fn resolution(&self) -> Option<f64> {
        match &self.profile {
            MuProfile::CustomGrid { lattice, .. } => Some(lattice.spacing()),
            _ => None,
        }
    }

    fn region(&self) -> (C64, C64) {
        self.bounds
    }

    fn catalog_tag(&self) -> Option<(i32, i32)> {
        match self.profile {
            MuProfile::PowerLog { p, q, .. } => Some((p, q)),
            _ => None,
        }
    }
}

/// Circle integrals of `K` about a point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub center: C64,
    pub radii: Vec<f64>,
    /// `||K||(z0, r)`: arc-length integral of `K` over the circle.
    pub circle_norm: Vec<f64>,
    /// `k(r) = ||K|| / (2 pi r)`.
    pub circle_mean: Vec<f64>,
    pub samples: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog_tag: Option<(i32, i32)>,
}

/// Trapezoidal circle integrals of `K` (zero outside the domain) for
/// increasing radii.
pub fn radial_profile(source: &dyn DilatationSource, z0: C64, radii: &[f64]) -> Result<RadialProfile> {
    if radii.is_empty() {
        return Err(Error::InvalidParams { id: "radii".into(), reason: "empty radius list".into() });
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] <= 0.0 {
        return Err(Error::InvalidParams { id: "radii".into(), reason: "radii must be positive and increasing".into() });
    }
    let (lo, hi) = source.region();
    if z0.re < lo.re || z0.im < lo.im || z0.re > hi.re || z0.im > hi.im {
        return Err(Error::OutsideBox(format!("{z0}")));
    }
    let mut out = RadialProfile {
        center: z0,
        radii: radii.to_vec(),
        circle_norm: Vec::with_capacity(radii.len()),
        circle_mean: Vec::with_capacity(radii.len()),
        samples: Vec::with_capacity(radii.len()),
        catalog_tag: source.catalog_tag(),
    };
    for &r in radii {
        let m = match source.resolution() {
            Some(h) => 64usize.max((2.0 * PI * r / h).ceil() as usize),
            None => 256,
        };
        let sum: f64 = (0..m)
            .map(|j| source.k_or_zero(z0 + C64::from_polar(r, (j as f64 + 0.5) * 2.0 * PI / m as f64)))
            .sum();
        let norm = sum * 2.0 * PI * r / m as f64;
        out.circle_norm.push(norm);
        out.circle_mean.push(norm / (2.0 * PI * r));
        out.samples.push(m);
    }
    Ok(out)
}

/// Radii `eps0 2^-k` for `k = levels, ..., 0`, in increasing order.
pub fn dyadic_radii(eps0: f64, levels: usize) -> Vec<f64> {
    (0..=levels).rev().map(|k| eps0 * 2f64.powi(-(k as i32))).collect()
}
