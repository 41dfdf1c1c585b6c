//! Catalog domains, prime-end charts and approach paths.
//!
//! Prime ends are addressed by angles on the reference circle of a
//! conformal chart `psi` from the canonical domain onto the domain.

use crate::conformal::{catalog_map, zipper_map, ConformalMap};
use crate::numeric::{segment_distance, signed_area, winding_number};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::OnceLock;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    Disk,
    SlitDisk,
    Annulus,
    JordanPolyline,
}

/// Catalog domain ids.
pub const CATALOG_DOMAINS: [&str; 4] = ["disk", "slit-disk", "annulus", "jordan-polyline"];

/// A bounded finitely connected computational domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub id: String,
    pub kind: DomainKind,
    /// Boundary vertices. The slit disk lists the circle followed by both
    /// sides of the slit; the annulus lists the outer circle, then the inner.
    pub boundary: Vec<C64>,
    pub connectivity: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_radius: Option<f64>,
    /// Interior point fixed by the reference map (polylines only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<C64>,
}

fn circle(radius: f64, count: usize) -> Vec<C64> {
    (0..count)
        .map(|k| C64::from_polar(radius, 2.0 * PI * k as f64 / count as f64))
        .collect()
}

impl DomainSpec {
    pub fn disk() -> Self {
        Self {
            id: "disk".into(),
            kind: DomainKind::Disk,
            boundary: circle(1.0, 256),
            connectivity: 1,
            inner_radius: None,
            anchor: None,
        }
    }

    pub fn slit_disk() -> Self {
        let mut boundary = circle(1.0, 256);
        boundary.extend((1..=64).map(|j| C64::new(1.0 - j as f64 / 64.0, 0.0)));
        boundary.extend((1..64).map(|j| C64::new(j as f64 / 64.0, 0.0)));
        Self {
            id: "slit-disk".into(),
            kind: DomainKind::SlitDisk,
            boundary,
            connectivity: 1,
            inner_radius: None,
            anchor: None,
        }
    }

    pub fn annulus(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::InvalidParams {
                id: "annulus".into(),
                reason: format!("inner radius {rho} not in (0, 1)"),
            });
        }
        let mut boundary = circle(1.0, 256);
        boundary.extend(circle(rho, 256));
        Ok(Self {
            id: "annulus".into(),
            kind: DomainKind::Annulus,
            boundary,
            connectivity: 2,
            inner_radius: Some(rho),
            anchor: None,
        })
    }

    /// Closed polygon through `vertices` (closing edge implicit).
    pub fn jordan_polyline(vertices: Vec<C64>, anchor: Option<C64>) -> Result<Self> {
        let reject = |reason: String| Error::InvalidParams { id: "jordan-polyline".into(), reason };
        if vertices.len() < 3 {
            return Err(reject("need at least 3 vertices".into()));
        }
        if vertices.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(reject("vertices must be finite".into()));
        }
        let area = signed_area(&vertices);
        if area.abs() < 1e-14 {
            return Err(reject("polyline encloses no area".into()));
        }
        let anchor = match anchor {
            Some(a) => a,
            None => polygon_centroid(&vertices, area),
        };
        if winding_number(&vertices, anchor) == 0 {
            return Err(reject("anchor lies outside the polyline".into()));
        }
        Ok(Self {
            id: "jordan-polyline".into(),
            kind: DomainKind::JordanPolyline,
            boundary: vertices,
            connectivity: 1,
            inner_radius: None,
            anchor: Some(anchor),
        })
    }

    /// Whether `z` lies in the open domain.
    pub fn contains(&self, z: C64) -> bool {
        match self.kind {
            DomainKind::Disk => z.norm_sqr() < 1.0,
            DomainKind::SlitDisk => z.norm_sqr() < 1.0 && !(z.im == 0.0 && z.re >= 0.0),
            DomainKind::Annulus => {
                let r = z.norm();
                r < 1.0 && r > self.inner_radius.unwrap_or(0.0)
            }
            DomainKind::JordanPolyline => winding_number(&self.boundary, z) != 0,
        }
    }

    /// Distance from `z` to the boundary.
    pub fn boundary_distance(&self, z: C64) -> f64 {
        let r = z.norm();
        match self.kind {
            DomainKind::Disk => (1.0 - r).abs(),
            DomainKind::SlitDisk => (1.0 - r).abs().min(segment_distance(z, C64::new(0.0, 0.0), C64::new(1.0, 0.0))),
            DomainKind::Annulus => (1.0 - r).abs().min((r - self.inner_radius.unwrap_or(0.0)).abs()),
            DomainKind::JordanPolyline => {
                let n = self.boundary.len();
                (0..n)
                    .map(|k| segment_distance(z, self.boundary[k], self.boundary[(k + 1) % n]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Lower-left and upper-right corners of the bounding box.
    pub fn bounding_box(&self) -> (C64, C64) {
        let (mut lo, mut hi) = (C64::new(f64::INFINITY, f64::INFINITY), C64::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        for v in &self.boundary {
            lo = C64::new(lo.re.min(v.re), lo.im.min(v.im));
            hi = C64::new(hi.re.max(v.re), hi.im.max(v.im));
        }
        if matches!(self.kind, DomainKind::Disk | DomainKind::SlitDisk | DomainKind::Annulus) {
            lo = C64::new(-1.0, -1.0);
            hi = C64::new(1.0, 1.0);
        }
        (lo, hi)
    }

    pub fn is_simply_connected(&self) -> bool {
        self.connectivity == 1
    }
}

fn polygon_centroid(v: &[C64], area: f64) -> C64 {
    let n = v.len();
    let mut c = C64::new(0.0, 0.0);
    for k in 0..n {
        let (a, b) = (v[k], v[(k + 1) % n]);
        let cross = a.re * b.im - b.re * a.im;
        c += (a + b) * cross;
    }
    c / (6.0 * area)
}

/// Densify a closed polyline so that no edge is longer than `max_edge`.
fn densify(v: &[C64], max_edge: f64) -> Vec<C64> {
    let n = v.len();
    let mut out = Vec::new();
    for k in 0..n {
        let (a, b) = (v[k], v[(k + 1) % n]);
        let pieces = ((b - a).norm() / max_edge).ceil().max(1.0) as usize;
        for j in 0..pieces {
            out.push(a + (b - a) * (j as f64 / pieces as f64));
        }
    }
    out
}

/// Prime-end chart: a conformal map from the canonical domain onto the
/// domain whose circle angles label the prime ends.
#[derive(Debug)]
pub struct PrimeEndChart {
    pub domain: DomainSpec,
    pub circle_count: usize,
    map: OnceLock<Result<ConformalMap>>,
}

impl Clone for PrimeEndChart {
    fn clone(&self) -> Self {
        let map = OnceLock::new();
        if let Some(m) = self.map.get() {
            let _ = map.set(m.clone());
        }
        Self { domain: self.domain.clone(), circle_count: self.circle_count, map }
    }
}

impl PrimeEndChart {
    pub fn new(domain: DomainSpec) -> Self {
        let circle_count = domain.connectivity as usize;
        Self { domain, circle_count, map: OnceLock::new() }
    }

    /// Chart with an explicitly supplied reference map.
    pub fn with_map(domain: DomainSpec, map: ConformalMap) -> Self {
        let chart = Self::new(domain);
        let _ = chart.map.set(Ok(map));
        chart
    }

    /// The reference map; polyline charts are built on first use.
    pub fn reference_map(&self) -> Result<&ConformalMap> {
        self.map
            .get_or_init(|| match self.domain.kind {
                DomainKind::Disk => catalog_map("identity-disk", &[]),
                DomainKind::SlitDisk => catalog_map("slit-disk", &[]),
                DomainKind::Annulus => catalog_map("annulus-identity", &[self.domain.inner_radius.unwrap_or(0.5)]),
                DomainKind::JordanPolyline => {
                    let b = &self.domain.boundary;
                    let perimeter: f64 = (0..b.len()).map(|k| (b[(k + 1) % b.len()] - b[k]).norm()).sum();
                    let dense = densify(b, perimeter / 512.0);
                    zipper_map(&dense, self.domain.anchor.unwrap_or_default())
                }
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Canonical point for chart angle `theta` at depth `r` on circle
    /// `circle` (0 outer, 1 inner). Depth increases to 1 at the boundary.
    pub fn canonical_point(&self, circle: usize, theta: f64, r: f64) -> C64 {
        match circle {
            0 => C64::from_polar(r, theta),
            _ => C64::from_polar(self.domain.inner_radius.unwrap_or(0.0) / r, theta),
        }
    }

    /// `psi(r e^{i theta})`, or the inner-circle analogue.
    pub fn point(&self, circle: usize, theta: f64, r: f64) -> Result<C64> {
        Ok(self.reference_map()?.forward(self.canonical_point(circle, theta, r)))
    }

    /// Impression point of the prime end at `theta` (boundary limit).
    pub fn boundary_point(&self, circle: usize, theta: f64) -> Result<C64> {
        let map = self.reference_map()?;
        let rho = self.domain.inner_radius.unwrap_or(0.0);
        let z = match circle {
            0 => C64::from_polar(1.0, theta),
            _ => C64::from_polar(rho, theta),
        };
        Ok(match self.domain.kind {
            DomainKind::JordanPolyline => {
                let inward = 1.0 - 1e-12;
                map.forward(z * inward)
            }
            _ => map.forward(z),
        })
    }
}

/// Build a catalog domain together with its prime-end chart.
///
/// `jordan-polyline` takes flat vertex coordinates `[x0, y0, x1, y1, ...]`.
pub fn catalog_domain(id: &str, params: &[f64]) -> Result<(DomainSpec, PrimeEndChart)> {
    let domain = match id {
        "disk" => DomainSpec::disk(),
        "slit-disk" => DomainSpec::slit_disk(),
        "annulus" => {
            let rho = *params.first().ok_or_else(|| Error::InvalidParams {
                id: id.into(),
                reason: "inner radius required".into(),
            })?;
            DomainSpec::annulus(rho)?
        }
        "jordan-polyline" => {
            if params.len() % 2 != 0 {
                return Err(Error::InvalidParams {
                    id: id.into(),
                    reason: "expected an even number of coordinates".into(),
                });
            }
            let v = params.chunks(2).map(|p| C64::new(p[0], p[1])).collect();
            DomainSpec::jordan_polyline(v, None)?
        }
        other => return Err(Error::UnknownId(other.to_string())),
    };
    let chart = PrimeEndChart::new(domain.clone());
    Ok((domain, chart))
}

/// Radial approach toward the prime end at `end_angle`.
#[derive(Clone, Debug)]
pub struct ApproachPath<'a> {
    pub chart: &'a PrimeEndChart,
    pub circle: usize,
    pub end_angle: f64,
    pub radii: Vec<f64>,
}

impl<'a> ApproachPath<'a> {
    pub fn new(chart: &'a PrimeEndChart, circle: usize, end_angle: f64, radii: Vec<f64>) -> Result<Self> {
        if circle >= chart.circle_count {
            return Err(Error::Path(format!("circle {circle} does not exist")));
        }
        let floor = if circle == 1 { chart.domain.inner_radius.unwrap_or(0.0) } else { 0.0 };
        if radii.is_empty() || radii.iter().any(|&r| !(r > floor && r < 1.0)) {
            return Err(Error::Path(format!("radii must lie in ({floor}, 1)")));
        }
        if radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Path("radii must increase strictly".into()));
        }
        Ok(Self { chart, circle, end_angle, radii })
    }

    /// Radii `1 - 2^-k` for `k` in `kmin..=kmax`.
    pub fn dyadic(chart: &'a PrimeEndChart, circle: usize, end_angle: f64, kmin: i32, kmax: i32) -> Result<Self> {
        let radii = (kmin..=kmax).map(|k| 1.0 - 2f64.powi(-k)).collect();
        Self::new(chart, circle, end_angle, radii)
    }
}

/// The `index`-th point of an approach path.
pub fn approach_point(path: &ApproachPath, index: usize) -> Result<C64> {
    let r = *path.radii.get(index).ok_or(Error::IndexOutOfRange { index, len: path.radii.len() })?;
    path.chart.point(path.circle, path.end_angle, r)
}
