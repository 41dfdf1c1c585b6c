//! Conformal maps between canonical domains (disk, annulus) and
//! computational domains.
//!
//! A [`ConformalMap`] is a chain of elementary maps with closed-form
//! inverses. The chain is stored in canonical-to-domain order; evaluating the
//! inverse walks it backwards.

mod zipper;

pub use zipper::zipper_map;

use crate::numeric::sqrt_upper;
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Elementary invertible maps used to build chains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "kebab-case")]
pub enum Elementary {
    /// `z -> a z + b`
    Affine { a: C64, b: C64 },
    /// `z -> (a z + b) / (c z + d)`
    Mobius { a: C64, b: C64, c: C64, d: C64 },
    /// `z -> 1/z` with `0 <-> infinity`.
    Inversion,
    /// Principal square root; the inverse squares.
    Sqrt,
    /// Squaring; the inverse is the square root into the upper half-plane.
    SquareUpper,
    /// `z -> i sqrt((z - z1) / (z - z0))`, opening the first boundary edge.
    ZipperOpen { z0: C64, z1: C64 },
    /// Unzips the circular arc from 0 to `a` in the upper half-plane, where
    /// `inv_c = Re a / |a|^2` and `d = |a|^2 / Im a`.
    ZipperSlit { inv_c: f64, d: f64, base_side: f64 },
    /// `z -> sign (z / (1 - z / w0))^2`, closing the last edge.
    ZipperClose { w0: f64, sign: f64 },
}

fn infinity() -> C64 {
    C64::new(f64::INFINITY, 0.0)
}

fn is_infinite(z: C64) -> bool {
    !z.re.is_finite() || !z.im.is_finite()
}

impl Elementary {
    pub fn apply(&self, z: C64) -> C64 {
        match *self {
            Elementary::Affine { a, b } => a * z + b,
            Elementary::Mobius { a, b, c, d } => {
                if is_infinite(z) {
                    if c == C64::new(0.0, 0.0) {
                        return infinity();
                    }
                    return a / c;
                }
                let den = c * z + d;
                if den == C64::new(0.0, 0.0) {
                    return infinity();
                }
                (a * z + b) / den
            }
            Elementary::Inversion => invert(z),
            Elementary::Sqrt => z.sqrt(),
            Elementary::SquareUpper => z * z,
            Elementary::ZipperOpen { z0, z1 } => {
                if is_infinite(z) {
                    return C64::new(0.0, 1.0);
                }
                if z == z0 {
                    return infinity();
                }
                let r = ((z - z1) / (z - z0)).sqrt();
                C64::new(-r.im, r.re)
            }
            Elementary::ZipperSlit { inv_c, d, base_side } => {
                let zp = if is_infinite(z) {
                    if inv_c == 0.0 {
                        return infinity();
                    }
                    C64::new(-1.0 / inv_c, 0.0)
                } else {
                    z / (1.0 - z * inv_c)
                };
                if is_infinite(zp) {
                    return infinity();
                }
                if zp.norm() == 0.0 {
                    return C64::new(base_side * d, 0.0);
                }
                let q = d / zp;
                zp * (1.0 + q * q).sqrt()
            }
            Elementary::ZipperClose { w0, sign } => {
                if is_infinite(z) {
                    if w0.is_infinite() {
                        return infinity();
                    }
                    return C64::new(sign * w0 * w0, 0.0);
                }
                let v = z / (1.0 - z / w0);
                if is_infinite(v) {
                    return infinity();
                }
                v * v * sign
            }
        }
    }

    pub fn apply_inverse(&self, w: C64) -> C64 {
        match *self {
            Elementary::Affine { a, b } => (w - b) / a,
            Elementary::Mobius { a, b, c, d } => Elementary::Mobius {
                a: d,
                b: -b,
                c: -c,
                d: a,
            }
            .apply(w),
            Elementary::Inversion => invert(w),
            Elementary::Sqrt => w * w,
            Elementary::SquareUpper => sqrt_upper(w),
            Elementary::ZipperOpen { z0, z1 } => {
                if is_infinite(w) {
                    return z0;
                }
                let s = w * w;
                let den = 1.0 + s;
                if den == C64::new(0.0, 0.0) {
                    return infinity();
                }
                (z1 + s * z0) / den
            }
            Elementary::ZipperSlit { inv_c, d, .. } => {
                if is_infinite(w) {
                    if inv_c == 0.0 {
                        return infinity();
                    }
                    return C64::new(1.0 / inv_c, 0.0);
                }
                let u = if w.norm() == 0.0 {
                    C64::new(0.0, d)
                } else {
                    let q = d / w;
                    w * (1.0 - q * q).sqrt()
                };
                let den = 1.0 + u * inv_c;
                if den == C64::new(0.0, 0.0) {
                    return infinity();
                }
                u / den
            }
            Elementary::ZipperClose { w0, sign } => {
                if is_infinite(w) {
                    return C64::new(w0, 0.0);
                }
                let mut v = (w * sign).sqrt();
                if v.im < 0.0 {
                    v = -v;
                }
                v / (1.0 + v / w0)
            }
        }
    }
}

fn invert(z: C64) -> C64 {
    if is_infinite(z) {
        C64::new(0.0, 0.0)
    } else if z == C64::new(0.0, 0.0) {
        infinity()
    } else {
        1.0 / z
    }
}

/// One link of a chain; `inverted` links are evaluated backwards.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub map: Elementary,
    #[serde(default)]
    pub inverted: bool,
}

impl Step {
    pub fn new(map: Elementary) -> Self {
        Self { map, inverted: false }
    }

    pub fn inverse_of(map: Elementary) -> Self {
        Self { map, inverted: true }
    }

    fn forward(&self, z: C64) -> C64 {
        if self.inverted {
            self.map.apply_inverse(z)
        } else {
            self.map.apply(z)
        }
    }

    fn backward(&self, z: C64) -> C64 {
        if self.inverted {
            self.map.apply(z)
        } else {
            self.map.apply_inverse(z)
        }
    }
}

/// Canonical source domain of a map.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Canonical {
    Disk,
    Annulus { inner_radius: f64 },
}

/// Invertible analytic map from a canonical domain onto a computational
/// domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConformalMap {
    pub id: String,
    pub canonical: Canonical,
    /// Chain in canonical-to-domain order.
    pub steps: Vec<Step>,
    /// Round-trip error on a 1000-point sample of the circle of radius 0.9.
    pub accuracy: f64,
    /// Chart angles of the input boundary vertices, in input order (zipper
    /// maps only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertex_angles: Option<Vec<f64>>,
}

impl ConformalMap {
    pub fn from_steps(id: &str, canonical: Canonical, steps: Vec<Step>) -> Self {
        let mut map = Self {
            id: id.to_string(),
            canonical,
            steps,
            accuracy: 0.0,
            vertex_angles: None,
        };
        map.accuracy = map.round_trip_error(0.9, 1000);
        map
    }

    /// Canonical point to domain point.
    pub fn forward(&self, zeta: C64) -> C64 {
        self.steps.iter().fold(zeta, |z, s| s.forward(z))
    }

    /// Domain point to canonical point.
    pub fn inverse(&self, z: C64) -> C64 {
        self.steps.iter().rev().fold(z, |w, s| s.backward(w))
    }

    /// Central-difference derivative of the forward map.
    pub fn derivative(&self, zeta: C64) -> C64 {
        let h = 1e-6;
        (self.forward(zeta + h) - self.forward(zeta - h)) / (2.0 * h)
    }

    pub fn inverse_derivative(&self, z: C64, scale: f64) -> C64 {
        let h = 1e-6 * scale.max(1e-12);
        (self.inverse(z + h) - self.inverse(z - h)) / (2.0 * h)
    }

    /// Maximum of `|inverse(forward(zeta)) - zeta|` over `count` points on
    /// the circle of the given radius.
    pub fn round_trip_error(&self, radius: f64, count: usize) -> f64 {
        (0..count)
            .map(|k| {
                let zeta = C64::from_polar(radius, 2.0 * PI * k as f64 / count as f64);
                (self.inverse(self.forward(zeta)) - zeta).norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Catalog map ids.
pub const CATALOG_MAPS: [&str; 5] = ["identity-disk", "slit-disk", "inversion", "annulus-identity", "affine"];

/// Explicit catalog maps with closed-form forward and inverse.
pub fn catalog_map(id: &str, params: &[f64]) -> Result<ConformalMap> {
    let c = |re: f64, im: f64| C64::new(re, im);
    match id {
        "identity-disk" => Ok(ConformalMap::from_steps(id, Canonical::Disk, vec![])),
        "slit-disk" => Ok(slit_disk_map()),
        "inversion" => Ok(ConformalMap::from_steps(
            id,
            Canonical::Disk,
            vec![Step::new(Elementary::Inversion)],
        )),
        "annulus-identity" => {
            let rho = *params.first().ok_or_else(|| Error::InvalidParams {
                id: id.into(),
                reason: "inner radius required".into(),
            })?;
            if !(rho > 0.0 && rho < 1.0) {
                return Err(Error::InvalidParams {
                    id: id.into(),
                    reason: format!("inner radius {rho} not in (0, 1)"),
                });
            }
            Ok(ConformalMap::from_steps(id, Canonical::Annulus { inner_radius: rho }, vec![]))
        }
        "affine" => {
            if params.len() != 4 {
                return Err(Error::InvalidParams {
                    id: id.into(),
                    reason: "expected a_re, a_im, b_re, b_im".into(),
                });
            }
            let a = c(params[0], params[1]);
            if a.norm() == 0.0 {
                return Err(Error::InvalidParams {
                    id: id.into(),
                    reason: "degenerate affine map".into(),
                });
            }
            Ok(ConformalMap::from_steps(
                id,
                Canonical::Disk,
                vec![Step::new(Elementary::Affine { a, b: c(params[2], params[3]) })],
            ))
        }
        other => Err(Error::UnknownId(other.to_string())),
    }
}

/// Map of the unit disk onto the disk slit along `[0, 1)`.
///
/// Normalised so that the real diameter goes to the real segment `(-1, 0)`
/// with positive derivative at the origin; chart angle 0 is the slit tip,
/// angles in `(0, pi/2)` are prime ends on the upper side of the slit,
/// `(-pi/2, 0)` on the lower side, and the remaining arc covers the circle.
fn slit_disk_map() -> ConformalMap {
    let c = |re: f64, im: f64| C64::new(re, im);
    let steps = vec![
        Step::new(Elementary::Affine { a: c(0.0, -1.0), b: c(0.0, 0.0) }),
        Step::new(Elementary::Mobius {
            a: c(0.0, 1.0),
            b: c(0.0, 1.0),
            c: c(-1.0, 0.0),
            d: c(1.0, 0.0),
        }),
        Step::new(Elementary::Sqrt),
        Step::new(Elementary::Mobius {
            a: c(1.0, 0.0),
            b: c(-1.0, 0.0),
            c: c(1.0, 0.0),
            d: c(1.0, 0.0),
        }),
        Step::new(Elementary::SquareUpper),
    ];
    ConformalMap::from_steps("slit-disk", Canonical::Disk, steps)
}

/// Chart angles of the two prime ends over the slit point `x` in `(0, 1)`,
/// returned as `(upper, lower)`.
pub fn slit_prime_end_angles(x: f64) -> (f64, f64) {
    let angle = |w: f64| {
        let q = C64::new((1.0 + w) / (1.0 - w), 0.0);
        let s = q * q;
        let g = (s - C64::new(0.0, 1.0)) / (s + C64::new(0.0, 1.0));
        (C64::new(0.0, 1.0) * g).arg()
    };
    (angle(x.sqrt()), angle(-x.sqrt()))
}
