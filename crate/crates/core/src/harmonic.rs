//! Schwarz integral on the disk and the Dirichlet problem on a circular
//! annulus with its conjugate period.

use crate::numeric::{gauss_legendre, is_power_of_two, segment_distance};
use crate::{Error, Result, C64};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Samples of real boundary data at `M` equispaced angles `2 pi j / M`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryData {
    /// Values on the unit circle.
    pub outer: Vec<f64>,
    /// Values on the inner circle of an annulus.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<Vec<f64>>,
    /// Largest jump between neighbouring samples.
    pub continuity_modulus: f64,
}

fn jump(v: &[f64]) -> f64 {
    (0..v.len()).map(|k| (v[(k + 1) % v.len()] - v[k]).abs()).fold(0.0, f64::max)
}

fn check_samples(v: &[f64]) -> Result<()> {
    if v.len() < 64 || !is_power_of_two(v.len()) {
        return Err(Error::InvalidParams {
            id: "boundary data".into(),
            reason: format!("need a power of two >= 64 samples, got {}", v.len()),
        });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParams { id: "boundary data".into(), reason: "non-finite sample".into() });
    }
    Ok(())
}

pub fn sample_angles(m: usize) -> impl Iterator<Item = f64> {
    (0..m).map(move |j| 2.0 * PI * j as f64 / m as f64)
}

impl BoundaryData {
    pub fn disk(outer: Vec<f64>) -> Result<Self> {
        check_samples(&outer)?;
        let continuity_modulus = jump(&outer);
        Ok(Self { outer, inner: None, continuity_modulus })
    }

    pub fn annulus(inner: Vec<f64>, outer: Vec<f64>) -> Result<Self> {
        check_samples(&outer)?;
        check_samples(&inner)?;
        if inner.len() != outer.len() {
            return Err(Error::InvalidParams { id: "boundary data".into(), reason: "circles need equal sample counts".into() });
        }
        let continuity_modulus = jump(&outer).max(jump(&inner));
        Ok(Self { outer, inner: Some(inner), continuity_modulus })
    }

    pub fn from_fn(m: usize, phi: impl Fn(f64) -> f64) -> Result<Self> {
        Self::disk(sample_angles(m).map(phi).collect())
    }

    pub fn annulus_from_fn(m: usize, inner: impl Fn(f64) -> f64, outer: impl Fn(f64) -> f64) -> Result<Self> {
        Self::annulus(sample_angles(m).map(inner).collect(), sample_angles(m).map(outer).collect())
    }

    pub fn len(&self) -> usize {
        self.outer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outer.is_empty()
    }
}

/// `c_n = (1/M) sum_j v_j e^{-i n theta_j}` for `n = 0..M`.
pub fn trig_coefficients(v: &[f64]) -> Vec<C64> {
    let m = v.len();
    let mut buf: Vec<C64> = v.iter().map(|&x| C64::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    buf.iter_mut().for_each(|c| *c /= m as f64);
    buf
}

/// Trapezoidal Schwarz integral
/// `h(z) = (1/M) sum phi_j (zeta_j + z) / (zeta_j - z)`, `Im h(0) = 0`.
pub fn schwarz_integral(data: &BoundaryData, z: C64) -> Result<C64> {
    let m = data.len();
    let limit = 1.0 - 2.0 * PI / m as f64;
    if z.norm() > limit {
        let required = (2.0 * PI / (1.0 - z.norm()).max(1e-300)).ceil();
        let required = if required.is_finite() { (required as usize).next_power_of_two() } else { usize::MAX };
        return Err(Error::BoundaryLayer { modulus: z.norm(), required_samples: required });
    }
    let mut s = C64::new(0.0, 0.0);
    for (phi, t) in data.outer.iter().zip(sample_angles(m)) {
        let zeta = C64::from_polar(1.0, t);
        s += phi * (zeta + z) / (zeta - z);
    }
    Ok(s / m as f64)
}

/// Power-series form of the Schwarz integral of the trigonometric
/// interpolant; usable up to and including the unit circle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchwarzSeries {
    /// Taylor coefficients of `h`.
    pub coeffs: Vec<C64>,
}

impl SchwarzSeries {
    pub fn new(data: &BoundaryData) -> Self {
        let c = trig_coefficients(&data.outer);
        let half = data.len() / 2;
        let mut coeffs = Vec::with_capacity(half + 1);
        coeffs.push(C64::new(c[0].re, 0.0));
        for n in 1..half {
            coeffs.push(c[n] * 2.0);
        }
        coeffs.push(C64::new(c[half].re, 0.0));
        Self { coeffs }
    }

    /// `h(z)`, with `z` pulled back onto the closed disk.
    pub fn eval(&self, z: C64) -> C64 {
        let z = if z.norm() > 1.0 { z / z.norm() } else { z };
        self.coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    pub fn derivative(&self, z: C64) -> C64 {
        let z = if z.norm() > 1.0 { z / z.norm() } else { z };
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, (n, c)| acc * z + c * n as f64)
    }
}

/// Harmonic function on `rho < |z| < 1` as the real part of
/// `H = A + c0 Log z + sum_n (P_n z^n + conj(R_n) (rho / z)^n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusHarmonic {
    pub rho: f64,
    pub constant: f64,
    /// Coefficient of `log |z|`.
    pub c0: f64,
    pub outer_modes: Vec<C64>,
    /// Inner modes, scaled by `rho^-n`.
    pub inner_modes: Vec<C64>,
    pub n_max: usize,
    /// Largest condition number among the per-mode systems.
    pub condition: f64,
    /// Largest deviation from the data at the sample points.
    pub boundary_error: f64,
    pub warnings: Vec<String>,
}

/// Mode-matching solution of the annulus Dirichlet problem.
pub fn annulus_dirichlet(data: &BoundaryData, rho: f64, n_max: usize) -> Result<AnnulusHarmonic> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidParams { id: "annulus".into(), reason: format!("inner radius {rho} not in (0, 1)") });
    }
    let inner = data
        .inner
        .as_ref()
        .ok_or_else(|| Error::InvalidParams { id: "boundary data".into(), reason: "annulus needs data on both circles".into() })?;
    let m = data.len();
    let alpha = trig_coefficients(&data.outer);
    let beta = trig_coefficients(inner);
    let mut warnings = Vec::new();
    let mut top = n_max.min(m / 2);
    if top < n_max {
        warnings.push(format!("n_max lowered to {top} by the sample count"));
    }
    let mut outer_modes = Vec::with_capacity(top);
    let mut inner_modes = Vec::with_capacity(top);
    let mut condition: f64 = 1.0;
    for n in 1..=top {
        let q = rho.powi(n as i32);
        let cond = (1.0 + q) / (1.0 - q);
        if cond > 1e12 {
            warnings.push(format!("mode {n}: condition number {cond:.3e}; series truncated"));
            top = n - 1;
            break;
        }
        condition = condition.max(cond);
        let weight = if 2 * n == m { 1.0 } else { 2.0 };
        let (a, b) = (alpha[n] * weight, beta[n] * weight);
        let d = 1.0 - q * q;
        outer_modes.push((a - b * q) / d);
        inner_modes.push((b - a * q) / d);
    }
    let constant = alpha[0].re;
    let c0 = (beta[0].re - alpha[0].re) / rho.ln();
    let mut h = AnnulusHarmonic {
        rho,
        constant,
        c0,
        outer_modes,
        inner_modes,
        n_max: top,
        condition,
        boundary_error: 0.0,
        warnings,
    };
    let mut err: f64 = 0.0;
    for (j, t) in sample_angles(m).enumerate() {
        err = err.max((h.u(C64::from_polar(1.0, t)) - data.outer[j]).abs());
        err = err.max((h.u(C64::from_polar(rho, t)) - inner[j]).abs());
    }
    h.boundary_error = err;
    Ok(h)
}

impl AnnulusHarmonic {
    /// Single-valued part of `H` (without the logarithm).
    fn series(&self, z: C64) -> C64 {
        let s = self.rho / z;
        let (mut zp, mut sp) = (z, s);
        let mut acc = C64::new(0.0, 0.0);
        for (p, r) in self.outer_modes.iter().zip(&self.inner_modes) {
            acc += p * zp + r.conj() * sp;
            zp *= z;
            sp *= s;
        }
        acc
    }

    /// `u = Re H`.
    pub fn u(&self, z: C64) -> f64 {
        self.constant + self.c0 * z.norm().ln() + self.series(z).re
    }

    /// `H` on the branch where `arg z = theta`.
    pub fn h_branch(&self, z: C64, theta: f64) -> C64 {
        C64::new(self.constant + self.c0 * z.norm().ln(), self.c0 * theta) + self.series(z)
    }

    /// `H'(z)`.
    pub fn h_prime(&self, z: C64) -> C64 {
        let mut acc = self.c0 / z;
        let s = self.rho / z;
        let (mut zp, mut sp) = (C64::new(1.0, 0.0), s);
        for (n, (p, r)) in self.outer_modes.iter().zip(&self.inner_modes).enumerate() {
            let k = (n + 1) as f64;
            acc += p * zp * k - r.conj() * sp * (k / z);
            zp *= z;
            sp *= s;
        }
        acc
    }
}

/// Increment of the harmonic conjugate around the core circle: `2 pi c0`.
pub fn conjugate_period(h: &AnnulusHarmonic) -> f64 {
    2.0 * PI * h.c0
}

/// `int f(z) dz` along a polyline, Gauss-Legendre per segment.
pub fn contour_integral(f: impl Fn(C64) -> C64, path: &[C64]) -> C64 {
    let (x, w) = gauss_legendre(16);
    let mut s = C64::new(0.0, 0.0);
    for seg in path.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let half = (b - a) * 0.5;
        let mid = (a + b) * 0.5;
        for (xi, wi) in x.iter().zip(&w) {
            s += f(mid + half * *xi) * half * *wi;
        }
    }
    s
}

/// Analytic continuation of `H` along `path`, normalised by
/// `Im H(path[0]) = 0`.
pub fn multivalent_eval(h: &AnnulusHarmonic, path: &[C64]) -> Result<C64> {
    if path.is_empty() {
        return Err(Error::Path("empty path".into()));
    }
    for &z in path {
        let r = z.norm();
        if !(r > h.rho && r < 1.0) {
            return Err(Error::Path(format!("vertex {z} is not inside the annulus")));
        }
    }
    for seg in path.windows(2) {
        if segment_distance(C64::new(0.0, 0.0), seg[0], seg[1]) <= h.rho {
            return Err(Error::Path(format!("segment {} -> {} meets the inner circle", seg[0], seg[1])));
        }
    }
    let theta0 = path[0].arg();
    let mut theta = theta0;
    for seg in path.windows(2) {
        theta += (seg[1] / seg[0]).arg();
    }
    let start = h.h_branch(path[0], theta0);
    let end = h.h_branch(*path.last().unwrap(), theta);
    Ok(end - C64::new(0.0, start.im))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schwarz_examples() {
        let one = BoundaryData::from_fn(256, |_| 1.0).unwrap();
        let cos = BoundaryData::from_fn(256, |t| t.cos()).unwrap();
        let cos2 = BoundaryData::from_fn(256, |t| (2.0 * t).cos()).unwrap();
        for k in 0..50 {
            let z = C64::from_polar(0.9 * (k as f64 / 49.0), 0.7 * k as f64);
            assert!((schwarz_integral(&one, z).unwrap() - 1.0).norm() < 1e-10);
            assert!((schwarz_integral(&cos, z).unwrap() - z).norm() < 1e-8);
            assert!((schwarz_integral(&cos2, z).unwrap() - z * z).norm() < 1e-8);
            assert!((SchwarzSeries::new(&cos2).eval(z) - z * z).norm() < 1e-12);
        }
    }

    #[test]
    fn boundary_layer_is_rejected() {
        let d = BoundaryData::from_fn(64, |t| t.sin()).unwrap();
        let err = schwarz_integral(&d, C64::new(0.95, 0.0)).unwrap_err();
        assert!(matches!(err, Error::BoundaryLayer { required_samples, .. } if required_samples >= 126));
        assert!(BoundaryData::from_fn(32, |t| t.sin()).is_err());
    }

    #[test]
    fn mean_value_and_maximum_principle() {
        let d = BoundaryData::from_fn(256, |t| (3.0 * t).sin().abs() + 0.2 * t.cos()).unwrap();
        let mean = d.outer.iter().sum::<f64>() / 256.0;
        let h0 = schwarz_integral(&d, C64::new(0.0, 0.0)).unwrap();
        assert!((h0.re - mean).abs() < 1e-10 && h0.im.abs() < 1e-10);
        let (lo, hi) = d.outer.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, &v| (a.0.min(v), a.1.max(v)));
        let tol = 1e-6;
        for k in 0..200 {
            let z = C64::from_polar(0.97 * ((k * 37 % 200) as f64 / 200.0), 0.31 * k as f64);
            let u = schwarz_integral(&d, z).unwrap().re;
            assert!(u >= lo - tol && u <= hi + tol);
        }
    }

    #[test]
    fn discrete_laplacian_converges_at_second_order() {
        let d = BoundaryData::from_fn(256, |t| (t.cos() * 3.0).exp() * 0.1).unwrap();
        let s = SchwarzSeries::new(&d);
        let z = C64::new(0.3, -0.2);
        let lap = |h: f64| {
            let u = |p: C64| s.eval(p).re;
            (u(z + h) + u(z - h) + u(z + C64::new(0.0, h)) + u(z - C64::new(0.0, h)) - 4.0 * u(z)) / (h * h)
        };
        let (a, b) = (lap(0.04).abs(), lap(0.02).abs());
        assert!(b < a / 3.0, "{a} {b}");
    }

    #[test]
    fn annulus_examples() {
        let rho = 0.5;
        let c = BoundaryData::annulus_from_fn(128, |_| 2.5, |_| 2.5).unwrap();
        let h = annulus_dirichlet(&c, rho, 64).unwrap();
        assert!(h.c0.abs() < 1e-14 && (h.u(C64::new(0.7, 0.1)) - 2.5).abs() < 1e-12);
        assert_eq!(conjugate_period(&h), 0.0);
        let d = BoundaryData::annulus_from_fn(128, |_| 0.0, |_| 1.0).unwrap();
        let h = annulus_dirichlet(&d, rho, 64).unwrap();
        assert!((h.c0 - 1.0 / 2f64.ln()).abs() < 1e-12);
        let z = C64::new(0.6, 0.3);
        assert!((h.u(z) - (z.norm() / rho).ln() / (1.0 / rho).ln()).abs() < 1e-12);
        assert!((conjugate_period(&h) - 2.0 * PI / 2f64.ln()).abs() < 1e-12);
        let d2 = BoundaryData::annulus_from_fn(128, |_| 0.0, |_| 2.0).unwrap();
        let h2 = annulus_dirichlet(&d2, rho, 64).unwrap();
        assert!((conjugate_period(&h2) - 2.0 * conjugate_period(&h)).abs() < 1e-12);
    }

    #[test]
    fn cosine_on_the_outer_circle() {
        // u = (a r + b / r) cos(theta) with a + b = 1, a rho + b / rho = 0.
        let rho: f64 = 0.5;
        let d = BoundaryData::annulus_from_fn(128, |_| 0.0, |t| t.cos()).unwrap();
        let h = annulus_dirichlet(&d, rho, 64).unwrap();
        let a = 1.0 / (1.0 - rho * rho);
        let b = 1.0 - a;
        assert!(h.c0.abs() < 1e-14);
        assert!(h.outer_modes.iter().skip(1).all(|m| m.norm() < 1e-14));
        let z = C64::from_polar(0.7, 0.4);
        assert!((h.u(z) - (a * 0.7 + b / 0.7) * 0.4f64.cos()).abs() < 1e-12);
        assert!(h.boundary_error < 1e-12);
    }

    #[test]
    fn monodromy_along_loops() {
        let rho = 0.5;
        let d = BoundaryData::annulus_from_fn(128, |_| 0.0, |_| 1.0).unwrap();
        let h = annulus_dirichlet(&d, rho, 64).unwrap();
        let around: Vec<C64> = (0..=64).map(|k| C64::from_polar(0.75, 0.1 + 2.0 * PI * k as f64 / 64.0)).collect();
        let v = multivalent_eval(&h, &around).unwrap();
        let start = h.u(around[0]);
        assert!((v.re - start).abs() < 1e-8);
        assert!((v.im - 2.0 * PI / 2f64.ln()).abs() < 1e-6);
        let small: Vec<C64> = (0..=32).map(|k| C64::new(0.75, 0.0) + C64::from_polar(0.1, 2.0 * PI * k as f64 / 32.0)).collect();
        let v = multivalent_eval(&h, &small).unwrap();
        assert!((v - C64::new(h.u(small[0]), 0.0)).norm() < 1e-8);
        let numeric = contour_integral(|z| h.h_prime(z), &around);
        assert!((numeric.im - conjugate_period(&h)).abs() < 1e-9);
        assert!(multivalent_eval(&h, &[C64::new(0.7, 0.0), C64::new(-0.7, 0.01)]).is_err());
    }
}
