//! Principal solution of the Beltrami equation on the grid.
//!
//! The density `w = F_zbar` solves `w = mu (S w + 1)`; the map is
//! `F = z + C w`, tangent to the identity at infinity.

use crate::field::{truncate, Lattice, MuField};
use crate::numeric::median;
use crate::transforms::{far_cauchy, SpectralGrid};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

/// Grid-backed homeomorphic solution.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QcMap {
    pub mu: MuField,
    /// `F` at the lattice cell centres.
    pub w: Vec<C64>,
    pub iterations: usize,
    /// Final relative iteration increment `|w_{n+1} - w_n| / |mu|`.
    pub residual: f64,
    /// Relative iteration increments, one per iteration.
    pub increments: Vec<f64>,
    pub truncation: f64,
    pub converged: bool,
    /// Whether the density stayed in the central half of the spectral box.
    pub margin_ok: bool,
    /// `sum w (z - c)^j h^2` for the far-field expansion.
    pub moments: Vec<C64>,
    #[serde(skip)]
    seeds: OnceLock<Vec<(C64, C64)>>,
}

/// Iteration controls.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub trunc: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-10, trunc: 0.0, max_iter: 200 }
    }
}

fn l2(values: &[C64]) -> f64 {
    values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Fixed-point iteration for the principal solution.
pub fn principal_solution(mu: &MuField, opts: SolverOptions) -> Result<QcMap> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParams { id: "tol".into(), reason: "tolerance must be positive".into() });
    }
    let mut field = mu.clone();
    field.truncation = field.truncation.max(opts.trunc);
    for v in field.values.iter_mut() {
        let (t, cut) = truncate(*v, opts.trunc);
        field.truncated_cells += cut as usize;
        if t.norm() >= 1.0 {
            return Err(Error::Degenerate { modulus: t.norm(), location: "mu field".into() });
        }
        *v = t;
    }
    let lattice = field.lattice.clone();
    let identity: Vec<C64> = lattice.points().collect();
    if field.is_zero() {
        return Ok(QcMap {
            mu: field,
            w: identity,
            iterations: 1,
            residual: 0.0,
            increments: vec![],
            truncation: opts.trunc,
            converged: true,
            margin_ok: true,
            moments: vec![C64::new(0.0, 0.0); 8],
            seeds: OnceLock::new(),
        });
    }
    let grid = SpectralGrid::padded(&lattice)?;
    let mu_s = grid.embed(&lattice, &field.values);
    let support: Vec<usize> = (0..mu_s.len()).filter(|&k| mu_s[k].norm() > 0.0).collect();
    let mu_norm = l2(&mu_s);
    let mut omega = mu_s.clone();
    let mut increments = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let s = crate::transforms::beurling(&grid, &omega).values;
        let corr = grid.free_correction(&omega);
        let mut next = vec![C64::new(0.0, 0.0); omega.len()];
        for &k in &support {
            let z = grid.point(k % grid.n, k / grid.n);
            next[k] = mu_s[k] * (s[k] + corr.beurling_at(z) + 1.0);
        }
        let diff = l2(&next.iter().zip(&omega).map(|(a, b)| a - b).collect::<Vec<_>>()) / mu_norm;
        increments.push(diff);
        omega = next;
        if diff < opts.tol {
            converged = true;
            break;
        }
    }
    let margin_ok = grid.margin_ok(&omega);
    let c = crate::transforms::cauchy(&grid, &omega).values;
    let corr = grid.free_correction(&omega);
    let c = grid.extract(&lattice, &c);
    let w = identity
        .iter()
        .zip(&c)
        .map(|(&z, &cz)| z + cz + corr.cauchy_at(z))
        .collect();
    Ok(QcMap {
        mu: field,
        w,
        iterations,
        residual: *increments.last().unwrap_or(&0.0),
        increments,
        truncation: opts.trunc,
        converged,
        margin_ok,
        moments: corr.moments.iter().take(8).cloned().collect(),
        seeds: OnceLock::new(),
    })
}

impl QcMap {
    /// Wrap prescribed values of `F` (used for closed-form comparisons).
    pub fn from_values(mu: MuField, w: Vec<C64>) -> Self {
        Self {
            mu,
            w,
            iterations: 0,
            residual: 0.0,
            increments: vec![],
            truncation: 0.0,
            converged: true,
            margin_ok: true,
            moments: vec![C64::new(0.0, 0.0); 8],
            seeds: OnceLock::new(),
        }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.mu.lattice
    }

    /// Ratios of successive iteration increments above round-off level.
    pub fn contraction(&self) -> Vec<f64> {
        self.increments
            .windows(2)
            .filter(|p| p[1] > 1e-13)
            .map(|p| p[1] / p[0])
            .collect()
    }

    /// `F(z)`: bilinear on the lattice, multipole expansion outside.
    pub fn eval(&self, z: C64) -> C64 {
        let lat = self.lattice();
        if let Some((i, j, fx, fy)) = lat.stencil(z) {
            // Interpolate F - z so the identity part extrapolates exactly
            // across the outer half cell.
            let v = |a: usize, b: usize| self.w[lat.index(a, b)] - lat.point(a, b);
            let d = v(i, j) * (1.0 - fx) * (1.0 - fy) + v(i + 1, j) * fx * (1.0 - fy) + v(i, j + 1) * (1.0 - fx) * fy + v(i + 1, j + 1) * fx * fy;
            return z + d;
        }
        z + far_cauchy(lat.center, &self.moments, z)
    }

    fn seed_table(&self) -> &Vec<(C64, C64)> {
        self.seeds.get_or_init(|| {
            let lat = self.lattice();
            let step = (lat.n / 64).max(1);
            let mut out = Vec::new();
            for j in (0..lat.n).step_by(step) {
                for i in (0..lat.n).step_by(step) {
                    out.push((lat.point(i, j), self.w[lat.index(i, j)]));
                }
            }
            out
        })
    }

    /// `F^{-1}(target)` by Newton iteration on the interpolant, with a cell
    /// scan as fallback. `None` when the target is not in the lattice image.
    pub fn inverse(&self, target: C64) -> Option<C64> {
        let lat = self.lattice();
        let h = lat.spacing();
        let start = self
            .seed_table()
            .iter()
            .min_by(|a, b| (a.1 - target).norm().total_cmp(&(b.1 - target).norm()))
            .map(|s| s.0)?;
        let mut z = start;
        for _ in 0..50 {
            let fz = self.eval(z) - target;
            if fz.norm() < 1e-13 * (1.0 + target.norm()) {
                return lat.contains(z).then_some(z);
            }
            let d = 1e-3 * h;
            let fx = (self.eval(z + d) - self.eval(z - d)) / (2.0 * d);
            let fy = (self.eval(z + C64::new(0.0, d)) - self.eval(z - C64::new(0.0, d))) / (2.0 * d);
            let det = fx.re * fy.im - fx.im * fy.re;
            if det.abs() < 1e-300 {
                break;
            }
            let dx = (fy.im * fz.re - fy.re * fz.im) / det;
            let dy = (-fx.im * fz.re + fx.re * fz.im) / det;
            let step = C64::new(dx, dy);
            let step = if step.norm() > 4.0 * h { step * (4.0 * h / step.norm()) } else { step };
            z -= step;
        }
        if (self.eval(z) - target).norm() < 1e-9 * (1.0 + target.norm()) && lat.contains(z) {
            return Some(z);
        }
        self.scan_inverse(target)
    }

    fn scan_inverse(&self, target: C64) -> Option<C64> {
        let lat = self.lattice();
        let n = lat.n;
        for j in 0..n - 1 {
            for i in 0..n - 1 {
                let q = [
                    self.w[lat.index(i, j)],
                    self.w[lat.index(i + 1, j)],
                    self.w[lat.index(i + 1, j + 1)],
                    self.w[lat.index(i, j + 1)],
                ];
                let (lo_re, hi_re) = q.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, v| (a.0.min(v.re), a.1.max(v.re)));
                let (lo_im, hi_im) = q.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, v| (a.0.min(v.im), a.1.max(v.im)));
                if target.re < lo_re || target.re > hi_re || target.im < lo_im || target.im > hi_im {
                    continue;
                }
                // Inverse bilinear by Newton inside the cell.
                let (mut s, mut t) = (0.5, 0.5);
                for _ in 0..30 {
                    let f = q[0] * (1.0 - s) * (1.0 - t) + q[1] * s * (1.0 - t) + q[2] * s * t + q[3] * (1.0 - s) * t - target;
                    let fs = (q[1] - q[0]) * (1.0 - t) + (q[2] - q[3]) * t;
                    let ft = (q[3] - q[0]) * (1.0 - s) + (q[2] - q[1]) * s;
                    let det = fs.re * ft.im - fs.im * ft.re;
                    if det.abs() < 1e-300 {
                        break;
                    }
                    s -= (ft.im * f.re - ft.re * f.im) / det;
                    t -= (-fs.im * f.re + fs.re * f.im) / det;
                }
                if (-1e-9..=1.0 + 1e-9).contains(&s) && (-1e-9..=1.0 + 1e-9).contains(&t) {
                    return Some(lat.point(i, j) + C64::new(s, t) * lat.spacing());
                }
            }
        }
        None
    }
}

/// Discrete residual and Jacobian statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// `|F_zbar - mu F_z|_2 / |F_z|_2` over nodes at least two cells from
    /// the boundary of the support of `mu`.
    pub residual: f64,
    pub min_jacobian: f64,
    pub median_jacobian: f64,
    pub fold_cells: usize,
    pub cells: usize,
    pub positive_fraction: f64,
}

/// Central-difference derivatives at node `(i, j)`: `(F_z, F_zbar)`.
pub fn node_derivatives(lat: &Lattice, w: &[C64], i: usize, j: usize) -> (C64, C64) {
    let h = lat.spacing();
    let fx = (w[lat.index(i + 1, j)] - w[lat.index(i - 1, j)]) / (2.0 * h);
    let fy = (w[lat.index(i, j + 1)] - w[lat.index(i, j - 1)]) / (2.0 * h);
    let iy = C64::new(0.0, 1.0) * fy;
    ((fx - iy) * 0.5, (fx + iy) * 0.5)
}

/// Residual of the Beltrami equation and Jacobian / fold diagnostics.
pub fn beltrami_residual(map: &QcMap) -> ResidualReport {
    let lat = map.lattice();
    let n = lat.n;
    let cov = &map.mu.coverage;
    let mixed = |i: usize, j: usize| {
        let c = cov[lat.index(i, j)];
        let lo_i = i.saturating_sub(2);
        let lo_j = j.saturating_sub(2);
        (lo_j..=(j + 2).min(n - 1)).any(|b| (lo_i..=(i + 2).min(n - 1)).any(|a| cov[lat.index(a, b)] != c)) || (c > 0.0 && c < 1.0)
    };
    let (mut num, mut den) = (0.0, 0.0);
    let mut jac = Vec::new();
    for j in 1..n - 1 {
        for i in 1..n - 1 {
            if mixed(i, j) {
                continue;
            }
            let (fz, fzb) = node_derivatives(lat, &map.w, i, j);
            let mu = map.mu.values[lat.index(i, j)];
            num += (fzb - mu * fz).norm_sqr();
            den += fz.norm_sqr();
            jac.push(fz.norm_sqr() - fzb.norm_sqr());
        }
    }
    let mut folds = 0;
    let mut cells = 0;
    for j in 0..n - 1 {
        for i in 0..n - 1 {
            let q = [
                map.w[lat.index(i, j)],
                map.w[lat.index(i + 1, j)],
                map.w[lat.index(i + 1, j + 1)],
                map.w[lat.index(i, j + 1)],
            ];
            cells += 1;
            if crate::numeric::signed_area(&q) <= 0.0 {
                folds += 1;
            }
        }
    }
    ResidualReport {
        residual: if den > 0.0 { (num / den).sqrt() } else { 0.0 },
        min_jacobian: jac.iter().cloned().fold(f64::INFINITY, f64::min),
        median_jacobian: if jac.is_empty() { f64::NAN } else { median(&jac) },
        fold_cells: folds,
        cells,
        positive_fraction: 1.0 - folds as f64 / cells.max(1) as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{sample_mu, MuProfile};
    use crate::geometry::DomainSpec;

    #[test]
    fn zero_coefficient_gives_identity() {
        let mu = sample_mu(&MuProfile::Zero, &DomainSpec::disk(), 64, 0.0).unwrap();
        let map = principal_solution(&mu, SolverOptions::default()).unwrap();
        assert_eq!(map.iterations, 1);
        assert_eq!(map.residual, 0.0);
        let r = beltrami_residual(&map);
        assert!(r.residual < 1e-12);
        assert!((r.min_jacobian - 1.0).abs() < 1e-9 && (r.median_jacobian - 1.0).abs() < 1e-9);
        assert_eq!(r.fold_cells, 0);
        let z = C64::new(0.3, -0.4);
        assert!((map.eval(z) - z).norm() < 1e-12);
        assert!((map.inverse(z).unwrap() - z).norm() < 1e-9);
    }

    #[test]
    fn closed_form_jacobian() {
        let mu = sample_mu(&MuProfile::from_id("constant", &[0.3]).unwrap(), &DomainSpec::disk(), 128, 0.0).unwrap();
        let w = mu
            .lattice
            .points()
            .map(|z| if z.norm() < 1.0 { z + 0.3 * z.conj() } else { z + 0.3 / z })
            .collect();
        let map = QcMap::from_values(mu, w);
        let lat = map.lattice().clone();
        let (i, j) = lat.cell_of(C64::new(0.2, 0.1)).unwrap();
        let (fz, fzb) = node_derivatives(&lat, &map.w, i, j);
        assert!((fz.norm_sqr() - fzb.norm_sqr() - 0.91).abs() < 1e-3);
        assert_eq!(beltrami_residual(&map).fold_cells, 0);
    }

    #[test]
    fn folded_grid_is_flagged() {
        let mu = sample_mu(&MuProfile::Zero, &DomainSpec::disk(), 64, 0.0).unwrap();
        let w = mu
            .lattice
            .points()
            .map(|z| if (z - C64::new(0.3, 0.3)).norm() < 0.2 { z.conj() } else { z })
            .collect();
        let r = beltrami_residual(&QcMap::from_values(mu, w));
        assert!(r.fold_cells > 0 && r.min_jacobian < 0.0);
    }

    #[test]
    fn degenerate_without_truncation_is_rejected() {
        let mut mu = sample_mu(&MuProfile::Zero, &DomainSpec::disk(), 32, 0.0).unwrap();
        mu.values[500] = C64::new(1.0, 0.0);
        let opts = SolverOptions { trunc: 0.0, ..Default::default() };
        assert!(matches!(principal_solution(&mu, opts), Err(Error::Degenerate { .. })));
        let opts = SolverOptions { trunc: 0.1, ..Default::default() };
        let map = principal_solution(&mu, opts).unwrap();
        assert!(map.mu.max_modulus() <= 0.9 + 1e-12);
    }

    #[test]
    fn unconverged_runs_are_flagged() {
        let mu = sample_mu(&MuProfile::from_id("constant", &[0.5]).unwrap(), &DomainSpec::disk(), 32, 0.0).unwrap();
        let map = principal_solution(&mu, SolverOptions { tol: 1e-14, trunc: 0.0, max_iter: 3 }).unwrap();
        assert!(!map.converged && map.iterations == 3);
    }
}
