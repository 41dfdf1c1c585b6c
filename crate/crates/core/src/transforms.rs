//! Cauchy and Beurling transforms on a periodic square grid.
//!
//! Both are Fourier multipliers: with `xi = 2 pi (m + i k) / L`,
//! `dbar <-> i xi / 2`, `d <-> i conj(xi) / 2`, the Cauchy transform is
//! `2 / (i xi)` and the Beurling transform `conj(xi) / xi`, each set to zero at
//! `xi = 0`.
//!
//! The `_free` variants add the difference between the free-space kernel
//! `1 / (pi z)` and its periodic counterpart, expanded in moments of the
//! field about the grid centre. For the square lattice this difference is
//! `conj(z) / A + (1/pi) sum G_k z^{k-1}` over `k = 4, 8, 12, ...` with the
//! lattice sums `G_k`.

use crate::field::Lattice;
use crate::numeric::{binomial, is_power_of_two};
use crate::{Error, Result, C64};
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

/// `sum' (m + i n)^-4` over the Gaussian integers.
const G4_UNIT: f64 = 3.151_212_002_153_897_5;

/// Highest lattice-sum order kept in the free-space expansion.
const MAX_ORDER: usize = 24;

fn lattice_sums() -> &'static [(usize, f64)] {
    static SUMS: OnceLock<Vec<(usize, f64)>> = OnceLock::new();
    SUMS.get_or_init(|| {
        let mut out = vec![(4, G4_UNIT)];
        let reach = 64i64;
        for k in (8..=MAX_ORDER).step_by(4) {
            let mut s = 0.0;
            for m in -reach..=reach {
                for n in -reach..=reach {
                    if m == 0 && n == 0 {
                        continue;
                    }
                    s += C64::new(m as f64, n as f64).powi(-(k as i32)).re;
                }
            }
            out.push((k, s));
        }
        out
    })
}

/// Periodic square grid with FFT plans.
#[derive(Clone)]
pub struct SpectralGrid {
    pub n: usize,
    pub center: C64,
    pub length: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("n", &self.n)
            .field("center", &self.center)
            .field("length", &self.length)
            .finish()
    }
}

/// Transform output with the support-margin flag.
#[derive(Clone, Debug)]
pub struct Transformed {
    pub values: Vec<C64>,
    /// False when the input reaches outside the central half of the box.
    pub margin_ok: bool,
}

impl SpectralGrid {
    pub fn new(n: usize, center: C64, length: f64) -> Result<Self> {
        if !is_power_of_two(n) || n < 2 {
            return Err(Error::NotPowerOfTwo(n));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            center,
            length,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    /// Grid of twice the size and extent of `lattice`, sharing its spacing
    /// and centre; the lattice occupies the central half.
    pub fn padded(lattice: &Lattice) -> Result<Self> {
        Self::new(2 * lattice.n, lattice.center, 2.0 * lattice.length)
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn lattice(&self) -> Lattice {
        Lattice { n: self.n, center: self.center, length: self.length }
    }

    pub fn point(&self, i: usize, j: usize) -> C64 {
        let h = self.spacing();
        self.center + C64::new((i as f64 + 0.5) * h - self.length / 2.0, (j as f64 + 0.5) * h - self.length / 2.0)
    }

    fn wavenumber(&self, i: usize) -> f64 {
        if i < self.n / 2 {
            i as f64
        } else {
            i as f64 - self.n as f64
        }
    }

    /// Complex frequency of mode `(i, j)`.
    pub fn frequency(&self, i: usize, j: usize) -> C64 {
        C64::new(self.wavenumber(i), self.wavenumber(j)) * (2.0 * PI / self.length)
    }

    fn transpose(&self, data: &mut [C64]) {
        let n = self.n;
        for j in 0..n {
            for i in (j + 1)..n {
                data.swap(j * n + i, i * n + j);
            }
        }
    }

    fn run(&self, plan: &Arc<dyn Fft<f64>>, data: &mut [C64]) {
        let mut scratch = vec![C64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(data, &mut scratch);
        self.transpose(data);
        plan.process_with_scratch(data, &mut scratch);
        self.transpose(data);
    }

    /// Unnormalised forward 2-D DFT, in place.
    pub fn fft2(&self, data: &mut [C64]) {
        self.run(&self.forward, data);
    }

    /// Inverse 2-D DFT including the `1/n^2` factor, in place.
    pub fn ifft2(&self, data: &mut [C64]) {
        self.run(&self.inverse, data);
        let s = 1.0 / (self.n * self.n) as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }

    /// Apply the Fourier multiplier `symbol(xi)`.
    pub fn apply_multiplier(&self, field: &[C64], symbol: impl Fn(C64) -> C64) -> Vec<C64> {
        assert_eq!(field.len(), self.n * self.n, "field does not match the grid");
        let mut data = field.to_vec();
        self.fft2(&mut data);
        for j in 0..self.n {
            for i in 0..self.n {
                let xi = self.frequency(i, j);
                data[j * self.n + i] *= symbol(xi);
            }
        }
        self.ifft2(&mut data);
        data
    }

    /// True when every nonzero sample lies in the central half of the box.
    pub fn margin_ok(&self, field: &[C64]) -> bool {
        let (lo, hi) = (self.n / 4, 3 * self.n / 4);
        (0..self.n).all(|j| (0..self.n).all(|i| (i >= lo && i < hi && j >= lo && j < hi) || field[j * self.n + i].norm() == 0.0))
    }

    /// Copy lattice values into the centre of this grid.
    pub fn embed(&self, lattice: &Lattice, values: &[C64]) -> Vec<C64> {
        let off = (self.n - lattice.n) / 2;
        let mut out = vec![C64::new(0.0, 0.0); self.n * self.n];
        for j in 0..lattice.n {
            let src = &values[j * lattice.n..(j + 1) * lattice.n];
            out[(j + off) * self.n + off..(j + off) * self.n + off + lattice.n].copy_from_slice(src);
        }
        out
    }

    /// Restrict grid values to the central lattice.
    pub fn extract(&self, lattice: &Lattice, values: &[C64]) -> Vec<C64> {
        let off = (self.n - lattice.n) / 2;
        let mut out = Vec::with_capacity(lattice.n * lattice.n);
        for j in 0..lattice.n {
            out.extend_from_slice(&values[(j + off) * self.n + off..(j + off) * self.n + off + lattice.n]);
        }
        out
    }

    /// Moments of the field about the centre, in units of the box length,
    /// together with `sum w conj(z - c) h^2`.
    fn moments(&self, field: &[C64]) -> (Vec<C64>, C64) {
        let h = self.spacing();
        let mut m = vec![C64::new(0.0, 0.0); MAX_ORDER];
        let mut n1 = C64::new(0.0, 0.0);
        for j in 0..self.n {
            for i in 0..self.n {
                let w = field[j * self.n + i];
                if w.norm() == 0.0 {
                    continue;
                }
                let d = self.point(i, j) - self.center;
                n1 += w * d.conj();
                let u = d / self.length;
                let mut p = C64::new(1.0, 0.0);
                for mk in m.iter_mut() {
                    *mk += w * p;
                    p *= u;
                }
            }
        }
        let area = h * h;
        (m.into_iter().map(|v| v * area).collect(), n1 * area)
    }

    /// Free-space minus periodic kernel, integrated against `field`.
    pub fn free_correction(&self, field: &[C64]) -> FreeCorrection {
        let (m, n1) = self.moments(field);
        let mut a = vec![C64::new(0.0, 0.0); MAX_ORDER];
        for &(k, g) in lattice_sums() {
            for j in 0..k {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                a[k - 1 - j] += m[j] * (g * binomial(k - 1, j) * sign);
            }
        }
        let s = 1.0 / (PI * self.length);
        a.iter_mut().for_each(|v| *v *= s);
        let deriv = (1..a.len()).map(|p| a[p] * (p as f64 / self.length)).collect();
        FreeCorrection {
            center: self.center,
            length: self.length,
            poly: a,
            deriv,
            moments: m.iter().enumerate().map(|(j, v)| v * self.length.powi(j as i32)).collect(),
            n1,
        }
    }

    fn add_correction(&self, out: &mut [C64], field: &[C64], derivative: bool) {
        let corr = self.free_correction(field);
        for j in 0..self.n {
            for i in 0..self.n {
                let z = self.point(i, j);
                out[j * self.n + i] += if derivative { corr.beurling_at(z) } else { corr.cauchy_at(z) };
            }
        }
    }
}

/// Correction from periodic to free-space transforms for one field.
#[derive(Clone, Debug)]
pub struct FreeCorrection {
    center: C64,
    length: f64,
    poly: Vec<C64>,
    deriv: Vec<C64>,
    /// `sum w (z - c)^j h^2`.
    pub moments: Vec<C64>,
    n1: C64,
}

fn horner(coeffs: &[C64], u: C64) -> C64 {
    coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * u + c)
}

impl FreeCorrection {
    pub fn cauchy_at(&self, z: C64) -> C64 {
        let d = z - self.center;
        horner(&self.poly, d / self.length) + (d.conj() * self.moments[0] - self.n1) / (self.length * self.length)
    }

    pub fn beurling_at(&self, z: C64) -> C64 {
        horner(&self.deriv, (z - self.center) / self.length)
    }

    /// Multipole expansion of the free-space Cauchy transform, valid
    /// outside the support.
    pub fn far_cauchy(&self, z: C64, terms: usize) -> C64 {
        far_cauchy(self.center, &self.moments[..terms.min(self.moments.len())], z)
    }
}

/// `(1/pi) sum_j M_j / (z - c)^{j+1}` for moments `M_j = sum w (z - c)^j h^2`.
pub fn far_cauchy(center: C64, moments: &[C64], z: C64) -> C64 {
    let inv = 1.0 / (z - center);
    let mut p = inv;
    let mut s = C64::new(0.0, 0.0);
    for m in moments {
        s += m * p;
        p *= inv;
    }
    s / PI
}

/// Periodic Beurling transform.
pub fn beurling(grid: &SpectralGrid, field: &[C64]) -> Transformed {
    let values = grid.apply_multiplier(field, |xi| if xi.norm() == 0.0 { C64::new(0.0, 0.0) } else { xi.conj() / xi });
    Transformed { values, margin_ok: grid.margin_ok(field) }
}

/// Periodic Cauchy transform, mean-zero gauge.
pub fn cauchy(grid: &SpectralGrid, field: &[C64]) -> Transformed {
    let values = grid.apply_multiplier(field, |xi| {
        if xi.norm() == 0.0 {
            C64::new(0.0, 0.0)
        } else {
            C64::new(0.0, -2.0) / xi
        }
    });
    Transformed { values, margin_ok: grid.margin_ok(field) }
}

/// Beurling transform with the periodisation corrected towards the
/// free-space operator (accurate where `|z - w|` stays below about `0.7 L`).
pub fn beurling_free(grid: &SpectralGrid, field: &[C64]) -> Transformed {
    let mut t = beurling(grid, field);
    grid.add_correction(&mut t.values, field, true);
    t
}

/// Solid Cauchy transform `(1/pi) int w(zeta) / (z - zeta) dm` with the
/// periodisation corrected as in [`beurling_free`].
pub fn cauchy_free(grid: &SpectralGrid, field: &[C64]) -> Transformed {
    let mut t = cauchy(grid, field);
    grid.add_correction(&mut t.values, field, false);
    t
}

/// Spectral `d/dzbar`.
pub fn d_zbar(grid: &SpectralGrid, field: &[C64]) -> Vec<C64> {
    grid.apply_multiplier(field, |xi| C64::new(0.0, 0.5) * xi)
}

/// Spectral `d/dz`.
pub fn d_z(grid: &SpectralGrid, field: &[C64]) -> Vec<C64> {
    grid.apply_multiplier(field, |xi| C64::new(0.0, 0.5) * xi.conj())
}

/// Discrete `L^2` norm `sqrt(sum |v|^2 h^2)`.
pub fn l2_norm(grid: &SpectralGrid, field: &[C64]) -> f64 {
    let h = grid.spacing();
    (field.iter().map(|v| v.norm_sqr()).sum::<f64>() * h * h).sqrt()
}
