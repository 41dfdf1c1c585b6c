//! Helpers shared by the integration targets.
#![allow(dead_code)]

use beltrami_core::criteria::Verdict;
use beltrami_core::numeric::gauss_legendre;
use beltrami_core::transforms::SpectralGrid;
use beltrami_core::C64;
use std::f64::consts::PI;

/// Cell-averaged indicator of the unit disk, 4x4 subsampling near the rim.
pub fn unit_disk_indicator(grid: &SpectralGrid) -> Vec<C64> {
    let h = grid.spacing();
    let mut out = Vec::with_capacity(grid.n * grid.n);
    for j in 0..grid.n {
        for i in 0..grid.n {
            let c = grid.point(i, j);
            let frac = if c.norm() < 1.0 - h {
                1.0
            } else if c.norm() > 1.0 + h {
                0.0
            } else {
                let mut k = 0;
                for a in 0..4 {
                    for b in 0..4 {
                        let z = c + C64::new((a as f64 - 1.5) * h / 4.0, (b as f64 - 1.5) * h / 4.0);
                        k += (z.norm() < 1.0) as usize;
                    }
                }
                k as f64 / 16.0
            };
            out.push(C64::new(frac, 0.0));
        }
    }
    out
}

/// Bilinear interpolation of grid values.
pub fn at(grid: &SpectralGrid, values: &[C64], z: C64) -> C64 {
    let h = grid.spacing();
    let p = (z - grid.point(0, 0)) / h;
    let (i, j) = (p.re.floor() as usize, p.im.floor() as usize);
    let (fx, fy) = (p.re - i as f64, p.im - j as f64);
    let v = |a: usize, b: usize| values[b * grid.n + a];
    v(i, j) * (1.0 - fx) * (1.0 - fy) + v(i + 1, j) * fx * (1.0 - fy) + v(i, j + 1) * (1.0 - fx) * fy + v(i + 1, j + 1) * fx * fy
}

/// -(1/pi) int_D dm / (z - w)^2 for z outside the unit disk, polar Gauss rule.
pub fn beurling_disk_oracle(z: C64) -> C64 {
    let (x, w) = gauss_legendre(48);
    let m = 512;
    let mut s = C64::new(0.0, 0.0);
    for (xr, wr) in x.iter().zip(&w) {
        let r = 0.5 * (xr + 1.0);
        for k in 0..m {
            let p = C64::from_polar(r, 2.0 * PI * k as f64 / m as f64);
            s += (z - p).powi(-2) * (0.5 * wr * r * 2.0 * PI / m as f64);
        }
    }
    -s / PI
}

pub fn probes(radii: &[f64], per: usize) -> Vec<C64> {
    radii
        .iter()
        .enumerate()
        .flat_map(|(a, &r)| (0..per).map(move |k| C64::from_polar(r, 0.37 + a as f64 + 2.0 * PI * k as f64 / per as f64)))
        .collect()
}

/// Closed-form verdicts for `K = r^(p-1) log^q(1/r)` at the origin. With
/// `L = log(1/r)`:
/// - `||K||(0, r) = 2 pi r^p L^q`, so `int dr / ||K||` behaves like
///   `int L^-q dL` when `p = 1` and is finite for `p < 1`;
/// - the circle mean is `r^(p-1) L^q`;
/// - the mean oscillation of `L^q` on `B(0, eps)` is `q L^(q-1) / e` to
///   leading order, and of `r^(p-1)` it is `c eps^(p-1)`;
/// - with `psi = 1/t`, `J = 2 pi int L^q dL` against `I = L - L0`;
///   with `psi = 1/(t L)`, `J = 2 pi int L^(q-2) dL` against `I = log(L/L0)`;
/// - `exp(K)` is integrable iff `exp(L^q) r^(p-1)`-growth is at most `1/r`.
pub fn power_log_oracle(criterion: &str, p: i32, q: i32) -> Verdict {
    let pass = match criterion {
        "divergence" => p > 1 || (p == 1 && q <= 1),
        "log" | "loglog" => p == 1 && q <= 1,
        "fmo" | "bmo" => p == 1 && q <= 1,
        "limsup" => p == 1 && q == 0,
        "calibrated:inverse-t" => p == 1 && q == 0,
        "calibrated:inverse-t-log" => p == 1 && q <= 1,
        "orlicz:exp:1" => p == 1 && q <= 1,
        "orlicz:power:2" | "orlicz:power:1" => false,
        other => panic!("no oracle for {other}"),
    };
    if pass {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}
