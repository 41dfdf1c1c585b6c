mod common;

use common::{at, beurling_disk_oracle, probes, unit_disk_indicator};
use beltrami_core::transforms::{beurling, beurling_free, cauchy, cauchy_free, d_z, d_zbar, l2_norm, SpectralGrid};
use beltrami_core::C64;
use std::f64::consts::PI;

/// (1/pi) int_D dm / (z - w) for z inside the unit disk, polar about z.
fn cauchy_disk_oracle(z: C64) -> C64 {
    let m = 4096;
    let mut s = C64::new(0.0, 0.0);
    for k in 0..m {
        let t = 2.0 * PI * k as f64 / m as f64;
        let e = C64::from_polar(1.0, t);
        let b = (z.conj() * e).re;
        let reach = -b + (b * b + 1.0 - z.norm_sqr()).sqrt();
        s += e.conj() * reach;
    }
    -s * (2.0 * PI / m as f64) / PI
}

#[test]
fn beurling_of_the_disk_indicator() {
    let g = SpectralGrid::new(1024, C64::new(0.0, 0.0), 4.4).unwrap();
    let chi = unit_disk_indicator(&g);
    let s = beurling_free(&g, &chi);
    assert!(s.margin_ok);
    let inside = probes(&[0.2, 0.45, 0.7, 0.9], 5);
    let worst_inside = inside.iter().map(|&z| at(&g, &s.values, z).norm()).fold(0.0, f64::max);
    assert!(worst_inside < 3e-2, "interior max {worst_inside}");
    let outside = probes(&[1.15, 1.3, 1.5, 1.8], 5);
    for z in outside {
        let oracle = beurling_disk_oracle(z);
        assert!((oracle.norm() - 1.0 / z.norm_sqr()).abs() < 1e-6);
        let rel = (at(&g, &s.values, z) - oracle).norm() / oracle.norm();
        assert!(rel < 3e-2, "exterior {z}: {rel}");
    }
}

#[test]
fn cauchy_of_the_disk_indicator() {
    let g = SpectralGrid::new(1024, C64::new(0.0, 0.0), 4.4).unwrap();
    let chi = unit_disk_indicator(&g);
    let c = cauchy_free(&g, &chi);
    for z in probes(&[0.25, 0.5, 0.75, 0.9], 5) {
        let oracle = cauchy_disk_oracle(z);
        assert!((oracle - z.conj()).norm() < 1e-9);
        let rel = (at(&g, &c.values, z) - oracle).norm() / oracle.norm();
        assert!(rel < 3e-2, "{z}: {rel}");
    }
}

#[test]
fn beurling_is_an_isometry() {
    let g = SpectralGrid::new(256, C64::new(0.0, 0.0), 4.4).unwrap();
    let f: Vec<C64> = (0..g.n * g.n)
        .map(|k| {
            let z = g.point(k % g.n, k / g.n);
            C64::new(1.0, 0.5) * (-(z - C64::new(0.2, 0.1)).norm_sqr() / 0.09).exp()
        })
        .collect();
    let mean = f.iter().sum::<C64>() / (g.n * g.n) as f64;
    let centred: Vec<C64> = f.iter().map(|v| v - mean).collect();
    let s = beurling(&g, &f);
    let rel = (l2_norm(&g, &s.values) - l2_norm(&g, &centred)).abs() / l2_norm(&g, &centred);
    assert!(rel < 1e-10, "{rel}");
}

#[test]
fn spectral_identities() {
    let g = SpectralGrid::new(256, C64::new(0.0, 0.0), 4.4).unwrap();
    // Mean-zero input: x-derivative of a Gaussian.
    let f: Vec<C64> = (0..g.n * g.n)
        .map(|k| {
            let z = g.point(k % g.n, k / g.n);
            C64::new(z.re * (-z.norm_sqr() / 0.09).exp(), 0.0)
        })
        .collect();
    let c = cauchy(&g, &f).values;
    let back = d_zbar(&g, &c);
    let scale = f.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let err = f.iter().zip(&back).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(err / scale < 1e-6, "{err}");
    let s = beurling(&g, &f).values;
    let dz = d_z(&g, &c);
    let err = s.iter().zip(&dz).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(err / scale < 1e-6, "{err}");
}

#[test]
fn free_space_cauchy_of_a_gaussian() {
    // Radial w: C w(z) = (2/z) int_0^|z| w(r) r dr = (s^2 / z)(1 - exp(-|z|^2/s^2)).
    let sigma = 0.3;
    let g = SpectralGrid::new(256, C64::new(0.0, 0.0), 4.4).unwrap();
    let f: Vec<C64> = (0..g.n * g.n)
        .map(|k| C64::new((-g.point(k % g.n, k / g.n).norm_sqr() / (sigma * sigma)).exp(), 0.0))
        .collect();
    let c = cauchy_free(&g, &f).values;
    for z in probes(&[0.2, 0.6, 1.0, 1.4], 5) {
        let p = (z - g.point(0, 0)) / g.spacing();
        let (i, j) = (p.re.round() as usize, p.im.round() as usize);
        let node = g.point(i, j);
        let exact = (1.0 - (-node.norm_sqr() / (sigma * sigma)).exp()) * sigma * sigma / node;
        assert!((c[j * g.n + i] - exact).norm() < 1e-8, "{node}");
    }
}

#[test]
fn refinement_halves_the_error_on_a_smooth_field() {
    // w = (1 - |z|^2)^2 on the disk: C w = (1 - (1 - |z|^2)^3) / (3 z).
    let err = |n: usize| {
        let g = SpectralGrid::new(n, C64::new(0.0, 0.0), 4.4).unwrap();
        let f: Vec<C64> = (0..n * n)
            .map(|k| {
                let r2 = g.point(k % n, k / n).norm_sqr();
                C64::new(if r2 < 1.0 { (1.0 - r2).powi(2) } else { 0.0 }, 0.0)
            })
            .collect();
        let c = cauchy_free(&g, &f).values;
        probes(&[0.3, 0.6, 0.85], 6)
            .into_iter()
            .map(|z| {
                let exact = (1.0 - (1.0 - z.norm_sqr()).powi(3)) / (3.0 * z);
                (at(&g, &c, z) - exact).norm()
            })
            .fold(0.0, f64::max)
    };
    let (e512, e1024) = (err(512), err(1024));
    assert!(e1024 <= 0.5 * e512, "{e512} -> {e1024}");
}
