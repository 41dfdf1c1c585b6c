//! Geodesic zipper construction.
//!
//! The boundary is unzipped one vertex at a time: the first edge is opened
//! by a square root, every subsequent vertex is pulled to the real axis by
//! the map that unzips the hyperbolic geodesic ending at it, and the last
//! edge is closed by a squaring. A final Möbius map takes the upper
//! half-plane to the disk with the anchor at the origin.

use super::{Canonical, ConformalMap, Elementary, Step};
use crate::numeric::{signed_area, winding_number};
use crate::{Error, Result, C64};

const MIN_VERTICES: usize = 16;

/// Conformal map of the unit disk onto the interior of a closed polyline,
/// normalised by `forward(0) = anchor` and `forward'(0) > 0`.
pub fn zipper_map(boundary: &[C64], anchor: C64) -> Result<ConformalMap> {
    let mut pts: Vec<C64> = boundary.to_vec();
    if pts.len() > 1 && pts.first() == pts.last() {
        pts.pop();
    }
    if pts.len() < MIN_VERTICES {
        return Err(Error::Polyline(format!(
            "{} vertices, need at least {MIN_VERTICES}",
            pts.len()
        )));
    }
    if pts.iter().any(|p| !p.re.is_finite() || !p.im.is_finite()) {
        return Err(Error::Polyline("non-finite vertex".into()));
    }
    if let Some((i, j)) = first_crossing(&pts) {
        return Err(Error::Polyline(format!("self-crossing between edges {i} and {j}")));
    }
    if winding_number(&pts, anchor) == 0 {
        return Err(Error::Polyline(format!("anchor {anchor} is not inside the polyline")));
    }

    let n = pts.len();
    // counterclockwise order, interior on the left
    let reversed = signed_area(&pts) < 0.0;
    if reversed {
        pts.reverse();
    }
    let scale = pts.iter().map(|p| (p - anchor).norm()).fold(0.0, f64::max);

    let mut chain: Vec<Elementary> = Vec::with_capacity(n + 2);
    let open = Elementary::ZipperOpen { z0: pts[0], z1: pts[1] };
    let mut img: Vec<C64> = pts.iter().map(|&p| open.apply(p)).collect();
    img[0] = C64::new(f64::INFINITY, 0.0);
    img[1] = C64::new(0.0, 0.0);
    let mut a_img = open.apply(anchor);
    chain.push(open);

    for k in 2..n {
        let a = img[k];
        if a.im <= 1e-14 * a.norm().max(1e-300) {
            // already on the boundary (slit traversed back)
            img[k] = C64::new(a.re, 0.0);
            continue;
        }
        let m2 = a.norm_sqr();
        let slit = Elementary::ZipperSlit { inv_c: a.re / m2, d: m2 / a.im, base_side: -1.0 };
        for (j, v) in img.iter_mut().enumerate() {
            if j == k {
                *v = C64::new(0.0, 0.0);
            } else if j < k {
                let w = slit.apply(*v);
                *v = if w.re.is_finite() { C64::new(w.re, 0.0) } else { w };
            } else {
                *v = slit.apply(*v);
            }
        }
        a_img = slit.apply(a_img);
        chain.push(slit);
    }

    let w0 = img[0].re;
    let v = a_img / (1.0 - a_img / w0);
    let sign = if v.re >= 0.0 { 1.0 } else { -1.0 };
    let close = Elementary::ZipperClose { w0, sign };
    for v in img.iter_mut() {
        *v = close.apply(*v);
    }
    let a_half = close.apply(a_img);
    chain.push(close);
    if !(a_half.im > 0.0) {
        return Err(Error::Polyline("anchor did not land in the upper half-plane".into()));
    }

    // half-plane to disk, then fix the rotation so the map is tangent-positive
    let to_disk = |rot: C64| Elementary::Mobius { a: rot, b: -rot * a_half, c: C64::new(1.0, 0.0), d: -a_half.conj() };
    let unrotated = to_disk(C64::new(1.0, 0.0));
    let eval = |chain: &[Elementary], z: C64| chain.iter().fold(z, |w, m| m.apply(w));
    let mut probe = chain.clone();
    probe.push(unrotated);
    let delta = 1e-5 * scale;
    let deriv = (eval(&probe, anchor + delta) - eval(&probe, anchor - delta)) / (2.0 * delta);
    let rot = deriv.conj() / deriv.norm();
    let final_map = to_disk(rot);
    let vertex_pts: Vec<C64> = img.iter().map(|&v| final_map.apply(v)).collect();
    chain.push(final_map);

    let mut angles: Vec<f64> = vertex_pts.iter().map(|p| p.arg()).collect();
    if reversed {
        angles.reverse();
    }

    let steps = chain.into_iter().rev().map(Step::inverse_of).collect();
    let mut map = ConformalMap::from_steps("zipper", Canonical::Disk, steps);
    map.vertex_angles = Some(angles);
    Ok(map)
}

fn orient(a: C64, b: C64, c: C64) -> f64 {
    (b.re - a.re) * (c.im - a.im) - (b.im - a.im) * (c.re - a.re)
}

/// First pair of non-adjacent edges that cross properly.
fn first_crossing(pts: &[C64]) -> Option<(usize, usize)> {
    let n = pts.len();
    let bbox = |i: usize| {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        (a.re.min(b.re), a.re.max(b.re), a.im.min(b.im), a.im.max(b.im))
    };
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        let bi = bbox(i);
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let bj = bbox(j);
            if bi.1 < bj.0 || bj.1 < bi.0 || bi.3 < bj.2 || bj.3 < bi.2 {
                continue;
            }
            let (c, d) = (pts[j], pts[(j + 1) % n]);
            let d1 = orient(a, b, c);
            let d2 = orient(a, b, d);
            let d3 = orient(c, d, a);
            let d4 = orient(c, d, b);
            if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
                return Some((i, j));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn circle(n: usize, r: f64) -> Vec<C64> {
        (0..n).map(|k| C64::from_polar(r, 2.0 * PI * k as f64 / n as f64)).collect()
    }

    #[test]
    fn rejects_bad_input() {
        assert!(zipper_map(&circle(8, 1.0), C64::new(0.0, 0.0)).is_err());
        assert!(zipper_map(&circle(64, 1.0), C64::new(2.0, 0.0)).is_err());
        let mut bow = Vec::new();
        for k in 0..16 {
            let t = k as f64 / 16.0;
            bow.push(C64::new(-1.0 + 2.0 * t, -1.0 + 2.0 * t));
        }
        for k in 0..16 {
            let t = k as f64 / 16.0;
            bow.push(C64::new(1.0 - 2.0 * t, -1.0 + 2.0 * t));
        }
        let err = zipper_map(&bow, C64::new(0.0, 0.5)).unwrap_err();
        assert!(matches!(err, Error::Polyline(_)));
    }

    #[test]
    fn normalisation_and_orientation() {
        let anchor = C64::new(0.1, -0.05);
        for reversed in [false, true] {
            let mut pts = circle(256, 1.0);
            if reversed {
                pts.reverse();
            }
            let m = zipper_map(&pts, anchor).unwrap();
            assert!((m.forward(C64::new(0.0, 0.0)) - anchor).norm() < 1e-9);
            let d = m.derivative(C64::new(0.0, 0.0));
            assert!(d.re > 0.0 && d.im.abs() < 1e-6 * d.re);
            let angles = m.vertex_angles.as_ref().unwrap();
            // vertex order maps to monotone circle angles
            let step = if reversed { -1.0 } else { 1.0 };
            let mut total = 0.0;
            for k in 0..angles.len() {
                let da = crate::numeric::wrap_angle(angles[(k + 1) % angles.len()] - angles[k]) * step;
                assert!(da > 0.0, "non-monotone at {k}: {da}");
                total += da;
            }
            assert!((total - 2.0 * PI).abs() < 1e-9);
        }
    }

    #[test]
    fn vertices_land_on_the_unit_circle() {
        let pts: Vec<C64> = (0..128)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / 128.0;
                C64::new(1.3 * t.cos(), 0.7 * t.sin())
            })
            .collect();
        let m = zipper_map(&pts, C64::new(0.0, 0.0)).unwrap();
        // a vertex is two prime ends of the plane minus the curve; approach
        // it from the interior side
        for (p, a) in pts.iter().zip(m.vertex_angles.as_ref().unwrap()) {
            let w = m.inverse(*p * (1.0 - 1e-10));
            assert!((w.norm() - 1.0).abs() < 1e-6, "|w| = {}", w.norm());
            assert!((crate::numeric::wrap_angle(w.arg() - a)).abs() < 1e-6);
        }
    }
}
