//! Spatial interpolation of lattice fields.

use crate::error::{LakeError, Result};
use crate::geometry::field::{ScalarField, VectorField};
use crate::geometry::grid::Grid;

/// Catmull-Rom weights for local coordinate `s` in `[0, 1)`, for the nodes at
/// offsets -1, 0, 1, 2.
#[inline]
fn catmull_rom(s: f64) -> [f64; 4] {
    let s2 = s * s;
    let s3 = s2 * s;
    [
        0.5 * (-s3 + 2.0 * s2 - s),
        0.5 * (3.0 * s3 - 5.0 * s2 + 2.0),
        0.5 * (-3.0 * s3 + 4.0 * s2 + s),
        0.5 * (s3 - s2),
    ]
}

/// Bicubic interpolation of a scalar field, clamped to the range spanned by
/// the four corners of the containing cell so no new extrema appear.
/// Points off the lattice read as zero.
pub fn sample_scalar_clamped(field: &ScalarField, x: [f64; 2]) -> f64 {
    let grid = field.grid();
    let v = field.values();
    let (cx, cy, s, t) = grid.locate(x);
    let at = |ix: i64, iy: i64| grid.lattice_index(ix, iy).map_or(0.0, |k| v[k]);
    let corners = [at(cx, cy), at(cx + 1, cy), at(cx, cy + 1), at(cx + 1, cy + 1)];
    let lo = corners.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = corners.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return lo;
    }
    let wx = catmull_rom(s);
    let wy = catmull_rom(t);
    let mut acc = 0.0;
    for (b, wyb) in wy.iter().enumerate() {
        let mut row = 0.0;
        for (a, wxa) in wx.iter().enumerate() {
            row += wxa * at(cx - 1 + a as i64, cy - 1 + b as i64);
        }
        acc += wyb * row;
    }
    acc.clamp(lo, hi)
}

/// Velocity at an arbitrary point inside the lake: bicubic where the whole
/// 4x4 stencil carries unknowns, otherwise bilinear over the interior
/// corners of the cell with renormalized weights.
pub fn sample_velocity(u: &VectorField, x: [f64; 2], t: f64) -> Result<[f64; 2]> {
    let grid: &Grid = u.grid();
    let left = || LakeError::LeftDomain { x: x[0], y: x[1], t };
    if !x[0].is_finite() || !x[1].is_finite() || grid.domain().phi(x) <= 0.0 {
        return Err(left());
    }
    let (cx, cy, s, tt) = grid.locate(x);
    let mut stencil = [[0usize; 4]; 4];
    let mut full = true;
    'outer: for (b, row) in stencil.iter_mut().enumerate() {
        for (a, slot) in row.iter_mut().enumerate() {
            match grid.interior_at(cx - 1 + a as i64, cy - 1 + b as i64) {
                Some(i) => *slot = i,
                None => {
                    full = false;
                    break 'outer;
                }
            }
        }
    }
    if full {
        let wx = catmull_rom(s);
        let wy = catmull_rom(tt);
        let mut acc = [0.0; 2];
        for b in 0..4 {
            for a in 0..4 {
                let w = wx[a] * wy[b];
                let v = u.at(stencil[b][a]);
                acc[0] += w * v[0];
                acc[1] += w * v[1];
            }
        }
        return Ok(acc);
    }
    let mut acc = [0.0; 2];
    let mut wsum = 0.0;
    for (dx, dy, w) in [
        (0, 0, (1.0 - s) * (1.0 - tt)),
        (1, 0, s * (1.0 - tt)),
        (0, 1, (1.0 - s) * tt),
        (1, 1, s * tt),
    ] {
        if let Some(i) = grid.interior_at(cx + dx, cy + dy) {
            let v = u.at(i);
            acc[0] += w * v[0];
            acc[1] += w * v[1];
            wsum += w;
        }
    }
    if wsum <= 1e-12 {
        return Err(left());
    }
    Ok([acc[0] / wsum, acc[1] / wsum])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::domain::LakeDomain;

    #[test]
    fn weights_partition_unity_and_reproduce_cubics() {
        for s in [0.0, 0.3, 0.77] {
            let w = catmull_rom(s);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            let lin: f64 = w.iter().enumerate().map(|(k, wk)| wk * (k as f64 - 1.0)).sum();
            assert!((lin - s).abs() < 1e-15);
        }
    }

    #[test]
    fn smooth_fields_interpolate_accurately() {
        let g = Grid::build(&LakeDomain::disk(0.0, 1.0).unwrap(), 64).unwrap();
        let f = ScalarField::from_fn(&g, "f", |x| (2.0 * x[0]).sin() * x[1]);
        let u = VectorField::from_fn(&g, "u", |x| [-x[1], x[0] * x[0]]);
        for p in [[0.123f64, -0.2], [0.4, 0.41], [-0.33, 0.05]] {
            let exact = (2.0 * p[0]).sin() * p[1];
            assert!((sample_scalar_clamped(&f, p) - exact).abs() < 1e-4);
            let v = sample_velocity(&u, p, 0.0).unwrap();
            assert!((v[0] + p[1]).abs() < 1e-12);
            assert!((v[1] - p[0] * p[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn clamping_prevents_overshoot() {
        let g = Grid::build(&LakeDomain::disk(0.0, 1.0).unwrap(), 32).unwrap();
        let f = ScalarField::from_fn(&g, "step", |x| if x[0] > 0.0 { 1.0 } else { 0.0 });
        for k in 0..50 {
            let x = [-0.2 + 0.008 * k as f64, 0.1];
            let v = sample_scalar_clamped(&f, x);
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn outside_points_are_rejected() {
        let g = Grid::build(&LakeDomain::disk(1.0, 1.0).unwrap(), 32).unwrap();
        let u = VectorField::zeros(&g, "u");
        assert!(matches!(
            sample_velocity(&u, [1.01, 0.0], 0.5),
            Err(LakeError::LeftDomain { .. })
        ));
        assert!(sample_velocity(&u, [0.995, 0.0], 0.5).is_ok());
    }
}
