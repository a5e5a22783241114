//! Discrete natural-neighbor (Sibson) interpolation by scattering.
//!
//! Every voxel `x` whose nearest site is `s(x)` at index-space distance
//! `d(x)` donates `value(s(x))` to each voxel `q` with `|x - q| <= d(x)`.
//! The result at `q` is the mean of everything it received.
//!
//! Donations are tallied per site as integer counts, so the accumulation is
//! exact and independent of traversal order. The mean is then formed as
//! `sum(v_s * c_s) / sum(c_s)` over contributing sites in ascending site
//! order.

use super::grid::GridSpec;
use super::nearest::NearestField;
use super::Site;

/// Largest `r` with `r * r <= n`.
#[inline]
pub(crate) fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Combines per-site donation counts into a value. A single contributing
/// site yields its value unchanged; otherwise the weighted mean, clamped to
/// `[lo, hi]` so rounding cannot leave the data range.
#[inline]
pub(crate) fn finish(
    sum: f64,
    count: u64,
    distinct: u32,
    last_value: f64,
    lo: f64,
    hi: f64,
) -> f64 {
    if distinct == 1 {
        last_value
    } else {
        (sum / count as f64).clamp(lo, hi)
    }
}

/// Raw scattered means for every voxel, before sample voxels are pinned to
/// their own values.
pub fn sibson_scatter(sites: &[Site], field: &NearestField, spec: &GridSpec) -> Vec<f64> {
    let n = spec.len();
    let (nx, ny, nz) = (spec.nx as i64, spec.ny as i64, spec.nz as i64);
    let lo = sites.iter().map(|s| s.value).fold(f64::INFINITY, f64::min);
    let hi = sites
        .iter()
        .map(|s| s.value)
        .fold(f64::NEG_INFINITY, f64::max);

    // Voxels grouped by donor site.
    let mut start = vec![0usize; sites.len() + 1];
    for &s in &field.site {
        start[s as usize + 1] += 1;
    }
    for s in 0..sites.len() {
        start[s + 1] += start[s];
    }
    let mut members = vec![0usize; n];
    let mut fill = start.clone();
    for (v, &s) in field.site.iter().enumerate() {
        members[fill[s as usize]] = v;
        fill[s as usize] += 1;
    }

    let mut sum = vec![0.0f64; n];
    let mut count = vec![0u64; n];
    let mut distinct = vec![0u32; n];
    let mut last = vec![0.0f64; n];
    let mut diff: Vec<i64> = Vec::new();

    for (s, site) in sites.iter().enumerate() {
        let group = &members[start[s]..start[s + 1]];
        if group.is_empty() {
            continue;
        }
        // Bounding box of every ball donated by this site.
        let (mut bx0, mut by0, mut bz0) = (i64::MAX, i64::MAX, i64::MAX);
        let (mut bx1, mut by1, mut bz1) = (i64::MIN, i64::MIN, i64::MIN);
        for &v in group {
            let (ix, iy, iz) = spec.coords(v);
            let r = isqrt(field.dist2[v]) as i64;
            bx0 = bx0.min(ix as i64 - r);
            bx1 = bx1.max(ix as i64 + r);
            by0 = by0.min(iy as i64 - r);
            by1 = by1.max(iy as i64 + r);
            bz0 = bz0.min(iz as i64 - r);
            bz1 = bz1.max(iz as i64 + r);
        }
        let (bx0, by0, bz0) = (bx0.max(0), by0.max(0), bz0.max(0));
        let (bx1, by1, bz1) = (bx1.min(nx - 1), by1.min(ny - 1), bz1.min(nz - 1));
        let w = (bx1 - bx0 + 2) as usize;
        let h = (by1 - by0 + 1) as usize;
        let d = (bz1 - bz0 + 1) as usize;
        diff.clear();
        diff.resize(w * h * d, 0);
        let row = |y: i64, z: i64| ((z - bz0) as usize * h + (y - by0) as usize) * w;

        for &v in group {
            let (ix, iy, iz) = spec.coords(v);
            let (ix, iy, iz) = (ix as i64, iy as i64, iz as i64);
            let r2 = field.dist2[v];
            let r = isqrt(r2) as i64;
            for z in (iz - r).max(0)..=(iz + r).min(nz - 1) {
                let rem_z = r2 - ((z - iz) * (z - iz)) as u64;
                let ry = isqrt(rem_z) as i64;
                for y in (iy - ry).max(0)..=(iy + ry).min(ny - 1) {
                    let rem = rem_z - ((y - iy) * (y - iy)) as u64;
                    let rx = isqrt(rem) as i64;
                    let x_lo = (ix - rx).max(0);
                    let x_hi = (ix + rx).min(nx - 1);
                    let base = row(y, z);
                    diff[base + (x_lo - bx0) as usize] += 1;
                    diff[base + (x_hi + 1 - bx0) as usize] -= 1;
                }
            }
        }

        for z in bz0..=bz1 {
            for y in by0..=by1 {
                let base = row(y, z);
                let mut running = 0i64;
                for x in bx0..=bx1 {
                    running += diff[base + (x - bx0) as usize];
                    if running > 0 {
                        let q = spec.index(x as usize, y as usize, z as usize);
                        sum[q] += site.value * running as f64;
                        count[q] += running as u64;
                        distinct[q] += 1;
                        last[q] = site.value;
                    }
                }
            }
        }
    }

    (0..n)
        .map(|q| finish(sum[q], count[q], distinct[q], last[q], lo, hi))
        .collect()
}
