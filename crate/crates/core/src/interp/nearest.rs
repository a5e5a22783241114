//! Exact nearest-sample field on the voxel lattice.
//!
//! Distances are measured in index space: one step in x, y or z counts as
//! one unit regardless of the physical cell size. Squared distances are
//! integers, so comparisons and tie-breaking (lowest site index) are exact.

use super::grid::GridSpec;
use super::Site;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NearestField {
    /// Index into the site list for every voxel.
    pub site: Vec<u32>,
    /// Squared index-space distance to that site.
    pub dist2: Vec<u64>,
}

impl NearestField {
    pub fn distance(&self, voxel: usize) -> f64 {
        (self.dist2[voxel] as f64).sqrt()
    }

    pub fn max_dist2(&self) -> u64 {
        self.dist2.iter().copied().max().unwrap_or(0)
    }
}

struct Column {
    ix: i64,
    iy: i64,
    /// `(iz, site index)` sorted by depth.
    sites: Vec<(i64, u32)>,
}

/// Nearest site for every voxel. `sites` must be non-empty and sorted by
/// voxel index (as produced by [`super::snap_to_sites`]).
pub fn nearest_sample_field(sites: &[Site], spec: &GridSpec) -> NearestField {
    assert!(!sites.is_empty(), "nearest field needs at least one site");
    let mut columns: Vec<Column> = Vec::new();
    {
        let mut by_xy: std::collections::BTreeMap<(usize, usize), Vec<(i64, u32)>> =
            Default::default();
        for (s, site) in sites.iter().enumerate() {
            by_xy
                .entry((site.iy, site.ix))
                .or_default()
                .push((site.iz as i64, s as u32));
        }
        for ((iy, ix), mut list) in by_xy {
            list.sort_unstable();
            columns.push(Column {
                ix: ix as i64,
                iy: iy as i64,
                sites: list,
            });
        }
    }

    let n = spec.len();
    let mut site = vec![0u32; n];
    let mut dist2 = vec![0u64; n];
    let mut order: Vec<(u64, usize)> = Vec::with_capacity(columns.len());
    for iy in 0..spec.ny {
        for ix in 0..spec.nx {
            order.clear();
            order.extend(columns.iter().enumerate().map(|(c, col)| {
                let dx = col.ix - ix as i64;
                let dy = col.iy - iy as i64;
                ((dx * dx + dy * dy) as u64, c)
            }));
            order.sort_unstable();
            for iz in 0..spec.nz {
                let z = iz as i64;
                let mut best = (u64::MAX, u32::MAX);
                for &(h2, c) in &order {
                    if h2 > best.0 {
                        break;
                    }
                    let list = &columns[c].sites;
                    let pos = list.partition_point(|&(sz, _)| sz < z);
                    for &(sz, s) in list[pos.saturating_sub(1)..(pos + 1).min(list.len())].iter() {
                        let dz = sz - z;
                        let cand = (h2 + (dz * dz) as u64, s);
                        if cand < best {
                            best = cand;
                        }
                    }
                }
                let v = spec.index(ix, iy, iz);
                site[v] = best.1;
                dist2[v] = best.0;
            }
        }
    }
    NearestField { site, dist2 }
}
