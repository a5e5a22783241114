//! Piecewise-linear interpolation over a Delaunay tetrahedralization.

use super::delaunay::{barycentric, orient, spans_3d, DelaunayError, Point3, Tetrahedralization};
use super::grid::GridSpec;
use super::{InterpError, SamplePoint};

#[derive(Debug, Clone)]
pub struct LinearInterpolator {
    tri: Tetrahedralization,
    values: Vec<f64>,
    tets: Vec<[usize; 4]>,
}

/// Index-space position of a sample: column centres and depth slices land
/// on integers.
pub fn index_position(p: &SamplePoint, spec: &GridSpec) -> Point3 {
    let (u, v) = spec.to_index_space(p.x, p.y);
    [u, v, p.depth_cm as f64]
}

fn degenerate(e: DelaunayError) -> InterpError {
    InterpError::Degenerate(match e {
        DelaunayError::TooFewPoints(n) => {
            format!("linear interpolation needs at least 4 sample points, got {n}")
        }
        DelaunayError::Coplanar => {
            "sample points are coplanar (e.g. fewer than three non-collinear cores)".into()
        }
        DelaunayError::NonFinite(i) => format!("sample point {i} has non-finite coordinates"),
    })
}

/// The up-front geometry checks of [`LinearInterpolator::new`] without
/// building the tetrahedralization.
pub fn check_geometry(points: &[SamplePoint], spec: &GridSpec) -> Result<(), InterpError> {
    let coords: Vec<Point3> = points.iter().map(|p| index_position(p, spec)).collect();
    if coords.len() < 4 {
        return Err(degenerate(DelaunayError::TooFewPoints(coords.len())));
    }
    if let Some(i) = coords.iter().position(|p| p.iter().any(|v| !v.is_finite())) {
        return Err(degenerate(DelaunayError::NonFinite(i)));
    }
    if !spans_3d(&coords) {
        return Err(degenerate(DelaunayError::Coplanar));
    }
    Ok(())
}

impl LinearInterpolator {
    pub fn new(points: &[SamplePoint], spec: &GridSpec) -> Result<Self, InterpError> {
        let coords: Vec<Point3> = points.iter().map(|p| index_position(p, spec)).collect();
        let tri = Tetrahedralization::new(&coords).map_err(degenerate)?;
        let tets = tri.tetrahedra().collect();
        Ok(Self {
            tri,
            values: points.iter().map(|p| p.value).collect(),
            tets,
        })
    }

    pub fn tetrahedra(&self) -> &[[usize; 4]] {
        &self.tets
    }

    fn corners(&self, t: usize) -> [&Point3; 4] {
        let v = self.tri.vertices();
        self.tets[t].map(|i| &v[i])
    }

    /// Exact closed-tetrahedron containment.
    fn contains(&self, t: usize, p: &Point3) -> bool {
        let [a, b, c, d] = self.corners(t);
        orient(p, b, c, d) >= 0.0
            && orient(a, p, c, d) >= 0.0
            && orient(a, b, p, d) >= 0.0
            && orient(a, b, c, p) >= 0.0
    }

    /// Weights of `p` in tetrahedron `t`, or `None` when `p` lies outside it.
    /// Containment is decided exactly, so any negative weight is rounding
    /// noise; those are clamped to zero and the rest renormalized.
    pub fn weights_in(&self, t: usize, p: &Point3) -> Option<[f64; 4]> {
        if !self.contains(t, p) {
            return None;
        }
        let mut w = barycentric(self.corners(t), p);
        for wi in &mut w {
            if *wi < 0.0 {
                *wi = 0.0;
            }
        }
        let total: f64 = w.iter().sum();
        Some(w.map(|wi| wi / total))
    }

    /// Locates `p` by scanning; `(tetrahedron, weights)`.
    pub fn locate(&self, p: &Point3) -> Option<(usize, [f64; 4])> {
        (0..self.tets.len()).find_map(|t| self.weights_in(t, p).map(|w| (t, w)))
    }

    pub fn evaluate(&self, t: usize, w: &[f64; 4]) -> f64 {
        self.tets[t]
            .iter()
            .zip(w)
            .map(|(&i, wi)| wi * self.values[i])
            .sum()
    }

    /// Value at every voxel centre inside the hull; `None` elsewhere. Each
    /// voxel takes the first tetrahedron (in construction order) containing it.
    pub fn fill(&self, spec: &GridSpec) -> Vec<Option<f64>> {
        let mut out = vec![None; spec.len()];
        for t in 0..self.tets.len() {
            let corners = self.corners(t);
            let range = |k: usize, n: usize| {
                let lo = corners
                    .iter()
                    .map(|p| p[k])
                    .fold(f64::INFINITY, f64::min)
                    .ceil()
                    .max(0.0);
                let hi = corners
                    .iter()
                    .map(|p| p[k])
                    .fold(f64::NEG_INFINITY, f64::max)
                    .floor();
                if hi < 0.0 || lo > (n - 1) as f64 {
                    return 0..0;
                }
                lo as usize..(hi as usize).min(n - 1) + 1
            };
            let (rx, ry, rz) = (range(0, spec.nx), range(1, spec.ny), range(2, spec.nz));
            for iz in rz {
                for iy in ry.clone() {
                    for ix in rx.clone() {
                        let v = spec.index(ix, iy, iz);
                        if out[v].is_some() {
                            continue;
                        }
                        let p = [ix as f64, iy as f64, iz as f64];
                        if let Some(w) = self.weights_in(t, &p) {
                            out[v] = Some(self.evaluate(t, &w));
                        }
                    }
                }
            }
        }
        out
    }
}
