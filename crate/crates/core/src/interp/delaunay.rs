//! Incremental (Bowyer-Watson) 3D Delaunay tetrahedralization on exact
//! orientation and in-sphere predicates.
//!
//! The input is wrapped in a large bounding tetrahedron; tetrahedra touching
//! its corners are dropped from the output. Every output tetrahedron is
//! positively oriented, i.e. `orient3d(a, b, c, d) > 0` in the sense of the
//! `robust` crate.

use robust::{insphere, orient3d, Coord3D};

pub type Point3 = [f64; 3];

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DelaunayError {
    TooFewPoints(usize),
    /// All points lie on one plane (or line).
    Coplanar,
    NonFinite(usize),
}

#[inline]
fn c(p: &Point3) -> Coord3D<f64> {
    Coord3D {
        x: p[0],
        y: p[1],
        z: p[2],
    }
}

#[inline]
pub fn orient(a: &Point3, b: &Point3, cc: &Point3, d: &Point3) -> f64 {
    orient3d(c(a), c(b), c(cc), c(d))
}

/// True when the points span 3D space, decided exactly.
pub fn spans_3d(points: &[Point3]) -> bool {
    let Some(a) = points.first() else {
        return false;
    };
    let Some(b) = points.iter().find(|p| *p != a) else {
        return false;
    };
    let collinear_with_ab = |p: &Point3| {
        use robust::{orient2d, Coord};
        let proj = |q: &Point3, i: usize, j: usize| Coord { x: q[i], y: q[j] };
        [(0, 1), (1, 2), (0, 2)]
            .iter()
            .all(|&(i, j)| orient2d(proj(a, i, j), proj(b, i, j), proj(p, i, j)) == 0.0)
    };
    let Some(cc) = points.iter().find(|p| !collinear_with_ab(p)) else {
        return false;
    };
    points.iter().any(|d| orient(a, b, cc, d) != 0.0)
}

#[derive(Debug, Clone)]
struct Tet {
    v: [usize; 4],
    /// `nbr[i]` shares the face opposite `v[i]`.
    nbr: [usize; 4],
    alive: bool,
}

#[derive(Debug, Clone)]
pub struct Tetrahedralization {
    vertices: Vec<Point3>,
    n_input: usize,
    tets: Vec<Tet>,
    skipped_duplicates: usize,
}

impl Tetrahedralization {
    pub fn new(points: &[Point3]) -> Result<Self, DelaunayError> {
        if points.len() < 4 {
            return Err(DelaunayError::TooFewPoints(points.len()));
        }
        if let Some(i) = points.iter().position(|p| p.iter().any(|v| !v.is_finite())) {
            return Err(DelaunayError::NonFinite(i));
        }
        if !spans_3d(points) {
            return Err(DelaunayError::Coplanar);
        }

        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in points {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let center = [0, 1, 2].map(|k| 0.5 * (lo[k] + hi[k]));
        let extent = (0..3).map(|k| hi[k] - lo[k]).fold(0.0, f64::max);
        let s = 1.0e6 * (extent + 1.0);
        let mut vertices = points.to_vec();
        let n = points.len();
        vertices.push([center[0] - s, center[1] - s, center[2] - s]);
        vertices.push([center[0] + 5.0 * s, center[1] - s, center[2] - s]);
        vertices.push([center[0] - s, center[1] + 5.0 * s, center[2] - s]);
        vertices.push([center[0] - s, center[1] - s, center[2] + 5.0 * s]);
        let mut v = [n, n + 1, n + 2, n + 3];
        if orient(
            &vertices[v[0]],
            &vertices[v[1]],
            &vertices[v[2]],
            &vertices[v[3]],
        ) < 0.0
        {
            v.swap(0, 1);
        }

        let mut tri = Self {
            vertices,
            n_input: n,
            tets: vec![Tet {
                v,
                nbr: [NONE; 4],
                alive: true,
            }],
            skipped_duplicates: 0,
        };
        let mut builder = Builder::default();
        let mut last = 0;
        for i in 0..n {
            match tri.insert(i, last, &mut builder) {
                Some(t) => last = t,
                None => tri.skipped_duplicates += 1,
            }
        }
        Ok(tri)
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices[..self.n_input]
    }

    pub fn skipped_duplicates(&self) -> usize {
        self.skipped_duplicates
    }

    /// Tetrahedra whose four vertices are all input points.
    pub fn tetrahedra(&self) -> impl Iterator<Item = [usize; 4]> + '_ {
        self.tets
            .iter()
            .filter(|t| t.alive && t.v.iter().all(|&v| v < self.n_input))
            .map(|t| t.v)
    }

    fn point(&self, i: usize) -> &Point3 {
        &self.vertices[i]
    }

    fn orient_replacing(&self, t: &Tet, slot: usize, p: &Point3) -> f64 {
        let mut q = [
            self.point(t.v[0]),
            self.point(t.v[1]),
            self.point(t.v[2]),
            self.point(t.v[3]),
        ];
        q[slot] = p;
        orient(q[0], q[1], q[2], q[3])
    }

    fn locate(&self, p: &Point3, start: usize) -> usize {
        let mut cur = start;
        let limit = 4 * self.tets.len() + 64;
        'walk: for _ in 0..limit {
            let t = &self.tets[cur];
            for slot in 0..4 {
                if self.orient_replacing(t, slot, p) < 0.0 && t.nbr[slot] != NONE {
                    cur = t.nbr[slot];
                    continue 'walk;
                }
            }
            return cur;
        }
        // Fallback scan; the walk is not expected to cycle on a Delaunay mesh.
        (0..self.tets.len())
            .find(|&i| {
                let t = &self.tets[i];
                t.alive && (0..4).all(|s| self.orient_replacing(t, s, p) >= 0.0)
            })
            .expect("point lies inside the bounding tetrahedron")
    }

    fn in_sphere(&self, t: &Tet, p: &Point3) -> bool {
        let [a, b, cc, d] = t.v.map(|i| c(self.point(i)));
        insphere(a, b, cc, d, c(p)) > 0.0
    }

    /// Returns one of the new tetrahedra, or `None` when the point duplicates
    /// an existing vertex.
    fn insert(&mut self, pi: usize, start: usize, b: &mut Builder) -> Option<usize> {
        let p = self.vertices[pi];
        let t0 = self.locate(&p, start);
        if self.tets[t0].v.iter().any(|&v| self.vertices[v] == p) {
            return None;
        }

        b.epoch += 1;
        b.mark.resize(self.tets.len(), 0);
        b.cavity.clear();
        b.stack.clear();
        b.stack.push(t0);
        b.mark[t0] = b.epoch;
        while let Some(t) = b.stack.pop() {
            b.cavity.push(t);
            for slot in 0..4 {
                let n = self.tets[t].nbr[slot];
                if n != NONE && b.mark[n] != b.epoch && self.in_sphere(&self.tets[n], &p) {
                    b.mark[n] = b.epoch;
                    b.stack.push(n);
                }
            }
        }

        b.edges.clear();
        let mut newest = NONE;
        for ci in 0..b.cavity.len() {
            let t = b.cavity[ci];
            for slot in 0..4 {
                let outer = self.tets[t].nbr[slot];
                if outer != NONE && b.mark[outer] == b.epoch {
                    continue;
                }
                let mut v = self.tets[t].v;
                v[slot] = pi;
                debug_assert!(
                    orient(
                        self.point(v[0]),
                        self.point(v[1]),
                        self.point(v[2]),
                        self.point(v[3])
                    ) > 0.0,
                    "cavity face not visible from inserted point"
                );
                let id = self.tets.len();
                let mut nbr = [NONE; 4];
                nbr[slot] = outer;
                if outer != NONE {
                    let back = self.tets[outer]
                        .nbr
                        .iter()
                        .position(|&x| x == t)
                        .expect("adjacency is symmetric");
                    self.tets[outer].nbr[back] = id;
                }
                self.tets.push(Tet {
                    v,
                    nbr,
                    alive: true,
                });
                for j in (0..4).filter(|&j| j != slot) {
                    let mut key = [NONE; 2];
                    let mut k = 0;
                    for (m, &vm) in v.iter().enumerate() {
                        if m != j && m != slot {
                            key[k] = vm;
                            k += 1;
                        }
                    }
                    if key[0] > key[1] {
                        key.swap(0, 1);
                    }
                    match b.edges.remove(&key) {
                        Some((other, other_slot)) => {
                            self.tets[id].nbr[j] = other;
                            self.tets[other].nbr[other_slot] = id;
                        }
                        None => {
                            b.edges.insert(key, (id, j));
                        }
                    }
                }
                newest = id;
            }
        }
        debug_assert!(b.edges.is_empty(), "unmatched cavity faces");
        for &t in &b.cavity {
            self.tets[t].alive = false;
        }
        Some(newest)
    }
}

#[derive(Default)]
struct Builder {
    mark: Vec<u64>,
    epoch: u64,
    cavity: Vec<usize>,
    stack: Vec<usize>,
    edges: std::collections::HashMap<[usize; 2], (usize, usize)>,
}

/// Barycentric weights of `p` in tetrahedron `t` (floating point, unclamped).
pub fn barycentric(t: [&Point3; 4], p: &Point3) -> [f64; 4] {
    fn vol(a: &Point3, b: &Point3, c: &Point3, d: &Point3) -> f64 {
        let ab = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        let ac = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
        let ad = [d[0] - a[0], d[1] - a[1], d[2] - a[2]];
        ab[0] * (ac[1] * ad[2] - ac[2] * ad[1]) - ab[1] * (ac[0] * ad[2] - ac[2] * ad[0])
            + ab[2] * (ac[0] * ad[1] - ac[1] * ad[0])
    }
    let [a, b, cc, d] = t;
    let total = vol(a, b, cc, d);
    [
        vol(p, b, cc, d) / total,
        vol(a, p, cc, d) / total,
        vol(a, b, p, d) / total,
        vol(a, b, cc, p) / total,
    ]
}
