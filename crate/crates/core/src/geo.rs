//! WGS84 points, a local equirectangular metric frame, and axis-aligned
//! geographic rectangles.
//!
//! Field sites span at most a few kilometres, so a flat-earth frame centred on
//! the site is accurate to well under half a percent and needs no geodesy
//! library.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean Earth radius in metres.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Metres per degree of latitude, rounded to the value the frame is defined with.
pub const METERS_PER_DEG_LAT: f64 = 111_320.0;

/// Frames are refused this close to the poles.
pub const MAX_FRAME_LAT: f64 = 89.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("coordinate out of range: lat {lat}, lon {lon}")]
    OutOfRange { lat: f64, lon: f64 },
    #[error("degenerate frame: |latitude| {0} must be below {MAX_FRAME_LAT}")]
    DegenerateFrame(f64),
    #[error("invalid rectangle: west {west} > east {east} or south {south} > north {north}")]
    InvalidRect {
        west: f64,
        east: f64,
        south: f64,
        north: f64,
    },
    #[error("bounding rectangle of an empty point list")]
    EmptyPoints,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeoError> {
        if !lat.is_finite() || !lon.is_finite() || lat.abs() > 90.0 || lon.abs() > 180.0 {
            return Err(GeoError::OutOfRange { lat, lon });
        }
        Ok(Self { lat, lon })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }
}

impl<'de> Deserialize<'de> for GeoPoint {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            lat: f64,
            lon: f64,
        }
        let raw = Raw::deserialize(deserializer)?;
        GeoPoint::new(raw.lat, raw.lon).map_err(serde::de::Error::custom)
    }
}

/// Equirectangular tangent frame: x metres east, y metres north of `origin`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalFrame {
    pub origin: GeoPoint,
    pub meters_per_deg_lat: f64,
    pub meters_per_deg_lon: f64,
}

pub fn make_frame(origin: GeoPoint) -> Result<LocalFrame, GeoError> {
    if origin.lat.abs() >= MAX_FRAME_LAT {
        return Err(GeoError::DegenerateFrame(origin.lat.abs()));
    }
    Ok(LocalFrame {
        origin,
        meters_per_deg_lat: METERS_PER_DEG_LAT,
        meters_per_deg_lon: METERS_PER_DEG_LAT * origin.lat.to_radians().cos(),
    })
}

impl LocalFrame {
    pub fn project(&self, p: GeoPoint) -> (f64, f64) {
        (
            (p.lon - self.origin.lon) * self.meters_per_deg_lon,
            (p.lat - self.origin.lat) * self.meters_per_deg_lat,
        )
    }

    /// Inverse of [`LocalFrame::project`]. Fails only when the metres land
    /// outside the valid lat/lon range.
    pub fn unproject(&self, x: f64, y: f64) -> Result<GeoPoint, GeoError> {
        GeoPoint::new(
            self.origin.lat + y / self.meters_per_deg_lat,
            self.origin.lon + x / self.meters_per_deg_lon,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeoRect {
    west: f64,
    east: f64,
    south: f64,
    north: f64,
}

impl GeoRect {
    /// Antimeridian-crossing rectangles (`west > east`) are rejected.
    pub fn new(west: f64, east: f64, south: f64, north: f64) -> Result<Self, GeoError> {
        GeoPoint::new(south, west)?;
        GeoPoint::new(north, east)?;
        if west > east || south > north {
            return Err(GeoError::InvalidRect {
                west,
                east,
                south,
                north,
            });
        }
        Ok(Self {
            west,
            east,
            south,
            north,
        })
    }

    pub fn west(&self) -> f64 {
        self.west
    }
    pub fn east(&self) -> f64 {
        self.east
    }
    pub fn south(&self) -> f64 {
        self.south
    }
    pub fn north(&self) -> f64 {
        self.north
    }

    pub fn center(&self) -> GeoPoint {
        GeoPoint {
            lat: 0.5 * (self.south + self.north),
            lon: 0.5 * (self.west + self.east),
        }
    }

    /// Inclusive on all four edges.
    pub fn contains(&self, p: GeoPoint) -> bool {
        p.lat >= self.south && p.lat <= self.north && p.lon >= self.west && p.lon <= self.east
    }

    pub fn is_degenerate(&self) -> bool {
        self.west == self.east || self.south == self.north
    }
}

impl<'de> Deserialize<'de> for GeoRect {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            west: f64,
            east: f64,
            south: f64,
            north: f64,
        }
        let r = Raw::deserialize(deserializer)?;
        GeoRect::new(r.west, r.east, r.south, r.north).map_err(serde::de::Error::custom)
    }
}

/// Width and height in metres, measured in a frame centred on the rectangle.
pub fn viewport_extent(rect: &GeoRect) -> Result<(f64, f64), GeoError> {
    let frame = make_frame(rect.center())?;
    Ok((
        (rect.east - rect.west) * frame.meters_per_deg_lon,
        (rect.north - rect.south) * frame.meters_per_deg_lat,
    ))
}

pub fn bounding_rect(points: &[GeoPoint]) -> Result<GeoRect, GeoError> {
    let first = points.first().ok_or(GeoError::EmptyPoints)?;
    let mut rect = GeoRect {
        west: first.lon,
        east: first.lon,
        south: first.lat,
        north: first.lat,
    };
    for p in &points[1..] {
        rect.west = rect.west.min(p.lon);
        rect.east = rect.east.max(p.lon);
        rect.south = rect.south.min(p.lat);
        rect.north = rect.north.max(p.lat);
    }
    Ok(rect)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent great-circle distance used as the oracle below.
    fn haversine(a: GeoPoint, b: GeoPoint) -> f64 {
        let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
        let dp = p2 - p1;
        let dl = (b.lon - a.lon).to_radians();
        let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
        2.0 * EARTH_RADIUS_M * h.sqrt().asin()
    }

    fn pt(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon).unwrap()
    }

    #[test]
    fn lat_constant_matches_equatorial_radius() {
        let derived = 6_378_137.0 * std::f64::consts::PI / 180.0;
        assert!((derived - METERS_PER_DEG_LAT).abs() < 1.0);
    }

    #[test]
    fn equator_frame_is_isotropic() {
        let f = make_frame(pt(0.0, 0.0)).unwrap();
        assert_eq!(f.meters_per_deg_lat, 111_320.0);
        assert_eq!(f.meters_per_deg_lon, 111_320.0);
    }

    #[test]
    fn site_frame_lon_scale() {
        let origin = pt(23.954198, -108.862394);
        let f = make_frame(origin).unwrap();
        assert!(
            (f.meters_per_deg_lon - 101_732.0).abs() <= 1.0,
            "{}",
            f.meters_per_deg_lon
        );
        let step = haversine(origin, pt(23.954198, -108.861394)) / 0.001;
        assert!((f.meters_per_deg_lon - step).abs() / step < 0.005);
    }

    #[test]
    fn polar_frame_rejected() {
        assert!(matches!(
            make_frame(pt(90.0, 0.0)),
            Err(GeoError::DegenerateFrame(_))
        ));
        assert!(make_frame(pt(-89.5, 10.0)).is_err());
    }

    #[test]
    fn project_small_offsets() {
        let origin = pt(23.954198, -108.862394);
        let f = make_frame(origin).unwrap();
        assert_eq!(f.project(origin), (0.0, 0.0));

        let east = pt(23.954198, -108.861394);
        let (x, y) = f.project(east);
        let oracle = haversine(origin, east);
        assert!((x - 101.73).abs() < 0.01, "{x}");
        assert!((x - oracle).abs() / oracle < 0.005);
        assert_eq!(y, 0.0);

        for lat in [-45.0, 0.0, 23.954198, 60.0] {
            let f = make_frame(pt(lat, 0.0)).unwrap();
            let north = pt(lat + 0.001, 0.0);
            let (_, y) = f.project(north);
            let oracle = haversine(pt(lat, 0.0), north);
            assert!((y - 111.32).abs() < 1e-9);
            assert!((y - oracle).abs() / oracle < 0.005);
        }
    }

    #[test]
    fn unproject_round_trip() {
        let f = make_frame(pt(23.954198, -108.862394)).unwrap();
        for &(x, y) in &[(0.0, 0.0), (9_999.0, -7_000.0), (-123.456, 42.0)] {
            let p = f.unproject(x, y).unwrap();
            let (x2, y2) = f.project(p);
            let q = f.unproject(x2, y2).unwrap();
            assert!((p.lat - q.lat).abs() <= 1e-9 && (p.lon - q.lon).abs() <= 1e-9);
        }
    }

    #[test]
    fn viewport_examples() {
        let r = GeoRect::new(10.0, 10.0, 5.0, 5.0).unwrap();
        assert_eq!(viewport_extent(&r).unwrap(), (0.0, 0.0));

        let r = GeoRect::new(-0.5, 0.5, -0.5, 0.5).unwrap();
        let (w, h) = viewport_extent(&r).unwrap();
        assert!((w - 111_320.0).abs() < 1e-6 && (h - 111_320.0).abs() < 1e-6);

        let r = GeoRect::new(-108.863, -108.862, 23.954, 23.955).unwrap();
        let (w, h) = viewport_extent(&r).unwrap();
        let mid = 23.9545;
        let ow = haversine(pt(mid, -108.863), pt(mid, -108.862));
        let oh = haversine(pt(23.954, -108.8625), pt(23.955, -108.8625));
        assert!((w - 101.7).abs() < 0.1 && (h - 111.3).abs() < 0.1);
        assert!((w - ow).abs() / ow < 0.005 && (h - oh).abs() / oh < 0.005);
    }

    #[test]
    fn bounding_rect_examples() {
        assert_eq!(bounding_rect(&[]), Err(GeoError::EmptyPoints));

        let r = bounding_rect(&[pt(1.0, 2.0)]).unwrap();
        assert_eq!((r.south, r.north, r.west, r.east), (1.0, 1.0, 2.0, 2.0));

        let r = bounding_rect(&[pt(23.954198, -108.862394), pt(23.954822, -108.863020)]).unwrap();
        assert_eq!(r.south(), 23.954198);
        assert_eq!(r.north(), 23.954822);
        assert_eq!(r.west(), -108.863020);
        assert_eq!(r.east(), -108.862394);

        let r = bounding_rect(&[pt(0.0, 0.0), pt(1.0, 1.0), pt(2.0, 2.0)]).unwrap();
        assert_eq!((r.south, r.north, r.west, r.east), (0.0, 2.0, 0.0, 2.0));
    }

    #[test]
    fn constructors_validate() {
        assert!(GeoPoint::new(f64::NAN, 0.0).is_err());
        assert!(GeoPoint::new(91.0, 0.0).is_err());
        assert!(GeoPoint::new(0.0, -180.5).is_err());
        assert!(GeoRect::new(1.0, 0.0, 0.0, 1.0).is_err());
        assert!(serde_json::from_str::<GeoPoint>(r#"{"lat":100,"lon":0}"#).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn round_trip_within_10km(lat in -60.0f64..60.0, lon in -179.0f64..179.0,
                                      dx in -7_000.0f64..7_000.0, dy in -7_000.0f64..7_000.0) {
                let f = make_frame(pt(lat, lon)).unwrap();
                let p = f.unproject(dx, dy).unwrap();
                let (x, y) = f.project(p);
                let q = f.unproject(x, y).unwrap();
                prop_assert!((p.lat - q.lat).abs() <= 1e-9);
                prop_assert!((p.lon - q.lon).abs() <= 1e-9);
            }

            #[test]
            fn bounding_rect_order_invariant_and_idempotent(
                raw in proptest::collection::vec((-80.0f64..80.0, -170.0f64..170.0), 1..20),
                seed in any::<u64>(),
            ) {
                let pts: Vec<_> = raw.iter().map(|&(a, b)| pt(a, b)).collect();
                let r = bounding_rect(&pts).unwrap();
                let mut shuffled = pts.clone();
                let n = shuffled.len();
                for i in 0..n {
                    let j = ((seed.wrapping_mul(6364136223846793005).wrapping_add(i as u64)) % n as u64) as usize;
                    shuffled.swap(i, j);
                }
                prop_assert_eq!(bounding_rect(&shuffled).unwrap(), r);
                let corners = [pt(r.south, r.west), pt(r.north, r.east)];
                prop_assert_eq!(bounding_rect(&corners).unwrap(), r);
                prop_assert!(pts.iter().all(|p| r.contains(*p)));
            }
        }
    }
}
