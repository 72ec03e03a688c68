//! Nearest-position matching of two geotagged traces with distance and
//! heading gates.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Mean Earth radius (m) for the local planar projection.
const EARTH_RADIUS: f64 = 6_371_008.8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !(lat.is_finite() && (-90.0..=90.0).contains(&lat)) {
            return Err(Error::validation("lat", format!("{lat} outside [-90, 90]")));
        }
        if !(lon.is_finite() && (-180.0..=180.0).contains(&lon)) {
            return Err(Error::validation("lon", format!("{lon} outside [-180, 180]")));
        }
        Ok(Self { lat, lon })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchConfig {
    /// Distance gate (m).
    pub d_max: f64,
    /// Heading gate (degrees).
    pub phi_max: f64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            d_max: 4.0,
            phi_max: 45.0,
        }
    }
}

impl MatchConfig {
    pub fn new(d_max: f64, phi_max: f64) -> Result<Self> {
        if !(d_max.is_finite() && d_max > 0.0) {
            return Err(Error::validation("d_max", format!("must be > 0, got {d_max}")));
        }
        if !(phi_max > 0.0 && phi_max < 180.0) {
            return Err(Error::validation("phi_max", format!("must lie in (0, 180), got {phi_max}")));
        }
        Ok(Self { d_max, phi_max })
    }
}

/// Outcome for one IMU sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    /// Index of the nearest reference point.
    pub ref_index: usize,
    pub distance: f64,
    /// Absolute heading difference in `[0, 180]` degrees.
    pub angle: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    /// One entry per IMU sample; `None` when a gate rejects the nearest point.
    pub matches: Vec<Option<Match>>,
}

impl MatchResult {
    pub fn n_matched(&self) -> usize {
        self.matches.iter().flatten().count()
    }
}

/// Equirectangular projection about a fixed origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalProjection {
    lat0: f64,
    lon0: f64,
    cos_lat0: f64,
}

impl LocalProjection {
    pub fn new(origin: GeoPoint) -> Self {
        Self {
            lat0: origin.lat,
            lon0: origin.lon,
            cos_lat0: origin.lat.to_radians().cos(),
        }
    }

    /// Projection centered on the mean position of `points`.
    pub fn centroid_of<'a>(points: impl IntoIterator<Item = &'a GeoPoint>) -> Self {
        let (mut lat, mut lon, mut n) = (0.0, 0.0, 0usize);
        for p in points {
            lat += p.lat;
            lon += p.lon;
            n += 1;
        }
        let n = n.max(1) as f64;
        Self::new(GeoPoint {
            lat: lat / n,
            lon: lon / n,
        })
    }

    /// `(east, north)` in metres.
    pub fn project(&self, p: &GeoPoint) -> (f64, f64) {
        (
            (p.lon - self.lon0).to_radians() * self.cos_lat0 * EARTH_RADIUS,
            (p.lat - self.lat0).to_radians() * EARTH_RADIUS,
        )
    }

    pub fn unproject(&self, east: f64, north: f64) -> GeoPoint {
        GeoPoint {
            lat: self.lat0 + (north / EARTH_RADIUS).to_degrees(),
            lon: self.lon0 + (east / (EARTH_RADIUS * self.cos_lat0)).to_degrees(),
        }
    }
}

fn heading_of(dx: f64, dy: f64) -> Option<f64> {
    if dx == 0.0 && dy == 0.0 {
        None
    } else {
        Some(dx.atan2(dy).to_degrees().rem_euclid(360.0))
    }
}

fn planar_headings(xy: &[(f64, f64)]) -> Vec<f64> {
    let n = xy.len();
    let mut raw: Vec<Option<f64>> = (0..n)
        .map(|i| {
            let (a, b) = match i {
                0 => (0, 1.min(n - 1)),
                _ if i == n - 1 => (n - 2, n - 1),
                _ => (i - 1, i + 1),
            };
            heading_of(xy[b].0 - xy[a].0, xy[b].1 - xy[a].1)
        })
        .collect();
    // carry the last defined heading forward, and the first one backwards
    let mut last = None;
    for h in raw.iter_mut() {
        match h {
            Some(v) => last = Some(*v),
            None => *h = last,
        }
    }
    let first = raw.iter().flatten().next().copied().unwrap_or(0.0);
    raw.into_iter().map(|h| h.unwrap_or(first)).collect()
}

/// Heading of travel (degrees clockwise from north) at each point, from
/// central differences; endpoints use one-sided differences.
pub fn headings(trace: &[GeoPoint]) -> Result<Vec<f64>> {
    if trace.len() < 2 {
        return Err(Error::validation("trace", "headings need at least two points"));
    }
    let proj = LocalProjection::centroid_of(trace);
    let xy: Vec<(f64, f64)> = trace.iter().map(|p| proj.project(p)).collect();
    Ok(planar_headings(&xy))
}

/// Absolute difference of two headings, wrapped to `[0, 180]`.
pub fn angle_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    if d > 180.0 {
        360.0 - d
    } else {
        d
    }
}

struct GridIndex {
    cell: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
}

impl GridIndex {
    fn new(points: &[(f64, f64)], cell: f64) -> Self {
        let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(cell, p)).or_default().push(i);
        }
        Self { cell, cells }
    }

    fn key(cell: f64, p: &(f64, f64)) -> (i64, i64) {
        ((p.0 / cell).floor() as i64, (p.1 / cell).floor() as i64)
    }

    /// Nearest point within `radius` (ties broken by lowest index).
    fn nearest_within(&self, points: &[(f64, f64)], q: &(f64, f64), radius: f64) -> Option<(usize, f64)> {
        let (cx, cy) = Self::key(self.cell, q);
        let reach = (radius / self.cell).ceil() as i64;
        let mut best: Option<(usize, f64)> = None;
        for ix in (cx - reach)..=(cx + reach) {
            for iy in (cy - reach)..=(cy + reach) {
                let Some(bucket) = self.cells.get(&(ix, iy)) else { continue };
                for &i in bucket {
                    let d = (points[i].0 - q.0).hypot(points[i].1 - q.1);
                    let better = match best {
                        None => true,
                        Some((bi, bd)) => d < bd || (d == bd && i < bi),
                    };
                    if better {
                        best = Some((i, d));
                    }
                }
            }
        }
        best.filter(|(_, d)| *d <= radius)
    }
}

/// For each IMU point, the nearest reference point is accepted when it is
/// closer than `d_max` and the headings differ by less than `phi_max`.
///
/// Only the single nearest candidate is gated; a farther point that would pass
/// the heading gate is not considered.
pub fn match_traces(imu: &[GeoPoint], reference: &[GeoPoint], cfg: &MatchConfig) -> Result<MatchResult> {
    let cfg = MatchConfig::new(cfg.d_max, cfg.phi_max)?;
    if imu.is_empty() || reference.is_empty() {
        return Err(Error::validation("trace", "both traces must be non-empty"));
    }
    let proj = LocalProjection::centroid_of(imu.iter().chain(reference));
    let a: Vec<(f64, f64)> = imu.iter().map(|p| proj.project(p)).collect();
    let b: Vec<(f64, f64)> = reference.iter().map(|p| proj.project(p)).collect();
    let ha = if a.len() >= 2 { planar_headings(&a) } else { vec![0.0; a.len()] };
    let hb = if b.len() >= 2 { planar_headings(&b) } else { vec![0.0; b.len()] };
    let index = GridIndex::new(&b, cfg.d_max);
    let matches = a
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let (j, d) = index.nearest_within(&b, q, cfg.d_max)?;
            let angle = angle_difference(ha[i], hb[j]);
            (d < cfg.d_max && angle < cfg.phi_max).then_some(Match {
                ref_index: j,
                distance: d,
                angle,
            })
        })
        .collect();
    Ok(MatchResult { matches })
}
