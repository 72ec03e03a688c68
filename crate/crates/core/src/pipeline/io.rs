//! CSV and key=value file formats.
//!
//! | file      | columns                                                          |
//! |-----------|------------------------------------------------------------------|
//! | drive     | `t_s,az_mps2,ax_mps2,v_mps,lat_deg,lon_deg`                       |
//! | profile   | `station_m,elev_left_m,elev_right_m[,lat_deg,lon_deg]`            |
//! | segments  | `start_station_m,end_station_m,iri_mm_per_m,lat_deg,lon_deg,flags` |
//! | matches   | `imu_index,ref_index,distance_m,angle_deg`                        |
//! | params    | `key = value` lines, `#` comments                                 |
//!
//! Floats are written with nine significant digits; empty cells stand for
//! missing optional values. Every writer replaces its target atomically.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geomatch::{GeoPoint, MatchResult};
use crate::iri::IriSegment;
use crate::models::{golden_car_params, identified_car_params, VehicleParams};
use crate::simulate::RoadProfile;

pub const DRIVE_HEADER: [&str; 6] = ["t_s", "az_mps2", "ax_mps2", "v_mps", "lat_deg", "lon_deg"];
pub const PROFILE_HEADER: [&str; 5] = ["station_m", "elev_left_m", "elev_right_m", "lat_deg", "lon_deg"];
pub const SEGMENT_HEADER: [&str; 6] = ["start_station_m", "end_station_m", "iri_mm_per_m", "lat_deg", "lon_deg", "flags"];
pub const MATCH_HEADER: [&str; 4] = ["imu_index", "ref_index", "distance_m", "angle_deg"];

/// Formats a float with nine significant digits in its shortest form.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let rounded: f64 = format!("{v:.8e}").parse().expect("formatted float parses");
    rounded.to_string()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// One row of a CSV table with its 1-based file line number.
struct Row {
    line: usize,
    cells: Vec<String>,
}

struct Table {
    header: Vec<String>,
    rows: Vec<Row>,
}

impl Table {
    fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    fn require(&self, name: &str) -> Result<usize> {
        self.column(name).ok_or_else(|| Error::Parse {
            line: 1,
            reason: format!("missing column `{name}`"),
        })
    }
}

fn read_table(path: &Path) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header = rdr.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            reason: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        rows.push(Row {
            line,
            cells: rec.iter().map(str::to_string).collect(),
        });
    }
    Ok(Table { header, rows })
}

fn cell_f64(row: &Row, col: usize, name: &str) -> Result<f64> {
    let raw = row.cells.get(col).map(String::as_str).unwrap_or("");
    let v: f64 = raw.parse().map_err(|_| Error::Parse {
        line: row.line,
        reason: format!("`{name}` is not a number: `{raw}`"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line: row.line,
            reason: format!("`{name}` is not finite"),
        });
    }
    Ok(v)
}

fn cell_opt_f64(row: &Row, col: Option<usize>, name: &str) -> Result<Option<f64>> {
    match col {
        Some(c) if row.cells.get(c).is_some_and(|s| !s.is_empty()) => cell_f64(row, c, name).map(Some),
        _ => Ok(None),
    }
}

// ---------------------------------------------------------------------------
// drives

/// One IMU sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveRecord {
    pub t: f64,
    /// Vertical acceleration including gravity (m/s²).
    pub az: f64,
    /// Lateral acceleration (m/s²).
    pub ax: f64,
    pub v: f64,
    pub lat: f64,
    pub lon: f64,
}

/// A sampling interval outside the nominal 50 Hz ± 10 %.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleGap {
    /// File line of the later sample.
    pub line: usize,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Drive {
    pub records: Vec<DriveRecord>,
    pub gaps: Vec<SampleGap>,
}

pub const NOMINAL_DT: f64 = 0.02;

impl Drive {
    /// Mean sampling interval.
    pub fn dt(&self) -> f64 {
        let n = self.records.len();
        if n < 2 {
            NOMINAL_DT
        } else {
            (self.records[n - 1].t - self.records[0].t) / (n - 1) as f64
        }
    }

    pub fn t0(&self) -> f64 {
        self.records.first().map_or(0.0, |r| r.t)
    }

    pub fn positions(&self) -> Vec<GeoPoint> {
        self.records.iter().map(|r| GeoPoint { lat: r.lat, lon: r.lon }).collect()
    }
}

pub fn read_drive(path: &Path) -> Result<Drive> {
    let table = read_table(path)?;
    if table.header.iter().map(String::as_str).ne(DRIVE_HEADER) {
        return Err(Error::Parse {
            line: 1,
            reason: format!("drive header must be `{}`", DRIVE_HEADER.join(",")),
        });
    }
    let mut records: Vec<DriveRecord> = Vec::with_capacity(table.rows.len());
    let mut lines: Vec<usize> = Vec::with_capacity(table.rows.len());
    let mut gaps = Vec::new();
    for row in &table.rows {
        if row.cells.len() != DRIVE_HEADER.len() {
            return Err(Error::Parse {
                line: row.line,
                reason: format!("expected {} fields, found {}", DRIVE_HEADER.len(), row.cells.len()),
            });
        }
        let f = |c: usize| cell_f64(row, c, DRIVE_HEADER[c]);
        let rec = DriveRecord {
            t: f(0)?,
            az: f(1)?,
            ax: f(2)?,
            v: f(3)?,
            lat: f(4)?,
            lon: f(5)?,
        };
        if rec.v < 0.0 {
            return Err(Error::Parse {
                line: row.line,
                reason: format!("negative speed {}", rec.v),
            });
        }
        GeoPoint::new(rec.lat, rec.lon).map_err(|e| Error::Parse {
            line: row.line,
            reason: e.to_string(),
        })?;
        if let Some(prev) = records.last() {
            let prev_line = *lines.last().expect("lines track records");
            if rec.t == prev.t {
                return Err(Error::Parse {
                    line: row.line,
                    reason: format!("duplicate timestamp {} on lines {prev_line} and {}", rec.t, row.line),
                });
            }
            if rec.t < prev.t {
                return Err(Error::Parse {
                    line: row.line,
                    reason: format!("time goes backwards from {} (line {prev_line}) to {}", prev.t, rec.t),
                });
            }
            let dt = rec.t - prev.t;
            if (dt - NOMINAL_DT).abs() > 0.1 * NOMINAL_DT {
                gaps.push(SampleGap { line: row.line, dt });
            }
        }
        records.push(rec);
        lines.push(row.line);
    }
    for g in &gaps {
        log::warn!("line {}: sample interval {} s outside 50 Hz ± 10 %", g.line, g.dt);
    }
    Ok(Drive { records, gaps })
}

pub fn write_drive(path: &Path, records: &[DriveRecord]) -> Result<()> {
    let rows = records.iter().map(|r| {
        [r.t, r.az, r.ax, r.v, r.lat, r.lon].iter().map(|v| fmt_f64(*v)).collect()
    });
    write_atomic(path, &csv_bytes(&DRIVE_HEADER, rows)?)
}

// ---------------------------------------------------------------------------
// profiles

pub fn read_profile(path: &Path) -> Result<RoadProfile> {
    let table = read_table(path)?;
    let c_station = table.require("station_m")?;
    let c_left = table.require("elev_left_m")?;
    let c_right = table.column("elev_right_m");
    let c_lat = table.column("lat_deg");
    let c_lon = table.column("lon_deg");
    if table.rows.len() < 2 {
        return Err(Error::validation("profile", "need at least two samples"));
    }
    let mut stations = Vec::with_capacity(table.rows.len());
    let mut left = Vec::with_capacity(table.rows.len());
    let mut right = Vec::with_capacity(table.rows.len());
    let mut tags = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        stations.push(cell_f64(row, c_station, "station_m")?);
        left.push(cell_f64(row, c_left, "elev_left_m")?);
        right.push(cell_opt_f64(row, c_right, "elev_right_m")?);
        let lat = cell_opt_f64(row, c_lat, "lat_deg")?;
        let lon = cell_opt_f64(row, c_lon, "lon_deg")?;
        tags.push(lat.zip(lon));
    }
    let spacing = (stations[stations.len() - 1] - stations[0]) / (stations.len() - 1) as f64;
    for (i, w) in stations.windows(2).enumerate() {
        // stations are written with nine significant digits
        let rounding = 2e-8 * w[0].abs().max(w[1].abs());
        if ((w[1] - w[0]) - spacing).abs() > 1e-6 * spacing.abs().max(1e-9) + rounding {
            return Err(Error::Parse {
                line: table.rows[i + 1].line,
                reason: format!("stations must be uniformly spaced by {spacing} m"),
            });
        }
    }
    let right = if right.iter().all(Option::is_some) {
        Some(right.into_iter().map(|r| r.expect("checked")).collect())
    } else if right.iter().all(Option::is_none) {
        None
    } else {
        return Err(Error::validation("elev_right_m", "right track is only partially present"));
    };
    let profile = RoadProfile::new(spacing, stations[0], left, right)?;
    if tags.iter().all(Option::is_some) {
        profile.with_geotags(tags.into_iter().map(|t| t.expect("checked")).collect())
    } else {
        Ok(profile)
    }
}

pub fn write_profile(path: &Path, profile: &RoadProfile) -> Result<()> {
    let right = profile.right.as_deref();
    let rows = (0..profile.len()).map(|i| {
        let tag = profile.geotags.as_ref().map(|g| g[i]);
        vec![
            fmt_f64(profile.station(i)),
            fmt_f64(profile.left[i]),
            fmt_opt(right.map(|r| r[i])),
            fmt_opt(tag.map(|t| t.0)),
            fmt_opt(tag.map(|t| t.1)),
        ]
    });
    write_atomic(path, &csv_bytes(&PROFILE_HEADER, rows)?)
}

// ---------------------------------------------------------------------------
// segments

pub fn write_segments(path: &Path, segments: &[IriSegment]) -> Result<()> {
    let rows = segments.iter().map(|s| {
        vec![
            fmt_f64(s.start_station),
            fmt_f64(s.end_station),
            fmt_f64(s.iri),
            fmt_opt(s.geotag.map(|g| g.0)),
            fmt_opt(s.geotag.map(|g| g.1)),
            s.flags(),
        ]
    });
    write_atomic(path, &csv_bytes(&SEGMENT_HEADER, rows)?)
}

pub fn read_segments(path: &Path) -> Result<Vec<IriSegment>> {
    let table = read_table(path)?;
    let cols: Vec<usize> = SEGMENT_HEADER[..3].iter().map(|c| table.require(c)).collect::<Result<_>>()?;
    let c_lat = table.column("lat_deg");
    let c_lon = table.column("lon_deg");
    let c_flags = table.column("flags");
    table
        .rows
        .iter()
        .map(|row| {
            let start = cell_f64(row, cols[0], "start_station_m")?;
            let end = cell_f64(row, cols[1], "end_station_m")?;
            let iri = cell_f64(row, cols[2], "iri_mm_per_m")?;
            if iri < 0.0 {
                return Err(Error::Parse {
                    line: row.line,
                    reason: "negative IRI".into(),
                });
            }
            let flags = c_flags.and_then(|c| row.cells.get(c)).map(String::as_str).unwrap_or("");
            let lat = cell_opt_f64(row, c_lat, "lat_deg")?;
            let lon = cell_opt_f64(row, c_lon, "lon_deg")?;
            Ok(IriSegment {
                start_station: start,
                end_station: end,
                iri,
                geotag: lat.zip(lon),
                n_samples: 0,
                transient: flags.split('|').any(|f| f == "transient"),
                partial: flags.split('|').any(|f| f == "partial"),
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// geotagged traces and matches

/// Reads `lat_deg`/`lon_deg` from any CSV that has them.
pub fn read_trace(path: &Path) -> Result<Vec<GeoPoint>> {
    let table = read_table(path)?;
    let c_lat = table.require("lat_deg")?;
    let c_lon = table.require("lon_deg")?;
    table
        .rows
        .iter()
        .map(|row| {
            let lat = cell_f64(row, c_lat, "lat_deg")?;
            let lon = cell_f64(row, c_lon, "lon_deg")?;
            GeoPoint::new(lat, lon).map_err(|e| Error::Parse {
                line: row.line,
                reason: e.to_string(),
            })
        })
        .collect()
}

/// Writes the matched IMU samples only.
pub fn write_matches(path: &Path, result: &MatchResult) -> Result<()> {
    let rows = result.matches.iter().enumerate().filter_map(|(i, m)| {
        m.map(|m| vec![i.to_string(), m.ref_index.to_string(), fmt_f64(m.distance), fmt_f64(m.angle)])
    });
    write_atomic(path, &csv_bytes(&MATCH_HEADER, rows)?)
}

// ---------------------------------------------------------------------------
// parameter files

/// Parses `key = value` text. Keys: `m_s, m_u, K_s, C_s, K_t` and optionally `I_s, l`.
pub fn parse_params(text: &str) -> Result<VehicleParams> {
    let mut values: [Option<f64>; 7] = [None; 7];
    const KEYS: [&str; 7] = ["m_s", "m_u", "K_s", "C_s", "K_t", "I_s", "l"];
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            reason: format!("expected `key = value`, found `{line}`"),
        })?;
        let key = key.trim();
        let slot = KEYS.iter().position(|k| *k == key).ok_or_else(|| Error::Parse {
            line: i + 1,
            reason: format!("unknown parameter `{key}`"),
        })?;
        let v: f64 = value.trim().parse().map_err(|_| Error::Parse {
            line: i + 1,
            reason: format!("`{key}` is not a number"),
        })?;
        values[slot] = Some(v);
    }
    let need = |i: usize| {
        values[i].ok_or_else(|| Error::validation(KEYS[i], "missing from parameter file"))
    };
    Ok(VehicleParams {
        m_s: need(0)?,
        m_u: need(1)?,
        k_s: need(2)?,
        c_s: need(3)?,
        k_t: need(4)?,
        i_s: values[5],
        l: values[6],
    })
}

pub fn format_params(p: &VehicleParams) -> String {
    let mut s = format!(
        "m_s = {}\nm_u = {}\nK_s = {}\nC_s = {}\nK_t = {}\n",
        fmt_f64(p.m_s),
        fmt_f64(p.m_u),
        fmt_f64(p.k_s),
        fmt_f64(p.c_s),
        fmt_f64(p.k_t)
    );
    if let Some(i) = p.i_s {
        s.push_str(&format!("I_s = {}\n", fmt_f64(i)));
    }
    if let Some(l) = p.l {
        s.push_str(&format!("l = {}\n", fmt_f64(l)));
    }
    s
}

/// Built-in parameter sets: `golden` and `identified`.
pub fn named_params(name: &str) -> Option<VehicleParams> {
    match name {
        "golden" => Some(golden_car_params()),
        "identified" => Some(identified_car_params()),
        _ => None,
    }
}

/// A built-in set name or a path to a parameter file.
pub fn load_params(spec: &str) -> Result<VehicleParams> {
    match named_params(spec) {
        Some(p) => Ok(p),
        None => parse_params(&std::fs::read_to_string(spec)?),
    }
}

/// Writes `key,value` rows.
pub fn write_key_values(path: &Path, rows: &[(&str, String)]) -> Result<()> {
    let body = rows.iter().map(|(k, v)| vec![k.to_string(), v.clone()]);
    write_atomic(path, &csv_bytes(&["key", "value"], body)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format() {
        assert_eq!(fmt_f64(0.1), "0.1");
        assert_eq!(fmt_f64(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_f64(-2.0), "-2");
        assert_eq!(fmt_f64(123456789012.0), "123456789000");
        assert_eq!(fmt_f64(0.0), "0");
    }

    #[test]
    fn params_roundtrip() {
        let p = identified_car_params();
        assert_eq!(parse_params(&format_params(&p)).unwrap(), p);
        let g = golden_car_params();
        assert_eq!(parse_params(&format_params(&g)).unwrap(), g);
    }

    #[test]
    fn params_errors() {
        assert!(matches!(parse_params("m_s = 1\nbogus = 2"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_params("m_s 1"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_params("m_s = 1"), Err(Error::Validation { .. })));
        let p = parse_params("# comment\nm_s=1\nm_u=2\nK_s=3 # inline\nC_s=4\nK_t=5\n").unwrap();
        assert_eq!(p.k_s, 3.0);
    }
}
