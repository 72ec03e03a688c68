//! File formats, end-to-end chains, evaluation and calibration.

pub mod estimate;
pub mod eval;
pub mod io;

pub use estimate::{
    estimate_profile, estimate_segments, segments_from_estimate, synthetic_geotags, trace_to_records,
    EstimateOptions, Measurements, ProfileEstimate, SYNTHETIC_ORIGIN,
};
pub use eval::{evaluate, fit_calibration, Alignment, BinStats, Calibration, EvalReport, Histogram, BIN_EDGES};
pub use io::{Drive, DriveRecord, SampleGap};

use crate::error::{Error, Result};
use crate::geomatch::{match_traces, GeoPoint, MatchConfig};
use crate::signal::TimeSeries;
use crate::simulate::RoadProfile;

/// How drive samples are located on a reference profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileAlignment {
    /// Station = profile start + distance integrated from the speed channel.
    Odometry,
    /// Station of the GNSS-matched profile sample; the longest run of
    /// consecutive matched samples is kept.
    Gnss(MatchConfig),
}

/// Profile samples under the wheels of a drive.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedSection {
    /// Index of the first drive sample used.
    pub first: usize,
    /// `(u_l, u_r)` on the drive's time grid from `first` onwards.
    pub inputs: TimeSeries,
}

/// Road inputs under the vehicle for each drive sample.
pub fn road_inputs_for_drive(drive: &Drive, profile: &RoadProfile, how: ProfileAlignment) -> Result<AlignedSection> {
    let n = drive.records.len();
    if n < 2 {
        return Err(Error::validation("drive", "need at least two samples"));
    }
    let dt = drive.dt();
    let (first, stations): (usize, Vec<f64>) = match how {
        ProfileAlignment::Odometry => {
            let mut s = profile.start;
            let mut out = Vec::with_capacity(n);
            out.push(s);
            for w in drive.records.windows(2) {
                s += 0.5 * (w[0].v + w[1].v) * (w[1].t - w[0].t);
                out.push(s);
            }
            (0, out)
        }
        ProfileAlignment::Gnss(cfg) => {
            let tags = profile
                .geotags
                .as_ref()
                .ok_or_else(|| Error::validation("profile", "GNSS alignment needs a geotagged profile"))?;
            let reference: Vec<GeoPoint> = tags.iter().map(|&(lat, lon)| GeoPoint { lat, lon }).collect();
            let result = match_traces(&drive.positions(), &reference, &cfg)?;
            let (mut best, mut cur) = ((0usize, 0usize), (0usize, 0usize));
            for (i, m) in result.matches.iter().enumerate() {
                if m.is_some() {
                    if cur.1 == 0 {
                        cur.0 = i;
                    }
                    cur.1 += 1;
                    if cur.1 > best.1 {
                        best = cur;
                    }
                } else {
                    cur.1 = 0;
                }
            }
            if best.1 < 2 {
                return Err(Error::validation("match", "fewer than two consecutive GNSS matches"));
            }
            let stations = result.matches[best.0..best.0 + best.1]
                .iter()
                .map(|m| profile.station(m.expect("run is matched").ref_index))
                .collect();
            (best.0, stations)
        }
    };
    let right = profile.right_or_left();
    let ul = stations.iter().map(|&s| profile.interpolate(&profile.left, s)).collect();
    let ur = stations.iter().map(|&s| profile.interpolate(right, s)).collect();
    Ok(AlignedSection {
        first,
        inputs: TimeSeries::new(drive.records[first].t, dt, vec![ul, ur])?,
    })
}
