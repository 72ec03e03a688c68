//! International Roughness Index from road profiles and from time-indexed
//! input estimates.
//!
//! The Golden-car quarter-car is discretized at `T = S / V` so that one step
//! advances one profile sample at the reference speed `V = 80 km/h`. The
//! rattle-space velocity `ξ = ż_s − ż_u` is rectified and averaged over each
//! `L`-metre block:
//!
//! ```text
//! IRI ≈ S / (L V) · Σ |ξ(iS/V)|      (m/m, reported in mm/m)
//! ```

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::models::{build_qc, discretize, golden_car_params, rattle_output, DiscreteStateSpace};
use crate::signal::TimeSeries;
use crate::simulate::RoadProfile;

/// Reference speed of the IRI definition, 80 km/h in m/s.
pub const REFERENCE_SPEED: f64 = 80.0 / 3.6;
/// Distance at the start of a run over which the Golden-car state is still settling (m).
pub const SETTLING_DISTANCE: f64 = 11.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IriConfig {
    /// Segment length `L` (m).
    pub segment_length: f64,
    /// Spatial step `S` (m).
    pub spacing: f64,
}

impl Default for IriConfig {
    fn default() -> Self {
        Self {
            segment_length: 40.0,
            spacing: 0.1,
        }
    }
}

impl IriConfig {
    pub fn new(segment_length: f64, spacing: f64) -> Result<Self> {
        let cfg = Self {
            segment_length,
            spacing,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.segment_length.is_finite() && self.segment_length > 0.0) {
            return Err(Error::validation("L", format!("segment length must be > 0, got {}", self.segment_length)));
        }
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return Err(Error::validation("S", format!("spacing must be > 0, got {}", self.spacing)));
        }
        if self.spacing > self.segment_length {
            return Err(Error::validation("S", "spacing exceeds the segment length"));
        }
        Ok(())
    }

    /// Profile samples per full segment.
    pub fn samples_per_segment(&self) -> usize {
        ((self.segment_length / self.spacing).round() as usize).max(1)
    }

    /// Golden-car sampling time `S / V`.
    pub fn step_time(&self) -> f64 {
        self.spacing / REFERENCE_SPEED
    }
}

/// IRI of one block of road.
#[derive(Debug, Clone, PartialEq)]
pub struct IriSegment {
    pub start_station: f64,
    pub end_station: f64,
    /// Roughness (mm/m).
    pub iri: f64,
    /// `(lat°, lon°)` of the segment midpoint when the profile is geotagged.
    pub geotag: Option<(f64, f64)>,
    pub n_samples: usize,
    /// The segment overlaps the settling distance at the start of the run.
    pub transient: bool,
    /// Trailing segment shorter than `L`.
    pub partial: bool,
}

impl IriSegment {
    pub fn length(&self) -> f64 {
        self.end_station - self.start_station
    }

    /// Flags as written to segment files: `transient`, `partial`, joined by `|`.
    pub fn flags(&self) -> String {
        let mut f = Vec::new();
        if self.transient {
            f.push("transient");
        }
        if self.partial {
            f.push("partial");
        }
        f.join("|")
    }
}

/// The Golden-car system discretized at `T = S / V` with the rattle-velocity output.
pub fn golden_car_iri_system(spacing: f64) -> Result<DiscreteStateSpace> {
    let ss = build_qc(&golden_car_params())?;
    let row = rattle_output(&ss)?;
    let mut dss = discretize(&ss, spacing / REFERENCE_SPEED)?;
    dss.h = nalgebra::DMatrix::from_row_slice(1, 4, row.as_slice());
    Ok(dss)
}

/// Rattle-space velocity `ξ[i]` after consuming profile sample `i`, from rest.
pub fn rattle_velocity(track: &[f64], spacing: f64) -> Result<Vec<f64>> {
    let dss = golden_car_iri_system(spacing)?;
    let mut x = DVector::<f64>::zeros(4);
    let mut next = DVector::<f64>::zeros(4);
    let g = dss.g.column(0).into_owned();
    let mut out = Vec::with_capacity(track.len());
    for &u in track {
        next.gemv(1.0, &dss.f, &x, 0.0);
        next.axpy(u, &g, 1.0);
        std::mem::swap(&mut x, &mut next);
        out.push(x[1] - x[3]);
    }
    Ok(out)
}

/// Sample-by-sample mean of the two wheel tracks.
pub fn average_tracks(profile: &RoadProfile) -> Result<RoadProfile> {
    let right = profile
        .right
        .as_ref()
        .ok_or_else(|| Error::validation("profile", "averaging needs both wheel tracks"))?;
    let avg = profile.left.iter().zip(right).map(|(l, r)| 0.5 * (l + r)).collect();
    Ok(RoadProfile {
        spacing: profile.spacing,
        start: profile.start,
        left: avg,
        right: None,
        geotags: profile.geotags.clone(),
    })
}

/// IRI per `L`-metre segment of a profile.
///
/// Two-track profiles are averaged first; single-track profiles are used as
/// they are. The profile spacing must equal `cfg.spacing`. A trailing block
/// shorter than `L` is reported as a partial segment.
pub fn iri_from_profile(profile: &RoadProfile, cfg: &IriConfig) -> Result<Vec<IriSegment>> {
    cfg.validate()?;
    if ((profile.spacing - cfg.spacing) / cfg.spacing).abs() > 1e-9 {
        return Err(Error::validation(
            "S",
            format!("profile spacing {} m differs from the IRI spacing {} m; resample first", profile.spacing, cfg.spacing),
        ));
    }
    let averaged;
    let track = if profile.right.is_some() {
        averaged = average_tracks(profile)?;
        &averaged.left
    } else {
        &profile.left
    };
    let per = cfg.samples_per_segment();
    if track.len() < per {
        return Err(Error::validation(
            "profile",
            format!("{} samples cover less than one {} m segment", track.len(), cfg.segment_length),
        ));
    }
    let xi = rattle_velocity(track, cfg.spacing)?;
    let s = cfg.spacing;
    let scale = s / REFERENCE_SPEED * 1000.0;
    let mut segments = Vec::with_capacity(track.len() / per + 1);
    for (j, block) in xi.chunks(per).enumerate() {
        let first = j * per;
        let n = block.len();
        let start_station = profile.start + first as f64 * s;
        let end_station = start_station + n as f64 * s;
        let geotag = profile.geotags.as_ref().map(|g| g[(first + n / 2).min(g.len() - 1)]);
        segments.push(IriSegment {
            start_station,
            end_station,
            iri: scale * block.iter().map(|v| v.abs()).sum::<f64>() / (n as f64 * s),
            geotag,
            n_samples: n,
            transient: first as f64 * s < SETTLING_DISTANCE,
            partial: n < per,
        });
    }
    Ok(segments)
}

/// Estimates resampled onto a uniform distance grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialSamples {
    pub spacing: f64,
    /// Time `t_i` at which station `i·S` was reached (s).
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// Resamples a time-indexed sequence onto stations `i·S`.
///
/// The sample times follow `t_i ≈ t_{i−1} + S / v(t_i)`, solved with one
/// fixed-point correction: a predictor with `v(t_{i−1})`, then `v` evaluated at
/// the predicted time. `values` (sampled at `t0 + k·dt`) are linearly
/// interpolated at each `t_i`; `speed` is linearly interpolated in time.
/// Resampling stops at the end of the shorter of the two sequences.
pub fn spatial_resample(values: &[f64], t0: f64, dt: f64, speed: &TimeSeries, spacing: f64) -> Result<SpatialSamples> {
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::validation("S", format!("spacing must be > 0, got {spacing}")));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::validation("dt", format!("must be > 0, got {dt}")));
    }
    if speed.n_channels() != 1 {
        return Err(Error::Dimension("speed must be a single channel".into()));
    }
    let v = &speed.channels[0];
    if let Some(k) = v.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::validation("speed", format!("sample {k} is {}; speed must be > 0", v[k])));
    }
    if values.is_empty() || v.is_empty() {
        return Ok(SpatialSamples {
            spacing,
            times: Vec::new(),
            values: Vec::new(),
        });
    }
    let t_end_values = t0 + (values.len() - 1) as f64 * dt;
    let t_end_speed = speed.time(v.len() - 1);
    let t_end = t_end_values.min(t_end_speed);
    let speed_at = |t: f64| crate::simulate::interpolate_uniform(v, speed.t0, speed.dt, t);
    let value_at = |t: f64| crate::simulate::interpolate_uniform(values, t0, dt, t);

    let mut times = Vec::new();
    let mut out = Vec::new();
    let mut t = t0.max(speed.t0);
    // guard against float creep landing a hair past the last sample
    let tol = 1e-9 * dt;
    while t <= t_end + tol {
        times.push(t);
        out.push(value_at(t.min(t_end)));
        let predicted = t + spacing / speed_at(t);
        t += spacing / speed_at(predicted);
    }
    Ok(SpatialSamples {
        spacing,
        times,
        values: out,
    })
}

/// Full estimate-to-IRI chain: spatial resampling, Golden-car IRI, then
/// multiplication by the calibration slope.
pub fn iri_from_estimates(
    values: &[f64],
    t0: f64,
    dt: f64,
    speed: &TimeSeries,
    cfg: &IriConfig,
    calibration: f64,
) -> Result<Vec<IriSegment>> {
    if !(calibration.is_finite() && calibration > 0.0) {
        return Err(Error::validation("calibration", format!("slope must be > 0, got {calibration}")));
    }
    let samples = spatial_resample(values, t0, dt, speed, cfg.spacing)?;
    let profile = RoadProfile::single_track(cfg.spacing, samples.values)?;
    let mut segments = iri_from_profile(&profile, cfg)?;
    for s in &mut segments {
        s.iri *= calibration;
    }
    Ok(segments)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg() -> IriConfig {
        IriConfig::default()
    }

    fn sine_profile(amplitude: f64, wavelength: f64, length: f64) -> RoadProfile {
        let n = (length / 0.1).round() as usize;
        let v = (0..n)
            .map(|i| amplitude * (2.0 * std::f64::consts::PI * i as f64 * 0.1 / wavelength).sin())
            .collect();
        RoadProfile::single_track(0.1, v).unwrap()
    }

    #[test]
    fn flat_profile_zero_iri() {
        let p = RoadProfile::single_track(0.1, vec![0.0; 1200]).unwrap();
        let segs = iri_from_profile(&p, &cfg()).unwrap();
        assert_eq!(segs.len(), 3);
        assert!(segs.iter().all(|s| s.iri == 0.0));
        assert!(segs[0].transient && !segs[1].transient);
        assert_relative_eq!(segs[2].end_station, 120.0, epsilon = 1e-9);
    }

    #[test]
    fn homogeneous_in_profile() {
        let p = sine_profile(0.004, 7.0, 120.0);
        let a = iri_from_profile(&p, &cfg()).unwrap();
        let b = iri_from_profile(&p.scaled(-2.5), &cfg()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_relative_eq!(2.5 * x.iri, y.iri, max_relative = 1e-12);
        }
    }

    #[test]
    fn short_profile_rejected() {
        let p = RoadProfile::single_track(0.1, vec![0.0; 399]).unwrap();
        assert!(matches!(iri_from_profile(&p, &cfg()), Err(Error::Validation { .. })));
        let p = RoadProfile::single_track(0.25, vec![0.0; 1000]).unwrap();
        assert!(matches!(iri_from_profile(&p, &cfg()), Err(Error::Validation { .. })));
    }

    #[test]
    fn partial_trailing_segment() {
        let p = RoadProfile::single_track(0.1, vec![0.001; 450]).unwrap();
        let segs = iri_from_profile(&p, &cfg()).unwrap();
        assert_eq!(segs.len(), 2);
        assert!(!segs[0].partial && segs[1].partial);
        assert_eq!(segs[1].n_samples, 50);
        assert_relative_eq!(segs[1].length(), 5.0, epsilon = 1e-9);
        assert_eq!(segs[1].flags(), "partial");
        assert_eq!(segs[0].flags(), "transient");
    }

    #[test]
    fn geotag_at_midpoint() {
        let tags: Vec<(f64, f64)> = (0..800).map(|i| (58.0 + i as f64 * 1e-6, 15.0)).collect();
        let p = RoadProfile::single_track(0.1, vec![0.0; 800]).unwrap().with_geotags(tags.clone()).unwrap();
        let segs = iri_from_profile(&p, &cfg()).unwrap();
        assert_eq!(segs[1].geotag, Some(tags[600]));
    }

    #[test]
    fn average_tracks_cases() {
        let p = RoadProfile::two_track(0.1, vec![1.0, 2.0], vec![3.0, 4.0]).unwrap();
        assert_eq!(average_tracks(&p).unwrap().left, vec![2.0, 3.0]);
        let u = vec![0.3, -0.1, 0.7];
        let p = RoadProfile::two_track(0.1, u.clone(), u.clone()).unwrap();
        assert_eq!(average_tracks(&p).unwrap().left, u);
        let neg: Vec<f64> = u.iter().map(|v| -v).collect();
        let p = RoadProfile::two_track(0.1, u.clone(), neg).unwrap();
        assert!(average_tracks(&p).unwrap().left.iter().all(|v| *v == 0.0));
        let single = RoadProfile::single_track(0.1, u).unwrap();
        assert!(average_tracks(&single).is_err());
    }

    #[test]
    fn two_track_profile_uses_average() {
        let l = sine_profile(0.003, 5.0, 80.0).left;
        let r = sine_profile(0.002, 9.0, 80.0).left;
        let avg: Vec<f64> = l.iter().zip(&r).map(|(a, b)| 0.5 * (a + b)).collect();
        let two = iri_from_profile(&RoadProfile::two_track(0.1, l, r).unwrap(), &cfg()).unwrap();
        let one = iri_from_profile(&RoadProfile::single_track(0.1, avg).unwrap(), &cfg()).unwrap();
        assert_eq!(two, one);
    }

    #[test]
    fn resample_aligned_grid_is_identity() {
        let v = REFERENCE_SPEED;
        let dt = 0.1 / v;
        let values: Vec<f64> = (0..500).map(|k| (0.05 * k as f64).sin()).collect();
        let speed = TimeSeries::single(0.0, dt, vec![v; 500]).unwrap();
        let r = spatial_resample(&values, 0.0, dt, &speed, 0.1).unwrap();
        assert!(r.values.len() >= 499);
        for (i, (t, x)) in r.times.iter().zip(&r.values).enumerate() {
            assert!((t - i as f64 * dt).abs() < 1e-9);
            assert!((x - values[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn resample_double_speed_halves_step() {
        let v = 10.0;
        let dt = 0.02;
        let speed = TimeSeries::single(0.0, dt, vec![2.0 * v; 300]).unwrap();
        let values = vec![1.0; 300];
        let r = spatial_resample(&values, 0.0, dt, &speed, 0.1).unwrap();
        for (i, t) in r.times.iter().enumerate() {
            assert!((t - i as f64 * 0.1 / (2.0 * v)).abs() < 1e-9);
        }
    }

    #[test]
    fn resample_rejects_nonpositive_speed() {
        let speed = TimeSeries::single(0.0, 0.02, vec![10.0, 0.0, 10.0]).unwrap();
        assert!(matches!(spatial_resample(&[0.0; 3], 0.0, 0.02, &speed, 0.1), Err(Error::Validation { .. })));
    }

    #[test]
    fn zero_estimates_zero_segments() {
        let speed = TimeSeries::single(0.0, 0.02, vec![20.0; 400]).unwrap();
        for cal in [1.0, 1.39] {
            let segs = iri_from_estimates(&[0.0; 400], 0.0, 0.02, &speed, &cfg(), cal).unwrap();
            assert!(!segs.is_empty());
            assert!(segs.iter().all(|s| s.iri == 0.0));
        }
    }

    #[test]
    fn calibration_scales_segments() {
        let speed = TimeSeries::single(0.0, 0.02, vec![20.0; 600]).unwrap();
        let u: Vec<f64> = (0..600).map(|k| 0.002 * (0.9 * k as f64).sin()).collect();
        let a = iri_from_estimates(&u, 0.0, 0.02, &speed, &cfg(), 1.0).unwrap();
        let b = iri_from_estimates(&u, 0.0, 0.02, &speed, &cfg(), 1.39).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_relative_eq!(1.39 * x.iri, y.iri, max_relative = 1e-12);
        }
        assert!(iri_from_estimates(&u, 0.0, 0.02, &speed, &cfg(), 0.0).is_err());
    }
}
