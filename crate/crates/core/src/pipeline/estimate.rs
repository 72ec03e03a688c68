//! End-to-end chains: drive records ⇄ simulated traces, and measured
//! vibrations → input estimates → IRI segments.

use crate::error::{Error, Result};
use crate::geomatch::{GeoPoint, LocalProjection};
use crate::iri::{iri_from_profile, spatial_resample, IriConfig, IriSegment};
use crate::kalman::{run_filter, Channels, KfConfig, DEFAULT_INITIAL_VARIANCE, DEFAULT_MEASUREMENT_STD, DEFAULT_QR_RATIO};
use crate::models::{ModelKind, VehicleParams};
use crate::signal::{highpass, highpass_order, lowpass, remove_gravity, TimeSeries, GRAVITY};
use crate::simulate::{interpolate_uniform, RoadProfile, SimTrace};

use super::io::{Drive, DriveRecord};

/// Origin used to geotag simulated drives over profiles without geotags.
pub const SYNTHETIC_ORIGIN: GeoPoint = GeoPoint { lat: 58.4, lon: 15.6 };

/// Settings of the estimate chain.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateOptions {
    pub channels: Channels,
    /// Filter model; `None` picks the quarter-car for vertical and the half-car otherwise.
    pub model: Option<ModelKind>,
    pub qr_ratio: f64,
    pub measurement_std: f64,
    /// Initial state variance of the filter; large values shorten the start-up transient.
    pub initial_variance: f64,
    /// Gravity subtracted from the vertical channel (m/s²).
    pub gravity: f64,
    /// Low-pass cutoff on the vertical channel (Hz).
    pub lpf_vertical: Option<f64>,
    /// Low-pass cutoff on the lateral channel (Hz).
    pub lpf_lateral: Option<f64>,
    /// High-pass cutoff on the lateral channel, removing centripetal drift (Hz).
    pub hpf_lateral: Option<f64>,
    /// High-pass cutoff applied to the estimated profile before IRI (Hz).
    pub detrend: Option<f64>,
    pub calibration: f64,
    pub iri: IriConfig,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            channels: Channels::Vertical,
            model: None,
            qr_ratio: DEFAULT_QR_RATIO,
            measurement_std: DEFAULT_MEASUREMENT_STD,
            initial_variance: DEFAULT_INITIAL_VARIANCE,
            gravity: GRAVITY,
            lpf_vertical: Some(13.0),
            lpf_lateral: Some(11.0),
            hpf_lateral: Some(0.5),
            detrend: None,
            calibration: 1.0,
            iri: IriConfig::default(),
        }
    }
}

impl EstimateOptions {
    /// No measurement filtering and no gravity; for already-clean simulated signals.
    pub fn unfiltered(channels: Channels) -> Self {
        Self {
            channels,
            gravity: 0.0,
            lpf_vertical: None,
            lpf_lateral: None,
            hpf_lateral: None,
            ..Self::default()
        }
    }

    pub fn model(&self) -> ModelKind {
        self.model.unwrap_or(match self.channels {
            Channels::Vertical => ModelKind::QuarterCar,
            _ => ModelKind::HalfCar,
        })
    }
}

/// Measured signals on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurements {
    /// Vertical acceleration as recorded (gravity included for real drives).
    pub vertical: TimeSeries,
    pub lateral: TimeSeries,
    pub speed: TimeSeries,
    pub positions: Option<Vec<GeoPoint>>,
}

impl Measurements {
    pub fn from_drive(drive: &Drive) -> Result<Self> {
        if drive.records.len() < 2 {
            return Err(Error::validation("drive", "need at least two samples"));
        }
        let (t0, dt) = (drive.t0(), drive.dt());
        let col = |f: fn(&DriveRecord) -> f64| drive.records.iter().map(f).collect::<Vec<f64>>();
        Ok(Self {
            vertical: TimeSeries::single(t0, dt, col(|r| r.az))?,
            lateral: TimeSeries::single(t0, dt, col(|r| r.ax))?,
            speed: TimeSeries::single(t0, dt, col(|r| r.v))?,
            positions: Some(drive.positions()),
        })
    }

    /// Simulated trace without gravity and without positions.
    pub fn from_trace(trace: &SimTrace) -> Result<Self> {
        Ok(Self {
            vertical: TimeSeries::single(0.0, trace.dt, trace.vertical_acc.clone())?,
            lateral: TimeSeries::single(0.0, trace.dt, trace.lateral_acc.clone())?,
            speed: TimeSeries::single(0.0, trace.dt, trace.speed.clone())?,
            positions: None,
        })
    }
}

/// Drive records for a simulated trace: gravity added to the vertical channel
/// and positions taken from the profile geotags, or laid out due east from
/// [`SYNTHETIC_ORIGIN`] when the profile has none.
pub fn trace_to_records(trace: &SimTrace, profile: &RoadProfile) -> Vec<DriveRecord> {
    let proj = LocalProjection::new(SYNTHETIC_ORIGIN);
    (0..trace.len())
        .map(|k| {
            let station = trace.station[k];
            let (lat, lon) = match &profile.geotags {
                Some(tags) => {
                    let lats: Vec<f64> = tags.iter().map(|t| t.0).collect();
                    let lons: Vec<f64> = tags.iter().map(|t| t.1).collect();
                    (
                        interpolate_uniform(&lats, profile.start, profile.spacing, station),
                        interpolate_uniform(&lons, profile.start, profile.spacing, station),
                    )
                }
                None => {
                    let p = proj.unproject(station, 0.0);
                    (p.lat, p.lon)
                }
            };
            DriveRecord {
                t: trace.time(k),
                az: trace.vertical_acc[k] + GRAVITY,
                ax: trace.lateral_acc[k],
                v: trace.speed[k],
                lat,
                lon,
            }
        })
        .collect()
}

/// Geotags laid out due east from [`SYNTHETIC_ORIGIN`], one per profile sample.
pub fn synthetic_geotags(profile: &RoadProfile) -> Vec<(f64, f64)> {
    let proj = LocalProjection::new(SYNTHETIC_ORIGIN);
    (0..profile.len())
        .map(|i| {
            let p = proj.unproject(profile.station(i), 0.0);
            (p.lat, p.lon)
        })
        .collect()
}

/// Input estimates of one run, before spatial resampling.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileEstimate {
    pub t0: f64,
    pub dt: f64,
    /// Nominal profile: track average, or the left track for lateral-only runs.
    pub nominal: Vec<f64>,
    /// Raw filter output per input track.
    pub tracks: Vec<Vec<f64>>,
}

fn preprocess(m: &Measurements, opts: &EstimateOptions) -> Result<TimeSeries> {
    let vertical = || -> Result<Vec<f64>> {
        let mut ts = remove_gravity(&m.vertical, opts.gravity);
        if let Some(fc) = opts.lpf_vertical {
            ts = lowpass(&ts, fc)?;
        }
        Ok(ts.channels.into_iter().next().expect("single channel"))
    };
    let lateral = || -> Result<Vec<f64>> {
        let mut ts = m.lateral.clone();
        if let Some(fc) = opts.hpf_lateral {
            ts = highpass(&ts, fc)?;
        }
        if let Some(fc) = opts.lpf_lateral {
            ts = lowpass(&ts, fc)?;
        }
        Ok(ts.channels.into_iter().next().expect("single channel"))
    };
    let channels = match opts.channels {
        Channels::Vertical => vec![vertical()?],
        Channels::Lateral => vec![lateral()?],
        Channels::Both => vec![vertical()?, lateral()?],
    };
    TimeSeries::new(m.vertical.t0, m.vertical.dt, channels)
}

/// Preprocessing and the unknown-input filter.
pub fn estimate_profile(m: &Measurements, params: &VehicleParams, opts: &EstimateOptions) -> Result<ProfileEstimate> {
    let y = preprocess(m, opts)?;
    let model = opts.model();
    let ss_dims = match model {
        ModelKind::QuarterCar => (4, 1),
        ModelKind::HalfCar => (8, 2),
    };
    if !(opts.initial_variance.is_finite() && opts.initial_variance > 0.0) {
        return Err(Error::validation("initial variance", format!("must be > 0, got {}", opts.initial_variance)));
    }
    let mut cfg = KfConfig::from_ratio(ss_dims.0, ss_dims.1, opts.channels.count(), opts.qr_ratio, opts.measurement_std)?;
    cfg.p0 = nalgebra::DMatrix::identity(ss_dims.0, ss_dims.0) * opts.initial_variance;
    let run = run_filter(&y, model, opts.channels, params, Some(cfg))?;
    let tracks = (0..ss_dims.1).map(|i| run.track(i)).collect();
    Ok(ProfileEstimate {
        t0: run.t0(),
        dt: y.dt,
        nominal: run.nominal_profile(),
        tracks,
    })
}

/// IRI segments from an estimate: optional detrending high-pass, spatial
/// resampling, Golden-car IRI and calibration. Segments carry geotags when
/// positions are available.
pub fn segments_from_estimate(
    est: &ProfileEstimate,
    m: &Measurements,
    opts: &EstimateOptions,
) -> Result<Vec<IriSegment>> {
    if !(opts.calibration.is_finite() && opts.calibration > 0.0) {
        return Err(Error::validation("calibration", format!("slope must be > 0, got {}", opts.calibration)));
    }
    let mut values = TimeSeries::single(est.t0, est.dt, est.nominal.clone())?;
    if let Some(fc) = opts.detrend {
        values = highpass_order(&values, fc, 4)?;
    }
    let samples = spatial_resample(&values.channels[0], est.t0, est.dt, &m.speed, opts.iri.spacing)?;
    let mut profile = RoadProfile::single_track(opts.iri.spacing, samples.values)?;
    if let Some(pos) = &m.positions {
        let lats: Vec<f64> = pos.iter().map(|p| p.lat).collect();
        let lons: Vec<f64> = pos.iter().map(|p| p.lon).collect();
        let (t0, dt) = (m.speed.t0, m.speed.dt);
        let tags = samples
            .times
            .iter()
            .map(|&t| (interpolate_uniform(&lats, t0, dt, t), interpolate_uniform(&lons, t0, dt, t)))
            .collect();
        profile = profile.with_geotags(tags)?;
    }
    let mut segments = iri_from_profile(&profile, &opts.iri)?;
    for s in &mut segments {
        s.iri *= opts.calibration;
    }
    Ok(segments)
}

/// [`estimate_profile`] followed by [`segments_from_estimate`].
pub fn estimate_segments(m: &Measurements, params: &VehicleParams, opts: &EstimateOptions) -> Result<Vec<IriSegment>> {
    let est = estimate_profile(m, params, opts)?;
    segments_from_estimate(&est, m, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::golden_car_params;
    use crate::simulate::{drive, synth_profile, DriveConfig, RoughnessClass, SpeedProfile};

    #[test]
    fn records_roundtrip_through_measurements() {
        let profile = synth_profile(RoughnessClass::A, 100.0, 0.1, 1).unwrap();
        let trace = drive(
            &profile,
            &SpeedProfile::constant(20.0).unwrap(),
            &golden_car_params(),
            &DriveConfig::default(),
        )
        .unwrap();
        let records = trace_to_records(&trace, &profile);
        assert_eq!(records.len(), trace.len());
        assert!((records[3].az - GRAVITY - trace.vertical_acc[3]).abs() < 1e-12);
        let d = Drive { records, gaps: vec![] };
        let m = Measurements::from_drive(&d).unwrap();
        assert!((m.vertical.dt - 0.02).abs() < 1e-12);
        // positions march east at the driven distance
        let proj = LocalProjection::new(SYNTHETIC_ORIGIN);
        let pos = m.positions.unwrap();
        let (e, n) = proj.project(&pos[50]);
        assert!((e - trace.station[50]).abs() < 1e-6 && n.abs() < 1e-6);
    }

    #[test]
    fn zero_drive_gives_zero_iri() {
        let n = 2000;
        let m = Measurements {
            vertical: TimeSeries::single(0.0, 0.02, vec![GRAVITY; n]).unwrap(),
            lateral: TimeSeries::single(0.0, 0.02, vec![0.0; n]).unwrap(),
            speed: TimeSeries::single(0.0, 0.02, vec![20.0; n]).unwrap(),
            positions: None,
        };
        let segs = estimate_segments(&m, &golden_car_params(), &EstimateOptions::default()).unwrap();
        assert!(!segs.is_empty());
        assert!(segs.iter().all(|s| s.iri.abs() < 1e-9), "{segs:?}");
    }
}
