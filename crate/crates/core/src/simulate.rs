//! Synthetic road profiles and forward simulation of the suspension models.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};
use crate::models::{build_model, discretize_foh, ModelKind, StateSpace, VehicleParams};
use crate::signal::TimeSeries;

/// Spatially sampled elevation of one or two wheel tracks.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadProfile {
    /// Sample spacing `S` (m).
    pub spacing: f64,
    /// Station of the first sample (m).
    pub start: f64,
    pub left: Vec<f64>,
    pub right: Option<Vec<f64>>,
    /// Optional `(lat°, lon°)` per sample.
    pub geotags: Option<Vec<(f64, f64)>>,
}

impl RoadProfile {
    pub fn single_track(spacing: f64, elevation: Vec<f64>) -> Result<Self> {
        Self::new(spacing, 0.0, elevation, None)
    }

    pub fn two_track(spacing: f64, left: Vec<f64>, right: Vec<f64>) -> Result<Self> {
        Self::new(spacing, 0.0, left, Some(right))
    }

    pub fn new(spacing: f64, start: f64, left: Vec<f64>, right: Option<Vec<f64>>) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::validation("S", format!("profile spacing must be > 0, got {spacing}")));
        }
        if let Some(r) = &right {
            if r.len() != left.len() {
                return Err(Error::Dimension(format!(
                    "left track has {} samples, right track {}",
                    left.len(),
                    r.len()
                )));
            }
        }
        Ok(Self {
            spacing,
            start,
            left,
            right,
            geotags: None,
        })
    }

    pub fn with_geotags(mut self, geotags: Vec<(f64, f64)>) -> Result<Self> {
        if geotags.len() != self.left.len() {
            return Err(Error::Dimension("geotag count differs from profile length".into()));
        }
        self.geotags = Some(geotags);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }

    /// Right track, or the left one duplicated for single-track profiles.
    pub fn right_or_left(&self) -> &[f64] {
        self.right.as_deref().unwrap_or(&self.left)
    }

    pub fn station(&self, i: usize) -> f64 {
        self.start + i as f64 * self.spacing
    }

    pub fn end_station(&self) -> f64 {
        self.station(self.len().saturating_sub(1))
    }

    /// Length covered by the samples (m).
    pub fn length(&self) -> f64 {
        self.end_station() - self.start
    }

    /// Linear interpolation of `track` at `station`, clamped to the profile ends.
    pub fn interpolate(&self, track: &[f64], station: f64) -> f64 {
        interpolate_uniform(track, self.start, self.spacing, station)
    }

    /// Elementwise scaling of every track.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            left: self.left.iter().map(|v| v * factor).collect(),
            right: self.right.as_ref().map(|r| r.iter().map(|v| v * factor).collect()),
            ..self.clone()
        }
    }
}

/// Linear interpolation in a uniformly sampled sequence, clamped at both ends.
pub fn interpolate_uniform(values: &[f64], x0: f64, dx: f64, x: f64) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => {
            let pos = (x - x0) / dx;
            if pos <= 0.0 {
                return values[0];
            }
            let i = pos.floor() as usize;
            if i >= n - 1 {
                return values[n - 1];
            }
            let frac = pos - i as f64;
            values[i] + (values[i + 1] - values[i]) * frac
        }
    }
}

/// Road roughness class with an ISO 8608-style displacement PSD.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoughnessClass {
    A,
    B,
    C,
    D,
    E,
}

/// Reference spatial frequency of the class PSDs (cycles/m).
pub const REFERENCE_WAVENUMBER: f64 = 0.1;

impl RoughnessClass {
    /// `G_d(n₀)` in m³ (geometric mean of the class band).
    pub fn reference_psd(self) -> f64 {
        let k = match self {
            RoughnessClass::A => 0,
            RoughnessClass::B => 1,
            RoughnessClass::C => 2,
            RoughnessClass::D => 3,
            RoughnessClass::E => 4,
        };
        16e-6 * 4f64.powi(k)
    }
}

impl std::str::FromStr for RoughnessClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(RoughnessClass::A),
            "B" => Ok(RoughnessClass::B),
            "C" => Ok(RoughnessClass::C),
            "D" => Ok(RoughnessClass::D),
            "E" => Ok(RoughnessClass::E),
            other => Err(Error::validation("roughness class", format!("`{other}` is not one of A-E"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSynth {
    pub class: RoughnessClass,
    /// Profile length (m), at least one 40 m IRI segment.
    pub length: f64,
    pub spacing: f64,
    pub seed: u64,
    /// Correlation coefficient between left and right tracks.
    pub correlation: f64,
    /// Spatial frequency band (cycles/m); the upper edge is clipped to the sampling Nyquist.
    pub band: (f64, f64),
}

impl ProfileSynth {
    pub fn new(class: RoughnessClass, length: f64, spacing: f64, seed: u64) -> Self {
        Self {
            class,
            length,
            spacing,
            seed,
            correlation: 0.9,
            band: (0.011, 2.83),
        }
    }
}

pub fn synth_profile(class: RoughnessClass, length: f64, spacing: f64, seed: u64) -> Result<RoadProfile> {
    synth_profile_with(&ProfileSynth::new(class, length, spacing, seed))
}

/// Random two-track profile with `G_d(n) = G_d(n₀)·(n/n₀)⁻²` inside the band.
pub fn synth_profile_with(cfg: &ProfileSynth) -> Result<RoadProfile> {
    if !(cfg.length.is_finite() && cfg.length >= 40.0) {
        return Err(Error::validation("length", format!("must be >= 40 m, got {}", cfg.length)));
    }
    if !(cfg.spacing.is_finite() && cfg.spacing > 0.0 && cfg.spacing < cfg.length) {
        return Err(Error::validation("S", format!("invalid spacing {}", cfg.spacing)));
    }
    if !(-1.0..=1.0).contains(&cfg.correlation) {
        return Err(Error::validation("correlation", "must lie in [-1, 1]"));
    }
    let n = (cfg.length / cfg.spacing).round() as usize + 1;
    let dn = 1.0 / (n as f64 * cfg.spacing);
    let g0 = cfg.class.reference_psd();
    let n_hi = cfg.band.1.min(0.5 / cfg.spacing);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(n);

    let track = |rng: &mut ChaCha8Rng| {
        let mut spec = vec![Complex::new(0.0, 0.0); n];
        for (k, z) in spec.iter_mut().enumerate().take(n / 2 + 1).skip(1) {
            let wn = k as f64 * dn;
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            if wn >= cfg.band.0 && wn <= n_hi {
                let psd = g0 * (wn / REFERENCE_WAVENUMBER).powi(-2);
                *z = Complex::from_polar((2.0 * psd * dn).sqrt(), phase);
            }
        }
        ifft.process(&mut spec);
        spec.into_iter().map(|z| z.re).collect::<Vec<f64>>()
    };
    let left = track(&mut rng);
    let independent = track(&mut rng);
    let rho = cfg.correlation;
    let w = (1.0 - rho * rho).sqrt();
    let right = left.iter().zip(&independent).map(|(l, i)| rho * l + w * i).collect();
    RoadProfile::two_track(cfg.spacing, left, right)
}

/// Piecewise-linear speed history `v(t)` from `(t, v)` knots; constant outside them.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedProfile {
    knots: Vec<(f64, f64)>,
}

impl SpeedProfile {
    pub fn constant(v: f64) -> Result<Self> {
        Self::piecewise(vec![(0.0, v)])
    }

    pub fn piecewise(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::validation("speed", "no speed knots"));
        }
        for w in knots.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::validation("speed", "knot times must increase"));
            }
        }
        if let Some(&(t, v)) = knots.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::validation("speed", format!("v({t}) = {v}; speed must be > 0")));
        }
        Ok(Self { knots })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn speed_at(&self, t: f64) -> f64 {
        let k = &self.knots;
        if t <= k[0].0 {
            return k[0].1;
        }
        for w in k.windows(2) {
            let ((t0, v0), (t1, v1)) = (w[0], w[1]);
            if t <= t1 {
                return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
            }
        }
        k[k.len() - 1].1
    }

    /// Distance travelled since `t = 0` (exact for the piecewise-linear speed).
    pub fn distance_at(&self, t: f64) -> f64 {
        self.integral_to(t) - self.integral_to(0.0)
    }

    fn integral_to(&self, t: f64) -> f64 {
        // integral from the first knot time; negative for earlier t
        let k = &self.knots;
        let (t_first, v_first) = k[0];
        if t <= t_first {
            return (t - t_first) * v_first;
        }
        let mut acc = 0.0;
        for w in k.windows(2) {
            let ((t0, v0), (t1, v1)) = (w[0], w[1]);
            if t <= t1 {
                let vt = v0 + (v1 - v0) * (t - t0) / (t1 - t0);
                return acc + 0.5 * (v0 + vt) * (t - t0);
            }
            acc += 0.5 * (v0 + v1) * (t1 - t0);
        }
        let (t_last, v_last) = k[k.len() - 1];
        acc + (t - t_last) * v_last
    }
}

/// Simulated IMU drive.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub dt: f64,
    pub model: ModelKind,
    /// Vertical acceleration without gravity (m/s²).
    pub vertical_acc: Vec<f64>,
    /// Lateral acceleration (m/s²); all zero for the quarter-car model.
    pub lateral_acc: Vec<f64>,
    pub speed: Vec<f64>,
    /// Profile station under the wheels (m).
    pub station: Vec<f64>,
    /// Road input applied at each sample, `(u_l, u_r)`; the track average twice for QC.
    pub true_inputs: Vec<[f64; 2]>,
    /// Set when the requested duration ran past the end of the profile.
    pub truncated: bool,
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.vertical_acc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertical_acc.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveConfig {
    pub model: ModelKind,
    pub dt: f64,
    pub noise_std: f64,
    pub seed: u64,
    /// Drive duration (s); `None` drives to the end of the profile.
    pub duration: Option<f64>,
    /// RK4 steps per output sample.
    pub substeps: usize,
}

impl Default for DriveConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::QuarterCar,
            dt: 0.02,
            noise_std: 0.05,
            seed: 0,
            duration: None,
            substeps: 10,
        }
    }
}

/// Integrates `ẋ = A x + B u(t)` from rest with classic RK4 and records
/// `y[k] = C x(k·dt)` for `k = 0..n_samples`. Returns one vector per output.
pub fn simulate_outputs(
    ss: &StateSpace,
    mut input: impl FnMut(f64, &mut DVector<f64>),
    dt: f64,
    n_samples: usize,
    substeps: usize,
) -> Vec<Vec<f64>> {
    let (n, m, p) = (ss.n_states(), ss.n_inputs(), ss.n_outputs());
    let substeps = substeps.max(1);
    let h = dt / substeps as f64;
    let mut x = DVector::zeros(n);
    let mut u = DVector::zeros(m);
    let mut y = DVector::zeros(p);
    let mut k1 = DVector::zeros(n);
    let mut k2 = DVector::zeros(n);
    let mut k3 = DVector::zeros(n);
    let mut k4 = DVector::zeros(n);
    let mut tmp = DVector::zeros(n);
    let mut out = vec![Vec::with_capacity(n_samples); p];

    let mut deriv = |t: f64, state: &DVector<f64>, dst: &mut DVector<f64>, u: &mut DVector<f64>| {
        input(t, u);
        dst.gemv(1.0, &ss.a, state, 0.0);
        dst.gemv(1.0, &ss.b, u, 1.0);
    };

    for k in 0..n_samples {
        y.gemv(1.0, &ss.c, &x, 0.0);
        for (ch, v) in out.iter_mut().zip(y.iter()) {
            ch.push(*v);
        }
        if k + 1 == n_samples {
            break;
        }
        for j in 0..substeps {
            let t = k as f64 * dt + j as f64 * h;
            deriv(t, &x, &mut k1, &mut u);
            tmp.copy_from(&x);
            tmp.axpy(h / 2.0, &k1, 1.0);
            deriv(t + h / 2.0, &tmp, &mut k2, &mut u);
            tmp.copy_from(&x);
            tmp.axpy(h / 2.0, &k2, 1.0);
            deriv(t + h / 2.0, &tmp, &mut k3, &mut u);
            tmp.copy_from(&x);
            tmp.axpy(h, &k3, 1.0);
            deriv(t + h, &tmp, &mut k4, &mut u);
            x.axpy(h / 6.0, &k1, 1.0);
            x.axpy(h / 3.0, &k2, 1.0);
            x.axpy(h / 3.0, &k3, 1.0);
            x.axpy(h / 6.0, &k4, 1.0);
        }
    }
    out
}

/// Drives the vehicle over `profile` at the given speed history.
///
/// The quarter-car model sees the track average; the half-car model sees
/// `(u_l, u_r)`. Outputs are `C·x` plus white Gaussian noise.
pub fn drive(
    profile: &RoadProfile,
    speed: &SpeedProfile,
    params: &VehicleParams,
    cfg: &DriveConfig,
) -> Result<SimTrace> {
    if !(cfg.dt.is_finite() && cfg.dt > 0.0) {
        return Err(Error::validation("dt", format!("must be > 0, got {}", cfg.dt)));
    }
    if !(cfg.noise_std.is_finite() && cfg.noise_std >= 0.0) {
        return Err(Error::validation("noise", "standard deviation must be >= 0"));
    }
    if profile.len() < 2 {
        return Err(Error::validation("profile", "need at least two samples"));
    }
    let ss = build_model(cfg.model, params)?;
    let reach = profile.length();
    // last sample whose whole preceding interval stays on the profile
    let mut n_fit = 0usize;
    while speed.distance_at((n_fit + 1) as f64 * cfg.dt) <= reach {
        n_fit += 1;
    }
    let n_fit = n_fit + 1;
    let (n, truncated) = match cfg.duration {
        Some(d) => {
            let wanted = (d / cfg.dt).floor() as usize + 1;
            if wanted > n_fit {
                log::warn!("drive of {d} s runs off the profile end; truncated to {n_fit} samples");
                (n_fit, true)
            } else {
                (wanted, false)
            }
        }
        None => (n_fit, false),
    };

    let left = &profile.left;
    let right = profile.right_or_left();
    let at = |track: &[f64], t: f64| profile.interpolate(track, profile.start + speed.distance_at(t));
    let outputs = match cfg.model {
        ModelKind::QuarterCar => simulate_outputs(
            &ss,
            |t, u| u[0] = 0.5 * (at(left, t) + at(right, t)),
            cfg.dt,
            n,
            cfg.substeps,
        ),
        ModelKind::HalfCar => simulate_outputs(
            &ss,
            |t, u| {
                u[0] = at(left, t);
                u[1] = at(right, t);
            },
            cfg.dt,
            n,
            cfg.substeps,
        ),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.noise_std.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::validation("noise", e.to_string()))?;
    let noisy = |v: f64, rng: &mut ChaCha8Rng| {
        if cfg.noise_std > 0.0 {
            v + noise.sample(rng)
        } else {
            v
        }
    };
    let mut vertical_acc = Vec::with_capacity(n);
    let mut lateral_acc = Vec::with_capacity(n);
    for k in 0..n {
        vertical_acc.push(noisy(outputs[0][k], &mut rng));
        let lat = match cfg.model {
            ModelKind::QuarterCar => 0.0,
            ModelKind::HalfCar => noisy(outputs[1][k], &mut rng),
        };
        lateral_acc.push(lat);
    }

    let times: Vec<f64> = (0..n).map(|k| k as f64 * cfg.dt).collect();
    let true_inputs = times
        .iter()
        .map(|&t| {
            let (l, r) = (at(left, t), at(right, t));
            match cfg.model {
                ModelKind::QuarterCar => [0.5 * (l + r); 2],
                ModelKind::HalfCar => [l, r],
            }
        })
        .collect();
    Ok(SimTrace {
        dt: cfg.dt,
        model: cfg.model,
        vertical_acc,
        lateral_acc,
        speed: times.iter().map(|&t| speed.speed_at(t)).collect(),
        station: times.iter().map(|&t| profile.start + speed.distance_at(t)).collect(),
        true_inputs,
        truncated,
    })
}

/// Response of `ss` from rest to sampled inputs (one channel per model input)
/// that vary linearly between samples. Exact for such inputs; returns one
/// channel per output on the input time grid.
pub fn simulate_sampled(ss: &StateSpace, inputs: &TimeSeries) -> Result<TimeSeries> {
    if inputs.n_channels() != ss.n_inputs() {
        return Err(Error::Dimension(format!(
            "system has {} inputs, got {} input channels",
            ss.n_inputs(),
            inputs.n_channels()
        )));
    }
    let (f, g0, g1) = discretize_foh(ss, inputs.dt)?;
    let (n, m, p) = (ss.n_states(), ss.n_inputs(), ss.n_outputs());
    let len = inputs.len();
    let mut x = DVector::zeros(n);
    let mut next = DVector::zeros(n);
    let mut u = DVector::zeros(m);
    let mut du = DVector::zeros(m);
    let mut y = DVector::zeros(p);
    let mut out = vec![Vec::with_capacity(len); p];
    for k in 0..len {
        y.gemv(1.0, &ss.c, &x, 0.0);
        for (ch, v) in out.iter_mut().zip(y.iter()) {
            ch.push(*v);
        }
        if k + 1 == len {
            break;
        }
        for (j, ch) in inputs.channels.iter().enumerate() {
            u[j] = ch[k];
            du[j] = ch[k + 1] - ch[k];
        }
        next.gemv(1.0, &f, &x, 0.0);
        next.gemv(1.0, &g0, &u, 1.0);
        next.gemv(1.0, &g1, &du, 1.0);
        std::mem::swap(&mut x, &mut next);
    }
    TimeSeries::new(inputs.t0, inputs.dt, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{golden_car_params, identified_car_params};
    use std::f64::consts::PI;

    fn cfg(model: ModelKind, noise: f64) -> DriveConfig {
        DriveConfig {
            model,
            noise_std: noise,
            ..Default::default()
        }
    }

    #[test]
    fn synth_is_deterministic_and_zero_mean() {
        let a = synth_profile(RoughnessClass::B, 200.0, 0.1, 42).unwrap();
        let b = synth_profile(RoughnessClass::B, 200.0, 0.1, 42).unwrap();
        let c = synth_profile(RoughnessClass::B, 200.0, 0.1, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.left, c.left);
        assert_eq!(a.len(), 2001);
        let mean = a.left.iter().sum::<f64>() / a.len() as f64;
        assert!(mean.abs() < 1e-12);
    }

    #[test]
    fn synth_track_correlation() {
        let p = synth_profile(RoughnessClass::C, 2000.0, 0.1, 9).unwrap();
        let r = p.right.as_ref().unwrap();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let rho = dot(&p.left, r) / (dot(&p.left, &p.left) * dot(r, r)).sqrt();
        assert!((rho - 0.9).abs() < 0.06, "{rho}");
    }

    #[test]
    fn synth_validation() {
        assert!(synth_profile(RoughnessClass::A, 39.0, 0.1, 0).is_err());
        assert!(synth_profile(RoughnessClass::A, 100.0, 0.0, 0).is_err());
        assert!("F".parse::<RoughnessClass>().is_err());
        assert_eq!("c".parse::<RoughnessClass>().unwrap(), RoughnessClass::C);
    }

    #[test]
    fn speed_profile_integral() {
        let s = SpeedProfile::piecewise(vec![(0.0, 10.0), (10.0, 20.0)]).unwrap();
        assert_eq!(s.distance_at(10.0), 150.0);
        assert_eq!(s.distance_at(12.0), 190.0);
        assert_eq!(s.speed_at(5.0), 15.0);
        assert!(SpeedProfile::piecewise(vec![(0.0, 10.0), (1.0, 0.0)]).is_err());
        assert!(SpeedProfile::constant(-3.0).is_err());
    }

    #[test]
    fn flat_road_gives_zero_outputs() {
        let p = RoadProfile::two_track(0.1, vec![0.0; 1000], vec![0.0; 1000]).unwrap();
        let v = SpeedProfile::constant(20.0).unwrap();
        for model in [ModelKind::QuarterCar, ModelKind::HalfCar] {
            let tr = drive(&p, &v, &identified_car_params(), &cfg(model, 0.0)).unwrap();
            assert!(tr.vertical_acc.iter().chain(&tr.lateral_acc).all(|v| *v == 0.0));
        }
    }

    #[test]
    fn identical_tracks_have_no_roll() {
        let p = synth_profile(RoughnessClass::C, 200.0, 0.1, 1).unwrap();
        let p = RoadProfile::two_track(0.1, p.left.clone(), p.left.clone()).unwrap();
        let v = SpeedProfile::constant(22.0).unwrap();
        let tr = drive(&p, &v, &identified_car_params(), &cfg(ModelKind::HalfCar, 0.0)).unwrap();
        assert!(tr.vertical_acc.iter().any(|v| v.abs() > 1e-3));
        assert!(tr.lateral_acc.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn station_increases_and_truncation_flag() {
        let p = synth_profile(RoughnessClass::A, 100.0, 0.1, 1).unwrap();
        let v = SpeedProfile::constant(20.0).unwrap();
        let tr = drive(&p, &v, &golden_car_params(), &cfg(ModelKind::QuarterCar, 0.0)).unwrap();
        assert!(tr.station.windows(2).all(|w| w[1] > w[0]));
        assert!(*tr.station.last().unwrap() <= p.end_station());
        assert!(!tr.truncated);
        let long = DriveConfig {
            duration: Some(60.0),
            ..cfg(ModelKind::QuarterCar, 0.0)
        };
        let tr2 = drive(&p, &v, &golden_car_params(), &long).unwrap();
        assert!(tr2.truncated);
        assert_eq!(tr2.len(), tr.len());
        let short = DriveConfig {
            duration: Some(1.0),
            ..long
        };
        assert_eq!(drive(&p, &v, &golden_car_params(), &short).unwrap().len(), 51);
    }

    #[test]
    fn qc_sinusoid_matches_frequency_response() {
        let params = golden_car_params();
        let v = 80.0 / 3.6;
        let f = 10.0;
        let wavelength = v / f;
        let spacing = 0.01;
        let n = (60.0 * v / spacing) as usize;
        let elev: Vec<f64> = (0..n)
            .map(|i| 0.01 * (2.0 * PI * i as f64 * spacing / wavelength).sin())
            .collect();
        let p = RoadProfile::single_track(spacing, elev).unwrap();
        let tr = drive(
            &p,
            &SpeedProfile::constant(v).unwrap(),
            &params,
            &DriveConfig {
                dt: 0.002,
                ..cfg(ModelKind::QuarterCar, 0.0)
            },
        )
        .unwrap();
        let tail = &tr.vertical_acc[tr.len() / 2..];
        let peak = tail.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let ss = crate::models::build_qc(&params).unwrap();
        let gain = ss.frequency_response(f).unwrap()[(0, 0)].norm();
        assert!((peak / (0.01 * gain) - 1.0).abs() < 0.02, "{peak} vs {}", 0.01 * gain);
    }

    #[test]
    fn doubling_the_road_doubles_the_output() {
        let p = synth_profile(RoughnessClass::B, 150.0, 0.1, 3).unwrap();
        let v = SpeedProfile::piecewise(vec![(0.0, 15.0), (5.0, 25.0)]).unwrap();
        let c = cfg(ModelKind::HalfCar, 0.0);
        let a = drive(&p, &v, &identified_car_params(), &c).unwrap();
        let b = drive(&p.scaled(2.0), &v, &identified_car_params(), &c).unwrap();
        for (x, y) in a.vertical_acc.iter().chain(&a.lateral_acc).zip(b.vertical_acc.iter().chain(&b.lateral_acc)) {
            assert!((2.0 * x - y).abs() <= 1e-9 * y.abs().max(1e-3));
        }
    }

    #[test]
    fn sampled_simulation_matches_rk4_with_linear_input() {
        let ss = build_model(ModelKind::HalfCar, &identified_car_params()).unwrap();
        let dt = 0.02;
        let n = 300;
        let ul: Vec<f64> = (0..n).map(|k| 0.01 * (0.21 * k as f64).sin()).collect();
        let ur: Vec<f64> = (0..n).map(|k| 0.007 * (0.13 * k as f64).cos() - 0.007).collect();
        let inputs = TimeSeries::new(0.0, dt, vec![ul.clone(), ur.clone()]).unwrap();
        let fast = simulate_sampled(&ss, &inputs).unwrap();
        let rk = simulate_outputs(
            &ss,
            |t, u| {
                u[0] = interpolate_uniform(&ul, 0.0, dt, t);
                u[1] = interpolate_uniform(&ur, 0.0, dt, t);
            },
            dt,
            n,
            40,
        );
        for c in 0..2 {
            let scale = rk[c].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for k in 0..n {
                assert!((fast.channels[c][k] - rk[c][k]).abs() < 1e-6 * scale, "ch {c} k {k}");
            }
        }
    }
}
