//! Kalman filter with unknown-input reconstruction.
//!
//! The road input is not used in the time update; it is modelled as zero-mean
//! process noise with covariance `Q`. After each measurement update the input
//! that best explains the state transition is recovered as
//!
//! ```text
//! û[k|k+1] = Q Gᵀ P[k+1|k]⁻¹ (x̂[k+1|k+1] − F x̂[k|k])
//! ```
//!
//! evaluated with a linear solve rather than an explicit inverse.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::models::{build_model, discretize, DiscreteStateSpace, ModelKind, VehicleParams};
use crate::signal::TimeSeries;

/// Default measurement noise standard deviation (m/s²).
pub const DEFAULT_MEASUREMENT_STD: f64 = 0.05;
/// Default ratio between process and measurement noise variances.
pub const DEFAULT_QR_RATIO: f64 = 1e9;
/// Default initial state variance: a diffuse prior, so the filter settles within a few samples.
pub const DEFAULT_INITIAL_VARIANCE: f64 = 1e3;

#[derive(Debug, Clone, PartialEq)]
pub struct KfConfig {
    /// Input (process) noise covariance, `m × m` (m²).
    pub q: DMatrix<f64>,
    /// Measurement noise covariance, `p × p` ((m/s²)²).
    pub r: DMatrix<f64>,
    pub p0: DMatrix<f64>,
    pub x0: DVector<f64>,
}

impl KfConfig {
    /// `R = σ²·I`, `Q = ratio·σ²·I`, `P0 = 1e3·I`, `x0 = 0`.
    pub fn from_ratio(n: usize, m: usize, p: usize, ratio: f64, measurement_std: f64) -> Result<Self> {
        if !(ratio.is_finite() && ratio > 0.0) {
            return Err(Error::validation("qr_ratio", format!("must be > 0, got {ratio}")));
        }
        if !(measurement_std.is_finite() && measurement_std > 0.0) {
            return Err(Error::validation("measurement std", "must be > 0"));
        }
        let var = measurement_std * measurement_std;
        Ok(Self {
            q: DMatrix::identity(m, m) * (ratio * var),
            r: DMatrix::identity(p, p) * var,
            p0: DMatrix::identity(n, n) * DEFAULT_INITIAL_VARIANCE,
            x0: DVector::zeros(n),
        })
    }

    pub fn for_system(dss: &DiscreteStateSpace, ratio: f64) -> Result<Self> {
        Self::from_ratio(dss.n_states(), dss.n_inputs(), dss.n_outputs(), ratio, DEFAULT_MEASUREMENT_STD)
    }

    fn check(&self, dss: &DiscreteStateSpace) -> Result<()> {
        let (n, m, p) = (dss.n_states(), dss.n_inputs(), dss.n_outputs());
        let ok = self.q.shape() == (m, m)
            && self.r.shape() == (p, p)
            && self.p0.shape() == (n, n)
            && self.x0.len() == n;
        if ok {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "filter config (Q {:?}, R {:?}, P0 {:?}, x0 {}) does not fit a system with n={n}, m={m}, p={p}",
                self.q.shape(),
                self.r.shape(),
                self.p0.shape(),
                self.x0.len()
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KfState {
    pub x: DVector<f64>,
    pub p: DMatrix<f64>,
    pub k: usize,
}

impl KfState {
    pub fn initial(cfg: &KfConfig) -> Self {
        Self {
            x: cfg.x0.clone(),
            p: cfg.p0.clone(),
            k: 0,
        }
    }
}

/// Reconstructed road input for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct InputEstimate {
    /// `û[k|k+1]` (m), one entry per model input.
    pub u: DVector<f64>,
    /// Time of step `k` (s).
    pub t: f64,
    /// Innovation of the measurement update at `k+1` (m/s²).
    pub innovation: DVector<f64>,
}

fn symmetrize(p: &mut DMatrix<f64>) {
    let n = p.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (p[(i, j)] + p[(j, i)]);
            p[(i, j)] = v;
            p[(j, i)] = v;
        }
    }
}

/// Solves `a z = b` for symmetric `a`: Cholesky first, full-pivot LU when `a`
/// is numerically indefinite.
fn solve_symmetric(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if let Some(ch) = a.clone().cholesky() {
        let z = ch.solve(b);
        if z.iter().all(|v| v.is_finite()) {
            return Some(z);
        }
    }
    let z = a.clone().full_piv_lu().solve(b)?;
    z.iter().all(|v| v.is_finite()).then_some(z)
}

/// `x̂[k+1|k] = F x̂[k|k]`, `P[k+1|k] = F P Fᵀ + G Q Gᵀ`.
pub fn time_update(state: &KfState, dss: &DiscreteStateSpace, cfg: &KfConfig) -> Result<KfState> {
    cfg.check(dss)?;
    if state.x.len() != dss.n_states() || state.p.shape() != (dss.n_states(), dss.n_states()) {
        return Err(Error::Dimension("filter state does not match the system".into()));
    }
    let x = &dss.f * &state.x;
    let mut p = &dss.f * &state.p * dss.f.transpose() + &dss.g * &cfg.q * dss.g.transpose();
    symmetrize(&mut p);
    Ok(KfState { x, p, k: state.k + 1 })
}

/// Measurement update; returns the filtered state and the innovation.
///
/// The covariance is updated in Joseph form `(I−KH) P (I−KH)ᵀ + K R Kᵀ`,
/// which equals `(I−KH) P` for the optimal gain and keeps `P` symmetric.
pub fn measurement_update(
    pred: &KfState,
    y: &DVector<f64>,
    dss: &DiscreteStateSpace,
    cfg: &KfConfig,
) -> Result<(KfState, DVector<f64>)> {
    cfg.check(dss)?;
    let h = &dss.h;
    if y.len() != h.nrows() {
        return Err(Error::Dimension(format!("measurement has {} entries, H has {} rows", y.len(), h.nrows())));
    }
    let hp = h * &pred.p;
    let mut s = &hp * h.transpose() + &cfg.r;
    symmetrize(&mut s);
    let kt = solve_symmetric(&s, &hp)
        .ok_or_else(|| Error::numerical(pred.k, "innovation covariance S is singular"))?;
    let gain = kt.transpose();
    let innovation = y - h * &pred.x;
    let x = &pred.x + &gain * &innovation;
    let n = pred.x.len();
    let ikh = DMatrix::identity(n, n) - &gain * h;
    let mut p = &ikh * &pred.p * ikh.transpose() + &gain * &cfg.r * gain.transpose();
    symmetrize(&mut p);
    Ok((KfState { x, p, k: pred.k }, innovation))
}

/// Least-squares input explaining the transition from `prev` (filtered, step k)
/// to `curr` (filtered, step k+1), given the predicted covariance `pred_p`.
pub fn input_estimate(
    prev: &KfState,
    pred_p: &DMatrix<f64>,
    curr: &KfState,
    dss: &DiscreteStateSpace,
    cfg: &KfConfig,
) -> Result<DVector<f64>> {
    cfg.check(dss)?;
    let residual = &curr.x - &dss.f * &prev.x;
    let rhs = DMatrix::from_column_slice(residual.len(), 1, residual.as_slice());
    let z = solve_symmetric(pred_p, &rhs)
        .ok_or_else(|| Error::numerical(curr.k, "predicted covariance P[k+1|k] is singular"))?;
    let u = &cfg.q * dss.g.transpose() * z;
    Ok(DVector::from_column_slice(u.as_slice()))
}

/// Which measured vibration channels feed the filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channels {
    Vertical,
    Lateral,
    Both,
}

impl std::str::FromStr for Channels {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vertical" => Ok(Channels::Vertical),
            "lateral" => Ok(Channels::Lateral),
            "both" => Ok(Channels::Both),
            other => Err(Error::validation("channels", format!("unknown channel set `{other}`"))),
        }
    }
}

impl Channels {
    pub fn count(self) -> usize {
        match self {
            Channels::Both => 2,
            _ => 1,
        }
    }

    fn output_rows(self, model: ModelKind) -> Result<Vec<usize>> {
        match (model, self) {
            (ModelKind::QuarterCar, Channels::Vertical) => Ok(vec![0]),
            (ModelKind::QuarterCar, other) => Err(Error::Config(format!(
                "the quarter-car model only explains vertical vibrations, not {other:?}"
            ))),
            (ModelKind::HalfCar, Channels::Vertical) => Ok(vec![0]),
            (ModelKind::HalfCar, Channels::Lateral) => Ok(vec![1]),
            (ModelKind::HalfCar, Channels::Both) => Ok(vec![0, 1]),
        }
    }
}

/// Result of running the filter over a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterRun {
    pub model: ModelKind,
    pub channels: Channels,
    pub estimates: Vec<InputEstimate>,
    pub final_state: KfState,
}

impl FilterRun {
    /// The single profile used for IRI: the estimate itself for the
    /// quarter-car, the left track for lateral-only runs, otherwise the track average.
    pub fn nominal_profile(&self) -> Vec<f64> {
        self.estimates
            .iter()
            .map(|e| match (self.model, self.channels) {
                (ModelKind::QuarterCar, _) => e.u[0],
                (ModelKind::HalfCar, Channels::Lateral) => e.u[0],
                (ModelKind::HalfCar, _) => 0.5 * (e.u[0] + e.u[1]),
            })
            .collect()
    }

    /// Estimated elevation of one input track (0 = left / single, 1 = right).
    pub fn track(&self, index: usize) -> Vec<f64> {
        self.estimates.iter().map(|e| e.u[index]).collect()
    }

    pub fn t0(&self) -> f64 {
        self.estimates.first().map_or(0.0, |e| e.t)
    }
}

/// Stepwise filter over a discrete system.
#[derive(Debug, Clone)]
pub struct UnknownInputFilter {
    dss: DiscreteStateSpace,
    cfg: KfConfig,
    state: KfState,
}

impl UnknownInputFilter {
    pub fn new(dss: DiscreteStateSpace, cfg: KfConfig) -> Result<Self> {
        cfg.check(&dss)?;
        let state = KfState::initial(&cfg);
        Ok(Self { dss, cfg, state })
    }

    pub fn state(&self) -> &KfState {
        &self.state
    }

    pub fn system(&self) -> &DiscreteStateSpace {
        &self.dss
    }

    /// Consumes the measurement at step k+1 and returns `(û[k|k+1], innovation)`.
    pub fn step(&mut self, y: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
        let pred = time_update(&self.state, &self.dss, &self.cfg)?;
        let (filtered, innovation) = measurement_update(&pred, y, &self.dss, &self.cfg)?;
        let u = input_estimate(&self.state, &pred.p, &filtered, &self.dss, &self.cfg)?;
        self.state = filtered;
        Ok((u, innovation))
    }
}

/// Runs the unknown-input filter over `measurements`, whose channels are the
/// selected vibration signals in order (vertical before lateral).
///
/// The first sample fixes the initial time; estimates are produced for steps
/// `0..N-1`, stamped with the time of step `k`.
pub fn run_filter(
    measurements: &TimeSeries,
    model: ModelKind,
    channels: Channels,
    params: &VehicleParams,
    cfg: Option<KfConfig>,
) -> Result<FilterRun> {
    let rows = channels.output_rows(model)?;
    if measurements.n_channels() != rows.len() {
        return Err(Error::Config(format!(
            "{:?} needs {} measurement channel(s), got {}",
            channels,
            rows.len(),
            measurements.n_channels()
        )));
    }
    let ss = build_model(model, params)?.select_outputs(&rows)?;
    let dss = discretize(&ss, measurements.dt)?;
    let cfg = match cfg {
        Some(c) => c,
        None => KfConfig::for_system(&dss, DEFAULT_QR_RATIO)?,
    };
    let mut filter = UnknownInputFilter::new(dss, cfg)?;
    let n = measurements.len();
    let mut estimates = Vec::with_capacity(n.saturating_sub(1));
    let mut y = DVector::zeros(rows.len());
    for k in 1..n {
        for (c, ch) in measurements.channels.iter().enumerate() {
            y[c] = ch[k];
        }
        let (u, innovation) = filter.step(&y)?;
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical(k, "non-finite input estimate"));
        }
        estimates.push(InputEstimate {
            u,
            t: measurements.time(k - 1),
            innovation,
        });
    }
    Ok(FilterRun {
        model,
        channels,
        estimates,
        final_state: filter.state.clone(),
    })
}
