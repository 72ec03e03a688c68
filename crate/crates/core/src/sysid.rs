//! Grey-box identification of suspension parameters by amplitude-spectrum matching.
//!
//! The half-car response to the measured road inputs is simulated for a
//! candidate `β = (K_s, C_s, K_t, I_s)`; the cost is the band-limited squared
//! difference between the smoothed amplitude spectra of the measured and the
//! simulated vibrations, with a scalar gain `μ` on the simulation:
//!
//! ```text
//! J(β, μ) = Σ_channels ∫_{f_lo}^{f_hi} (|Y(f)| − μ |Ŷ(f, β)|)² df
//! ```
//!
//! For fixed `β` the optimal `μ` is closed-form, so the search runs over `ln β` only.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::models::{build_hc, golden_car_params, VehicleParams};
use crate::optim::{minimize, BfgsOptions};
use crate::signal::{amplitude_spectrum, smooth_spectrum, AmplitudeSpectrum, TimeSeries};
use crate::simulate::simulate_sampled;

/// The estimated parameters `β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beta {
    pub k_s: f64,
    pub c_s: f64,
    pub k_t: f64,
    pub i_s: f64,
}

impl Beta {
    /// Golden-car suspension with a roll inertia of 3000 kg·m².
    pub fn default_init() -> Self {
        let g = golden_car_params();
        Self {
            k_s: g.k_s,
            c_s: g.c_s,
            k_t: g.k_t,
            i_s: 3000.0,
        }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.k_s, self.c_s, self.k_t, self.i_s]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self {
            k_s: a[0],
            c_s: a[1],
            k_t: a[2],
            i_s: a[3],
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in ["K_s", "C_s", "K_t", "I_s"].iter().zip(self.to_array()) {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(*name, format!("must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SysIdProblem {
    /// Measured `(vertical, lateral)` accelerations.
    pub measured: TimeSeries,
    /// Road inputs `(u_l, u_r)` on the same time grid.
    pub road_inputs: TimeSeries,
    pub m_s: f64,
    pub m_u: f64,
    pub l: f64,
    /// Frequency band of the cost (Hz).
    pub band: (f64, f64),
    /// Moving-average width applied to both spectra (Hz).
    pub smoothing: f64,
    pub init: Beta,
    pub mu0: f64,
    /// Number of starting points, the first being `init` itself.
    pub starts: usize,
    pub seed: u64,
    pub options: BfgsOptions,
}

impl SysIdProblem {
    /// Problem with the default band (0.5–15 Hz), 0.5 Hz smoothing, Golden-car
    /// initialization and five starts.
    pub fn new(measured: TimeSeries, road_inputs: TimeSeries, m_s: f64, m_u: f64, l: f64) -> Self {
        Self {
            measured,
            road_inputs,
            m_s,
            m_u,
            l,
            band: (0.5, 15.0),
            smoothing: 0.5,
            init: Beta::default_init(),
            mu0: 1.0,
            starts: 5,
            seed: 0,
            options: BfgsOptions::default(),
        }
    }

    pub fn params(&self, beta: &Beta) -> VehicleParams {
        VehicleParams::quarter_car(self.m_s, self.m_u, beta.k_s, beta.c_s, beta.k_t).with_roll(beta.i_s, self.l)
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("m_s", self.m_s), ("m_u", self.m_u), ("l", self.l)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(name, format!("must be > 0, got {v}")));
            }
        }
        if self.measured.n_channels() != 2 || self.road_inputs.n_channels() != 2 {
            return Err(Error::Dimension("identification needs two measured and two input channels".into()));
        }
        if self.measured.len() != self.road_inputs.len() || (self.measured.dt - self.road_inputs.dt).abs() > 1e-12 {
            return Err(Error::Dimension("measured and input series must share one time grid".into()));
        }
        let nyquist = 0.5 / self.measured.dt;
        let (lo, hi) = self.band;
        if !(lo > 0.0 && hi > lo && hi <= nyquist) {
            return Err(Error::validation("band", format!("[{lo}, {hi}] Hz must lie inside (0, {nyquist}] Hz")));
        }
        if !(self.mu0.is_finite() && self.mu0 > 0.0) {
            return Err(Error::validation("mu", "initial scaling must be > 0"));
        }
        self.init.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SysIdResult {
    pub beta: Beta,
    pub mu: f64,
    pub cost: f64,
    pub initial_cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Simulated `(vertical, lateral)` response for `β` driven by the problem's road inputs.
pub fn simulate_response(beta: &Beta, problem: &SysIdProblem) -> Result<TimeSeries> {
    beta.validate()?;
    let ss = build_hc(&problem.params(beta))?;
    simulate_sampled(&ss, &problem.road_inputs)
}

/// Precomputed measured spectrum and trapezoid weights over the band.
#[derive(Debug, Clone)]
pub struct SpectralObjective {
    bins: Vec<usize>,
    weights: Vec<f64>,
    measured: Vec<Vec<f64>>,
    smoothing: f64,
    energy: f64,
}

impl SpectralObjective {
    pub fn new(problem: &SysIdProblem) -> Result<Self> {
        problem.validate()?;
        let sp = smooth_spectrum(&amplitude_spectrum(&problem.measured)?, problem.smoothing)?;
        let (lo, hi) = problem.band;
        let bins: Vec<usize> = (0..sp.n_bins())
            .filter(|&b| {
                let f = sp.frequency(b);
                f >= lo - 1e-12 && f <= hi + 1e-12
            })
            .collect();
        if bins.len() < 2 {
            return Err(Error::validation("band", "fewer than two spectrum bins inside the band"));
        }
        let mut weights = vec![sp.df; bins.len()];
        weights[0] *= 0.5;
        *weights.last_mut().unwrap() *= 0.5;
        let measured: Vec<Vec<f64>> = sp.magnitudes.iter().map(|ch| bins.iter().map(|&b| ch[b]).collect()).collect();
        let energy = measured
            .iter()
            .map(|ch| ch.iter().zip(&weights).map(|(y, w)| w * y * y).sum::<f64>())
            .sum();
        Ok(Self {
            bins,
            weights,
            measured,
            smoothing: problem.smoothing,
            energy,
        })
    }

    /// `∫|Y|² df` over the band, summed over channels.
    pub fn measured_energy(&self) -> f64 {
        self.energy
    }

    fn simulated(&self, predicted: &TimeSeries) -> Result<Vec<Vec<f64>>> {
        let sp: AmplitudeSpectrum = smooth_spectrum(&amplitude_spectrum(predicted)?, self.smoothing)?;
        Ok(sp.magnitudes.iter().map(|ch| self.bins.iter().map(|&b| ch[b]).collect()).collect())
    }

    fn inner(&self, a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.iter().zip(y).zip(&self.weights).map(|((p, q), w)| w * p * q).sum::<f64>())
            .sum()
    }

    fn cost_of(&self, sim: &[Vec<f64>], mu: f64) -> f64 {
        self.measured
            .iter()
            .zip(sim)
            .map(|(y, s)| {
                y.iter()
                    .zip(s)
                    .zip(&self.weights)
                    .map(|((a, b), w)| w * (a - mu * b).powi(2))
                    .sum::<f64>()
            })
            .sum()
    }

    /// Cost at an explicit gain `μ`.
    pub fn cost(&self, beta: &Beta, mu: f64, problem: &SysIdProblem) -> Result<f64> {
        let sim = self.simulated(&simulate_response(beta, problem)?)?;
        Ok(self.cost_of(&sim, mu))
    }

    /// Least-squares gain `μ* = ⟨|Y|,|Ŷ|⟩ / ⟨|Ŷ|,|Ŷ|⟩` and the cost at `μ*`.
    /// Falls back to `fallback_mu` when the simulated spectrum vanishes.
    pub fn cost_best_mu(&self, beta: &Beta, problem: &SysIdProblem, fallback_mu: f64) -> Result<(f64, f64)> {
        let sim = self.simulated(&simulate_response(beta, problem)?)?;
        let ss = self.inner(&sim, &sim);
        let mu = if ss > 0.0 {
            self.inner(&self.measured, &sim) / ss
        } else {
            fallback_mu
        };
        Ok((self.cost_of(&sim, mu), mu))
    }
}

/// `J(β, μ)` for one parameter set.
pub fn cost(beta: &Beta, mu: f64, problem: &SysIdProblem) -> Result<f64> {
    SpectralObjective::new(problem)?.cost(beta, mu, problem)
}

/// Optimal gain for fixed `β` and the corresponding cost.
pub fn best_mu(beta: &Beta, problem: &SysIdProblem) -> Result<(f64, f64)> {
    let obj = SpectralObjective::new(problem)?;
    let (c, mu) = obj.cost_best_mu(beta, problem, problem.mu0)?;
    Ok((mu, c))
}

/// Quasi-Newton identification over `ln β` from `problem.init` plus
/// `problem.starts − 1` log-normally perturbed starts; the lowest cost wins.
pub fn identify(problem: &SysIdProblem) -> Result<SysIdResult> {
    let obj = SpectralObjective::new(problem)?;
    let scale = obj.measured_energy().max(f64::MIN_POSITIVE);
    let objective = |z: &DVector<f64>| -> f64 {
        let beta = Beta::from_array([z[0].exp(), z[1].exp(), z[2].exp(), z[3].exp()]);
        match obj.cost_best_mu(&beta, problem, problem.mu0) {
            Ok((c, _)) => c / scale,
            Err(_) => f64::INFINITY,
        }
    };
    let (initial_cost, initial_mu) = obj.cost_best_mu(&problem.init, problem, problem.mu0)?;

    let z0: Vec<f64> = problem.init.to_array().iter().map(|v| v.ln()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(problem.seed);
    let jitter = Normal::new(0.0, 0.5).expect("constant std is valid");
    let mut best: Option<crate::optim::BfgsResult> = None;
    for start in 0..problem.starts.max(1) {
        let z = DVector::from_iterator(
            4,
            z0.iter().map(|v| if start == 0 { *v } else { v + jitter.sample(&mut rng) }),
        );
        let r = minimize(objective, z, &problem.options);
        log::debug!("start {start}: cost {:.3e} after {} iterations", r.cost * scale, r.iterations);
        if best.as_ref().is_none_or(|b| r.cost < b.cost) {
            best = Some(r);
        }
    }
    let best = best.expect("at least one start");
    let mut beta = Beta::from_array([best.x[0].exp(), best.x[1].exp(), best.x[2].exp(), best.x[3].exp()]);
    let (mut cost, mut mu) = obj.cost_best_mu(&beta, problem, problem.mu0)?;
    // the exp/ln round trip can lose the last bits; never report worse than the start
    if initial_cost <= cost {
        (beta, cost, mu) = (problem.init, initial_cost, initial_mu);
    }
    Ok(SysIdResult {
        beta,
        mu,
        cost,
        initial_cost,
        iterations: best.iterations,
        converged: best.converged,
    })
}
