//! Measurement preprocessing: gravity removal, Butterworth filtering and
//! amplitude spectra.

use std::f64::consts::PI;

use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};

/// Standard gravity used for IMU preprocessing (m/s²).
pub const GRAVITY: f64 = 9.82;

/// Uniformly sampled multi-channel signal.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub t0: f64,
    pub dt: f64,
    pub channels: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub fn new(t0: f64, dt: f64, channels: Vec<Vec<f64>>) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::validation("dt", format!("must be > 0, got {dt}")));
        }
        if let Some(first) = channels.first() {
            if channels.iter().any(|c| c.len() != first.len()) {
                return Err(Error::Dimension("time-series channels differ in length".into()));
            }
        }
        Ok(Self { t0, dt, channels })
    }

    pub fn single(t0: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        Self::new(t0, dt, vec![values])
    }

    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn sample_rate(&self) -> f64 {
        1.0 / self.dt
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    fn map_channels(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> TimeSeries {
        TimeSeries {
            t0: self.t0,
            dt: self.dt,
            channels: self.channels.iter().map(|c| f(c)).collect(),
        }
    }
}

/// Subtracts `g` from every sample.
pub fn remove_gravity(ts: &TimeSeries, g: f64) -> TimeSeries {
    ts.map_channels(|c| c.iter().map(|v| v - g).collect())
}

/// Second-order IIR section, transposed direct form II.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    b0: f64,
    b1: f64,
    b2: f64,
    a1: f64,
    a2: f64,
    s1: f64,
    s2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterKind {
    LowPass,
    HighPass,
}

impl Biquad {
    /// Bilinear-transform section with cutoff prewarped to `fc`.
    pub fn new(kind: FilterKind, fc: f64, fs: f64, q: f64) -> Self {
        let w0 = 2.0 * PI * fc / fs;
        let (sin, cos) = w0.sin_cos();
        let alpha = sin / (2.0 * q);
        let a0 = 1.0 + alpha;
        let (b0, b1, b2) = match kind {
            FilterKind::LowPass => ((1.0 - cos) / 2.0, 1.0 - cos, (1.0 - cos) / 2.0),
            FilterKind::HighPass => ((1.0 + cos) / 2.0, -(1.0 + cos), (1.0 + cos) / 2.0),
        };
        Self {
            b0: b0 / a0,
            b1: b1 / a0,
            b2: b2 / a0,
            a1: -2.0 * cos / a0,
            a2: (1.0 - alpha) / a0,
            s1: 0.0,
            s2: 0.0,
        }
    }

    pub fn dc_gain(&self) -> f64 {
        (self.b0 + self.b1 + self.b2) / (1.0 + self.a1 + self.a2)
    }

    /// Puts the section in steady state for a constant input `x`; returns the steady output.
    pub fn settle(&mut self, x: f64) -> f64 {
        let y = self.dc_gain() * x;
        self.s2 = self.b2 * x - self.a2 * y;
        self.s1 = self.b1 * x - self.a1 * y + self.s2;
        y
    }

    #[inline]
    pub fn process(&mut self, x: f64) -> f64 {
        let y = self.b0 * x + self.s1;
        self.s1 = self.b1 * x - self.a1 * y + self.s2;
        self.s2 = self.b2 * x - self.a2 * y;
        y
    }
}

/// Even-order Butterworth filter as a cascade of biquads.
#[derive(Debug, Clone, PartialEq)]
pub struct Butterworth {
    sections: Vec<Biquad>,
}

impl Butterworth {
    pub fn new(kind: FilterKind, order: usize, fc: f64, fs: f64) -> Result<Self> {
        if order == 0 || !order.is_multiple_of(2) {
            return Err(Error::validation("order", format!("must be even and > 0, got {order}")));
        }
        if !(fc.is_finite() && fc > 0.0 && fc < fs / 2.0) {
            return Err(Error::validation(
                "cutoff",
                format!("{fc} Hz outside (0, {}) Hz", fs / 2.0),
            ));
        }
        let sections = (1..=order / 2)
            .map(|k| {
                let theta = (2 * k - 1) as f64 * PI / (2 * order) as f64;
                Biquad::new(kind, fc, fs, 1.0 / (2.0 * theta.cos()))
            })
            .collect();
        Ok(Self { sections })
    }

    pub fn settle(&mut self, x: f64) {
        self.sections.iter_mut().fold(x, |x, s| s.settle(x));
    }

    #[inline]
    pub fn process(&mut self, x: f64) -> f64 {
        self.sections.iter_mut().fold(x, |x, s| s.process(x))
    }

    /// Filters `x` causally, starting from the steady state of `x[0]`.
    pub fn run(&mut self, x: &[f64]) -> Vec<f64> {
        if let Some(&x0) = x.first() {
            self.settle(x0);
        }
        x.iter().map(|&v| self.process(v)).collect()
    }
}

fn apply(ts: &TimeSeries, kind: FilterKind, order: usize, fc: f64) -> Result<TimeSeries> {
    let proto = Butterworth::new(kind, order, fc, ts.sample_rate())?;
    Ok(ts.map_channels(|c| proto.clone().run(c)))
}

/// Causal second-order Butterworth low-pass, applied per channel.
pub fn lowpass(ts: &TimeSeries, fc: f64) -> Result<TimeSeries> {
    apply(ts, FilterKind::LowPass, 2, fc)
}

/// Causal second-order Butterworth high-pass, applied per channel.
pub fn highpass(ts: &TimeSeries, fc: f64) -> Result<TimeSeries> {
    apply(ts, FilterKind::HighPass, 2, fc)
}

/// Causal Butterworth high-pass of arbitrary even order.
pub fn highpass_order(ts: &TimeSeries, fc: f64, order: usize) -> Result<TimeSeries> {
    apply(ts, FilterKind::HighPass, order, fc)
}

/// One-sided amplitude spectrum, `|DFT| · dt` per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeSpectrum {
    pub df: f64,
    pub magnitudes: Vec<Vec<f64>>,
    /// Number of time samples the spectrum was computed from.
    pub n_samples: usize,
    pub dt: f64,
}

impl AmplitudeSpectrum {
    pub fn n_bins(&self) -> usize {
        self.magnitudes.first().map_or(0, Vec::len)
    }

    pub fn frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.df
    }

    pub fn nyquist(&self) -> f64 {
        0.5 / self.dt
    }

    /// `Σ |X(f)|² df` over the full two-sided spectrum of one channel.
    pub fn two_sided_energy(&self, channel: usize) -> f64 {
        let m = &self.magnitudes[channel];
        let n = self.n_samples;
        let mut sum = 0.0;
        for (k, v) in m.iter().enumerate() {
            let mirrored = k != 0 && !(n.is_multiple_of(2) && k == n / 2);
            sum += if mirrored { 2.0 * v * v } else { v * v };
        }
        sum * self.df
    }
}

/// One-sided magnitude of the DFT, rectangular window, scaled by `dt`.
pub fn amplitude_spectrum(ts: &TimeSeries) -> Result<AmplitudeSpectrum> {
    let n = ts.len();
    if n < 2 {
        return Err(Error::validation("time series", format!("need at least 2 samples, got {n}")));
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let bins = n / 2 + 1;
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    let magnitudes = ts
        .channels
        .iter()
        .map(|c| {
            for (b, &v) in buf.iter_mut().zip(c) {
                *b = Complex::new(v, 0.0);
            }
            fft.process(&mut buf);
            buf[..bins].iter().map(|z| z.norm() * ts.dt).collect()
        })
        .collect();
    Ok(AmplitudeSpectrum {
        df: 1.0 / (n as f64 * ts.dt),
        magnitudes,
        n_samples: n,
        dt: ts.dt,
    })
}

/// Centered moving average over `round(width / df)` bins; edge bins average
/// over whatever part of the window exists.
pub fn smooth_spectrum(sp: &AmplitudeSpectrum, width: f64) -> Result<AmplitudeSpectrum> {
    // tolerate width == df up to rounding
    if !(width.is_finite() && width >= sp.df * (1.0 - 1e-9)) {
        return Err(Error::validation(
            "smoothing width",
            format!("{width} Hz is narrower than the bin width {} Hz", sp.df),
        ));
    }
    let k = ((width / sp.df).round() as usize).max(1);
    let before = (k - 1) / 2;
    let after = k / 2;
    let magnitudes = sp
        .magnitudes
        .iter()
        .map(|m| {
            let mut prefix = Vec::with_capacity(m.len() + 1);
            prefix.push(0.0);
            let mut acc = 0.0;
            for v in m {
                acc += v;
                prefix.push(acc);
            }
            (0..m.len())
                .map(|i| {
                    let lo = i.saturating_sub(before);
                    let hi = (i + after + 1).min(m.len());
                    (prefix[hi] - prefix[lo]) / (hi - lo) as f64
                })
                .collect()
        })
        .collect();
    Ok(AmplitudeSpectrum {
        magnitudes,
        ..sp.clone()
    })
}
