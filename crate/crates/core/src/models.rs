//! Continuous-time suspension models and their zero-order-hold discretization.
//!
//! Two model structures share one parameter vector:
//!
//! * quarter-car (QC): states `(z_s, ż_s, z_u, ż_u)`, one road input, one output
//!   (sprung-mass vertical acceleration);
//! * lateral half-car (HC): states `(z_s, ż_s, θ, θ̇, z_ul, ż_ul, z_ur, ż_ur)`,
//!   inputs `(u_l, u_r)`, outputs `(z̈_s, θ̈)` where the lateral-acceleration
//!   proportionality constant is folded into `I_s`.
//!
//! The sprung-mass equations use `m_s / 4` (QC) and `m_s / 2` (HC), so a
//! [`VehicleParams::m_s`] always denotes the whole-vehicle sprung mass.

use nalgebra::{DMatrix, DVector, RowDVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Physical parameters shared by the quarter-car, half-car and Golden-car models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleParams {
    /// Total sprung mass (kg).
    pub m_s: f64,
    /// Unsprung mass per wheel (kg).
    pub m_u: f64,
    /// Suspension stiffness (N/m).
    pub k_s: f64,
    /// Suspension damping (Ns/m).
    pub c_s: f64,
    /// Tire stiffness (N/m).
    pub k_t: f64,
    /// Roll moment of inertia (kg·m²), half-car only.
    pub i_s: Option<f64>,
    /// Half-axis width, IMU-to-wheel distance (m), half-car only.
    pub l: Option<f64>,
}

fn check_positive(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::validation(field, format!("must be finite and > 0, got {value}")))
    }
}

impl VehicleParams {
    pub fn quarter_car(m_s: f64, m_u: f64, k_s: f64, c_s: f64, k_t: f64) -> Self {
        Self {
            m_s,
            m_u,
            k_s,
            c_s,
            k_t,
            i_s: None,
            l: None,
        }
    }

    pub fn with_roll(mut self, i_s: f64, l: f64) -> Self {
        self.i_s = Some(i_s);
        self.l = Some(l);
        self
    }

    pub fn validate_quarter_car(&self) -> Result<()> {
        check_positive("m_s", self.m_s)?;
        check_positive("m_u", self.m_u)?;
        check_positive("K_s", self.k_s)?;
        check_positive("C_s", self.c_s)?;
        check_positive("K_t", self.k_t)
    }

    /// Validates the quarter-car fields plus `I_s` and `l`; returns them.
    pub fn validate_half_car(&self) -> Result<(f64, f64)> {
        self.validate_quarter_car()?;
        let i_s = self
            .i_s
            .ok_or_else(|| Error::validation("I_s", "required for the half-car model"))?;
        let l = self
            .l
            .ok_or_else(|| Error::validation("l", "required for the half-car model"))?;
        check_positive("I_s", i_s)?;
        check_positive("l", l)?;
        Ok((i_s, l))
    }
}

/// The standardized IRI reference vehicle.
pub fn golden_car_params() -> VehicleParams {
    VehicleParams::quarter_car(1000.0, 37.5, 15_825.0, 1500.0, 163_250.0)
}

/// Parameters identified for a production passenger car (m_s, m_u and l approximated).
pub fn identified_car_params() -> VehicleParams {
    VehicleParams::quarter_car(2400.0, 90.0, 37_050.0, 4290.0, 370_600.0).with_roll(1960.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    QuarterCar,
    HalfCar,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qc" | "quarter" | "quarter-car" => Ok(ModelKind::QuarterCar),
            "hc" | "half" | "half-car" => Ok(ModelKind::HalfCar),
            other => Err(Error::validation("model", format!("unknown model `{other}`"))),
        }
    }
}

/// Continuous-time linear system `ẋ = A x + B u`, `y = C x`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub state_labels: Vec<String>,
    pub input_labels: Vec<String>,
    pub output_labels: Vec<String>,
}

fn labels(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

impl StateSpace {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension(format!("A is {}x{}, expected square", n, a.ncols())));
        }
        if b.nrows() != n {
            return Err(Error::Dimension(format!("B has {} rows, expected {n}", b.nrows())));
        }
        if c.ncols() != n {
            return Err(Error::Dimension(format!("C has {} columns, expected {n}", c.ncols())));
        }
        let (m, p) = (b.ncols(), c.nrows());
        Ok(Self {
            a,
            b,
            c,
            state_labels: (0..n).map(|i| format!("x{i}")).collect(),
            input_labels: (0..m).map(|i| format!("u{i}")).collect(),
            output_labels: (0..p).map(|i| format!("y{i}")).collect(),
        })
    }

    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn n_outputs(&self) -> usize {
        self.c.nrows()
    }

    /// Same dynamics, keeping only the given output rows.
    pub fn select_outputs(&self, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() || rows.iter().any(|&r| r >= self.n_outputs()) {
            return Err(Error::Dimension(format!(
                "output selection {rows:?} invalid for {} outputs",
                self.n_outputs()
            )));
        }
        let c = self.c.select_rows(rows);
        Ok(Self {
            c,
            output_labels: rows.iter().map(|&r| self.output_labels[r].clone()).collect(),
            ..self.clone()
        })
    }

    /// Eigenvalues of `A`.
    pub fn poles(&self) -> Vec<Complex64> {
        self.a.complex_eigenvalues().iter().copied().collect()
    }

    /// `C (jω I − A)⁻¹ B` at frequency `f_hz`; returns `None` at a pole.
    pub fn frequency_response(&self, f_hz: f64) -> Option<DMatrix<Complex64>> {
        let n = self.n_states();
        let jw = Complex64::new(0.0, 2.0 * std::f64::consts::PI * f_hz);
        let a = self.a.map(|v| Complex64::new(v, 0.0));
        let lhs = DMatrix::<Complex64>::identity(n, n) * jw - a;
        let b = self.b.map(|v| Complex64::new(v, 0.0));
        let x = lhs.lu().solve(&b)?;
        Some(self.c.map(|v| Complex64::new(v, 0.0)) * x)
    }
}

/// Builds the 4-state quarter-car system.
pub fn build_qc(params: &VehicleParams) -> Result<StateSpace> {
    params.validate_quarter_car()?;
    let VehicleParams {
        m_s,
        m_u,
        k_s,
        c_s,
        k_t,
        ..
    } = *params;
    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(4, 4, &[
        0.0,             1.0,             0.0,                 0.0,
        -4.0 * k_s / m_s, -4.0 * c_s / m_s, 4.0 * k_s / m_s,     4.0 * c_s / m_s,
        0.0,             0.0,             0.0,                 1.0,
        k_s / m_u,       c_s / m_u,       -(k_s + k_t) / m_u,  -c_s / m_u,
    ]);
    let b = DMatrix::from_column_slice(4, 1, &[0.0, 0.0, 0.0, k_t / m_u]);
    let c = a.rows(1, 1).into_owned();
    let mut ss = StateSpace::new(a, b, c)?;
    ss.state_labels = labels(&["z_s", "dz_s", "z_u", "dz_u"]);
    ss.input_labels = labels(&["u"]);
    ss.output_labels = labels(&["ddz_s"]);
    Ok(ss)
}

/// Builds the 8-state lateral half-car system with a centered IMU.
pub fn build_hc(params: &VehicleParams) -> Result<StateSpace> {
    let (i_s, l) = params.validate_half_car()?;
    let VehicleParams {
        m_s,
        m_u,
        k_s,
        c_s,
        k_t,
        ..
    } = *params;
    let (ks, cs) = (k_s, c_s);
    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(8, 8, &[
        0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
        -4.0 * ks / m_s, -4.0 * cs / m_s, 0.0, 0.0,
            2.0 * ks / m_s, 2.0 * cs / m_s, 2.0 * ks / m_s, 2.0 * cs / m_s,
        0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0,
        0.0, 0.0, -2.0 * ks * l * l / i_s, -2.0 * cs * l * l / i_s,
            -ks * l / i_s, -cs * l / i_s, ks * l / i_s, cs * l / i_s,
        0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0,
        ks / m_u, cs / m_u, -ks * l / m_u, -cs * l / m_u,
            -(ks + k_t) / m_u, -cs / m_u, 0.0, 0.0,
        0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0,
        ks / m_u, cs / m_u, ks * l / m_u, cs * l / m_u,
            0.0, 0.0, -(ks + k_t) / m_u, -cs / m_u,
    ]);
    let mut b = DMatrix::zeros(8, 2);
    b[(5, 0)] = k_t / m_u;
    b[(7, 1)] = k_t / m_u;
    let c = a.select_rows(&[1, 3]);
    let mut ss = StateSpace::new(a, b, c)?;
    ss.state_labels = labels(&["z_s", "dz_s", "theta", "dtheta", "z_ul", "dz_ul", "z_ur", "dz_ur"]);
    ss.input_labels = labels(&["u_l", "u_r"]);
    ss.output_labels = labels(&["ddz_s", "ddx_s"]);
    Ok(ss)
}

/// Builds the model of the requested kind.
pub fn build_model(kind: ModelKind, params: &VehicleParams) -> Result<StateSpace> {
    match kind {
        ModelKind::QuarterCar => build_qc(params),
        ModelKind::HalfCar => build_hc(params),
    }
}

/// Output row selecting the rattle-space velocity `ż_s − ż_u` of a quarter-car system.
pub fn rattle_output(ss: &StateSpace) -> Result<RowDVector<f64>> {
    if ss.n_states() != 4 || ss.n_inputs() != 1 {
        return Err(Error::Dimension(format!(
            "rattle output needs a quarter-car system (4 states, 1 input), got {} states, {} inputs",
            ss.n_states(),
            ss.n_inputs()
        )));
    }
    Ok(RowDVector::from_row_slice(&[0.0, 1.0, 0.0, -1.0]))
}

/// Discrete-time system `x[k+1] = F x[k] + G u[k]`, `y[k] = H x[k]` sampled every `t` seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteStateSpace {
    pub f: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub t: f64,
}

impl DiscreteStateSpace {
    pub fn n_states(&self) -> usize {
        self.f.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.g.ncols()
    }

    pub fn n_outputs(&self) -> usize {
        self.h.nrows()
    }
}

/// Zero-order-hold discretization.
///
/// `F = e^{AT}` and `G = ∫₀ᵀ e^{Aτ} B dτ` are read off the exponential of the
/// augmented matrix `[[A, B], [0, 0]]·T`, so `A` need not be invertible.
pub fn discretize(ss: &StateSpace, t: f64) -> Result<DiscreteStateSpace> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::validation("T", format!("sampling time must be > 0, got {t}")));
    }
    let (n, m) = (ss.n_states(), ss.n_inputs());
    let mut aug = DMatrix::zeros(n + m, n + m);
    aug.view_mut((0, 0), (n, n)).copy_from(&(&ss.a * t));
    aug.view_mut((0, n), (n, m)).copy_from(&(&ss.b * t));
    let e = aug.exp();
    Ok(DiscreteStateSpace {
        f: e.view((0, 0), (n, n)).into_owned(),
        g: e.view((0, n), (n, m)).into_owned(),
        h: ss.c.clone(),
        t,
    })
}

/// First-order-hold discretization for inputs that vary linearly between samples.
///
/// Returns `(F, G0, G1)` with `x[k+1] = F x[k] + G0 u[k] + G1 (u[k+1] − u[k])`,
/// read off the exponential of `[[A, B, 0], [0, 0, I], [0, 0, 0]]` with the
/// first block row scaled by `T`.
pub fn discretize_foh(ss: &StateSpace, t: f64) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::validation("T", format!("sampling time must be > 0, got {t}")));
    }
    let (n, m) = (ss.n_states(), ss.n_inputs());
    let mut aug = DMatrix::zeros(n + 2 * m, n + 2 * m);
    aug.view_mut((0, 0), (n, n)).copy_from(&(&ss.a * t));
    aug.view_mut((0, n), (n, m)).copy_from(&(&ss.b * t));
    aug.view_mut((n, n + m), (m, m)).fill_with_identity();
    let e = aug.exp();
    Ok((
        e.view((0, 0), (n, n)).into_owned(),
        e.view((0, n), (n, m)).into_owned(),
        e.view((0, n + m), (n, m)).into_owned(),
    ))
}

/// Applies `x ← F x + G u` in place.
pub fn step_discrete(dss: &DiscreteStateSpace, x: &mut DVector<f64>, u: &DVector<f64>, tmp: &mut DVector<f64>) {
    tmp.gemv(1.0, &dss.f, x, 0.0);
    tmp.gemv(1.0, &dss.g, u, 1.0);
    std::mem::swap(x, tmp);
}
