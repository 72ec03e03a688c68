//! Small BFGS minimizer with central finite-difference gradients.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsOptions {
    pub max_iterations: usize,
    /// Stop when the gradient infinity-norm falls below this.
    pub gradient_tolerance: f64,
    /// Stop when the relative cost decrease of an accepted step falls below this.
    pub cost_tolerance: f64,
    /// Relative finite-difference step.
    pub fd_step: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            gradient_tolerance: 1e-9,
            cost_tolerance: 1e-14,
            fd_step: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfgsResult {
    pub x: DVector<f64>,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Cost of every accepted iterate, starting with the initial point.
    pub history: Vec<f64>,
}

/// Central-difference gradient; `h_i = step · max(1, |x_i|)`.
pub fn fd_gradient(f: &mut impl FnMut(&DVector<f64>) -> f64, x: &DVector<f64>, step: f64) -> DVector<f64> {
    let mut g = DVector::zeros(x.len());
    let mut probe = x.clone();
    for i in 0..x.len() {
        let h = step * x[i].abs().max(1.0);
        probe[i] = x[i] + h;
        let fp = f(&probe);
        probe[i] = x[i] - h;
        let fm = f(&probe);
        probe[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    g
}

/// Minimizes `f` from `x0`. Accepted iterates never increase the cost; a
/// non-finite cost is treated as infinitely bad.
pub fn minimize(mut f: impl FnMut(&DVector<f64>) -> f64, x0: DVector<f64>, opts: &BfgsOptions) -> BfgsResult {
    let mut eval = |x: &DVector<f64>| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let n = x0.len();
    let mut x = x0;
    let mut fx = eval(&x);
    let mut history = vec![fx];
    let mut g = fd_gradient(&mut eval, &x, opts.fd_step);
    let mut h_inv = DMatrix::<f64>::identity(n, n);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        if g.amax() < opts.gradient_tolerance || fx == 0.0 {
            converged = true;
            break;
        }
        iterations += 1;
        let mut dir = -(&h_inv * &g);
        let mut slope = g.dot(&dir);
        if slope >= 0.0 {
            h_inv = DMatrix::identity(n, n);
            dir = -g.clone();
            slope = -g.norm_squared();
        }
        // backtracking Armijo line search
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = &x + &dir * alpha;
            let ft = eval(&trial);
            if ft <= fx + 1e-4 * alpha * slope {
                accepted = Some((trial, ft));
                break;
            }
            alpha *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            // no descent along the quasi-Newton direction: retry once as steepest descent
            if h_inv != DMatrix::identity(n, n) {
                h_inv = DMatrix::identity(n, n);
                continue;
            }
            converged = g.amax() < opts.gradient_tolerance.sqrt();
            break;
        };
        let g_new = fd_gradient(&mut eval, &x_new, opts.fd_step);
        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            let rho = 1.0 / sy;
            let i = DMatrix::<f64>::identity(n, n);
            let left = &i - &s * y.transpose() * rho;
            let right = &i - &y * s.transpose() * rho;
            h_inv = &left * &h_inv * &right + &s * s.transpose() * rho;
        }
        let rel_drop = (fx - f_new) / fx.abs().max(f64::MIN_POSITIVE);
        x = x_new;
        fx = f_new;
        g = g_new;
        history.push(fx);
        if rel_drop < opts.cost_tolerance {
            converged = true;
            break;
        }
    }
    BfgsResult {
        x,
        cost: fx,
        iterations,
        converged,
        history,
    }
}
