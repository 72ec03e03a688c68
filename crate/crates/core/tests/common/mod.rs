//! Oracles shared by the integration tests. Nothing here calls the code under test.

#![allow(dead_code)]

use num_complex::Complex64;

/// Least-squares fit of `a·sin(2πft) + b·cos(2πft) + c` over `x[k]` sampled at
/// `dt`; returns `(amplitude, phase, offset)`.
pub fn sine_fit(x: &[f64], dt: f64, f: f64) -> (f64, f64, f64) {
    let w = 2.0 * std::f64::consts::PI * f;
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for (k, v) in x.iter().enumerate() {
        let t = k as f64 * dt;
        let row = [(w * t).sin(), (w * t).cos(), 1.0];
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * v;
        }
    }
    let m: Vec<Vec<Complex64>> = ata
        .iter()
        .map(|r| r.iter().map(|v| Complex64::new(*v, 0.0)).collect())
        .collect();
    let s = complex_solve(m, atb.iter().map(|v| Complex64::new(*v, 0.0)).collect());
    let (a, b, c) = (s[0].re, s[1].re, s[2].re);
    (a.hypot(b), b.atan2(a), c)
}

/// Gaussian elimination with partial pivoting on a small complex system.
pub fn complex_solve(mut a: Vec<Vec<Complex64>>, mut b: Vec<Complex64>) -> Vec<Complex64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].norm().total_cmp(&a[j][c].norm())).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in (c + 1)..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                let v = a[c][k];
                a[r][k] -= f * v;
            }
            let v = b[c];
            b[r] -= f * v;
        }
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for k in (r + 1)..n {
            s -= a[r][k] * x[k];
        }
        x[r] = s / a[r][r];
    }
    x
}

/// `(jωI − A)⁻¹ B` column `input`, evaluated at `f` Hz.
pub fn state_response(a: &[Vec<f64>], b: &[Vec<f64>], input: usize, f: f64) -> Vec<Complex64> {
    let n = a.len();
    let jw = Complex64::new(0.0, 2.0 * std::f64::consts::PI * f);
    let m = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { jw } else { Complex64::new(0.0, 0.0) } - a[i][j])
                .collect()
        })
        .collect();
    complex_solve(m, b.iter().map(|r| Complex64::new(r[input], 0.0)).collect())
}

/// Characteristic polynomial coefficients (leading 1 first) by Faddeev–LeVerrier.
pub fn char_poly(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut coeffs = vec![1.0];
    let mut m = vec![vec![0.0; n]; n];
    for k in 1..=n {
        // M_k = A·M_{k-1} + c_{k-1} I
        let prev = m.clone();
        for i in 0..n {
            for j in 0..n {
                m[i][j] = (0..n).map(|l| a[i][l] * prev[l][j]).sum::<f64>();
            }
            m[i][i] += coeffs[k - 1];
        }
        let am_trace: f64 = (0..n).map(|i| (0..n).map(|l| a[i][l] * m[l][i]).sum::<f64>()).sum();
        coeffs.push(-am_trace / k as f64);
    }
    coeffs
}

/// Polynomial roots by Durand–Kerner iteration.
pub fn poly_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    let eval = |z: Complex64| coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c);
    let scale = coeffs.iter().skip(1).map(|c| c.abs()).fold(1.0f64, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..n).map(|i| seed.powu(i as u32) * scale.powf(1.0 / n as f64)).collect();
    for _ in 0..5000 {
        let mut delta: f64 = 0.0;
        for i in 0..n {
            let den = (0..n)
                .filter(|&j| j != i)
                .fold(Complex64::new(1.0, 0.0), |acc, j| acc * (roots[i] - roots[j]));
            let step = eval(roots[i]) / den;
            roots[i] -= step;
            delta = delta.max(step.norm() / roots[i].norm().max(1.0));
        }
        if delta < 1e-15 {
            break;
        }
    }
    roots
}

/// Natural frequencies `|λ|/2π` (Hz) of the complex-pair eigenvalues, sorted ascending.
pub fn natural_frequencies(a: &[Vec<f64>]) -> Vec<f64> {
    let mut f: Vec<f64> = poly_roots(&char_poly(a))
        .into_iter()
        .filter(|z| z.im > 0.0)
        .map(|z| z.norm() / (2.0 * std::f64::consts::PI))
        .collect();
    f.sort_by(f64::total_cmp);
    f
}

/// Golden-car quarter-car `(A, B)` written out from the parameter table.
pub fn golden_qc() -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    qc_matrices(1000.0, 37.5, 15825.0, 1500.0, 163250.0)
}

/// Quarter-car `(A, B)` with a quarter of the sprung mass per wheel.
pub fn qc_matrices(ms: f64, mu: f64, ks: f64, cs: f64, kt: f64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let m = ms / 4.0;
    (
        vec![
            vec![0.0, 1.0, 0.0, 0.0],
            vec![-ks / m, -cs / m, ks / m, cs / m],
            vec![0.0, 0.0, 0.0, 1.0],
            vec![ks / mu, cs / mu, -(ks + kt) / mu, -cs / mu],
        ],
        vec![vec![0.0], vec![0.0], vec![0.0], vec![kt / mu]],
    )
}

pub fn rms(v: &[f64]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / v.len().max(1) as f64).sqrt()
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
