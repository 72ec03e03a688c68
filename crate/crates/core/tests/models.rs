mod common;

use approx::assert_relative_eq;
use nalgebra::DMatrix;
use roughtrack::models::{build_hc, build_qc, discretize, discretize_foh, golden_car_params, identified_car_params, rattle_output};
use roughtrack::VehicleParams;

use common::{golden_qc, natural_frequencies, qc_matrices, state_response};

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

#[test]
fn golden_car_matrix_matches_hand_built() {
    let ss = build_qc(&golden_car_params()).unwrap();
    let (a, b) = golden_qc();
    assert_eq!(rows(&ss.a), a);
    assert_eq!(rows(&ss.b), b);
    assert_relative_eq!(ss.a[(3, 2)], -(15825.0 + 163250.0) / 37.5, max_relative = 1e-15);
}

#[test]
fn golden_car_modes_from_characteristic_polynomial() {
    let (a, _) = golden_qc();
    let f = natural_frequencies(&a);
    assert_eq!(f.len(), 2);
    assert!((f[0] - 1.2).abs() < 0.1, "sprung mode {} Hz", f[0]);
    assert!((f[1] - 10.9).abs() < 0.5, "unsprung mode {} Hz", f[1]);
    // the library's poles agree with the polynomial roots
    let ss = build_qc(&golden_car_params()).unwrap();
    let mut lib: Vec<f64> = ss
        .poles()
        .iter()
        .filter(|z| z.im > 0.0)
        .map(|z| z.norm() / (2.0 * std::f64::consts::PI))
        .collect();
    lib.sort_by(f64::total_cmp);
    for (x, y) in lib.iter().zip(&f) {
        assert_relative_eq!(*x, *y, max_relative = 1e-8);
    }
    assert!(ss.poles().iter().all(|z| z.re < 0.0));
}

#[test]
fn rattle_slope_gain_curve() {
    let (a, b) = golden_qc();
    let v = 80.0 / 3.6;
    let gain = |f: f64| {
        let x = state_response(&a, &b, 0, f);
        (x[1] - x[3]).norm() / v
    };
    let (fp, gp) = (0..39_500)
        .map(|i| 0.5 + i as f64 * 1e-3)
        .map(|f| (f, gain(f)))
        .max_by(|p, q| p.1.total_cmp(&q.1))
        .unwrap();
    assert!((10.3..=11.0).contains(&fp), "peak at {fp} Hz");
    assert!((4.7..=5.0).contains(&gp), "peak gain {gp}");
    assert!((0.9..=1.1).contains(&gain(3.0)));
    assert!((0.9..=1.1).contains(&gain(33.0)));

    let mut ss = build_qc(&golden_car_params()).unwrap();
    ss.c = DMatrix::from_row_slice(1, 4, rattle_output(&ss).unwrap().as_slice());
    for f in [1.0, 3.0, fp, 33.0] {
        assert_relative_eq!(ss.frequency_response(f).unwrap()[(0, 0)].norm() / v, gain(f), max_relative = 1e-10);
    }
}

#[test]
fn identified_half_car_is_stable_and_vertical_channel_matches_quarter_car() {
    let p = identified_car_params();
    assert_eq!((p.k_s, p.c_s, p.k_t, p.i_s, p.l, p.m_s, p.m_u), (37050.0, 4290.0, 370600.0, Some(1960.0), Some(1.0), 2400.0, 90.0));
    let hc = build_hc(&p).unwrap();
    assert!(hc.poles().iter().all(|z| z.re < 0.0));
    let (a, b) = qc_matrices(p.m_s, p.m_u, p.k_s, p.c_s, p.k_t);
    for f in [0.3, 1.0, 2.5, 7.0, 10.0, 15.0, 30.0] {
        // equal inputs on both wheels drive only the heave subsystem
        let h = hc.frequency_response(f).unwrap();
        let vertical_common = h[(0, 0)] + h[(0, 1)];
        let x = state_response(&a, &b, 0, f);
        let jw = num_complex::Complex64::new(0.0, 2.0 * std::f64::consts::PI * f);
        let qc_acc = jw * x[1];
        assert!((vertical_common - qc_acc).norm() <= 1e-9 * qc_acc.norm(), "f = {f}");
    }
}

#[test]
fn doubling_stiffness_and_damping_scales_modes_by_sqrt2() {
    let base = qc_matrices(1000.0, 37.5, 15825.0, 0.0, 163250.0).0;
    let double = qc_matrices(1000.0, 37.5, 2.0 * 15825.0, 0.0, 2.0 * 163250.0).0;
    let f1 = natural_frequencies(&base);
    let f2 = natural_frequencies(&double);
    for (x, y) in f1.iter().zip(&f2) {
        assert_relative_eq!(*y, x * 2f64.sqrt(), max_relative = 1e-9);
    }
    // with damping the pole moduli still scale by √2 when C scales by √2 too
    let p = VehicleParams::quarter_car(1000.0, 37.5, 2.0 * 15825.0, 2f64.sqrt() * 1500.0, 2.0 * 163250.0);
    let g = golden_car_params();
    let modes = |ss: roughtrack::StateSpace| {
        let mut v: Vec<f64> = ss.poles().iter().map(|z| z.norm()).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    for (x, y) in modes(build_qc(&g).unwrap()).iter().zip(modes(build_qc(&p).unwrap())) {
        assert_relative_eq!(y, x * 2f64.sqrt(), max_relative = 1e-8);
    }
}

/// First-order-hold step compared with RK4 on a linearly varying input.
#[test]
fn first_order_hold_matches_integration_with_ramp_input() {
    let ss = build_qc(&golden_car_params()).unwrap();
    let t = 0.02;
    let (f, g0, g1) = discretize_foh(&ss, t).unwrap();
    let (a, b) = golden_qc();
    let (u0, u1) = (0.3, -0.7);
    let steps = 20_000;
    let h = t / steps as f64;
    let mut x = [0.1, -0.2, 0.05, 0.4];
    let x0 = x;
    let deriv = |x: &[f64; 4], tt: f64| -> [f64; 4] {
        let u = u0 + (u1 - u0) * tt / t;
        std::array::from_fn(|i| (0..4).map(|j| a[i][j] * x[j]).sum::<f64>() + b[i][0] * u)
    };
    for s in 0..steps {
        let tt = s as f64 * h;
        let add = |x: &[f64; 4], k: &[f64; 4], c: f64| -> [f64; 4] { std::array::from_fn(|i| x[i] + c * k[i]) };
        let k1 = deriv(&x, tt);
        let k2 = deriv(&add(&x, &k1, h / 2.0), tt + h / 2.0);
        let k3 = deriv(&add(&x, &k2, h / 2.0), tt + h / 2.0);
        let k4 = deriv(&add(&x, &k3, h), tt + h);
        x = std::array::from_fn(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    }
    let xv = nalgebra::DVector::from_row_slice(&x0);
    let lib = &f * &xv + &g0 * u0 + &g1 * (u1 - u0);
    for i in 0..4 {
        assert!((lib[i] - x[i]).abs() <= 1e-9 * x.iter().fold(0.0f64, |m, v| m.max(v.abs())), "state {i}");
    }
    // a constant input reduces to the zero-order hold
    let zoh = discretize(&ss, t).unwrap();
    assert!((&zoh.g - &g0).amax() <= 1e-12 * zoh.g.amax());
}
