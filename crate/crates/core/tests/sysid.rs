mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use roughtrack::models::{build_hc, identified_car_params, ModelKind};
use roughtrack::signal::TimeSeries;
use roughtrack::simulate::{drive, synth_profile, DriveConfig, RoughnessClass, SpeedProfile};
use roughtrack::sysid::{cost, identify, simulate_response, Beta, SysIdProblem};

use common::natural_frequencies;

fn truth() -> Beta {
    let p = identified_car_params();
    Beta {
        k_s: p.k_s,
        c_s: p.c_s,
        k_t: p.k_t,
        i_s: p.i_s.unwrap(),
    }
}

/// Noiseless half-car drive over a class C road, scaled by `mu`. At 5 m/s each
/// 50 Hz sample lands on a 0.1 m profile node, so the road input is exactly
/// linear between samples, as the identification's simulator assumes.
fn problem(mu: f64, seed: u64) -> SysIdProblem {
    let p = identified_car_params();
    let road = synth_profile(RoughnessClass::C, 300.0, 0.1, seed).unwrap();
    let cfg = DriveConfig {
        model: ModelKind::HalfCar,
        noise_std: 0.0,
        ..DriveConfig::default()
    };
    let trace = drive(&road, &SpeedProfile::constant(5.0).unwrap(), &p, &cfg).unwrap();
    let scale = |v: &[f64]| v.iter().map(|x| mu * x).collect::<Vec<_>>();
    let measured = TimeSeries::new(0.0, trace.dt, vec![scale(&trace.vertical_acc), scale(&trace.lateral_acc)]).unwrap();
    let inputs = TimeSeries::new(
        0.0,
        trace.dt,
        vec![trace.true_inputs.iter().map(|u| u[0]).collect(), trace.true_inputs.iter().map(|u| u[1]).collect()],
    )
    .unwrap();
    SysIdProblem::new(measured, inputs, p.m_s, p.m_u, p.l.unwrap())
}

#[test]
fn doubling_stiffness_and_damping_scales_half_car_modes() {
    // undamped modes scale exactly by √2 when every stiffness doubles
    let p = identified_car_params();
    let undamped = |k: f64| {
        let q = roughtrack::VehicleParams::quarter_car(p.m_s, p.m_u, k * p.k_s, 1e-9, k * p.k_t).with_roll(p.i_s.unwrap(), p.l.unwrap());
        let a = build_hc(&q).unwrap().a;
        natural_frequencies(&(0..a.nrows()).map(|i| a.row(i).iter().copied().collect()).collect::<Vec<_>>())
    };
    let (f1, f2) = (undamped(1.0), undamped(2.0));
    assert_eq!(f1.len(), 4);
    for (x, y) in f1.iter().zip(&f2) {
        assert!((y / x - 2f64.sqrt()).abs() < 1e-6, "{x} Hz → {y} Hz");
    }
}

#[test]
fn truth_gives_small_cost_against_an_independent_simulator() {
    // the measurement comes from the RK4 drive simulator, the prediction from
    // the identification's own sampled simulator
    let prob = problem(1.0, 3);
    let c = cost(&truth(), 1.0, &prob).unwrap();
    let mut off = truth();
    off.k_s *= 1.5;
    let c_off = cost(&off, 1.0, &prob).unwrap();
    assert!(c < 1e-6 * c_off, "truth {c}, perturbed {c_off}");
}

#[test]
fn identified_gain_is_the_least_squares_optimum() {
    let mut prob = problem(0.72, 5);
    prob.starts = 1;
    let r = identify(&prob).unwrap();
    // J(μ) is a parabola in μ for fixed β; three samples pin its vertex
    let j = |mu: f64| cost(&r.beta, mu, &prob).unwrap();
    let (j0, j1, j2) = (j(0.0), j(1.0), j(2.0));
    let a = 0.5 * (j2 - 2.0 * j1 + j0);
    let b = j1 - j0 - a;
    let vertex = -b / (2.0 * a);
    assert!((r.mu - vertex).abs() <= 1e-6 * vertex, "{} vs {vertex}", r.mu);
    assert!((r.mu / 0.72 - 1.0).abs() < 0.05, "gain {}", r.mu);
    assert!(r.cost <= r.initial_cost);
}

#[test]
fn pure_noise_measurements_do_not_crash() {
    let mut prob = problem(1.0, 7);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let noise = Normal::new(0.0, 0.3).unwrap();
    for ch in &mut prob.measured.channels {
        for v in ch.iter_mut() {
            *v = noise.sample(&mut rng);
        }
    }
    prob.starts = 2;
    let r = identify(&prob).unwrap();
    assert!(r.beta.to_array().iter().all(|v| v.is_finite() && *v > 0.0));
    assert!(r.mu.is_finite() && r.mu > 0.0);
    // the fitted gain never does worse than predicting nothing
    let nothing = cost(&r.beta, 0.0, &prob).unwrap();
    assert!(r.cost <= nothing, "{} vs {nothing}", r.cost);
}

#[test]
fn response_is_linear_in_the_road() {
    let mut prob = problem(1.0, 2);
    let y1 = simulate_response(&truth(), &prob).unwrap();
    for ch in &mut prob.road_inputs.channels {
        for v in ch.iter_mut() {
            *v *= -3.0;
        }
    }
    let y3 = simulate_response(&truth(), &prob).unwrap();
    for (a, b) in y1.channels.iter().flatten().zip(y3.channels.iter().flatten()) {
        assert!((-3.0 * a - b).abs() <= 1e-9 * b.abs().max(1e-6));
    }
}

