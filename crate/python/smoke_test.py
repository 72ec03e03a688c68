"""Smoke test of the Python bindings: simulate, estimate, evaluate, match, identify."""

import math

import roughtrack_py as rt


def main():
    golden = rt.VehicleParams.golden()
    car = rt.VehicleParams.identified()
    print(car)
    print("quarter-car modes (Hz):", [round(f, 2) for f in car.natural_frequencies("qc")])

    road = rt.RoadProfile.synthetic("B", 800.0, 0.1, seed=3)
    reference = rt.iri(road)
    assert len([s for s in reference if not s.partial]) == 20
    assert all(s.iri > 0 for s in reference)

    drive = rt.simulate_drive(road, 80 / 3.6, golden, noise=0.05, seed=4)
    estimate = rt.estimate_iri(drive.vertical, drive.lateral, drive.speed, drive.dt, golden)
    report = rt.evaluate(estimate, reference)
    print(f"class B: {report['n']} segments, rmse {report['rmse']:.3f} mm/m, mean {report['mean']:+.3f}")
    assert report["n"] >= 15 and report["rmse"] < 0.6

    slope = rt.fit_calibration(report["pairs"])
    assert 0.5 < slope < 2.0

    lat = [58.4 + i * 1e-5 for i in range(30)]
    matches = rt.match_traces([(a, 15.6) for a in lat], [(a, 15.60002) for a in lat])
    assert all(m is not None and m[0] == i for i, m in enumerate(matches))

    hc_road = rt.RoadProfile.synthetic("C", 300.0, 0.1, seed=5)
    hc = rt.simulate_drive(hc_road, 5.0, car, model="hc", noise=0.0)
    fitted, mu, cost = rt.identify(
        [0.8 * a for a in hc.vertical], [0.8 * a for a in hc.lateral],
        hc.input_left, hc.input_right, hc.dt, car, starts=1,
    )
    print(f"identified: mu {mu:.3f}, K_s {fitted.k_s:.0f} (true {car.k_s:.0f}), cost {cost:.2e}")
    assert math.isclose(mu, 0.8, rel_tol=0.05)

    try:
        rt.RoadProfile(-1.0, [0.0, 0.0])
    except ValueError as e:
        print("rejected:", e)
    else:
        raise AssertionError("negative spacing accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
