import math

import numpy as np
import pytest

import aggdiff


def test_gaussian_profile_and_closed_forms():
    g = aggdiff.Grid(1, 10.0, 512)
    rho = aggdiff.gaussian_profile(g, [0.3], 1.4)
    assert rho.shape == (512,)
    assert g.integrate(rho) == pytest.approx(1.0, rel=1e-14)
    cf = aggdiff.gaussian_closed_forms(1, 0.09, 1.4)
    assert aggdiff.relative_entropy_L1(g, rho) == pytest.approx(cf["E1"], abs=1e-6)
    assert aggdiff.fisher_info(g, rho) == pytest.approx(cf["I1"], abs=1e-5)
    # Independent check with NumPy quadrature.
    x = g.centers()
    G = np.exp(-0.5 * x**2) / math.sqrt(2 * math.pi)
    e1 = np.sum(rho * np.log(rho / G)) * g.spacing
    assert aggdiff.relative_entropy_L1(g, rho) == pytest.approx(e1, rel=1e-10)


def test_two_dimensional_shapes():
    g = aggdiff.Grid(2, 8.0, 32)
    rho = aggdiff.gaussian_profile(g, [0.1, -0.1], 1.0)
    assert rho.shape == (32, 32)
    d = aggdiff.diagnostics(g, rho)
    assert d["mass"] == pytest.approx(1.0)
    assert d["E1"] >= -1e-8
    with pytest.raises(ValueError):
        aggdiff.entropy(g, np.ones(10))


def test_simulate_heat_relaxation():
    g = aggdiff.Grid(1, 10.0, 256)
    rho0 = aggdiff.gaussian_profile(g, [0.0], 1.5)
    out = aggdiff.simulate(g, rho0, end_time=1.0, output_every=0.1)
    assert out["completed"]
    rec = out["records"]
    want = 1 + 0.5 * np.exp(-2 * rec["tau"])
    assert np.max(np.abs(rec["second_moment"] - want)) < 2e-3
    fit = aggdiff.fit_decay(list(rec["tau"]), list(rec["E1"]), (0.25, 1.0), floor=0.0)
    assert fit["slope"] < -1.8


def test_simulation_object_conserves_mass():
    g = aggdiff.Grid(1, 8.0, 128)
    sim = aggdiff.Simulation(g, aggdiff.gaussian_profile(g, [0.0], 1.0), aggdiff.Potential("gaussian_bump", A=-0.5, sigma=1.0))
    sim.advance(0.3)
    assert sim.time == pytest.approx(0.3)
    assert g.integrate(sim.density) == pytest.approx(1.0, rel=1e-12)
    assert np.all(sim.density >= 0)


def test_potential_and_prediction():
    W = aggdiff.Potential("gaussian_bump", A=0.05, sigma=1.0)
    assert W.W([0.0]) == pytest.approx(0.05)
    assert W.norms(1)["L1_W"] == pytest.approx(0.05 * math.sqrt(2 * math.pi), rel=1e-8)
    assert aggdiff.predict_e1(1, W)["exponent"] == -1.0
    assert aggdiff.predict_e1(1, aggdiff.Potential("smoothed_log", chi=0.5, delta=0.5))["exponent"] is None
    assert aggdiff.Potential("smoothed_log").norms(1)["sup_W"] is None
    with pytest.raises(ValueError):
        aggdiff.Potential("gaussian_bump", bogus=1.0)


def test_rates_and_fractional():
    assert aggdiff.f_alpha(1.0, 1.0) == pytest.approx(math.exp(-2) * (math.e - 1))
    g = aggdiff.Grid(1, 10.0, 1024)
    f = np.exp(-0.5 * g.centers() ** 2) / math.sqrt(2 * math.pi)
    assert aggdiff.frac_seminorm(g, f, 0.5, 2.0) == pytest.approx(0.5, rel=1e-4)
    lap = aggdiff.frac_laplacian(g, f, 1.0)
    x = g.centers()
    assert np.max(np.abs(lap - (1 - x**2) * f)) < 1e-10


def test_preset_experiment_and_config_errors():
    assert "heat-baseline" in aggdiff.preset_names()
    cfg = aggdiff.preset_config("heat-baseline")
    cfg.update({"grid.N": 128, "solver.tau_end": 2, "rates.e1_window": "0.5,2",
                "rates.l1_window": "0.5,2", "rates.n2_window": "0.5,2"})
    res = aggdiff.run_experiment(cfg)
    assert res["ok"]
    assert res["fits"]["E1"]["slope"] < -1.85
    assert all(i["pass"] for i in res["invariants"])
    cfg["potential.kind"] = "martian"
    with pytest.raises(aggdiff.ConfigError):
        aggdiff.run_experiment(cfg)


def test_check_suite():
    lines = aggdiff.run_check_suite("quadrature")
    assert lines and all(ok for _, ok, _ in lines)
    with pytest.raises(ValueError):
        aggdiff.run_check_suite("nosuchsuite")
