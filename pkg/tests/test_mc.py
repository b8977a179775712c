import numpy as np
import pytest

from acstrace import mc
from acstrace.design import POISSON, SRS, InitialDesign
from acstrace.errors import ConfigurationError
from acstrace.mc import PopulationSpec, Scenario, expected_sample_size_analytic, relative_efficiency, run_scenario
from acstrace.popgraph import build_equal_network_population


def cross(k, m=1000, kind=SRS, eta=1.0, R=4000, seed=3, **pop):
    return Scenario(f"k{k}", PopulationSpec(k=k, **pop), InitialDesign(kind, m, eta), replicates=R, seed=seed)


def test_expected_size_k2():
    pop = build_equal_network_population(100_000, 1000, 2, 0)
    assert expected_sample_size_analytic(pop, InitialDesign(SRS, 1000)) == pytest.approx(1009.9, abs=0.1)


def test_expected_size_poisson_closed_form():
    pop = build_equal_network_population(100_000, 1000, 100, 0)
    p_non = 1000 / 101000
    closed = 99000 * p_non + 1000 * (1 - (1 - 2 * p_non) ** 100)
    got = expected_sample_size_analytic(pop, InitialDesign(POISSON, 1000, 2))
    assert got == pytest.approx(closed, rel=1e-9)
    assert got == pytest.approx(1844.9, abs=0.1)


def test_expected_size_census():
    pop = build_equal_network_population(200, 20, 4, 0, edge_nodes_per_network=2)
    assert expected_sample_size_analytic(pop, InitialDesign(SRS, 200)) == pytest.approx(200)


def test_expected_size_with_edge_nodes_matches_mc():
    sc = cross(10, m=200, R=20000, N=5000, theta=100, edge_nodes_per_network=3)
    s = run_scenario(sc)
    assert s.mean_n == pytest.approx(s.mean_n_analytic, rel=0.005)


def test_table1_cell_k10():
    s = run_scenario(cross(10, R=20000))
    assert s.mean_n == pytest.approx(1085, rel=0.01)
    assert s.cv_mc == pytest.approx(0.31, abs=0.01)
    assert s.re_analytic == pytest.approx(0.96, abs=0.01)
    assert s.baseline.cv_analytic == pytest.approx(0.31, abs=0.005)


def test_household_cell_k100():
    s = run_scenario(cross(100, R=20000, mode="household"))
    assert s.mean_n == pytest.approx(1628, rel=0.01)
    assert s.cv_mc == pytest.approx(0.24, abs=0.02)
    assert s.re_mc == pytest.approx(0.45, abs=0.05)


def test_singleton_networks_re_one():
    s = run_scenario(cross(1, R=500, theta=1000))
    assert s.re_analytic == pytest.approx(1.0, abs=1e-9)


def test_relative_efficiency():
    sc = cross(100, m=5000)
    base = Scenario("base", sc.population, sc.design, tracing=mc.NO_TRACING, seed=sc.seed)
    re, se = relative_efficiency(sc, base)
    assert re == pytest.approx(0.03, abs=0.01) and se == 0
    assert relative_efficiency(sc, sc) == (1.0, 0.0)
    with pytest.raises(ConfigurationError):
        relative_efficiency(sc, cross(10, m=5000))


def test_relative_efficiency_iacs_s1():
    pop = PopulationSpec(setting="S1")
    iacs = Scenario("i", pop, InitialDesign(SRS, 1000), temporal="iACS")
    panel = Scenario("p", pop, InitialDesign(SRS, 1000), temporal="panel")
    re, _ = relative_efficiency(iacs, panel)
    assert re == pytest.approx(0.84, abs=0.03)


def test_mc_matches_analytic_variance():
    # CV at R = 1e5 within three Monte Carlo standard errors of the sample SD
    sc = cross(10, R=100_000, seed=9)
    s = run_scenario(sc)
    x = mc.simulate(sc)[:, 0]
    dev = x - x.mean()
    kurt = np.mean(dev**4) / np.mean(dev**2) ** 2
    se_cv = s.cv_mc * np.sqrt((kurt - 1) / (4 * len(x)))
    assert abs(s.cv_mc - s.cv_analytic) <= 3 * se_cv


def test_determinism_independent_of_workers():
    mc._CACHE.clear()
    a = mc.simulate(cross(10, R=5000, seed=11), workers=1)
    mc._CACHE.clear()
    b = mc.simulate(cross(10, R=5000, seed=11), workers=2)
    assert np.array_equal(a, b)
    mc._CACHE.clear()


def test_dynamic_determinism_and_unbiasedness():
    sc = Scenario("d", PopulationSpec(setting="M3"), InitialDesign(SRS, 1000), temporal="iACS", replicates=300, seed=5)
    mc._CACHE.clear()
    a = mc.simulate(sc, workers=1)
    mc._CACHE.clear()
    b = mc.simulate(sc, workers=2)
    assert np.array_equal(a, b)
    s = run_scenario(sc)
    assert abs(s.mean_estimate) < 4 * s.se_analytic / np.sqrt(sc.replicates)


def test_freeze_population():
    sc = Scenario("f", PopulationSpec(setting="S3"), InitialDesign(SRS, 1000), temporal="pACS", replicates=50, freeze_population=True)
    s = run_scenario(sc)
    assert s.R == 50


def test_invalid_scenarios():
    with pytest.raises(ConfigurationError):
        cross(10, m=200_000).validate()
    with pytest.raises(ConfigurationError):
        Scenario("x", PopulationSpec(k=10), temporal="pACS").validate()
    with pytest.raises(ConfigurationError):
        Scenario("x", PopulationSpec(setting="L1", theta=500)).validate()


def test_summary_rows_include_baseline():
    s = run_scenario(cross(100, R=1000))
    rows = s.rows()
    assert [r["scenario_id"] for r in rows] == ["k100", "k100/baseline"]
    assert set(rows[0]) == set(mc.McSummary.CSV_COLUMNS)
