import numpy as np
import pytest

from acstrace.design import (
    ACS,
    DACS,
    EDGE_UNIT,
    NETWORK_CASE,
    OTHER_INITIAL,
    POISSON,
    QASBS,
    SRS,
    InitialDesign,
    TraceSample,
    TracingDesign,
    classify,
    draw_initial,
    trace,
)
from acstrace.errors import ConfigurationError
from acstrace.popgraph import PopulationGraph, build_equal_network_population, network_edges


@pytest.fixture(scope="module")
def big_pop():
    return build_equal_network_population(100_000, 1000, 100, 0)


def test_srs_draw_size_and_case_rate(big_pop):
    design = InitialDesign(SRS, 1000)
    counts = []
    for seed in range(2000):
        s0 = draw_initial(design, big_pop, seed)
        assert len(s0) == 1000
        counts.append(int(big_pop.y[s0].sum()))
    assert np.mean(counts) == pytest.approx(10, rel=0.05)


def test_poisson_rates_and_expected_size(big_pop):
    design = InitialDesign(POISSON, 1000, 2)
    p_non, p_case = design.poisson_rates(big_pop)
    assert p_non == pytest.approx(1000 / 101000, abs=1e-9)
    assert p_case == pytest.approx(0.0198020, abs=1e-7)
    sizes = [len(draw_initial(design, big_pop, s)) for s in range(2000)]
    assert np.mean(sizes) == pytest.approx(1000, rel=0.01)


def test_poisson_eta_one_is_equal_probability(big_pop):
    p = InitialDesign(POISSON, 1000, 1).unit_probabilities(big_pop)
    assert np.allclose(p, 1000 / 100_000)


def test_m_above_n_rejected(six_pop):
    with pytest.raises(ConfigurationError):
        draw_initial(InitialDesign(SRS, 7), six_pop, 0)


def test_figure_one_tracing(fig_pop):
    sample = trace(fig_pop, [1])
    assert set(sample.final) == {0, 1, 2, 3, 5}
    tags = classify(sample, fig_pop)
    assert sum(t == NETWORK_CASE for t in tags.values()) == 2
    assert sum(t == EDGE_UNIT for t in tags.values()) == 3
    assert sample.waves[-1] == ()


def test_figure_one_both_networks(fig_pop):
    tags = classify(trace(fig_pop, [1, 6]), fig_pop)
    assert sum(t == NETWORK_CASE for t in tags.values()) == 3
    assert sum(t == EDGE_UNIT for t in tags.values()) == 4
    assert {i for i, t in tags.items() if t == EDGE_UNIT} == {0, 3, 5, 7}


def test_noncase_seed_gives_no_waves(fig_pop):
    sample = trace(fig_pop, [4, 8])
    assert sample.final == (4, 8)
    assert all(len(w) == 0 for w in sample.waves)
    assert set(sample.tags.values()) == {OTHER_INITIAL}


def test_full_network_all_cases():
    pop = build_equal_network_population(30, 5, 5, 2)
    sample = trace(pop, pop.networks[0])
    assert set(sample.tags.values()) == {NETWORK_CASE}


def test_qasbs_star_one_wave():
    members = list(range(6))
    y = np.zeros(10, dtype=int)
    y[members] = 1
    pop = PopulationGraph.from_edges(y, network_edges(members, "star"))
    sample = trace(pop, [3], TracingDesign(QASBS, q=1))
    assert set(sample.final) == {0, 3}
    assert sample.fully_observed == ()
    full = trace(pop, [3], TracingDesign(QASBS, q=2))
    assert set(full.final) == set(members)


def test_empty_s0(fig_pop):
    sample = trace(fig_pop, [])
    assert sample.final == () and sample.n == 0


def test_dacs_threshold(fig_pop):
    strengths = {tuple(e): 1.0 for e in fig_pop.edges.tolist()}
    strengths[(1, 2)] = 0.1
    sample = trace(fig_pop, [1], TracingDesign(DACS, psi0=0.5, edge_strengths=strengths))
    assert 2 not in sample.final
    assert {0, 5} <= set(sample.final)


def test_dacs_requires_strengths():
    with pytest.raises(ConfigurationError):
        TracingDesign(DACS, psi0=0.5)


def test_trace_sample_json(fig_pop):
    sample = trace(fig_pop, [1, 4])
    again = TraceSample.from_json(sample.to_json())
    assert again.final == sample.final and again.waves == sample.waves and again.tags == sample.tags
