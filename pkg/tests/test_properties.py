import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from acstrace import estimate as est
from acstrace.design import ACS, DACS, POISSON, QASBS, SRS, InitialDesign, TracingDesign, trace
from acstrace.inclusion import InclusionTable, network_inclusion
from acstrace.oracle import random_population, random_two_wave
from acstrace.popgraph import build_equal_network_population

seeds = st.integers(0, 2**32 - 1)
sizes = st.integers(6, 30)


def toy(seed, N):
    return random_population(np.random.default_rng(seed), N)


def toy_s0(seed, N):
    rng = np.random.default_rng(seed + 1)
    return rng.choice(N, size=int(rng.integers(0, N // 2 + 1)), replace=False).tolist()


@given(seeds, sizes)
def test_acs_idempotent_and_exhaustive(seed, N):
    pop = toy(seed, N)
    s0 = toy_s0(seed, N)
    sample = trace(pop, s0)
    cases = [i for i in sample.final if pop.y[i] > 0]
    again = trace(pop, cases)
    assert set(again.final) <= set(sample.final)
    assert {i for i in again.final if pop.y[i] > 0} == set(cases)
    for i in cases:
        assert set(pop.networks[pop.network_of[i]].tolist()) <= set(sample.final)
    assert trace(pop, s0) == sample


@given(seeds, sizes, st.integers(0, 6))
def test_qasbs_monotone(seed, N, q):
    pop = toy(seed, N)
    s0 = toy_s0(seed, N)
    a = set(trace(pop, s0, TracingDesign(QASBS, q=q)).final)
    b = set(trace(pop, s0, TracingDesign(QASBS, q=q + 1)).final)
    full = set(trace(pop, s0).final)
    assert a <= b <= full


@given(seeds, sizes)
def test_dacs_extremes(seed, N):
    pop = toy(seed, N)
    s0 = toy_s0(seed, N)
    rng = np.random.default_rng(seed)
    strengths = {tuple(e): float(rng.uniform(1, 2)) for e in pop.edges.tolist()}
    low = TracingDesign(DACS, psi0=0.0, edge_strengths=strengths)
    high = TracingDesign(DACS, psi0=2.0, edge_strengths=strengths)
    assert trace(pop, s0, low).final == trace(pop, s0, TracingDesign(ACS)).final
    assert set(trace(pop, s0, high).final) == set(s0)


@given(seeds, sizes, st.integers(1, 5))
def test_inclusion_bounds(seed, N, m):
    pop = toy(seed, N)
    incl = InclusionTable(InitialDesign(SRS, min(m, N)), pop)
    first = np.asarray(incl.network_first)
    second = np.asarray(incl.network_second)
    assert np.all(second <= np.minimum.outer(first, first) + 1e-12)
    assert np.all(second >= np.maximum(0, np.add.outer(first, first) - 1) - 1e-12)
    unit = np.asarray(incl.unit_initial)
    for idx, members in enumerate(pop.networks):
        if len(members) >= 2 and m < N:
            assert first[idx] > unit[members[0]]


@given(st.sampled_from([1, 2, 5, 10, 50, 100]), st.integers(100, 10_000), seeds)
def test_poisson_approximates_srs(k, m, seed):
    pop = build_equal_network_population(100_000, 1000, k, seed % 1000)
    srs = network_inclusion(InitialDesign(SRS, m), pop, 0)
    poi = network_inclusion(InitialDesign(POISSON, m, 1), pop, 0)
    assert abs(srs - poi) / srs <= 0.02


@given(seeds, st.integers(6, 40), st.integers(1, 6))
def test_panel_bound(seed, N, n):
    pop2 = random_two_wave(np.random.default_rng(seed), N)
    n = min(n, N - 1)
    v = est.panel_variance(pop2, InitialDesign(SRS, n))
    assert v <= est.panel_variance_approx(pop2, n) * (1 + 1e-6)
    assert est.panel_variance_approx(pop2, n) <= est.independent_variance(pop2, n) + 1e-15
