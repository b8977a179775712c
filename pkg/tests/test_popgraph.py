import numpy as np
import pytest

from acstrace.errors import ConfigurationError
from acstrace.popgraph import (
    HOUSEHOLD,
    TABLE3_SETTINGS,
    DynamicsSetting,
    PopulationGraph,
    build_equal_network_population,
    build_household_population,
    case_components,
    evolve_population,
    from_json,
    to_json,
)


def test_equal_networks_large():
    pop = build_equal_network_population(100_000, 1000, 100, 1)
    assert pop.M == 10
    assert set(pop.network_sizes.tolist()) == {100}
    assert pop.theta == 1000
    pop.check()


def test_single_and_singleton_networks():
    one = build_equal_network_population(6, 3, 3, 0)
    assert one.M == 1 and len(one.networks[0]) == 3
    singles = build_equal_network_population(6, 3, 1, 0)
    assert singles.M == 3 and all(len(m) == 1 for m in singles.networks)


@pytest.mark.parametrize("N,theta,k", [(100, 10, 3), (5, 6, 2), (10, 4, 0)])
def test_equal_network_errors(N, theta, k):
    with pytest.raises(ConfigurationError):
        build_equal_network_population(N, theta, k, 0)


@pytest.mark.parametrize("topology", ["star", "path", "complete"])
def test_topologies_give_same_partition(topology):
    a = build_equal_network_population(200, 20, 5, 7, topology=topology)
    b = build_equal_network_population(200, 20, 5, 7)
    assert [m.tolist() for m in a.networks] == [m.tolist() for m in b.networks]
    assert sorted(m.tolist() for m in case_components(a.y, a.edges)) == sorted(m.tolist() for m in a.networks)


def test_edge_nodes_attach_to_hubs():
    pop = build_equal_network_population(500, 20, 5, 3, edge_nodes_per_network=2)
    assert len(pop.edge_units) == 8
    for e in pop.edge_units.tolist():
        assert len(pop.adjacent_networks(e)) == 1


def test_household_expected_total():
    dist = (0.38, 0.30, 0.12, 0.20)
    totals = [build_household_population(100_000, 1000, 100, dist, s).theta for s in range(100)]
    assert np.mean(totals) == pytest.approx(2140, rel=0.01)


def test_household_degenerate_sizes_match_person_mode():
    hh = build_household_population(1000, 20, 5, (1.0, 0, 0, 0), 11)
    person = build_equal_network_population(1000, 20, 5, 11)
    assert hh.mode == HOUSEHOLD
    assert np.array_equal(hh.y, person.y)
    assert [m.tolist() for m in hh.networks] == [m.tolist() for m in person.networks]


def test_household_forced_sizes():
    pop = build_household_population(10, 2, 2, (0, 1, 0, 0), 0)
    assert pop.M == 1
    assert pop.network(0).y_total == 4


def test_household_invalid_distribution():
    with pytest.raises(ConfigurationError):
        build_household_population(10, 2, 2, (0.5, 0.4), 0)


def test_population_invariants_rejected():
    with pytest.raises(ConfigurationError):
        PopulationGraph(y=[0, 1, 1], size=None, edges=[], networks=([1],))  # case 2 not in a network
    with pytest.raises(ConfigurationError):
        PopulationGraph(y=[0, 1, 1], size=None, edges=[(0, 0)], networks=([1], [2]))
    bad = PopulationGraph(y=[0, 1, 1], size=None, edges=[(1, 2)], networks=([1], [2]))
    with pytest.raises(ConfigurationError):
        bad.check()


def test_json_round_trip_is_byte_identical():
    pop = build_household_population(300, 12, 3, (0.38, 0.30, 0.12, 0.20), 5, edge_nodes_per_network=1)
    text = to_json(pop)
    again = from_json(text)
    assert to_json(again) == text
    assert to_json(build_household_population(300, 12, 3, (0.38, 0.30, 0.12, 0.20), 5, edge_nodes_per_network=1)) == text


def test_evolve_l1_counts():
    base = build_equal_network_population(100_000, 1000, 100, 3)
    pop2 = evolve_population(base, TABLE3_SETTINGS["L1"], 4)
    assert sorted(pop2.evolved.network_sizes.tolist()) == [80] * 8 + [180] * 2
    assert int(pop2.change.sum()) == 0
    assert int((pop2.change == 1).sum()) == 160
    assert int((pop2.change == -1).sum()) == 160
    pop2.evolved.check()


def test_evolve_m3_counts():
    base = build_equal_network_population(100_000, 1000, 10, 3)
    pop2 = evolve_population(base, TABLE3_SETTINGS["M3"], 4)
    assert sorted(pop2.evolved.network_sizes.tolist()) == [9] * 100 + [10] * 10
    assert pop2.lambda_plus == pytest.approx(100 / 1e5)
    assert pop2.lambda_minus == pytest.approx(100 / 1e5)


def test_evolve_no_change():
    base = build_equal_network_population(1000, 20, 5, 0)
    setting = DynamicsSetting("static", (4, 5), shrinking=(4, 5))
    pop2 = evolve_population(base, setting, 1)
    assert not pop2.change.any()


@pytest.mark.parametrize("label", sorted(TABLE3_SETTINGS))
@pytest.mark.parametrize("rule", ["uniform", "sequential"])
def test_evolve_all_settings_keep_total(label, rule):
    s = TABLE3_SETTINGS[label]
    for seed in range(100 if rule == "uniform" else 10):
        base = build_equal_network_population(100_000, 1000, s.t1[1], seed)
        pop2 = evolve_population(base, s, seed + 1000, shrink_rule=rule)
        assert pop2.evolved.theta == 1000
        assert pop2.N == 100_000
        plus = s.growing[0] * (s.growing[1] - s.t1[1]) + s.emerging[0] * s.emerging[1]
        assert int((pop2.change == 1).sum()) == plus
        assert int((pop2.change == -1).sum()) == plus
        if s.random_shrink:
            assert pop2.evolved.network_sizes.max() <= max(s.growing[1], s.emerging[1], s.t1[1])


def test_evolve_rejects_mismatched_base():
    base = build_equal_network_population(100_000, 1000, 10, 0)
    with pytest.raises(ConfigurationError):
        evolve_population(base, TABLE3_SETTINGS["L1"], 0)
