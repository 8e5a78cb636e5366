import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coopnet.errors import BigMViolation, FrequencyOverflow, RebuildExisting, UnknownEdge
from coopnet.network import (ALT, CROSSING, RAIL, TRANSFER, DesignAction, EdgeRecord,
                             MobilityGraph, NetworkState, NodeRecord, apply_action, region_class)


def test_sioux_falls_counts(sioux):
    layers = [n.layer for n in sioux.nodes]
    assert layers.count(ALT) == 24 and layers.count(RAIL) == 24
    assert len(sioux.alt_edges) == 76
    assert len(sioux.rail_edges) == 76
    assert len(sioux.transfer_edges) == 48


def test_sioux_falls_partition(sioux):
    for n in sioux.node_ids:
        assert sioux.region[n] == (1 if n <= 11 else 2)
    assert sioux.validate() == []


def test_region_classes_match_endpoints(sioux):
    for e in list(sioux.alt_edges.values()) + list(sioux.rail_edges.values()):
        assert e.region_class == region_class(sioux.region[e.tail], sioux.region[e.head])
    r1 = set(sioux.region_rail_ids(1))
    r2 = set(sioux.region_rail_ids(2))
    cross = set(sioux.crossing_rail_ids())
    assert not (r1 & r2) and not (r1 & cross) and not (r2 & cross)
    assert r1 | r2 | cross == set(sioux.rail_ids)
    assert all(sioux.rail_edges[e].region_class == CROSSING for e in cross)


def test_transfer_pairs(sioux):
    ids = {e.id for e in sioux.transfer_edges}
    for n in sioux.node_ids:
        assert {2 * n, 2 * n + 1} <= ids
    assert all(e.layer == TRANSFER and e.length == 0.0 for e in sioux.transfer_edges)


def test_travel_time_is_length_over_speed(sioux):
    p = sioux.params
    for e in sioux.alt_edges.values():
        assert e.label.travel_time == pytest.approx(e.length / p.alt_speed)
    for e in sioux.rail_edges.values():
        assert e.label.travel_time == pytest.approx(e.length / p.rail_speed)


def _empty(graph):
    return NetworkState.empty(graph)


def test_apply_build_with_frequency(sioux):
    s = apply_action(_empty(sioux), DesignAction(frozenset({1}), {1: 2}))
    k = sioux.rail_index[1]
    assert s.connectivity[k] and s.frequency[k] == 2
    assert s.capacity(500)[k] == 1000
    assert s.year == 1


def test_empty_action_only_advances_year(sioux):
    s0 = _empty(sioux)
    s1 = apply_action(s0, DesignAction())
    assert s1.same_layout(s0) and s1.year == s0.year + 1


def test_frequency_without_connection_is_rejected(sioux):
    with pytest.raises(BigMViolation):
        apply_action(_empty(sioux), DesignAction(frozenset(), {1: 1}))
    with pytest.raises(BigMViolation):
        NetworkState(0, sioux.rail_ids, np.zeros(76, bool), np.eye(1, 76, 0, dtype=int)[0])


def test_apply_errors(sioux):
    s = apply_action(_empty(sioux), DesignAction(frozenset({1}), {1: 15}))
    with pytest.raises(RebuildExisting):
        apply_action(s, DesignAction(frozenset({1})))
    with pytest.raises(FrequencyOverflow):
        apply_action(s, DesignAction(frozenset(), {1: 1}))
    with pytest.raises(UnknownEdge):
        apply_action(s, DesignAction(frozenset({999})))


def test_validate_reports_violations():
    nodes = [NodeRecord(1, 1), NodeRecord(2, 3)]
    edges = [EdgeRecord(1, 1, 2, 1.0)]
    problems = MobilityGraph(nodes, edges).validate()
    assert any("region 3" in p for p in problems)
    assert any("strongly connected" in p for p in problems)


def test_state_arrays_are_read_only(sioux):
    s = _empty(sioux)
    with pytest.raises(ValueError):
        s.frequency[0] = 3


actions = st.lists(st.tuples(st.sampled_from(range(1, 77)), st.integers(0, 3)), max_size=8)


def _action(pairs, connected):
    builds = frozenset(e for e, _ in pairs if e not in connected)
    ups = {}
    for e, s in pairs:
        ups[e] = ups.get(e, 0) + s
    return DesignAction(builds, {e: min(v, 3) for e, v in ups.items()})


@settings(max_examples=60, deadline=None)
@given(actions, actions)
def test_sequential_equals_summed_application(sioux, a_pairs, b_pairs):
    a = _action(a_pairs, set())
    b_builds = frozenset(e for e, _ in b_pairs) - a.builds
    b = DesignAction(b_builds, {e: v for e, v in _action(b_pairs, set()).upgrades.items()
                                if e in a.builds or e in b_builds})
    s0 = _empty(sioux)
    seq = apply_action(apply_action(s0, a, advance_year=False), b, advance_year=False)
    once = apply_action(s0, a + b, advance_year=False)
    assert seq == once


@settings(max_examples=40, deadline=None)
@given(actions)
def test_states_are_monotone(sioux, pairs):
    s0 = _empty(sioux)
    s1 = apply_action(s0, _action(pairs, set()))
    assert s1.contains(s0)
    assert np.all(s1.frequency <= 15)
    assert np.all((s1.frequency == 0) | s1.connectivity)


def test_design_action_normalizes():
    a = DesignAction(frozenset({3}), {3: 0, 4: 2})
    assert a.upgrades == {4: 2}
    assert a == DesignAction(frozenset({3}), {4: 2})
    assert hash(a) == hash(DesignAction(frozenset({3}), {4: 2}))
    assert (a + DesignAction(frozenset(), {4: 1})).upgrades == {4: 3}
