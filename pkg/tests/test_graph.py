import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kmsgraph.graph import (GraphValidationError, RelativeSetNotRegular, UnknownVertex, WeightNotAboveOne,
                            build, dump, load, random_graph, reaches, regular_vertices, validate)
from kmsgraph.families import Hub, LoopRay

from conftest import o_n


def _kinds(exc):
    return {type(p) for p in exc.problems}


def test_two_loops_in_relative_set_is_valid():
    g = build(["v"], [("e", "v", "v"), ("f", "v", "v")], ["v"])
    assert g.relative_set == {"v"}
    assert g.weights["e"] == math.e


def test_sink_in_relative_set_rejected():
    with pytest.raises(GraphValidationError) as info:
        validate({"vertices": ["v"], "edges": [], "relative_set": ["v"]})
    assert _kinds(info.value) == {RelativeSetNotRegular}


def test_weight_one_rejected():
    with pytest.raises(GraphValidationError) as info:
        build(["v"], [("e", "v", "v", 1.0)])
    assert _kinds(info.value) == {WeightNotAboveOne}


def test_every_problem_is_listed():
    raw = {"vertices": ["a"], "edges": [{"id": "e", "src": "a", "dst": "zz", "weight": 0.5}],
           "relative_set": ["a", "q"]}
    with pytest.raises(GraphValidationError) as info:
        validate(raw)
    assert _kinds(info.value) == {UnknownVertex, WeightNotAboveOne}
    assert len(info.value.problems) == 3  # bad endpoint, bad weight, unknown relative member


def test_regular_vertices():
    assert regular_vertices(o_n(3)) == {"v"}
    assert regular_vertices(build(["a", "b"], [])) == set()
    # the truncation keeps v0 regular; the infinite hub does not (see families)
    g = Hub().truncate(6)
    assert regular_vertices(g) == set(g.vertices)
    assert "v0" not in Hub().regular_vertices(6)


def test_reaches_examples(two_cycle):
    assert reaches(two_cycle, "v", "w") and reaches(two_cycle, "w", "v")
    lr = LoopRay().truncate(4)
    assert reaches(lr, "v0", "v1") and not reaches(lr, "v1", "v0")
    iso = build(["a", "b"], [])
    assert not reaches(iso, "a", "b") and reaches(iso, "a", "a")


def test_reaches_without_closure_matches_bfs(monkeypatch):
    g = LoopRay().truncate(5)
    expect = {(a, b): reaches(g, a, b) for a in g.vertices for b in g.vertices}
    import kmsgraph.graph as G
    monkeypatch.setattr(G, "CLOSURE_LIMIT", 0)
    fresh = LoopRay().truncate(5)
    assert {(a, b): reaches(fresh, a, b) for a in g.vertices for b in g.vertices} == expect


graphs = st.integers(0, 2 ** 32 - 1).map(
    lambda s: random_graph(np.random.default_rng(s), max_vertices=6, relative_prob=0.5))


@settings(max_examples=60, deadline=None)
@given(g=graphs)
def test_reaches_is_a_preorder(g):
    V = g.vertices
    for a in V:
        assert reaches(g, a, a)
    for a, b, c in itertools.product(V, repeat=3):
        if reaches(g, a, b) and reaches(g, b, c):
            assert reaches(g, a, c)


@settings(max_examples=60, deadline=None)
@given(g=graphs)
def test_serialize_round_trip_and_relative_inclusion(g, tmp_path_factory):
    assert g.relative_set <= regular_vertices(g)
    again = validate(json.loads(json.dumps(g.to_dict())))
    assert again.to_dict() == g.to_dict()
    path = tmp_path_factory.mktemp("g") / "g.json"
    dump(again, path)
    assert load(path).to_dict() == g.to_dict()


def test_path_weight_extension():
    g = build(["a", "b"], [("x", "a", "b", 2.0), ("y", "b", "a", 3.0)])
    assert g.path_weight([]) == 1.0
    assert g.path_weight(["x", "y", "x"]) == pytest.approx(12.0)
    assert g.path_factor(["x", "y"], 1.0) == pytest.approx(1 / 6)
    assert g.is_path(["x", "y"]) and not g.is_path(["x", "x"])
