import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fragkit.intervals import (Interval, MassPartition, OpenSet, chi, distance, embed, is_nested,
                               ranked_lengths, union)


@st.composite
def open_sets(draw, max_components=6):
    """Sorted breakpoints paired into components; a flag lets a component touch the previous one."""
    pts = sorted(set(draw(st.lists(st.floats(0, 1, allow_nan=False), max_size=2 * max_components))))
    pairs = []
    i = 0
    while i + 1 < len(pts):
        pairs.append((pts[i], pts[i + 1]))
        i += 1 if draw(st.booleans()) else 2
    return OpenSet.from_pairs([(a, b) for a, b in pairs if b - a > 1e-9])


@st.composite
def intervals(draw):
    a = draw(st.floats(0, 0.98))
    b = draw(st.floats(a + 0.01, 1.0))
    return Interval(a, b)


def grid_distance(U, V, n=200001):
    x = np.linspace(0, 1, n)
    return np.max(np.abs(chi(U, x) - chi(V, x)))


def test_ranked_lengths_examples():
    r = ranked_lengths(OpenSet.unit())
    assert r.masses.tolist() == [1.0] and r.dust == 0.0
    r = ranked_lengths(OpenSet.from_pairs([(0, 0.3), (0.5, 1)]))
    assert r.masses.tolist() == [0.5, 0.3]
    assert r.dust == pytest.approx(0.2, abs=1e-15)
    r = ranked_lengths(OpenSet.empty())
    assert len(r) == 0 and r.dust == 1.0


def test_distance_examples():
    U = OpenSet.from_pairs([(0, 0.3), (0.5, 1)])
    assert distance(U, U) == 0.0
    assert distance(OpenSet.unit(), OpenSet.empty()) == 0.5
    assert distance(OpenSet.from_pairs([(0, 0.5)]), OpenSet.unit()) == 0.5
    # dense-grid oracle
    assert grid_distance(OpenSet.unit(), OpenSet.empty()) == pytest.approx(0.5, abs=1e-5)


def test_embed_examples():
    V = OpenSet.from_pairs([(0, 0.5), (0.5, 1)])
    assert embed(Interval(0, 1), V) == V
    assert np.allclose(embed(Interval(0.2, 0.6), OpenSet.from_pairs([(0, 0.5)])).pairs(), [(0.2, 0.4)])
    assert np.allclose(embed(Interval(0.2, 0.6), V).pairs(), [(0.2, 0.4), (0.4, 0.6)])


def test_is_nested_examples():
    A = OpenSet.from_pairs([(0, 0.5)])
    assert is_nested(A, A)
    assert is_nested(OpenSet.from_pairs([(0.2, 0.4)]), A)
    assert not is_nested(OpenSet.from_pairs([(0.4, 0.6)]), A)


def test_touching_components_stay_separate():
    U = OpenSet.from_pairs([(0, 0.5), (0.5, 1)])
    assert len(U) == 2
    assert U.component_at(0.5) == -1
    assert distance(U, OpenSet.unit()) == 0.5


def test_invalid_sets_rejected():
    with pytest.raises(ValueError):
        OpenSet([0.2], [0.1])
    with pytest.raises(ValueError):
        OpenSet([0.0, 0.3], [0.5, 0.6])
    with pytest.raises(ValueError):
        OpenSet([-0.1], [0.5])
    with pytest.raises(ValueError):
        Interval(0.5, 0.5)
    with pytest.raises(ValueError):
        MassPartition([0.3, 0.5])
    with pytest.raises(ValueError):
        MassPartition([0.7, 0.5])


def test_immutable():
    U = OpenSet.unit()
    with pytest.raises(AttributeError):
        U.lefts = np.array([0.1])
    with pytest.raises(ValueError):
        U.lefts[0] = 0.5


def test_json_round_trip():
    U = OpenSet.from_pairs([(0.1, 0.2), (0.2, 0.7)])
    assert json.loads(U.to_json()) == [[0.1, 0.2], [0.2, 0.7]]
    assert OpenSet.from_json(U.to_json()) == U
    s = MassPartition([0.5, 0.3], 0.2)
    assert json.loads(s.to_json()) == {"masses": [0.5, 0.3], "dust": 0.2}
    assert MassPartition.from_json(s.to_json()) == s


@settings(max_examples=200, deadline=None)
@given(open_sets(), open_sets(), open_sets())
def test_distance_pseudometric(U, V, W):
    assert distance(U, V) == distance(V, U)
    assert distance(U, W) <= distance(U, V) + distance(V, W) + 1e-12


@settings(max_examples=200, deadline=None)
@given(open_sets(), open_sets())
def test_distance_zero_iff_identical(U, V):
    assert (distance(U, V) == 0.0) == (U == V)


@settings(max_examples=100, deadline=None)
@given(open_sets(), open_sets())
def test_distance_matches_grid(U, V):
    assert distance(U, V) >= grid_distance(U, V, 20001) - 1e-12


@settings(max_examples=200, deadline=None)
@given(intervals(), open_sets())
def test_embed_scales_ranked_lengths(I, V):
    E = embed(I, V)
    assert is_nested(E, OpenSet([I.left], [I.right]))
    a = ranked_lengths(E).masses
    b = I.length * ranked_lengths(V).masses
    assert a.shape == b.shape
    assert np.allclose(a, b, atol=1e-12, rtol=0)


@settings(max_examples=200, deadline=None)
@given(open_sets(), open_sets(), open_sets())
def test_nested_partial_order(U, V, W):
    assert is_nested(U, U)
    if is_nested(U, V) and is_nested(V, U):
        assert U == V
    if is_nested(U, V) and is_nested(V, W):
        assert is_nested(U, W)


def test_nested_chain_of_embeddings():
    V = embed(Interval(0.1, 0.9), OpenSet.from_pairs([(0, 0.3), (0.4, 1)]))
    W = embed(V[1], OpenSet.from_pairs([(0.2, 0.5)]))
    assert is_nested(W, V) and is_nested(V, OpenSet.unit()) and is_nested(W, OpenSet.unit())
    assert not is_nested(V, W)


def test_union_of_disjoint_parts():
    U = union([OpenSet.from_pairs([(0.5, 0.6)]), OpenSet.from_pairs([(0.0, 0.1), (0.2, 0.3)])])
    assert U.pairs() == [(0.0, 0.1), (0.2, 0.3), (0.5, 0.6)]
