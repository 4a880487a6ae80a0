from __future__ import annotations

from itertools import product

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from walshbiest.dyadic import DyadicInterval
from walshbiest.phaseplane import (
    DisjointnessViolation,
    Quartile,
    Tile,
    biest_restrict,
    biest_trick_counterexamples,
    canonical,
    check_lacunarity,
    collection_from_json,
    collection_to_json,
    maximal_tree,
    packet_overlap,
    quartiles_in,
    random_quartiles,
    subtile,
    tile_le,
    tile_lt,
    tiles_in,
    tiles_intersect,
)


def T(t0, t1, f0, f1) -> Tile:
    return Tile.from_intervals(DyadicInterval.from_endpoints(t0, t1), DyadicInterval.from_endpoints(f0, f1))


def test_subtile_examples():
    P = Quartile(0, 0, 0)
    assert subtile(P, 1) == T(0, 1, 0, 1)
    assert subtile(P, 3) == T(0, 1, 2, 3)
    assert subtile(Quartile(1, 0, 1), 2) == T(0, 0.5, 10, 12)
    with pytest.raises(ValueError):
        subtile(P, 4)


def test_order_examples():
    assert tile_lt(T(0, 0.5, 0, 2), T(0, 1, 0, 1))
    same = T(0, 1, 0, 1)
    assert not tile_lt(same, same) and tile_le(same, same)
    assert tile_lt(T(0.5, 1, 0, 2), T(0, 1, 1, 2))


def test_negative_frequency_rejected():
    with pytest.raises(ValueError):
        Tile(0, 0, -1)


@pytest.fixture(scope="module")
def small_tiles():
    return list(tiles_in(DyadicInterval(2, 0), (-2, 2), 16))


def test_tile_order_is_strict_partial_order(small_tiles):
    tiles = small_tiles
    lt = {(a, b) for a, b in product(tiles, tiles) if tile_lt(a, b)}
    for a in tiles:
        assert (a, a) not in lt
    for a, b in lt:
        assert (b, a) not in lt
    succ: dict = {}
    for a, b in lt:
        succ.setdefault(a, set()).add(b)
    for a, bs in succ.items():
        for b in bs:
            assert succ.get(b, set()) <= bs


def test_intersect_iff_comparable(small_tiles):
    for a, b in product(small_tiles, repeat=2):
        if a == b:
            continue
        comparable = tile_le(a, b) or tile_le(b, a)
        assert tiles_intersect(a, b) == comparable == packet_overlap(a, b)


def test_lacunarity_example():
    Pa, Pb = Quartile(1, 0, 0), Quartile(0, 0, 0)
    assert tile_le(subtile(Pa, 1), subtile(Pb, 1))
    assert not tiles_intersect(subtile(Pa, 2), subtile(Pb, 2))
    assert check_lacunarity(Pa, Pb, 1, 2)
    assert check_lacunarity(Pa, Pa, 1, 2)
    with pytest.raises(ValueError):
        check_lacunarity(Pa, Pb, 2, 2)


@given(st.integers(0, 2 ** 16), st.sampled_from([1, 2, 3]))
def test_tree_members_are_lacunary_in_other_slots(seed, i):
    rng = np.random.default_rng(seed)
    coll = random_quartiles(rng, DyadicInterval(2, 0), 4, 60)
    top = coll[int(rng.integers(len(coll)))]
    tree = maximal_tree(top, i, coll)
    assert tree.is_valid()
    for j in {1, 2, 3} - {i}:
        subs = [subtile(P, j) for P in tree.members]
        for a, b in product(subs, repeat=2):
            assert a == b or not tiles_intersect(a, b)


def test_biest_restrict_examples():
    Q = Quartile(0, 0, 0)
    assert biest_restrict([Q], []) == set()
    # first sub-tiles sit at residue 0 mod 4 and third ones at 2, so P_1 = Q_3
    # never happens at one scale; two scales finer P_1 < Q_3 does
    P = Quartile(2, 1, 0)
    assert tile_lt(subtile(P, 1), subtile(Q, 3))
    assert biest_restrict([P, Quartile(2, 1, 1)], [Q]) == {P}
    clash = next(R for R in quartiles_in(DyadicInterval(2, 0), (-2, 2), 64)
                 if R != Q and tiles_intersect(subtile(R, 3), subtile(Q, 3)))
    with pytest.raises(DisjointnessViolation):
        biest_restrict([P], [Q, clash])


@given(st.integers(0, 2 ** 16))
def test_biest_trick_randomised(seed):
    from walshbiest.phaseplane import random_disjoint_family
    rng = np.random.default_rng(seed)
    W = DyadicInterval(2, 0)
    P = random_quartiles(rng, W, 5, 30, (-3, 3))
    D = random_disjoint_family(rng, random_quartiles(rng, W, 5, 30, (-3, 3)), 3, 30)
    assert biest_trick_counterexamples(P, D) == []


def test_collection_json_round_trip():
    rng = np.random.default_rng(3)
    coll = random_quartiles(rng, DyadicInterval(3, 0), 3, 25)
    assert collection_from_json(collection_to_json(coll)) == canonical(coll)


def test_random_quartiles_fit_window():
    rng = np.random.default_rng(0)
    W = DyadicInterval(2, 0)
    for P in random_quartiles(rng, W, 3, 40):
        assert W.contains(P.time)
        assert subtile(P, 3).freq.end <= 2 ** 3
