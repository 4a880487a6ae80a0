from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from helpers import rand_coeffs
from walshbiest.checks import audit_partition, random_tree
from walshbiest.decomp import (PreconditionViolated, abstract_bound_check, full_partition, replay,
                               select_trees, top_tiles_disjoint, tree_estimate, tree_estimate_holds,
                               trilinear_terms)
from walshbiest.dyadic import ONE, DyadicInterval, ExactScalar
from walshbiest.norms import energy, size
from walshbiest.operators import CoeffSeq
from walshbiest.phaseplane import Quartile, Tree, random_quartiles

W = DyadicInterval(2, 0)


def _seqs(rng, coll, exact=True):
    return tuple(rand_coeffs(rng, coll, j, exact) for j in (1, 2, 3))


def _instance(seed, n=40):
    rng = np.random.default_rng(seed)
    coll = random_quartiles(rng, W, 4, n)
    return coll, _seqs(rng, coll)


def test_tree_estimate_empty():
    T = Tree(frozenset(), Quartile(0, 0, 0), 1)
    lhs, rhs = tree_estimate(T, *(CoeffSeq({}, j) for j in (1, 2, 3)))
    assert lhs == 0 and rhs == 0
    assert tree_estimate_holds(T, *(CoeffSeq({}, j) for j in (1, 2, 3)))


def test_tree_estimate_singleton_is_sharp():
    P = Quartile(-1, 1, 3)
    seqs = [CoeffSeq({P: ExactScalar(v, 0, 0)}, j) for j, v in zip((1, 2, 3), (3, -2, 5))]
    lhs, rhs = tree_estimate(Tree(frozenset({P}), P, 2), *seqs)
    # 2^(k/2) |a1 a2 a3| on both sides
    assert math.isclose(float(lhs), 30 * 2 ** -0.5)
    assert math.isclose(rhs, 30 * 2 ** -0.5)
    assert tree_estimate_holds(Tree(frozenset({P}), P, 2), *seqs)


@given(st.integers(0, 10**6), st.booleans())
def test_tree_estimate_random_trees(seed, exact):
    rng = np.random.default_rng(seed)
    T = random_tree(rng, W, 30)
    assert T.is_valid()
    seqs = _seqs(rng, T.members, exact)
    assert tree_estimate_holds(T, *seqs)
    lhs, rhs = tree_estimate(T, *seqs)
    assert float(lhs) <= rhs * (1 + 1e-9)


def test_trilinear_terms_exact_matches_float():
    coll, seqs = _instance(3)
    fl = [CoeffSeq({P: float(a[P]) for P in coll}, a.slot, exact=False) for a in seqs]
    assert math.isclose(float(trilinear_terms(coll, *seqs)), trilinear_terms(coll, *fl),
                        rel_tol=1e-9, abs_tol=1e-9)


def test_select_trees_empty():
    f = select_trees([], CoeffSeq({}, 1), 1, 0, ONE)
    assert f.trees == [] and f.residual == set()


def test_select_trees_huge_threshold_selects_nothing():
    coll, seqs = _instance(5)
    # n far below the start level: nothing reaches 2^(-2n-3) E^2 |I_P|
    E2 = energy(coll, seqs[0]).square
    f = select_trees(coll, seqs[0], 1, -20, E2)
    assert f.trees == [] and f.residual == set(coll)


def test_select_trees_tiny_threshold_takes_everything():
    coll, seqs = _instance(6)
    coll = [P for P in coll if seqs[1][P]]
    E2 = energy(coll, seqs[1]).square
    f = select_trees(coll, seqs[1], 2, 30, E2, check=False)
    assert f.residual == set()
    assert sorted(f.members(), key=lambda p: p.key) == sorted(coll, key=lambda p: p.key)


def test_select_trees_precondition():
    coll, seqs = _instance(7)
    E2 = energy(coll, seqs[0]).square
    with pytest.raises(PreconditionViolated):
        select_trees(coll, seqs[0], 1, 30, E2)


def test_select_trees_bad_reading():
    with pytest.raises(ValueError):
        select_trees([], CoeffSeq({}, 1), 1, 0, ONE, reading="other")


@given(st.integers(0, 10**6), st.sampled_from([1, 2, 3]))
def test_select_trees_halves_size_and_replays(seed, j):
    coll, seqs = _instance(seed, 30)
    a = seqs[j - 1]
    E2 = energy(coll, a).square
    s2 = size(coll, a, j).square
    if not s2:
        return
    n = math.floor(0.5 * math.log2(float(E2) / float(s2)))
    while s2 > E2.scale2(-2 * n):
        n -= 1
    f = select_trees(coll, a, j, n, E2)
    if f.residual:
        assert size(f.residual, a, j).square <= E2.scale2(-2 * n - 2)
    assert top_tiles_disjoint(f, j)
    assert all(ft.tree.is_valid() for ft in f.trees)
    again = replay(coll, j, f.replay_log())
    assert again.to_json() == f.to_json()


@given(st.integers(0, 10**6), st.integers(-1, 2))
def test_printed_and_normalized_agree_when_energy_is_one(seed, n):
    rng = np.random.default_rng(seed)
    coll = random_quartiles(rng, W, 4, 30)
    a = rand_coeffs(rng, coll, 3, exact=False)
    E = energy(coll, a).value
    if not E:
        return
    a = CoeffSeq({P: a[P] / E for P in coll}, 3, exact=False)
    E2 = energy(coll, a).square
    assert E2 == pytest.approx(1.0)
    f1 = select_trees(coll, a, 3, n, E2, reading="normalized", check=False)
    f2 = select_trees(coll, a, 3, n, E2, reading="printed", check=False)
    assert f1.to_json() == f2.to_json()


@given(st.integers(0, 10**6))
def test_full_partition_audit(seed):
    coll, seqs = _instance(seed, 30)
    ok, cex, stats = audit_partition(coll, seqs)
    assert ok, cex


def test_full_partition_strips_zero_and_levels_increase():
    coll, seqs = _instance(11, 60)
    part = full_partition(coll, *seqs)
    assert all(all(a[P] for a in seqs) for P in part.stripped)
    ns = [L.n for L in part.levels]
    assert ns and ns == list(range(ns[0], ns[0] + len(ns)))


@given(st.integers(0, 10**6))
def test_bound_chain_first_links(seed):
    coll, seqs = _instance(seed, 30)
    rep = abstract_bound_check(coll, *seqs, (Fraction(1, 3),) * 3)
    assert rep.lhs <= rep.tree_sum * (1 + 1e-9) + 1e-12
    assert rep.tree_sum <= rep.tree_rhs * (1 + 1e-9) + 1e-12
    assert rep.tree_rhs <= rep.level_rhs * (1 + 1e-9) + 1e-12
