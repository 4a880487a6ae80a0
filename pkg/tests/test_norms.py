from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import rand_coeffs
from walshbiest.dyadic import ZERO, DyadicInterval, ExactScalar, half_power
from walshbiest.norms import (
    BadTheta,
    abstract_rhs,
    check_theta,
    energy,
    energy_bruteforce,
    energy_mincut,
    family_value,
    jn_weak_size,
    lemma_rhs_bounds,
    norm_report,
    size,
    size_bruteforce,
    tree_value,
)
from walshbiest.operators import CoeffSeq
from walshbiest.phaseplane import Quartile, random_quartiles, subtile, tiles_intersect
from walshbiest.walsh import MeasSet

seeds = st.integers(0, 2 ** 20)
W = DyadicInterval(2, 0)


def _coll(seed, n, K=3):
    rng = np.random.default_rng(seed)
    return rng, random_quartiles(rng, W, K, n)


def test_singleton_size_and_energy():
    P = Quartile(1, 3, 2)
    c = ExactScalar(3, 1, 1)
    a = CoeffSeq({P: c}, 2)
    # |c| / |I_P|^{1/2} with |I_P| = 1/2
    assert size([P], a).square == c.square().scale2(1)
    assert size([P], a).value == pytest.approx(abs(float(c)) * math.sqrt(2))
    assert energy([P], a).square == c.square()


def test_zero_coefficients():
    rng, coll = _coll(0, 10)
    a = CoeffSeq({P: ZERO for P in coll}, 1)
    assert size(coll, a).square == ZERO and energy(coll, a).square == ZERO
    assert size([], a).square == ZERO


def test_energy_of_disjoint_family_is_total():
    coll = [Quartile(0, n, 0) for n in range(4)]
    a = CoeffSeq({P: ExactScalar(n + 1) for n, P in enumerate(coll)}, 1)
    assert energy(coll, a).square == ExactScalar(1 + 4 + 9 + 16)


@settings(max_examples=25)
@given(seeds, st.sampled_from([1, 2, 3]))
def test_size_matches_exponential_oracle(seed, j):
    rng, coll = _coll(seed, 11)
    a = rand_coeffs(rng, coll, j)
    assert size(coll, a).square == size_bruteforce(coll, a)


@settings(max_examples=25)
@given(seeds, st.sampled_from([1, 2, 3]))
def test_energy_matches_exponential_oracle_and_mincut(seed, j):
    rng, coll = _coll(seed, 13)
    a = rand_coeffs(rng, coll, j)
    e = energy(coll, a)
    assert e.square == energy_bruteforce(coll, a)
    m = energy_mincut(coll, a.to_float())
    assert m.square == pytest.approx(float(e.square), rel=1e-9, abs=1e-12)


@given(seeds, st.sampled_from([1, 2, 3]))
def test_witnesses_reproduce_values(seed, j):
    rng, coll = _coll(seed, 30)
    a = rand_coeffs(rng, coll, j)
    s = size(coll, a)
    assert s.witness.is_valid() and s.witness.kind != j
    assert tree_value(s.witness, a) == s.square
    e = energy(coll, a)
    tiles = [subtile(P, j) for P in e.witness]
    assert all(x == y or not tiles_intersect(x, y) for x in tiles for y in tiles)
    assert family_value(e.witness, a) == e.square


@given(seeds)
def test_size_bounded_by_energy_over_shortest_interval(seed):
    rng, coll = _coll(seed, 25)
    a = rand_coeffs(rng, coll, 1)
    kmax = max(P.k for P in coll)
    assert size(coll, a).square <= energy(coll, a).square.scale2(kmax)


@given(seeds)
def test_jn_weak_size_two_sided(seed):
    rng, coll = _coll(seed, 20)
    a = rand_coeffs(rng, coll, 2).to_float()
    s, w = size(coll, a).value, jn_weak_size(coll, a).value
    assert w <= s * (1 + 1e-9)
    assert w >= 0.25 * s      # empirical lower constant, far from tight


def test_jn_singleton():
    P = Quartile(2, 1, 0)
    a = CoeffSeq({P: 3.0}, 1, exact=False)
    assert jn_weak_size([P], a).value == pytest.approx(3.0 * 2)


def test_theta_validation():
    with pytest.raises(BadTheta):
        check_theta((1, 0, 0))
    with pytest.raises(BadTheta):
        check_theta((Fraction(1, 2), Fraction(1, 2), Fraction(1, 2)))
    assert check_theta((Fraction(1, 3),) * 3)


def test_abstract_rhs_composes_norms():
    rng, coll = _coll(4, 20)
    seqs = [rand_coeffs(rng, coll, j) for j in (1, 2, 3)]
    rep = norm_report(coll, seqs)
    want = math.prod(rep.size(j) ** (1 / 3) * rep.energy(j) ** (2 / 3) for j in (1, 2, 3))
    assert abstract_rhs(coll, *seqs, (Fraction(1, 3),) * 3) == pytest.approx(want)
    zero = [CoeffSeq({P: ZERO for P in coll}, j) for j in (1, 2, 3)]
    assert abstract_rhs(coll, *zero, (Fraction(1, 3),) * 3) == 0.0


def test_lemma_rhs_examples():
    rng, coll = _coll(5, 10)
    empty = {j: MeasSet.empty(W, 3) for j in (1, 2, 3, 4)}
    r = lemma_rhs_bounds(empty, coll, coll, Fraction(1, 2))
    assert all(v == 0 for v in r.densities_P.values())
    assert r.bht_energy == 0.0 and r.bht_size == 0.0
    P = Quartile(0, 1, 0)
    full = {j: MeasSet.from_interval(W, 3, P.time) for j in (3, 4)}
    assert lemma_rhs_bounds(full, [P], [P]).densities_P == {3: 1, 4: 1}
    with pytest.raises(BadTheta):
        lemma_rhs_bounds(full, [P], [P], 1)


@given(seeds)
def test_lemma_densities_match_cell_scan(seed):
    rng, coll = _coll(seed, 15, K=4)
    E = MeasSet(W, 4, rng.random(64) < 0.4)
    got = lemma_rhs_bounds({1: E}, coll).densities_P[1]
    want = Fraction(0)
    for P in coll:
        I = P.time
        cells = [c for c in range(64) if I.contains(DyadicInterval(-4, c))]
        assert cells    # every I_P holds at least one cell at this resolution
        want = max(want, Fraction(sum(bool(E.mask[c]) for c in cells), len(cells)))
    assert got == want


def test_half_power_scaling_of_size():
    P = Quartile(-1, 0, 0)
    a = CoeffSeq({P: half_power(0)}, 3)
    assert size([P], a).square == ExactScalar(1, 0, 1)
