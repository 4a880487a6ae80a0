from __future__ import annotations

import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from walshbiest.dyadic import DyadicInterval
from walshbiest.harness import (DEFAULT_C, Experiment, ExceptionalSetOutsideWindow,
                                MajorityViolation, admissible_count, exceptional_set,
                                exhaustive_sup, lemma_sample, lemma_suite, loglog_slope,
                                major_subset, random_set, restricted_type_experiment, run_trial,
                                sup_over_X, superlevel_maximal)
from walshbiest.operators import BhtForm, LambdaPrimeForm
from walshbiest.phaseplane import quartiles_in, random_quartiles
from walshbiest.walsh import MeasSet, ZeroMeasure

W = DyadicInterval(0, 0)


def _maximal_oracle(E: MeasSet, t: Fraction) -> np.ndarray:
    # brute force: every dyadic interval inside the window, cell by cell
    n = len(E.mask)
    out = np.zeros(n, dtype=bool)
    width = 1
    while width <= n:
        for start in range(0, n, width):
            if Fraction(int(E.mask[start:start + width].sum()), width) > t:
                out[start:start + width] = True
        width *= 2
    return out


@given(st.integers(0, 10**6), st.fractions(0, 2, max_denominator=16))
def test_superlevel_matches_oracle(seed, t):
    E = random_set(np.random.default_rng(seed), DyadicInterval(1, 0), 3, 0.4, nonempty=False)
    assert np.array_equal(superlevel_maximal(E, t).mask, _maximal_oracle(E, t))


def test_omega_examples():
    cell = MeasSet.from_interval(W, 2, DyadicInterval(-2, 1))
    assert exceptional_set({1: cell, 2: cell, 3: cell}, 1, 10**6).count == 0
    E1 = MeasSet.from_interval(W, 2, W)
    E3 = MeasSet.from_interval(W, 2, DyadicInterval(-2, 0))
    # threshold for j = 1 is 8 * 1 / (1/4) = 32
    assert superlevel_maximal(E1, Fraction(32)).count == 0
    assert exceptional_set({1: E1, 3: E3}, 3, 8).count == 0


def test_omega_errors():
    empty = MeasSet.empty(W, 2)
    full = MeasSet.from_interval(W, 2, W)
    with pytest.raises(ZeroMeasure):
        exceptional_set({1: empty, 2: full}, 1)
    with pytest.raises(ValueError):
        exceptional_set({1: full}, 1, 0)
    with pytest.raises(ExceptionalSetOutsideWindow):
        exceptional_set({1: full}, 1, Fraction(1, 4))


@given(st.integers(0, 10**6), st.sampled_from([1, 2, 3, 4]))
def test_omega_majority_at_default_c(seed, i):
    rng = np.random.default_rng(seed)
    Wb = DyadicInterval(2, 0)
    E = {j: random_set(rng, Wb, 3, 2.0 ** -rng.uniform(0, 4)) for j in (1, 2, 3, 4)}
    omega = exceptional_set(E, i, DEFAULT_C)
    assert 2 * omega.measure <= E[i].measure
    Ep = major_subset(E[i], omega)
    assert 2 * Ep.measure >= E[i].measure
    assert np.array_equal(Ep.mask, E[i].mask & ~omega.mask)


def test_major_subset_paths():
    E = MeasSet.from_interval(W, 2, DyadicInterval(-1, 0))
    assert major_subset(E, MeasSet.empty(W, 2)) == E
    with pytest.raises(MajorityViolation):
        major_subset(E, MeasSet.from_interval(W, 2, W))


def test_sup_empty_sets():
    P = random_quartiles(np.random.default_rng(0), W, 2, 2)
    est = sup_over_X(BhtForm(P, W, 2), [MeasSet.empty(W, 2)] * 3)
    assert est.value == 0.0


@given(st.integers(0, 10**6))
def test_sup_single_quartile_matches_exhaustive(seed):
    rng = np.random.default_rng(seed)
    P = random_quartiles(rng, W, 2, 1)
    form = BhtForm(P, W, 2)
    sets = [random_set(rng, W, 2, 0.6) for _ in range(3)]
    est = sup_over_X(form, sets, restarts=4, rng=rng)
    best = exhaustive_sup(form, sets)
    # rank one in each slot: one ascent sweep reaches the optimum
    assert est.value == pytest.approx(best, rel=1e-12, abs=1e-15)
    assert all(b >= a - 1e-15 for a, b in zip(est.history, est.history[1:]))


@given(st.integers(0, 10**6))
def test_sup_is_a_lower_bound(seed):
    rng = np.random.default_rng(seed)
    P = random_quartiles(rng, W, 2, 3)
    Q = random_quartiles(rng, W, 2, 3)
    form = LambdaPrimeForm(P, Q, W, 2)
    sets = [random_set(rng, W, 2, 0.5) for _ in range(4)]
    est = sup_over_X(form, sets, rng=rng)
    assert est.value <= exhaustive_sup(form, sets) + 1e-12
    assert abs(form.value(est.witnesses)) == pytest.approx(est.value)
    for f, E in zip(est.witnesses, sets):
        assert np.all(f[~E.mask] == 0) and np.all(np.abs(f[E.mask]) == 1)


def test_exhaustive_size_guard():
    full = MeasSet.from_interval(DyadicInterval(1, 0), 3, DyadicInterval(1, 0))
    with pytest.raises(ValueError):
        exhaustive_sup(BhtForm([], DyadicInterval(1, 0), 3), [full] * 3)


def test_admissible_count_matches_enumeration():
    for s, K in ((0, 2), (1, 3), (2, 4)):
        Wd = DyadicInterval(s, 0)
        assert admissible_count(Wd, K) == len(list(quartiles_in(Wd, (-s, K - 2), 1 << K)))


def test_experiment_validation_and_json():
    exp = Experiment(regime="A5-A12", alpha=(-0.45, 0.95, 0.05, 0.45), scales=(0, 1), trials=2)
    assert exp.bad_index == 1
    again = Experiment.from_json(json.loads(json.dumps(exp.to_json())))
    assert again == exp
    with pytest.raises(ValueError):
        Experiment(regime="A1-A4", alpha=(-0.45, 0.95, 0.05, 0.45))
    with pytest.raises(ValueError):
        Experiment(regime="bht", alpha=("1/2", "1/2", "1/2", "-1/2"))
    with pytest.raises(ValueError):
        Experiment(regime="nope")


@pytest.mark.parametrize("regime,alpha", [
    ("A1-A4", ("1/2", "1/2", "1/2", "-1/2")),
    ("A5-A12", ("-0.45", "0.95", "0.05", "0.45")),
    ("bht", ("0.8", "0.55", "-0.35")),
])
def test_trials_deterministic_and_audited(regime, alpha):
    exp = Experiment(regime=regime, alpha=alpha, scales=(0, 2), trials=2, seed=3)
    for scale in exp.scales:
        a = run_trial(exp, scale, 1)
        b = run_trial(exp, scale, 1)
        assert a == b
        assert a.audit_ok and a.audit_mode == "exact"
        assert a.omega <= a.measures[exp.bad_index - 1] / 2


def test_loglog_slope():
    assert loglog_slope({s: 3.0 for s in range(5)}) == pytest.approx(0.0, abs=1e-12)
    assert loglog_slope({s: 2.0 ** s for s in range(5)}) == pytest.approx(1.0)
    assert loglog_slope({0: 1.0}) == 0.0


def test_small_experiment_report():
    exp = Experiment(regime="bht", alpha=("0.8", "0.55", "-0.35"), scales=(0, 1), trials=2)
    rep = restricted_type_experiment(exp)
    assert rep.audits_ok and len(rep.trials) == 4
    lines = rep.to_csv().splitlines()
    assert lines[0].startswith("scale,trial,seed") and len(lines) == 5
    assert json.loads(json.dumps(rep.to_json()))["config"]["regime"] == "bht"


def test_energy_lemma_exact_sample():
    rng = np.random.default_rng(1)
    for _ in range(10):
        s = lemma_sample("energy-lemma", rng, 1)
        assert s.exact_ok and s.ratio <= 1
    with pytest.raises(ValueError):
        lemma_sample("other", rng, 1)


def test_lemma_suite_small():
    for lemma in ("size-lemma", "bht-energy", "bht-size"):
        r = lemma_suite(lemma, 2, 5)
        assert r.samples == 5 and np.isfinite(r.constant)
