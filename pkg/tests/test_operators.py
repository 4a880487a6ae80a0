from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import instance, rand_function
from walshbiest.dyadic import ZERO, DyadicInterval, ExactScalar
from walshbiest.operators import (
    BhtForm,
    LambdaDoublePrimeForm,
    LambdaPrimeForm,
    a3_sequence,
    bht,
    bht_adjoint,
    bht_reference,
    bht_restricted,
    bht_trilinear,
    biest,
    biest_reference,
    coefficients,
    quad_form,
    quad_form_reference,
    rightform_sum,
)
from walshbiest.phaseplane import Quartile, biest_restrict, random_disjoint_family, subtile
from walshbiest.walsh import StepFunction, inner_product, walsh_function

U = DyadicInterval(0, 0)
seeds = st.integers(0, 2 ** 20)


def test_bht_examples():
    chi = StepFunction.indicator(U, 2, U)
    assert bht([], chi, chi) == StepFunction.zero(U, 2)
    P = [Quartile(0, 0, 0)]
    assert bht(P, chi, chi) == StepFunction.zero(U, 2)
    assert bht(P, chi, walsh_function(1, 2)) == walsh_function(2, 2)


def test_adjoint_example():
    out = bht_adjoint([Quartile(0, 0, 0)], walsh_function(1, 2), walsh_function(2, 2))
    assert out == StepFunction.indicator(U, 2, U)


@settings(max_examples=15)
@given(seeds)
def test_fast_and_reference_paths_agree(seed):
    W, K, P, Q, fs = instance(seed, nP=8, nQ=8)
    assert bht(P, fs[0], fs[1]) == bht_reference(P, fs[0], fs[1])
    fast, ref = biest(P, Q, *fs[:3]), biest_reference(P, Q, *fs[:3])
    assert fast.t_prime == ref.t_prime and fast.t_double == ref.t_double
    lam, lam_ref = quad_form(P, Q, *fs), quad_form_reference(P, Q, *fs)
    assert lam.lam_prime == lam_ref.lam_prime and lam.lam_double == lam_ref.lam_double


@given(seeds)
def test_quad_form_is_pairing_with_biest(seed):
    W, K, P, Q, fs = instance(seed)
    lam = quad_form(P, Q, *fs)
    assert lam.total == lam.lam_prime + lam.lam_double
    assert lam.total == inner_product(biest(P, Q, *fs[:3]).total, fs[3])


@given(seeds)
def test_summation_order_identity(seed):
    W, K, P, Q, fs = instance(seed)
    a1 = coefficients(Q, fs[0], 1)
    a2 = coefficients(Q, fs[1], 2)
    a3 = a3_sequence(P, Q, fs[2], fs[3])
    assert rightform_sum(Q, a1, a2, a3) == quad_form(P, Q, *fs).lam_prime


@given(seeds)
def test_a3_on_disjoint_family_is_adjoint_pairing(seed):
    rng = np.random.default_rng(seed)
    W, K, P, Q, fs = instance(seed, nP=20, nQ=30)
    D = random_disjoint_family(rng, Q, 3, len(Q))
    Pp = biest_restrict(P, D)
    a3 = a3_sequence(P, D, fs[2], fs[3])
    adj = bht_adjoint(Pp, fs[2], fs[3])
    for Qd in D:
        assert a3[Qd] == coefficients([Qd], adj, 3)[Qd]


def test_a3_empty_p():
    W, K, P, Q, fs = instance(1)
    assert all(v == ZERO for v in a3_sequence([], Q, fs[2], fs[3]).entries.values())


@given(seeds)
def test_adjoint_duality(seed):
    W, K, P, Q, fs = instance(seed)
    g = fs[0]
    lhs = inner_product(bht_adjoint(P, fs[2], fs[3]), g)
    assert lhs == bht_trilinear(P, g, fs[2], fs[3])


@given(seeds)
def test_restricted_bht_filters(seed):
    W, K, P, Q, fs = instance(seed)
    top = subtile(Q[0], 1)
    kept = [R for R in Q if top.freq.contains(subtile(R, 3).freq)]
    assert bht_restricted(top, Q, fs[0], fs[1]) == (bht(kept, fs[0], fs[1]) if kept
                                                    else StepFunction.zero(W, K))


@given(seeds, st.integers(-3, 3))
def test_quad_form_multilinear(seed, c):
    W, K, P, Q, fs = instance(seed, nP=8, nQ=8)
    rng = np.random.default_rng(seed + 1)
    g = rand_function(rng, W, K)
    for slot in range(4):
        a = list(fs)
        a[slot] = fs[slot] * ExactScalar(c) + g
        b = list(fs)
        b[slot] = g
        assert quad_form(P, Q, *a).total == quad_form(P, Q, *fs).total * ExactScalar(c) + quad_form(P, Q, *b).total


def test_biest_empty_q_is_zero():
    W, K, P, Q, fs = instance(3)
    assert biest(P, [], *fs[:3]).total == StepFunction.zero(W, K)


@given(seeds)
def test_float_forms_match_exact(seed):
    W, K, P, Q, fs = instance(seed)
    arrs = [f.to_float() for f in fs]
    assert BhtForm(P, W, K).value(arrs[:3]) == pytest.approx(float(bht_trilinear(P, *fs[:3])), abs=1e-9)
    lam = quad_form(P, Q, *fs)
    assert LambdaPrimeForm(P, Q, W, K).value(arrs) == pytest.approx(float(lam.lam_prime), abs=1e-9)
    assert LambdaDoublePrimeForm(P, Q, W, K).value(arrs) == pytest.approx(float(lam.lam_double), abs=1e-9)
