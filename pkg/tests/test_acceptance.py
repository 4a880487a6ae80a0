"""End-to-end acceptance runs at full size.

Each test prints one ``[PASS]``/``[FAIL]`` line with its statistics.  The whole
module takes roughly ten minutes on one core.
"""

from __future__ import annotations

import pytest

from walshbiest import checks
from walshbiest.exponents import A_VERTICES, Membership, in_D

pytestmark = pytest.mark.acceptance


def _report(capsys, label: str, res: checks.CheckResult, budget: float | None = None):
    timing = f" {res.seconds:.1f}s" + (f" (budget {budget:.0f}s)" if budget else "")
    with capsys.disabled():
        print(f"\nACCEPTANCE {label}: {res.line()}{timing}")
    assert res.passed, res.counterexample
    if budget is not None:
        assert res.seconds < budget


def test_1_walsh(capsys):
    _report(capsys, "1", checks.walsh_identities(256, 64), 5)


def test_2_orthonormality(capsys):
    _report(capsys, "2", checks.packet_orthonormality(tilings=100, functions=20), 60)


def test_3_lacunarity(capsys):
    _report(capsys, "3", checks.lacunarity_sweep(max_scale=3), 30)


def test_4_biest_trick(capsys):
    _report(capsys, "4", checks.biest_trick_suite(trials=1000))


def test_5_tree_estimate(capsys):
    _report(capsys, "5", checks.tree_estimate_suite(trials=500, max_members=40))


def test_6_decomposition(capsys):
    _report(capsys, "6", checks.decomp_suite(trials=200, max_quartiles=500), 120)


def test_7_abstract(capsys):
    _report(capsys, "7", checks.abstract_suite(sizes=(50, 100, 200, 400), instances=1000))


def test_8_lemmas(capsys):
    _report(capsys, "8", checks.lemma_checks(instances=300, scales=(3, 6)))


def test_9_restricted_type(capsys):
    res = checks.restricted_type_checks(regimes=("A1-A4", "A5-A12", "bht"), trials=50, scales=range(9))
    _report(capsys, "9", res, 600)


def test_10_polytope(capsys):
    assert in_D(("1/2", "1/2", "1/2", "-1/2")) is Membership.INTERIOR
    assert all(in_D(v, "D'") is Membership.BOUNDARY for v in A_VERTICES)
    _report(capsys, "10", checks.polytope_suite(points=10_000))
