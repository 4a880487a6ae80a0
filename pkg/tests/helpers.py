"""Small random instances shared by the test modules."""

from __future__ import annotations

import numpy as np

from walshbiest.dyadic import DyadicInterval, ExactScalar
from walshbiest.operators import CoeffSeq
from walshbiest.phaseplane import random_quartiles
from walshbiest.walsh import StepFunction


def rand_function(rng, W: DyadicInterval, K: int, lo: int = -3, hi: int = 4) -> StepFunction:
    return StepFunction.from_values(W, K, [int(v) for v in rng.integers(lo, hi, 1 << (W.scale + K))])


def instance(seed: int, nP: int = 12, nQ: int = 12, scale: int = 2, K: int = 4):
    rng = np.random.default_rng(seed)
    W = DyadicInterval(scale, 0)
    P = random_quartiles(rng, W, K, nP)
    Q = random_quartiles(rng, W, K, nQ)
    fs = [rand_function(rng, W, K) for _ in range(4)]
    return W, K, P, Q, fs


def rand_coeffs(rng, coll, slot: int, exact: bool = True) -> CoeffSeq:
    if exact:
        return CoeffSeq({P: ExactScalar(int(rng.integers(-4, 5)), int(rng.integers(-2, 3)), 1)
                         for P in coll}, slot)
    return CoeffSeq({P: float(rng.normal()) for P in coll}, slot, exact=False)
