"""Verification suites shared by ``walshbiest verify`` and the acceptance tests.

Each suite returns a :class:`CheckResult` with the first counterexample (if
any) so a failing run can be reproduced.
"""

from __future__ import annotations

import functools
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .decomp import abstract_bound_check, full_partition, top_tiles_disjoint, tree_estimate_holds
from .dyadic import ZERO, DyadicInterval, ExactArray, ExactScalar, half_power
from .exponents import A_VERTICES, Membership, classify_by_facets, in_D, vertices_D_doubleprime
from .norms import size
from .operators import CoeffSeq
from .phaseplane import (
    Quartile,
    Tree,
    biest_trick_counterexamples,
    check_lacunarity,
    quartiles_in,
    random_disjoint_family,
    random_quartiles,
    random_tiling,
)
from .walsh import (
    PacketTable,
    StepFunction,
    lp_norm,
    walsh_by_recursion,
    walsh_signs,
    wave_packet,
)


@dataclass
class CheckResult:
    name: str
    passed: bool
    checked: int = 0
    counterexample: object = None
    stats: dict = field(default_factory=dict)
    seconds: float = 0.0

    def to_json(self) -> dict:
        return {
            "name": self.name, "passed": self.passed, "checked": self.checked,
            "counterexample": self.counterexample, "stats": self.stats,
        }

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        extra = ", ".join(f"{k}={_fmt(v)}" for k, v in self.stats.items())
        return f"[{verdict}] {self.name}: checked {self.checked}" + (f" ({extra})" if extra else "")


def _fmt(v):
    return f"{v:.4g}" if isinstance(v, float) else v


def _timed(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res
    return wrapper


def _coeffs_exact(rng, coll, slot: int, lo: int = -4, hi: int = 5) -> CoeffSeq:
    """Random nonzero coefficients ``(a + b sqrt2) / 4`` on ``coll``."""
    out = {}
    for P in coll:
        while True:
            a, b = int(rng.integers(lo, hi)), int(rng.integers(-2, 3))
            if a or b:
                break
        out[P] = ExactScalar(a, b, 2)
    return CoeffSeq(out, slot)


# ---------------------------------------------------------------------------
# Walsh functions and packets


@_timed
def walsh_identities(max_l: int = 256, max_ab: int = 64) -> CheckResult:
    """Closed form equals the doubling recursion; ``w_a w_b = w_{a xor b}``."""
    K = max(1, (max_l - 1).bit_length())
    n = 0
    for l in range(max_l):
        n += 1
        if not np.array_equal(walsh_signs(l, K), walsh_by_recursion(l, K)):
            return CheckResult("walsh", False, n, {"l": l})
    Kb = max(1, (max_ab - 1).bit_length())
    table = [walsh_signs(a, Kb) for a in range(max_ab)]
    for a in range(max_ab):
        for b in range(max_ab):
            n += 1
            if not np.array_equal(table[a] * table[b], table[a ^ b]):
                return CheckResult("walsh", False, n, {"a": a, "b": b})
    return CheckResult("walsh", True, n)


@_timed
def packet_orthonormality(tilings: int = 100, functions: int = 20, seed: int = 0,
                          freq_log2: int = 6) -> CheckResult:
    """Gram matrix of a random tiling is the identity; Plancherel holds exactly."""
    rng = np.random.default_rng(seed)
    W = DyadicInterval(0, 0)
    K = freq_log2
    n = 0
    for t in range(tilings):
        tiles = random_tiling(rng, W, DyadicInterval(K, 0))
        signs = np.zeros((len(tiles), 1 << K), dtype=np.int64)
        for r, P in enumerate(tiles):
            phi = wave_packet(P, W, K)
            s = np.sign(phi.to_float()).astype(np.int64)
            # amplitude is exactly 2^(k/2) on the support
            if not phi.data == ExactArray.from_ints(s) * half_power(P.k):
                return CheckResult("orthonormality", False, n, {"tiling": t, "tile": P.to_json()})
            signs[r] = s
        gram = signs @ signs.T          # times 2^((kP+kR)/2) / 2^K gives <phi_P, phi_R>
        ks = np.array([P.k for P in tiles])
        off = gram - np.diag(np.diag(gram))
        if np.any(off != 0) or np.any(np.diag(gram) << ks != (1 << K)):
            return CheckResult("orthonormality", False, n, {"tiling": t})
        n += 1
        for _ in range(functions):
            vals = [int(v) for v in rng.integers(-5, 6, 1 << K)]
            f = StepFunction.from_values(W, K, vals)
            table = PacketTable.of(f)
            energy = sum((table.coeff(P).square() for P in tiles), ZERO)
            n += 1
            if energy != lp_norm(f, 2):
                return CheckResult("orthonormality", False, n, {"tiling": t, "f": vals})
    return CheckResult("orthonormality", True, n, stats={"tilings": tilings})


# ---------------------------------------------------------------------------
# phase-plane lemmas


@_timed
def lacunarity_sweep(max_scale: int = 3, window: DyadicInterval = DyadicInterval(2, 0),
                     freq_bound: int = 32) -> CheckResult:
    """Every ordered pair of quartiles and every ``i != j``."""
    coll = list(quartiles_in(window, (-max_scale, max_scale), freq_bound))
    n = 0
    for Pa in coll:
        for Pb in coll:
            for i in (1, 2, 3):
                for j in (1, 2, 3):
                    if i == j:
                        continue
                    n += 1
                    if not check_lacunarity(Pa, Pb, i, j):
                        return CheckResult("lacunarity", False, n,
                                           {"Pa": Pa.to_json(), "Pb": Pb.to_json(), "i": i, "j": j})
    return CheckResult("lacunarity", True, n, stats={"quartiles": len(coll)})


@_timed
def biest_trick_suite(trials: int = 1000, seed: int = 0, max_scale: int = 3) -> CheckResult:
    rng = np.random.default_rng(seed)
    W = DyadicInterval(2, 0)
    K = max_scale + 2
    n = 0
    pairs = 0
    for t in range(trials):
        P = random_quartiles(rng, W, K, int(rng.integers(1, 40)), (-max_scale, max_scale))
        pool = random_quartiles(rng, W, K, int(rng.integers(1, 40)), (-max_scale, max_scale))
        D = random_disjoint_family(rng, pool, 3, len(pool))
        bad = biest_trick_counterexamples(P, D)
        n += 1
        pairs += len(P) * len(D)
        if bad:
            return CheckResult("biest-trick", False, n,
                               {"trial": t, "P": bad[0][0].to_json(), "Q": bad[0][1].to_json()})
    return CheckResult("biest-trick", True, n, stats={"pairs": pairs})


# ---------------------------------------------------------------------------
# trees and the decomposition


def random_tree(rng, window: DyadicInterval, max_members: int = 40, depth: int = 8) -> Tree:
    """A random tree of random kind below a random top."""
    kind = int(rng.integers(1, 4))
    kT = int(rng.integers(-window.scale, -window.scale + 2))
    nT = (window.index << (window.scale + kT)) + int(rng.integers(0, 1 << (window.scale + kT)))
    top = Quartile(kT, nT, int(rng.integers(0, 1 << 10)))
    t = 4 * top.l + kind - 1
    # a member d scales finer has the wider frequency band t >> d, which must
    # again be a kind-th sub-tile; only those depths can carry members
    depths = [d for d in range(1, depth + 1) if (t >> d) % 4 == kind - 1]
    members = set()
    if rng.random() < 0.5 or not depths:
        members.add(top)
    target = int(rng.integers(1, max_members + 1))
    for _ in range(8 * target):
        if len(members) >= target or not depths:
            break
        d = depths[int(rng.integers(0, len(depths)))]
        n = (nT << d) + int(rng.integers(0, 1 << d))
        members.add(Quartile(kT + d, n, (t >> d) >> 2))
    return Tree(frozenset(members), top, kind)


@_timed
def tree_estimate_suite(trials: int = 500, seed: int = 0, max_members: int = 40) -> CheckResult:
    rng = np.random.default_rng(seed)
    W = DyadicInterval(2, 0)
    kinds = {1: 0, 2: 0, 3: 0}
    for t in range(trials):
        T = random_tree(rng, W, max_members)
        assert T.is_valid()
        kinds[T.kind] += 1
        seqs = [_coeffs_exact(rng, T.members, j) for j in (1, 2, 3)]
        if not tree_estimate_holds(T, *seqs):
            return CheckResult("tree-estimate", False, t + 1, {"trial": t, "tree": T.to_json()})
    return CheckResult("tree-estimate", True, trials, stats={f"kind{k}": v for k, v in kinds.items()})


C_SEL = 64


def audit_partition(coll, seqs) -> tuple[bool, dict | None, dict]:
    """Re-measure every guarantee of :func:`full_partition` on one instance."""
    part = full_partition(coll, *seqs)
    base = part.stripped
    seen = [P for L in part.levels for P in L.members]
    stats = {"levels": len(part.levels), "max_count_ratio": 0.0}
    if sorted(seen, key=lambda p: p.key) != sorted(base, key=lambda p: p.key):
        return False, {"invariant": "partition"}, stats
    current = list(base)
    for L in part.levels:
        for j in (1, 2, 3):
            forest = L.forests[j]
            members = forest.members()
            if len(members) != len(set(members)) or set(members) & forest.residual:
                return False, {"invariant": "disjoint trees", "n": L.n, "j": j}, stats
            if set(members) | forest.residual != set(current):
                return False, {"invariant": "forest covers input", "n": L.n, "j": j}, stats
            for ft in forest.trees:
                if not ft.tree.is_valid():
                    return False, {"invariant": "tree shape", "n": L.n, "j": j}, stats
            if forest.residual:
                s2 = size(forest.residual, seqs[j - 1], j).square
                if s2 > part.energies_sq[j - 1].scale2(-2 * L.n - 2):
                    return False, {"invariant": "halved size", "n": L.n, "j": j}, stats
            if not top_tiles_disjoint(forest, j):
                return False, {"invariant": "top disjointness", "n": L.n, "j": j}, stats
            lengths = forest.tree_lengths()
            limit = C_SEL * Fraction(2) ** (2 * L.n)
            stats["max_count_ratio"] = max(stats["max_count_ratio"], float(lengths / limit))
            if lengths > limit:
                return False, {"invariant": "counting", "n": L.n, "j": j,
                               "sum_lengths": str(lengths)}, stats
            current = sorted(forest.residual, key=lambda p: p.key)
        # per-level size bound min(2^-n E_j, S_j)
        for j in (1, 2, 3):
            if L.members:
                s2 = size(L.members, seqs[j - 1], j).square
                e_bound = part.energies_sq[j - 1].scale2(-2 * L.n)
                if s2 > e_bound or s2 > part.sizes_sq[j - 1]:
                    return False, {"invariant": "level size", "n": L.n, "j": j}, stats
    return True, None, stats


@_timed
def decomp_suite(trials: int = 200, seed: int = 0, max_quartiles: int = 500) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    total = 0
    for t in range(trials):
        s = int(rng.integers(2, 7))
        W = DyadicInterval(s, 0)
        N = int(rng.integers(1, max_quartiles + 1))
        coll = random_quartiles(rng, W, 3, N)
        total += len(coll)
        seqs = [_coeffs_exact(rng, coll, j) for j in (1, 2, 3)]
        ok, why, stats = audit_partition(coll, seqs)
        worst = max(worst, stats["max_count_ratio"])
        if not ok:
            why.update({"trial": t})
            return CheckResult("decomp", False, t + 1, why, {"max_count_ratio": worst})
    return CheckResult("decomp", True, trials,
                       stats={"max_count_ratio": worst, "mean_quartiles": total / max(trials, 1)})


# ---------------------------------------------------------------------------
# abstract bound


def abstract_instance(rng, N: int, resolution: int = 3):
    """``N`` random quartiles at a roughly fixed density with positive coefficients.

    For fixed magnitudes the left side is largest when no terms cancel, so
    positive coefficients are the worst case over sign patterns.
    """
    from .harness import admissible_count
    s = 0
    while admissible_count(DyadicInterval(s, 0), resolution) < 2 * N:
        s += 1
    coll = random_quartiles(rng, DyadicInterval(s, 0), resolution, N)
    seqs = [CoeffSeq({P: float(abs(rng.normal())) for P in coll}, j, exact=False) for j in (1, 2, 3)]
    return coll, seqs


def abstract_ratios(N: int, instances: int, seed: int = 0, theta=(Fraction(1, 3),) * 3) -> list[float]:
    from .norms import abstract_rhs, trilinear_sum
    rng = np.random.default_rng([seed, N])
    out = []
    for _ in range(instances):
        coll, seqs = abstract_instance(rng, N)
        lhs = abs(float(trilinear_sum(coll, *seqs)))
        rhs = abstract_rhs(coll, *seqs, theta)
        out.append(lhs / rhs if rhs else (0.0 if lhs == 0 else math.inf))
    return out


@_timed
def abstract_suite(sizes=(50, 100, 200, 400), instances: int = 1000, seed: int = 0) -> CheckResult:
    maxima = {}
    for N in sizes:
        r = abstract_ratios(N, instances, seed)
        if not all(math.isfinite(x) for x in r):
            return CheckResult("abstract", False, len(r), {"N": N, "invariant": "finite ratio"})
        maxima[N] = max(r)
    lo, hi = maxima[sizes[0]], maxima[sizes[-1]]
    growth = hi / lo if lo else math.inf
    stats = {f"max_N{N}": v for N, v in maxima.items()}
    stats["growth"] = growth
    return CheckResult("abstract", 0.5 <= growth <= 2.0, instances * len(sizes), None, stats)


@_timed
def bound_chain_suite(trials: int = 100, seed: int = 0, max_quartiles: int = 120) -> CheckResult:
    """Every link of the decomposition chain, with its worst ratio."""
    rng = np.random.default_rng(seed)
    worst: dict = {}
    for t in range(trials):
        coll = random_quartiles(rng, DyadicInterval(3, 0), 3, int(rng.integers(1, max_quartiles)))
        seqs = [_coeffs_exact(rng, coll, j) for j in (1, 2, 3)]
        rep = abstract_bound_check(coll, *seqs, (Fraction(1, 3),) * 3)
        for k, v in rep.ratios().items():
            worst[k] = max(worst.get(k, 0.0), v)
    ok = (worst.get("lhs/tree_sum", 0) <= 1 + 1e-9 and worst.get("tree_sum/tree_rhs", 0) <= 1 + 1e-9
          and worst.get("tree_rhs/level_rhs", 0) <= 1 + 1e-9
          and worst.get("level_rhs/majorant", 0) <= 3 * C_SEL)
    return CheckResult("bound-chain", ok, trials, None, worst)


# ---------------------------------------------------------------------------
# exponents


def random_hyperplane_point(rng) -> tuple[Fraction, ...]:
    """Random rational point of ``sum = 1`` near the vertex bounding box.

    Small denominators make faces and vertices likely hits.
    """
    den = int(rng.choice([2, 4, 8, 16]))
    a = [Fraction(int(rng.integers(-3 * den // 2, den + 1)), den) for _ in range(3)]
    return (*a, 1 - sum(a))


@_timed
def polytope_suite(points: int = 10_000, seed: int = 0) -> CheckResult:
    """Named points, then the D-test against the D' and D'' conjunction.

    The conjunction is evaluated with the facet description, which shares no
    code with the simplex-based membership test.
    """
    A = (Fraction(1, 2),) * 3 + (Fraction(-1, 2),)
    if in_D(A) is not Membership.INTERIOR:
        return CheckResult("polytope", False, 1, {"point": "A"})
    for idx, v in enumerate(A_VERTICES, 1):
        if in_D(v, "D'") is not Membership.BOUNDARY:
            return CheckResult("polytope", False, idx, {"vertex": f"A{idx}"})
    rng = np.random.default_rng(seed)
    B = vertices_D_doubleprime().vertices
    counts = {m.value: 0 for m in Membership}
    for t in range(points):
        x = random_hyperplane_point(rng)
        m1, m2 = classify_by_facets(x, A_VERTICES), classify_by_facets(x, B)
        if Membership.OUTSIDE in (m1, m2):
            conj = Membership.OUTSIDE
        elif m1 is m2 is Membership.INTERIOR:
            conj = Membership.INTERIOR
        else:
            conj = Membership.BOUNDARY
        counts[conj.value] += 1
        d = in_D(x)
        if d is not conj:
            return CheckResult("polytope", False, t + 1, {"point": [str(c) for c in x],
                                                          "D": d.value, "conjunction": conj.value})
    return CheckResult("polytope", True, points, stats=counts)


# ---------------------------------------------------------------------------
# harness-backed suites


@_timed
def lemma_checks(instances: int = 300, scales=(3, 6), seed: int = 0) -> CheckResult:
    """Empirical constants per lemma at two window sizes; stable within a factor 2."""
    from .harness import LEMMAS, lemma_suite
    stats: dict = {}
    ok = True
    first = None
    for lemma in LEMMAS:
        consts = [lemma_suite(lemma, s, instances, seed) for s in scales]
        c0, c1 = consts[0].constant, consts[-1].constant
        ratio = max(c0, c1) / min(c0, c1) if min(c0, c1) > 0 else math.inf
        stats[f"{lemma}@{scales[0]}"] = c0
        stats[f"{lemma}@{scales[-1]}"] = c1
        good = ratio <= 2.0
        if lemma == "energy-lemma":
            good = good and all(c.exact_ok and c.constant <= 1.0 for c in consts)
        if not good and first is None:
            first = {"lemma": lemma, "constants": [c0, c1]}
        ok = ok and good
    return CheckResult("lemmas", ok, instances * len(LEMMAS) * len(scales), first, stats)


DEFAULT_EXPERIMENTS = {
    "A1-A4": ("1/2", "1/2", "1/2", "-1/2"),
    "A5-A12": ("-0.45", "0.95", "0.05", "0.45"),
    "bht": ("0.8", "0.55", "-0.35"),
}


@_timed
def restricted_type_checks(regimes=("A1-A4", "A5-A12", "bht"), trials: int = 50,
                           scales=tuple(range(9)), seed: int = 0, jobs: int = 1,
                           tolerance: float = 0.1) -> CheckResult:
    from .harness import Experiment, restricted_type_experiment
    stats: dict = {}
    ok = True
    first = None
    for regime in regimes:
        exp = Experiment(regime=regime, alpha=DEFAULT_EXPERIMENTS[regime], scales=tuple(scales),
                         trials=trials, seed=seed, jobs=jobs)
        rep = restricted_type_experiment(exp)
        stats[f"slope_{regime}"] = rep.slope
        good = abs(rep.slope) <= tolerance and rep.audits_ok
        if not good and first is None:
            first = {"regime": regime, "slope": rep.slope, "audits_ok": rep.audits_ok,
                     "max_ratio": {str(k): v for k, v in rep.max_ratio.items()}}
        ok = ok and good
    return CheckResult("restricted-type", ok, trials * len(scales) * len(regimes), first, stats)
