"""Randomised restricted-type experiments.

A trial draws sets ``E_j``, quartile collections and a form, removes the
exceptional set from the set at the bad index, and lower-bounds
``sup |Lambda(f)|`` over ``f_i`` bounded by one and supported on ``E'_i``.
The ratio to ``|E|^alpha`` should not grow with the measure scale.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .dyadic import DyadicInterval
from .exponents import AdmissibleTuple, as_fraction
from .norms import energy, lemma_rhs_bounds, size
from .operators import (
    BhtForm,
    LambdaPrimeForm,
    a3_sequence,
    bht_trilinear,
    coefficients,
    quad_form,
)
from .phaseplane import Quartile, random_quartiles
from .walsh import MeasSet, StepFunction, ZeroMeasure

DEFAULT_C = Fraction(16)


class MajorityViolation(ValueError):
    pass


class ExceptionalSetOutsideWindow(ValueError):
    pass


# ---------------------------------------------------------------------------
# sets


def random_set(rng: np.random.Generator, window: DyadicInterval, resolution: int, p: float,
               nonempty: bool = True) -> MeasSet:
    """Each cell kept independently with probability ``p``."""
    n = 1 << (window.scale + resolution)
    while True:
        mask = rng.random(n) < p
        if mask.any() or not nonempty:
            return MeasSet(window, resolution, mask)


def _level_counts(mask: np.ndarray) -> list[np.ndarray]:
    """Cell counts of every dyadic interval inside the window, finest level first."""
    out = [mask.astype(np.int64)]
    while len(out[-1]) > 1:
        c = out[-1]
        out.append(c[0::2] + c[1::2])
    return out


def superlevel_maximal(E: MeasSet, threshold: Fraction) -> MeasSet:
    """``{x in window : M chi_E(x) > threshold}`` for the dyadic maximal function."""
    n = len(E.mask)
    hit = np.zeros(n, dtype=bool)
    for lev, counts in enumerate(_level_counts(E.mask)):
        # average over a level-lev interval is count / 2^lev; compare count > threshold * 2^lev
        bound = threshold * (1 << lev)
        big = counts > math.floor(bound)
        if big.any():
            hit |= np.repeat(big, 1 << lev)
    return MeasSet(E.window, E.resolution, hit)


def exceptional_set(E_sets: Mapping[int, MeasSet], i: int, C=DEFAULT_C) -> MeasSet:
    """``Omega = union_j {M chi_{E_j} > C |E_j| / |E_i|}``.

    Only points of the window can qualify: a dyadic interval reaching outside
    the window contains it, has length at least twice the window's, and the
    check below makes sure such averages stay under every threshold.
    """
    C = as_fraction(C)
    if C <= 0:
        raise ValueError("C must be positive")
    Ei = E_sets[i]
    mi = Ei.measure
    if mi == 0:
        raise ZeroMeasure(f"|E_{i}| = 0")
    any_set = next(iter(E_sets.values()))
    W = any_set.window
    # exterior intervals J have |J| >= 2|W|; they qualify iff |J| < |E_i| / C
    if 2 * W.length < mi / C:
        raise ExceptionalSetOutsideWindow("enlarge the window: Omega would leave it")
    omega = MeasSet.empty(W, any_set.resolution)
    for j, E in E_sets.items():
        if E.count == 0:
            continue
        # threshold in density units: C |E_j| / |E_i|
        omega = omega | superlevel_maximal(E, C * E.measure / mi)
    return omega


def major_subset(E: MeasSet, omega: MeasSet) -> MeasSet:
    """``E \\ Omega``, requiring ``|Omega| <= |E| / 2``."""
    if 2 * omega.measure > E.measure:
        raise MajorityViolation(f"|Omega| = {omega.measure} exceeds |E|/2 = {E.measure / 2}")
    return E - omega


def inside(I: DyadicInterval, omega: MeasSet) -> bool:
    return omega.density(I) == 1


# ---------------------------------------------------------------------------
# sup over X(E')


@dataclass
class SupEstimate:
    value: float
    witnesses: list
    history: list = field(default_factory=list)


def _ascend(form, fs: list[np.ndarray], masks: list[np.ndarray], max_sweeps: int):
    history = [abs(form.value(fs))]
    for _ in range(max_sweeps):
        changed = False
        for i in range(len(fs)):
            if not masks[i].any():
                continue
            g = form.gradient(fs, i)
            new = np.where(g > 0, 1.0, np.where(g < 0, -1.0, fs[i])) * masks[i]
            if not np.array_equal(new, fs[i]):
                fs[i] = new
                changed = True
        history.append(abs(form.value(fs)))
        if not changed:
            break
    return fs, history


def sup_over_X(form, E_primes: Sequence[MeasSet], restarts: int = 2,
               rng: np.random.Generator | None = None, max_sweeps: int = 30) -> SupEstimate:
    """Lower bound for ``sup |form(f)|`` over ``|f_i| <= chi_{E'_i}``.

    The form is affine in each cell value, so block ascent with
    ``f_i = sign(gradient_i)`` on ``E'_i`` never decreases ``|form|``.  The
    first start is ``f_i = chi_{E'_i}``, then ``restarts`` random sign starts.
    """
    rng = rng or np.random.default_rng(0)
    masks = [E.mask.astype(float) for E in E_primes]
    if any(not m.any() for m in masks):
        return SupEstimate(0.0, [np.zeros_like(m) for m in masks], [0.0])
    best = None
    for r in range(restarts + 1):
        if r == 0:
            fs = [m.copy() for m in masks]
        else:
            fs = [np.where(rng.random(len(m)) < 0.5, -1.0, 1.0) * m for m in masks]
        fs, hist = _ascend(form, fs, masks, max_sweeps)
        val = hist[-1]
        if best is None or val > best.value:
            best = SupEstimate(val, [f.copy() for f in fs], hist)
    return best


def exhaustive_sup(form, E_primes: Sequence[MeasSet]) -> float:
    """Exact sup by enumerating every sign pattern (tiny instances only)."""
    supports = [np.nonzero(E.mask)[0] for E in E_primes]
    total = sum(len(s) for s in supports)
    if total > 16:
        raise ValueError("too many cells for exhaustive search")
    n = len(E_primes[0].mask)
    best = 0.0
    for bits in range(1 << total):
        fs, pos = [], 0
        for s in supports:
            f = np.zeros(n)
            for c in s:
                f[c] = 1.0 if (bits >> pos) & 1 else -1.0
                pos += 1
            fs.append(f)
        best = max(best, abs(form.value(fs)))
    return best


# ---------------------------------------------------------------------------
# experiments


REGIMES = ("A1-A4", "A5-A12", "bht")


@dataclass
class Experiment:
    regime: str = "A1-A4"
    alpha: tuple = ("1/2", "1/2", "1/2", "-1/2")
    scales: tuple = tuple(range(9))
    trials: int = 50
    seed: int = 0
    resolution: int = 3
    min_cells_log2: int = 6             # small windows are refined to at least 2^this cells
    C: str = "16"
    max_density_exponent: float = 3.0   # set densities 2^-u, u uniform in [0, this]
    quartile_fraction: float = 0.25     # share of all admissible quartiles drawn per collection
    restarts: int = 2
    max_sweeps: int = 30
    audit_exact_limit: int = 200
    jobs: int = 1

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")
        self.alpha = tuple(str(as_fraction(a)) for a in self.alpha)
        self.scales = tuple(int(s) for s in self.scales)
        nslots = 3 if self.regime == "bht" else 4
        if len(self.alpha) != nslots:
            raise ValueError(f"regime {self.regime} needs {nslots} exponents")
        bad = self.admissible.bad_index
        if bad is None:
            raise ValueError("alpha needs a negative (bad) coordinate")
        expected = {"A1-A4": (3, 4), "A5-A12": (1, 2), "bht": (1, 2, 3)}[self.regime]
        if bad not in expected:
            raise ValueError(f"bad index {bad} does not belong to regime {self.regime}")

    def resolution_at(self, scale: int) -> int:
        # the ratio is invariant under dyadic dilation, so refining a small
        # window only avoids degenerate (nearly empty) collections
        return max(self.resolution, self.min_cells_log2 - scale)

    @property
    def admissible(self) -> AdmissibleTuple:
        return AdmissibleTuple(tuple(Fraction(a) for a in self.alpha))

    @property
    def bad_index(self) -> int:
        return self.admissible.bad_index

    def to_json(self) -> dict:
        d = asdict(self)
        d["scales"] = list(self.scales)
        d["alpha"] = list(self.alpha)
        return d

    @classmethod
    def from_json(cls, d: Mapping) -> Experiment:
        d = dict(d)
        d["alpha"] = tuple(d["alpha"])
        d["scales"] = tuple(d["scales"])
        return cls(**d)


@dataclass
class TrialResult:
    scale: int
    trial: int
    seed: int
    measures: list
    n_P: int
    n_Q: int
    omega: float
    sup: float
    power: float
    ratio: float | None
    audit_ok: bool
    audit_mode: str
    witnesses: list | None = None

    def row(self) -> dict:
        return {
            "scale": self.scale, "trial": self.trial, "seed": self.seed,
            **{f"E{j + 1}": m for j, m in enumerate(self.measures)},
            "n_P": self.n_P, "n_Q": self.n_Q, "omega": self.omega,
            "sup": self.sup, "power": self.power,
            "ratio": "" if self.ratio is None else self.ratio,
            "audit_ok": int(self.audit_ok), "audit_mode": self.audit_mode,
        }


def _slot_collections(regime: str, bad: int) -> tuple[str, ...]:
    """Which collections lose quartiles inside Omega, in restriction order."""
    if regime == "bht":
        return ("P",)
    if bad in (1, 2):
        return ("Q",)
    return ("P", "Q")


def restrict_outside(coll: Sequence[Quartile], omega: MeasSet) -> list[Quartile]:
    return [P for P in coll if not inside(P.time, omega)]


def _restricted(regime: str, bad: int, P, Q, omega: MeasSet):
    P2, Q2 = list(P), list(Q)
    for which in _slot_collections(regime, bad):
        if which == "P":
            P2 = restrict_outside(P2, omega)
        else:
            # for bad index 3 or 4 a pair (P, Q) needs I_P inside I_Q, so Q with
            # I_Q inside Omega has lost every partner already
            Q2 = restrict_outside(Q2, omega)
    return P2, Q2


def admissible_count(W: DyadicInterval, K: int) -> int:
    """Number of quartiles inside ``W`` whose sub-tiles are resolved at ``K``."""
    return sum(1 << (W.scale + K - 2) for _ in range(-W.scale, K - 1))


def _step(arr: np.ndarray, W: DyadicInterval, K: int) -> StepFunction:
    return StepFunction.from_values(W, K, [int(v) for v in arr])


def _make_form(regime: str, P, Q, W: DyadicInterval, K: int):
    if regime == "bht":
        return BhtForm(P, W, K)
    return LambdaPrimeForm(P, Q, W, K)


def _audit(regime: str, bad: int, P, Q, omega: MeasSet, fs, W, K, exact_limit: int):
    """Restricting to quartiles outside Omega must leave the form unchanged."""
    P2, Q2 = _restricted(regime, bad, P, Q, omega)
    # the bad slot's coefficients vanish on every removed quartile
    from .walsh import PacketTable
    from .phaseplane import subtile
    table = PacketTable.of_float(W, K, fs[bad - 1])
    if regime == "bht" or bad in (3, 4):
        keep, pool = set(P2), P
    else:
        keep, pool = set(Q2), Q
    removed = [R for R in pool if R not in keep]
    # the slot of f_bad: Q1/Q2 for bad 1, 2 and P2/P3 for bad 3, 4 (P_bad in bht)
    j = bad if regime == "bht" or bad in (1, 2) else bad - 1
    if removed:
        from .operators import tile_arrays
        c = table.coeffs_float(*tile_arrays([subtile(R, j) for R in removed]))
        if np.any(c != 0.0):
            return False, "vanishing"
    if len(P) + len(Q) <= exact_limit:
        sf = [_step(f, W, K) for f in fs]
        if regime == "bht":
            return bht_trilinear(P, *sf) == bht_trilinear(P2, *sf), "exact"
        full = quad_form(P, Q, *sf).lam_prime
        cut = quad_form(P2, Q2, *sf).lam_prime if P2 and Q2 else 0
        return full == cut, "exact"
    v1 = _make_form(regime, P, Q, W, K).value(fs)
    v2 = _make_form(regime, P2, Q2, W, K).value(fs) if P2 and (regime == "bht" or Q2) else 0.0
    return math.isclose(v1, v2, rel_tol=1e-9, abs_tol=1e-12), "float"


def run_trial(exp: Experiment, scale: int, trial: int, keep_witness: bool = False) -> TrialResult:
    seed = int(np.random.SeedSequence([exp.seed, scale, trial]).generate_state(1)[0])
    rng = np.random.default_rng(seed)
    K = exp.resolution_at(scale)
    W = DyadicInterval(scale, 0)
    alpha = [Fraction(a) for a in exp.alpha]
    nsets = len(alpha)
    E = {j: random_set(rng, W, K, 2.0 ** -rng.uniform(0, exp.max_density_exponent))
         for j in range(1, nsets + 1)}
    bad = exp.bad_index
    count = max(1, round(exp.quartile_fraction * admissible_count(W, K)))
    P = random_quartiles(rng, W, K, count)
    Q = random_quartiles(rng, W, K, count) if exp.regime != "bht" else []
    omega = exceptional_set(E, bad, Fraction(exp.C))
    Ep = dict(E)
    Ep[bad] = major_subset(E[bad], omega)
    form = _make_form(exp.regime, P, Q, W, K)
    est = sup_over_X(form, [Ep[j] for j in range(1, nsets + 1)], exp.restarts, rng, exp.max_sweeps)
    measures = [float(E[j].measure) for j in range(1, nsets + 1)]
    power = math.prod(m ** float(a) for m, a in zip(measures, alpha))
    ratio = est.value / power if power > 0 else None
    ok, mode = _audit(exp.regime, bad, P, Q, omega, est.witnesses, W, K, exp.audit_exact_limit)
    return TrialResult(scale, trial, seed, measures, len(P), len(Q), float(omega.measure),
                       est.value, power, ratio, ok, mode,
                       [f.tolist() for f in est.witnesses] if keep_witness else None)


def _run_one(args):
    exp, scale, trial = args
    return run_trial(exp, scale, trial)


@dataclass
class ExperimentReport:
    config: dict
    max_ratio: dict
    slope: float
    audits_ok: bool
    trials: list
    worst: dict | None = None

    def to_json(self) -> dict:
        return {"config": self.config, "max_ratio": {str(k): v for k, v in self.max_ratio.items()},
                "slope": self.slope, "audits_ok": self.audits_ok, "worst": self.worst,
                "n_trials": len(self.trials)}

    def to_csv(self) -> str:
        buf = io.StringIO()
        rows = [t.row() for t in self.trials]
        keys = list(rows[0].keys()) if rows else []
        w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        return buf.getvalue()


def loglog_slope(max_ratio: Mapping[int, float]) -> float:
    """Least-squares slope of ``log2(max ratio)`` against the scale exponent."""
    xs = [s for s, r in sorted(max_ratio.items()) if r and r > 0]
    if len(xs) < 2:
        return 0.0
    ys = [math.log2(max_ratio[s]) for s in xs]
    return float(np.polyfit(xs, ys, 1)[0])


def restricted_type_experiment(exp: Experiment, progress: Callable | None = None) -> ExperimentReport:
    jobs = [(exp, s, t) for s in exp.scales for t in range(exp.trials)]
    if exp.jobs > 1:
        with ProcessPoolExecutor(max_workers=exp.jobs) as pool:
            results = list(pool.map(_run_one, jobs, chunksize=4))
    else:
        results = []
        for j in jobs:
            results.append(_run_one(j))
            if progress:
                progress(results[-1])
    max_ratio: dict[int, float] = {}
    for r in results:
        if r.ratio is not None:
            max_ratio[r.scale] = max(max_ratio.get(r.scale, 0.0), r.ratio)
    worst = max((r for r in results if r.ratio is not None), key=lambda r: r.ratio, default=None)
    worst_d = None
    if worst is not None:
        worst_d = run_trial(exp, worst.scale, worst.trial, keep_witness=True).__dict__
    return ExperimentReport(exp.to_json(), max_ratio, loglog_slope(max_ratio),
                            all(r.audit_ok for r in results), results, worst_d)


# ---------------------------------------------------------------------------
# size and energy lemma suite


LEMMAS = ("energy-lemma", "size-lemma", "bht-energy", "bht-energy-2", "bht-size")


@dataclass
class LemmaSample:
    lemma: str
    lhs: float
    rhs: float
    exact_ok: bool | None = None

    @property
    def ratio(self) -> float | None:
        if self.rhs == 0:
            return None if self.lhs == 0 else math.inf
        return self.lhs / self.rhs


def _x_function(rng, E: MeasSet) -> StepFunction:
    """A random element of X(E) with +-1 values on E."""
    signs = np.where(rng.random(len(E.mask)) < 0.5, -1, 1) * E.mask
    return StepFunction.from_values(E.window, E.resolution, [int(v) for v in signs])


def lemma_sample(lemma: str, rng: np.random.Generator, window_scale: int, resolution: int = 2,
                 quartiles_per_cell: float = 1.0, theta: Fraction = Fraction(1, 2)) -> LemmaSample:
    """One random instance of a size/energy lemma, both sides measured."""
    W = DyadicInterval(window_scale, 0)
    K = resolution
    ncells = 1 << (window_scale + K)
    count = max(1, int(quartiles_per_cell * ncells))
    P = random_quartiles(rng, W, K, count)
    p = lambda: 2.0 ** -rng.uniform(0, 3)
    if lemma == "energy-lemma":
        j = int(rng.integers(1, 4))
        vals = [int(v) for v in rng.integers(-3, 4, ncells)]
        f = StepFunction.from_values(W, K, vals)
        e = energy(P, coefficients(P, f, j))
        norm2 = Fraction(sum(v * v for v in vals)) * f.cell_length
        return LemmaSample(lemma, e.value, math.sqrt(norm2), e.square <= norm2)
    if lemma == "size-lemma":
        j = int(rng.integers(1, 4))
        E = random_set(rng, W, K, p())
        s = size(P, coefficients(P, _x_function(rng, E), j))
        rhs = lemma_rhs_bounds({j: E}, P)
        return LemmaSample(lemma, s.value, float(rhs.densities_P[j]))
    E3, E4 = random_set(rng, W, K, p()), random_set(rng, W, K, p())
    Q = random_quartiles(rng, W, K, count)
    a3 = a3_sequence(P, Q, _x_function(rng, E3), _x_function(rng, E4))
    rhs = lemma_rhs_bounds({3: E3, 4: E4}, P, Q, theta)
    if lemma == "bht-energy":
        return LemmaSample(lemma, energy(Q, a3).value, rhs.bht_energy)
    if lemma == "bht-energy-2":
        return LemmaSample(lemma, energy(Q, a3).value, rhs.bht_energy_2)
    if lemma == "bht-size":
        return LemmaSample(lemma, size(Q, a3).value, rhs.bht_size)
    raise ValueError(f"unknown lemma {lemma!r}")


@dataclass
class LemmaSuiteResult:
    lemma: str
    window_scale: int
    constant: float
    samples: int
    exact_ok: bool

    def to_json(self) -> dict:
        return asdict(self)


def lemma_suite(lemma: str, window_scale: int, instances: int, seed: int = 0,
                resolution: int = 2, quartiles_per_cell: float = 1.0) -> LemmaSuiteResult:
    """Empirical constant ``max LHS / RHS`` over random instances."""
    rng = np.random.default_rng([seed, window_scale, LEMMAS.index(lemma)])
    best = 0.0
    exact_ok = True
    for _ in range(instances):
        s = lemma_sample(lemma, rng, window_scale, resolution, quartiles_per_cell)
        r = s.ratio
        if r is not None:
            best = max(best, r)
        if s.exact_ok is False:
            exact_ok = False
    return LemmaSuiteResult(lemma, window_scale, best, instances, exact_ok)


def report_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=str)
