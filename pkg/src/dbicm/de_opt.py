"""Two cascaded differential-evolution stages for LDPC design.

Stage one searches the VN degree distribution with a channel-oblivious PEG
code; stage two keeps that distribution and searches how its degrees are
spread over the bit-channel types. Every candidate is scored by the
per-edge EXIT threshold of a concrete graph of length ``N``.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .ldpc_construct import (
    BitChannelTypes,
    ChannelAssignment,
    DegreeDistribution,
    TannerCode,
    constrained_peg,
    standard_degrees,
)
from .pexit import CapacityProfile, pexit_threshold

log = logging.getLogger(__name__)

WORKERS_ENV = "DBICM_WORKERS"


@dataclass
class DeConfig:
    """Differential-evolution settings.

    ``population=None`` picks ten times the number of free parameters.
    """

    population: int | None = None
    generations: int = 10
    F: float = 0.5
    CR: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.population is not None and self.population < 1:
            raise ValueError("population must be positive")
        if self.population is not None and self.population < 4 and self.generations > 0:
            raise ValueError("mutation needs a population of at least 4")
        if self.generations < 0:
            raise ValueError("generations must be non-negative")
        if not (0.0 <= self.F <= 2.0 and 0.0 <= self.CR <= 1.0):
            raise ValueError("F must lie in [0, 2] and CR in [0, 1]")


@dataclass
class DesignPoint:
    """What a candidate is scored against."""

    profile: CapacityProfile
    rate: float
    window: tuple[float, float]  # Eb/N0 dB
    N: int = 1200
    tol: float = 0.01

    @property
    def m(self) -> int:
        return self.profile.m


@dataclass
class StageResult:
    best: np.ndarray  # lambda (1-D) or P (2-D)
    threshold_db: float
    code: TannerCode | None
    history: list[float] = field(default_factory=list)
    evaluations: int = 0


def lambda_population_size(V: int) -> int:
    return 10 * (V - 1)


def assignment_population_size(S: int, V: int) -> int:
    return 10 * (S * V - 1)


# ---------------------------------------------------------------- repairs


def project_lambda(x, degrees, mean_degree: float) -> np.ndarray:
    """Map ``x`` onto the simplex with the given average VN degree.

    Negative entries are clipped, the vector is normalised, and mass is then
    blended toward the lowest or highest degree until the mean matches.
    """
    d = np.asarray(degrees, dtype=float)
    if not d[0] <= mean_degree <= d[-1]:
        raise ValueError(f"mean degree {mean_degree} outside [{d[0]}, {d[-1]}]")
    lam = np.clip(np.asarray(x, dtype=float), 0.0, None)
    s = lam.sum()
    if abs(s - 1.0) < 1e-12 and abs(lam @ d - mean_degree) < 1e-12:
        return lam  # already feasible: leave untouched

    lam = np.full(len(d), 1.0 / len(d)) if s <= 0 else lam / s
    mu = lam @ d
    edge = np.zeros(len(d))
    if mu > mean_degree:
        edge[0] = 1.0
        t = (mu - mean_degree) / (mu - d[0])
    elif mu < mean_degree:
        edge[-1] = 1.0
        t = (mean_degree - mu) / (d[-1] - mu)
    else:
        return lam
    return (1.0 - t) * lam + t * edge


def repair_assignment(P, row_targets, lam, tol: float = 1e-9, max_iter: int = 20_000):
    """Alternate row and column rescaling until both margins hold to ``tol``.

    Columns with zero target mass are forced to zero; a column whose entries
    all vanish is refilled in proportion to the row targets. Returns ``None``
    when the scaling does not settle.
    """
    r = np.asarray(row_targets, dtype=float)
    c = np.asarray(lam, dtype=float)
    A = np.asarray(P, dtype=float)
    if not np.all(np.isfinite(A)):
        return None
    A = np.clip(A, 0.0, None)
    A[:, c <= 0] = 0.0
    dead = (A.sum(axis=0) <= 0) & (c > 0)
    A[:, dead] = r[:, None] * c[None, dead] / r.sum()
    for _ in range(max_iter):
        rs = A.sum(axis=1)
        A *= np.where(rs > 0, r / np.where(rs > 0, rs, 1.0), 1.0)[:, None]
        cs = A.sum(axis=0)
        A *= np.where(cs > 0, c / np.where(cs > 0, cs, 1.0), 0.0)[None, :]
        err = max(np.abs(A.sum(axis=1) - r).max(), np.abs(A.sum(axis=0) - c).max())
        if err < tol:
            return A
    return None


def mutate_recombine(population, F: float, CR: float, seed, repair=None) -> np.ndarray:
    """rand/1/bin trial vectors, optionally passed through ``repair``.

    With ``CR = 0`` no coordinate is forced from the mutant, so the trial
    equals its parent. A trial that ``repair`` rejects (returns ``None``)
    is replaced by its parent.
    """
    pop = np.asarray(population, dtype=float)
    rng = np.random.default_rng(seed)
    n = pop.shape[0]
    shape = pop.shape[1:]
    flat = pop.reshape(n, -1)
    out = flat.copy()
    if n >= 4:
        dim = flat.shape[1]
        for i in range(n):
            r1, r2, r3 = rng.choice([k for k in range(n) if k != i], 3, replace=False)
            mutant = flat[r1] + F * (flat[r2] - flat[r3])
            take = rng.random(dim) < CR
            if CR > 0:
                take[rng.integers(dim)] = True
            out[i] = np.where(take, mutant, flat[i])
    out = out.reshape((n,) + shape)
    if repair is not None:
        fixed = []
        for x, parent in zip(out, pop):
            r = repair(x)
            fixed.append(parent if r is None else r)
        out = np.array(fixed)
    return out


# ---------------------------------------------------------------- scoring


def _score_lambda(args):
    lam, degrees, d_c, types, point, seed = args
    a = ChannelAssignment.from_distribution(DegreeDistribution(lam, degrees, d_c), types)
    return _score_assignment((a, point, seed))


def _score_assignment(args):
    a, point, seed = args
    try:
        code = constrained_peg(a, point.N, point.rate, seed)
    except ValueError as exc:
        log.debug("construction failed: %s", exc)
        return np.inf, None
    res = pexit_threshold(code, point.profile, point.window, point.tol, rate=point.rate)
    return res.threshold_db, code


def _workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


class _Scorer:
    """Cached, optionally parallel candidate evaluation."""

    def __init__(self, fn, make_args, seed):
        self.fn = fn
        self.make_args = make_args
        self.seed = seed
        self.cache: dict = {}
        self.evaluations = 0

    def key(self, x):
        return (tuple(np.round(np.ravel(x), 4)), self.seed)

    def __call__(self, xs):
        todo = [x for x in xs if self.key(x) not in self.cache]
        uniq = {self.key(x): x for x in todo}
        keys = list(uniq)
        args = [self.make_args(uniq[k]) for k in keys]
        n = _workers()
        if n > 1 and len(args) > 1:
            with ProcessPoolExecutor(n) as ex:
                results = list(ex.map(self.fn, args))
        else:
            results = [self.fn(a) for a in args]
        self.evaluations += len(results)
        for k, r in zip(keys, results):
            self.cache[k] = r
        return [self.cache[self.key(x)] for x in xs]


def _run_de(cfg: DeConfig, init: np.ndarray, repair, scorer: _Scorer) -> StageResult:
    rng = np.random.default_rng(cfg.seed)
    pop = np.array(init)
    scores = scorer(pop)
    fit = np.array([s for s, _ in scores])
    b = int(np.argmin(fit))
    best, best_fit, best_code = pop[b].copy(), fit[b], scores[b][1]
    history = [float(best_fit)]
    for gen in range(cfg.generations):
        trial = mutate_recombine(pop, cfg.F, cfg.CR, rng.integers(2**63), repair)
        tscores = scorer(trial)
        tfit = np.array([s for s, _ in tscores])
        for i in range(len(pop)):
            if tfit[i] <= fit[i]:
                pop[i], fit[i] = trial[i], tfit[i]
                if tfit[i] < best_fit:
                    best, best_fit, best_code = trial[i].copy(), tfit[i], tscores[i][1]
        history.append(float(best_fit))
        log.info("generation %d: best threshold %.4f dB", gen + 1, best_fit)
    if not np.isfinite(best_fit):
        raise ValueError("no candidate converged inside the threshold window")
    return StageResult(best, float(best_fit), best_code, history, scorer.evaluations)


def optimize_lambda(
    cfg: DeConfig,
    point: DesignPoint,
    check_degree: int,
    V: int = 10,
    initial=None,
) -> StageResult:
    """Stage one: degree distribution with a channel-oblivious PEG code."""
    degrees = standard_degrees(V)
    mean = check_degree * (1.0 - point.rate)
    n1 = cfg.population or lambda_population_size(V)
    rng = np.random.default_rng(cfg.seed)
    init = [project_lambda(rng.dirichlet(np.ones(len(degrees))), degrees, mean) for _ in range(n1)]
    if initial is not None:
        init[0] = project_lambda(initial, degrees, mean)
    types = BitChannelTypes.single(point.m)

    def make_args(lam):
        return (lam, degrees, check_degree, types, point, cfg.seed)

    return _run_de(cfg, np.array(init), lambda x: project_lambda(x, degrees, mean),
                   _Scorer(_score_lambda, make_args, cfg.seed))


def optimize_assignment(
    cfg: DeConfig,
    lam,
    types: BitChannelTypes,
    point: DesignPoint,
    check_degree: int,
    jitter: float = 0.5,
) -> StageResult:
    """Stage two: spread the fixed degree distribution over bit-channel types."""
    lam = np.asarray(lam, dtype=float)
    degrees = standard_degrees(len(lam) + 1)
    rows = types.multiplicities / types.m
    base = np.outer(rows, lam)

    def make_args(P):
        return (ChannelAssignment(P, types, degrees, check_degree), point, cfg.seed)

    scorer = _Scorer(_score_assignment, make_args, cfg.seed)
    if types.S == 1:
        thr, code = scorer([base])[0]
        return StageResult(base, float(thr), code, [float(thr)], scorer.evaluations)

    def repair(P):
        return repair_assignment(P, rows, lam)

    n1 = cfg.population or assignment_population_size(types.S, len(lam) + 1)
    rng = np.random.default_rng(cfg.seed)
    init = [base.copy()]
    for _ in range(100 * n1):
        if len(init) >= n1:
            break
        cand = repair(base * rng.uniform(1.0 - jitter, 1.0 + jitter, size=base.shape))
        if cand is not None:
            init.append(cand)
    if len(init) < n1:
        raise ValueError("could not seed the assignment population")
    return _run_de(cfg, np.array(init), repair, scorer)


def design_code(
    cfg_lambda: DeConfig,
    cfg_assign: DeConfig,
    point: DesignPoint,
    types: BitChannelTypes,
    check_degree: int,
    V: int = 10,
):
    """Both stages back to back; returns ``(lambda_stage, assignment_stage)``."""
    s1 = optimize_lambda(cfg_lambda, point, check_degree, V)
    s2 = optimize_assignment(cfg_assign, s1.best, types, point, check_degree)
    return s1, s2
