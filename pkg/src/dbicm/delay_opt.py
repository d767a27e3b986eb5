"""Optimal delay-scheme search through the real/imaginary PAM decomposition.

A square QAM's DBICM capacity under ``[T_re, T_im]`` is the sum of the two
underlying PAM capacities, so the best QAM scheme is ``[T*, T*]`` with
``T*`` the best PAM scheme. The objective is the Es/N0 needed to reach the
target spectral efficiency ``m * rate`` (bits per QAM symbol).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

from . import capacity as cap
from .channel import NoiseModel, esn0_to_ebn0_db
from .constellation import Constellation, DelayScheme, real_imag_split

DEFAULT_WINDOW = (-10.0, 30.0)
SEARCH_SAMPLES = 400_000


def enumerate_schemes(m_half: int, t_max: int = 1) -> list[DelayScheme]:
    """Candidate per-half delay vectors, excluding the all-equal (BICM) ones.

    Vectors whose smallest delay is nonzero are time shifts of a vector with
    minimum zero and are not listed separately.
    """
    if m_half < 1:
        raise ValueError("m_half must be at least 1")
    if t_max < 1:
        raise ValueError("t_max must be at least 1")
    out = []
    for d in itertools.product(range(t_max + 1), repeat=m_half):
        if min(d) == 0 and max(d) != 0:
            out.append(DelayScheme(d))
    return out


def scheme_equivalence_class(scheme: DelayScheme) -> list[DelayScheme]:
    """The scheme and its half-swapped twin, which share the same capacity."""
    a, b = scheme.halves()
    return sorted({scheme, DelayScheme(b + a)}, key=lambda s: s.delays)


@dataclass
class CandidateResult:
    scheme: DelayScheme
    esn0_db: float


@dataclass
class DelaySearchResult:
    """Outcome of a delay-scheme search.

    ``candidates`` holds every evaluated scheme (BICM baseline first) with
    the Es/N0 needed for the target rate; for the PAM path these are
    per-half schemes.
    """

    modulation: str
    rate: float
    t_max: int
    optimal: DelayScheme
    candidates: list[CandidateResult]
    bicm_esn0_db: float
    cm_esn0_db: float
    estimator: str
    samples: int
    seed: int
    equivalence: list[DelayScheme] = field(default_factory=list)

    @property
    def optimal_esn0_db(self) -> float:
        return min(c.esn0_db for c in self.candidates)

    @property
    def gain_db(self) -> float:
        return self.bicm_esn0_db - self.optimal_esn0_db

    @property
    def gap_to_cm_db(self) -> float:
        return self.optimal_esn0_db - self.cm_esn0_db

    def to_dict(self) -> dict:
        m = self.optimal.m
        return {
            "modulation": self.modulation,
            "rate": self.rate,
            "t_max": self.t_max,
            "optimal": list(self.optimal.delays),
            "equivalence_class": [list(s.delays) for s in self.equivalence],
            "optimal_esn0_db": self.optimal_esn0_db,
            "optimal_ebn0_db": float(esn0_to_ebn0_db(self.optimal_esn0_db, self.rate, m)),
            "bicm_esn0_db": self.bicm_esn0_db,
            "cm_esn0_db": self.cm_esn0_db,
            "gain_over_bicm_db": self.gain_db,
            "gap_to_cm_db": self.gap_to_cm_db,
            "estimator": self.estimator,
            "samples": self.samples,
            "seed": self.seed,
        }

    def candidate_rows(self):
        """``(scheme, esn0_db, gain_db)`` rows for CSV output."""
        for c in self.candidates:
            yield str(c.scheme), c.esn0_db, self.bicm_esn0_db - c.esn0_db


def _curve(c: Constellation, pairs, estimator: str, samples: int, seed) -> Callable[[float], float]:
    if estimator == "mc":
        def f(snr_db):
            v = cap.log_ratio_samples(c, NoiseModel.from_esn0_db(snr_db), pairs, samples, seed)
            return c.m - float(v.sum(axis=0).mean())
        return f
    if estimator == "quadrature":
        if not c.is_real:
            raise ValueError("quadrature estimator needs a PAM")
        def f(snr_db):
            return c.m - float(cap.quadrature_log_ratios(c, NoiseModel.from_esn0_db(snr_db), pairs).sum())
        return f
    raise ValueError(f"unknown estimator {estimator!r}")


def _required_snr(c, pairs, target, window, tol, estimator, samples, seed) -> float:
    f = _curve(c, pairs, estimator, samples, seed)
    return cap.snr_for_rate(f, target, window, tol)


def _search(c, schemes, target, window, tol, estimator, samples, seed):
    rows = []
    for s in schemes:
        snr = _required_snr(c, cap.scheme_pairs(c, s), target, window, tol, estimator, samples, seed)
        rows.append(CandidateResult(s, snr))
    best = min(rows, key=lambda r: (r.esn0_db, r.scheme.delays))
    return rows, best


def _check_rate(rate):
    if not 0.0 < rate < 1.0:
        raise ValueError(f"rate must lie in (0, 1), got {rate}")


def optimize_delay(
    c: Constellation,
    rate: float,
    t_max: int = 1,
    window: tuple[float, float] = DEFAULT_WINDOW,
    samples: int = SEARCH_SAMPLES,
    seed=0,
    estimator: str = "mc",
    tol: float = 0.005,
) -> DelaySearchResult:
    """Two-step search: best PAM half-scheme, then duplicate it for both halves.

    Raises ``ValueError`` when the target rate is not reached inside ``window``.
    """
    if c.kind != "QAM":
        raise ValueError("optimize_delay expects a square QAM")
    _check_rate(rate)
    pam, _ = real_imag_split(c)
    half = c.m // 2
    target = half * rate
    schemes = [DelayScheme.zeros(half)] + enumerate_schemes(half, t_max)
    rows, best = _search(pam, schemes, target, window, tol, estimator, samples, seed)
    full = DelayScheme(best.scheme.delays * 2)
    cm_pairs = [(0, pam.order - 1)]
    cm_snr = _required_snr(pam, cm_pairs, target, window, tol, estimator, samples, seed)
    return DelaySearchResult(
        modulation=c.name,
        rate=rate,
        t_max=t_max,
        optimal=full,
        candidates=rows,
        bicm_esn0_db=rows[0].esn0_db,
        cm_esn0_db=cm_snr,
        estimator=estimator,
        samples=samples,
        seed=seed,
        equivalence=scheme_equivalence_class(full),
    )


def exhaustive_search(
    c: Constellation,
    rate: float,
    t_max: int = 1,
    window: tuple[float, float] = DEFAULT_WINDOW,
    samples: int = cap.DEFAULT_SAMPLES,
    seed=0,
    schemes: Sequence[DelayScheme] | None = None,
    tol: float = 0.005,
) -> DelaySearchResult:
    """Search full-length schemes directly on ``c`` (small-M validation path)."""
    _check_rate(rate)
    target = c.m * rate
    if schemes is None:
        schemes = enumerate_schemes(c.m, t_max)
    schemes = [DelayScheme.zeros(c.m)] + [s for s in schemes if s.t_max > 0]
    rows, best = _search(c, schemes, target, window, tol, "mc", samples, seed)
    cm_snr = _required_snr(c, [(0, c.order - 1)], target, window, tol, "mc", samples, seed)
    equiv = scheme_equivalence_class(best.scheme) if c.kind == "QAM" else [best.scheme]
    return DelaySearchResult(
        c.name, rate, t_max, best.scheme, rows, rows[0].esn0_db, cm_snr,
        "mc", samples, seed, equiv,
    )

