"""Per-edge EXIT analysis on a concrete Tanner graph.

Each VN sees a binary-input AWGN surrogate whose capacity equals that of the
label position carrying it. Mutual information is tracked per edge with the
Gaussian approximation, and the decoding threshold is the smallest Eb/N0 at
which every a-posteriori MI reaches ``1 - 1e-6``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .capacity import CapacityReport
from .channel import ebn0_to_esn0_db
from .ldpc_construct import TannerCode

# J(sigma) = (1 - 2^(-H1 sigma^(2 H2)))^H3, smooth and invertible in closed form
H1 = 0.3073
H2 = 0.8935
H3 = 1.1064
_I_MAX = 1.0 - 1e-12
TARGET_MI = 1.0 - 1e-6
MAX_ITER = 1000


@numba.njit(cache=True)
def _j(sigma):
    if sigma <= 0.0:
        return 0.0
    return (1.0 - 2.0 ** (-H1 * sigma ** (2.0 * H2))) ** H3


@numba.njit(cache=True)
def _jinv(mi):
    if mi <= 0.0:
        return 0.0
    if mi > _I_MAX:
        mi = _I_MAX
    return (-np.log2(1.0 - mi ** (1.0 / H3)) / H1) ** (1.0 / (2.0 * H2))


def j_function(sigma):
    """MI between a bit and a consistent Gaussian LLR of standard deviation ``sigma``."""
    s = np.asarray(sigma, dtype=float)
    if np.any(s < 0):
        raise ValueError("sigma must be non-negative")
    out = np.where(s > 0, (1.0 - 2.0 ** (-H1 * np.maximum(s, 0) ** (2 * H2))) ** H3, 0.0)
    return out if out.ndim else float(out)


def j_inverse(mi):
    """Inverse of :func:`j_function` on [0, 1)."""
    i = np.asarray(mi, dtype=float)
    if np.any((i < 0) | (i > 1)):
        raise ValueError("mutual information must lie in [0, 1]")
    i = np.minimum(i, _I_MAX)
    with np.errstate(divide="ignore"):
        out = np.where(i > 0, (-np.log2(1.0 - i ** (1.0 / H3)) / H1) ** (1.0 / (2 * H2)), 0.0)
    return out if out.ndim else float(out)


def j_exact(sigma: float, order: int = 200) -> float:
    """Reference J by Gauss-Hermite integration of ``1 - E[log2(1 + e^-L)]``."""
    if sigma <= 0:
        return 0.0
    x, w = np.polynomial.hermite.hermgauss(order)
    llr = sigma**2 / 2 + np.sqrt(2.0) * sigma * x
    return float(1.0 - (w @ np.logaddexp(0.0, -llr)) / np.sqrt(np.pi) / np.log(2.0))


def biawgn_capacity(noise_std: float) -> float:
    """Capacity of BPSK (+-1) over real AWGN with standard deviation ``noise_std``."""
    if noise_std <= 0:
        return 1.0
    return j_exact(2.0 / noise_std)


@dataclass(frozen=True)
class SurrogateChannel:
    """Binary-input AWGN channel matched to a bit-channel capacity.

    ``llr_std`` is the standard deviation of its consistent channel LLR and
    ``noise_std`` the equivalent BPSK noise level (inf when useless).
    """

    capacity: float
    llr_std: float

    @property
    def noise_std(self) -> float:
        return np.inf if self.llr_std == 0 else 2.0 / self.llr_std

    @property
    def mi(self) -> float:
        return self.capacity


def surrogate_from_capacity(C: float, tol: float = 1e-12) -> SurrogateChannel:
    """Binary-input AWGN surrogate whose exact capacity equals ``C``."""
    if not 0.0 <= C <= 1.0:
        raise ValueError("capacity must lie in [0, 1]")
    if C == 0.0:
        return SurrogateChannel(0.0, 0.0)
    if C == 1.0:
        return SurrogateChannel(1.0, np.inf)
    lo, hi = 0.0, 1.0
    while j_exact(hi) < C:
        hi *= 2.0
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if j_exact(mid) < C:
            lo = mid
        else:
            hi = mid
    return SurrogateChannel(float(C), 0.5 * (lo + hi))


@dataclass
class CapacityProfile:
    """Capacity of each label position as a function of Es/N0.

    ``capacity[g, p]`` is the capacity of position ``p`` at ``esn0_db[g]``;
    values between grid points are interpolated linearly in dB.
    """

    esn0_db: np.ndarray
    capacity: np.ndarray
    m: int

    def __post_init__(self):
        self.esn0_db = np.asarray(self.esn0_db, dtype=float)
        self.capacity = np.clip(np.asarray(self.capacity, dtype=float), 0.0, 1.0)
        if self.capacity.shape != (len(self.esn0_db), self.m):
            raise ValueError("capacity grid shape mismatch")
        if np.any(np.diff(self.esn0_db) <= 0):
            raise ValueError("Es/N0 grid must be increasing")
        # enforce monotonicity against Monte-Carlo jitter
        self.capacity = np.maximum.accumulate(self.capacity, axis=0)

    @classmethod
    def from_report(cls, report: CapacityReport) -> "CapacityProfile":
        return cls(report.snr_db, report.capacity, report.m)

    @classmethod
    def constant(cls, values, lo: float = -20.0, hi: float = 40.0) -> "CapacityProfile":
        v = np.asarray(values, dtype=float)
        return cls(np.array([lo, hi]), np.vstack([v, v]), len(v))

    def at(self, esn0_db: float) -> np.ndarray:
        if esn0_db < self.esn0_db[0] or esn0_db > self.esn0_db[-1]:
            raise ValueError(f"Es/N0 {esn0_db:.3f} dB outside the profile grid")
        return np.array([np.interp(esn0_db, self.esn0_db, self.capacity[:, p]) for p in range(self.m)])


@numba.njit(cache=True)
def _pexit_kernel(vn_ptr, vn_cn, cn_ptr, cn_edge, sigma_ch, max_iter, target):
    n = vn_ptr.shape[0] - 1
    n_checks = cn_ptr.shape[0] - 1
    n_edges = vn_cn.shape[0]
    i_cv = np.zeros(n_edges)
    i_vc = np.zeros(n_edges)
    app = np.zeros(n)
    prev_min = -1.0
    for it in range(1, max_iter + 1):
        for v in range(n):
            s = sigma_ch[v] ** 2
            for e in range(vn_ptr[v], vn_ptr[v + 1]):
                s += _jinv(i_cv[e]) ** 2
            app[v] = _j(np.sqrt(s))
            for e in range(vn_ptr[v], vn_ptr[v + 1]):
                r = s - _jinv(i_cv[e]) ** 2
                i_vc[e] = _j(np.sqrt(max(r, 0.0)))
        for c in range(n_checks):
            t = 0.0
            for k in range(cn_ptr[c], cn_ptr[c + 1]):
                t += _jinv(1.0 - i_vc[cn_edge[k]]) ** 2
            for k in range(cn_ptr[c], cn_ptr[c + 1]):
                e = cn_edge[k]
                r = t - _jinv(1.0 - i_vc[e]) ** 2
                i_cv[e] = 1.0 - _j(np.sqrt(max(r, 0.0)))
        lo = 1.0
        for v in range(n):
            s = sigma_ch[v] ** 2
            for e in range(vn_ptr[v], vn_ptr[v + 1]):
                s += _jinv(i_cv[e]) ** 2
            app[v] = _j(np.sqrt(s))
            lo = min(lo, app[v])
        if lo >= target:
            return True, it, app
        if lo - prev_min < 1e-12 and it > 1:
            return False, it, app
        prev_min = lo
    return False, max_iter, app


def _edge_layout(code: TannerCode):
    cn_of_edge = code.vn_cn
    order = np.argsort(cn_of_edge, kind="stable").astype(np.int64)
    cn_ptr = np.zeros(code.n_checks + 1, dtype=np.int64)
    cn_ptr[1:] = np.cumsum(np.bincount(cn_of_edge, minlength=code.n_checks))
    return code.vn_ptr.astype(np.int64), cn_of_edge.astype(np.int64), cn_ptr, order


def vn_llr_std(code: TannerCode, capacities: np.ndarray) -> np.ndarray:
    """Surrogate LLR standard deviation per VN from per-position capacities."""
    m = len(capacities)
    sig = j_inverse(np.clip(capacities, 0.0, 1.0))
    return np.asarray(sig, dtype=float)[np.arange(code.n) % m]


def pexit_converges(code: TannerCode, capacities, max_iter: int = MAX_ITER, target: float = TARGET_MI):
    """Run the per-edge MI recursion at fixed per-position capacities.

    Returns ``(converged, iterations, app_mi)``.
    """
    layout = _edge_layout(code)
    ok, it, app = _pexit_kernel(*layout, vn_llr_std(code, np.asarray(capacities, float)), max_iter, target)
    return bool(ok), int(it), app


@dataclass
class ThresholdResult:
    threshold_db: float  # Eb/N0; inf when above the window
    iterations: int
    evaluations: int

    @property
    def converged(self) -> bool:
        return np.isfinite(self.threshold_db)


def pexit_threshold(
    code: TannerCode,
    profile: CapacityProfile,
    window: tuple[float, float],
    tol: float = 0.01,
    max_iter: int = MAX_ITER,
    rate: float | None = None,
) -> ThresholdResult:
    """Smallest Eb/N0 (dB) in ``window`` at which the recursion converges.

    ``rate`` defaults to the code's design rate and sets the Eb/N0 to Es/N0
    conversion together with the profile's label size.
    """
    R = code.rate if rate is None else rate
    layout = _edge_layout(code)
    evals = 0

    def run(ebn0):
        nonlocal evals
        evals += 1
        caps = profile.at(float(ebn0_to_esn0_db(ebn0, R, profile.m)))
        ok, it, _ = _pexit_kernel(*layout, vn_llr_std(code, caps), max_iter, TARGET_MI)
        return ok, it

    lo, hi = map(float, window)
    ok, it_hi = run(hi)
    if not ok:
        return ThresholdResult(np.inf, it_hi, evals)
    ok, it = run(lo)
    if ok:
        return ThresholdResult(lo, it, evals)
    it_at = it_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        ok, it = run(mid)
        if ok:
            hi, it_at = mid, it
        else:
            lo = mid
    return ThresholdResult(hi, it_at, evals)
