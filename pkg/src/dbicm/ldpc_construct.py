"""Irregular LDPC construction with bit-channel-aware variable-node placement.

Degree distributions and channel-assignment matrices use the node
perspective: ``fractions[j]`` is the share of variable nodes (VNs) with
degree ``degrees[j]`` and ``P[i, j]`` the share of all VNs that have degree
``degrees[j]`` and sit on bit-channel type ``i``. VN ``v`` is carried by
label position ``v mod m`` (continuous mapping), so the interleaver is fixed
by the code itself.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np
import scipy.sparse as sp

MIN_VN_DEGREE = 2


def standard_degrees(V: int, lowest: int = MIN_VN_DEGREE) -> np.ndarray:
    """Consecutive VN degrees ``lowest .. lowest + V - 2`` (``V - 1`` entries).

    ``V`` counts the degree-one slot that is never used, so ``V = 10`` gives
    degrees 2..10.
    """
    if V < 2:
        raise ValueError("V must be at least 2")
    return np.arange(lowest, lowest + V - 1)


@dataclass(frozen=True)
class DegreeDistribution:
    """VN degree profile (node perspective) with a concentrated check degree."""

    fractions: np.ndarray
    degrees: np.ndarray
    check_degree: int

    def __post_init__(self):
        f = np.asarray(self.fractions, dtype=float)
        d = np.asarray(self.degrees, dtype=np.int64)
        if f.shape != d.shape or f.ndim != 1:
            raise ValueError("fractions and degrees must be 1-D of equal length")
        if np.any(f < -1e-12) or abs(f.sum() - 1.0) > 1e-9:
            raise ValueError("fractions must be non-negative and sum to 1")
        if np.any(d < 1) or np.any(np.diff(d) <= 0):
            raise ValueError("degrees must be positive and strictly increasing")
        if self.check_degree < 2:
            raise ValueError("check degree must be at least 2")
        object.__setattr__(self, "fractions", np.clip(f, 0.0, 1.0))
        object.__setattr__(self, "degrees", d)

    @property
    def mean_vn_degree(self) -> float:
        return float(self.fractions @ self.degrees)

    @property
    def design_rate(self) -> float:
        return 1.0 - self.mean_vn_degree / self.check_degree

    def edge_fractions(self) -> np.ndarray:
        """Share of edges attached to each degree class."""
        w = self.fractions * self.degrees
        return w / w.sum()


@dataclass(frozen=True)
class BitChannelTypes:
    """Grouping of label positions into types of equal capacity.

    ``type_map[p]`` is the type of label position ``p``; type 0 is the
    strongest.
    """

    type_map: tuple[int, ...]

    def __post_init__(self):
        tm = tuple(int(t) for t in self.type_map)
        if sorted(set(tm)) != list(range(max(tm) + 1)):
            raise ValueError("type indices must be contiguous from 0")
        object.__setattr__(self, "type_map", tm)

    @property
    def m(self) -> int:
        return len(self.type_map)

    @property
    def S(self) -> int:
        return max(self.type_map) + 1

    @property
    def multiplicities(self) -> np.ndarray:
        return np.bincount(self.type_map, minlength=self.S)

    def members(self, i: int) -> tuple[int, ...]:
        return tuple(p for p, t in enumerate(self.type_map) if t == i)

    @classmethod
    def single(cls, m: int) -> "BitChannelTypes":
        return cls((0,) * m)


@dataclass(frozen=True)
class ChannelAssignment:
    """Joint distribution of VN degree and bit-channel type.

    Rows are bit-channel types, columns VN degrees. Valid matrices have
    entries in [0, 1], total mass 1 and row sums ``m_i / m``; their column
    sums are the degree distribution.
    """

    P: np.ndarray
    types: BitChannelTypes
    degrees: np.ndarray
    check_degree: int

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        if P.ndim == 1:
            P = P[None, :]
        d = np.asarray(self.degrees, dtype=np.int64)
        if P.shape != (self.types.S, len(d)):
            raise ValueError(f"P has shape {P.shape}, expected {(self.types.S, len(d))}")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "degrees", d)

    @property
    def row_targets(self) -> np.ndarray:
        return self.types.multiplicities / self.types.m

    @property
    def lam(self) -> np.ndarray:
        return self.P.sum(axis=0)

    def distribution(self) -> DegreeDistribution:
        lam = self.lam
        return DegreeDistribution(lam / lam.sum(), self.degrees, self.check_degree)

    def violation(self) -> float:
        """Largest violation of the box, total-mass and row-sum constraints."""
        P = self.P
        return float(max(
            max(0.0, -P.min()), max(0.0, P.max() - 1.0),
            abs(P.sum() - 1.0),
            np.abs(P.sum(axis=1) - self.row_targets).max(),
        ))

    @classmethod
    def from_distribution(cls, dist: DegreeDistribution, types: BitChannelTypes) -> "ChannelAssignment":
        """Degree mix identical on every type (the channel-oblivious assignment)."""
        P = np.outer(types.multiplicities / types.m, dist.fractions)
        return cls(P, types, dist.degrees, dist.check_degree)


def classify_bit_channels(capacities, stderr=None, atol: float = 2e-3, nsigma: float = 4.0) -> BitChannelTypes:
    """Group label positions whose capacities agree within tolerance.

    ``capacities`` (and optional ``stderr``) hold one value per position at
    the design SNR, e.g. ``report.capacity[g]``. Positions are scanned in
    descending capacity; a new type starts whenever the next capacity falls
    more than ``max(atol, nsigma * combined stderr)`` below the type's first
    member.
    """
    cap = np.asarray(capacities, dtype=float)
    se = np.zeros_like(cap) if stderr is None else np.asarray(stderr, dtype=float)
    order = sorted(range(len(cap)), key=lambda p: (-cap[p], p))
    type_map = [0] * len(cap)
    t, lead = 0, order[0]
    for p in order:
        tol = max(atol, nsigma * np.hypot(se[p], se[lead]))
        if cap[lead] - cap[p] > tol:
            t += 1
            lead = p
        type_map[p] = t
    return BitChannelTypes(tuple(type_map))


def classify_report(report, snr_db: float, **kw) -> BitChannelTypes:
    """Classify the positions of a capacity report at its grid point nearest ``snr_db``."""
    g = int(np.argmin(np.abs(np.asarray(report.snr_db) - snr_db)))
    return classify_bit_channels(report.capacity[g], report.stderr[g], **kw)


# ---------------------------------------------------------------- rounding


def _largest_remainder(x: np.ndarray, total: int) -> np.ndarray:
    base = np.floor(x + 1e-9).astype(np.int64)
    short = total - base.sum()
    if short > 0:
        order = np.argsort(-(x - base), kind="stable")
        base[order[:short]] += 1
    elif short < 0:
        order = np.argsort(x - base, kind="stable")
        for j in order:
            if short == 0:
                break
            if base[j] > 0:
                base[j] -= 1
                short += 1
    return base


def _repair_edges(counts: np.ndarray, ideal: np.ndarray, degrees: np.ndarray, edge_budget: int) -> np.ndarray:
    # shift single nodes between neighbouring degree classes until the edge
    # count matches the check-side budget (or is as close as possible below it)
    counts = counts.copy()
    V = len(counts)
    for _ in range(10 * int(counts.sum()) + 10):
        edges = int(counts @ degrees)
        if edges == edge_budget:
            break
        excess = counts - ideal
        if edges > edge_budget:
            src = [j for j in range(1, V) if counts[j] > 0]
            if not src:
                raise ValueError("cannot reduce the edge count to the check budget")
            j = max(src, key=lambda j: (excess[j], j))
            counts[j] -= 1
            counts[j - 1] += 1
        else:
            src = [j for j in range(V - 1) if counts[j] > 0
                   and counts @ degrees + degrees[j + 1] - degrees[j] <= edge_budget]
            if not src:
                break
            j = max(src, key=lambda j: (excess[j], -j))
            counts[j] -= 1
            counts[j + 1] += 1
    return counts


def round_assignment(a: ChannelAssignment, N: int, rate: float) -> np.ndarray:
    """Integer VN counts per (type, degree) for a length-``N`` code.

    Row sums equal ``N m_i / m`` exactly and the total number of edges equals
    ``N (1 - rate) d_c`` whenever the degree set allows it (never more).
    """
    m = a.types.m
    if N % m:
        raise ValueError(f"N={N} is not divisible by m={m}")
    n_checks = _n_checks(N, rate)
    budget = n_checks * a.check_degree
    rows = (N * a.types.multiplicities) // m
    lam = a.lam
    if lam.sum() <= 0:
        raise ValueError("assignment has no mass")
    ideal_cols = N * lam / lam.sum()
    cols = _largest_remainder(ideal_cols, N)
    cols = _repair_edges(cols, ideal_cols, a.degrees, budget)
    if cols @ a.degrees > budget:
        raise ValueError("degree profile needs more edges than the checks can hold")

    S, V = a.P.shape
    share = np.where(lam > 0, a.P / np.where(lam > 0, lam, 1.0), (a.types.multiplicities / m)[:, None])
    target = share * cols[None, :]
    C = np.floor(target + 1e-9).astype(np.int64)
    for i in range(S):
        while C[i].sum() > rows[i]:
            frac = np.where(C[i] > 0, target[i] - C[i], np.inf)
            C[i, int(np.argmin(frac))] -= 1
    row_def = rows - C.sum(axis=1)
    col_def = cols - C.sum(axis=0)
    while row_def.sum() > 0:
        rem = target - C
        rem = np.where((row_def[:, None] > 0) & (col_def[None, :] > 0), rem, -np.inf)
        i, j = np.unravel_index(int(np.argmax(rem)), rem.shape)
        if not np.isfinite(rem[i, j]):
            raise ValueError("integer assignment infeasible")
        C[i, j] += 1
        row_def[i] -= 1
        col_def[j] -= 1
    return C


def expand_degree_sequences(counts: np.ndarray, degrees: Sequence[int]) -> list[np.ndarray]:
    """Per-type degree lists in ascending blocks, ``counts[i, j]`` copies of ``degrees[j]``."""
    deg = np.asarray(degrees, dtype=np.int64)
    return [np.repeat(deg, row) for row in np.asarray(counts, dtype=np.int64)]


def _n_checks(N: int, rate: float) -> int:
    n = N * (1.0 - rate)
    if abs(n - round(n)) > 1e-6:
        raise ValueError(f"N(1-R) = {n} is not an integer")
    return int(round(n))


# ---------------------------------------------------------------- graph


@dataclass
class TannerCode:
    """Parity-check matrix stored as per-VN check lists.

    ``vn_ptr``/``vn_cn`` form a CSR layout: the checks of VN ``v`` are
    ``vn_cn[vn_ptr[v]:vn_ptr[v+1]]``.
    """

    n: int
    n_checks: int
    vn_ptr: np.ndarray
    vn_cn: np.ndarray
    check_degree: int = 0
    types: BitChannelTypes | None = None
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_matrix(cls, H, **kw) -> "TannerCode":
        H = sp.csc_matrix(H, dtype=np.int8)
        H.sum_duplicates()
        H.eliminate_zeros()
        H.sort_indices()
        if H.data.size and H.data.max() > 1:
            raise ValueError("duplicate edges in parity-check matrix")
        cd = kw.pop("check_degree", int(np.diff(H.tocsr().indptr).max(initial=0)))
        return cls(H.shape[1], H.shape[0], H.indptr.astype(np.int64), H.indices.astype(np.int64),
                   cd, **kw)

    @property
    def rate(self) -> float:
        """Design rate ``1 - checks / N`` (ignores dependent rows)."""
        return 1.0 - self.n_checks / self.n

    @property
    def k(self) -> int:
        return self.n - self.n_checks

    @property
    def n_edges(self) -> int:
        return int(self.vn_ptr[-1])

    @property
    def vn_degrees(self) -> np.ndarray:
        return np.diff(self.vn_ptr)

    @property
    def cn_degrees(self) -> np.ndarray:
        return np.bincount(self.vn_cn, minlength=self.n_checks)

    @property
    def H(self) -> sp.csr_matrix:
        data = np.ones(self.n_edges, dtype=np.int8)
        return sp.csc_matrix((data, self.vn_cn, self.vn_ptr), shape=(self.n_checks, self.n)).tocsr()

    def vn_type(self) -> np.ndarray:
        if self.types is None:
            return np.zeros(self.n, dtype=np.int64)
        tm = np.asarray(self.types.type_map)
        return tm[np.arange(self.n) % self.types.m]

    def measured_counts(self, degrees: Sequence[int]) -> np.ndarray:
        """VN counts per (type, degree) read back from the graph."""
        deg = np.asarray(degrees)
        S = 1 if self.types is None else self.types.S
        idx = np.searchsorted(deg, self.vn_degrees)
        if np.any(idx >= len(deg)) or np.any(deg[np.minimum(idx, len(deg) - 1)] != self.vn_degrees):
            raise ValueError("graph uses a degree outside the given set")
        C = np.zeros((S, len(deg)), dtype=np.int64)
        np.add.at(C, (self.vn_type(), idx), 1)
        return C

    def measured_assignment(self, degrees: Sequence[int]) -> np.ndarray:
        return self.measured_counts(degrees) / self.n


@numba.njit(cache=True)
def _peg_kernel(vn_deg, n_checks, d_c, seed):
    np.random.seed(seed)
    n = vn_deg.shape[0]
    maxdv = 0
    for v in range(n):
        maxdv = max(maxdv, vn_deg[v])
    vn_adj = -np.ones((n, maxdv), dtype=np.int64)
    vn_cnt = np.zeros(n, dtype=np.int64)
    cn_adj = -np.ones((n_checks, d_c), dtype=np.int64)
    cn_cnt = np.zeros(n_checks, dtype=np.int64)
    dist = np.empty(n_checks, dtype=np.int64)
    queue = np.empty(n_checks, dtype=np.int64)
    vn_seen = np.zeros(n, dtype=np.int64)
    cand = np.empty(n_checks, dtype=np.int64)
    stamp = 0
    for v in range(n):
        for k in range(vn_deg[v]):
            dist[:] = -1
            head = 0
            tail = 0
            stamp += 1
            vn_seen[v] = stamp
            for e in range(vn_cnt[v]):
                c = vn_adj[v, e]
                dist[c] = 0
                queue[tail] = c
                tail += 1
            while head < tail:
                c = queue[head]
                head += 1
                for e in range(cn_cnt[c]):
                    w = cn_adj[c, e]
                    if vn_seen[w] == stamp:
                        continue
                    vn_seen[w] = stamp
                    for f in range(vn_cnt[w]):
                        c2 = vn_adj[w, f]
                        if dist[c2] < 0:
                            dist[c2] = dist[c] + 1
                            queue[tail] = c2
                            tail += 1
            # unreached checks first, otherwise the farthest reachable ones
            ncand = 0
            for c in range(n_checks):
                if cn_cnt[c] < d_c and dist[c] < 0:
                    cand[ncand] = c
                    ncand += 1
            if ncand == 0:
                far = -1
                for c in range(n_checks):
                    if cn_cnt[c] < d_c and dist[c] > 0 and dist[c] > far:
                        far = dist[c]
                for c in range(n_checks):
                    if cn_cnt[c] < d_c and dist[c] == far and far > 0:
                        cand[ncand] = c
                        ncand += 1
            if ncand == 0:
                return vn_adj, vn_cnt, v
            low = d_c
            for t in range(ncand):
                low = min(low, cn_cnt[cand[t]])
            nlow = 0
            for t in range(ncand):
                if cn_cnt[cand[t]] == low:
                    cand[nlow] = cand[t]
                    nlow += 1
            c = cand[np.random.randint(nlow)]
            vn_adj[v, vn_cnt[v]] = c
            vn_cnt[v] += 1
            cn_adj[c, cn_cnt[c]] = v
            cn_cnt[c] += 1
    return vn_adj, vn_cnt, -1


def _four_cycle_vns(vn_sets, cn_sets, v) -> bool:
    seen = set()
    for c in vn_sets[v]:
        for w in cn_sets[c]:
            if w == v:
                continue
            if w in seen:
                return True
            seen.add(w)
    return False


def break_four_cycles(vn_adj, vn_cnt, seed: int = 0, tries: int = 2000) -> int:
    """Remove 4-cycles by swapping check endpoints of two edges, in place.

    With every check socket filled, the last VNs placed by PEG have no free
    choice left and can close 4-cycles. Swapping ``(v, c)`` and ``(w, c')``
    to ``(v, c')`` and ``(w, c)`` keeps every VN and check degree, so the
    degree sequence and channel assignment are untouched. A swap is kept
    only if neither endpoint VN ends up on a 4-cycle. Returns the number of
    VNs still on a 4-cycle.
    """
    n = len(vn_cnt)
    vn_sets = [set(int(c) for c in vn_adj[v, : vn_cnt[v]]) for v in range(n)]
    n_checks = 1 + max((max(s) for s in vn_sets if s), default=-1)
    cn_sets = [set() for _ in range(n_checks)]
    for v, s in enumerate(vn_sets):
        for c in s:
            cn_sets[c].add(v)
    rng = np.random.default_rng([seed, 4])
    bad = [v for v in range(n) if _four_cycle_vns(vn_sets, cn_sets, v)]
    left = 0
    for v in reversed(bad):
        if not _four_cycle_vns(vn_sets, cn_sets, v):
            continue
        fixed = False
        for _ in range(tries):
            c = sorted(vn_sets[v])[rng.integers(len(vn_sets[v]))]
            w = int(rng.integers(n))
            if w == v or not vn_sets[w]:
                continue
            c2 = sorted(vn_sets[w])[rng.integers(len(vn_sets[w]))]
            if c2 in vn_sets[v] or c in vn_sets[w]:
                continue
            _swap(vn_sets, cn_sets, v, c, w, c2)
            if not _four_cycle_vns(vn_sets, cn_sets, v) and not _four_cycle_vns(vn_sets, cn_sets, w):
                fixed = True
                break
            _swap(vn_sets, cn_sets, v, c2, w, c)
        left += not fixed
    for v in range(n):
        vn_adj[v, : vn_cnt[v]] = sorted(vn_sets[v])
    return left


def _swap(vn_sets, cn_sets, v, c, w, c2):
    # (v, c), (w, c2) -> (v, c2), (w, c)
    vn_sets[v].remove(c)
    vn_sets[v].add(c2)
    vn_sets[w].remove(c2)
    vn_sets[w].add(c)
    cn_sets[c].remove(v)
    cn_sets[c].add(w)
    cn_sets[c2].remove(w)
    cn_sets[c2].add(v)


def peg_from_degrees(vn_degrees: Sequence[int], n_checks: int, check_degree: int, seed: int = 0,
                     swap_repair: bool = True) -> TannerCode:
    """Progressive edge growth for a given per-VN degree sequence.

    ``swap_repair`` runs :func:`break_four_cycles` on the finished graph.
    """
    deg = np.asarray(vn_degrees, dtype=np.int64)
    if deg.sum() > n_checks * check_degree:
        raise ValueError("more VN edges than check sockets")
    vn_adj, vn_cnt, failed = _peg_kernel(deg, int(n_checks), int(check_degree), int(seed))
    if failed >= 0:
        raise ValueError(f"no check node with free capacity for VN {failed}")
    if swap_repair:
        break_four_cycles(vn_adj, vn_cnt, seed)
    ptr = np.zeros(len(deg) + 1, dtype=np.int64)
    ptr[1:] = np.cumsum(vn_cnt)
    cn = np.concatenate([np.sort(vn_adj[v, : vn_cnt[v]]) for v in range(len(deg))]) if len(deg) else np.zeros(0, np.int64)
    return TannerCode(len(deg), int(n_checks), ptr, cn.astype(np.int64), int(check_degree), seed=int(seed))


def interleave_degrees(seqs: Sequence[np.ndarray], types: BitChannelTypes) -> np.ndarray:
    """Degree of each VN under the continuous mapping.

    VN ``v`` takes the next unused entry of ``seqs[type_map[v mod m]]``.
    """
    tm = types.type_map
    m = types.m
    N = sum(len(s) for s in seqs)
    counter = [0] * len(seqs)
    out = np.empty(N, dtype=np.int64)
    for v in range(N):
        t = tm[v % m]
        if counter[t] >= len(seqs[t]):
            raise ValueError(f"type {t} ran out of degrees at VN {v}")
        out[v] = seqs[t][counter[t]]
        counter[t] += 1
    return out


def constrained_peg(a: ChannelAssignment, N: int, rate: float, seed: int = 0) -> TannerCode:
    """PEG construction honouring the channel assignment ``a``."""
    counts = round_assignment(a, N, rate)
    seqs = expand_degree_sequences(counts, a.degrees)
    order = interleave_degrees(seqs, a.types)
    code = peg_from_degrees(order, _n_checks(N, rate), a.check_degree, seed)
    code.types = a.types
    code.meta = {"counts": counts.tolist(), "degrees": a.degrees.tolist()}
    return code


def conventional_peg(dist: DegreeDistribution, N: int, rate: float, seed: int = 0, m: int = 1) -> TannerCode:
    """PEG with a single bit-channel type (degree placement ignores the channel)."""
    a = ChannelAssignment.from_distribution(dist, BitChannelTypes.single(m))
    return constrained_peg(a, N, rate, seed)


# ---------------------------------------------------------------- girth


@numba.njit(cache=True)
def _girth_kernel(ptr, adj, n_roots):
    n_nodes = ptr.shape[0] - 1
    best = 1 << 30
    dist = np.empty(n_nodes, dtype=np.int64)
    parent = np.empty(n_nodes, dtype=np.int64)
    queue = np.empty(n_nodes, dtype=np.int64)
    for r in range(n_roots):
        dist[:] = -1
        dist[r] = 0
        parent[r] = -1
        head = 0
        tail = 1
        queue[0] = r
        while head < tail:
            u = queue[head]
            head += 1
            if 2 * dist[u] + 1 >= best:
                break
            for e in range(ptr[u], ptr[u + 1]):
                w = adj[e]
                if dist[w] < 0:
                    dist[w] = dist[u] + 1
                    parent[w] = u
                    queue[tail] = w
                    tail += 1
                elif w != parent[u]:
                    cyc = dist[u] + dist[w] + 1
                    if cyc < best:
                        best = cyc
    return 0 if best == 1 << 30 else best


def girth(code) -> int:
    """Length of the shortest cycle in the Tanner graph; 0 for a forest.

    Accepts a :class:`TannerCode` or a parity-check matrix.
    """
    if not isinstance(code, TannerCode):
        code = TannerCode.from_matrix(code)
    n, mc = code.n, code.n_checks
    H = code.H.tocoo()
    rows = np.concatenate([H.col, H.row + n])
    cols = np.concatenate([H.row + n, H.col])
    A = sp.csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n + mc, n + mc))
    A.sort_indices()
    return int(_girth_kernel(A.indptr.astype(np.int64), A.indices.astype(np.int64), n))


# ---------------------------------------------------------------- files


def _atomic_write(path, text: str):
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def alist_text(code: TannerCode) -> str:
    """MacKay alist encoding (1-based indices, zero padding)."""
    H = code.H
    Hc = H.tocsc()
    cdeg = np.diff(H.indptr)
    vdeg = np.diff(Hc.indptr)
    lines = [f"{code.n} {code.n_checks}", f"{vdeg.max(initial=0)} {cdeg.max(initial=0)}",
             " ".join(map(str, vdeg)), " ".join(map(str, cdeg))]
    for v in range(code.n):
        idx = list(Hc.indices[Hc.indptr[v]:Hc.indptr[v + 1]] + 1)
        lines.append(" ".join(map(str, idx + [0] * (vdeg.max() - len(idx)))))
    for c in range(code.n_checks):
        idx = list(H.indices[H.indptr[c]:H.indptr[c + 1]] + 1)
        lines.append(" ".join(map(str, idx + [0] * (cdeg.max() - len(idx)))))
    return "\n".join(lines) + "\n"


def write_alist(code: TannerCode, path):
    _atomic_write(path, alist_text(code))


def read_alist(path) -> TannerCode:
    """Parse an alist file (columns listed first)."""
    with open(path) as fh:
        tok = [int(t) for t in fh.read().split()]
    if len(tok) < 4:
        raise ValueError("truncated alist file")
    n, mc = tok[0], tok[1]
    maxv, maxc = tok[2], tok[3]
    pos = 4
    vdeg = tok[pos:pos + n]
    pos += n + mc
    rows, cols = [], []
    for v in range(n):
        entries = tok[pos:pos + maxv]
        pos += maxv
        nz = [e for e in entries if e > 0]
        if len(nz) != vdeg[v]:
            raise ValueError(f"column {v} lists {len(nz)} entries, header says {vdeg[v]}")
        rows += [e - 1 for e in nz]
        cols += [v] * len(nz)
    H = sp.csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(mc, n))
    return TannerCode.from_matrix(H)


def sidecar_dict(code: TannerCode, a: ChannelAssignment | None = None) -> dict:
    out = {
        "n": code.n,
        "n_checks": code.n_checks,
        "check_degree": code.check_degree,
        "seed": code.seed,
        "type_map": None if code.types is None else list(code.types.type_map),
    }
    if a is not None:
        out["degrees"] = a.degrees.tolist()
        out["P"] = a.P.tolist()
    out.update({k: v for k, v in code.meta.items() if k not in out})
    return out


def write_sidecar(code: TannerCode, path, a: ChannelAssignment | None = None, extra: dict | None = None):
    d = sidecar_dict(code, a)
    if extra:
        d.update(extra)
    _atomic_write(path, json.dumps(d, indent=2) + "\n")


def load_code(alist_path, sidecar_path=None) -> TannerCode:
    """Read an alist file and attach the bit-channel types from its sidecar."""
    code = read_alist(alist_path)
    if sidecar_path is not None:
        with open(sidecar_path) as fh:
            meta = json.load(fh)
        if meta.get("type_map") is not None:
            code.types = BitChannelTypes(tuple(meta["type_map"]))
        code.seed = meta.get("seed")
        if meta.get("check_degree"):
            code.check_degree = int(meta["check_degree"])
        code.meta = meta
    return code
