"""LDPC-coded BICM/DBICM transmission over AWGN.

Codeword ``t`` is split into ``m`` sub-blocks, sub-block ``i`` being the
bits ``i, i+m, i+2m, ...``; sub-block ``i`` rides on label position ``i`` of
slot ``t + T_i``. Slots outside a frame carry known zeros. The receiver
decodes codeword ``t`` at slot ``t + T_max``, once all of its sub-blocks
have arrived, and demaps each sub-block with whatever is known about the
other label positions of its slot: hard bits from successful decodes,
extrinsic LLRs from failed ones, and the vacant zeros.

LLRs are ``log P(b=0) / P(b=1)``.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import asdict, dataclass, field

import numba
import numpy as np

from .channel import NoiseModel, log_likelihood
from .constellation import Constellation, DelayScheme
from .ldpc_construct import TannerCode

LLR_CLAMP = 50.0
MAX_ITER = 100


# ---------------------------------------------------------------- demapping


def _bit_logprob(L: np.ndarray, bit: np.ndarray) -> np.ndarray:
    # log P(b) for prior LLR L (inf allowed); bit broadcast against L
    with np.errstate(invalid="ignore"):
        out = np.where(bit == 0, -np.logaddexp(0.0, -L), -np.logaddexp(0.0, L))
    return np.where(np.isnan(out), 0.0, out)


def demap(c: Constellation, y, nm: NoiseModel, prior=None) -> np.ndarray:
    """Exact per-bit LLRs for symbols ``y`` given prior LLRs of the other bits.

    ``prior`` has shape ``(len(y), m)``; 0 means no knowledge, +-inf a known
    bit. The prior of bit ``i`` itself never enters its own output (the
    result is extrinsic to the prior).
    """
    y = np.atleast_1d(np.asarray(y))
    ll = log_likelihood(nm, y[:, None], c.points[None, :])
    bits = c.bits.astype(np.int64)
    out = np.empty((len(y), c.m))
    if prior is not None:
        prior = np.asarray(prior, dtype=float)
        own = [_bit_logprob(prior[:, [i]], bits[None, :, i]) for i in range(c.m)]
    for i in range(c.m):
        wi = ll
        if prior is not None:
            wi = ll + sum(own[j] for j in range(c.m) if j != i)
        zero = bits[:, i] == 0
        out[:, i] = _lse(wi[:, zero]) - _lse(wi[:, ~zero])
    return out


def _lse(a: np.ndarray) -> np.ndarray:
    mx = a.max(axis=1)
    safe = np.where(np.isfinite(mx), mx, 0.0)
    with np.errstate(divide="ignore"):
        return safe + np.log(np.exp(a - safe[:, None]).sum(axis=1))


def demap_initial(c: Constellation, y, nm: NoiseModel) -> np.ndarray:
    return demap(c, y, nm)


def demap_with_hard_feedback(c: Constellation, y, known: dict[int, np.ndarray], nm: NoiseModel) -> np.ndarray:
    """LLRs with the bits in ``known`` (position -> 0/1 per symbol) fixed."""
    y = np.atleast_1d(np.asarray(y))
    prior = np.zeros((len(y), c.m))
    for p, v in known.items():
        prior[:, p] = np.where(np.asarray(v) == 0, np.inf, -np.inf)
    return demap(c, y, nm, prior)


def demap_with_soft_feedback(c: Constellation, y, prior_llr, nm: NoiseModel) -> np.ndarray:
    """LLRs with soft a-priori knowledge weighting every candidate point."""
    y = np.atleast_1d(np.asarray(y))
    return demap(c, y, nm, np.broadcast_to(prior_llr, (len(y), c.m)))


# ---------------------------------------------------------------- decoding


@dataclass
class DecodeResult:
    bits: np.ndarray
    success: bool
    posterior: np.ndarray
    extrinsic: np.ndarray
    iterations: int


def _cn_layout(code: TannerCode):
    order = np.argsort(code.vn_cn, kind="stable").astype(np.int64)
    cn_ptr = np.zeros(code.n_checks + 1, dtype=np.int64)
    cn_ptr[1:] = np.cumsum(np.bincount(code.vn_cn, minlength=code.n_checks))
    return cn_ptr, order


# Messages live in check-node order. The transcendental steps run as
# vectorised numpy calls (much faster than scalar libm inside numba); the
# kernels below only do the gathers and products.


@numba.njit(cache=True)
def _syndrome_ok(cn_ptr, pos_vn, hard):
    for c in range(cn_ptr.shape[0] - 1):
        s = 0
        for k in range(cn_ptr[c], cn_ptr[c + 1]):
            s ^= hard[pos_vn[k]]
        if s:
            return False
    return True


@numba.njit(cache=True)
def _check_products(cn_ptr, th, out):
    # out[k] = product of th over the other edges of the same check
    lim = 1.0 - 1e-15
    for c in range(cn_ptr.shape[0] - 1):
        lo = cn_ptr[c]
        hi = cn_ptr[c + 1]
        acc = 1.0
        for k in range(lo, hi):
            out[k] = acc
            acc *= th[k]
        acc = 1.0
        for k in range(hi - 1, lo - 1, -1):
            p = out[k] * acc
            acc *= th[k]
            out[k] = min(max(p, -lim), lim)


@numba.njit(cache=True)
def _variable_update(vn_ptr, vn_pos, cn_ptr, pos_vn, llr, c2v, v2c, post, hard):
    for v in range(llr.shape[0]):
        tot = llr[v]
        for k in range(vn_ptr[v], vn_ptr[v + 1]):
            tot += c2v[vn_pos[k]]
        post[v] = tot
        hard[v] = 1 if tot < 0 else 0
        for k in range(vn_ptr[v], vn_ptr[v + 1]):
            q = vn_pos[k]
            v2c[q] = tot - c2v[q]
    return _syndrome_ok(cn_ptr, pos_vn, hard)


class BPDecoder:
    """Flooding sum-product decoder bound to one Tanner graph.

    With ``early_stop`` (the default) decoding ends as soon as the hard
    decisions satisfy every check; otherwise all ``max_iter`` iterations run.
    """

    def __init__(self, code: TannerCode, max_iter: int = MAX_ITER, clamp: float = LLR_CLAMP,
                 early_stop: bool = True):
        self.code = code
        self.max_iter = int(max_iter)
        self.clamp = clamp
        self.early_stop = early_stop
        self.cn_ptr, order = _cn_layout(code)
        edge_vn = np.repeat(np.arange(code.n), code.vn_degrees).astype(np.int64)
        self.pos_vn = edge_vn[order]
        self.vn_pos = np.empty(code.n_edges, dtype=np.int64)
        self.vn_pos[order] = np.arange(code.n_edges)
        self.vn_ptr = code.vn_ptr.astype(np.int64)

    def __call__(self, llr) -> DecodeResult:
        ch = np.clip(np.asarray(llr, dtype=float), -self.clamp, self.clamp)
        post = ch.copy()
        hard = (ch < 0).astype(np.uint8)
        if self.early_stop and _syndrome_ok(self.cn_ptr, self.pos_vn, hard):
            return DecodeResult(hard, True, post, post - ch, 0)
        v2c = ch[self.pos_vn]
        th = np.empty_like(v2c)
        c2v = np.empty_like(v2c)
        for it in range(1, self.max_iter + 1):
            np.tanh(0.5 * v2c, out=th)
            _check_products(self.cn_ptr, th, c2v)
            np.arctanh(c2v, out=c2v)
            c2v *= 2.0
            ok = _variable_update(self.vn_ptr, self.vn_pos, self.cn_ptr, self.pos_vn, ch, c2v, v2c, post, hard)
            if ok and self.early_stop:
                return DecodeResult(hard, True, post, post - ch, it)
        ok = _syndrome_ok(self.cn_ptr, self.pos_vn, hard)
        return DecodeResult(hard, bool(ok), post, post - ch, self.max_iter)


def bp_decode(code: TannerCode, llr, max_iter: int = MAX_ITER) -> DecodeResult:
    return BPDecoder(code, max_iter)(llr)


# ---------------------------------------------------------------- encoding


@numba.njit(cache=True)
def _rref_kernel(rows, n_cols):
    n_rows = rows.shape[0]
    pivots = np.full(n_rows, -1, dtype=np.int64)
    r = 0
    one = np.uint64(1)
    for col in range(n_cols):
        if r == n_rows:
            break
        w = col >> 6
        b = one << np.uint64(col & 63)
        p = -1
        for i in range(r, n_rows):
            if rows[i, w] & b:
                p = i
                break
        if p < 0:
            continue
        if p != r:
            tmp = rows[r].copy()
            rows[r] = rows[p]
            rows[p] = tmp
        for i in range(n_rows):
            if i != r and rows[i, w] & b:
                for k in range(rows.shape[1]):
                    rows[i, k] ^= rows[r, k]
        pivots[r] = col
        r += 1
    return r, pivots


@numba.njit(cache=True)
def _gather_bits(rows, cols):
    n_rows = rows.shape[0]
    words = (cols.shape[0] + 63) >> 6
    out = np.zeros((n_rows, words), dtype=np.uint64)
    one = np.uint64(1)
    for i in range(n_rows):
        for j in range(cols.shape[0]):
            c = cols[j]
            if (rows[i, c >> 6] >> np.uint64(c & 63)) & one:
                out[i, j >> 6] |= one << np.uint64(j & 63)
    return out


@numba.njit(cache=True)
def _parity_kernel(A, u_packed):
    out = np.zeros(A.shape[0], dtype=np.uint8)
    for i in range(A.shape[0]):
        acc = np.uint64(0)
        for k in range(A.shape[1]):
            acc ^= A[i, k] & u_packed[k]
        acc ^= acc >> np.uint64(32)
        acc ^= acc >> np.uint64(16)
        acc ^= acc >> np.uint64(8)
        acc ^= acc >> np.uint64(4)
        acc ^= acc >> np.uint64(2)
        acc ^= acc >> np.uint64(1)
        out[i] = np.uint8(acc & np.uint64(1))
    return out


def _pack(bits: np.ndarray) -> np.ndarray:
    b = np.asarray(bits, dtype=np.uint8)
    pad = (-len(b)) % 64
    b = np.concatenate([b, np.zeros(pad, np.uint8)]).reshape(-1, 64).astype(np.uint64)
    return (b << np.arange(64, dtype=np.uint64)).sum(axis=1, dtype=np.uint64)


class Encoder:
    """Systematic encoder from GF(2) elimination of ``H``.

    ``info_positions`` are the codeword positions carrying information bits
    (the non-pivot columns); ``parity_positions`` the pivot columns.
    """

    def __init__(self, code: TannerCode):
        n, mc = code.n, code.n_checks
        words = (n + 63) >> 6
        rows = np.zeros((mc, words), dtype=np.uint64)
        H = code.H.tocoo()
        np.bitwise_or.at(rows, (H.row, H.col >> 6), np.left_shift(np.uint64(1), (H.col & 63).astype(np.uint64)))
        rank, piv = _rref_kernel(rows, n)
        piv = piv[:rank]
        free = np.setdiff1d(np.arange(n), piv)
        self.n = n
        self.rank = int(rank)
        self.parity_positions = piv
        self.info_positions = free
        self._A = _gather_bits(rows[:rank], free.astype(np.int64))

    @property
    def k(self) -> int:
        return len(self.info_positions)

    def encode(self, info) -> np.ndarray:
        u = np.asarray(info, dtype=np.uint8)
        if u.shape != (self.k,):
            raise ValueError(f"expected {self.k} information bits")
        cw = np.zeros(self.n, dtype=np.uint8)
        cw[self.info_positions] = u
        cw[self.parity_positions] = _parity_kernel(self._A, _pack(u))
        return cw


# ---------------------------------------------------------------- frames


@dataclass
class FrameTally:
    bit_errors: int = 0
    info_bits: int = 0
    codeword_errors: int = 0
    codewords: int = 0
    decodes: int = 0
    demaps: int = 0
    undetected: int = 0

    def __iadd__(self, other: "FrameTally"):
        for k, v in asdict(other).items():
            setattr(self, k, getattr(self, k) + v)
        return self

    @property
    def ber(self) -> float:
        return self.bit_errors / self.info_bits if self.info_bits else float("nan")

    @property
    def fer(self) -> float:
        return self.codeword_errors / self.codewords if self.codewords else float("nan")


class FramePipeline:
    """Sender and receiver state for frames of ``slots`` codewords."""

    def __init__(self, code: TannerCode, c: Constellation, scheme: DelayScheme, slots: int,
                 max_iter: int = MAX_ITER, encoder: Encoder | None = None):
        if code.n % c.m:
            raise ValueError("code length must be a multiple of the label size")
        if scheme.m != c.m:
            raise ValueError("scheme length differs from the label size")
        if slots < 1:
            raise ValueError("a frame needs at least one codeword")
        self.code = code
        self.c = c
        self.scheme = scheme
        self.slots = int(slots)
        self.n_sym = code.n // c.m
        self.decoder = BPDecoder(code, max_iter)
        self.encoder = encoder or Encoder(code)

    @property
    def t_max(self) -> int:
        return self.scheme.t_max

    @property
    def rate(self) -> float:
        """Design rate; rank-deficient ``H`` carries a few extra information bits."""
        return self.code.rate

    @property
    def spectral_efficiency(self) -> float:
        """Information bits per channel use including the frame-edge loss."""
        return self.c.m * self.rate * self.slots / (self.slots + self.t_max)

    def _labels(self, cws: np.ndarray, s: int) -> np.ndarray:
        # (n_sym, m) label bits transmitted in slot s
        out = np.zeros((self.n_sym, self.c.m), dtype=np.uint8)
        for i, d in enumerate(self.scheme.delays):
            t = s - d
            if 0 <= t < self.slots:
                out[:, i] = cws[t, i :: self.c.m]
        return out

    def transmit(self, nm: NoiseModel, rng: np.random.Generator):
        """Draw information, encode and pass every slot through the channel."""
        info = rng.integers(0, 2, size=(self.slots, self.encoder.k), dtype=np.uint8)
        cws = np.stack([self.encoder.encode(u) for u in info])
        std = np.sqrt(nm.sigma2)
        ys = []
        for s in range(self.slots + self.t_max):
            z = self.c.modulate(self._labels(cws, s))
            w = rng.standard_normal((self.n_sym, 2))
            ys.append(z + std * (w[:, 0] + 1j * w[:, 1]))
        return info, cws, ys

    def receive(self, ys, nm: NoiseModel):
        """Decode every codeword of a frame; returns decoded words and flags."""
        m, T = self.c.m, self.scheme.delays
        known: dict[int, np.ndarray] = {}
        decoded = np.zeros((self.slots, self.code.n), dtype=np.uint8)
        flags = np.zeros(self.slots, dtype=bool)
        demaps = 0

        def prior_of(t):
            if t < 0 or t >= self.slots:
                return np.full(self.code.n, np.inf)
            return known.get(t)

        for t in range(self.slots):
            llr = np.empty(self.code.n)
            for i in range(m):
                s = t + T[i]
                prior = np.zeros((self.n_sym, m))
                for j in range(m):
                    if j == i or T[j] <= T[i]:
                        # same or later codeword: only the vacant zeros are known
                        if j != i and not 0 <= s - T[j] < self.slots:
                            prior[:, j] = np.inf
                        continue
                    p = prior_of(s - T[j])
                    prior[:, j] = p[j::m]
                llr[i::m] = demap(self.c, ys[s], nm, prior)[:, i]
                demaps += 1
            res = self.decoder(llr)
            decoded[t] = res.bits
            flags[t] = res.success
            if res.success:
                known[t] = np.where(res.bits == 0, np.inf, -np.inf)
            else:
                known[t] = np.clip(res.extrinsic, -LLR_CLAMP, LLR_CLAMP)
        return decoded, flags, demaps


def run_frame(pipe: FramePipeline, nm: NoiseModel, seed) -> FrameTally:
    rng = np.random.default_rng(seed)
    info, cws, ys = pipe.transmit(nm, rng)
    decoded, flags, demaps = pipe.receive(ys, nm)
    pos = pipe.encoder.info_positions
    errs = (decoded[:, pos] != info).sum(axis=1)
    wrong = (decoded != cws).any(axis=1)
    return FrameTally(
        bit_errors=int(errs.sum()),
        info_bits=int(info.size),
        codeword_errors=int(wrong.sum()),
        codewords=pipe.slots,
        decodes=pipe.slots,
        demaps=demaps,
        undetected=int((wrong & flags).sum()),
    )


def run_bicm_reference(code: TannerCode, c: Constellation, nm: NoiseModel, slots: int, seed,
                       encoder: Encoder | None = None, max_iter: int = MAX_ITER) -> FrameTally:
    """Plain BICM loop: one codeword per slot, no feedback."""
    enc = encoder or Encoder(code)
    dec = BPDecoder(code, max_iter)
    rng = np.random.default_rng(seed)
    n_sym = code.n // c.m
    info = rng.integers(0, 2, size=(slots, enc.k), dtype=np.uint8)
    tally = FrameTally()
    std = np.sqrt(nm.sigma2)
    for t in range(slots):
        cw = enc.encode(info[t])
        z = c.modulate(cw.reshape(n_sym, c.m))
        w = rng.standard_normal((n_sym, 2))
        y = z + std * (w[:, 0] + 1j * w[:, 1])
        res = dec(demap_initial(c, y, nm).ravel())
        e = int((res.bits[enc.info_positions] != info[t]).sum())
        wrong = bool((res.bits != cw).any())
        tally += FrameTally(e, enc.k, int(wrong), 1, 1, c.m, int(wrong and res.success))
    return tally


# ---------------------------------------------------------------- sweeps


@dataclass
class PointResult:
    ebn0_db: float
    tally: FrameTally = field(default_factory=FrameTally)
    frames: int = 0

    def row(self) -> dict:
        t = self.tally
        return {"ebn0_db": self.ebn0_db, "ber": t.ber, "fer": t.fer, "frames": self.frames,
                "bit_errors": t.bit_errors, "codeword_errors": t.codeword_errors,
                "info_bits": t.info_bits, "codewords": t.codewords}


def frame_seed(seed: int, point: int, frame: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), int(point), int(frame)])


def _save_checkpoint(path, points: list[PointResult], meta: dict):
    data = {"meta": meta, "points": [{"ebn0_db": p.ebn0_db, "frames": p.frames, "tally": asdict(p.tally)}
                                     for p in points]}
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    with os.fdopen(fd, "w") as fh:
        json.dump(data, fh)
    os.replace(tmp, path)


def _load_checkpoint(path, meta: dict) -> dict[float, PointResult]:
    if path is None or not os.path.exists(path):
        return {}
    with open(path) as fh:
        data = json.load(fh)
    if data.get("meta") != meta:
        raise ValueError(f"checkpoint {path} belongs to a different configuration")
    return {p["ebn0_db"]: PointResult(p["ebn0_db"], FrameTally(**p["tally"]), p["frames"])
            for p in data["points"]}


def simulate(
    pipe: FramePipeline,
    ebn0_db,
    frames: int,
    seed: int = 0,
    min_bit_errors: int = 0,
    max_frames: int | None = None,
    checkpoint=None,
    meta: dict | None = None,
    progress=None,
) -> list[PointResult]:
    """BER/FER sweep over an Eb/N0 grid (nominal spectral efficiency ``m R``).

    Each point runs at least ``frames`` frames and keeps going until
    ``min_bit_errors`` bit errors are seen or ``max_frames`` is reached.
    Frame ``f`` of point ``p`` always uses seed ``(seed, p, f)``, so an
    interrupted run resumed from ``checkpoint`` gives identical tallies.
    """
    cap = max_frames if max_frames is not None else frames
    meta = dict(meta or {}, seed=seed, slots=pipe.slots, scheme=list(pipe.scheme.delays))
    done = _load_checkpoint(checkpoint, meta)
    out = []
    rate = pipe.code.rate
    for p, eb in enumerate(map(float, ebn0_db)):
        res = done.get(eb, PointResult(eb))
        nm = NoiseModel.from_ebn0_db(eb, rate, pipe.c.m)
        while res.frames < cap and (res.frames < frames or res.tally.bit_errors < min_bit_errors):
            res.tally += run_frame(pipe, nm, frame_seed(seed, p, res.frames))
            res.frames += 1
            if checkpoint is not None:
                _save_checkpoint(checkpoint, out + [res], meta)
            if progress is not None:
                progress(res)
        out.append(res)
    if checkpoint is not None:
        _save_checkpoint(checkpoint, out, meta)
    return out
