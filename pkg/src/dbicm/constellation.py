"""Gray-labeled PAM/QAM constellations and delayed-bit subset partitions.

Points are stored in label order: ``points[k]`` is the symbol whose m-bit
label is the binary representation of ``k``, bit 0 being the most
significant bit. For QAM the first ``m/2`` bits select the real coordinate
and the remaining ``m/2`` bits the imaginary coordinate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


def _log2_int(n: int) -> int:
    if n < 1 or n & (n - 1):
        raise ValueError(f"{n} is not a power of two")
    return n.bit_length() - 1


@dataclass(frozen=True)
class Constellation:
    """Labeled signal set.

    Attributes
    ----------
    points : ndarray of complex, shape (M,)
        Symbol for each label index (MSB-first labels).
    kind : {"PAM", "QAM"}
    name : str
        Short identifier such as ``"16qam"``; used in reports.
    """

    points: np.ndarray
    kind: str
    name: str = ""
    bits: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        m = _log2_int(len(pts))
        if self.kind not in ("PAM", "QAM"):
            raise ValueError(f"unknown constellation kind {self.kind!r}")
        if self.kind == "QAM" and m % 2:
            raise ValueError("QAM needs an even number of label bits")
        idx = np.arange(len(pts))
        bits = (idx[:, None] >> (m - 1 - np.arange(m))[None, :]) & 1
        bits = bits.astype(np.int8)
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)
        if not self.name:
            object.__setattr__(self, "name", f"{len(pts)}{self.kind.lower()}")

    @property
    def order(self) -> int:
        return len(self.points)

    @property
    def m(self) -> int:
        return _log2_int(self.order)

    @property
    def energy(self) -> float:
        return float(np.mean(np.abs(self.points) ** 2))

    @property
    def is_real(self) -> bool:
        return self.kind == "PAM"

    def label(self, index: int) -> str:
        return format(index, f"0{self.m}b")

    def bit_mask(self, positions: Iterable[int]) -> int:
        """Integer mask selecting the given label positions."""
        mask = 0
        for p in positions:
            if not 0 <= p < self.m:
                raise ValueError(f"bit position {p} out of range for m={self.m}")
            mask |= 1 << (self.m - 1 - p)
        return mask

    def modulate(self, bits: np.ndarray) -> np.ndarray:
        """Map an (..., m) bit array to symbols."""
        bits = np.asarray(bits)
        weights = 1 << (self.m - 1 - np.arange(self.m))
        return self.points[bits @ weights]


def gray_pam(levels: int) -> Constellation:
    """Unit-energy PAM with binary-reflected Gray labels.

    >>> gray_pam(4).points.real * np.sqrt(5)
    array([-3., -1.,  3.,  1.])
    """
    if levels < 2:
        raise ValueError("PAM needs at least 2 levels")
    _log2_int(levels)
    scale = np.sqrt((levels**2 - 1) / 3.0)
    amps = np.arange(-(levels - 1), levels, 2) / scale
    pos = np.arange(levels)
    points = np.empty(levels)
    points[pos ^ (pos >> 1)] = amps
    return Constellation(points.astype(complex), "PAM", f"{levels}pam")


def product(re: Constellation, im: Constellation, name: str = "") -> Constellation:
    """Cartesian product of two PAMs; ``re`` labels come first."""
    if re.kind != "PAM" or im.kind != "PAM":
        raise ValueError("product expects two PAM constellations")
    pts = re.points.real[:, None] + 1j * im.points.real[None, :]
    return Constellation(pts.ravel(), "QAM", name or f"{pts.size}qam")


def gray_qam(order: int) -> Constellation:
    """Square unit-energy QAM built from two identical Gray PAMs."""
    m = _log2_int(order)
    if m % 2 or order < 4:
        raise ValueError(f"{order} is not a square QAM order")
    side = 1 << (m // 2)
    pam = gray_pam(side)
    half = Constellation(pam.points / np.sqrt(2.0), "PAM", pam.name)
    return product(half, half, f"{order}qam")


def real_imag_split(c: Constellation) -> tuple[Constellation, Constellation]:
    """Underlying real and imaginary PAMs of a square QAM.

    The returned PAMs keep the QAM's coordinates (energy 1/2 each for a
    unit-energy QAM), so ``product(*real_imag_split(c))`` reproduces ``c``.
    """
    if c.kind != "QAM":
        raise ValueError("real_imag_split needs a QAM constellation")
    side = 1 << (c.m // 2)
    grid = c.points.reshape(side, side)
    re = Constellation(grid[:, 0].real.astype(complex), "PAM", f"{side}pam")
    im = Constellation(grid[0, :].imag.astype(complex), "PAM", f"{side}pam")
    return re, im


def subset(c: Constellation, known: Sequence[tuple[int, int]]) -> np.ndarray:
    """Label indices of all points consistent with ``(position, value)`` pairs.

    Returns a sorted integer array; ``c.points[subset(c, known)]`` gives the
    point set itself.
    """
    positions = [p for p, _ in known]
    if len(set(positions)) != len(positions):
        raise ValueError("duplicate bit positions in constraint")
    mask = c.bit_mask(positions)
    want = 0
    for p, v in known:
        if v not in (0, 1):
            raise ValueError("bit values must be 0 or 1")
        want |= v << (c.m - 1 - p)
    idx = np.arange(c.order)
    return idx[(idx & mask) == want]


def by_name(name: str) -> Constellation:
    """Parse identifiers like ``"16qam"``, ``"qpsk"``, ``"8pam"``, ``"bpsk"``."""
    key = name.strip().lower().replace("-", "")
    aliases = {"bpsk": "2pam", "qpsk": "4qam"}
    key = aliases.get(key, key)
    for kind, builder in (("qam", gray_qam), ("pam", gray_pam)):
        if key.endswith(kind):
            try:
                order = int(key[: -len(kind)])
            except ValueError:
                break
            return builder(order)
    raise ValueError(f"unrecognised modulation {name!r}")


@dataclass(frozen=True)
class DelayScheme:
    """Per-bit-position delays in slots (``T``).

    ``delayed`` and ``undelayed`` are the position sets with nonzero and zero
    delay respectively.
    """

    delays: tuple[int, ...]

    def __post_init__(self):
        d = tuple(int(t) for t in self.delays)
        if not d:
            raise ValueError("empty delay scheme")
        if min(d) != 0:
            raise ValueError(f"delay scheme {d} must have minimum delay 0")
        object.__setattr__(self, "delays", d)

    @classmethod
    def parse(cls, text: str) -> "DelayScheme":
        """Parse ``"0,1,0,1"`` or ``"[0, 1, 0, 1]"``."""
        body = text.strip().strip("[]()")
        try:
            return cls(tuple(int(tok) for tok in body.replace(" ", "").split(",")))
        except ValueError as exc:
            raise ValueError(f"malformed delay scheme {text!r}: {exc}") from None

    @classmethod
    def zeros(cls, m: int) -> "DelayScheme":
        return cls((0,) * m)

    @property
    def m(self) -> int:
        return len(self.delays)

    @property
    def t_max(self) -> int:
        return max(self.delays)

    @property
    def delayed(self) -> tuple[int, ...]:
        return tuple(i for i, t in enumerate(self.delays) if t != 0)

    @property
    def undelayed(self) -> tuple[int, ...]:
        return tuple(i for i, t in enumerate(self.delays) if t == 0)

    def known_before(self, i: int) -> tuple[int, ...]:
        """Positions decoded before bit ``i`` of the same slot (larger delay)."""
        return tuple(j for j, t in enumerate(self.delays) if t > self.delays[i])

    def halves(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        if self.m % 2:
            raise ValueError("scheme has an odd number of positions")
        h = self.m // 2
        return self.delays[:h], self.delays[h:]

    def __str__(self) -> str:
        return "[" + ", ".join(map(str, self.delays)) + "]"
