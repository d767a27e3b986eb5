"""Reference channel-assignment matrices for 16-QAM and 64-QAM codes.

Each entry is the share of VNs with degree 2..10 (columns) on a bit-channel
type (rows), together with the delay scheme, check degree and the reported
Eb/N0 threshold of the length-1e5 designs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constellation import DelayScheme
from .ldpc_construct import BitChannelTypes, ChannelAssignment, standard_degrees

CHECK_DEGREE = {0.25: 4, 0.4: 5, 0.5: 7}


@dataclass(frozen=True)
class PublishedDesign:
    modulation: str
    rate: float
    scheme: DelayScheme
    groups: tuple[tuple[int, ...], ...]
    P: tuple[tuple[float, ...], ...]
    threshold_db: float

    @property
    def check_degree(self) -> int:
        return CHECK_DEGREE[self.rate]

    @property
    def types(self) -> BitChannelTypes:
        tm = [0] * self.scheme.m
        for t, members in enumerate(self.groups):
            for p in members:
                tm[p] = t
        return BitChannelTypes(tuple(tm))

    def assignment(self) -> ChannelAssignment:
        """Rows rescaled to the exact ``m_i / m`` (the printed values are rounded)."""
        P = np.array(self.P, dtype=float)
        types = self.types
        P = P / P.sum(axis=1, keepdims=True) * (types.multiplicities / types.m)[:, None]
        return ChannelAssignment(P, types, standard_degrees(10), self.check_degree)

    @property
    def is_bicm(self) -> bool:
        return self.scheme.t_max == 0


def _d(mod, rate, scheme, groups, rows, thr):
    return PublishedDesign(mod, rate, DelayScheme(scheme), groups, tuple(map(tuple, rows)), thr)


_G16 = ((0, 2), (1, 3))
_G64 = ((0, 3), (1, 4), (2, 5))
_Z4 = (0, 0, 0, 0)
_Z6 = (0, 0, 0, 0, 0, 0)

DESIGNS = [
    _d("16qam", 0.25, (0, 1, 0, 1), _G16, [
        [0.3866, 0.0575, 0.0000, 0.0006, 0.0003, 0.0000, 0.0000, 0.0113, 0.0436],
        [0.4020, 0.0381, 0.0000, 0.0009, 0.0001, 0.0000, 0.0002, 0.0007, 0.0580]], 0.8398),
    _d("16qam", 0.25, _Z4, _G16, [
        [0.3580, 0.0793, 0.0000, 0.0009, 0.0042, 0.0048, 0.0005, 0.0061, 0.0462],
        [0.4149, 0.0291, 0.0003, 0.0002, 0.0000, 0.0027, 0.0005, 0.0040, 0.0484]], 1.3672),
    _d("16qam", 0.4, (0, 1, 0, 1), _G16, [
        [0.3039, 0.1868, 0.0000, 0.0000, 0.0030, 0.0038, 0.0013, 0.0009, 0.0002],
        [0.3375, 0.0601, 0.0060, 0.0002, 0.0124, 0.0057, 0.0008, 0.0081, 0.0693]], 1.8066),
    _d("16qam", 0.4, _Z4, _G16, [
        [0.4918, 0.0000, 0.0000, 0.0017, 0.0019, 0.0000, 0.0001, 0.0037, 0.0008],
        [0.1672, 0.2141, 0.0034, 0.0005, 0.0066, 0.0000, 0.0513, 0.0567, 0.0001]], 2.0938),
    _d("16qam", 0.5, (0, 1, 0, 1), _G16, [
        [0.3579, 0.0887, 0.0000, 0.0015, 0.0000, 0.0000, 0.0004, 0.0003, 0.0512],
        [0.2623, 0.1219, 0.0000, 0.0017, 0.0016, 0.0000, 0.0193, 0.0018, 0.0913]], 2.5703),
    _d("16qam", 0.5, _Z4, _G16, [
        [0.2457, 0.1819, 0.0029, 0.0000, 0.0001, 0.0013, 0.0004, 0.0093, 0.0583],
        [0.3464, 0.0605, 0.0035, 0.0000, 0.0002, 0.0024, 0.0001, 0.0052, 0.0817]], 2.7266),
    _d("64qam", 0.25, (1, 0, 1, 1, 0, 1), _G64, [
        [0.2552, 0.0098, 0.0006, 0.0000, 0.0021, 0.0001, 0.0006, 0.0043, 0.0605],
        [0.2671, 0.0658, 0.0004, 0.0000, 0.0000, 0.0000, 0.0000, 0.0000, 0.0000],
        [0.2701, 0.0072, 0.0046, 0.0051, 0.0007, 0.0000, 0.0003, 0.0031, 0.0422]], 2.1387),
    _d("64qam", 0.25, _Z6, _G64, [
        [0.2449, 0.0592, 0.0071, 0.0037, 0.0016, 0.0007, 0.0002, 0.0002, 0.0159],
        [0.2109, 0.0264, 0.0012, 0.0004, 0.0038, 0.0015, 0.0001, 0.0002, 0.0887],
        [0.3249, 0.0062, 0.0013, 0.0008, 0.0001, 0.0000, 0.0000, 0.0000, 0.0000]], 2.8516),
    _d("64qam", 0.4, (0, 0, 1, 0, 0, 1), _G64, [
        [0.2058, 0.0033, 0.0065, 0.0162, 0.0000, 0.0011, 0.0054, 0.0711, 0.0240],
        [0.2567, 0.0724, 0.0018, 0.0020, 0.0001, 0.0002, 0.0001, 0.0001, 0.0001],
        [0.2107, 0.1222, 0.0003, 0.0001, 0.0000, 0.0000, 0.0000, 0.0000, 0.0000]], 3.6230),
    _d("64qam", 0.4, _Z6, _G64, [
        [0.2216, 0.0059, 0.0042, 0.0000, 0.0001, 0.0075, 0.0001, 0.0923, 0.0017],
        [0.2230, 0.0964, 0.0003, 0.0000, 0.0002, 0.0107, 0.0000, 0.0008, 0.0019],
        [0.2179, 0.1151, 0.0002, 0.0001, 0.0000, 0.0000, 0.0000, 0.0000, 0.0000]], 4.1504),
    _d("64qam", 0.5, (0, 0, 1, 0, 0, 1), _G64, [
        [0.2401, 0.0071, 0.0005, 0.0010, 0.0002, 0.0000, 0.0000, 0.0005, 0.0840],
        [0.1576, 0.1398, 0.0004, 0.0009, 0.0000, 0.0000, 0.0000, 0.0004, 0.0341],
        [0.1957, 0.0995, 0.0017, 0.0001, 0.0001, 0.0000, 0.0000, 0.0002, 0.0359]], 4.8340),
    _d("64qam", 0.5, _Z6, _G64, [
        [0.1931, 0.0652, 0.0017, 0.0002, 0.0000, 0.0003, 0.0000, 0.0000, 0.0728],
        [0.2215, 0.0855, 0.0005, 0.0015, 0.0001, 0.0001, 0.0000, 0.0001, 0.0240],
        [0.1789, 0.0957, 0.0004, 0.0002, 0.0002, 0.0000, 0.0000, 0.0000, 0.0580]], 5.2051),
]


def lookup(modulation: str, rate: float, dbicm: bool) -> PublishedDesign:
    for d in DESIGNS:
        if d.modulation == modulation and abs(d.rate - rate) < 1e-9 and d.is_bicm != dbicm:
            return d
    raise KeyError(f"no reference design for {modulation} rate {rate} ({'DBICM' if dbicm else 'BICM'})")
