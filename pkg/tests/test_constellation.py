import numpy as np
import pytest
from hypothesis import given, strategies as st

from dbicm.constellation import (
    Constellation,
    DelayScheme,
    by_name,
    gray_pam,
    gray_qam,
    product,
    real_imag_split,
    subset,
)

ORDERS = [4, 16, 64, 256, 1024]


def _hamming(a, b):
    return bin(a ^ b).count("1")


@pytest.mark.parametrize("order", ORDERS)
def test_qam_unit_energy(order):
    assert gray_qam(order).energy == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("levels", [2, 4, 8, 16, 32])
def test_pam_unit_energy_and_gray(levels):
    c = gray_pam(levels)
    assert c.energy == pytest.approx(1.0, abs=1e-12)
    order = np.argsort(c.points.real)
    for a, b in zip(order[:-1], order[1:]):
        assert _hamming(a, b) == 1


def test_bpsk_maps_zero_to_minus_one():
    c = gray_pam(2)
    assert c.points[0] == -1 and c.points[1] == 1


@pytest.mark.parametrize("order", [16, 64, 256])
def test_qam_nearest_neighbours_differ_in_one_bit(order):
    c = gray_qam(order)
    d = np.abs(c.points[:, None] - c.points[None, :])
    dmin = d[d > 0].min()
    for a, b in zip(*np.nonzero(np.isclose(d, dmin))):
        assert _hamming(a, b) == 1


def test_qam_is_product_of_its_halves():
    c = gray_qam(64)
    re, im = real_imag_split(c)
    assert np.allclose(product(re, im).points, c.points)
    # halves keep the QAM coordinates: energy 1/2 each
    assert re.energy == pytest.approx(0.5)
    assert im.energy == pytest.approx(0.5)


def test_qam_real_bits_come_first():
    c = gray_qam(16)
    re, _ = real_imag_split(c)
    for k in range(16):
        assert c.points[k].real == pytest.approx(re.points[k >> 2].real)


def test_16qam_labels_match_table():
    c = gray_qam(16)
    s = np.sqrt(10.0)
    # real part coded by the first two bits: 00,01,11,10 from left to right
    assert np.allclose(np.sort(c.points.real[[0, 4, 12, 8]] * s), [-3, -1, 1, 3])
    assert np.allclose(c.points.real[[0, 4, 12, 8]] * s, [-3, -1, 1, 3])


def test_modulate_roundtrip():
    c = gray_qam(16)
    bits = c.bits
    assert np.array_equal(c.modulate(bits), c.points)


def test_bits_msb_first():
    c = gray_qam(16)
    assert c.label(6) == "0110"
    assert list(c.bits[6]) == [0, 1, 1, 0]
    assert c.bit_mask([0]) == 8 and c.bit_mask([3]) == 1


@pytest.mark.parametrize("order", [16, 64])
def test_subset_halves_per_known_bit(order):
    c = gray_qam(order)
    known = []
    for p in range(c.m):
        known.append((p, p % 2))
        idx = subset(c, known)
        assert len(idx) == order >> len(known)
        assert np.all(c.bits[idx][:, p] == p % 2)


def test_subset_rejects_bad_input():
    c = gray_qam(16)
    with pytest.raises(ValueError):
        subset(c, [(0, 1), (0, 0)])
    with pytest.raises(ValueError):
        subset(c, [(0, 2)])
    with pytest.raises(ValueError):
        subset(c, [(4, 0)])


def test_by_name():
    assert by_name("16QAM").order == 16
    assert by_name("qpsk").order == 4
    assert by_name("bpsk").order == 2
    assert by_name("8-pam").kind == "PAM"
    with pytest.raises(ValueError):
        by_name("16apsk")
    with pytest.raises(ValueError):
        gray_qam(32)
    with pytest.raises(ValueError):
        Constellation(np.ones(3), "PAM")


def test_scheme_parse_and_sets():
    s = DelayScheme.parse("[0, 1, 0, 1]")
    assert s.delays == (0, 1, 0, 1)
    assert s.delayed == (1, 3) and s.undelayed == (0, 2)
    assert s.t_max == 1 and s.m == 4
    assert s.known_before(0) == (1, 3) and s.known_before(1) == ()
    assert str(s) == "[0, 1, 0, 1]"
    assert DelayScheme.parse("0,1,0,1") == s


@pytest.mark.parametrize("text", ["0,1,x", "", "1,1,2", "0;1"])
def test_scheme_parse_rejects_malformed(text):
    with pytest.raises(ValueError):
        DelayScheme.parse(text)


@given(st.lists(st.integers(0, 3), min_size=1, max_size=10).filter(lambda d: min(d) == 0))
def test_known_before_are_strictly_later(d):
    s = DelayScheme(tuple(d))
    for i in range(s.m):
        kb = s.known_before(i)
        assert all(d[j] > d[i] for j in kb)
        assert i not in kb
        assert len(kb) == sum(t > d[i] for t in d)


@given(st.integers(1, 5), st.data())
def test_subset_partitions_the_constellation(m_half, data):
    c = gray_qam(1 << (2 * m_half)) if m_half <= 3 else gray_pam(1 << m_half)
    positions = data.draw(st.lists(st.integers(0, c.m - 1), unique=True, max_size=c.m))
    seen = np.zeros(c.order, dtype=int)
    for v in range(1 << len(positions)):
        known = [(p, (v >> k) & 1) for k, p in enumerate(positions)]
        seen[subset(c, known)] += 1
    assert np.all(seen == 1)
