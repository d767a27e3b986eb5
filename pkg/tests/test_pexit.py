import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, optimize

from conftest import pam_cm_capacity_quad
from dbicm.ldpc_construct import (
    BitChannelTypes,
    ChannelAssignment,
    TannerCode,
    constrained_peg,
    peg_from_degrees,
    standard_degrees,
)
from dbicm.pexit import (
    CapacityProfile,
    biawgn_capacity,
    j_exact,
    j_function,
    j_inverse,
    pexit_converges,
    pexit_threshold,
    surrogate_from_capacity,
)


def j_quad(sigma):
    # independent route: adaptive quadrature of 1 - E[log2(1 + exp(-L))], L ~ N(s^2/2, s^2)
    mu = sigma**2 / 2

    def f(x):
        return np.exp(-((x - mu) ** 2) / (2 * sigma**2)) / np.sqrt(2 * np.pi) / sigma * np.logaddexp(0, -x)

    v, _ = integrate.quad(f, mu - 12 * sigma, mu + 12 * sigma, limit=200)
    return 1 - v / np.log(2)


def test_j_limits():
    assert j_function(0.0) == 0.0
    assert j_function(60.0) == pytest.approx(1.0, abs=1e-12)
    assert j_inverse(0.0) == 0.0
    with pytest.raises(ValueError):
        j_function(-1.0)
    with pytest.raises(ValueError):
        j_inverse(1.5)


def test_j_roundtrip():
    x = np.linspace(0.01, 10, 2000)
    assert np.abs(j_inverse(j_function(x)) - x).max() < 1e-6


@pytest.mark.parametrize("sigma", [0.2, 1.0, 2.5, 5.0, 9.0])
def test_j_exact_matches_adaptive_quadrature(sigma):
    assert j_exact(sigma) == pytest.approx(j_quad(sigma), abs=1e-9)


def test_j_approximation_accuracy():
    s = np.linspace(0.01, 10, 200)
    err = np.abs(j_function(s) - np.array([j_exact(x) for x in s]))
    assert err.max() < 1e-3


@given(st.floats(0.0, 20.0), st.floats(0.0, 20.0))
def test_j_monotone(a, b):
    lo, hi = sorted((a, b))
    assert j_function(lo) <= j_function(hi) + 1e-15


@pytest.mark.parametrize("esn0_db", [-3.0, 0.0, 4.0])
def test_biawgn_capacity_matches_quadrature(esn0_db):
    sigma2 = 1 / (2 * 10 ** (esn0_db / 10))
    assert biawgn_capacity(np.sqrt(sigma2)) == pytest.approx(pam_cm_capacity_quad([-1, 1], sigma2), abs=1e-7)


def test_surrogate_limits_and_midpoint():
    assert surrogate_from_capacity(0.0).llr_std == 0.0
    assert surrogate_from_capacity(0.0).noise_std == np.inf
    assert surrogate_from_capacity(1.0).llr_std == np.inf
    s = surrogate_from_capacity(0.5)
    # oracle: solve C(sigma_n) = 0.5 on the quadrature capacity
    sn = optimize.brentq(lambda x: pam_cm_capacity_quad([-1, 1], x**2) - 0.5, 0.1, 10, xtol=1e-12)
    assert s.noise_std == pytest.approx(sn, rel=1e-6)
    assert s.mi == 0.5
    with pytest.raises(ValueError):
        surrogate_from_capacity(1.2)


def test_profile_interpolation_and_bounds():
    p = CapacityProfile(np.array([0.0, 1.0]), np.array([[0.2, 0.4], [0.4, 0.3]]), 2)
    # second column made monotone
    assert p.at(0.5) == pytest.approx([0.3, 0.4])
    with pytest.raises(ValueError):
        p.at(2.0)
    with pytest.raises(ValueError):
        CapacityProfile(np.array([1.0, 0.0]), np.zeros((2, 2)), 2)
    with pytest.raises(ValueError):
        CapacityProfile(np.array([0.0, 1.0]), np.zeros((2, 3)), 2)


def _regular(dv, dc, n, seed=0):
    return peg_from_degrees([dv] * n, n * dv // dc, dc, seed)


def _scalar_exit(dv, dc, sigma_ch, iters):
    icv = 0.0
    for _ in range(iters):
        ivc = j_function(np.sqrt((dv - 1) * j_inverse(icv) ** 2 + sigma_ch**2))
        icv = 1 - j_function(np.sqrt((dc - 1) * j_inverse(1 - ivc) ** 2))
    return j_function(np.sqrt(dv * j_inverse(icv) ** 2 + sigma_ch**2))


@pytest.mark.parametrize("iters", [1, 3, 8])
def test_regular_code_collapses_to_scalar_exit(iters):
    code = _regular(3, 6, 600)
    C = 0.45
    ok, it, app = pexit_converges(code, [C], max_iter=iters, target=2.0)
    ref = _scalar_exit(3, 6, j_inverse(C), iters)
    assert it == iters
    assert np.allclose(app, ref, atol=1e-12)


def test_mi_nondecreasing_over_iterations():
    lam = np.array([0.5, 0.3, 0, 0, 0, 0, 0, 0, 0.2])
    a = ChannelAssignment(np.outer([0.5, 0.5], lam), BitChannelTypes((0, 1, 0, 1)), standard_degrees(10), 8)
    code = constrained_peg(a, 400, 0.5, 0)
    prev = np.zeros(code.n)
    for k in range(1, 15):
        _, _, app = pexit_converges(code, [0.6, 0.3, 0.6, 0.3], max_iter=k, target=2.0)
        assert np.all(app >= prev - 1e-12)
        prev = app


def test_threshold_edges_of_window():
    code = _regular(3, 6, 600)
    assert pexit_threshold(code, CapacityProfile.constant([1.0]), (0.0, 5.0)).threshold_db == 0.0
    res = pexit_threshold(code, CapacityProfile.constant([0.0]), (0.0, 5.0))
    assert res.threshold_db == np.inf and not res.converged


def _bpsk_profile(rate, m=1):
    grid = np.arange(-10.0, 15.0, 0.05)
    caps = [biawgn_capacity(np.sqrt(1 / (2 * 10 ** (g / 10)))) for g in grid]
    return CapacityProfile(grid, np.tile(np.array(caps)[:, None], (1, m)), m)


def test_regular_3_6_threshold_near_known_value():
    # the (3,6) ensemble decodes on BI-AWGN from about Eb/N0 = 1.1 dB
    code = _regular(3, 6, 3000)
    thr = pexit_threshold(code, _bpsk_profile(0.5), (0.0, 3.0), rate=0.5)
    assert 0.9 < thr.threshold_db < 1.4
    assert thr.iterations > 0


def test_threshold_nonincreasing_under_better_channels():
    code = _regular(3, 6, 600)
    p = _bpsk_profile(0.5)
    better = CapacityProfile(p.esn0_db, np.minimum(1.0, p.capacity + 0.02), 1)
    a = pexit_threshold(code, p, (-1.0, 4.0), rate=0.5).threshold_db
    b = pexit_threshold(code, better, (-1.0, 4.0), rate=0.5).threshold_db
    assert b <= a


def test_deleting_check_nodes_does_not_lower_threshold():
    # removing every edge of a check can only lose information; single-edge
    # deletions are not monotone (they also strengthen the touched check)
    code = _regular(3, 6, 600, seed=1)
    p = _bpsk_profile(0.5)
    base = pexit_threshold(code, p, (-1.0, 6.0), rate=0.5).threshold_db
    H = code.H.tocsr()
    rng = np.random.default_rng(0)
    keep = np.sort(rng.choice(code.n_checks, code.n_checks - 20, replace=False))
    pruned = TannerCode.from_matrix(H[keep])
    assert pexit_threshold(pruned, p, (-1.0, 6.0), rate=0.5).threshold_db >= base


def test_single_edge_deletion_can_lower_threshold():
    code = _regular(3, 6, 600, seed=1)
    p = _bpsk_profile(0.5)
    base = pexit_threshold(code, p, (-1.0, 5.0), rate=0.5).threshold_db
    H = code.H.tolil()
    rng = np.random.default_rng(0)
    for v in rng.choice(code.n, 30, replace=False):
        H[H[:, v].nonzero()[0][0], v] = 0
    pruned = TannerCode.from_matrix(H.tocsr())
    assert pexit_threshold(pruned, p, (-1.0, 5.0), rate=0.5).threshold_db < base


@settings(max_examples=10, deadline=None)
@given(st.floats(0.05, 0.95))
def test_convergence_is_monotone_in_capacity(C):
    code = _regular(3, 6, 300)
    ok_lo = pexit_converges(code, [C])[0]
    ok_hi = pexit_converges(code, [min(1.0, C + 0.05)])[0]
    assert ok_hi or not ok_lo
