import numpy as np
import pytest
from hypothesis import given, strategies as st

from dbicm.constellation import DelayScheme, gray_pam, gray_qam
from dbicm.delay_opt import (
    enumerate_schemes,
    exhaustive_search,
    optimize_delay,
    scheme_equivalence_class,
)


@given(st.integers(1, 5), st.integers(1, 3))
def test_enumeration_count_and_shape(m_half, t_max):
    schemes = enumerate_schemes(m_half, t_max)
    assert len(schemes) == (t_max + 1) ** m_half - t_max**m_half - 1
    assert len(set(schemes)) == len(schemes)
    for s in schemes:
        assert s.m == m_half and min(s.delays) == 0 and 0 < s.t_max <= t_max


def test_enumeration_small_cases():
    assert [s.delays for s in enumerate_schemes(2)] == [(0, 1), (1, 0)]
    with pytest.raises(ValueError):
        enumerate_schemes(0)
    with pytest.raises(ValueError):
        enumerate_schemes(2, 0)


def test_equivalence_class():
    eq = scheme_equivalence_class(DelayScheme((0, 1, 1, 0)))
    assert [s.delays for s in eq] == [(0, 1, 1, 0), (1, 0, 0, 1)]
    assert len(scheme_equivalence_class(DelayScheme((0, 1, 0, 1)))) == 1


def test_16qam_quarter_rate_pam_search():
    res = optimize_delay(gray_qam(16), 0.25, estimator="quadrature")
    assert res.optimal.delays == (0, 1, 0, 1)
    assert res.gain_db > 0.4
    assert res.gap_to_cm_db == pytest.approx(0.0, abs=0.02)
    d = res.to_dict()
    assert d["optimal"] == [0, 1, 0, 1]
    assert d["optimal_ebn0_db"] == pytest.approx(d["optimal_esn0_db"])  # m R = 1
    assert len(list(res.candidate_rows())) == 3


def test_pam_route_agrees_with_full_qam_search():
    # independent route: search all 16-QAM schemes directly with Monte Carlo
    c = gray_qam(16)
    half = optimize_delay(c, 0.5, estimator="quadrature")
    full = exhaustive_search(c, 0.5, samples=60_000, tol=0.01)
    assert full.optimal in half.equivalence
    assert full.gain_db == pytest.approx(half.gain_db, abs=0.05)


def test_mc_and_quadrature_estimators_agree():
    c = gray_qam(64)
    q = optimize_delay(c, 0.5, estimator="quadrature")
    m = optimize_delay(c, 0.5, samples=100_000, estimator="mc")
    assert m.optimal in q.equivalence
    assert m.gain_db == pytest.approx(q.gain_db, abs=0.05)


def test_pam_input_uses_direct_search():
    res = exhaustive_search(gray_pam(8), 1 / 3, samples=40_000, tol=0.01)
    assert res.optimal.m == 3
    assert res.gain_db >= 0


def test_rejects_bad_inputs():
    with pytest.raises(ValueError):
        optimize_delay(gray_pam(4), 0.5)
    with pytest.raises(ValueError):
        optimize_delay(gray_qam(16), 1.5)
    with pytest.raises(ValueError):
        optimize_delay(gray_qam(16), 0.99, window=(-10, 0), estimator="quadrature")
    with pytest.raises(ValueError):
        optimize_delay(gray_qam(16), 0.5, estimator="simpson")
