import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dbicm.channel import NoiseModel
from dbicm.constellation import DelayScheme, gray_qam, subset
from dbicm.ldpc_construct import (
    BitChannelTypes,
    ChannelAssignment,
    TannerCode,
    constrained_peg,
    girth,
    standard_degrees,
)
from dbicm.transceiver import (
    BPDecoder,
    Encoder,
    FramePipeline,
    FrameTally,
    bp_decode,
    demap,
    demap_initial,
    demap_with_hard_feedback,
    demap_with_soft_feedback,
    run_bicm_reference,
    run_frame,
    simulate,
)


def tree_code(rng, n_max=16):
    """Random cycle-free Tanner graph on at most ``n_max`` VNs."""
    rows = []
    n = 1
    while True:
        k = int(rng.integers(1, 4))
        if n + k > n_max:
            break
        row = [int(rng.integers(n))] + list(range(n, n + k))
        rows.append(row)
        n += k
    H = np.zeros((len(rows), n), dtype=np.int8)
    for r, cols in enumerate(rows):
        H[r, cols] = 1
    return TannerCode.from_matrix(H)


def exact_posterior(H, llr):
    n = H.shape[1]
    words = np.array(list(itertools.product([0, 1], repeat=n)), dtype=np.int8)
    words = words[~((words @ H.T) % 2).any(axis=1)]
    logw = -(words * llr).sum(axis=1)
    out = np.empty(n)
    for v in range(n):
        out[v] = np.logaddexp.reduce(logw[words[:, v] == 0]) - np.logaddexp.reduce(logw[words[:, v] == 1])
    return out


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_bp_matches_exact_marginals_on_trees(seed):
    rng = np.random.default_rng(seed)
    code = tree_code(rng)
    assert girth(code) == 0
    llr = rng.normal(1.0, 2.0, code.n)
    res = BPDecoder(code, max_iter=2 * code.n, early_stop=False)(llr)
    ref = exact_posterior(code.H.toarray(), llr)
    assert np.array_equal(res.bits, (ref < 0).astype(np.uint8))
    assert np.allclose(res.posterior, ref, atol=1e-6)


def test_qpsk_closed_form():
    c = gray_qam(4)
    rng = np.random.default_rng(0)
    nm = NoiseModel(0.37)
    y = rng.normal(size=1000) + 1j * rng.normal(size=1000)
    L = demap_initial(c, y, nm)
    # bit 0 = 0 on the left half-plane under our labels
    assert np.abs(L[:, 0] - (-np.sqrt(2) * y.real / nm.sigma2)).max() < 1e-9
    assert np.abs(L[:, 1] - (-np.sqrt(2) * y.imag / nm.sigma2)).max() < 1e-9


def test_noiseless_point_reproduces_label():
    c = gray_qam(16)
    L = demap_initial(c, c.points, NoiseModel(1e-4))
    assert np.array_equal((L < 0).astype(int), c.bits)


def test_negating_real_part_flips_only_the_real_sign_bit():
    c = gray_qam(16)
    g = np.linspace(-1.5, 1.5, 31)
    y = (g[:, None] + 1j * g[None, :]).ravel()
    nm = NoiseModel(0.1)
    a = demap_initial(c, y, nm)
    b = demap_initial(c, -y.real + 1j * y.imag, nm)
    assert np.allclose(b[:, 0], -a[:, 0], atol=1e-12)
    assert np.allclose(b[:, 1:], a[:, 1:], atol=1e-12)


def brute_llr(c, y, nm, i, known):
    idx = subset(c, known)
    d = -np.abs(y - c.points[idx]) ** 2 / (2 * nm.sigma2)
    zero = c.bits[idx, i] == 0
    return np.logaddexp.reduce(d[zero]) - np.logaddexp.reduce(d[~zero])


def test_hard_feedback_restricts_to_subset():
    c = gray_qam(16)
    nm = NoiseModel(0.2)
    rng = np.random.default_rng(1)
    y = rng.normal(size=20) + 1j * rng.normal(size=20)
    L = demap_with_hard_feedback(c, y, {1: np.ones(20, int)}, nm)
    assert len(subset(c, [(1, 1)])) == 8
    for s in range(20):
        assert L[s, 0] == pytest.approx(brute_llr(c, y[s], nm, 0, [(1, 1)]), abs=1e-10)
        assert L[s, 2] == pytest.approx(brute_llr(c, y[s], nm, 2, [(1, 1)]), abs=1e-10)


def test_hard_feedback_without_known_bits_is_initial():
    c = gray_qam(16)
    y = np.array([0.3 + 0.1j, -0.9 + 0.4j])
    nm = NoiseModel(0.3)
    assert np.allclose(demap_with_hard_feedback(c, y, {}, nm), demap_initial(c, y, nm))


def test_all_other_bits_known_gives_binary_test():
    c = gray_qam(16)
    nm = NoiseModel(0.25)
    y = np.array([0.2 - 0.5j])
    known = {1: [1], 2: [0], 3: [1]}
    L = demap_with_hard_feedback(c, y, known, nm)[0, 0]
    z0 = c.points[0b0101]
    z1 = c.points[0b1101]
    ref = (np.abs(y[0] - z1) ** 2 - np.abs(y[0] - z0) ** 2) / (2 * nm.sigma2)
    assert L == pytest.approx(ref, abs=1e-12)


def test_consistent_knowledge_sharpens_llrs():
    c = gray_qam(16)
    nm = NoiseModel.from_esn0_db(6.0)
    rng = np.random.default_rng(2)
    x = rng.integers(0, 16, 100_000)
    y = c.points[x] + np.sqrt(nm.sigma2) * (rng.normal(size=x.size) + 1j * rng.normal(size=x.size))
    init = demap_initial(c, y, nm)
    fb = demap_with_hard_feedback(c, y, {1: c.bits[x, 1], 3: c.bits[x, 3]}, nm)
    assert np.abs(fb[:, [0, 2]]).mean() >= np.abs(init[:, [0, 2]]).mean()


def test_soft_feedback_limits_and_monotonicity():
    c = gray_qam(16)
    nm = NoiseModel(0.2)
    y = np.array([0.25 + 0.6j])
    init = demap_initial(c, y, nm)
    assert np.allclose(demap_with_soft_feedback(c, y, np.zeros(4), nm), init)
    hard = demap_with_hard_feedback(c, y, {1: [0]}, nm)
    big = demap_with_soft_feedback(c, y, np.array([0, 60.0, 0, 0]), nm)
    assert np.allclose(big[:, [0, 2, 3]], hard[:, [0, 2, 3]], atol=1e-10)
    sweep = [demap_with_soft_feedback(c, y, np.array([0, L, 0, 0]), nm)[0, 0] for L in np.linspace(0, 30, 61)]
    diffs = np.diff(sweep)
    assert np.all(diffs >= -1e-12) or np.all(diffs <= 1e-12)
    lo, hi = sorted((init[0, 0], hard[0, 0]))
    assert all(lo - 1e-9 <= v <= hi + 1e-9 for v in sweep)


def test_demap_output_is_extrinsic_to_own_prior():
    c = gray_qam(16)
    nm = NoiseModel(0.3)
    y = np.array([0.1 + 0.2j])
    a = demap(c, y, nm, np.array([[5.0, 0, 0, 0]]))
    b = demap(c, y, nm, np.array([[-5.0, 0, 0, 0]]))
    assert a[0, 0] == pytest.approx(b[0, 0])


@pytest.fixture(scope="module")
def small_code():
    lam = np.array([0.55, 0.3, 0, 0, 0, 0, 0, 0, 0.15])
    a = ChannelAssignment(np.outer([0.5, 0.5], lam), BitChannelTypes((0, 1, 0, 1)), standard_degrees(10), 8)
    return constrained_peg(a, 800, 0.5, 0)


def test_encoder_produces_codewords(small_code):
    enc = Encoder(small_code)
    H = small_code.H
    rng = np.random.default_rng(0)
    assert enc.k == small_code.n - enc.rank
    for _ in range(5):
        u = rng.integers(0, 2, enc.k).astype(np.uint8)
        cw = enc.encode(u)
        assert not (H @ cw % 2).any()
        assert np.array_equal(cw[enc.info_positions], u)
    with pytest.raises(ValueError):
        enc.encode(np.zeros(enc.k + 1))


def test_noiseless_codeword_decodes_immediately(small_code):
    enc = Encoder(small_code)
    cw = enc.encode(np.random.default_rng(3).integers(0, 2, enc.k))
    res = bp_decode(small_code, np.where(cw == 0, 30.0, -30.0))
    assert res.success and res.iterations <= 1
    assert np.array_equal(res.bits, cw)


def test_all_zero_codeword_high_snr(small_code):
    c = gray_qam(16)
    nm = NoiseModel.from_ebn0_db(8.0, 0.5, 4)
    rng = np.random.default_rng(4)
    dec = BPDecoder(small_code)
    errors = 0
    for _ in range(100):
        z = c.points[np.zeros(small_code.n // 4, int)]
        y = z + np.sqrt(nm.sigma2) * (rng.normal(size=z.size) + 1j * rng.normal(size=z.size))
        res = dec(demap_initial(c, y, nm).ravel())
        errors += int(res.bits.sum())
    assert errors == 0


def test_zero_delay_pipeline_equals_plain_bicm(small_code):
    c = gray_qam(16)
    nm = NoiseModel.from_ebn0_db(1.5, 0.5, 4)
    enc = Encoder(small_code)
    pipe = FramePipeline(small_code, c, DelayScheme.zeros(4), 5, encoder=enc)
    for seed in range(3):
        assert run_frame(pipe, nm, seed) == run_bicm_reference(small_code, c, nm, 5, seed, enc)


def test_spectral_efficiency(small_code):
    pipe = FramePipeline(small_code, gray_qam(16), DelayScheme((0, 1, 0, 1)), 100)
    assert pipe.spectral_efficiency == pytest.approx(2 * 100 / 101)
    assert round(pipe.spectral_efficiency, 4) == 1.9802


def test_frame_bookkeeping_and_syndromes(small_code):
    c = gray_qam(16)
    pipe = FramePipeline(small_code, c, DelayScheme((0, 1, 0, 1)), 6)
    nm = NoiseModel.from_ebn0_db(1.0, 0.5, 4)
    rng = np.random.default_rng(5)
    info, cws, ys = pipe.transmit(nm, rng)
    assert len(ys) == 7  # T_n + T_max slots
    decoded, flags, demaps = pipe.receive(ys, nm)
    assert demaps == 6 * 4  # every sub-block demapped once, at its decode
    H = small_code.H
    for t in np.nonzero(flags)[0]:
        assert not (H @ decoded[t] % 2).any()
    tally = run_frame(pipe, nm, 9)
    assert tally.decodes == tally.codewords == 6
    assert tally.info_bits == 6 * pipe.encoder.k


def test_vacant_slots_carry_known_zeros(small_code):
    c = gray_qam(16)
    pipe = FramePipeline(small_code, c, DelayScheme((0, 1, 0, 1)), 3)
    cws = np.ones((3, small_code.n), dtype=np.uint8)
    first = pipe._labels(cws, 0)
    last = pipe._labels(cws, 3)
    assert not first[:, [1, 3]].any() and first[:, [0, 2]].all()
    assert not last[:, [0, 2]].any() and last[:, [1, 3]].all()


def test_dbicm_frame_is_deterministic(small_code):
    c = gray_qam(16)
    pipe = FramePipeline(small_code, c, DelayScheme((0, 1, 0, 1)), 4)
    nm = NoiseModel.from_ebn0_db(1.2, 0.5, 4)
    assert run_frame(pipe, nm, 7) == run_frame(pipe, nm, 7)


def test_checkpoint_resume_gives_identical_tallies(small_code, tmp_path):
    c = gray_qam(16)
    pipe = FramePipeline(small_code, c, DelayScheme((0, 1, 0, 1)), 3)
    grid = [1.0, 1.6]
    full = simulate(pipe, grid, frames=4, seed=2)
    ck = tmp_path / "ck.json"
    simulate(pipe, grid[:1], frames=2, seed=2, checkpoint=ck)
    resumed = simulate(pipe, grid, frames=4, seed=2, checkpoint=ck)
    assert [r.row() for r in resumed] == [r.row() for r in full]
    other = FramePipeline(small_code, c, DelayScheme.zeros(4), 3)
    with pytest.raises(ValueError):
        simulate(other, grid, frames=1, seed=2, checkpoint=ck)


def test_simulate_stops_on_error_budget(small_code):
    pipe = FramePipeline(small_code, gray_qam(16), DelayScheme((0, 1, 0, 1)), 2)
    res = simulate(pipe, [0.0], frames=1, seed=0, min_bit_errors=10**9, max_frames=3)
    assert res[0].frames == 3
    assert res[0].tally.ber > 0.01


def test_tally_arithmetic():
    t = FrameTally(3, 100, 1, 2)
    t += FrameTally(1, 100, 0, 2)
    assert t.ber == 0.02 and t.fer == 0.25
    assert np.isnan(FrameTally().ber)


def test_pipeline_validation(small_code):
    with pytest.raises(ValueError):
        FramePipeline(small_code, gray_qam(16), DelayScheme((0, 1)), 3)
    with pytest.raises(ValueError):
        FramePipeline(small_code, gray_qam(16), DelayScheme((0, 1, 0, 1)), 0)
    with pytest.raises(ValueError):
        FramePipeline(small_code, gray_qam(64), DelayScheme.zeros(6), 3)
