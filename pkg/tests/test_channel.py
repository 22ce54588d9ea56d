import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rsembed.channel import (ChannelTriple, SignalParams, SystemDims, TargetChannel, effective_channel,
                             embed_semi_unitary, generate_channels, random_target,
                             sample_received_batch, sample_received_vector)
from rsembed.errors import InvalidDims
from rsembed.numerics import RngStream, complex_gaussian, sample_haar_unitary


def frob_cov_error(y, cov):
    """||sample covariance - cov||_F and its predicted standard error tr(C)/sqrt(T)."""
    t = y.shape[0]
    emp = y.T @ y.conj() / t
    return np.linalg.norm(emp - cov), np.trace(cov).real / math.sqrt(t)


def test_dims_require_m_gt_k():
    with pytest.raises(InvalidDims):
        SystemDims(2, 2, 4)
    with pytest.raises(InvalidDims):
        SystemDims(3, 0, 4)


def test_generate_is_deterministic():
    a = generate_channels(SystemDims(2, 1, 4), RngStream(5, 1))
    b = generate_channels(SystemDims(2, 1, 4), RngStream(5, 1))
    assert a.h0.shape == (2, 1) and a.h1.shape == (2, 4) and a.h2.shape == (4, 1)
    for x, y in zip((a.h0, a.h1, a.h2), (b.h0, b.h1, b.h2)):
        assert np.array_equal(x, y)


def test_generate_streams_differ():
    a = generate_channels(SystemDims(2, 1, 4), RngStream(5, 1))
    b = generate_channels(SystemDims(2, 1, 4), RngStream(5, 2))
    assert not np.array_equal(a.h1, b.h1)


def test_entry_variance_is_one():
    gen = RngStream(6).generator()
    draws = np.stack([generate_channels(SystemDims(4, 2, 16), gen).h1 for _ in range(10_000)])
    p = np.abs(draws.ravel()) ** 2
    se = p.std(ddof=1) / math.sqrt(10_000)  # entries of one draw are independent; be conservative
    assert abs(p.mean() - 1.0) <= 3 * se


def test_effective_channel_zero_theta():
    ch = generate_channels(SystemDims(3, 2, 5), RngStream(1))
    assert np.array_equal(effective_channel(ch, np.zeros((5, 5))), ch.h0)


def test_effective_channel_identity_composition(gen):
    theta = complex_gaussian(gen, (2, 2))
    ch = ChannelTriple(np.zeros((2, 2), complex), np.eye(2, dtype=complex), np.eye(2, dtype=complex))
    assert np.allclose(effective_channel(ch, theta), theta, atol=0, rtol=0)


def test_effective_channel_diagonal_expansion(gen):
    ch = generate_channels(SystemDims(3, 2, 6), RngStream(2))
    alpha = complex_gaussian(gen, 6)
    want = ch.h0 + sum(alpha[i] * np.outer(ch.h1[:, i], ch.h2[i, :]) for i in range(6))
    assert np.abs(effective_channel(ch, np.diag(alpha)) - want).max() <= 1e-12


def test_effective_channel_shape_check():
    ch = generate_channels(SystemDims(3, 2, 6), RngStream(2))
    with pytest.raises(ValueError):
        effective_channel(ch, np.eye(5))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32))
def test_effective_channel_linear_in_theta(seed):
    gen = np.random.default_rng(seed)
    ch = generate_channels(SystemDims(3, 2, 5), gen)
    t1, t2 = complex_gaussian(gen, (5, 5)), complex_gaussian(gen, (5, 5))
    lhs = effective_channel(ch, t1 + t2) - effective_channel(ch, t1) - effective_channel(ch, t2) + ch.h0
    assert np.abs(lhs).max() <= 1e-12


def test_embed_identity():
    assert np.array_equal(embed_semi_unitary(np.eye(3), 2), np.eye(3)[:, :2])


def test_embed_square_is_identity_map():
    u = sample_haar_unitary(4, RngStream(3))
    assert np.array_equal(embed_semi_unitary(u, 4), u)


def test_embed_semi_unitary():
    ut = embed_semi_unitary(sample_haar_unitary(4, RngStream(3)), 2)
    assert np.abs(ut.conj().T @ ut - np.eye(2)).max() <= 1e-12


def test_embed_rejects_k_gt_m():
    with pytest.raises(InvalidDims):
        embed_semi_unitary(np.eye(2), 3)


def test_target_requires_orthonormal_columns():
    with pytest.raises(ValueError):
        TargetChannel(1.0, np.ones((3, 2)))


def test_received_vector_reproducible():
    target = random_target(3, 2, 1.0, RngStream(1))
    p = SignalParams(1.0, 0.5)
    assert np.array_equal(sample_received_vector(target, p, RngStream(9)),
                          sample_received_vector(target, p, RngStream(9)))


def _draws(target, params, n, seed):
    gen = RngStream(seed).generator()
    return np.stack([sample_received_vector(target, params, gen) for _ in range(n)])


def test_received_noise_only():
    target = random_target(3, 2, 1.0, RngStream(1))
    params = SignalParams(0.0, 0.7)
    err, se = frob_cov_error(_draws(target, params, 10_000, 2), 0.7 * np.eye(3))
    assert err <= 3 * se


def test_received_full_rank_target():
    target = random_target(3, 3, 2.0, RngStream(1))
    params = SignalParams(1.5, 0.5, 2.0)
    err, se = frob_cov_error(_draws(target, params, 10_000, 3), (2.0 * 1.5 + 0.5) * np.eye(3))
    assert err <= 3 * se


def test_received_covariance_converges():
    target = random_target(4, 2, 3.0, RngStream(7))
    params = SignalParams(1.0, 0.2, 3.0)
    cov = 3.0 * target.u_tilde @ target.u_tilde.conj().T + 0.2 * np.eye(4)
    err, se = frob_cov_error(_draws(target, params, 100_000, 4), cov)
    assert err <= 3 * se


def test_received_beta_mismatch():
    target = random_target(3, 2, 2.0, RngStream(1))
    with pytest.raises(ValueError):
        sample_received_vector(target, SignalParams(1.0, 1.0, 1.0), RngStream(0))


def test_batch_marginal_covariance_is_isotropic():
    # averaging over Haar U~, E[y y^H] = (K beta Es / M + N0) I
    params = SignalParams(1.0, 0.3, 2.0)
    y = sample_received_batch(4, 2, params, 100_000, RngStream(8))
    err, se = frob_cov_error(y, (2 * 2.0 * 1.0 / 4 + 0.3) * np.eye(4))
    assert err <= 3 * se


def test_snr_convention():
    p = SignalParams.from_snr_db(20.0, beta=4.0, es=2.0)
    assert p.n0 == pytest.approx(0.02)
    assert p.snr == pytest.approx(100.0)
