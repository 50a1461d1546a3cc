import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from qfilab import channels as ch
from qfilab import linalg as la

seeds = st.integers(0, 2**32 - 1)


def _random_channel(seed):
    rng = np.random.default_rng(seed)
    d_in, d_out, k = (int(rng.integers(1, 4)) for _ in range(3))
    k = max(k, -(-d_in // d_out))
    return rng, ch.random_channel(d_in, d_out, k, rng)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_complementary_outputs_share_spectrum(seed):
    rng, N = _random_channel(seed)
    psi = la.random_state_vector(N.in_dim, rng)
    P = la.proj(psi)
    b = np.sort(np.linalg.eigvalsh(N.apply(P)))[::-1]
    e = np.sort(np.linalg.eigvalsh(N.apply_complementary(P)))[::-1]
    m = min(b.size, e.size)
    assert_allclose(b[:m], e[:m], atol=1e-10)
    assert_allclose(b[m:], 0, atol=1e-10)
    assert_allclose(e[m:], 0, atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_stinespring_roundtrip_and_isometry(seed):
    rng, N = _random_channel(seed)
    V = ch.stinespring(N)
    assert_allclose(V.conj().T @ V, np.eye(N.in_dim), atol=1e-10)
    M = ch.from_stinespring(V, N.out_dim)
    X = la.random_hermitian(N.in_dim, rng)
    assert_allclose(M.apply(X), N.apply(X), atol=1e-10)
    Y = V @ X @ V.conj().T
    assert_allclose(la.partial_trace(Y, 0, [N.out_dim, N.n_kraus]), N.apply(X), atol=1e-10)
    assert_allclose(la.partial_trace(Y, 1, [N.out_dim, N.n_kraus]), N.apply_complementary(X), atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_adjoint_duality(seed):
    rng, N = _random_channel(seed)
    X = la.random_hermitian(N.in_dim, rng)
    W = la.random_hermitian(N.out_dim, rng)
    assert np.trace(W @ N.apply(X)) == pytest.approx(np.trace(N.adjoint_apply(W) @ X), abs=1e-10)


def test_choi_and_superoperator_agree(rng):
    N = ch.random_channel(2, 3, 2, rng)
    X = la.random_hermitian(2, rng)
    S = ch.superoperator(N)
    assert_allclose((S @ X.reshape(-1)).reshape(3, 3), N.apply(X), atol=1e-12)
    C = ch.choi(N)
    assert np.linalg.eigvalsh(C)[0] > -1e-12
    # tracing the output of the Choi matrix gives the identity for a channel
    assert_allclose(la.partial_trace(C, 0, [2, 3]), np.eye(2), atol=1e-12)


def test_partial_dephasing_action():
    p = 0.3
    N = ch.partial_dephasing_Z(p)
    X = np.array([[0.5, 0.4], [0.4, 0.5]])
    assert_allclose(N.apply(X), [[0.5, 0.4 * (1 - p)], [0.4 * (1 - p), 0.5]], atol=1e-15)


def test_amplitude_damping_decays_excited_level():
    N = ch.amplitude_damping(0.25)
    assert_allclose(N.apply(np.diag([1.0, 0.0])), np.diag([0.75, 0.25]), atol=1e-15)


def test_bit_flip_contracts_z():
    N = ch.bit_flip(0.2)
    assert_allclose(N.apply(la.PAULI_Z), 0.8 * la.PAULI_Z, atol=1e-15)


def test_located_erasure_flags():
    N = ch.located_erasure(1, 1.0, 2)
    out = N.apply(la.proj(la.ket(0, 4)))
    assert out.shape == (6, 6)
    # qubit 1 replaced by the flag level 2
    assert out[2, 2] == pytest.approx(1.0)
    assert N.trace_preserving


def test_iid_matches_tensor_power(rng):
    single = ch.amplitude_damping(0.3)
    iid = ch.IIDChannel(single, 3)
    dense = ch.tensor_power(single, 3)
    X = la.random_hermitian(8, rng)
    assert_allclose(iid.apply(X), dense.apply(X), atol=1e-12)
    assert_allclose(iid.apply_complementary(X), dense.apply_complementary(X), atol=1e-12)
    assert_allclose(iid.adjoint_apply(X), dense.adjoint_apply(X), atol=1e-12)
    v = la.random_state_vector(8, rng)
    assert_allclose(iid.stinespring_apply(v), ch.stinespring(dense) @ v, atol=1e-12)


def test_compose_and_json_roundtrip(rng):
    a, b = ch.amplitude_damping(0.2), ch.partial_dephasing_Z(0.4)
    X = la.random_hermitian(2, rng)
    assert_allclose(ch.compose(a, b).apply(X), a.apply(b.apply(X)), atol=1e-14)
    c = ch.KrausChannel.from_json(a.to_json())
    assert_allclose(c.apply(X), a.apply(X), atol=1e-14)


def test_random_trace_decreasing_is_subnormalized(rng):
    N = ch.random_trace_decreasing(3, 2, 3, rng)
    top = np.linalg.eigvalsh(N.kraus_sum())[-1]
    assert top <= 1 + 1e-12


def test_standard_channel_registry():
    assert "amplitude_damping" in ch.channel_names()
    N = ch.standard_channel("amplitude_damping", p=0.1)
    assert N.n_kraus == 2
    with pytest.raises(Exception):
        ch.standard_channel("no_such_channel")
    with pytest.raises(Exception):
        ch.amplitude_damping(1.5)
