import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from qfilab import channels as ch
from qfilab import fisher
from qfilab import linalg as la
from qfilab import verify
from qfilab.errors import ConditionError, InfeasibleCandidateError, NoSLDError

seeds = st.integers(0, 2**32 - 1)

RHO = np.array([[0.5, 0.1 + 0.2j, 0], [0.1 - 0.2j, 0.3, 0.05], [0, 0.05, 0.2]])
DIR = np.array([[0.1, 0.3j, 0.0], [-0.3j, -0.05, 0.1], [0.0, 0.1, -0.05]])
# frozen from scipy.linalg.solve_continuous_lyapunov(RHO, 2 * DIR) and tr(rho R^2)
QFI_FROZEN = 0.8465479930191976


def test_frozen_value_against_lyapunov_oracle():
    assert fisher.qfi(RHO, DIR) == pytest.approx(QFI_FROZEN, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(2, 6))
def test_full_rank_matches_lyapunov(seed, d):
    rng = np.random.default_rng(seed)
    rho = la.random_density(d, rng)
    D = la.random_hermitian(d, rng)
    R = scipy.linalg.solve_continuous_lyapunov(rho, 2 * D)
    assert fisher.qfi(rho, D) == pytest.approx(np.trace(rho @ R @ R).real, rel=1e-8)
    assert_allclose(fisher.sld(rho, D).R, R, atol=1e-7 * max(1, la.op_norm(R)))


def test_qubit_clock_value():
    psi = np.array([1, 1]) / np.sqrt(2)
    w = 1.7
    H = w / 2 * la.PAULI_Z
    P = la.proj(psi)
    D = -1j * la.commutator(H, P)
    assert fisher.qfi(P, D) == pytest.approx(w**2)
    assert_allclose(fisher.sld(P, D).R, 2 * D, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(2, 6))
def test_pure_state_is_four_variance(seed, d):
    rng = np.random.default_rng(seed)
    psi = la.random_state_vector(d, rng)
    H = la.random_hermitian(d, rng)
    P = la.proj(psi)
    assert fisher.qfi(P, -1j * la.commutator(H, P)) == pytest.approx(fisher.qfi_pure(psi, H), rel=1e-9)


def test_commuting_case(rng):
    lam = np.array([0.5, 0.3, 0.2])
    dl = np.array([0.1, -0.04, -0.06])
    assert fisher.qfi(np.diag(lam), np.diag(dl)) == pytest.approx(np.sum(dl**2 / lam))


def test_sld_pure_inverse(rng):
    psi = la.random_state_vector(4, rng)
    P = la.proj(psi)
    D = -1j * la.commutator(la.random_hermitian(4, rng), P)
    R = fisher.sld_pure_inverse(psi, D)
    assert_allclose((P @ R + R @ P) / 2, D, atol=1e-12)
    assert fisher.qfi_pure(psi, R / 2) == pytest.approx(fisher.qfi(P, D), rel=1e-9)


def test_kernel_block_raises():
    rho = np.diag([1.0, 0.0])
    with pytest.raises(NoSLDError):
        fisher.FisherPair(rho, np.diag([0.0, 0.5]))


def test_tiny_kernel_block_is_clamped():
    rho = np.diag([1.0, 0.0])
    pair = fisher.FisherPair(rho, np.diag([0.0, 1e-14]))
    assert fisher.qfi(pair) == 0.0


def test_canonical_gauge(rng):
    rho = la.random_density(4, rng, rank=2)
    R0 = la.random_hermitian(4, rng)
    D = (rho @ R0 + R0 @ rho) / 2
    R = fisher.sld(rho, D).R
    K = la.kernel_projector(rho)
    assert_allclose(K @ R @ K, 0, atol=1e-10)


def test_candidates_at_optimum(rng):
    rho, D = verify.random_pair(rng, 4, 3)
    pair = fisher.FisherPair(rho, D)
    f = fisher.qfi(pair)
    R = fisher.sld(pair).R
    assert fisher.qfi_lower_candidate(pair, R / 2) == pytest.approx(f, rel=1e-9)
    assert fisher.qfi_lower_candidate(pair, np.zeros((4, 4))) == 0.0
    assert fisher.qfi_upper_candidate(pair, la.sqrtm_psd(rho) @ R / 2) == pytest.approx(f, rel=1e-7)
    S = R / 2
    assert fisher.qfi_block_candidate(pair, rho @ S, S @ rho @ S) == pytest.approx(f, rel=1e-7)
    assert fisher.rld_bound(pair, R) == pytest.approx(f, rel=1e-9)


def test_infeasible_candidates_raise(rng):
    rho, D = verify.random_pair(rng, 3)
    pair = fisher.FisherPair(rho, D)
    with pytest.raises(InfeasibleCandidateError):
        fisher.qfi_upper_candidate(pair, np.zeros((3, 3)))
    with pytest.raises(InfeasibleCandidateError):
        fisher.rld_bound(pair, np.zeros((3, 3)))


@pytest.mark.parametrize("name", sorted(verify.FISHER_PROPERTIES))
def test_property_suite(name):
    worst, idx = verify.run_property(verify.FISHER_PROPERTIES[name], np.random.default_rng([7, len(name)]), 25)
    assert worst <= 0, f"instance {idx} violates {name} by {worst:.3e}"


def test_simple_bounds_examples():
    psi = np.array([1, 1]) / np.sqrt(2)
    P = la.proj(psi)
    D = -1j * la.commutator(la.PAULI_Z / 2, P)
    lo, hi = fisher.simple_bounds(P, D)
    assert lo <= 1.0 + 1e-12 and 1.0 <= hi + 1e-12
    assert fisher.simple_bounds(np.eye(2) / 2, np.zeros((2, 2))) == (0.0, 0.0)


def test_embed_normalized_keeps_qfi(rng):
    psi = la.random_state_vector(3, rng)
    H = la.random_hermitian(3, rng)
    P = 0.5 * la.proj(psi)
    D = -1j * la.commutator(H, P)
    f = fisher.qfi(P, D)
    e = fisher.embed_normalized(fisher.FisherPair(P, D))
    assert e.dim == 4
    assert fisher.qfi(e) == pytest.approx(f, rel=1e-10)
    # scaling law F(a rho, b D) = (b^2 / a) F(rho, D)
    assert f == pytest.approx(0.5 * fisher.qfi(2 * P, 2 * D), rel=1e-10)
    with pytest.raises(ConditionError):
        fisher.embed_normalized(fisher.FisherPair(np.eye(2) / 4, np.eye(2) / 10))


def test_bures_oracle(rng):
    for _ in range(3):
        assert verify.prop_bures(rng) <= 0


def test_trace_decreasing_bound_chain(rng):
    N = ch.random_trace_decreasing(3, 2, 3, rng)
    psi = la.random_state_vector(3, rng)
    v = la.random_state_vector(3, rng)
    xi = v - np.vdot(psi, v) * psi
    alpha = np.linalg.eigvalsh(N.kraus_sum())[-1]
    out = fisher.trace_decreasing_bound(psi, xi, N, alpha)
    assert out["qfi"] <= out["candidate"] + 1e-9 <= out["bound"] + 2e-9
    with pytest.raises(ConditionError):
        fisher.trace_decreasing_bound(psi, xi, N, alpha / 2)


def test_kraus_deviation():
    assert fisher.kraus_deviation(ch.identity(2)) == 0.0
    eps = fisher.kraus_deviation(ch.partial_dephasing_Z(0.02))
    # 2(1 - sqrt(0.99)) + (1 - sqrt(0.99))^2 + 0.01
    d0 = 1 - np.sqrt(0.99)
    assert eps == pytest.approx(2 * d0 + d0**2 + 0.01)
