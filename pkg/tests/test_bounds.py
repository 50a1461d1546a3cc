import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from qfilab import bounds
from qfilab import channels as ch
from qfilab import clock
from qfilab import linalg as la
from qfilab.errors import ConditionError, NumericalError, ParameterError

seeds = st.integers(0, 2**32 - 1)


def onsite_h(n, omega=1.0):
    z = np.array([0.5, -0.5])
    h = np.zeros(2**n)
    for q in range(n):
        h += omega * np.kron(np.kron(np.ones(2**q), z), np.ones(2 ** (n - q - 1)))
    return h


@pytest.mark.parametrize("single", [ch.amplitude_damping(0.1), ch.partial_dephasing_Z(0.2), ch.bit_flip(0.15)],
                         ids=lambda c: c.name)
def test_pinched_bound_brackets_exact(single, rng):
    n = 3
    psi = la.random_state_vector(2**n, rng)
    h = onsite_h(n)
    spec = bounds.IIDNoiseSpec(single, n)
    exact = clock.fisher_report(clock.MetrologyScenario(psi, np.diag(h), spec.channel)).f_bob_t
    prev = np.inf
    for k in range(n + 1):
        b = bounds.pinched_iid_upper(psi, h, spec, k)
        assert b.kind == "upper_on_F_Bob"
        assert exact <= b.value + 1e-9
        assert b.value <= prev + 1e-12
        prev = b.value
    assert bounds.pinched_iid_upper(psi, np.diag(h), spec, n).value == pytest.approx(prev)


def test_pinched_k0_for_uniform_noise_is_loose():
    # E_0 proportional to I: nothing is learned from the no-jump branch
    psi = np.ones(4) / 2
    spec = bounds.IIDNoiseSpec(ch.partial_dephasing_Z(0.2), 2)
    b = bounds.pinched_iid_upper(psi, onsite_h(2), spec, 0)
    assert b.value == pytest.approx(b.meta["four_var"])


def test_pinch_sum_drops_tiny_denominators():
    total, kept, dropped = bounds.pinch_sum([(1.0, 2.0), (1e-20, 1.0), (0.5, 1.0)])
    assert total == pytest.approx(6.0)
    assert (kept, dropped) == (2, 1)


def test_preprocessing_trivial_factorization_is_exact():
    # with Nhat0 = Nhat the lower bound is tight when equality holds
    psi = np.array([1, 1]) / np.sqrt(2)
    H = 0.65 * la.PAULI_Z
    N = ch.partial_dephasing_Z(0.3)
    rep = clock.fisher_report(clock.MetrologyScenario(psi, H, N))
    assert rep.equality_holds
    b = bounds.preprocessing_lower(psi, H, ch.complementary(N))
    assert b.kind == "lower_on_F_Bob"
    assert b.value == pytest.approx(rep.f_bob_t)


def test_preprocessing_is_lower(rng):
    n = 2
    psi = la.random_state_vector(4, rng)
    h = onsite_h(n)
    N = ch.tensor_power(ch.amplitude_damping(0.2), n)
    rep = clock.fisher_report(clock.MetrologyScenario(psi, np.diag(h), N))
    b = bounds.preprocessing_lower(psi, np.diag(h), ch.complementary(N))
    assert b.value <= rep.f_bob_t + 1e-9
    # Nhat0 = identity is always a valid factorization and gives the trivial bound
    assert bounds.preprocessing_lower(psi, np.diag(h), ch.identity(4)).value == pytest.approx(0, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 5))
def test_ldl_reconstructs(seed, d):
    rng = np.random.default_rng(seed)
    A = la.random_density(d, rng, rank=rng.integers(1, d + 1))
    L, tau = bounds.ldl_psd(A)
    assert_allclose(np.tril(L), L)
    assert_allclose(np.diag(L), 1)
    assert np.all(tau >= 0)
    assert_allclose(L @ np.diag(tau) @ L.conj().T, A, atol=1e-8)


def test_ldl_rejects_indefinite():
    with pytest.raises(NumericalError):
        bounds.ldl_psd(np.diag([1.0, -0.5]))
    with pytest.raises(NumericalError):
        bounds.ldl_psd(np.array([[0.0, 1.0], [1.0, 1.0]]))


def test_near_diagonal_exact_for_diagonal_environment():
    psi = np.array([1, 1]) / np.sqrt(2)
    H = 0.65 * la.PAULI_Z
    N = ch.partial_dephasing_Z(0.3)
    rep = clock.fisher_report(clock.MetrologyScenario(psi, H, N))
    b = bounds.near_diagonal_upper(psi, H, ch.complementary(N))
    assert b.meta["norm_A"] == pytest.approx(1.0)
    assert b.value == pytest.approx(rep.f_bob_t)


def test_near_diagonal_is_lower_bound(rng):
    for _ in range(5):
        psi = la.random_state_vector(4, rng)
        h = onsite_h(2)
        N = ch.tensor_power(ch.amplitude_damping(rng.uniform(0.01, 0.3)), 2)
        sc = clock.MetrologyScenario(psi, np.diag(h), N)
        rep = clock.fisher_report(sc)
        if rep.equality_holds:
            assert bounds.near_diagonal_upper(psi, np.diag(h), ch.complementary(N)).value <= rep.f_bob_t + 1e-8


def which_branch_channel(q):
    """No-jump branch plus a which-level record with probability ``q``."""
    P0, P1 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    return ch.KrausChannel([np.sqrt(1 - q) * np.eye(2), np.sqrt(q) * P0, np.sqrt(q) * P1])


def test_energy_access_exact_record():
    # complete energy measurement: Eve holds the energy, Bob learns nothing
    sc = clock.MetrologyScenario(np.array([1, 1]) / np.sqrt(2), 0.5 * la.PAULI_Z, which_branch_channel(1.0))
    S = np.diag([0.0, 0.5, -0.5])
    floor, cap = bounds.energy_access_bounds(sc, S, 0.0)
    assert floor == pytest.approx(0, abs=1e-14)
    assert cap == 0
    assert clock.fisher_report(sc).f_bob_t == pytest.approx(0, abs=1e-12)


def test_energy_access_partial_record():
    q = 0.9
    sc = clock.MetrologyScenario(np.array([1, 1]) / np.sqrt(2), 0.5 * la.PAULI_Z, which_branch_channel(q))
    S = np.diag([0.0, 0.5 / q, -0.5 / q])
    delta = (1 - q) / q
    floor, cap = bounds.energy_access_bounds(sc, S, delta)
    assert floor == pytest.approx(0, abs=1e-14)
    assert clock.fisher_report(sc).f_bob_t <= cap
    with pytest.raises(ConditionError, match="preconditions"):
        bounds.energy_access_bounds(sc, S, delta / 2)


def test_order_fit_recovers_power():
    p = np.geomspace(1e-3, 1e-1, 9)
    slope, err = bounds.weak_noise_order_fit(list(zip(p, 3 * p**2)))
    assert slope == pytest.approx(2.0)
    assert err < 1e-10


def test_order_fit_drops_nonpositive(caplog):
    p = np.geomspace(1e-3, 1e-1, 6)
    pts = list(zip(p, p)) + [(0.5, 0.0)]
    slope, _ = bounds.weak_noise_order_fit(pts)
    assert slope == pytest.approx(1.0)
    assert "dropping 1" in caplog.text


@pytest.mark.parametrize(
    "pts",
    [[(1e-3, 1.0), (1e-2, 2.0), (1e-1, 3.0)], [(1e-3, 1.0), (2e-3, 2.0), (3e-3, 3.0), (5e-3, 4.0)], [(1, 2, 3)]],
    ids=["too-few", "narrow", "shape"],
)
def test_order_fit_errors(pts):
    with pytest.raises(ParameterError):
        bounds.weak_noise_order_fit(pts)


def test_spec_validation():
    with pytest.raises(ParameterError):
        bounds.IIDNoiseSpec(ch.amplitude_damping(0.1), 0)
    assert bounds.IIDNoiseSpec(ch.partial_dephasing_Z(0.2), 2).e0_deviation == pytest.approx(0, abs=1e-15)
