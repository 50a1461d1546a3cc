import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from qfilab import bounds
from qfilab import channels as ch
from qfilab import fisher
from qfilab import linalg as la
from qfilab import manybody as mb
from qfilab.errors import CapExceededError, ConditionError, DimensionError, ParameterError

OMEGA = 1.3


def onsite_diag(n, omega=OMEGA):
    return mb.onsite_energy(omega)(mb.bits_of(range(2**n), n))


def dense_stats(psi, h):
    mean = np.sum(np.abs(psi) ** 2 * h)
    return mean, np.sum(np.abs(psi) ** 2 * (h - mean) ** 2)


@pytest.mark.parametrize("name", ["ghz", "plus_product", "uniform_dicke", "half_gauss"])
@pytest.mark.parametrize("n", [1, 4, 7])
def test_symmetric_stats_match_dense(name, n):
    s = mb.probe_library(name, n)
    psi = s.densify()
    assert np.linalg.norm(psi) == pytest.approx(1.0)
    assert_allclose(s.energy_stats(OMEGA), dense_stats(psi, onsite_diag(n)), atol=1e-12)


def test_quoted_variances():
    assert 4 * mb.probe_library("ghz", 4).energy_stats(OMEGA)[1] == pytest.approx(16 * OMEGA**2)
    assert 4 * mb.probe_library("plus_product", 4).energy_stats(OMEGA)[1] == pytest.approx(4 * OMEGA**2)


def test_half_gauss_tail_ratio():
    s = mb.probe_library("half_gauss", 12, w=0.4)
    assert abs(s.amps[-1] / s.amps[0]) == pytest.approx(np.exp(-1 / (2 * 0.4**2)))
    assert abs(s.amps[-1] / s.amps[0]) == pytest.approx(0.044, abs=5e-4)


def test_plus_product_is_product():
    plus = np.array([1, 1]) / np.sqrt(2)
    assert_allclose(mb.probe_library("plus_product", 3).densify(), la.kron_all([plus] * 3).reshape(-1), atol=1e-14)


def test_symmetric_validation():
    with pytest.raises(ConditionError):
        mb.SymmetricState(2, [1, 1, 0])
    with pytest.raises(DimensionError):
        mb.SymmetricState(2, [1, 0])
    with pytest.raises(ParameterError):
        mb.dicke(3, 4)
    with pytest.raises(CapExceededError):
        mb.dicke(30, 1).densify()
    with pytest.raises(ParameterError):
        mb.probe_library("nope", 3)


def dense_erasure_loss(psi, h, n, k):
    """Eve's Fisher information about the energy shift when she holds the first ``k`` sites."""
    hb = (h - dense_stats(psi, h)[0]) * psi
    D = np.outer(hb, psi.conj()) + np.outer(psi, hb.conj())
    eve = list(range(k))
    return fisher.qfi(la.partial_trace(la.proj(psi), eve, [2] * n), la.partial_trace(D, eve, [2] * n))


@pytest.mark.parametrize("name,params", [("ghz", {}), ("uniform_dicke", {}), ("dicke_pair", {"q1": 1, "q2": 4}), ("half_gauss", {})])
@pytest.mark.parametrize("k", [1, 2, 5])
def test_erasure_loss_matches_dense(name, params, k):
    n = 6
    s = mb.probe_library(name, n, **params)
    ref = dense_erasure_loss(s.densify(), onsite_diag(n), n, k)
    assert mb.erasure_loss_symmetric(s, OMEGA, k) == pytest.approx(ref, rel=1e-8, abs=1e-10)


def test_ghz_single_erasure_costs_everything():
    for n in (3, 10, 40):
        s = mb.probe_library("ghz", n)
        assert mb.erasure_loss_symmetric(s, OMEGA, 1) == pytest.approx(n**2 * OMEGA**2)


def test_reduced_symmetric_spectrum(rng):
    n, k = 5, 2
    a = rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)
    s = mb.SymmetricState.from_unnormalized(n, a)
    red = mb.reduced_symmetric(s.amps, s.amps, n, k)
    dense = la.partial_trace(la.proj(s.densify()), list(range(k)), [2] * n)
    ev_dense = np.sort(np.linalg.eigvalsh(dense))[::-1][: k + 1]
    assert_allclose(np.sort(np.linalg.eigvalsh(red))[::-1], ev_dense, atol=1e-12)


@pytest.mark.parametrize("single", [ch.amplitude_damping(0.07), ch.bit_flip(0.1)], ids=lambda c: c.name)
@pytest.mark.parametrize("probe", ["ghz", "half_gauss", "f_af", "code_f_af"])
def test_pinched_compact_matches_dense(single, probe):
    n = 8
    s = mb.probe_library(probe, n)
    h = onsite_diag(n)
    H = OMEGA if isinstance(s, mb.SymmetricState) else mb.onsite_energy(OMEGA)
    for k in (0, 1, 2):
        compact = mb.iid_pinched_symmetric(s, H, single, None, k)
        dense = bounds.pinched_iid_upper(s.densify(), h, bounds.IIDNoiseSpec(single, n), k)
        assert compact.value == pytest.approx(dense.value, rel=1e-9, abs=1e-12)
        assert compact.meta["representation"] == type(s).__name__


def test_sparse_probe_basics():
    p = mb.SparseProbe.from_terms(4, [("0000", 1), ("1111", 1j)])
    v = p.densify()
    assert v[0] == pytest.approx(1 / np.sqrt(2))
    assert v[15] == pytest.approx(1j / np.sqrt(2))
    with pytest.raises(ConditionError):
        mb.SparseProbe(2, (1, 1), np.array([1, 1]) / np.sqrt(2))
    with pytest.raises(ParameterError):
        p.energy_stats(np.eye(16))


def test_graph_code_needs_separated_strings():
    with pytest.raises(ConditionError):
        mb.graph_code_state(6, "000011")
    s = mb.graph_code_state(8, "01010101")
    for a in s.strings:
        for b in s.strings:
            assert a == b or mb.hamming(a, b) >= 4


@pytest.mark.parametrize("n", [8, 10])
def test_ising_closed_form_variance(n):
    edges = mb.chain_edges(n)
    s = mb.probe_library("code_f_af", n)
    sc = mb.ising_scenario(edges, 0.0, 0.0, 0.8, s)
    assert sc.violated == n - 1
    assert sc.variance == pytest.approx(sc.variance_closed_form)
    # the sparse energy function agrees with the dense Hamiltonian
    assert_allclose(s.energy_stats(mb.ising_energy(edges, 0.8)), (sc.mean, sc.variance), atol=1e-12)


def test_four_two_two_square():
    s = mb.four_two_two_clock()
    sc = mb.ising_scenario(mb.SQUARE_EDGES, 0.0, 0.0, 1.0, s)
    assert sc.violated == 4
    assert 4 * sc.variance == pytest.approx(16.0)
    with pytest.raises(ParameterError):
        mb.xy_ising_hamiltonian(3, [(0, 3)], 1.0)
