"""Seeded property suites behind ``qfilab verify``.

Random property checks return a violation ``v``; ``v <= 0`` passes. Instance
generators are public so the test suite can run them at larger counts.
"""

from __future__ import annotations

import math
import time
from typing import Callable, NamedTuple

import numpy as np

from . import bounds as bd
from . import channels as ch
from . import clock, codes, fisher, lindblad
from . import linalg as la
from . import manybody as mb
from . import scenarios

DEFAULT_SEED = 0xF15E4


class Check(NamedTuple):
    suite: str
    name: str
    passed: bool
    detail: str


# random instances -----------------------------------------------------------------

def random_pair(rng: np.random.Generator, d: int, rank: int | None = None, traceless: bool = True):
    """Random ``(rho, D)`` with ``D = (rho R + R rho)/2`` so an SLD exists.

    With ``traceless`` the SLD is shifted so that ``tr D = tr(rho R) = 0``.
    """
    rho = la.random_density(d, rng, rank=rank)
    R = la.random_hermitian(d, rng)
    if traceless:
        R = R - np.trace(rho @ R).real * np.eye(d)
    return rho, la.hermitian_part((rho @ R + R @ rho) / 2)


def _dims(rng, lo=2, hi=6) -> int:
    return int(rng.integers(lo, hi + 1))


def _rank(rng, d) -> int:
    return int(rng.integers(1, d + 1))


def near_identity_channel(rng: np.random.Generator, d: int, n_kraus: int, delta: float) -> ch.KrausChannel:
    """Stinespring dilation of ``exp(-i delta K)`` with the environment starting in ``|0>``."""
    U = la.expm(-1j * delta * la.random_hermitian(d * n_kraus, rng))
    V = U[:, ::n_kraus]  # columns (a, env=0) in row-major (a, k) order
    return ch.from_stinespring(V, d, validate=False)


def prop_data_processing(rng) -> float:
    d = _dims(rng)
    rho, D = random_pair(rng, d, _rank(rng, d))
    d_out = _dims(rng)
    N = ch.random_channel(d, d_out, max(_dims(rng, 1, 4), -(-d // d_out)), rng)
    return fisher.qfi(N.apply(rho), N.apply(D)) - fisher.qfi(rho, D) - 1e-9 * max(1.0, fisher.qfi(rho, D))


def prop_joint_convexity(rng) -> float:
    d = _dims(rng)
    m = int(rng.integers(2, 5))
    w = rng.dirichlet(np.ones(m))
    pairs = [random_pair(rng, d, _rank(rng, d)) for _ in range(m)]
    rho = sum(a * r for a, (r, _) in zip(w, pairs))
    D = sum(a * x for a, (_, x) in zip(w, pairs))
    rhs = sum(a * fisher.qfi(r, x) for a, (r, x) in zip(w, pairs))
    return fisher.qfi(rho, D) - rhs - 1e-9 * max(1.0, rhs)


def prop_additivity(rng) -> float:
    d1, d2 = _dims(rng, 2, 3), _dims(rng, 2, 3)
    r1, D1 = random_pair(rng, d1, _rank(rng, d1))
    r2, D2 = random_pair(rng, d2, _rank(rng, d2))
    lhs = fisher.qfi(np.kron(r1, r2), np.kron(D1, r2) + np.kron(r1, D2))
    rhs = fisher.qfi(r1, D1) + fisher.qfi(r2, D2)
    return abs(lhs - rhs) - 1e-8 * max(1.0, rhs)


def prop_scaling(rng) -> float:
    d = _dims(rng)
    rho, D = random_pair(rng, d, _rank(rng, d))
    a, b = rng.uniform(0.1, 1.0), rng.uniform(-3, 3)
    want = b**2 / a * fisher.qfi(rho, D)
    return abs(fisher.qfi(a * rho, b * D) - want) - 1e-8 * max(1.0, want)


def prop_two_direction(rng) -> float:
    d = _dims(rng)
    rho, D = random_pair(rng, d, _rank(rng, d))
    R2 = la.random_hermitian(d, rng)
    D2 = la.hermitian_part((rho @ R2 + R2 @ rho) / 2)
    F = lambda X: fisher.qfi(rho, X)  # noqa: E731
    rhs = F(D2) + math.sqrt(F(D + D2) * F(D - D2))
    return F(D) - rhs - 1e-8 * max(1.0, rhs)


def prop_continuity(rng) -> float:
    d = _dims(rng)
    rho, D = random_pair(rng, d, _rank(rng, d))
    R = la.random_hermitian(d, rng) * rng.uniform(0.01, 1.0)
    Dl = la.hermitian_part((rho @ R + R @ rho) / 2)
    F = lambda X: fisher.qfi(rho, X)  # noqa: E731
    lhs = abs(F(D + Dl) - F(D) - F(Dl))
    rhs = 2 * math.sqrt(F(D) * F(Dl))
    return lhs - rhs - 1e-8 * max(1.0, rhs)


def prop_channel_continuity(rng) -> float:
    """``F(psi, D) - F(N psi, N D) <= 8 eps ||D||_1 ||D||_inf`` with the Kraus-deviation surrogate for ``eps``."""
    d = _dims(rng)
    psi = la.random_state_vector(d, rng)
    H = la.random_hermitian(d, rng)
    P = la.proj(psi)
    D = -1j * la.commutator(H, P)
    N = near_identity_channel(rng, d, _dims(rng, 2, 3), rng.uniform(1e-4, 0.05))
    eps = fisher.kraus_deviation(N)
    lhs = fisher.qfi(P, D) - fisher.qfi(N.apply(P), N.apply(D))
    rhs = 8 * eps * la.trace_norm(D) * la.op_norm(D)
    return lhs - rhs - 1e-8


def prop_simple_bounds(rng) -> float:
    d = _dims(rng)
    rho, D = random_pair(rng, d, _rank(rng, d))
    lo, hi = fisher.simple_bounds(rho, D)
    f = fisher.qfi(rho, D)
    tol = 1e-8 * max(1.0, f)
    return max(lo - f, f - hi) - tol


def prop_rld(rng) -> float:
    d = _dims(rng)
    rho, D = random_pair(rng, d)  # full rank so rho^{-1} exists
    R = fisher.sld(rho, D).R
    A = la.random_hermitian(d, rng) * 1j
    G = R + np.linalg.solve(rho, A)
    f = fisher.qfi(rho, D)
    return f - fisher.rld_bound(fisher.FisherPair(rho, D), G) - 1e-8 * max(1.0, f)


def prop_candidates(rng) -> float:
    """Lower candidate ``<=`` QFI ``<=`` upper candidate for random feasible variables."""
    d = _dims(rng)
    rho, D = random_pair(rng, d, _rank(rng, d))
    pair = fisher.FisherPair(rho, D)
    f = fisher.qfi(pair)
    lo = fisher.qfi_lower_candidate(pair, la.random_hermitian(d, rng))
    S = fisher.sld(pair).R / 2
    B = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    # the optimal block plus any PSD shift of N stays feasible
    up = fisher.qfi_block_candidate(pair, rho @ S, S @ rho @ S + 0.1 * B @ B.conj().T)
    tol = 1e-8 * max(1.0, f)
    return max(lo - f, f - up) - tol


def prop_bures(rng) -> float:
    """Closed-form QFI against the fidelity finite difference for a unitary family."""
    d = 3
    rho0 = la.random_density(d, rng)
    H = la.random_hermitian(d, rng)
    t = rng.uniform(0, 2)

    def rho_of(s):
        U = la.expm(-1j * H * s)
        return U @ rho0 @ U.conj().T

    r = rho_of(t)
    exact = fisher.qfi(r, -1j * la.commutator(H, r))
    return abs(fisher.bures_qfi(rho_of, t, 1e-3) - exact) - 1e-4 * max(1.0, exact)


FISHER_PROPERTIES: dict[str, Callable] = {
    "data_processing": prop_data_processing,
    "joint_convexity": prop_joint_convexity,
    "additivity": prop_additivity,
    "scaling": prop_scaling,
    "two_direction": prop_two_direction,
    "continuity": prop_continuity,
    "channel_continuity": prop_channel_continuity,
    "simple_bounds": prop_simple_bounds,
    "rld": prop_rld,
    "candidates": prop_candidates,
}


def rank_deficient_channel(rng, d_in: int, d_out: int, n_kraus: int, n_basis: int) -> ch.KrausChannel:
    """Trace-non-increasing map whose Kraus operators are combinations of ``n_basis`` fixed operators."""
    F = [rng.normal(size=(d_out, d_in)) + 1j * rng.normal(size=(d_out, d_in)) for _ in range(n_basis)]
    C = rng.normal(size=(n_kraus, n_basis)) + 1j * rng.normal(size=(n_kraus, n_basis))
    return _scaled(rng, [sum(c * f for c, f in zip(row, F)) for row in C], "random_rank_deficient")


def kernel_aligned_channel(rng, psi: np.ndarray, d_out: int, n_kraus: int) -> ch.KrausChannel:
    """Map with one rank-one Kraus operator and the rest annihilating ``psi``.

    Both output and environment states of ``psi`` then have rank one, so the
    rank condition generically fails for ``d_out >= 2``.
    """
    d = psi.size
    u = rng.normal(size=d_out) + 1j * rng.normal(size=d_out)
    w = rng.normal(size=d) + 1j * rng.normal(size=d)
    Q = np.eye(d) - la.proj(psi)
    ops = [np.outer(u, w.conj())]
    ops += [(rng.normal(size=(d_out, d)) + 1j * rng.normal(size=(d_out, d))) @ Q for _ in range(n_kraus - 1)]
    return _scaled(rng, ops, "kernel_aligned")


def _scaled(rng, ops, name) -> ch.KrausChannel:
    lam = np.linalg.eigvalsh(sum(K.conj().T @ K for K in ops))[-1]
    c = rng.uniform(0.3, 1.0) / math.sqrt(lam)
    return ch.KrausChannel([c * K for K in ops], name=name)


def theorem_instance(rng):
    """Random ``(psi, xi, channel)`` with ``d <= 5``.

    Channels cycle over generic trace-decreasing maps, channels, maps with
    linearly dependent Kraus operators and maps with Kraus operators that
    annihilate ``psi`` (where the rank condition fails).
    """
    d = _dims(rng, 2, 5)
    psi = la.random_state_vector(d, rng)
    v = la.random_state_vector(d, rng)
    xi = (v - np.vdot(psi, v) * psi) * rng.uniform(0.2, 3.0)
    d_out = _dims(rng, 1, 4)
    k = _dims(rng, 1, 4)
    kind = int(rng.integers(4))
    if kind == 0:
        N = ch.random_trace_decreasing(d, d_out, k, rng)
    elif kind == 1:
        N = ch.random_channel(d, d_out, max(k, -(-d // d_out)), rng)
    elif kind == 2:
        N = rank_deficient_channel(rng, d, d_out, k + 1, int(rng.integers(1, k + 1)))
    else:
        N = kernel_aligned_channel(rng, psi, max(d_out, 2), k + 1)
    return psi, xi, N


def theorem_check(psi, xi, N) -> tuple[float, float | None]:
    """Return ``(inequality violation, equality gap or None)``."""
    r = clock.logical_qubit_relation(psi, xi, N)
    viol = r["lhs"] - r["rhs"] - 1e-8
    gap = None
    if r["rank_residual"] <= 1e-8 * np.linalg.norm(xi):
        gap = abs(r["lhs"] - r["rhs"]) - 1e-8 * max(1.0, r["rhs"])
    return viol, gap


def run_property(fn: Callable, rng: np.random.Generator, count: int) -> tuple[float, int]:
    """Worst violation over ``count`` instances and the index of the worst."""
    worst, arg = -math.inf, -1
    for i in range(count):
        v = fn(rng)
        if v > worst:
            worst, arg = v, i
    return worst, arg


# suites ----------------------------------------------------------------------------

def suite_core(seed: int, count: int = 20) -> list[Check]:
    out = []
    for i, (name, fn) in enumerate(FISHER_PROPERTIES.items()):
        rng = np.random.default_rng([seed, i])
        worst, _ = run_property(fn, rng, count)
        out.append(Check("core", name, worst <= 0, f"worst violation {worst:.2e} over {count} instances"))
    worst, _ = run_property(prop_bures, np.random.default_rng([seed, 100]), 5)
    out.append(Check("core", "bures_oracle", worst <= 0, f"worst violation {worst:.2e}"))
    rng = np.random.default_rng([seed, 200])
    viol, gaps = -math.inf, []
    for _ in range(count * 2):
        v, g = theorem_check(*theorem_instance(rng))
        viol = max(viol, v)
        if g is not None:
            gaps.append(g)
    gap = max(gaps) if gaps else -math.inf
    out.append(Check("core", "logical_qubit_relation", viol <= 0 and gap <= 0, f"worst violation {viol:.2e}, worst equality gap {gap:.2e} on {len(gaps)} cases"))
    for name in ("qubit-partial-dephasing", "complete-x-dephasing", "ghz-erasure"):
        r = scenarios.get(name).run()
        out.append(Check("core", name, r.golden_passed, r.golden_detail))
    return out


def suite_codes(seed: int) -> list[Check]:
    out = []
    rng = np.random.default_rng([seed, 300])
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(1, 4))
        P = codes.PauliString(n, int(rng.integers(1 << n)), int(rng.integers(1 << n)), int(rng.integers(4)))
        Q = codes.PauliString(n, int(rng.integers(1 << n)), int(rng.integers(1 << n)), int(rng.integers(4)))
        worst = max(worst, la.op_norm((P * Q).to_matrix() - P.to_matrix() @ Q.to_matrix()))
    out.append(Check("codes", "pauli_product_law", worst < 1e-12, f"max dense mismatch {worst:.1e}"))
    for code in ("steane", "four_two_two_aux", "toric"):
        r = scenarios.get("stabilizer").run({"code": code})
        out.append(Check("codes", f"certify_{code}", r.golden_passed, r.golden_detail))
    group, H = codes.four_two_two_aux_group()
    psi = codes.stabilizer_state(group)
    xi = codes.to_matrix(H) @ psi
    X5 = codes.PauliString.from_str("+IIIIX").to_matrix()
    a, b = np.vdot(psi, X5 @ psi).real, np.vdot(xi, X5 @ xi).real / np.vdot(xi, xi).real
    out.append(Check("codes", "aux_flip", a > 0.999 and b < -0.999, f"<X5> = {a:+.6f} on psi, {b:+.6f} on xi"))
    ghz = np.zeros(16, dtype=complex)
    ghz[0] = ghz[-1] = 2**-0.5
    Hz = sum(codes.PauliString.from_sites(4, {q: "Z"}).to_matrix() for q in range(4))
    dm = codes.metrological_distance(ghz, Hz @ ghz)
    out.append(Check("codes", "ghz_distance", dm == 1, f"d_m = {dm}"))
    return out


def suite_bounds(seed: int) -> list[Check]:
    out = []
    for probe in ("ghz", "plus_product", "uniform_dicke"):
        r = scenarios.get("iid-amplitude-damping").run({"probe": probe, "n": 6, "p": 0.05})
        out.append(Check("bounds", f"bracket_{probe}", r.golden_passed, r.golden_detail))
        state = mb.probe_library(probe, 6)
        vals = [mb.iid_pinched_symmetric(state, 1.0, ch.amplitude_damping(0.05), 0.05, k).value for k in (1, 2, 4, 6)]
        mono = all(b <= a + 1e-10 for a, b in zip(vals, vals[1:]))
        out.append(Check("bounds", f"k_monotone_{probe}", mono, " >= ".join(f"{v:.6f}" for v in vals)))
    for probe, H, want in (
        ("f_af", mb.ising_energy(mb.chain_edges(8), 1.0), 1.0),
        ("code_f_af", mb.ising_energy(mb.chain_edges(8), 1.0), 2.0),
    ):
        state = mb.probe_library(probe, 8)
        pts = []
        for p in np.geomspace(1e-3, 1e-2, 6):
            r = mb.iid_pinched_symmetric(state, H, ch.amplitude_damping(p), p, 8)
            pts.append((p, r.meta["delta_f_lower"]))
        slope, err = bd.weak_noise_order_fit(pts)
        out.append(Check("bounds", f"order_{probe}", abs(slope - want) < 0.1, f"slope {slope:.3f} +/- {err:.3f}, expected {want}"))
    return out


def suite_lindblad(seed: int) -> list[Check]:
    out = []
    worst_cf, worst_b = 0.0, -math.inf
    for g in (0.01, 0.1, 0.5):
        for wt in (0.5, 1.0, 2.0, 5.0):
            spec = lindblad.z_dephasing(1.0, g)
            cf = lindblad.clock_fisher(spec, scenarios.PLUS, wt)
            ref = lindblad.z_dephasing_closed_form(1.0, g, wt)
            worst_cf = max(worst_cf, abs(cf.f_exact - ref["f_exact"]) / ref["f_exact"])
            worst_b = max(worst_b, abs(cf.delta) - cf.delta_bound)
    out.append(Check("lindblad", "z_closed_form", worst_cf < 1e-7, f"worst relative error {worst_cf:.2e}"))
    out.append(Check("lindblad", "z_delta_bound", worst_b <= 1e-12, f"worst |delta| - bound {worst_b:.2e}"))
    dec = lindblad.decompose(lindblad.x_dephasing(1.0, 0.3), 1.3)
    out.append(
        Check("lindblad", "x_composition", dec.composition_residual < 1e-10 and not dec.commuting, f"residual {dec.composition_residual:.1e}, commuting={dec.commuting}")
    )
    dec = lindblad.decompose(lindblad.amplitude_damping_spec(1.0, 0.2, 2), 0.7)
    out.append(Check("lindblad", "ad_composition", dec.composition_residual < 1e-10, f"residual {dec.composition_residual:.1e}"))
    return out


def suite_scenarios(seed: int) -> list[Check]:
    out = []
    for name in scenarios.names():
        r = scenarios.get(name).run()
        out.append(Check("scenarios", name, r.golden_passed, r.golden_detail))
    return out


SUITES = {
    "core": suite_core,
    "codes": suite_codes,
    "bounds": suite_bounds,
    "lindblad": suite_lindblad,
    "scenarios": suite_scenarios,
}


def run_suite(name: str, seed: int = DEFAULT_SEED) -> list[Check]:
    names = list(SUITES) if name == "all" else [name]
    out = []
    for n in names:
        t = time.perf_counter()
        try:
            out.extend(SUITES[n](seed))
        except Exception as exc:  # a crash is a failed check, not a traceback
            out.append(Check(n, "suite", False, f"{type(exc).__name__}: {exc}"))
        out.append(Check(n, "runtime", True, f"{time.perf_counter() - t:.2f} s"))
    return out


__all__ = [
    "Check",
    "FISHER_PROPERTIES",
    "random_pair",
    "near_identity_channel",
    "rank_deficient_channel",
    "kernel_aligned_channel",
    "theorem_instance",
    "theorem_check",
    "run_property",
    "run_suite",
    "SUITES",
]
