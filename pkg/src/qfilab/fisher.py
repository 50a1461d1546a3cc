"""Quantum Fisher information and symmetric logarithmic derivatives.

For a state ``rho`` and a derivative direction ``D`` the SLD ``R`` solves
``(rho R + R rho)/2 = D``. In the eigenbasis of ``rho``::

    R_{kk'} = 2 D_{kk'} / (lam_k + lam_k')        (lam_k + lam_k' > 0)
    F(rho; D) = tr(rho R^2) = sum 2 |D_{kk'}|^2 / (lam_k + lam_k')

The kernel-kernel block of ``R`` is fixed to zero (canonical gauge). A
solution exists only when ``P_perp D P_perp = 0``.

The candidate evaluators below give one-sided bounds from the two
convex-program characterizations of the QFI: any Hermitian ``S`` gives a
lower bound, any feasible ``L`` (or ``O, N`` block pair) an upper bound.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import numpy.typing as npt

from . import linalg as la
from .errors import ConditionError, DimensionError, InfeasibleCandidateError, NoSLDError, NumericalError

KERNEL_TOL = 1e-9
FEAS_TOL = 1e-8
ABS_FLOOR = 1e-13


class FisherPair:
    """A state and derivative direction ``(rho, D)``.

    Parameters
    ----------
    rho : array_like
        PSD operator with trace at most one.
    D : array_like
        Hermitian derivative direction.

    Raises
    ------
    NoSLDError
        If ``||P_perp D P_perp|| > (1e-9 + sqrt(z)) ||D|| + 1e-13`` with ``z``
        the eigenvalue zero threshold. Smaller violations are clamped to
        exactly zero: eigenvalues below ``z`` are treated as zero, and the
        derivative of such a block is only resolved to about ``sqrt(z)``.
    """

    def __init__(self, rho: npt.ArrayLike, D: npt.ArrayLike):
        rho = la.check_density(la.check_hermitian(rho, tol=1e-9, name="rho"))
        D = la.check_hermitian(D, tol=1e-9, name="D")
        if rho.shape != D.shape:
            raise DimensionError(f"rho {rho.shape} and D {D.shape} differ in shape")
        self.spectrum = la.eig_hermitian(rho)
        Pk = self.spectrum.kernel_projector()
        block = Pk @ D @ Pk
        viol = la.op_norm(block)
        scale = la.op_norm(D)
        # absolute floor: directions at round-off level carry no information
        if viol > (KERNEL_TOL + np.sqrt(self.spectrum.zero_threshold)) * scale + ABS_FLOOR:
            raise NoSLDError(
                f"P_perp D P_perp has norm {viol:.3e}: no SLD exists and the optimal variance is zero"
            )
        self.rho = rho
        self.D = la.hermitian_part(D - block)

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    def __repr__(self) -> str:
        return f"FisherPair(dim={self.dim}, rank={self.spectrum.rank})"


def _as_pair(pair, D=None) -> FisherPair:
    if isinstance(pair, FisherPair):
        return pair
    return FisherPair(pair, D)


def _eigen_data(pair: FisherPair):
    dec = pair.spectrum
    lam = np.where(dec.support_mask(), dec.eigenvalues, 0.0)
    U = dec.eigenvectors
    Dk = U.conj().T @ pair.D @ U
    denom = lam[:, None] + lam[None, :]
    mask = denom > 0
    return lam, U, Dk, denom, mask


@dataclass(frozen=True)
class SLDSolution:
    """Symmetric logarithmic derivative in the canonical gauge."""

    R: np.ndarray
    gauge_note: str
    residual: float


def sld(pair, D=None) -> SLDSolution:
    """Solve ``(rho R + R rho)/2 = D`` with ``P_perp R P_perp = 0``.

    Parameters
    ----------
    pair : FisherPair or array_like
        The pair, or the state ``rho`` when ``D`` is also given.

    Returns
    -------
    SLDSolution
    """
    pair = _as_pair(pair, D)
    lam, U, Dk, denom, mask = _eigen_data(pair)
    Rk = np.zeros_like(Dk)
    Rk[mask] = 2 * Dk[mask] / denom[mask]
    R = la.hermitian_part(U @ Rk @ U.conj().T)
    res = la.op_norm((pair.rho @ R + R @ pair.rho) / 2 - pair.D)
    if res > 1e-9 * max(1.0, la.op_norm(pair.D)) * max(1.0, la.op_norm(R)):
        raise NumericalError(f"SLD residual {res:.3e} exceeds tolerance")
    return SLDSolution(R, "canonical: P_perp R P_perp = 0", float(res))


def qfi(pair, D=None) -> float:
    """Quantum Fisher information ``F(rho; D) = tr(rho R^2)``.

    Examples
    --------
    >>> import numpy as np
    >>> psi = np.array([1, 1]) / np.sqrt(2)
    >>> rho = np.outer(psi, psi)
    >>> H = np.diag([0.5, -0.5])
    >>> round(qfi(rho, -1j * (H @ rho - rho @ H)), 12)
    1.0
    """
    pair = _as_pair(pair, D)
    lam, U, Dk, denom, mask = _eigen_data(pair)
    val = float(np.sum(2 * np.abs(Dk[mask]) ** 2 / denom[mask]))
    return max(val, 0.0)


def qfi_pure(psi: npt.ArrayLike, H: npt.ArrayLike) -> float:
    """``4 Var_psi(H)`` for a unit vector ``psi``."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    Hpsi = np.asarray(H) @ psi
    mean = np.vdot(psi, Hpsi).real
    return float(4 * (np.vdot(Hpsi, Hpsi).real - mean**2))


def sld_pure_inverse(psi: npt.ArrayLike, O: npt.ArrayLike) -> np.ndarray:
    """Closed form ``R_psi^{-1}(O) = 2(O - P_perp O P_perp) - <O> psi`` for pure states."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    O = np.asarray(O, dtype=complex)
    P = la.proj(psi)
    Pp = np.eye(len(psi)) - P
    return 2 * (O - Pp @ O @ Pp) - np.vdot(psi, O @ psi) * P


def qfi_lower_candidate(pair, S: npt.ArrayLike) -> float:
    """``4[tr(D S) - tr(rho S^2)]`` for any Hermitian ``S``; never exceeds the QFI."""
    pair = _as_pair(pair)
    S = la.check_hermitian(S, tol=1e-9, name="S")
    return float(4 * (np.trace(pair.D @ S) - np.trace(pair.rho @ S @ S)).real)


def qfi_upper_candidate(pair, L: npt.ArrayLike, tol: float = FEAS_TOL) -> float:
    """``4 tr(L^H L)`` for ``L`` with ``rho^{1/2} L + L^H rho^{1/2} = D``.

    Raises
    ------
    InfeasibleCandidateError
        If the constraint residual exceeds ``tol``.
    """
    pair = _as_pair(pair)
    L = np.asarray(L, dtype=complex)
    r = la.sqrtm_psd(pair.rho)
    res = la.op_norm(r @ L + L.conj().T @ r - pair.D)
    if res > tol:
        raise InfeasibleCandidateError(f"L violates the constraint: residual {res:.3e}")
    return float(4 * np.vdot(L, L).real)


def qfi_block_candidate(pair, O: npt.ArrayLike, N: npt.ArrayLike, tol: float = FEAS_TOL) -> float:
    """``4 tr(N)`` for ``O + O^H = D`` and ``[[rho, O], [O^H, N]] >= 0``.

    This is the Schur-complement form of the minimization; the optimum is at
    ``O = rho S``, ``N = S rho S`` with ``S = R/2``.
    """
    pair = _as_pair(pair)
    O = np.asarray(O, dtype=complex)
    N = la.check_hermitian(N, tol=1e-9, name="N")
    res = la.op_norm(O + O.conj().T - pair.D)
    if res > tol:
        raise InfeasibleCandidateError(f"O + O^H differs from D by {res:.3e}")
    chk = la.psd_block_check(pair.rho, O, N, tol=tol)
    if not chk.psd:
        raise InfeasibleCandidateError(
            f"block matrix not PSD: Schur min eig {chk.schur_min_eig:.3e}, range residual {chk.range_residual:.3e}"
        )
    return float(4 * np.trace(N).real)


def simple_bounds(pair, D=None) -> tuple[float, float]:
    """Return ``(||D||_inf^2, tr(rho^+ D'^2))`` with ``D' = 2D - P D P``.

    ``P`` is the support projector of ``rho``. Both bracket the QFI.
    """
    pair = _as_pair(pair, D)
    lower = la.op_norm(pair.D) ** 2
    P = pair.spectrum.support_projector()
    Dp = 2 * pair.D - P @ pair.D @ P
    rinv = la.psd_function(pair.rho, lambda w: 1.0 / w, dec=pair.spectrum)
    upper = float(np.trace(rinv @ Dp @ Dp).real)
    return float(lower), upper


def rld_bound(pair, G: npt.ArrayLike, tol: float = FEAS_TOL) -> float:
    """``tr(rho G G^H)`` for ``G`` with ``(rho G + G^H rho)/2 = D``.

    Raises
    ------
    InfeasibleCandidateError
        If ``G`` violates the constraint.
    """
    pair = _as_pair(pair)
    G = np.asarray(G, dtype=complex)
    res = la.op_norm((pair.rho @ G + G.conj().T @ pair.rho) / 2 - pair.D)
    if res > tol:
        raise InfeasibleCandidateError(f"G violates the constraint: residual {res:.3e}")
    return float(np.trace(pair.rho @ G @ G.conj().T).real)


def embed_normalized(pair) -> FisherPair:
    """Append one dimension carrying the missing weight ``1 - tr(rho)``.

    Requires ``tr(D) = 0``; the QFI is unchanged.
    """
    pair = _as_pair(pair)
    trD = np.trace(pair.D)
    if abs(trD) > 1e-10:
        raise ConditionError(f"tr(D) = {trD:.3e} must vanish to embed into a normalized state")
    d = pair.dim
    rho = np.zeros((d + 1, d + 1), dtype=complex)
    rho[:d, :d] = pair.rho
    rho[d, d] = max(0.0, 1 - np.trace(pair.rho).real)
    D = np.zeros_like(rho)
    D[:d, :d] = pair.D
    return FisherPair(rho, D)


def trace_decreasing_bound(psi: npt.ArrayLike, xi: npt.ArrayLike, channel, alpha: float) -> dict:
    """Bound ``F(N(psi), N(|xi><psi| + h.c.)) <= 4 <xi|N^H(I)|xi> <= 4 alpha <xi|xi>``.

    Parameters
    ----------
    psi, xi : array_like
        Orthogonal vectors, ``psi`` normalized; ``xi`` may have any norm.
    channel : KrausChannel
        Completely positive, trace-non-increasing map.
    alpha : float
        Certified constant with ``N^H(I) <= alpha I``. It is checked, not
        computed.

    Returns
    -------
    dict
        ``qfi``, ``candidate`` (the feasible block value ``4 tr N(|xi><xi|)``)
        and ``bound`` (``4 alpha <xi|xi>``).
    """
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    xi = np.asarray(xi, dtype=complex).reshape(-1)
    NI = channel.adjoint_apply(np.eye(channel.out_dim))
    top = np.linalg.eigvalsh(la.hermitian_part(NI))[-1]
    if top > alpha + 1e-10:
        raise ConditionError(f"N^H(I) has eigenvalue {top:.6f} above alpha = {alpha}")
    rho = channel.apply(la.proj(psi))
    D = channel.apply(np.outer(xi, psi.conj()) + np.outer(psi, xi.conj()))
    pair = FisherPair(rho, D)
    O = channel.apply(np.outer(psi, xi.conj()))
    N = channel.apply(la.proj(xi))
    cand = qfi_block_candidate(pair, O, N)
    return {"qfi": qfi(pair), "candidate": cand, "bound": float(4 * alpha * np.vdot(xi, xi).real)}


def kraus_deviation(channel) -> float:
    """Certified upper bound on ``||N - id||_diamond`` from the Kraus list.

    With ``E_0 = I + Delta_0`` and ``E_k = Delta_k`` for ``k >= 1``, each term
    ``X -> A X B^H`` has diamond norm at most ``||A|| ||B||``, giving
    ``2 ||Delta_0|| + sum_k ||Delta_k||^2``.
    """
    ops = channel.kraus
    if ops[0].shape[0] != ops[0].shape[1]:
        raise DimensionError("near-identity deviation needs a channel with in_dim == out_dim")
    d0 = la.op_norm(ops[0] - np.eye(ops[0].shape[0]))
    rest = sum(la.op_norm(K) ** 2 for K in ops[1:])
    return float(2 * d0 + d0**2 + rest)


def bures_qfi(rho_of_t: Callable[[float], np.ndarray], t: float, h: float = 1e-3) -> float:
    """Finite-difference QFI ``-4 d^2/dt'^2 F(rho(t), rho(t'))`` at ``t' = t``.

    ``F`` is the root fidelity; a central difference with step ``h`` is used.
    """
    r0 = rho_of_t(t)
    f_p = la.root_fidelity(r0, rho_of_t(t + h))
    f_m = la.root_fidelity(r0, rho_of_t(t - h))
    f_0 = la.root_fidelity(r0, r0)
    return float(-4 * (f_p - 2 * f_0 + f_m) / h**2)


__all__ = [
    "FisherPair",
    "SLDSolution",
    "sld",
    "qfi",
    "qfi_pure",
    "sld_pure_inverse",
    "qfi_lower_candidate",
    "qfi_upper_candidate",
    "qfi_block_candidate",
    "simple_bounds",
    "rld_bound",
    "embed_normalized",
    "trace_decreasing_bound",
    "kraus_deviation",
    "bures_qfi",
]
