"""Lindblad evolution of a clock and its split into unitary motion plus an effective channel.

Superoperators act on row-major vectorized operators, ``vec(A X B) = (A ⊗ B^T) vec(X)``.
For ``E_t = exp(t (L0 + L1))`` with ``L0`` the Hamiltonian part, the effective
channel is ``N_t = E_t exp(-t L0)`` so that ``rho(t) = N_t(psi(t))`` with
``psi(t)`` the noiseless trajectory.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import numpy.typing as npt

from . import fisher
from . import linalg as la
from .channels import KrausChannel
from .errors import DimensionError, NumericalError, ParameterError

log = logging.getLogger(__name__)

KRAUS_DROP = 1e-12
NEG_CLAMP = 1e-8
COMMUTE_TOL = 1e-12


@dataclass
class LindbladSpec:
    """Constant Hamiltonian ``H`` and jump operators ``L_j``."""

    H: np.ndarray
    jumps: list = field(default_factory=list)
    label: str = ""

    def __post_init__(self):
        self.H = la.check_hermitian(self.H, tol=1e-12, name="H")
        self.jumps = [np.asarray(L, dtype=complex) for L in self.jumps]
        for L in self.jumps:
            if L.shape != self.H.shape:
                raise DimensionError(f"jump of shape {L.shape} does not match H {self.H.shape}")

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    def L0(self) -> np.ndarray:
        """Hamiltonian part ``-i(H ⊗ I - I ⊗ H^T)``."""
        I = np.eye(self.dim)
        return -1j * (np.kron(self.H, I) - np.kron(I, self.H.T))

    def L1(self) -> np.ndarray:
        """Dissipative part ``sum_j L_j ⊗ conj(L_j) - (L_j^H L_j ⊗ I + I ⊗ (L_j^H L_j)^T)/2``."""
        d = self.dim
        I = np.eye(d)
        out = np.zeros((d * d, d * d), dtype=complex)
        for L in self.jumps:
            LL = L.conj().T @ L
            out += np.kron(L, L.conj()) - 0.5 * (np.kron(LL, I) + np.kron(I, LL.T))
        return out

    def apply(self, rho: npt.ArrayLike) -> np.ndarray:
        """``L_tot[rho]`` by the direct formula."""
        rho = np.asarray(rho, dtype=complex)
        out = -1j * (self.H @ rho - rho @ self.H)
        for L in self.jumps:
            LL = L.conj().T @ L
            out += L @ rho @ L.conj().T - 0.5 * (LL @ rho + rho @ LL)
        return out


def superop(spec: LindbladSpec) -> np.ndarray:
    """Row-major matrix of ``L_tot``."""
    return spec.L0() + spec.L1()


def _apply_super(S: np.ndarray, X: np.ndarray) -> np.ndarray:
    d = X.shape[0]
    return (S @ X.reshape(-1)).reshape(d, d)


def evolve(spec: LindbladSpec, rho0: npt.ArrayLike, t: float) -> np.ndarray:
    """``exp(t L_tot)[rho0]``."""
    if t < 0:
        raise ParameterError("t must be nonnegative")
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.ndim == 1:
        rho0 = la.proj(rho0)
    rho = _apply_super(la.expm(t * superop(spec)), rho0)
    return la.hermitian_part(rho)


def superop_to_choi(S: np.ndarray) -> np.ndarray:
    """Choi matrix ``sum_ij |i><j| ⊗ N(|i><j|)`` of a square row-major superoperator."""
    d = int(round(np.sqrt(S.shape[0])))
    return S.reshape(d, d, d, d).transpose(2, 0, 3, 1).reshape(d * d, d * d)


def kraus_from_superop(S: np.ndarray, drop: float = KRAUS_DROP) -> KrausChannel:
    """Kraus operators from the Choi eigendecomposition.

    Eigenvalues below ``drop`` (relative to the largest) are discarded;
    negative eigenvalues in ``[-1e-8, 0)`` are clamped, with a warning
    when they exceed round-off.

    Raises
    ------
    NumericalError
        If the Choi matrix has an eigenvalue below ``-1e-8``.
    """
    C = la.hermitian_part(superop_to_choi(S))
    lam, vecs = np.linalg.eigh(C)
    if lam[0] < -NEG_CLAMP:
        raise NumericalError(f"Choi matrix has eigenvalue {lam[0]:.3e}; the map is not completely positive")
    d = int(round(np.sqrt(S.shape[0])))
    top = max(lam[-1], 1.0)
    if lam[0] < -drop * top:
        log.warning("clamping Choi eigenvalue %.3e", lam[0])
    ops = [np.sqrt(l) * vecs[:, i].reshape(d, d).T for i, l in enumerate(lam) if l > drop * top]
    return KrausChannel(ops[::-1], name="lindblad_effective", validate=False)


@dataclass
class DecomposedEvolution:
    """``E_t = N_t o (U_t . U_t^H)`` at a fixed time."""

    t: float
    E_t: np.ndarray
    N_t: KrausChannel
    U_t: np.ndarray
    N_super: np.ndarray
    commuting: bool
    composition_residual: float


def commutator_norm(spec: LindbladSpec) -> float:
    A, B = spec.L0(), spec.L1()
    return la.op_norm(A @ B - B @ A)


def decompose(spec: LindbladSpec, t: float) -> DecomposedEvolution:
    """Split the evolution up to ``t`` into unitary motion followed by ``N_t``.

    When ``[L0, L1] = 0`` the effective channel is ``exp(t L1)``; this is
    cross-checked against the general product ``E_t exp(-t L0)``.
    """
    if t < 0:
        raise ParameterError("t must be nonnegative")
    L0, L1 = spec.L0(), spec.L1()
    E = la.expm(t * (L0 + L1))
    Nsup = E @ la.expm(-t * L0)
    commuting = commutator_norm(spec) < COMMUTE_TOL
    if commuting:
        alt = la.expm(t * L1)
        gap = la.op_norm(alt - Nsup)
        if gap > 1e-8:
            raise NumericalError(f"commuting shortcut disagrees with the product form by {gap:.3e}")
        Nsup = alt
    U = la.expm(-1j * t * spec.H)
    N = kraus_from_superop(Nsup)
    d = spec.dim
    worst = 0.0
    for i in range(d):
        for j in range(d):
            X = np.zeros((d, d), dtype=complex)
            X[i, j] = 1.0
            worst = max(worst, la.op_norm(N.apply(U @ X @ U.conj().T) - _apply_super(E, X)))
    return DecomposedEvolution(t, E, N, U, Nsup, commuting, worst)


@dataclass(frozen=True)
class ClockFisher:
    f_exact: float
    f_unitary: float
    delta: float
    delta_bound: float
    f_noise: float

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def clock_fisher(spec: LindbladSpec, psi0: npt.ArrayLike, t0: float) -> ClockFisher:
    """Exact clock Fisher information and its unitary-part approximation.

    ``f_exact = F(rho, L_tot[rho])`` and ``f_unitary = F(rho, N_t(-i[H, psi(t0)]))``.
    With ``G = L_tot[rho] - E_t(-i[H, psi0])`` the channel-drift term,
    ``|delta| <= F(rho, G) + 2 sqrt(F(rho, G) f_unitary)``.
    """
    psi0 = np.asarray(psi0, dtype=complex).reshape(-1)
    P0 = la.proj(psi0)
    L = superop(spec)
    E = la.expm(t0 * L)
    rho = la.hermitian_part(_apply_super(E, P0))
    drho = la.hermitian_part(_apply_super(L, rho))
    dec = decompose(spec, t0)
    psi_t = dec.U_t @ psi0
    Pt = la.proj(psi_t)
    Du = dec.N_t.apply(-1j * (spec.H @ Pt - Pt @ spec.H))
    G = drho - la.hermitian_part(_apply_super(E, -1j * (spec.H @ P0 - P0 @ spec.H)))
    f_exact = fisher.qfi(rho, drho)
    f_unit = fisher.qfi(rho, la.hermitian_part(Du))
    f_noise = fisher.qfi(rho, G)
    bound = f_noise + 2 * np.sqrt(f_noise * f_unit)
    return ClockFisher(f_exact, f_unit, f_exact - f_unit, float(bound), f_noise)


def z_dephasing(omega: float, gamma: float) -> LindbladSpec:
    """``H = omega Z/2`` with jumps ``sqrt(gamma)|0><0|`` and ``sqrt(gamma)|1><1|``."""
    g = np.sqrt(gamma)
    return LindbladSpec(omega / 2 * la.PAULI_Z, [g * np.diag([1, 0]), g * np.diag([0, 1])], "z_dephasing")


def x_dephasing(omega: float, gamma: float) -> LindbladSpec:
    """``H = omega Z/2`` with jumps ``sqrt(gamma)|+><+|`` and ``sqrt(gamma)|-><-|``."""
    g = np.sqrt(gamma)
    plus = np.array([1, 1]) / np.sqrt(2)
    minus = np.array([1, -1]) / np.sqrt(2)
    return LindbladSpec(omega / 2 * la.PAULI_Z, [g * la.proj(plus), g * la.proj(minus)], "x_dephasing")


def amplitude_damping_spec(omega: float, gamma: float, n: int = 1) -> LindbladSpec:
    """``H = sum_i omega Z_i/2`` with decay ``sqrt(gamma)|1><0|`` on each site."""
    low = np.array([[0, 0], [1, 0]], dtype=complex) * np.sqrt(gamma)
    H = sum(la.kron_all([la.PAULI_Z if j == i else la.I2 for j in range(n)]) for i in range(n)) * omega / 2
    jumps = [la.kron_all([low if j == i else la.I2 for j in range(n)]) for i in range(n)]
    return LindbladSpec(H, jumps, "amplitude_damping")


def z_dephasing_closed_form(omega: float, gamma: float, t0: float) -> dict:
    """Closed forms for the Z-dephasing qubit started in ``|+>``.

    With ``r = exp(-gamma t0)``: ``f_exact = omega^2 r^2 + gamma^2 r^2 / (1 - r^2)``
    and ``f_unitary = omega^2 r^2``.
    """
    r2 = np.exp(-2 * gamma * t0)
    f_u = omega**2 * r2
    f_noise = gamma**2 * r2 / (1 - r2) if gamma > 0 else 0.0
    return {"f_exact": f_u + f_noise, "f_unitary": f_u, "delta": f_noise}


__all__ = [
    "LindbladSpec",
    "DecomposedEvolution",
    "ClockFisher",
    "superop",
    "evolve",
    "superop_to_choi",
    "kraus_from_superop",
    "commutator_norm",
    "decompose",
    "clock_fisher",
    "z_dephasing",
    "x_dephasing",
    "amplitude_damping_spec",
    "z_dephasing_closed_form",
]
