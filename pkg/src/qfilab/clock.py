"""Noisy clock scenarios: time and energy directions and the Bob/Eve Fisher trade-off.

A pure probe ``psi`` evolves under ``H``; at time ``t0`` it passes through a
channel ``N`` whose output goes to Bob and whose environment goes to Eve via
the complementary channel ``Nhat``. With ``xi = (H - <H>) psi``::

    d psi / dt   = -i [H, psi] = -i(|xi><psi| - |psi><xi|)
    d psi / deta = {H - <H>, psi} / (2 var)

and the trade-off reads ``F_bob(t) / (4 var) + F_eve(eta) * var <= 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import numpy.typing as npt

from . import fisher
from . import linalg as la
from .errors import ConditionError, DimensionError, StationaryProbeError

EQUALITY_TOL = 1e-8
ZERO_LOSS_TOL = 1e-9


def _vec(psi) -> np.ndarray:
    return np.asarray(psi, dtype=complex).reshape(-1)


def energy_stats(psi: npt.ArrayLike, H: npt.ArrayLike) -> tuple[float, float]:
    """Mean and variance of ``H`` in ``psi``."""
    psi = _vec(psi)
    Hpsi = np.asarray(H) @ psi
    mean = np.vdot(psi, Hpsi).real
    var = np.vdot(Hpsi, Hpsi).real - mean**2
    return float(mean), float(max(var, 0.0))


def xi_vector(psi: npt.ArrayLike, H: npt.ArrayLike) -> np.ndarray:
    """``xi = (H - <H>) psi``, orthogonal to ``psi`` with ``||xi||^2 = var(H)``.

    Raises
    ------
    StationaryProbeError
        If ``xi`` vanishes (``psi`` is an eigenvector of ``H``).
    """
    psi = _vec(psi)
    H = np.asarray(H, dtype=complex)
    Hpsi = H @ psi
    xi = Hpsi - np.vdot(psi, Hpsi) * psi
    scale = max(1.0, la.op_norm(H))
    if np.linalg.norm(xi) <= 1e-12 * scale:
        raise StationaryProbeError("stationary probe: H psi is parallel to psi, all Fisher quantities vanish")
    return xi


def time_direction(psi: npt.ArrayLike, xi: npt.ArrayLike) -> np.ndarray:
    """``-i(|xi><psi| - |psi><xi|)``."""
    psi, xi = _vec(psi), _vec(xi)
    return -1j * (np.outer(xi, psi.conj()) - np.outer(psi, xi.conj()))


def energy_direction(psi: npt.ArrayLike, xi: npt.ArrayLike) -> np.ndarray:
    """``|xi><psi| + |psi><xi|``."""
    psi, xi = _vec(psi), _vec(xi)
    return np.outer(xi, psi.conj()) + np.outer(psi, xi.conj())


@dataclass
class MetrologyScenario:
    """Probe ``psi`` (state at ``t0``), generator ``H`` and channel.

    ``channel`` is any object with ``apply``, ``apply_complementary``,
    ``stinespring_apply`` and ``kraus_vectors``, e.g.
    :class:`~qfilab.channels.KrausChannel` or :class:`~qfilab.channels.IIDChannel`.
    """

    psi: np.ndarray
    H: np.ndarray
    channel: Any
    t0: float = 0.0
    label: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.psi = _vec(self.psi)
        nrm = np.linalg.norm(self.psi)
        if abs(nrm - 1) > 1e-12:
            raise ConditionError(f"probe state is not normalized: ||psi|| = {nrm:.15f}")
        self.H = la.check_hermitian(self.H, tol=1e-12, name="H")
        if self.H.shape[0] != self.psi.size:
            raise DimensionError("H and psi dimensions differ")
        if getattr(self.channel, "in_dim", self.psi.size) != self.psi.size:
            raise DimensionError(
                f"channel input dimension {self.channel.in_dim} differs from probe dimension {self.psi.size}"
            )

    @classmethod
    def from_initial(cls, psi_init, H, channel, t0: float = 0.0, label: str = "") -> "MetrologyScenario":
        """Evolve ``psi_init`` for time ``t0`` under ``H`` before the channel acts."""
        H = np.asarray(H, dtype=complex)
        psi = la.expm(-1j * H * t0) @ _vec(psi_init)
        return cls(psi, H, channel, t0, label)

    @property
    def mean_energy(self) -> float:
        return energy_stats(self.psi, self.H)[0]

    @property
    def variance(self) -> float:
        return energy_stats(self.psi, self.H)[1]

    @property
    def sigma_H(self) -> float:
        return math.sqrt(self.variance)

    @property
    def xi(self) -> np.ndarray:
        return xi_vector(self.psi, self.H)


@dataclass(frozen=True)
class VirtualQubit:
    """The span of ``|+>_L = psi`` and ``|->_L = xi / sigma_H``."""

    plus: np.ndarray
    minus: np.ndarray
    sigma_H: float

    @classmethod
    def from_scenario(cls, sc: MetrologyScenario) -> "VirtualQubit":
        xi = sc.xi
        s = float(np.linalg.norm(xi))
        return cls(sc.psi, xi / s, s)

    def _op(self, a, b) -> np.ndarray:
        return np.outer(a, b.conj())

    @property
    def X_L(self) -> np.ndarray:
        return self._op(self.plus, self.plus) - self._op(self.minus, self.minus)

    @property
    def Y_L(self) -> np.ndarray:
        return -1j * self._op(self.minus, self.plus) + 1j * self._op(self.plus, self.minus)

    @property
    def Z_L(self) -> np.ndarray:
        return self._op(self.plus, self.minus) + self._op(self.minus, self.plus)

    @property
    def Pi_L(self) -> np.ndarray:
        return self._op(self.plus, self.plus) + self._op(self.minus, self.minus)

    @property
    def DY(self) -> np.ndarray:
        """Time direction ``sigma_H Y_L``."""
        return self.sigma_H * self.Y_L

    @property
    def DZ(self) -> np.ndarray:
        """Energy-type direction ``sigma_H Z_L = {H - <H>, psi}``."""
        return self.sigma_H * self.Z_L


def optimal_time_observable(sc: MetrologyScenario, M_gauge: npt.ArrayLike | None = None) -> np.ndarray:
    """Locally optimal time observable ``t0 - i[H, psi]/(2 var) + P_perp M P_perp``.

    Its mean is ``t0``, ``tr(T d_t psi) = 1`` and its variance saturates the
    Cramer-Rao bound ``1 / (4 var)``.
    """
    var = sc.variance
    if var <= 0:
        raise StationaryProbeError("stationary probe has no time observable")
    d = sc.psi.size
    P = la.proj(sc.psi)
    T = sc.t0 * np.eye(d) - 1j * la.commutator(sc.H, P) / (2 * var)
    if M_gauge is not None:
        Pp = np.eye(d) - P
        T = T + Pp @ la.check_hermitian(M_gauge, tol=1e-9, name="M") @ Pp
    return la.hermitian_part(T)


def eta_direction(sc: MetrologyScenario) -> np.ndarray:
    """``d psi / d eta = {H - <H>, psi} / (2 var)``."""
    var = sc.variance
    if var <= 0:
        raise StationaryProbeError("stationary probe has no energy direction")
    return energy_direction(sc.psi, sc.xi) / (2 * var)


@dataclass(frozen=True)
class EqualityDiagnostics:
    """Outcome of :func:`equality_conditions`."""

    holds: bool
    residual: float
    threshold: float
    marginal: bool
    rank_B: int
    rank_E: int
    dim_B: int
    dim_E: int
    nullspace_holds: bool | None
    nullspace_residual: float | None

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _vxi_matrix(channel, xi) -> np.ndarray:
    w = channel.stinespring_apply(xi)
    return w.reshape(channel.out_dim, channel.env_dim)


def equality_conditions(sc: MetrologyScenario, nullspace: bool = True) -> EqualityDiagnostics:
    """Check ``(P_B^perp ⊗ P_E^perp) V |xi> = 0``.

    The residual is compared with ``1e-8 * ||xi||``; values within a factor of
    ten of that threshold are flagged as marginal. The equivalent condition
    "every ``E = sum c_k E_k`` with ``E psi = 0`` has ``P_B^perp E xi = 0``"
    is evaluated as a cross-check when ``nullspace`` is true.
    """
    xi = sc.xi
    ch = sc.channel
    rhoB = ch.apply(la.proj(sc.psi))
    rhoE = ch.apply_complementary(la.proj(sc.psi))
    decB, decE = la.eig_hermitian(rhoB), la.eig_hermitian(rhoE)
    PB, PE = decB.kernel_projector(), decE.kernel_projector()
    M = _vxi_matrix(ch, xi)
    # row-major: (A ⊗ B) vec(M) = vec(A M B^T)
    res = float(np.linalg.norm(PB @ M @ PE.T))
    thr = EQUALITY_TOL * float(np.linalg.norm(xi))
    holds = res <= thr
    marginal = thr / 10 <= res <= thr * 10
    ns_holds = ns_res = None
    if nullspace:
        A = ch.kraus_vectors(sc.psi)  # rows E_k psi
        B = ch.kraus_vectors(xi)
        u, s, vh = np.linalg.svd(A.T, full_matrices=True)
        tol = 1e-10 * max(1.0, s[0] if s.size else 1.0)
        rank = int(np.sum(s > tol))
        C = vh[rank:].conj().T  # columns c with sum_k c_k E_k psi = 0
        if C.shape[1]:
            ns_res = float(np.linalg.norm(PB @ (B.T @ C)))
        else:
            ns_res = 0.0
        ns_holds = ns_res <= thr
    return EqualityDiagnostics(
        bool(holds), res, thr, bool(marginal), decB.rank, decE.rank, rhoB.shape[0], rhoE.shape[0], ns_holds, ns_res
    )


@dataclass(frozen=True)
class FisherReport:
    """The Fisher quantities of a clock scenario on both sides of the channel."""

    f_alice_t: float
    f_alice_eta: float
    f_bob_t: float
    f_eve_eta: float
    delta_f: float
    delta_f_eve: float
    sum_ratio: float
    equality_holds: bool
    rank_diag: str
    equality: EqualityDiagnostics

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "equality"}
        d["equality"] = self.equality.as_dict()
        return d


def fisher_report(sc: MetrologyScenario) -> FisherReport:
    """Evaluate Bob's time sensitivity and Eve's energy sensitivity independently."""
    var = sc.variance
    xi = sc.xi
    ch = sc.channel
    psiP = la.proj(sc.psi)
    DY = time_direction(sc.psi, xi)
    DZ = energy_direction(sc.psi, xi)
    rhoB = ch.apply(psiP)
    f_bob = fisher.qfi(rhoB, ch.apply(DY))
    rhoE = ch.apply_complementary(psiP)
    ZE = ch.apply_complementary(DZ)
    f_eve_z = fisher.qfi(rhoE, ZE)
    f_eve_eta = f_eve_z / (4 * var**2)
    eq = equality_conditions(sc)
    f_alice_t = 4 * var
    f_alice_eta = 1 / var
    ratio = f_bob / f_alice_t + f_eve_eta / f_alice_eta
    diag = f"rank(rho_B)={eq.rank_B}/{eq.dim_B}, rank(rho_E)={eq.rank_E}/{eq.dim_E}"
    return FisherReport(
        f_alice_t=f_alice_t,
        f_alice_eta=f_alice_eta,
        f_bob_t=f_bob,
        f_eve_eta=f_eve_eta,
        delta_f=f_alice_t - f_bob,
        delta_f_eve=f_eve_z,
        sum_ratio=ratio,
        equality_holds=eq.holds,
        rank_diag=diag,
        equality=eq,
    )


def two_parameter_bound(psi: npt.ArrayLike, A: npt.ArrayLike, B: npt.ArrayLike, channel) -> tuple[float, float]:
    """Trade-off for two arbitrary generators ``A`` (Bob) and ``B`` (Eve).

    Returns
    -------
    lhs : float
        ``F_bob(a) / (4 var A) + F_eve(b) / (4 var B)``.
    rhs : float
        ``1 + 2 sqrt(1 - <i[A, B]>^2 / (4 var A var B))``.
    """
    psi = _vec(psi)
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    _, vA = energy_stats(psi, A)
    _, vB = energy_stats(psi, B)
    if vA <= 1e-14 or vB <= 1e-14:
        raise StationaryProbeError("both generators need nonzero variance")
    P = la.proj(psi)
    f_bob = fisher.qfi(channel.apply(P), channel.apply(-1j * la.commutator(A, P)))
    f_eve = fisher.qfi(channel.apply_complementary(P), channel.apply_complementary(-1j * la.commutator(B, P)))
    lhs = f_bob / (4 * vA) + f_eve / (4 * vB)
    c = np.vdot(psi, 1j * la.commutator(A, B) @ psi).real
    rhs = 1 + 2 * math.sqrt(max(0.0, 1 - c**2 / (4 * vA * vB)))
    return float(lhs), float(rhs)


def logical_qubit_relation(psi: npt.ArrayLike, xi: npt.ArrayLike, channel) -> dict:
    """Trade-off for an arbitrary orthogonal pair and a trace-non-increasing map.

    Returns ``F(N psi, N D^Y) + F(Nhat psi, Nhat D^Z)`` as ``lhs`` and
    ``4 <xi|N^H(I)|xi>`` as ``rhs``, together with the rank-condition residual
    ``||(P_B^perp ⊗ P_E^perp) V xi||``.
    """
    psi, xi = _vec(psi), _vec(xi)
    if abs(np.vdot(psi, xi)) > 1e-10 * max(1.0, np.linalg.norm(xi)):
        raise ConditionError("xi must be orthogonal to psi")
    P = la.proj(psi)
    DY = time_direction(psi, xi)
    DZ = energy_direction(psi, xi)
    f_b = fisher.qfi(channel.apply(P), channel.apply(DY))
    f_e = fisher.qfi(channel.apply_complementary(P), channel.apply_complementary(DZ))
    NI = channel.adjoint_apply(np.eye(channel.out_dim))
    rhs = float(4 * np.vdot(xi, NI @ xi).real)
    rhoB = channel.apply(P)
    rhoE = channel.apply_complementary(P)
    PB = la.kernel_projector(rhoB)
    PE = la.kernel_projector(rhoE)
    res = float(np.linalg.norm(PB @ _vxi_matrix(channel, xi) @ PE.T))
    return {"f_bob": f_b, "f_eve": f_e, "lhs": f_b + f_e, "rhs": rhs, "rank_residual": res}


@dataclass(frozen=True)
class SignalGenerator:
    K: np.ndarray
    residual: float
    order: int


def signal_generator(H0, G, f0: float, T: float, series_order: int = 20) -> SignalGenerator:
    """Effective generator of ``f`` for ``U_f = exp(-i T (H0 + f G))``.

    ``K = T sum_{k=0}^{order} (-i T)^k / (k+1)! ad_{H_f}^k(G)`` with
    ``ad_H(X) = [H, X]``. It satisfies ``d psi_f / df = -i [K, psi_f]`` for
    ``psi_f = U_f psi U_f^H``, i.e. ``dU_f/df = -i K U_f``.

    The norm of the last retained term is reported as ``residual``.
    """
    if series_order < 1:
        raise ConditionError("series_order must be at least 1")
    H0 = np.asarray(H0, dtype=complex)
    G = np.asarray(G, dtype=complex)
    Hf = H0 + f0 * G
    term = G.copy()
    K = T * term
    last = la.op_norm(T * term)
    for k in range(1, series_order + 1):
        term = la.commutator(Hf, term)
        c = T * (-1j * T) ** k / math.factorial(k + 1)
        K = K + c * term
        last = la.op_norm(c * term)
    herm_err = la.op_norm(K - K.conj().T) / 2
    if herm_err > 1e-9 * max(1.0, la.op_norm(K)) + last:
        raise ConditionError(f"series result is not Hermitian: residual {herm_err:.3e}")
    return SignalGenerator(la.hermitian_part(K), float(last), series_order)


def explicit_bob_sld(sc: MetrologyScenario) -> np.ndarray:
    """Closed-form SLD on Bob's side for a zero-loss scenario.

    ``R_B = -2i N(|xi><psi|) rho^+ + 2i rho^+ N(|psi><xi|) P_perp``.

    Raises
    ------
    ConditionError
        If ``Nhat(|xi><psi| + |psi><xi|) != 0`` (see ``codes.zero_loss_check``)
        or the equality condition fails.
    """
    xi = sc.xi
    ch = sc.channel
    DZ = energy_direction(sc.psi, xi)
    loss = la.op_norm(ch.apply_complementary(DZ))
    if loss > ZERO_LOSS_TOL * max(1.0, np.linalg.norm(xi)):
        raise ConditionError(f"zero-loss conditions fail (||Nhat(D^Z)|| = {loss:.3e}); see codes.zero_loss_check")
    eq = equality_conditions(sc, nullspace=False)
    if not eq.holds:
        raise ConditionError(f"equality condition fails (residual {eq.residual:.3e})")
    rho = ch.apply(la.proj(sc.psi))
    dec = la.eig_hermitian(rho)
    rinv = la.psd_function(rho, lambda w: 1.0 / w, dec=dec)
    Pp = dec.kernel_projector()
    R = -2j * ch.apply(np.outer(xi, sc.psi.conj())) @ rinv + 2j * rinv @ ch.apply(np.outer(sc.psi, xi.conj())) @ Pp
    err = la.op_norm(R - R.conj().T)
    if err > 1e-8 * max(1.0, la.op_norm(R)):
        raise ConditionError(f"explicit SLD is not Hermitian (residual {err:.3e})")
    return la.hermitian_part(R)


__all__ = [
    "MetrologyScenario",
    "VirtualQubit",
    "FisherReport",
    "EqualityDiagnostics",
    "energy_stats",
    "xi_vector",
    "time_direction",
    "energy_direction",
    "optimal_time_observable",
    "eta_direction",
    "fisher_report",
    "equality_conditions",
    "two_parameter_bound",
    "logical_qubit_relation",
    "signal_generator",
    "explicit_bob_sld",
]
