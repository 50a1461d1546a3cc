"""Bounds on Bob's Fisher information that avoid the full SLD computation.

Write ``Delta F = 4 var(H) - F_bob``. Post-processing Eve's output can only
lower her sensitivity, which yields upper bounds on ``F_bob``; pre-processing
factorizations of the complementary channel yield lower bounds.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
import numpy.typing as npt
from scipy import stats

from . import fisher
from . import linalg as la
from .channels import IIDChannel, KrausChannel
from .errors import ConditionError, DimensionError, NumericalError, ParameterError

log = logging.getLogger(__name__)

PROB_FLOOR = 1e-14
PIVOT_FLOOR = 1e-12


@dataclass(frozen=True)
class IIDNoiseSpec:
    """Single-site channel applied to each of ``n`` sites.

    Kraus index 0 is taken to be the identity-like operator and indices ``>= 1``
    are jumps; the weight ``|x|`` of a pattern counts its jumps.
    """

    single_site: KrausChannel
    n: int
    p: float | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError("n must be at least 1")
        if self.single_site.in_dim != self.single_site.out_dim:
            raise DimensionError("the single-site channel must map a site to itself")

    @property
    def channel(self) -> IIDChannel:
        return IIDChannel(self.single_site, self.n)

    @property
    def e0_deviation(self) -> float:
        """``||E_0 - c I||`` with ``c`` the best scalar fit; small for weak noise."""
        E0 = self.single_site.kraus[0]
        c = np.trace(E0) / E0.shape[0]
        return la.op_norm(E0 - c * np.eye(E0.shape[0]))

    def jump_products(self) -> np.ndarray:
        """Stack of ``E_a^H E_a`` over single-site Kraus indices."""
        return np.array([K.conj().T @ K for K in self.single_site.kraus])


@dataclass
class BoundResult:
    """A bound on Bob's time sensitivity.

    ``kind`` is ``"upper_on_F_Bob"`` or ``"lower_on_F_Bob"``.
    """

    value: float
    kind: str
    k_used: int | None
    certificate: str
    meta: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"value": self.value, "kind": self.kind, "k_used": self.k_used, "certificate": self.certificate, **self.meta}


def _stats_dense(psi: np.ndarray, H) -> tuple[np.ndarray, float]:
    H = np.asarray(H)
    Hpsi = H * psi if H.ndim == 1 else H @ psi
    mean = np.vdot(psi, Hpsi).real
    hbar = Hpsi - mean * psi
    return hbar, float(np.vdot(hbar, hbar).real)


def _dense_pinch_terms(psi: np.ndarray, hbar: np.ndarray, M: np.ndarray, n: int, k: int):
    """Yield ``(|x|, tr(M_x psi), 2 Re <hbar|M_x|psi>)`` for patterns with ``|x| <= k``.

    Depth-first over sites so only ``n`` partial vectors are alive at a time.
    """
    d = M.shape[1]
    m = M.shape[0]

    def rec(T, site, w):
        if site == n:
            v = T.reshape(-1)
            yield w, np.vdot(psi, v).real, 2 * np.vdot(hbar, v).real
            return
        for a in range(m):
            wa = w + (a > 0)
            if wa > k:
                continue
            Ta = np.moveaxis(np.tensordot(M[a], T, axes=([1], [site])), 0, site)
            yield from rec(Ta, site + 1, wa)

    yield from rec(psi.reshape([d] * n), 0, 0)


def pinch_sum(terms, floor: float = PROB_FLOOR) -> tuple[float, int, int]:
    """Sum ``num^2 / den`` over ``(den, num)`` pairs, dropping ``den < floor``.

    Dropping a term removes a nonnegative contribution, which only loosens an
    upper bound on ``F_bob``. Returns ``(total, kept, dropped)``.
    """
    total, kept, dropped = 0.0, 0, 0
    for den, num in terms:
        if den < floor:
            dropped += 1
            continue
        total += num * num / den
        kept += 1
    return total, kept, dropped


def pinched_iid_upper(psi, H, spec: IIDNoiseSpec, k: int) -> BoundResult:
    """Upper bound on ``F_bob`` from dephasing Eve's register and keeping ``|x| <= k``.

    ``F_bob <= 4 var(H) - sum_{|x|<=k} [2 Re <psi|Hbar E_x^H E_x|psi>]^2 / tr(E_x^H E_x psi)``

    Parameters
    ----------
    psi : array_like or state object
        A dense vector of length ``d**n``, or an object exposing
        ``pinch_terms(H, single_site, k)`` (see :mod:`qfilab.manybody`).
    H : array_like
        Dense Hamiltonian, or its diagonal as a 1-D array. Passed through
        unchanged to state objects.
    k : int
        Largest jump weight kept.
    """
    if k < 0:
        raise ParameterError("k must be nonnegative")
    if hasattr(psi, "pinch_terms"):
        four_var, terms = psi.pinch_terms(H, spec.single_site, k)
        total, kept, dropped = pinch_sum(terms)
    else:
        psi = np.asarray(psi, dtype=complex).reshape(-1)
        d = spec.single_site.in_dim
        if psi.size != d**spec.n:
            raise DimensionError(f"state has length {psi.size}, expected {d}**{spec.n}")
        hbar, var = _stats_dense(psi, H)
        four_var = 4 * var
        M = spec.jump_products()
        gen = ((den, num) for _, den, num in _dense_pinch_terms(psi, hbar, M, spec.n, min(k, spec.n)))
        total, kept, dropped = pinch_sum(gen)
    value = max(four_var - total, 0.0)
    return BoundResult(
        value,
        "upper_on_F_Bob",
        k,
        f"Eve's register dephased and projected onto jump weight <= {k}; {kept} terms kept, {dropped} below {PROB_FLOOR:g} dropped",
        {"four_var": four_var, "delta_f_lower": total, "terms_kept": kept, "terms_dropped": dropped},
    )


def preprocessing_lower(psi, H, nhat0) -> BoundResult:
    """Lower bound ``F_bob >= 4 var(H) - F(Nhat0(psi), Nhat0({Hbar, psi}))``.

    The caller asserts that the complementary channel factors as
    ``Nhat = N' o Nhat0``. The identity ``Delta F = F(rho_E, Nhat({Hbar, psi}))``
    behind this bound requires the trade-off relation to hold with equality,
    which the caller should confirm with :func:`qfilab.clock.equality_conditions`.
    """
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if nhat0.in_dim != psi.size:
        raise DimensionError(f"Nhat0 expects dimension {nhat0.in_dim}, state has {psi.size}")
    hbar, var = _stats_dense(psi, H)
    rho0 = nhat0.apply(la.proj(psi))
    D0 = nhat0.apply(np.outer(hbar, psi.conj()) + np.outer(psi, hbar.conj()))
    f0 = fisher.qfi(rho0, D0)
    return BoundResult(
        max(4 * var - f0, 0.0),
        "lower_on_F_Bob",
        None,
        "pre-processing factorization Nhat = N' o Nhat0 asserted by caller; valid when the trade-off holds with equality",
        {"four_var": 4 * var, "delta_f_upper": f0},
    )


def ldl_psd(A: npt.ArrayLike, pivot_floor: float = PIVOT_FLOOR) -> tuple[np.ndarray, np.ndarray]:
    """``A = L diag(tau) L^H`` with unit lower-triangular ``L`` and no pivoting.

    Pivots below ``pivot_floor * max(1, max diag)`` are set to zero; the
    corresponding column of ``L`` is the unit vector, which is consistent only
    if the remaining column is also negligible.

    Raises
    ------
    NumericalError
        On a negative pivot or a nonzero column below a zero pivot.
    """
    A = la.check_hermitian(A, tol=1e-9, name="rho_E").copy()
    d = A.shape[0]
    L = np.eye(d, dtype=complex)
    tau = np.zeros(d)
    scale = pivot_floor * max(1.0, float(np.max(np.abs(np.diag(A)))))
    for j in range(d):
        piv = A[j, j].real
        if piv < -scale:
            raise NumericalError(f"negative pivot {piv:.3e} at {j}")
        col = A[j + 1 :, j]
        if piv <= scale:
            if col.size and np.max(np.abs(col)) > 1e3 * scale:
                raise NumericalError(f"factorization breakdown at pivot {j}")
            continue
        tau[j] = piv
        L[j + 1 :, j] = col / piv
        A[j + 1 :, j + 1 :] -= np.outer(col, col.conj()) / piv
    return L, tau


def near_diagonal_upper(psi, H, nhat) -> BoundResult:
    """Upper bound on ``Delta F`` (lower bound on ``F_bob``) for nearly diagonal ``rho_E``.

    With ``rho_E = A tau A^H`` from :func:`ldl_psd`,
    ``Delta F <= ||A||^2 F(tau, A^{-1} Nhat({Hbar, psi}) A^{-H})``, and the
    right side is an exact diagonal-state Fisher information.

    ``nhat`` is the complementary channel itself (any object with ``apply``).
    Like :func:`preprocessing_lower` this relies on the equality case of the
    trade-off.
    """
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    hbar, var = _stats_dense(psi, H)
    rhoE = nhat.apply(la.proj(psi))
    DE = nhat.apply(np.outer(hbar, psi.conj()) + np.outer(psi, hbar.conj()))
    A, tau = ldl_psd(rhoE)
    Ainv = np.linalg.solve(A, np.eye(A.shape[0]))
    X = Ainv @ DE @ Ainv.conj().T
    denom = tau[:, None] + tau[None, :]
    support = denom > 0
    leak = np.abs(X[~support])
    if leak.size and leak.max() > 1e-9 * max(1.0, np.abs(X).max()):
        f = np.inf
    else:
        f = float(np.sum(2 * np.abs(X[support]) ** 2 / denom[support]))
    bound = la.op_norm(A) ** 2 * f
    return BoundResult(
        max(4 * var - bound, 0.0),
        "lower_on_F_Bob",
        None,
        "rho_E = A tau A^H (LDL); Delta F <= ||A||^2 F(tau, A^-1 Nhat(D) A^-H); valid when the trade-off holds with equality",
        {"four_var": 4 * var, "delta_f_upper": bound, "norm_A": la.op_norm(A)},
    )


def energy_access_bounds(scenario, S: npt.ArrayLike, delta: float) -> tuple[float, float]:
    """Bounds from how well Eve's observable ``S`` reproduces the energy.

    Returns
    -------
    lower_floor : float
        ``4 <(Nhat^H(S) - Hbar)^2>_psi``, a candidate objective only: the bound
        on ``F_bob`` is the minimum of this over ``S``.
    upper_cap : float
        ``12 delta ||Hbar||^2``, a certified upper bound on ``F_bob``.

    Raises
    ------
    ConditionError
        If ``||Nhat^H(S) - Hbar|| > delta ||Hbar||`` or
        ``||Nhat^H(S^2) - Hbar^2|| > delta ||Hbar||^2``; the measured norms are
        in the message.
    """
    S = la.check_hermitian(S, tol=1e-10, name="S")
    psi = scenario.psi
    Hbar = scenario.H - scenario.mean_energy * np.eye(psi.size)
    comp = scenario.channel.complementary()
    A1 = comp.adjoint_apply(S)
    A2 = comp.adjoint_apply(S @ S)
    nH = la.op_norm(Hbar)
    r1 = la.op_norm(A1 - Hbar)
    r2 = la.op_norm(A2 - Hbar @ Hbar)
    slack = 1e-12 * max(1.0, nH**2)
    if r1 > delta * nH + slack or r2 > delta * nH**2 + slack:
        raise ConditionError(
            f"energy-access preconditions fail: ||Nhat^H(S) - Hbar|| = {r1:.3e} vs {delta * nH:.3e}, "
            f"||Nhat^H(S^2) - Hbar^2|| = {r2:.3e} vs {delta * nH**2:.3e}"
        )
    v = (A1 - Hbar) @ psi
    floor = 4 * float(np.vdot(v, v).real)
    return floor, 12 * delta * nH**2


def weak_noise_order_fit(sweep: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """Least-squares slope of ``log(delta_f)`` against ``log(p)``.

    Points with ``delta_f <= 0`` are dropped with a warning. At least four
    remaining points spanning a decade in ``p`` are required.
    """
    arr = np.asarray(sweep, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ParameterError("sweep must be a sequence of (p, delta_f) pairs")
    good = (arr[:, 1] > 0) & (arr[:, 0] > 0)
    if not np.all(good):
        log.warning("dropping %d nonpositive points from the order fit", int(np.sum(~good)))
    arr = arr[good]
    if arr.shape[0] < 4:
        raise ParameterError("need at least four positive points")
    if arr[:, 0].max() < 10 * arr[:, 0].min() * (1 - 1e-12):
        raise ParameterError("p must span at least one decade")
    fit = stats.linregress(np.log(arr[:, 0]), np.log(arr[:, 1]))
    return float(fit.slope), float(fit.stderr)


__all__ = [
    "IIDNoiseSpec",
    "BoundResult",
    "pinch_sum",
    "pinched_iid_upper",
    "preprocessing_lower",
    "ldl_psd",
    "near_diagonal_upper",
    "energy_access_bounds",
    "weak_noise_order_fit",
]
