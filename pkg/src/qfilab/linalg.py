"""Dense complex linear algebra used throughout qfilab.

Conventions
-----------
* Vectorization is row-major: ``vec(A) = A.reshape(-1)``, so that
  ``|A>> = (A ⊗ I)|1>>`` and ``vec(A X B) = (A ⊗ B.T) vec(X)``.
* An eigenvalue ``lam`` of a PSD operator is treated as zero when
  ``lam < 1e-12 * max(1, lam_max)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import numpy.typing as npt
import scipy.linalg

from .errors import DimensionError, NumericalError

ZERO_REL = 1e-12
HERM_TOL = 1e-12
RECON_TOL = 1e-10

ArrayC = npt.NDArray[np.complex128]


def _square(A, name: str = "A") -> np.ndarray:
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {A.shape}")
    return A


def hermitian_part(A: npt.ArrayLike) -> ArrayC:
    A = np.asarray(A, dtype=complex)
    return (A + A.conj().T) / 2


def check_hermitian(A: npt.ArrayLike, tol: float = HERM_TOL, name: str = "A") -> ArrayC:
    """Validate Hermiticity relative to ``max(1, ||A||)`` and return the Hermitian part."""
    A = _square(np.asarray(A, dtype=complex), name)
    scale = max(1.0, op_norm(A)) if A.size else 1.0
    err = np.max(np.abs(A - A.conj().T)) if A.size else 0.0
    if err > tol * scale:
        raise NumericalError(f"{name} is not Hermitian: ||A - A^H||_max = {err:.3e}")
    return hermitian_part(A)


def zero_threshold(eigenvalues: npt.ArrayLike) -> float:
    ev = np.asarray(eigenvalues, dtype=float)
    lam_max = float(np.max(ev)) if ev.size else 0.0
    return ZERO_REL * max(1.0, lam_max)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigendecomposition ``A = U diag(eigenvalues) U^H`` with descending eigenvalues."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    zero_threshold: float

    def reconstruct(self) -> ArrayC:
        U = self.eigenvectors
        return (U * self.eigenvalues) @ U.conj().T

    def support_mask(self) -> np.ndarray:
        return self.eigenvalues >= self.zero_threshold

    def support_projector(self) -> ArrayC:
        U = self.eigenvectors[:, self.support_mask()]
        return U @ U.conj().T

    def kernel_projector(self) -> ArrayC:
        U = self.eigenvectors[:, ~self.support_mask()]
        return U @ U.conj().T

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.support_mask()))


def eig_hermitian(A: npt.ArrayLike, check: bool = True) -> SpectralDecomposition:
    """Spectral decomposition of a Hermitian matrix, eigenvalues descending.

    Parameters
    ----------
    A : array_like
        Hermitian matrix. Hermiticity is validated at ``1e-12 * max(1, ||A||)``.
    check : bool
        Verify the reconstruction and orthonormality contracts.

    Returns
    -------
    SpectralDecomposition

    Raises
    ------
    NumericalError
        If the LAPACK driver fails or the reconstruction residual exceeds
        ``1e-10 * max(1, ||A||)``.
    """
    A = check_hermitian(A)
    try:
        w, U = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericalError(f"eigh did not converge: {exc}") from exc
    w = w[::-1].copy()
    U = U[:, ::-1].copy()
    dec = SpectralDecomposition(w, U, zero_threshold(w))
    if check and A.size:
        scale = max(1.0, float(np.max(np.abs(w))))
        res = np.max(np.abs(A - dec.reconstruct()))
        if res > RECON_TOL * scale:
            raise NumericalError(f"eigendecomposition residual {res:.3e} exceeds contract")
        orth = np.max(np.abs(U.conj().T @ U - np.eye(len(w))))
        if orth > RECON_TOL:
            raise NumericalError(f"eigenvectors not orthonormal: residual {orth:.3e}")
    return dec


def partial_trace(A: npt.ArrayLike, keep: Sequence[int] | int, dims: Sequence[int]) -> ArrayC:
    """Trace out every tensor factor not listed in ``keep``.

    Parameters
    ----------
    A : array_like
        Operator on ``H_0 ⊗ ... ⊗ H_{n-1}``.
    keep : int or sequence of int
        Zero-based indices of the factors to keep, in any order. The output
        factors are ordered by increasing index.
    dims : sequence of int
        Local dimensions.
    """
    A = _square(np.asarray(A, dtype=complex))
    dims = [int(d) for d in dims]
    if int(np.prod(dims)) != A.shape[0]:
        raise DimensionError(f"dims {dims} do not match matrix dimension {A.shape[0]}")
    if np.isscalar(keep):
        keep = [int(keep)]
    keep = sorted(set(int(k) for k in keep))
    n = len(dims)
    for k in keep:
        if not 0 <= k < n:
            raise DimensionError(f"subsystem index {k} out of range for {n} factors")
    T = A.reshape(dims + dims)
    # contract traced indices pairwise with einsum
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    if 2 * n > len(letters):
        raise DimensionError("too many tensor factors for partial_trace")
    row = list(letters[:n])
    col = list(letters[n : 2 * n])
    for j in range(n):
        if j not in keep:
            col[j] = row[j]
    out = "".join(row[j] for j in keep) + "".join(col[j] for j in keep)
    res = np.einsum("".join(row) + "".join(col) + "->" + out, T)
    dk = int(np.prod([dims[j] for j in keep])) if keep else 1
    return res.reshape(dk, dk)


def vectorize(A: npt.ArrayLike) -> ArrayC:
    """Row-major vectorization ``|A>>``."""
    A = _square(np.asarray(A, dtype=complex))
    return A.reshape(-1).copy()


def devectorize(v: npt.ArrayLike) -> ArrayC:
    v = np.asarray(v, dtype=complex).reshape(-1)
    d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise DimensionError(f"vector length {v.size} is not a perfect square")
    return v.reshape(d, d).copy()


def op_norm(A: npt.ArrayLike) -> float:
    """Spectral norm (largest singular value)."""
    A = np.asarray(A, dtype=complex)
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


def trace_norm(A: npt.ArrayLike) -> float:
    """Schatten-1 norm (sum of singular values)."""
    A = np.asarray(A, dtype=complex)
    if A.size == 0:
        return 0.0
    return float(np.sum(np.linalg.svd(A, compute_uv=False)))


_EXPM_NORM_LIMIT = 700.0


def expm(A: npt.ArrayLike) -> ArrayC:
    """Matrix exponential (scaling and squaring with Pade approximants).

    Raises
    ------
    NumericalError
        If ``||A||_1`` is large enough that the result may overflow, or if the
        result is not finite.
    """
    A = _square(np.asarray(A, dtype=complex))
    nrm = float(np.linalg.norm(A, 1)) if A.size else 0.0
    # the real part of the spectrum controls growth; the norm is a cheap proxy
    if nrm > _EXPM_NORM_LIMIT and np.max(np.real(np.linalg.eigvals(A))) > _EXPM_NORM_LIMIT:
        raise NumericalError(f"expm overflow risk: ||A||_1 = {nrm:.3e}")
    E = scipy.linalg.expm(A)
    if not np.all(np.isfinite(E)):
        raise NumericalError(f"expm produced non-finite entries (||A||_1 = {nrm:.3e})")
    return E


def psd_function(A: npt.ArrayLike, f, dec: SpectralDecomposition | None = None) -> ArrayC:
    """Apply ``f`` to the support eigenvalues of a PSD matrix, zero on the kernel."""
    dec = eig_hermitian(A) if dec is None else dec
    w = dec.eigenvalues
    mask = dec.support_mask()
    vals = np.zeros_like(w)
    vals[mask] = f(w[mask])
    U = dec.eigenvectors
    return (U * vals) @ U.conj().T


def pinv_psd(A: npt.ArrayLike) -> ArrayC:
    """Moore-Penrose inverse of a PSD matrix using the relative zero threshold."""
    return psd_function(A, lambda w: 1.0 / w)


def sqrtm_psd(A: npt.ArrayLike) -> ArrayC:
    """Principal square root of a PSD matrix, negative round-off clamped to zero."""
    dec = eig_hermitian(A)
    U = dec.eigenvectors
    return (U * np.sqrt(np.clip(dec.eigenvalues, 0.0, None))) @ U.conj().T


def support_projector(A: npt.ArrayLike) -> ArrayC:
    return eig_hermitian(A).support_projector()


def kernel_projector(A: npt.ArrayLike) -> ArrayC:
    return eig_hermitian(A).kernel_projector()


def root_fidelity(rho: npt.ArrayLike, sigma: npt.ArrayLike) -> float:
    """``||sqrt(rho) sqrt(sigma)||_1``."""
    return trace_norm(sqrtm_psd(rho) @ sqrtm_psd(sigma))


def min_eigenvalue(A: npt.ArrayLike) -> float:
    return float(np.linalg.eigvalsh(hermitian_part(A))[0])


def is_psd(A: npt.ArrayLike, tol: float = 1e-10) -> bool:
    return min_eigenvalue(A) >= -tol


def check_density(rho: npt.ArrayLike, tol: float = 1e-10) -> ArrayC:
    """Validate a (possibly sub-normalized) density operator and clamp tiny negativity."""
    dec = eig_hermitian(rho)
    if dec.eigenvalues.size and dec.eigenvalues[-1] < -tol:
        raise NumericalError(f"density operator has eigenvalue {dec.eigenvalues[-1]:.3e}")
    w = np.clip(dec.eigenvalues, 0.0, None)
    tr = float(np.sum(w))
    if tr > 1 + tol:
        raise NumericalError(f"density operator trace {tr:.12f} exceeds 1")
    U = dec.eigenvectors
    return (U * w) @ U.conj().T


@dataclass(frozen=True)
class BlockCheck:
    """Outcome of :func:`psd_block_check`.

    Attributes
    ----------
    psd : bool
        Whether ``[[A, W], [W^H, B]]`` is PSD up to ``-tol``.
    range_ok : bool
        Whether ``W P_B^perp = 0`` within tolerance.
    range_residual : float
        ``||W P_B^perp||``.
    schur_min_eig : float
        Smallest eigenvalue of ``A - W B^+ W^H``.
    witness : ndarray or None
        A unit vector ``v`` with ``<v|M|v> < -tol`` when ``psd`` is false.
    """

    psd: bool
    range_ok: bool
    range_residual: float
    schur_min_eig: float
    witness: np.ndarray | None


def psd_block_check(A: npt.ArrayLike, W: npt.ArrayLike, B: npt.ArrayLike, tol: float = 1e-10) -> BlockCheck:
    """Decide positivity of a 2x2 block operator via the Schur complement of ``B``.

    The block matrix is PSD iff ``B >= 0``, ``W P_B^perp = 0`` and
    ``A - W B^+ W^H >= 0``.
    """
    A = check_hermitian(A, tol=1e-9, name="A")
    B = check_hermitian(B, tol=1e-9, name="B")
    W = np.asarray(W, dtype=complex)
    if W.shape != (A.shape[0], B.shape[0]):
        raise DimensionError(f"W has shape {W.shape}, expected {(A.shape[0], B.shape[0])}")
    decB = eig_hermitian(B)
    scale = max(1.0, op_norm(A), op_norm(B), op_norm(W))
    b_ok = decB.eigenvalues.size == 0 or decB.eigenvalues[-1] >= -tol
    Pk = decB.kernel_projector()
    range_res = op_norm(W @ Pk) if W.size else 0.0
    range_ok = range_res <= 1e-8 * scale
    Binv = psd_function(B, lambda w: 1.0 / w, dec=decB) if decB.rank else np.zeros_like(B)
    schur = hermitian_part(A - W @ Binv @ W.conj().T)
    schur_min = min_eigenvalue(schur) if schur.size else 0.0
    psd = bool(b_ok and range_ok and schur_min >= -tol)
    witness = None
    if not psd:
        M = np.block([[A, W], [W.conj().T, B]])
        w, U = np.linalg.eigh(hermitian_part(M))
        witness = U[:, 0]
    return BlockCheck(psd, bool(range_ok), float(range_res), float(schur_min), witness)


def random_hermitian(d: int, rng: np.random.Generator, scale: float = 1.0) -> ArrayC:
    G = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * (G + G.conj().T) / 2


def random_unitary(d: int, rng: np.random.Generator) -> ArrayC:
    from scipy.stats import unitary_group

    return unitary_group.rvs(d, random_state=rng) if d > 1 else np.exp(2j * np.pi * rng.random()) * np.ones((1, 1))


def random_state_vector(d: int, rng: np.random.Generator) -> ArrayC:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> ArrayC:
    r = d if rank is None else rank
    G = rng.normal(size=(d, r)) + 1j * rng.normal(size=(d, r))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def ket(index: int, d: int) -> ArrayC:
    v = np.zeros(d, dtype=complex)
    v[index] = 1.0
    return v


def proj(v: npt.ArrayLike) -> ArrayC:
    v = np.asarray(v, dtype=complex).reshape(-1)
    return np.outer(v, v.conj())


def kron_all(ops: Sequence[npt.ArrayLike]) -> ArrayC:
    out = np.ones((1, 1), dtype=complex)
    for op in ops:
        out = np.kron(out, np.asarray(op, dtype=complex))
    return out


def commutator(A, B) -> ArrayC:
    return A @ B - B @ A


def anticommutator(A, B) -> ArrayC:
    return A @ B + B @ A


I2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
