"""Kraus channels, complementary channels, adjoints and tensor powers.

A channel ``N(X) = sum_k E_k X E_k^H`` is stored as its Kraus list. The
environment basis of the complementary channel is the Kraus index basis, in
the given order, and the Stinespring isometry is ordered ``B ⊗ E``::

    V[b * K + k, a] = E_k[b, a]

so that ``tr_E(V X V^H) = N(X)`` and ``tr_B(V X V^H) = Nhat(X)`` with
``Nhat(X)[k, k'] = tr(E_{k'}^H E_k X)``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np
import numpy.typing as npt

from . import linalg as la
from .errors import CapExceededError, DimensionError, NumericalError, ParameterError

TP_TOL = 1e-10
DEFAULT_KRAUS_CAP = 4096


class KrausChannel:
    """Completely positive, trace-non-increasing map in operator-sum form.

    Parameters
    ----------
    kraus : sequence of ndarray
        Kraus operators, each of shape ``(out_dim, in_dim)``.
    name : str, optional
        Label used in reports.
    weights : sequence of int, optional
        Jump weight of each Kraus operator (set by :func:`tensor_power`).
    """

    def __init__(self, kraus, name: str = "custom", weights=None, meta=None, validate: bool = True):
        ops = tuple(np.array(K, dtype=complex) for K in kraus)
        if not ops:
            raise DimensionError("a channel needs at least one Kraus operator")
        shape = ops[0].shape
        if any(K.ndim != 2 or K.shape != shape for K in ops):
            raise DimensionError("Kraus operators must be matrices of equal shape")
        self.kraus = ops
        self.name = name
        self.weights = None if weights is None else tuple(int(w) for w in weights)
        self.meta = dict(meta or {})
        if validate:
            lam = la.op_norm(self.kraus_sum()) if shape[1] else 0.0
            if lam > 1 + TP_TOL:
                raise NumericalError(f"channel is trace increasing: ||sum E^H E|| = {lam:.12f}")

    # basic data -----------------------------------------------------------
    @property
    def in_dim(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def out_dim(self) -> int:
        return self.kraus[0].shape[0]

    @property
    def n_kraus(self) -> int:
        return len(self.kraus)

    @property
    def env_dim(self) -> int:
        return len(self.kraus)

    def stack(self) -> np.ndarray:
        """Kraus operators as an array of shape ``(K, out_dim, in_dim)``."""
        return np.stack(self.kraus)

    def kraus_sum(self) -> np.ndarray:
        K = self.stack()
        return np.einsum("kba,kbc->ac", K.conj(), K)

    @property
    def trace_preserving(self) -> bool:
        return float(np.max(np.abs(self.kraus_sum() - np.eye(self.in_dim)))) <= TP_TOL

    # actions ----------------------------------------------------------------
    def _check_in(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=complex)
        if X.shape != (self.in_dim, self.in_dim):
            raise DimensionError(f"input has shape {X.shape}, channel expects {self.in_dim}x{self.in_dim}")
        return X

    def apply(self, X: npt.ArrayLike) -> np.ndarray:
        """``sum_k E_k X E_k^H``."""
        X = self._check_in(X)
        K = self.stack()
        return np.einsum("kab,bc,kdc->ad", K, X, K.conj(), optimize=True)

    __call__ = apply

    def apply_complementary(self, X: npt.ArrayLike) -> np.ndarray:
        """``Nhat(X)[k, k'] = tr(E_{k'}^H E_k X)``."""
        X = self._check_in(X)
        K = self.stack()
        KX = K @ X
        return np.einsum("kba,lba->kl", KX, K.conj(), optimize=True)

    def adjoint_apply(self, W: npt.ArrayLike) -> np.ndarray:
        """Heisenberg picture ``sum_k E_k^H W E_k``."""
        W = np.asarray(W, dtype=complex)
        if W.shape != (self.out_dim, self.out_dim):
            raise DimensionError(f"observable has shape {W.shape}, expected {self.out_dim}x{self.out_dim}")
        K = self.stack()
        return np.einsum("kba,bc,kcd->ad", K.conj(), W, K, optimize=True)

    def stinespring_apply(self, v: npt.ArrayLike) -> np.ndarray:
        """``V|v>`` as a vector on ``B ⊗ E``."""
        v = np.asarray(v, dtype=complex).reshape(-1)
        return stinespring(self) @ v

    def kraus_vectors(self, v: npt.ArrayLike) -> np.ndarray:
        """Rows ``E_k |v>``, shape ``(K, out_dim)``."""
        return self.stack() @ np.asarray(v, dtype=complex).reshape(-1)

    # derived channels ---------------------------------------------------------
    def complementary(self) -> "KrausChannel":
        return complementary(self)

    def adjoint(self) -> "AdjointMap":
        return adjoint(self)

    def to_kraus(self) -> "KrausChannel":
        return self

    def __repr__(self) -> str:
        return f"KrausChannel({self.name!r}, in_dim={self.in_dim}, out_dim={self.out_dim}, n_kraus={self.n_kraus})"

    # serialization ------------------------------------------------------------
    def to_json(self) -> str:
        return json.dumps(
            {
                "in_dim": self.in_dim,
                "out_dim": self.out_dim,
                "kraus": [[K.real.tolist(), K.imag.tolist()] for K in self.kraus],
            }
        )

    @classmethod
    def from_json(cls, text: str | dict) -> "KrausChannel":
        data = json.loads(text) if isinstance(text, str) else text
        ops = [np.array(re, dtype=float) + 1j * np.array(im, dtype=float) for re, im in data["kraus"]]
        ch = cls(ops, name=data.get("name", "custom"))
        if ch.in_dim != data["in_dim"] or ch.out_dim != data["out_dim"]:
            raise DimensionError("declared dimensions disagree with Kraus shapes")
        return ch

    def redundancy(self) -> int:
        """Number of linearly dependent Kraus operators (rank deficit of the Kraus span)."""
        M = self.stack().reshape(self.n_kraus, -1)
        return self.n_kraus - int(np.linalg.matrix_rank(M, tol=1e-10))


@dataclass(frozen=True)
class AdjointMap:
    """Heisenberg-picture map ``W -> sum_k E_k^H W E_k`` of a channel."""

    base: KrausChannel

    def apply(self, W: npt.ArrayLike) -> np.ndarray:
        return self.base.adjoint_apply(W)

    __call__ = apply

    @property
    def kraus(self) -> tuple:
        return tuple(K.conj().T for K in self.base.kraus)


def complementary(ch: KrausChannel) -> KrausChannel:
    """Complementary channel with Kraus operators ``F_j[k, :] = E_k[j, :]``."""
    K = ch.stack()
    F = np.transpose(K, (1, 0, 2))
    meta = {"complement_of": ch.name}
    if ch.redundancy():
        meta["redundant_kraus"] = ch.redundancy()
    return KrausChannel(list(F), name=f"complement({ch.name})", meta=meta, validate=False)


def adjoint(ch: KrausChannel) -> AdjointMap:
    return AdjointMap(ch)


def stinespring(ch: KrausChannel) -> np.ndarray:
    """Stinespring isometry ``V = sum_k E_k ⊗ |k>_E`` of shape ``(out_dim*K, in_dim)``."""
    K = ch.stack()
    return np.transpose(K, (1, 0, 2)).reshape(ch.out_dim * ch.n_kraus, ch.in_dim)


def from_stinespring(V: npt.ArrayLike, out_dim: int, validate: bool = True) -> KrausChannel:
    V = np.asarray(V, dtype=complex)
    if V.shape[0] % out_dim:
        raise DimensionError(f"isometry rows {V.shape[0]} not divisible by out_dim {out_dim}")
    env = V.shape[0] // out_dim
    K = V.reshape(out_dim, env, V.shape[1]).transpose(1, 0, 2)
    return KrausChannel(list(K), name="stinespring", validate=validate)


def choi(ch: KrausChannel) -> np.ndarray:
    """Choi matrix ``sum_ij |i><j| ⊗ N(|i><j|)``."""
    K = ch.stack()
    # vec over (input a, output b) for each Kraus: |E_k>> with input index first
    vecs = np.transpose(K, (0, 2, 1)).reshape(ch.n_kraus, -1)
    return np.einsum("ki,kj->ij", vecs, vecs.conj())


def superoperator(ch: KrausChannel) -> np.ndarray:
    """Row-major superoperator ``sum_k E_k ⊗ conj(E_k)``."""
    return sum(np.kron(K, K.conj()) for K in ch.kraus)


def compose(outer: KrausChannel, inner: KrausChannel) -> KrausChannel:
    """``outer ∘ inner``."""
    if outer.in_dim != inner.out_dim:
        raise DimensionError("composition dimension mismatch")
    ops = [A @ B for A in outer.kraus for B in inner.kraus]
    return KrausChannel(ops, name=f"{outer.name}∘{inner.name}", validate=False)


def tensor_product(a: KrausChannel, b: KrausChannel) -> KrausChannel:
    ops = [np.kron(A, B) for A in a.kraus for B in b.kraus]
    return KrausChannel(ops, name=f"{a.name}⊗{b.name}", validate=False)


def tensor_power(ch: KrausChannel, n: int, cap: int = DEFAULT_KRAUS_CAP) -> KrausChannel:
    """Materialize ``N^{⊗n}`` with Kraus operators ``E_x = ⊗_i E_{x_i}``.

    Kraus operators are ordered lexicographically in ``x`` (site 0 most
    significant); ``weights`` holds ``|x|``, the number of sites with a
    nonzero Kraus index.

    Raises
    ------
    CapExceededError
        If ``K**n`` exceeds ``cap``. Use :class:`IIDChannel` or the bounds
        module's combinatorial path instead.
    """
    if n < 1:
        raise ParameterError("n must be at least 1")
    m = ch.n_kraus
    if m**n > cap:
        raise CapExceededError(
            f"tensor power has {m}**{n} Kraus operators (cap {cap}); "
            "use IIDChannel or the combinatorial bounds path"
        )
    ops, weights = [], []
    for x in itertools.product(range(m), repeat=n):
        ops.append(la.kron_all([ch.kraus[i] for i in x]))
        weights.append(sum(1 for i in x if i))
    return KrausChannel(ops, name=f"{ch.name}^{n}", weights=weights, validate=False)


class IIDChannel:
    """Lazy ``N_1^{⊗n}`` acting site by site.

    The environment of site ``i`` is the Kraus index of the single-site
    channel; the global environment is ordered ``E_0 ⊗ ... ⊗ E_{n-1}``,
    matching the Kraus ordering of :func:`tensor_power`.
    """

    def __init__(self, single: KrausChannel, n: int):
        if n < 1:
            raise ParameterError("n must be at least 1")
        self.single = single
        self.n = int(n)
        self.name = f"{single.name}^{n}"
        self._S = superoperator(single)
        self._Sadj = superoperator(KrausChannel([K.conj().T for K in single.kraus], validate=False))

    @property
    def in_dim(self) -> int:
        return self.single.in_dim**self.n

    @property
    def out_dim(self) -> int:
        return self.single.out_dim**self.n

    @property
    def env_dim(self) -> int:
        return self.single.n_kraus**self.n

    @property
    def n_kraus(self) -> int:
        return self.env_dim

    @property
    def trace_preserving(self) -> bool:
        return self.single.trace_preserving

    def _local_map(self, X, S, d_in, d_out) -> np.ndarray:
        n = self.n
        T = np.asarray(X, dtype=complex).reshape([d_in] * (2 * n))
        for i in range(n):
            T = np.moveaxis(T, (i, n + i), (0, 1))
            rest = T.shape[2:]
            T = (S @ T.reshape(d_in * d_in, -1)).reshape((d_out, d_out) + rest)
            T = np.moveaxis(T, (0, 1), (i, n + i))
        dim = d_out**n
        return T.reshape(dim, dim)

    def apply(self, X: npt.ArrayLike) -> np.ndarray:
        X = np.asarray(X, dtype=complex)
        if X.shape != (self.in_dim, self.in_dim):
            raise DimensionError(f"input has shape {X.shape}, expected {self.in_dim}x{self.in_dim}")
        return self._local_map(X, self._S, self.single.in_dim, self.single.out_dim)

    __call__ = apply

    def adjoint_apply(self, W: npt.ArrayLike) -> np.ndarray:
        return self._local_map(W, self._Sadj, self.single.out_dim, self.single.in_dim)

    def complementary(self) -> "IIDChannel":
        return IIDChannel(complementary(self.single), self.n)

    def apply_complementary(self, X: npt.ArrayLike) -> np.ndarray:
        X = np.asarray(X, dtype=complex)
        comp = complementary(self.single)
        return self._local_map(X, superoperator(comp), comp.in_dim, comp.out_dim)

    def stinespring_apply(self, v: npt.ArrayLike) -> np.ndarray:
        """``V|v>`` on ``B_0..B_{n-1} ⊗ E_0..E_{n-1}``."""
        n, d, b, m = self.n, self.single.in_dim, self.single.out_dim, self.single.n_kraus
        V1 = stinespring(self.single).reshape(b, m, d)
        T = np.asarray(v, dtype=complex).reshape([d] * n)
        for i in range(n):
            # site i: a -> (b_i, e_i); the new axes go to the back
            T = np.tensordot(T, V1, axes=([0], [2]))
        # axes are now (b_0, e_0, b_1, e_1, ...)
        order = [2 * i for i in range(n)] + [2 * i + 1 for i in range(n)]
        return np.transpose(T, order).reshape(-1)

    def kraus_vectors(self, v: npt.ArrayLike) -> np.ndarray:
        """Rows ``E_x |v>``, shape ``(K**n, out_dim**n)``."""
        w = self.stinespring_apply(v).reshape(self.out_dim, self.env_dim)
        return w.T

    def to_kraus(self, cap: int = DEFAULT_KRAUS_CAP) -> KrausChannel:
        return tensor_power(self.single, self.n, cap=cap)


# standard noise library -------------------------------------------------------

def _check_p(p: float) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"noise parameter p={p} outside [0, 1]")
    return p


def identity(d: int = 2) -> KrausChannel:
    return KrausChannel([np.eye(d)], name="identity")


def partial_dephasing_Z(p: float) -> KrausChannel:
    """``N_p(X) = (1 - p/2) X + (p/2) Z X Z``; off-diagonals shrink by ``1 - p``."""
    p = _check_p(p)
    return KrausChannel(
        [np.sqrt(1 - p / 2) * la.I2, np.sqrt(p / 2) * la.PAULI_Z],
        name="partial_dephasing_Z",
        meta={"p": p},
    )


def complete_dephasing_X() -> KrausChannel:
    plus = np.array([1, 1], dtype=complex) / np.sqrt(2)
    minus = np.array([1, -1], dtype=complex) / np.sqrt(2)
    return KrausChannel([la.proj(plus), la.proj(minus)], name="complete_dephasing_X")


def amplitude_damping(p: float) -> KrausChannel:
    """Decay ``|0> -> |1>`` with probability ``p`` (index 0 is the excited level)."""
    p = _check_p(p)
    E0 = np.array([[np.sqrt(1 - p), 0], [0, 1]], dtype=complex)
    E1 = np.array([[0, 0], [np.sqrt(p), 0]], dtype=complex)
    return KrausChannel([E0, E1], name="amplitude_damping", meta={"p": p})


def bit_flip(p: float) -> KrausChannel:
    """``X`` error with probability ``p/2``, so that ``N(Z) = (1 - p) Z``."""
    p = _check_p(p)
    return KrausChannel(
        [np.sqrt(1 - p / 2) * la.I2, np.sqrt(p / 2) * la.PAULI_X], name="bit_flip", meta={"p": p}
    )


def depolarizing(p: float, d: int = 2) -> KrausChannel:
    """``N(X) = (1 - p) X + p tr(X) I/d`` for a qubit (``d = 2``)."""
    p = _check_p(p)
    if d != 2:
        raise ParameterError("depolarizing is implemented for qubits only")
    return KrausChannel(
        [np.sqrt(1 - 3 * p / 4) * la.I2]
        + [np.sqrt(p / 4) * P for P in (la.PAULI_X, la.PAULI_Y, la.PAULI_Z)],
        name="depolarizing",
        meta={"p": p},
    )


def located_erasure(site: int, p: float, n: int) -> KrausChannel:
    """Erase qubit ``site`` (0-based) of ``n`` with probability ``p``.

    The erased site is replaced by a flag level, so its output dimension is 3:
    levels 0 and 1 carry the qubit and level 2 signals the erasure. Other
    sites pass through unchanged.
    """
    p = _check_p(p)
    if not 0 <= site < n:
        raise ParameterError(f"site {site} out of range for n={n}")
    J = np.zeros((3, 2), dtype=complex)
    J[0, 0] = J[1, 1] = 1.0
    local = [np.sqrt(1 - p) * J]
    for j in range(2):
        A = np.zeros((3, 2), dtype=complex)
        A[2, j] = np.sqrt(p)
        local.append(A)
    left = np.eye(2**site)
    right = np.eye(2 ** (n - site - 1))
    ops = [np.kron(np.kron(left, A), right) for A in local]
    return KrausChannel(
        ops,
        name="located_erasure",
        weights=[0, 1, 1],
        meta={"site": site, "p": p, "n": n, "out_dims": [2] * site + [3] + [2] * (n - site - 1)},
    )


_REGISTRY = {
    "identity": lambda d=2: identity(int(d)),
    "partial_dephasing_Z": lambda p: partial_dephasing_Z(p),
    "complete_dephasing_X": lambda: complete_dephasing_X(),
    "amplitude_damping": lambda p: amplitude_damping(p),
    "bit_flip": lambda p: bit_flip(p),
    "located_erasure": lambda site, p, n: located_erasure(int(site), p, int(n)),
    "depolarizing": lambda p: depolarizing(p),
}


def standard_channel(name: str, **params: Any) -> KrausChannel:
    """Construct a named channel from the built-in noise library.

    Names: ``identity``, ``partial_dephasing_Z``, ``complete_dephasing_X``,
    ``amplitude_damping``, ``bit_flip``, ``located_erasure``, ``depolarizing``.
    """
    try:
        ctor = _REGISTRY[name]
    except KeyError:
        raise ParameterError(f"unknown channel {name!r}; known: {sorted(_REGISTRY)}") from None
    try:
        return ctor(**params)
    except TypeError as exc:
        raise ParameterError(f"bad parameters for {name}: {exc}") from None


def channel_names() -> list[str]:
    return sorted(_REGISTRY)


def random_channel(d_in: int, d_out: int, n_kraus: int, rng: np.random.Generator, trace_scale: float = 1.0) -> KrausChannel:
    """Random channel from a Haar-like isometry, optionally scaled to be trace decreasing."""
    G = rng.normal(size=(d_out * n_kraus, d_in)) + 1j * rng.normal(size=(d_out * n_kraus, d_in))
    Q, _ = np.linalg.qr(G)
    ch = from_stinespring(Q, d_out, validate=False)
    if trace_scale != 1.0:
        ch = KrausChannel([np.sqrt(trace_scale) * K for K in ch.kraus], validate=False)
    return KrausChannel(ch.kraus, name="random")


def random_trace_decreasing(d_in: int, d_out: int, n_kraus: int, rng: np.random.Generator) -> KrausChannel:
    """Random CP trace-non-increasing map with a non-scalar ``N^H(I)``."""
    G = [rng.normal(size=(d_out, d_in)) + 1j * rng.normal(size=(d_out, d_in)) for _ in range(n_kraus)]
    S = sum(K.conj().T @ K for K in G)
    # scale so that sum E^H E has largest eigenvalue at most one
    lam = np.linalg.eigvalsh(S)[-1]
    c = rng.uniform(0.3, 1.0) / np.sqrt(lam)
    return KrausChannel([c * K for K in G], name="random_td")


__all__ = [
    "KrausChannel",
    "AdjointMap",
    "IIDChannel",
    "complementary",
    "adjoint",
    "stinespring",
    "from_stinespring",
    "choi",
    "superoperator",
    "compose",
    "tensor_product",
    "tensor_power",
    "standard_channel",
    "channel_names",
    "identity",
    "partial_dephasing_Z",
    "complete_dephasing_X",
    "amplitude_damping",
    "bit_flip",
    "depolarizing",
    "located_erasure",
    "random_channel",
    "random_trace_decreasing",
]
