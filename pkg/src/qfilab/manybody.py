"""Many-qubit probes: symmetric (Dicke) states, sparse superpositions and Ising clocks.

Qubit index 0 is the excited level ``|up>``; the Dicke state ``|h_q^n>`` is the
uniform superposition of bit strings with ``q`` ones (``q`` spins down). The
on-site Hamiltonian ``sum_i omega Z_i / 2`` has energy ``omega (n - 2q) / 2``
on ``|h_q^n>``.

Permutation invariance reduces the i.i.d. pinch terms to one value per jump
count, and the reduced state of ``k`` sites to a ``(k+1)``-dimensional matrix.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb
from typing import Callable, Sequence

import numpy as np
import numpy.typing as npt

from . import fisher
from . import linalg as la
from .bounds import BoundResult, IIDNoiseSpec, pinched_iid_upper
from .errors import CapExceededError, ConditionError, DimensionError, ParameterError

SYMMETRIC_CAP = 128
SPARSE_CAP = 64
SPARSE_TERMS_CAP = 16
DENSE_CAP = 20
_CHUNK = 4_000_000


def _binom_row(n: int) -> np.ndarray:
    return np.array([float(comb(n, q)) for q in range(n + 1)])


# Hamiltonians on the compact representations ------------------------------------

def onsite_energies(n: int, omega: float) -> np.ndarray:
    """Level energies ``omega (n - 2q) / 2`` of ``sum_i omega Z_i / 2``."""
    q = np.arange(n + 1)
    return omega * (n - 2 * q) / 2


def bits_of(values: Sequence[int], n: int) -> np.ndarray:
    """Rows of bits, most significant (site 0) first."""
    v = np.asarray(values, dtype=np.int64)[:, None]
    return ((v >> (n - 1 - np.arange(n))) & 1).astype(np.int8)


def ising_energy(edges: Sequence[tuple[int, int]], J: float) -> Callable[[np.ndarray], np.ndarray]:
    """Energy function of ``(J/2) sum_<ij> Z_i Z_j`` on rows of bits."""
    e = np.asarray(edges, dtype=int)

    def energy(bits: np.ndarray) -> np.ndarray:
        s = 1 - 2 * bits.astype(float)
        return J / 2 * np.sum(s[:, e[:, 0]] * s[:, e[:, 1]], axis=1)

    return energy


def onsite_energy(omega: float) -> Callable[[np.ndarray], np.ndarray]:
    """Energy function of ``sum_i omega Z_i / 2`` on rows of bits."""

    def energy(bits: np.ndarray) -> np.ndarray:
        return omega * np.sum(1 - 2 * bits.astype(float), axis=1) / 2

    return energy


def chain_edges(n: int, periodic: bool = False) -> list[tuple[int, int]]:
    edges = [(i, i + 1) for i in range(n - 1)]
    if periodic and n > 2:
        edges.append((n - 1, 0))
    return edges


# symmetric states -------------------------------------------------------------------

@dataclass(frozen=True)
class SymmetricState:
    """``sum_q amps[q] |h_q^n>``."""

    n: int
    amps: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amps, dtype=complex).reshape(-1)
        if a.size != self.n + 1:
            raise DimensionError(f"need {self.n + 1} amplitudes, got {a.size}")
        if self.n > SYMMETRIC_CAP:
            raise CapExceededError(f"symmetric path is capped at n = {SYMMETRIC_CAP}")
        nrm = np.linalg.norm(a)
        if abs(nrm - 1) > 1e-12:
            raise ConditionError(f"amplitudes are not normalized (norm {nrm:.15f})")
        object.__setattr__(self, "amps", a)

    @classmethod
    def from_unnormalized(cls, n: int, amps: npt.ArrayLike) -> "SymmetricState":
        a = np.asarray(amps, dtype=complex)
        return cls(n, a / np.linalg.norm(a))

    def densify(self) -> np.ndarray:
        if self.n > DENSE_CAP:
            raise CapExceededError(f"dense vectors are capped at n = {DENSE_CAP}")
        j = np.arange(2**self.n)
        w = np.array([bin(x).count("1") for x in j])
        return self.amps[w] / np.sqrt(_binom_row(self.n)[w])

    def _energies(self, H) -> np.ndarray:
        if np.isscalar(H):
            return onsite_energies(self.n, float(H))
        E = np.asarray(H, dtype=float).reshape(-1)
        if E.size != self.n + 1:
            raise DimensionError("symmetric Hamiltonians are given by n + 1 level energies or a scalar omega")
        return E

    def energy_stats(self, H) -> tuple[float, float]:
        E = self._energies(H)
        pr = np.abs(self.amps) ** 2
        mean = float(pr @ E)
        return mean, float(pr @ (E - mean) ** 2)

    def hbar_amps(self, H) -> np.ndarray:
        E = self._energies(H)
        mean, _ = self.energy_stats(H)
        return (E - mean) * self.amps

    def pinch_terms(self, H, single_site, k: int):
        """``(4 var, [(den, num), ...])`` grouped by jump counts.

        Each group of patterns sharing the same number of each jump type
        contributes ``mult * num^2 / den``, which is returned as the pair
        ``(mult * den, mult * num)``.

        Raises
        ------
        ParameterError
            If some ``E_a^H E_a`` is not diagonal.
        """
        n = self.n
        M = np.array([K.conj().T @ K for K in single_site.kraus])
        if M.shape[1] != 2:
            raise ParameterError("symmetric path needs qubit sites")
        off = np.abs(M[:, 0, 1]).max()
        if off > 1e-14:
            raise ParameterError("symmetric pinch path needs diagonal E_a^H E_a; use the dense or sparse path")
        d0, d1 = M[:, 0, 0].real, M[:, 1, 1].real
        m = M.shape[0]
        _, var = self.energy_stats(H)
        hb = self.hbar_amps(H)
        w_den = np.abs(self.amps) ** 2
        w_num = (hb.conj() * self.amps).real
        binom_n = _binom_row(n)
        terms = []
        for counts in _compositions(n, m, k):
            # generating polynomial in the number of ones, one factor per jump type
            poly = np.array([1.0])
            for a, c in enumerate(counts):
                if c == 0:
                    continue
                j = np.arange(c + 1)
                fac = np.array([comb(c, int(x)) for x in j], dtype=float) * d1[a] ** j * d0[a] ** (c - j)
                poly = np.convolve(poly, fac)
            G = poly[: n + 1] / binom_n
            mult = _multinomial(counts)
            den = float(w_den @ G)
            num = float(2 * (w_num @ G))
            terms.append((mult * den, mult * num))
        return 4 * var, terms


def _compositions(n: int, m: int, k: int):
    """Counts ``(c_0, ..., c_{m-1})`` summing to ``n`` with ``n - c_0 <= k``."""
    for jumps in range(min(k, n) + 1):
        for rest in _weak_compositions(jumps, m - 1):
            yield (n - jumps,) + rest


def _weak_compositions(total: int, parts: int):
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _weak_compositions(total - first, parts - 1):
            yield (first,) + rest


def _multinomial(counts) -> float:
    out, left = 1, sum(counts)
    for c in counts:
        out *= comb(left, c)
        left -= c
    return float(out)


def dicke(n: int, q: int) -> SymmetricState:
    if not 0 <= q <= n:
        raise ParameterError(f"q = {q} outside [0, {n}]")
    a = np.zeros(n + 1, dtype=complex)
    a[q] = 1.0
    return SymmetricState(n, a)


def densify(state) -> np.ndarray:
    return state.densify()


def _dicke_split(n: int, k: int) -> np.ndarray:
    """``c[q, j] = sqrt(C(k, j) C(n-k, q-j) / C(n, q))``: amplitude of ``|h_j^k>|h_{q-j}^{n-k}>`` in ``|h_q^n>``."""
    c = np.zeros((n + 1, k + 1))
    for q in range(n + 1):
        for j in range(max(0, q - (n - k)), min(k, q) + 1):
            c[q, j] = np.sqrt(comb(k, j) * comb(n - k, q - j) / comb(n, q))
    return c


def reduced_symmetric(phi: np.ndarray, psi: np.ndarray, n: int, k: int) -> np.ndarray:
    """``tr_{n-k}(|phi><psi|)`` in the Dicke basis of ``k`` sites."""
    c = _dicke_split(n, k)
    out = np.zeros((k + 1, k + 1), dtype=complex)
    for r in range(n - k + 1):
        a = np.zeros(k + 1, dtype=complex)
        b = np.zeros(k + 1, dtype=complex)
        for j in range(k + 1):
            if j + r <= n:
                a[j] = phi[j + r] * c[j + r, j]
                b[j] = psi[j + r] * c[j + r, j]
        out += np.outer(a, b.conj())
    return out


def erasure_loss_symmetric(state: SymmetricState, H_onsite, k: int) -> float:
    """``F(tr_rest psi, tr_rest {Hbar, psi})`` for ``k`` sites erased with certainty.

    ``H_onsite`` is ``omega`` for ``sum_i omega Z_i / 2`` or an array of ``n + 1``
    level energies.
    """
    n = state.n
    if not 0 <= k <= n:
        raise ParameterError(f"k = {k} outside [0, {n}]")
    if k == 0:
        return 0.0
    hb = state.hbar_amps(H_onsite)
    rho = reduced_symmetric(state.amps, state.amps, n, k)
    X = reduced_symmetric(hb, state.amps, n, k)
    return fisher.qfi(rho, X + X.conj().T)


# sparse probes ----------------------------------------------------------------------

@dataclass(frozen=True)
class SparseProbe:
    """Superposition of a few computational basis strings."""

    n: int
    strings: tuple
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.n > SPARSE_CAP:
            raise CapExceededError(f"sparse path is capped at n = {SPARSE_CAP}")
        if len(self.strings) > SPARSE_TERMS_CAP:
            raise CapExceededError(f"sparse path is capped at {SPARSE_TERMS_CAP} terms")
        if len(set(self.strings)) != len(self.strings):
            raise ConditionError("bit strings must be distinct")
        a = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if a.size != len(self.strings):
            raise DimensionError("one amplitude per string is required")
        if abs(np.linalg.norm(a) - 1) > 1e-12:
            raise ConditionError("sparse probe is not normalized")
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def from_terms(cls, n: int, terms: Sequence[tuple]) -> "SparseProbe":
        """``terms`` holds ``(bitstring, amplitude)`` with bit strings as ``"0110"`` or ints."""
        strings, amps = [], []
        for s, a in terms:
            strings.append(int(s, 2) if isinstance(s, str) else int(s))
            amps.append(a)
        amps = np.asarray(amps, dtype=complex)
        return cls(n, tuple(strings), amps / np.linalg.norm(amps))

    @property
    def bits(self) -> np.ndarray:
        return bits_of(self.strings, self.n)

    def densify(self) -> np.ndarray:
        if self.n > DENSE_CAP:
            raise CapExceededError(f"dense vectors are capped at n = {DENSE_CAP}")
        v = np.zeros(2**self.n, dtype=complex)
        v[list(self.strings)] = self.amplitudes
        return v

    def _energies(self, H) -> np.ndarray:
        if callable(H):
            return np.asarray(H(self.bits), dtype=float)
        H = np.asarray(H)
        if H.ndim == 1:
            return H[list(self.strings)].real
        raise ParameterError("sparse probes need a diagonal Hamiltonian (energy function or diagonal)")

    def energy_stats(self, H) -> tuple[float, float]:
        E = self._energies(H)
        pr = np.abs(self.amplitudes) ** 2
        mean = float(pr @ E)
        return mean, float(pr @ (E - mean) ** 2)

    def pinch_terms(self, H, single_site, k: int):
        """``(4 var, [(den, num), ...])`` with one pair per jump pattern ``|x| <= k``."""
        n = self.n
        E = self._energies(H)
        mean, var = self.energy_stats(H)
        psi = self.amplitudes
        hb = (E - mean) * psi
        M = np.array([K.conj().T @ K for K in single_site.kraus])
        m = M.shape[0]
        B = self.bits
        T = len(self.strings)
        bi = np.repeat(B, T, axis=0)
        bj = np.tile(B, (T, 1))
        w_den = np.outer(psi.conj(), psi).reshape(-1)
        w_num = np.outer(hb.conj(), psi).reshape(-1)
        patterns = _patterns(n, m, min(k, n))
        terms = []
        chunk = max(1, _CHUNK // (T * T * n))
        for start in range(0, len(patterns), chunk):
            X = patterns[start : start + chunk]
            vals = np.prod(M[X[:, None, :], bi[None], bj[None]], axis=2)
            den = (vals @ w_den).real
            num = 2 * (vals @ w_num).real
            terms.extend(zip(den.tolist(), num.tolist()))
        return 4 * var, terms


def _patterns(n: int, m: int, k: int) -> np.ndarray:
    rows = []
    for w in range(k + 1):
        for sites in itertools.combinations(range(n), w):
            for labels in itertools.product(range(1, m), repeat=w):
                r = np.zeros(n, dtype=np.int64)
                r[list(sites)] = labels
                rows.append(r)
    return np.array(rows, dtype=np.int64).reshape(-1, n)


def iid_pinched_symmetric(state, H, single_site, p: float | None, k: int) -> BoundResult:
    """Pinched upper bound on ``F_bob`` for a symmetric or sparse probe."""
    if not hasattr(state, "pinch_terms"):
        raise ParameterError("state must be a SymmetricState or SparseProbe")
    res = pinched_iid_upper(state, H, IIDNoiseSpec(single_site, state.n, p), k)
    res.meta["representation"] = type(state).__name__
    return res


# probe library ----------------------------------------------------------------------

def _alternating(n: int, start: int) -> int:
    return int("".join(str((start + i) % 2) for i in range(n)), 2)


def hamming(a: int, b: int) -> int:
    return bin(a ^ b).count("1")


def graph_code_state(n: int, x: int | str) -> SparseProbe:
    """``(|0^n> + |1^n> + |x> + |~x>) / 2``; the four strings must pairwise differ on at least four sites."""
    x = int(x, 2) if isinstance(x, str) else int(x)
    full = (1 << n) - 1
    strings = [0, full, x, x ^ full]
    for a, b in itertools.combinations(strings, 2):
        if hamming(a, b) < 4:
            raise ConditionError("graph-code strings must pairwise differ on at least four sites")
    return SparseProbe(n, tuple(strings), np.full(4, 0.5, dtype=complex))


def probe_library(name: str, n: int, **params):
    """Named probes.

    Symmetric: ``ghz``, ``plus_product``, ``dicke_pair`` (``q1``, ``q2``),
    ``uniform_dicke``, ``half_gauss`` (``w``). Sparse: ``f_af``, ``code_f_af``,
    ``graph_code`` (``x``).
    """
    if name == "ghz":
        a = np.zeros(n + 1, dtype=complex)
        a[0] = a[n] = 1
        return SymmetricState.from_unnormalized(n, a)
    if name == "plus_product":
        return SymmetricState.from_unnormalized(n, np.sqrt(_binom_row(n)))
    if name == "dicke_pair":
        q1, q2 = int(params["q1"]), int(params["q2"])
        a = np.zeros(n + 1, dtype=complex)
        a[q1] += 1
        a[q2] += 1
        return SymmetricState.from_unnormalized(n, a)
    if name == "uniform_dicke":
        return SymmetricState.from_unnormalized(n, np.ones(n + 1))
    if name == "half_gauss":
        w = float(params.get("w", 0.4))
        q = np.arange(n + 1)
        return SymmetricState.from_unnormalized(n, np.exp(-((q / n) ** 2) / (2 * w**2)))
    if name == "f_af":
        # all spins down plus the Neel string starting with a down spin
        return SparseProbe.from_terms(n, [((1 << n) - 1, 1.0), (_alternating(n, 1), 1.0)])
    if name == "code_f_af":
        return graph_code_state(n, _alternating(n, 1))
    if name == "graph_code":
        return graph_code_state(n, params["x"])
    raise ParameterError(f"unknown probe {name!r}; known: {', '.join(PROBE_NAMES)}")


PROBE_NAMES = ("ghz", "plus_product", "dicke_pair", "uniform_dicke", "half_gauss", "f_af", "code_f_af", "graph_code")


# Ising clocks ---------------------------------------------------------------------

def xy_ising_hamiltonian(n: int, edges, J: float, s_x: float = 0.0, s_y: float = 0.0) -> np.ndarray:
    """Dense ``(J/2) sum_<ij> (Z_i Z_j + s_x X_i X_j + s_y Y_i Y_j)``."""
    if n > 14:
        raise CapExceededError("dense Ising Hamiltonians are capped at 14 qubits")
    dim = 2**n
    H = np.zeros((dim, dim), dtype=complex)
    for i, j in edges:
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise ParameterError(f"invalid edge {(i, j)}")
        for coef, P in ((1.0, la.PAULI_Z), (s_x, la.PAULI_X), (s_y, la.PAULI_Y)):
            if coef:
                H += coef * la.kron_all([P if q in (i, j) else la.I2 for q in range(n)])
    return J / 2 * H


@dataclass
class IsingScenario:
    """Ingredients for a clock scenario on an interaction graph."""

    psi: np.ndarray
    H: np.ndarray
    n: int
    edges: list
    mean: float
    variance: float
    n_edges: int
    violated: int | None
    variance_closed_form: float | None


def ising_scenario(edges, s_x: float, s_y: float, J: float, state) -> IsingScenario:
    """Dense ``psi`` and ``H`` plus the Ising closed forms for graph-code states.

    For ``s_x = s_y = 0`` and ``state`` a graph-code probe with string ``x``
    violating ``c`` of the ``m`` edges, ``<H> = (J/2)(m - c)`` and
    ``var = J^2 c^2 / 4``. With transversal couplings only the numerical
    variance is reported.
    """
    n = state.n
    edges = [tuple(e) for e in edges]
    psi = state.densify()
    H = xy_ising_hamiltonian(n, edges, J, s_x, s_y)
    Hpsi = H @ psi
    mean = float(np.vdot(psi, Hpsi).real)
    var = float(np.vdot(Hpsi, Hpsi).real - mean**2)
    violated = closed = None
    if isinstance(state, SparseProbe) and len(state.strings) == 4 and s_x == 0 and s_y == 0:
        x = state.strings[2]
        b = bits_of([x], n)[0]
        violated = int(sum(b[i] != b[j] for i, j in edges))
        closed = J**2 * violated**2 / 4
        if abs(mean - J / 2 * (len(edges) - violated)) > 1e-9 * max(1.0, abs(J) * len(edges)):
            raise ConditionError("mean energy disagrees with the graph-code closed form")
    return IsingScenario(psi, H, n, edges, mean, var, len(edges), violated, closed)


SQUARE_EDGES = [(0, 1), (0, 2), (1, 3), (2, 3)]


def four_two_two_clock() -> SparseProbe:
    """``(|0000> + |1111> + |0110> + |1001>) / 2`` on the square with edges (0,1), (0,2), (1,3), (2,3)."""
    return SparseProbe(4, (0b0000, 0b1111, 0b0110, 0b1001), np.full(4, 0.5, dtype=complex))


__all__ = [
    "SymmetricState",
    "SparseProbe",
    "IsingScenario",
    "dicke",
    "densify",
    "onsite_energies",
    "onsite_energy",
    "ising_energy",
    "chain_edges",
    "bits_of",
    "reduced_symmetric",
    "erasure_loss_symmetric",
    "iid_pinched_symmetric",
    "graph_code_state",
    "probe_library",
    "PROBE_NAMES",
    "xy_ising_hamiltonian",
    "ising_scenario",
    "SQUARE_EDGES",
    "four_two_two_clock",
]
