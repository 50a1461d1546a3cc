"""Metrological codes: zero-loss conditions, Pauli/stabilizer machinery and certification.

Pauli strings are stored symplectically. Qubit ``q`` (0-based, leftmost in
text form and most significant in the computational-basis index) maps to
bit ``n - 1 - q`` of the ``x`` and ``z`` masks, so that on basis vectors::

    X^x Z^z |j> = (-1)^{popcount(z & j)} |j ^ x>

A string represents ``i^phase X^x Z^z``; a ``Y`` letter contributes ``x = z = 1``
and one unit of phase since ``Y = i X Z``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import numpy.typing as npt

from . import linalg as la
from .channels import KrausChannel, from_stinespring, stinespring
from .errors import CapExceededError, ConditionError, DimensionError, ParameterError

DISTANCE_CAP = 10
STATE_CAP = 12
EXHAUSTIVE_GENERATORS = 20
ZERO_LOSS_TOL = 1e-9


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True)
class PauliString:
    """``i^phase X^x Z^z`` on ``n`` qubits."""

    n: int
    x: int
    z: int
    phase: int = 0

    def __post_init__(self):
        object.__setattr__(self, "phase", self.phase % 4)
        full = (1 << self.n) - 1
        if self.x & ~full or self.z & ~full:
            raise DimensionError("bit masks exceed the qubit count")

    # construction ------------------------------------------------------------
    @classmethod
    def from_str(cls, text: str) -> "PauliString":
        """Parse ``"+XIZZY"``, ``"-iXY"`` or a bare ``"XZ"``."""
        s = text.strip()
        sign = 0
        for prefix, ph in (("+i", 1), ("-i", 3), ("+", 0), ("-", 2), ("i", 1)):
            if s.startswith(prefix) and len(s) > len(prefix) and s[len(prefix)] in "IXYZ":
                sign = ph
                s = s[len(prefix) :]
                break
        n = len(s)
        x = z = 0
        ny = 0
        for q, c in enumerate(s):
            bit = 1 << (n - 1 - q)
            if c == "X":
                x |= bit
            elif c == "Z":
                z |= bit
            elif c == "Y":
                x |= bit
                z |= bit
                ny += 1
            elif c != "I":
                raise ParameterError(f"invalid Pauli letter {c!r}")
        return cls(n, x, z, sign + ny)

    @classmethod
    def from_sites(cls, n: int, letters: dict, sign: int = 1) -> "PauliString":
        """Build from ``{site: letter}`` with 0-based sites."""
        chars = ["I"] * n
        for q, c in letters.items():
            chars[q] = c
        return cls.from_str(("+" if sign > 0 else "-") + "".join(chars))

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n, 0, 0, 0)

    # properties -----------------------------------------------------------------
    @property
    def support(self) -> int:
        return self.x | self.z

    @property
    def weight(self) -> int:
        return _popcount(self.support)

    def support_sites(self) -> list[int]:
        return [q for q in range(self.n) if self.support >> (self.n - 1 - q) & 1]

    @property
    def n_y(self) -> int:
        return _popcount(self.x & self.z)

    @property
    def sign(self) -> complex:
        """Prefactor in front of the letter string."""
        return 1j ** ((self.phase - self.n_y) % 4)

    @property
    def is_hermitian(self) -> bool:
        return (self.phase - self.n_y) % 2 == 0

    def __str__(self) -> str:
        sign = {0: "+", 1: "+i", 2: "-", 3: "-i"}[(self.phase - self.n_y) % 4]
        chars = []
        for q in range(self.n):
            bit = 1 << (self.n - 1 - q)
            xb, zb = bool(self.x & bit), bool(self.z & bit)
            chars.append("Y" if xb and zb else "X" if xb else "Z" if zb else "I")
        return sign + "".join(chars)

    # algebra ----------------------------------------------------------------------
    def __mul__(self, other: "PauliString") -> "PauliString":
        return multiply(self, other)

    def __neg__(self) -> "PauliString":
        return PauliString(self.n, self.x, self.z, self.phase + 2)

    def commutes(self, other: "PauliString") -> bool:
        return commutes(self, other)

    def to_matrix(self) -> np.ndarray:
        return to_matrix(self)

    def apply(self, v: npt.ArrayLike) -> np.ndarray:
        """Act on a state vector of length ``2**n``."""
        v = np.asarray(v, dtype=complex).reshape(-1)
        if v.size != 1 << self.n:
            raise DimensionError("vector length does not match the qubit count")
        j = np.arange(v.size)
        signs = 1 - 2 * (_parity_array(j & self.z))
        out = np.zeros_like(v)
        out[j ^ self.x] = signs * v
        return (1j**self.phase) * out


def _parity_array(a: np.ndarray) -> np.ndarray:
    a = a.copy()
    p = np.zeros_like(a)
    while np.any(a):
        p ^= a & 1
        a >>= 1
    return p


def _check_n(P: PauliString, Q: PauliString):
    if P.n != Q.n:
        raise DimensionError(f"Pauli strings act on {P.n} and {Q.n} qubits")


def multiply(P: PauliString, Q: PauliString) -> PauliString:
    """Product ``P Q`` with exact phase: ``Z^a X^b = (-1)^{a.b} X^b Z^a``."""
    _check_n(P, Q)
    extra = 2 * _popcount(P.z & Q.x)
    return PauliString(P.n, P.x ^ Q.x, P.z ^ Q.z, P.phase + Q.phase + extra)


def commutes(P: PauliString, Q: PauliString) -> bool:
    """True iff the symplectic form vanishes."""
    _check_n(P, Q)
    return (_popcount(P.x & Q.z) + _popcount(P.z & Q.x)) % 2 == 0


def weight(P: PauliString) -> int:
    return P.weight


def to_matrix(P: PauliString) -> np.ndarray:
    mats = []
    for q in range(P.n):
        bit = 1 << (P.n - 1 - q)
        m = np.eye(2, dtype=complex)
        if P.x & bit:
            m = m @ la.PAULI_X
        if P.z & bit:
            m = m @ la.PAULI_Z
        mats.append(m)
    return (1j**P.phase) * la.kron_all(mats)


def _gf2_rank(rows: list[int]) -> int:
    rank = 0
    rows = list(rows)
    while rows:
        pivot = rows.pop()
        if pivot == 0:
            continue
        rank += 1
        low = pivot & -pivot
        rows = [r ^ pivot if r & low else r for r in rows]
    return rank


class StabilizerGroup:
    """Abelian Pauli group with independent Hermitian generators.

    Raises
    ------
    ConditionError
        If generators fail to commute, are dependent, or are not Hermitian
        (which would put ``-I`` in the group).
    """

    def __init__(self, generators: Sequence[PauliString | str]):
        gens = [PauliString.from_str(g) if isinstance(g, str) else g for g in generators]
        if not gens:
            raise ConditionError("a stabilizer group needs at least one generator")
        n = gens[0].n
        for g in gens:
            if g.n != n:
                raise DimensionError("generators act on different qubit counts")
            if not g.is_hermitian:
                raise ConditionError(f"generator {g} squares to -I")
        for a, b in itertools.combinations(gens, 2):
            if not commutes(a, b):
                raise ConditionError(f"generators {a} and {b} anticommute")
        rank = _gf2_rank([(g.x << n) | g.z for g in gens])
        if rank != len(gens):
            raise ConditionError(f"generators are dependent (rank {rank} < {len(gens)})")
        self.n = n
        self.generators = tuple(gens)

    def __len__(self) -> int:
        return len(self.generators)

    def elements(self, max_factors: int | None = None):
        """Yield ``(indices, element)`` for products of at most ``max_factors`` generators."""
        ell = len(self.generators)
        top = ell if max_factors is None else min(max_factors, ell)
        yield (), PauliString.identity(self.n)
        for r in range(1, top + 1):
            for idx in itertools.combinations(range(ell), r):
                P = self.generators[idx[0]]
                for i in idx[1:]:
                    P = multiply(P, self.generators[i])
                yield idx, P

    def negated(self) -> "StabilizerGroup":
        return StabilizerGroup([-g for g in self.generators])

    def to_text(self) -> str:
        return "\n".join(str(g) for g in self.generators)

    @classmethod
    def from_text(cls, text: str) -> "StabilizerGroup":
        return cls([line.strip() for line in text.splitlines() if line.strip()])


# zero-loss conditions ---------------------------------------------------------

@dataclass(frozen=True)
class ZeroLossResult:
    holds: bool
    worst_residual: float
    worst_pair: tuple
    norm: float


def zero_loss_check(psi: npt.ArrayLike, xi: npt.ArrayLike, channel, tol: float = ZERO_LOSS_TOL) -> ZeroLossResult:
    """Check ``<psi|E_k'^H E_k|xi> + <xi|E_k'^H E_k|psi> = 0`` for all ``k, k'``.

    The left-hand sides are the entries of ``Nhat(|xi><psi| + |psi><xi|)``.
    """
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    xi = np.asarray(xi, dtype=complex).reshape(-1)
    D = np.outer(xi, psi.conj()) + np.outer(psi, xi.conj())
    M = channel.apply_complementary(D)
    A = np.abs(M)
    k, kp = np.unravel_index(int(np.argmax(A)), A.shape)
    worst = float(A[k, kp])
    return ZeroLossResult(worst <= tol * max(1.0, np.linalg.norm(xi)), worst, (int(k), int(kp)), la.op_norm(M))


def _pauli_overlaps(psi: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Table ``T[x, z] = <psi| i^{|x&z|} X^x Z^z |xi>`` for all Pauli masks."""
    dim = psi.size
    j = np.arange(dim)
    F = np.empty((dim, dim), dtype=complex)
    for x in range(dim):
        F[x] = psi[j ^ x].conj() * xi
    n = dim.bit_length() - 1
    Hd = np.ones((1, 1))
    for _ in range(n):
        Hd = np.block([[Hd, Hd], [Hd, -Hd]])
    # Hd[j, z] = (-1)^{popcount(j & z)}
    T = F @ Hd
    xs = j[:, None]
    zs = j[None, :]
    ny = _parity_count(xs & zs)
    return T * (1j**ny)


def _parity_count(a: np.ndarray) -> np.ndarray:
    a = a.copy()
    c = np.zeros_like(a)
    while np.any(a):
        c += a & 1
        a >>= 1
    return c


def metrological_distance(psi: npt.ArrayLike, xi: npt.ArrayLike, paulis: Iterable[PauliString] | None = None, tol: float = 1e-9) -> int:
    """Largest ``d`` with ``tr[O (|xi><psi| + |psi><xi|)] = 0`` for all Pauli ``O`` of weight ``< d``.

    Every operator of weight ``w`` is a linear combination of Pauli strings of
    weight at most ``w``, so checking Paulis is complete. If no Pauli violates
    the condition, ``n + 1`` is returned.

    Parameters
    ----------
    paulis : iterable of PauliString, optional
        Restrict the error set to these strings.

    Raises
    ------
    CapExceededError
        For more than 10 qubits; use :func:`stabilizer_certify` instead.
    """
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    xi = np.asarray(xi, dtype=complex).reshape(-1)
    n = psi.size.bit_length() - 1
    if 1 << n != psi.size or xi.size != psi.size:
        raise DimensionError("states must be n-qubit vectors of equal length")
    if n > DISTANCE_CAP:
        raise CapExceededError(f"exhaustive distance enumeration is capped at {DISTANCE_CAP} qubits; use stabilizer_certify")
    T = _pauli_overlaps(psi, xi)
    viol = np.abs(2 * T.real) > tol * max(1.0, np.linalg.norm(xi))
    j = np.arange(psi.size)
    wt = _parity_count(j[:, None] | j[None, :])
    if paulis is not None:
        mask = np.zeros_like(viol)
        for P in paulis:
            mask[P.x, P.z] = True
        viol &= mask
    viol[0, 0] = False
    if not np.any(viol):
        return n + 1
    return int(np.min(wt[viol]))


# stabilizer certification -------------------------------------------------------

def _terms(H) -> list[PauliString]:
    if isinstance(H, PauliString):
        return [H]
    if isinstance(H, str):
        return [PauliString.from_str(H)]
    out = []
    for t in H:
        P = t[1] if isinstance(t, tuple) else t
        out.append(PauliString.from_str(P) if isinstance(P, str) else P)
    return out


@dataclass
class Certification:
    """Outcome of :func:`stabilizer_certify`.

    ``verdict`` is ``"certified"``, ``"refuted"`` (the whole group was searched)
    or ``"not certified (search exhausted)"``.
    """

    verdict: str
    error_weight: int
    witnesses: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    searched: int = 0

    @property
    def certified(self) -> bool:
        return self.verdict == "certified"

    @property
    def distance(self) -> int | None:
        return self.error_weight + 1 if self.certified else None

    def as_dict(self) -> dict:
        return {
            "certified": self.certified,
            "verdict": self.verdict,
            "distance": self.distance,
            "witnesses": {",".join(map(str, k)): str(v) for k, v in self.witnesses.items()},
        }


def stabilizer_certify(group: StabilizerGroup, H, error_weight: int, search: str = "auto", depth: int = 3) -> Certification:
    """Certify a stabilizer-based metrological code against local errors.

    For each set ``Q`` of at most ``error_weight`` sites, look for ``S`` in the
    group anticommuting with every Pauli term of ``H`` and acting trivially on
    ``Q``; then ``S`` commutes with every error product ``E'^H E`` supported on
    ``Q``.

    Parameters
    ----------
    search : {"auto", "full", "depth"}
        ``"auto"`` enumerates the whole group for at most 20 generators and
        otherwise uses products of up to ``depth`` generators.
    """
    terms = _terms(H)
    n = group.n
    for t in terms:
        if t.n != n:
            raise DimensionError("H and the group act on different qubit counts")
    if not any(not commutes(t, g) for t in terms for g in group.generators):
        raise ConditionError("H commutes with every generator; no anticommuting stabilizer exists")
    ell = len(group)
    full = search == "full" or (search == "auto" and ell <= EXHAUSTIVE_GENERATORS)
    max_f = None if full else depth
    cands = []
    count = 0
    for idx, S in group.elements(max_f):
        count += 1
        if all(not commutes(S, t) for t in terms):
            cands.append((S.weight, S.support, idx, S))
    cands.sort(key=lambda c: (c[0], c[2]))
    w = min(error_weight, n)
    witnesses, failures = {}, []
    for Q in itertools.combinations(range(n), w):
        qmask = 0
        for q in Q:
            qmask |= 1 << (n - 1 - q)
        found = None
        for _, supp, _, S in cands:
            if supp & qmask == 0:
                found = S
                break
        if found is None:
            failures.append(Q)
        else:
            witnesses[Q] = found
    if not failures:
        verdict = "certified"
    elif full:
        verdict = "refuted"
    else:
        verdict = "not certified (search exhausted)"
    return Certification(verdict, error_weight, witnesses, failures, count)


def stabilizer_state(group: StabilizerGroup) -> np.ndarray:
    """A unit vector stabilized by the group (dense, at most 12 qubits).

    The projector ``prod_i (I + S_i)/2`` is applied to basis vectors
    ``|0>, |1>, ...`` in order until the result is nonzero.
    """
    n = group.n
    if n > STATE_CAP:
        raise CapExceededError(f"dense stabilizer states are capped at {STATE_CAP} qubits")
    dim = 1 << n
    for seed in range(dim):
        v = np.zeros(dim, dtype=complex)
        v[seed] = 1.0
        for g in group.generators:
            v = (v + g.apply(v)) / 2
        nrm = np.linalg.norm(v)
        if nrm > 1e-8:
            return v / nrm
    raise ConditionError("the stabilized subspace is empty")


def anti_group_flip(group: StabilizerGroup, H=None, check: bool = True) -> StabilizerGroup:
    """Group generated by ``{-S_i}``.

    When ``H`` anticommutes with every generator and ``n <= 10``, verify that
    ``H`` maps the stabilized state of ``group`` into the stabilized space of
    the flipped group.
    """
    flipped = group.negated()
    if H is not None and check and group.n <= DISTANCE_CAP:
        terms = _terms(H)
        if all(not commutes(t, g) for t in terms for g in group.generators):
            psi = stabilizer_state(group)
            Hmat = sum(to_matrix(t) for t in terms)
            xi = Hmat @ psi
            for g in flipped.generators:
                if np.linalg.norm(g.apply(xi) - xi) > 1e-9 * max(1.0, np.linalg.norm(xi)):
                    raise ConditionError(f"H psi is not stabilized by {g}")
    return flipped


# built-in groups ------------------------------------------------------------------

def steane_metrological_group() -> tuple[StabilizerGroup, PauliString]:
    """Steane code generators multiplied by logical X, plus logical X; ``H = Z1 Z2 Z3``."""
    S = [PauliString.from_str(s) for s in ("+IIIXXXX", "+IXXIIXX", "+XIXIXIX", "+IIIZZZZ", "+IZZIIZZ", "+ZIZIZIZ")]
    Xbar = PauliString.from_str("+XXXXXXX")
    gens = [multiply(Xbar, s) for s in S] + [Xbar]
    return StabilizerGroup(gens), PauliString.from_str("+ZZZIIII")


def four_two_two_aux_group() -> tuple[StabilizerGroup, PauliString]:
    """[[4,2,2]] stabilizers, its logical X's and X on an auxiliary qubit; ``H = Y1 Z4 Y5``."""
    gens = ["+XXIII", "+IIXXI", "+XIXII", "+IIIIX", "+ZZZZI"]
    return StabilizerGroup(gens), PauliString.from_str("+YIIZY")


def ghz_group(n: int) -> StabilizerGroup:
    """Generators ``-X..Y_j Y_{j+1}..X`` and ``X^n`` of the GHZ state."""
    gens = []
    for j in range(n - 1):
        chars = ["X"] * n
        chars[j] = chars[j + 1] = "Y"
        gens.append("-" + "".join(chars))
    gens.append("+" + "X" * n)
    return StabilizerGroup(gens)


def toric_lattice(L: int):
    """Star/plaquette operators on an ``L x L`` torus with qubits on edges.

    Returns ``(n, stars, plaquettes, zbar1, zbar2, H)`` where ``H`` has ``Z`` on
    a perfect matching of vertices and ``X`` on a perfect matching of
    plaquettes (``Y`` where they overlap), so it anticommutes with every star
    and plaquette. ``L`` must be even.
    """
    if L % 2 or L < 2:
        raise ParameterError("the toric construction needs an even side length")
    n = 2 * L * L

    def h(x, y):
        return 2 * ((y % L) * L + (x % L))

    def v(x, y):
        return 2 * ((y % L) * L + (x % L)) + 1

    def op(sites, letter):
        return PauliString.from_sites(n, {s: letter for s in sites})

    stars = [op([h(x, y), h(x - 1, y), v(x, y), v(x, y - 1)], "X") for y in range(L) for x in range(L)]
    plaqs = [op([h(x, y), h(x, y + 1), v(x, y), v(x + 1, y)], "Z") for y in range(L) for x in range(L)]
    zbar1 = op([h(x, 0) for x in range(L)], "Z")
    zbar2 = op([v(0, y) for y in range(L)], "Z")
    zset = {h(x, y) for y in range(L) for x in range(0, L, 2)}
    xset = {h(x, y) for y in range(1, L, 2) for x in range(L)}
    letters = {}
    for s in zset | xset:
        letters[s] = "Y" if (s in zset and s in xset) else ("Z" if s in zset else "X")
    H = PauliString.from_sites(n, letters)
    return n, stars, plaqs, zbar1, zbar2, H


def toric_metrological_group(L: int = 4) -> tuple[StabilizerGroup, PauliString]:
    """Toric-code state stabilized by stars, plaquettes and both logical Z's."""
    n, stars, plaqs, z1, z2, H = toric_lattice(L)
    group = StabilizerGroup(stars[:-1] + plaqs[:-1] + [z1, z2])
    return group, H


# equality-restoring perturbation ------------------------------------------------

@dataclass
class Perturbation:
    """Perturbed Stinespring isometry and its bookkeeping."""

    V: np.ndarray
    out_dim: int
    env_dim: int
    alpha: float
    distance: float
    isometry_defect: float
    mode: str
    meta: dict = field(default_factory=dict)

    @property
    def channel(self) -> KrausChannel:
        return from_stinespring(self.V, self.out_dim, validate=False)


def _kernel_basis(rho: np.ndarray) -> np.ndarray:
    dec = la.eig_hermitian(rho)
    return dec.eigenvectors[:, ~dec.support_mask()]


def restore_equality_perturbation(
    V: npt.ArrayLike | KrausChannel,
    psi: npt.ArrayLike,
    xi: npt.ArrayLike,
    epsilon: float,
    out_dim: int | None = None,
    preserve_zero_loss: bool = False,
    G_B: npt.ArrayLike | None = None,
) -> Perturbation:
    """Perturb an isometry so that the trade-off relation becomes an equality.

    Without ``preserve_zero_loss`` a unitary ``W`` on ``B ⊗ E`` rotates
    ``V psi`` by angle ``theta = 2 arcsin(eps/2)`` toward a vector supported on
    both marginal kernels, making one marginal full rank;
    ``||WV - V|| <= ||W - I|| = 2 sin(theta/2) = eps``.

    With ``preserve_zero_loss``, ``V' = cos(a) V + sin(a) G_B V Z~`` with
    ``a = eps/2`` and ``Z~ = Z_L + (I - Pi_L)``. By default ``G_B`` flips an
    appended flag qubit (``B`` becomes ``B ⊗ flag``), which keeps ``V'`` an
    exact isometry. A supplied ``G_B`` must satisfy
    ``P G P = 0`` for ``P`` in ``{P_rho, P_zeta}`` and the two cross terms,
    where ``zeta = N(|xi><xi|)``.
    """
    if epsilon <= 0:
        raise ParameterError("epsilon must be positive")
    if isinstance(V, KrausChannel):
        out_dim = V.out_dim
        V = stinespring(V)
    if out_dim is None:
        raise ParameterError("out_dim is required for a raw isometry")
    V = np.asarray(V, dtype=complex)
    d_in = V.shape[1]
    env = V.shape[0] // out_dim
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    xi = np.asarray(xi, dtype=complex).reshape(-1)
    mu = (V @ psi).reshape(out_dim, env)
    rhoB = mu @ mu.conj().T
    rhoE = (mu.T @ mu.conj())

    if not preserve_zero_loss:
        KB, KE = _kernel_basis(rhoB), _kernel_basis(rhoE)
        rB, rE = KB.shape[1], KE.shape[1]
        if rB == 0 or rE == 0:
            return Perturbation(V.copy(), out_dim, env, 0.0, 0.0, _iso_defect(V), "unchanged")
        r = min(rB, rE)
        chi = sum(np.kron(KB[:, j], KE[:, j]) for j in range(r)) / np.sqrt(r)
        m = mu.reshape(-1)
        m = m / np.linalg.norm(m)
        theta = 2 * np.arcsin(min(epsilon, 2.0) / 2)
        dim = V.shape[0]
        W = (
            np.eye(dim)
            + (np.cos(theta) - 1) * (np.outer(m, m.conj()) + np.outer(chi, chi.conj()))
            + np.sin(theta) * (np.outer(chi, m.conj()) - np.outer(m, chi.conj()))
        )
        Vp = W @ V
        return Perturbation(
            Vp, out_dim, env, float(theta), la.op_norm(Vp - V), _iso_defect(Vp), "rotation",
            {"full_rank_side": "E" if rE <= rB else "B"},
        )

    s = np.linalg.norm(xi)
    xh = xi / s
    ZL = np.outer(psi, xh.conj()) + np.outer(xh, psi.conj())
    PiL = np.outer(psi, psi.conj()) + np.outer(xh, xh.conj())
    Zt = ZL + np.eye(d_in) - PiL
    a = epsilon / 2
    if G_B is None:
        T = V.reshape(out_dim, env, d_in)
        Va = np.zeros((out_dim, 2, env, d_in), dtype=complex)
        Va[:, 0] = T
        Vflip = np.zeros_like(Va)
        Vflip[:, 1] = T
        Va = Va.reshape(2 * out_dim * env, d_in)
        Vflip = Vflip.reshape(2 * out_dim * env, d_in)
        Vp = np.cos(a) * Va + np.sin(a) * (Vflip @ Zt)
        return Perturbation(
            Vp, 2 * out_dim, env, float(a), la.op_norm(Vp - Va), _iso_defect(Vp), "flag",
            {"flag_qubit": True},
        )
    G = np.asarray(G_B, dtype=complex)
    if G.shape != (out_dim, out_dim):
        raise DimensionError("G_B must act on the output space")
    nu = (V @ xh).reshape(out_dim, env)
    zeta = nu @ nu.conj().T
    Pr, Pz = la.support_projector(rhoB), la.support_projector(zeta)
    worst = max(la.op_norm(A @ G @ B) for A in (Pr, Pz) for B in (Pr, Pz))
    if worst > 1e-9:
        raise ConditionError(f"G_B violates its projector conditions (residual {worst:.3e})")
    GV = np.kron(G, np.eye(env)) @ V
    Vp = np.cos(a) * V + np.sin(a) * (GV @ Zt)
    return Perturbation(Vp, out_dim, env, float(a), la.op_norm(Vp - V), _iso_defect(Vp), "supplied")


def _iso_defect(V: np.ndarray) -> float:
    return la.op_norm(V.conj().T @ V - np.eye(V.shape[1]))


__all__ = [
    "PauliString",
    "StabilizerGroup",
    "ZeroLossResult",
    "Certification",
    "Perturbation",
    "multiply",
    "commutes",
    "weight",
    "to_matrix",
    "zero_loss_check",
    "metrological_distance",
    "stabilizer_certify",
    "stabilizer_state",
    "anti_group_flip",
    "steane_metrological_group",
    "four_two_two_aux_group",
    "ghz_group",
    "toric_lattice",
    "toric_metrological_group",
    "restore_equality_perturbation",
]
