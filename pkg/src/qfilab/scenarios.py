"""Named clock scenarios with parameter schemas and golden checks.

Each scenario maps a parameter dict to a :class:`ScenarioResult`. The CLI and
the verify suites both go through this registry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import bounds as bd
from . import channels as ch
from . import clock, codes, lindblad
from . import linalg as la
from . import manybody as mb
from .errors import ParameterError

FISHER_COLUMNS = ("f_alice_t", "f_bob_t", "f_eve_eta", "delta_f", "delta_f_eve", "sum_ratio", "equality_holds")
DENSE_EXACT_CAP = 10


@dataclass
class ScenarioResult:
    scenario: str
    topic: str
    params: dict
    fisher_report: dict | None
    bounds: dict
    equality_diag: dict | None
    extras: dict
    golden_passed: bool = False
    golden_detail: str = ""

    def flat(self) -> dict:
        out = {}
        out.update(self.fisher_report or {})
        out.update(self.bounds)
        out.update(self.extras)
        return out

    def as_dict(self) -> dict:
        return {
            "schema": 1,
            "scenario": self.scenario,
            "topic": self.topic,
            "params": self.params,
            "fisher_report": self.fisher_report,
            "bounds": self.bounds,
            "equality_diag": self.equality_diag,
            "extras": self.extras,
            "golden": {"passed": self.golden_passed, "detail": self.golden_detail},
        }


@dataclass(frozen=True)
class Scenario:
    """Registry entry.

    ``schema`` maps parameter names to ``(type, default, help)``; ``columns``
    lists the CSV output columns after the parameters; ``fit_key`` names the
    column used for log-log order fits in sweeps.
    """

    name: str
    topic: str
    schema: dict
    compute: Callable[[dict], tuple]
    golden: Callable[[dict], tuple]
    columns: tuple
    fit_key: str | None = None
    meta: dict = field(default_factory=dict)

    def parse(self, raw: dict[str, Any]) -> dict:
        """Validate and coerce parameters, filling defaults."""
        unknown = set(raw) - set(self.schema)
        if unknown:
            raise ParameterError(
                f"unknown parameter(s) {', '.join(sorted(unknown))} for {self.name}; known: {', '.join(self.schema)}"
            )
        out = {}
        for key, (typ, default, _) in self.schema.items():
            val = raw.get(key, default)
            try:
                out[key] = _coerce(typ, val)
            except (TypeError, ValueError) as exc:
                raise ParameterError(f"parameter {key}={val!r} is not a valid {typ.__name__}") from exc
        return out

    def run(self, raw: dict[str, Any] | None = None) -> ScenarioResult:
        params = self.parse(raw or {})
        fr, bounds, eq, extras = self.compute(params)
        res = ScenarioResult(self.name, self.topic, params, fr, bounds, eq, extras)
        ok, detail = self.golden(res)
        res.golden_passed, res.golden_detail = bool(ok), detail
        return res


def _coerce(typ, val):
    if typ is bool and isinstance(val, str):
        if val.lower() in ("1", "true", "yes"):
            return True
        if val.lower() in ("0", "false", "no"):
            return False
        raise ValueError(val)
    if typ is int and isinstance(val, str):
        return int(float(val)) if float(val).is_integer() else int(val)
    return typ(val)


def _report(sc: clock.MetrologyScenario) -> tuple[dict, dict]:
    rep = clock.fisher_report(sc).as_dict()
    eq = rep.pop("equality")
    return rep, eq


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def _onsite_dense(n: int, omega: float) -> np.ndarray:
    return mb.onsite_energy(omega)(mb.bits_of(range(2**n), n)).astype(complex)


# single qubit -------------------------------------------------------------------

PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)


def _partial_dephasing(p):
    sc = clock.MetrologyScenario.from_initial(PLUS, p["omega"] / 2 * la.PAULI_Z, ch.partial_dephasing_Z(p["p"]), p["t0"])
    fr, eq = _report(sc)
    q = p["p"]
    extras = {
        "ratio_bob": fr["f_bob_t"] / fr["f_alice_t"],
        "ratio_eve": fr["f_eve_eta"] / fr["f_alice_eta"],
        "closed_ratio_bob": (1 - q) ** 2,
        "closed_ratio_eve": 2 * q - q**2,
    }
    return fr, {}, eq, extras


def _partial_dephasing_golden(r):
    e = r.extras
    err = max(abs(e["ratio_bob"] - e["closed_ratio_bob"]), abs(e["ratio_eve"] - e["closed_ratio_eve"]))
    err_sum = abs(r.fisher_report["sum_ratio"] - 1)
    return err < 1e-9 and err_sum < 1e-9, f"ratio error {err:.2e}, |sum - 1| = {err_sum:.2e}"


def _x_dephasing(p):
    sc = clock.MetrologyScenario.from_initial(PLUS, p["omega"] / 2 * la.PAULI_Z, ch.complete_dephasing_X(), p["t0"])
    fr, eq = _report(sc)
    wt = p["omega"] * p["t0"]
    generic = abs(math.sin(wt)) > 1e-6
    return fr, {}, eq, {"omega_t0": wt, "closed_f_bob": p["omega"] ** 2 if generic else 0.0}


def _x_dephasing_golden(r):
    fr, w2 = r.fisher_report, r.params["omega"] ** 2
    if r.extras["closed_f_bob"] > 0:
        ok = fr["delta_f"] < 1e-9 * max(1.0, w2) and abs(fr["f_bob_t"] - w2) < 1e-8 * max(1.0, w2)
        return ok, f"delta_f = {fr['delta_f']:.2e}, f_bob - omega^2 = {fr['f_bob_t'] - w2:.2e}"
    ok = (not fr["equality_holds"]) and fr["f_bob_t"] < 1e-9
    return ok, f"rank change point: equality_holds={fr['equality_holds']}, f_bob = {fr['f_bob_t']:.2e}"


# many-body clocks ---------------------------------------------------------------

def _ghz_dense(n: int) -> np.ndarray:
    v = np.zeros(2**n, dtype=complex)
    v[0] = v[-1] = 1 / np.sqrt(2)
    return v


def _ghz_erasure(p):
    n = p["n"]
    if not 1 <= n <= DENSE_EXACT_CAP:
        raise ParameterError(f"ghz-erasure is dense; n must be in 1..{DENSE_EXACT_CAP}")
    H = np.diag(_onsite_dense(n, p["omega"]))
    sc = clock.MetrologyScenario(_ghz_dense(n), H, ch.located_erasure(p["site"], p["p"], n), 0.0, "ghz-erasure")
    fr, eq = _report(sc)
    return fr, {}, eq, {"closed_delta_f": p["p"] * n**2 * p["omega"] ** 2}


def _ghz_erasure_golden(r):
    want = r.extras["closed_delta_f"]
    got = r.fisher_report["delta_f"]
    err = abs(got - want) / max(abs(want), 1.0)
    return err < 1e-7, f"delta_f {got:.12g} vs p n^2 omega^2 = {want:.12g}"


def _four_two_two(p):
    w = p["omega"]
    psi = mb.four_two_two_clock().densify()
    H = mb.xy_ising_hamiltonian(4, mb.SQUARE_EDGES, 2 * w, p["s_x"], p["s_y"])
    sc = clock.MetrologyScenario(psi, H, ch.located_erasure(p["site"], p["p"], 4), 0.0, "four-two-two")
    fr, eq = _report(sc)
    zl = codes.zero_loss_check(psi, sc.xi, ch.located_erasure(p["site"], 1.0, 4))
    extras = {
        "variance": sc.variance,
        "closed_variance": 16 * w**2 * (1 + p["s_x"] ** 2),
        "zero_loss": zl.holds,
        "zero_loss_residual": zl.worst_residual,
    }
    return fr, {}, eq, extras


def _four_two_two_golden(r):
    e, fr = r.extras, r.fisher_report
    ok = abs(e["variance"] - e["closed_variance"]) <= 1e-10 * max(1.0, e["closed_variance"])
    detail = f"variance {e['variance']:.12g} vs {e['closed_variance']:.12g}"
    if r.params["s_x"] == 0 and r.params["s_y"] == 0:
        loss_ok = e["zero_loss"] and _rel(fr["f_bob_t"], fr["f_alice_t"]) < 1e-7
        ok = ok and loss_ok
        detail += f"; zero_loss={e['zero_loss']}, f_bob/4var = {fr['f_bob_t'] / fr['f_alice_t']:.12f}"
    return ok, detail


def _repetition(p, single):
    n = p["n"]
    if not 1 <= n <= DENSE_EXACT_CAP:
        raise ParameterError(f"repetition scenarios are dense; n must be in 1..{DENSE_EXACT_CAP}")
    psi = la.kron_all([PLUS] * n)
    H = la.kron_all([la.PAULI_Z] * n)
    sc = clock.MetrologyScenario(psi, H, ch.IIDChannel(single, n), 0.0)
    return _report(sc)


def _rep_bitflip(p):
    fr, eq = _repetition(p, ch.bit_flip(p["p"]))
    return fr, {}, eq, {"closed_delta_f": 4 - 4 * (1 - p["p"]) ** (2 * p["n"])}


def _rep_bitflip_golden(r):
    got, want = r.fisher_report["delta_f"], r.extras["closed_delta_f"]
    return abs(got - want) < 1e-9, f"delta_f {got:.12g} vs 4 - 4(1-p)^(2n) = {want:.12g}"


def _rep_zdephasing(p):
    fr, eq = _repetition(p, ch.partial_dephasing_Z(p["p"]))
    return fr, {}, eq, {}


def _rep_zdephasing_golden(r):
    fr = r.fisher_report
    ok = fr["sum_ratio"] <= 1 + 1e-8 and fr["delta_f_eve"] >= -1e-12
    detail = f"sum_ratio {fr['sum_ratio']:.12f}"
    if fr["equality_holds"]:
        gap = abs(fr["delta_f"] - fr["delta_f_eve"])
        ok = ok and gap < 1e-7 * max(1.0, fr["f_alice_t"])
        detail += f", |delta_f - delta_f_eve| = {gap:.2e}"
    return ok, detail


_SYMMETRIC_PROBES = ("ghz", "plus_product", "uniform_dicke", "half_gauss")


def _iid_ad(p):
    n, q, w = p["n"], p["p"], p["omega"]
    if p["probe"] not in _SYMMETRIC_PROBES:
        raise ParameterError(f"probe must be one of {', '.join(_SYMMETRIC_PROBES)}")
    k = n if p["k"] < 0 else p["k"]
    state = mb.probe_library(p["probe"], n)
    single = ch.amplitude_damping(q)
    upper = mb.iid_pinched_symmetric(state, w, single, q, k)
    bounds = {"pinched_upper": upper.value, "k_used": k}
    fr = eq = None
    extras = {}
    if n <= DENSE_EXACT_CAP:
        psi = state.densify()
        H = np.diag(_onsite_dense(n, w))
        q0 = 1 - q if p["q0"] < 0 else p["q0"]
        if q0 > 1 - q + 1e-12:
            raise ParameterError("q0 must not exceed 1 - p for the complementary factorization")
        lower = bd.preprocessing_lower(psi, H, ch.IIDChannel(ch.amplitude_damping(q0), n))
        bounds["preprocessing_lower"] = lower.value
        fr, eq = _report(clock.MetrologyScenario(psi, H, ch.IIDChannel(single, n), 0.0))
        extras["q0"] = q0
    return fr, bounds, eq, extras


def _bracket_golden(r):
    b = r.bounds
    if r.fisher_report is None:
        return b["pinched_upper"] >= -1e-12, "no dense reference; checked nonnegativity only"
    exact = r.fisher_report["f_bob_t"]
    up = b["pinched_upper"] - exact
    lo = exact - b.get("preprocessing_lower", -math.inf)
    return min(up, lo) >= -1e-8, f"upper slack {up:.3e}, lower slack {lo:.3e}"


def _ising_code(p):
    n, q, J = p["n"], p["p"], p["J"]
    k = n if p["k"] < 0 else p["k"]
    state = mb.probe_library(p["probe"], n)
    energy = mb.ising_energy(mb.chain_edges(n), J)
    single = ch.amplitude_damping(q)
    upper = mb.iid_pinched_symmetric(state, energy, single, q, k)
    bounds = {"pinched_upper": upper.value, "delta_f_lower": upper.meta["delta_f_lower"], "k_used": k}
    fr = eq = None
    if n <= p["exact_max_n"]:
        diag = energy(mb.bits_of(range(2**n), n)).astype(complex)
        fr, eq = _report(clock.MetrologyScenario(state.densify(), np.diag(diag), ch.IIDChannel(single, n), 0.0))
    return fr, bounds, eq, {"four_var": upper.meta["four_var"]}


def _dicke_pair(p):
    n, k, w = p["n"], p["k"], p["omega"]
    state = mb.probe_library("dicke_pair", n, q1=p["q1"], q2=p["q2"])
    loss = mb.erasure_loss_symmetric(state, w, k)
    four_var = 4 * state.energy_stats(w)[1]
    extras = {"delta_f": loss, "f_bob_t": four_var - loss, "f_alice_t": four_var}
    if n <= DENSE_EXACT_CAP:
        psi = state.densify()
        hb = _onsite_dense(n, w) * psi
        hb = hb - np.vdot(psi, hb) * psi
        A = psi.reshape(2**k, -1)
        B = hb.reshape(2**k, -1)
        from . import fisher

        extras["dense_delta_f"] = fisher.qfi(A @ A.conj().T, B @ A.conj().T + A @ B.conj().T)
    return None, {}, None, extras


def _dicke_pair_golden(r):
    e = r.extras
    ok = -1e-9 <= e["delta_f"] <= e["f_alice_t"] + 1e-9
    detail = f"delta_f {e['delta_f']:.10g} of {e['f_alice_t']:.10g}"
    if "dense_delta_f" in e:
        err = abs(e["delta_f"] - e["dense_delta_f"]) / max(1.0, e["dense_delta_f"])
        ok = ok and err < 1e-8
        detail += f"; dense cross-check error {err:.2e}"
    return ok, detail


_CODES = {
    "steane": (codes.steane_metrological_group, 2),
    "four_two_two_aux": (codes.four_two_two_aux_group, 2),
    "toric": (codes.toric_metrological_group, 3),
}


def _stabilizer(p):
    if p["code"] not in _CODES:
        raise ParameterError(f"code must be one of {', '.join(_CODES)}")
    build, default_w = _CODES[p["code"]]
    group, H = build()
    w = default_w if p["weight"] < 0 else p["weight"]
    cert = codes.stabilizer_certify(group, H, w)
    extras = {
        "n": group.n,
        "error_weight": w,
        "certified": cert.certified,
        "verdict": cert.verdict,
        "searched": cert.searched,
        "witnesses": len(cert.witnesses),
    }
    if group.n <= codes.DISTANCE_CAP:
        psi = codes.stabilizer_state(group)
        Hm = codes.to_matrix(H)
        xi = Hm @ psi - np.vdot(psi, Hm @ psi) * psi
        extras["dense_distance"] = codes.metrological_distance(psi, xi)
    return None, {}, None, extras


def _stabilizer_golden(r):
    e = r.extras
    ok = e["certified"]
    detail = f"{e['verdict']} at error weight {e['error_weight']}"
    if "dense_distance" in e:
        ok = ok and e["dense_distance"] >= e["error_weight"] + 1
        detail += f"; dense metrological distance {e['dense_distance']}"
    return ok, detail


def _lindblad(p, builder):
    spec = builder(p["omega"], p["gamma"])
    cf = lindblad.clock_fisher(spec, PLUS, p["t0"])
    dec = lindblad.decompose(spec, p["t0"])
    sc = clock.MetrologyScenario(dec.U_t @ PLUS, spec.H, dec.N_t, p["t0"])
    fr, eq = _report(sc)
    extras = dict(cf.as_dict())
    extras["composition_residual"] = dec.composition_residual
    extras["commuting"] = dec.commuting
    return fr, {"delta_bound": cf.delta_bound}, eq, extras


def _lindblad_z(p):
    fr, b, eq, extras = _lindblad(p, lindblad.z_dephasing)
    cf = lindblad.z_dephasing_closed_form(p["omega"], p["gamma"], p["t0"])
    extras["closed_f_exact"] = cf["f_exact"]
    extras["closed_f_unitary"] = cf["f_unitary"]
    return fr, b, eq, extras


def _lindblad_z_golden(r):
    e = r.extras
    err = max(_rel(e["f_exact"], e["closed_f_exact"]), _rel(e["f_unitary"], e["closed_f_unitary"]))
    ok = err < 1e-8 and abs(e["delta"]) <= e["delta_bound"] + 1e-12
    return ok, f"closed-form error {err:.2e}, |delta| {abs(e['delta']):.3e} <= {e['delta_bound']:.3e}"


def _lindblad_x_golden(r):
    e = r.extras
    ok = abs(e["delta"]) <= e["delta_bound"] + 1e-12 and e["composition_residual"] < 1e-10
    return ok, f"|delta| {abs(e['delta']):.3e} <= {e['delta_bound']:.3e}, composition residual {e['composition_residual']:.1e}"


_W = (float, 1.0, "angular frequency omega")
_LINDBLAD_COLS = FISHER_COLUMNS + ("f_exact", "f_unitary", "delta", "delta_bound", "f_noise")

REGISTRY: dict[str, Scenario] = {
    s.name: s
    for s in (
        Scenario(
            "qubit-partial-dephasing",
            "single qubit under partial Z dephasing",
            {"p": (float, 0.3, "dephasing strength"), "omega": _W, "t0": (float, 0.4, "time")},
            _partial_dephasing,
            _partial_dephasing_golden,
            FISHER_COLUMNS + ("ratio_bob", "ratio_eve", "closed_ratio_bob", "closed_ratio_eve"),
        ),
        Scenario(
            "complete-x-dephasing",
            "single qubit under complete transversal dephasing",
            {"omega": _W, "t0": (float, 1.0, "time")},
            _x_dephasing,
            _x_dephasing_golden,
            FISHER_COLUMNS + ("omega_t0", "closed_f_bob"),
        ),
        Scenario(
            "ghz-erasure",
            "GHZ probe with one erased site",
            {"n": (int, 4, "qubits"), "p": (float, 0.5, "erasure probability"), "omega": _W, "site": (int, 0, "erased site")},
            _ghz_erasure,
            _ghz_erasure_golden,
            FISHER_COLUMNS + ("closed_delta_f",),
            fit_key="delta_f",
        ),
        Scenario(
            "four-two-two",
            "[[4,2,2]] clock state with a located erasure",
            {
                "omega": _W,
                "s_x": (float, 0.0, "XX coupling"),
                "s_y": (float, 0.0, "YY coupling"),
                "p": (float, 0.3, "erasure probability"),
                "site": (int, 0, "erased site"),
            },
            _four_two_two,
            _four_two_two_golden,
            FISHER_COLUMNS + ("variance", "closed_variance", "zero_loss"),
        ),
        Scenario(
            "lindblad-z-dephasing",
            "Lindblad qubit clock with Z dephasing",
            {"omega": _W, "gamma": (float, 0.1, "dephasing rate"), "t0": (float, 1.0, "time")},
            _lindblad_z,
            _lindblad_z_golden,
            _LINDBLAD_COLS + ("closed_f_exact", "closed_f_unitary"),
        ),
        Scenario(
            "lindblad-x-dephasing",
            "Lindblad qubit clock with X dephasing",
            {"omega": _W, "gamma": (float, 0.1, "dephasing rate"), "t0": (float, 1.0, "time")},
            lambda p: _lindblad(p, lindblad.x_dephasing),
            _lindblad_x_golden,
            _LINDBLAD_COLS + ("composition_residual",),
        ),
        Scenario(
            "ad-repetition-bitflip",
            "repetition code |+>^n with H = Z^n under bit flips",
            {"n": (int, 4, "qubits"), "p": (float, 0.01, "flip parameter")},
            _rep_bitflip,
            _rep_bitflip_golden,
            FISHER_COLUMNS + ("closed_delta_f",),
            fit_key="delta_f",
        ),
        Scenario(
            "repetition-zdephasing",
            "repetition code |+>^n with H = Z^n under Z dephasing",
            {"n": (int, 4, "qubits"), "p": (float, 0.01, "dephasing strength")},
            _rep_zdephasing,
            _rep_zdephasing_golden,
            FISHER_COLUMNS,
            fit_key="delta_f_eve",
        ),
        Scenario(
            "iid-amplitude-damping",
            "symmetric probes under i.i.d. amplitude damping",
            {
                "probe": (str, "ghz", "ghz, plus_product, uniform_dicke or half_gauss"),
                "n": (int, 8, "qubits"),
                "p": (float, 0.05, "decay probability"),
                "k": (int, -1, "largest jump weight kept (-1 for n)"),
                "omega": _W,
                "q0": (float, -1.0, "pre-processing damping (-1 for 1 - p)"),
            },
            _iid_ad,
            _bracket_golden,
            FISHER_COLUMNS + ("pinched_upper", "preprocessing_lower"),
        ),
        Scenario(
            "ising-code",
            "Ising-chain code probe under i.i.d. amplitude damping",
            {
                "probe": (str, "code_f_af", "sparse probe name"),
                "n": (int, 8, "qubits"),
                "p": (float, 0.005, "decay probability"),
                "k": (int, -1, "largest jump weight kept (-1 for n)"),
                "J": (float, 1.0, "Ising coupling"),
                "exact_max_n": (int, 8, "largest n with a dense exact reference"),
            },
            _ising_code,
            _bracket_golden,
            FISHER_COLUMNS + ("pinched_upper", "delta_f_lower", "four_var"),
            fit_key="delta_f_lower",
        ),
        Scenario(
            "dicke-pair-erasure",
            "Dicke-pair probe with k sites erased",
            {
                "n": (int, 20, "qubits"),
                "q1": (int, 4, "first excitation number"),
                "q2": (int, 16, "second excitation number"),
                "k": (int, 3, "erased sites"),
                "omega": _W,
            },
            _dicke_pair,
            _dicke_pair_golden,
            ("f_alice_t", "f_bob_t", "delta_f"),
        ),
        Scenario(
            "stabilizer",
            "stabilizer-based metrological code certification",
            {"code": (str, "steane", "steane, four_two_two_aux or toric"), "weight": (int, -1, "error weight (-1 for code default)")},
            _stabilizer,
            _stabilizer_golden,
            ("n", "error_weight", "certified", "searched", "witnesses"),
        ),
    )
}


def get(name: str) -> Scenario:
    try:
        return REGISTRY[name]
    except KeyError:
        raise KeyError(name) from None


def names() -> list[str]:
    return sorted(REGISTRY)


__all__ = ["Scenario", "ScenarioResult", "REGISTRY", "FISHER_COLUMNS", "get", "names"]
