"""The ten acceptance criteria at their stated tolerances, one PASS/FAIL line each."""

import math
import time

import numpy as np
import pytest

from qfilab import bounds as bd
from qfilab import channels as ch
from qfilab import clock, codes, lindblad, scenarios, verify
from qfilab import manybody as mb

OMEGA = 1.3


def test_criterion_1_partial_dephasing(report):
    t = time.perf_counter()
    worst = 0.0
    for p in np.round(np.linspace(0, 1, 11), 10):
        r = scenarios.get("qubit-partial-dephasing").run({"p": p, "omega": OMEGA, "t0": 0.37})
        e, fr = r.extras, r.fisher_report
        worst = max(
            worst,
            abs(e["ratio_bob"] - (1 - p) ** 2),
            abs(e["ratio_eve"] - (2 * p - p**2)),
            abs(fr["sum_ratio"] - 1),
        )
    dt = time.perf_counter() - t
    report(1, worst <= 1e-9 and dt < 1, f"max deviation {worst:.1e} over p in 0..1, {dt:.2f} s")


def test_criterion_2_complete_x_dephasing(report):
    t = time.perf_counter()
    worst_df, worst_fb = 0.0, 0.0
    for wt in (0.3, 1.0, 2.0):
        r = scenarios.get("complete-x-dephasing").run({"omega": OMEGA, "t0": wt / OMEGA})
        worst_df = max(worst_df, r.fisher_report["delta_f"])
        worst_fb = max(worst_fb, abs(r.fisher_report["f_bob_t"] - OMEGA**2))
    r = scenarios.get("complete-x-dephasing").run({"omega": OMEGA, "t0": math.pi / OMEGA})
    at_pi = (not r.fisher_report["equality_holds"]) and r.fisher_report["f_bob_t"] < 1e-9
    dt = time.perf_counter() - t
    ok = worst_df < 1e-9 and worst_fb <= 1e-8 and at_pi and dt < 1
    report(2, ok, f"delta_f <= {worst_df:.1e}, |f_bob - omega^2| <= {worst_fb:.1e}, equality fails at pi: {at_pi}, {dt:.2f} s")


def test_criterion_3_ghz_erasure(report):
    t = time.perf_counter()
    worst = 0.0
    for n in range(3, 9):
        for p in (0.1, 0.5, 0.9):
            r = scenarios.get("ghz-erasure").run({"n": n, "p": p, "omega": OMEGA, "site": n // 2})
            want = p * n**2 * OMEGA**2
            worst = max(worst, abs(r.fisher_report["delta_f"] - want) / want)
    dt = time.perf_counter() - t
    report(3, worst <= 1e-7 and dt < 10, f"max relative error {worst:.1e}, {dt:.2f} s")


def _four_two_two_variance(omega, s_x, s_y):
    psi = mb.four_two_two_clock().densify()
    H = mb.xy_ising_hamiltonian(4, mb.SQUARE_EDGES, 2 * omega, s_x, s_y)
    return clock.energy_stats(psi, H)[1]


def test_criterion_4_four_two_two(report):
    t = time.perf_counter()
    var_err = abs(_four_two_two_variance(OMEGA, 0, 0) - 16 * OMEGA**2)
    # transversal couplings: the variance is 16 w^2 (1 + s_x^2) and does not depend on s_y
    for s_x, s_y in ((0.5, 0.0), (0.5, 0.7), (1.0, 1.0), (-0.3, 2.0)):
        var_err = max(var_err, abs(_four_two_two_variance(OMEGA, s_x, s_y) - 16 * OMEGA**2 * (1 + s_x**2)))
    psi = mb.four_two_two_clock().densify()
    H = mb.xy_ising_hamiltonian(4, mb.SQUARE_EDGES, 2 * OMEGA)
    xi = clock.xi_vector(psi, H)
    zero_loss = all(codes.zero_loss_check(psi, xi, ch.located_erasure(s, 1.0, 4)).holds for s in range(4))
    worst = 0.0
    for p in (0.3, 0.7):
        for s in range(4):
            r = scenarios.get("four-two-two").run({"omega": OMEGA, "p": p, "site": s})
            worst = max(worst, abs(r.fisher_report["f_bob_t"] / r.fisher_report["f_alice_t"] - 1))
    dt = time.perf_counter() - t
    ok = var_err <= 1e-10 * 16 * OMEGA**2 and zero_loss and worst <= 1e-7 and dt < 5
    report(4, ok, f"variance error {var_err:.1e} (16 w^2 (1 + s_x^2) form), zero loss {zero_loss}, F_Bob/4var - 1 <= {worst:.1e}, {dt:.2f} s")


@pytest.mark.xfail(strict=True, reason="stated transversal variance 4 w^2 (1 + s_x^2) is off by a factor 4; see decisions ledger")
def test_criterion_4_stated_transversal_variance():
    assert _four_two_two_variance(OMEGA, 0.5, 0.0) == pytest.approx(4 * OMEGA**2 * 1.25, rel=1e-10)


GRID = [(g, wt) for g in (0.01, 0.1, 0.5) for wt in (0.5, 1.0, 2.0, 5.0)]


def test_criterion_5_lindblad_z_dephasing(report):
    t = time.perf_counter()
    worst_e = worst_u = 0.0
    bound_ok = True
    for g, wt in GRID:
        gamma, t0 = g * OMEGA, wt / OMEGA
        cf = lindblad.clock_fisher(lindblad.z_dephasing(OMEGA, gamma), scenarios.PLUS, t0)
        r2 = math.exp(-2 * gamma * t0)
        f_exact = OMEGA**2 * r2 + gamma**2 * r2 / (1 - r2)
        worst_e = max(worst_e, abs(cf.f_exact - f_exact) / f_exact)
        worst_u = max(worst_u, abs(cf.f_unitary - OMEGA**2 * r2) / (OMEGA**2 * r2))
        bound_ok &= abs(cf.delta) <= cf.delta_bound
    dt = time.perf_counter() - t
    ok = worst_e <= 1e-7 and worst_u <= 1e-7 and bound_ok and dt < 5
    report(5, ok, f"f_exact rel err {worst_e:.1e} (gamma^2 coefficient 1), f_unitary rel err {worst_u:.1e}, |delta| <= bound {bound_ok}, {dt:.2f} s")


@pytest.mark.xfail(strict=True, reason="stated closed form carries a factor 2 on the gamma^2 term; see decisions ledger")
def test_criterion_5_stated_closed_form():
    for g, wt in GRID:
        gamma, t0 = g * OMEGA, wt / OMEGA
        cf = lindblad.clock_fisher(lindblad.z_dephasing(OMEGA, gamma), scenarios.PLUS, t0)
        r2 = math.exp(-2 * gamma * t0)
        assert cf.f_exact == pytest.approx(OMEGA**2 * r2 + 2 * gamma**2 * r2 / (1 - r2), rel=1e-7)


def test_criterion_6_repetition_orders(report):
    t = time.perf_counter()
    grid = np.geomspace(1e-3, 1e-2, 8)
    exact_err, slopes_bf, slopes_z = 0.0, {}, {}
    for n in (4, 6):
        pts = []
        for p in grid:
            r = scenarios.get("ad-repetition-bitflip").run({"n": n, "p": p})
            exact_err = max(exact_err, abs(r.fisher_report["delta_f"] - (4 - 4 * (1 - p) ** (2 * n))))
            pts.append((p, r.fisher_report["delta_f"]))
        slopes_bf[n] = bd.weak_noise_order_fit(pts)[0]
        pts = [(p, scenarios.get("repetition-zdephasing").run({"n": n, "p": p}).fisher_report["delta_f_eve"]) for p in grid]
        slopes_z[n] = bd.weak_noise_order_fit(pts)[0]
    dt = time.perf_counter() - t
    ok = (
        exact_err <= 1e-9
        and all(abs(s - 1) <= 0.05 for s in slopes_bf.values())
        and all(slopes_z[n] >= n / 2 - 0.2 for n in slopes_z)
        and dt < 30
    )
    fmt = lambda d: ", ".join(f"n={n}: {s:.3f}" for n, s in d.items())  # noqa: E731
    report(6, ok, f"bit-flip exact err {exact_err:.1e}, slopes {fmt(slopes_bf)}; Z-dephasing slopes {fmt(slopes_z)}; {dt:.2f} s")


def test_criterion_7_stabilizer_certification(report):
    t = time.perf_counter()
    group, H = codes.steane_metrological_group()
    steane = codes.stabilizer_certify(group, H, 2)
    psi = codes.stabilizer_state(group)
    Hm = H.to_matrix()
    xi = Hm @ psi - np.vdot(psi, Hm @ psi) * psi
    steane_dm = codes.metrological_distance(psi, xi)
    group, H = codes.four_two_two_aux_group()
    aux = codes.stabilizer_certify(group, H, 2)
    psi = codes.stabilizer_state(group)
    xi = H.to_matrix() @ psi
    X5 = codes.PauliString.from_str("+IIIIX").to_matrix()
    flip = np.vdot(psi, X5 @ psi).real > 1 - 1e-10 and np.vdot(xi, X5 @ xi).real / np.vdot(xi, xi).real < -1 + 1e-10
    aux_dm = codes.metrological_distance(psi, xi)
    group, H = codes.toric_metrological_group(4)
    toric = codes.stabilizer_certify(group, H, 3)
    dt = time.perf_counter() - t
    ok = steane.distance == 3 and steane_dm == 3 and aux.distance == 3 and aux_dm == 3 and flip and toric.certified and dt < 60
    report(
        7,
        ok,
        f"Steane distance {steane.distance} (dense {steane_dm}), [[4,2,2]]+aux distance {aux.distance} (dense {aux_dm}), X5 flips {flip}, toric L=4 weight-3 {toric.verdict}, {dt:.2f} s",
    )


def test_criterion_8_bound_bracketing(report):
    t = time.perf_counter()
    n = 8
    worst, mono = math.inf, True
    for probe in ("ghz", "plus_product", "uniform_dicke"):
        state = mb.probe_library(probe, n)
        psi = state.densify()
        H = np.diag(mb.onsite_energy(1.0)(mb.bits_of(range(2**n), n)).astype(complex))
        for p in (0.02, 0.05, 0.1):
            single = ch.amplitude_damping(p)
            exact = clock.fisher_report(clock.MetrologyScenario(psi, H, ch.IIDChannel(single, n))).f_bob_t
            ups = [mb.iid_pinched_symmetric(state, 1.0, single, p, k).value for k in (1, 2, 4, 8)]
            low = bd.preprocessing_lower(psi, H, ch.IIDChannel(ch.amplitude_damping(1 - p), n)).value
            worst = min(worst, ups[-1] - exact, exact - low)
            mono &= all(b <= a + 1e-10 for a, b in zip(ups, ups[1:]))
    dt = time.perf_counter() - t
    report(8, worst >= -1e-8 and mono and dt < 300, f"minimum slack {worst:.1e}, k-monotone {mono}, {dt:.2f} s")


def test_criterion_9_fisher_properties(report):
    t = time.perf_counter()
    worst = {}
    for i, (name, fn) in enumerate(verify.FISHER_PROPERTIES.items()):
        worst[name] = verify.run_property(fn, np.random.default_rng([0xF15E4, 9, i]), 100)[0]
    worst["bures"] = verify.run_property(verify.prop_bures, np.random.default_rng([0xF15E4, 9, 99]), 20)[0]
    dt = time.perf_counter() - t
    bad = [k for k, v in worst.items() if v > 0]
    report(9, not bad and dt < 120, f"{len(worst)} properties, 100 instances each (20 for the fidelity oracle), failures {bad or 'none'}, {dt:.2f} s")


def test_criterion_10_logical_qubit_relation(report):
    t = time.perf_counter()
    rng = np.random.default_rng([0xF15E4, 10])
    viol, gaps = -math.inf, []
    for _ in range(200):
        v, g = verify.theorem_check(*verify.theorem_instance(rng))
        viol = max(viol, v)
        if g is not None:
            gaps.append(g)
    dt = time.perf_counter() - t
    ok = viol <= 0 and all(g <= 0 for g in gaps) and dt < 120
    strict = 200 - len(gaps)
    report(10, ok and strict > 0, f"worst inequality margin {viol:.1e}, equality within 1e-8 on all {len(gaps)} rank-condition cases, {strict} cases without it, {dt:.2f} s")
