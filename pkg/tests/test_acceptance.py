"""Acceptance suite: one PASS/FAIL line per criterion (shown in the pytest summary)."""
import math
import time

import numpy as np
import pytest

from conftest import record
from helpers import commuting_pair, pair_corpus, rel_err, sector_family, stolz_family
from hinfcalc.calculus import calc_ritt, sectorial_approximation, spectral_oracle
from hinfcalc.dilation import build_dilation, intertwine_check, joint_dilation, verify_dilation
from hinfcalc.geometry import ShiftedStolz
from hinfcalc.operators import ritt_classify
from hinfcalc.rademacher import SignEnumeration, property_An_ratio, r_bounded_constant, rad_norm
from hinfcalc.shiftnorms import ShiftPolynomial, shift_norm_p2, truncated_window_norm
from hinfcalc.symbols import DecayCertificate, ExpressionSymbol
from hinfcalc.transfer import (assemble_reverse_n2, build_auxiliary_g, build_context, cauchy_residual,
                               check_g_decay, check_g_supnorm, transfer_forward)
from hinfcalc.workbench import ExperimentSpec, counterexample_diagonal, counterexample_experiment

GAMMA, BETA, THETA = 1.35, 1.15, 0.9


@pytest.fixture(scope="module")
def corpus():
    return pair_corpus(50, seed=2024)


def test_criterion_01_ritt_calculus_matches_spectral_oracle(corpus):
    fam = stolz_family()
    t0 = time.perf_counter()
    worst = 0.0
    for T in corpus:
        for phi in fam:
            worst = max(worst, rel_err(calc_ritt(phi, T), spectral_oracle(phi, T)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-8 and elapsed < 60.0
    print(record(1, ok, f"worst relative error {worst:.2e} over {len(corpus)}x{len(fam)} cases in {elapsed:.1f}s"))
    assert worst <= 1e-8
    assert elapsed < 60.0


def test_criterion_02_forward_transfer(corpus):
    fam = sector_family()
    worst = 0.0
    failures = 0
    for T in corpus:
        for f in fam:
            rep = transfer_forward(f, T)
            worst = max(worst, rep.difference / rep.threshold)
            failures += not rep.passed
    ok = failures == 0
    print(record(2, ok, f"worst difference / (1e-7 (1 + ||f(A)||)) = {worst:.2e}, {failures} failures"))
    assert ok


def test_criterion_03_reverse_assembly_and_cauchy_reconstruction():
    fam = sector_family()
    contexts = [build_context(fam[0], GAMMA, BETA, THETA), build_context(fam[9], GAMMA, BETA, THETA)]
    rng = np.random.default_rng(7)
    inner = ShiftedStolz(THETA)
    worst_rel, worst_res = 0.0, 0.0
    for k in range(20):
        T = commuting_pair(rng, int(rng.integers(2, 5)))
        eye = np.eye(T[0].shape[0])
        ctx = contexts[k % 2]
        _, rep = assemble_reverse_n2(ctx, eye - T[0], eye - T[1])
        pts = np.stack([inner.sample_interior(rng, 100), inner.sample_interior(rng, 100)], axis=1)
        worst_rel = max(worst_rel, rep.relative)
        worst_res = max(worst_res, cauchy_residual(ctx, pts))
    ok = worst_rel <= 1e-6 and worst_res <= 1e-8
    print(record(3, ok, f"assembly relative error {worst_rel:.2e}, Cauchy residual {worst_res:.2e} on 20 cases"))
    assert worst_rel <= 1e-6
    assert worst_res <= 1e-8


def test_criterion_04_auxiliary_function_control():
    contexts = [build_context(f, GAMMA, BETA, THETA) for f in sector_family()]
    sup = check_g_supnorm(contexts)
    decay = [check_g_decay(build_auxiliary_g(ctx), THETA) for ctx in contexts]
    regimes_ok = all(d.passed and len(d.regimes) == 4 for d in decay)
    worst_change = max(r["relative_change"] for d in decay for r in d.regimes.values())
    ok = sup.passed and regimes_ok
    print(record(4, ok, f"sup-ratio max change {sup.max_change:.2e}, regime max change {worst_change:.2e}"))
    assert sup.passed
    assert sup.max_change < 0.02
    assert regimes_ok


def test_criterion_05_dilation():
    T = np.diag([1 - 2.0 ** -i for i in range(1, 5)])
    sysm = build_dilation(T, 512)
    rep = verify_dilation(sysm, m_max=8)
    fac_ok = all(r["error"] <= r["tail"] and r["error"] <= 1e-6 for r in rep.factorization)
    pair_ok = all(r["error"] <= r["tail"] and r["error"] <= 1e-6 for r in rep.pairing)
    inter = [intertwine_check(sysm, S, tol=1e-8) for S in (np.eye(4), T, T @ T)]
    inter_ok = all(r.passed for r in inter)
    _, jrep = joint_dilation([np.diag([0.5, 0.2, 0.7]), np.diag([0.3, 0.6, 0.9])], 64, max_total=6)
    joint_ok = jrep.passed and len(jrep.rows) == 28
    ok = fac_ok and pair_ok and inter_ok and joint_ok
    worst = max(r["error"] for r in rep.factorization + rep.pairing)
    print(record(5, ok, f"factorization/pairing worst {worst:.2e}, intertwining worst "
                        f"{max(r.error for r in inter):.2e}, joint rows {len(jrep.rows)} pass={jrep.passed}"))
    assert fac_ok and pair_ok and inter_ok and joint_ok


def test_criterion_06_ritt_classification():
    beta = 0.5 * (math.pi / 3 + math.pi / 2)
    diag_ok = True
    for N in (2, 3, 5, 8, 16, 32):
        rep = ritt_classify(np.diag(counterexample_diagonal(N)), beta)
        diag_ok = diag_ok and rep.verdict and rep.power_window.stabilized
    J = np.array([[1.0, 1.0], [0.0, 1.0]])
    nil_norm = np.linalg.norm(J - np.eye(2), 2)
    jrep = ritt_classify(J, 1.0)
    slope_ok = abs(jrep.power_window.slope - nil_norm) <= 1e-9
    ok = diag_ok and not jrep.verdict and slope_ok
    print(record(6, ok, f"counterexample diagonals verdict={diag_ok}, Jordan verdict={jrep.verdict} "
                        f"slope={jrep.power_window.slope:.12f}"))
    assert diag_ok
    assert not jrep.verdict
    assert slope_ok


def test_criterion_07_shift_norms():
    hand = [abs(shift_norm_p2(ShiftPolynomial(1, {(k,): 1.0})) - 1.0) for k in range(5)]
    hand.append(abs(shift_norm_p2(ShiftPolynomial(1, {(0,): 1.0, (1,): 1.0})) - 2.0))
    hand_ok = max(hand) <= 1e-9
    rng = np.random.default_rng(11)
    gaps = []
    for n in (1, 2):
        for deg in (1, 2, 3, 4):
            arr = rng.normal(size=(deg + 1,) * n) + 1j * rng.normal(size=(deg + 1,) * n)
            P = ShiftPolynomial.from_array(arr)
            gaps.append(abs(shift_norm_p2(P) - truncated_window_norm(P, 2, 128, restarts=0).value))
    ok = hand_ok and max(gaps) <= 1e-2
    print(record(7, ok, f"hand values error {max(hand):.1e}, W=128 worst gap {max(gaps):.2e}"))
    assert hand_ok
    assert max(gaps) <= 1e-2


def _variation(xs):
    return max(xs) / min(xs) - 1.0


def test_criterion_08_counterexample_trend():
    t0 = time.perf_counter()
    rep = counterexample_experiment(ExperimentSpec(dims=[2, 4, 8, 16], p=[2.0, 4.0], timing=False))
    elapsed = time.perf_counter() - t0
    k2 = rep.series(2.0, "K_joint_lower")
    k4 = rep.series(4.0, "K_joint_lower")
    bounded = _variation(k2) < 0.05
    nondecreasing = all(b >= a for a, b in zip(k4, k4[1:]))
    strict = any(b > a * (1 + 1e-6) for a, b in zip(k4, k4[1:]))
    singles = max(_variation(rep.series(p, key)) for p in (2.0, 4.0) for key in ("K1", "K2"))
    ok = bounded and nondecreasing and strict and singles < 0.1 and elapsed < 600
    print(record(8, ok, f"p=2 K_joint {['%.4f' % v for v in k2]}, p=4 K_joint {['%.4f' % v for v in k4]}, "
                        f"single variation {singles:.2e}, {elapsed:.1f}s"))
    assert bounded and nondecreasing and strict
    assert singles < 0.1
    assert elapsed < 600


def test_criterion_09_rademacher_suite():
    rng = np.random.default_rng(5)
    errs = []
    for K in (1, 3, 6, 10):
        xs = rng.normal(size=(K, 4)) + 1j * rng.normal(size=(K, 4))
        errs.append(abs(rad_norm(xs, 2) - rad_norm(xs, 2, SignEnumeration(K), method="enumerate")))
    pyth_ok = max(errs) <= 1e-12
    rI = r_bounded_constant([np.eye(3)]).value
    ratio_errs = []
    for n, k in ((1, 4), (2, 2), (2, 3), (3, 2)):
        shape = (k,) * n
        alpha = rng.normal(size=shape) + 1j * rng.normal(size=shape)
        x = rng.normal(size=shape + (1,)) + 1j * rng.normal(size=shape + (1,))
        xs = rng.normal(size=shape + (1,)) + 1j * rng.normal(size=shape + (1,))
        closed = abs(np.sum(alpha * x[..., 0] * xs[..., 0])) / (
            np.max(np.abs(alpha)) * np.linalg.norm(x) * np.linalg.norm(xs))
        ratio_errs.append(abs(property_An_ratio(alpha, x, xs) - closed))
    ok = pyth_ok and abs(rI - 1.0) <= 1e-12 and max(ratio_errs) <= 1e-9
    print(record(9, ok, f"Pythagorean error {max(errs):.1e}, R-bound of {{I}} = {rI:.15f}, "
                        f"property ratio error {max(ratio_errs):.1e}"))
    assert pyth_ok
    assert abs(rI - 1.0) <= 1e-12
    assert max(ratio_errs) <= 1e-9


def test_criterion_10_sectorial_approximation():
    f = ExpressionSymbol(["div", ["var", 0], ["pow", ["add", 1, ["var", 0]], 2]], 1, [[-1.0]],
                         DecayCertificate(1.0, 1.0, "sector"))
    A = np.diag([2.0 ** -i for i in range(1, 7)])
    devs = [sectorial_approximation(A, 10.0 ** -k, f).deviation for k in range(1, 7)]
    mono = all(b < a for a, b in zip(devs, devs[1:]))
    ok = mono and devs[-1] < 1e-6
    print(record(10, ok, f"deviations {['%.2e' % d for d in devs]}"))
    assert mono
    assert devs[-1] < 1e-6


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q"]))
