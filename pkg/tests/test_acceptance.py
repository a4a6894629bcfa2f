"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

The lines are also collected into a summary section at the end of the run.
"""

import itertools
import math
import time
from collections import Counter

import numpy as np

from ultraspec.hiermat import HierParams, build_Qrect, build_S, build_T, convert_coeffs
from ultraspec.noisesim import (analytic_moments, asymptotic_moments, beta_grid,
                                boltzmann_model, equilibration_report, simulate_full_cycle)
from ultraspec.oracle import evolve, exact_moments, verify_spectrum
from ultraspec.spectra import (all_classes, classify_word,
                               enumerate_partitions, spectrum_Q, spectrum_Q_qform,
                               spectrum_Qrect, spectrum_Qrect_power, total_multiplicity)

SWEEP = [(p, r) for p in (2, 3) for r in (2, 3, 5)]
N_RANDOM = 20


def _sweep_params(seed=1):
    rng = np.random.default_rng(seed)
    for p, r in SWEEP:
        for _ in range(N_RANDOM):
            yield HierParams(p, r, tuple(rng.uniform(0.1, 1.0, r + 1)))


def test_criterion_01_prop1(acceptance_log):
    t0 = time.perf_counter()
    ok, worst, cases = True, 0.0, 0
    for prm in _sweep_params():
        rep = verify_spectrum(prm, "Q")
        ok &= rep.passed and total_multiplicity(spectrum_Q(prm)) == prm.dim
        worst = max([worst] + [c.max_residual for c in rep.checks])
        cases += 1
    elapsed = time.perf_counter() - t0
    ok &= worst <= 1e-10 and elapsed < 30
    assert acceptance_log(1, ok, f"Q spectrum oracle, {cases} cases, worst residual "
                                 f"{worst:.2e}, {elapsed:.1f}s")


def test_criterion_02_qform(acceptance_log):
    worst = 0.0
    for prm in _sweep_params():
        a_lines = spectrum_Q(prm)
        q_lines = spectrum_Q_qform(convert_coeffs(prm, "Q"))
        assert [ln.multiplicity for ln in a_lines] == [ln.multiplicity for ln in q_lines]
        worst = max(worst, max(abs(x.value - y.value) for x, y in zip(a_lines, q_lines)))
    assert acceptance_log(2, worst <= 1e-12, f"q-form vs a-form max diff {worst:.2e}")


def _brute_nu(r, m):
    ranges = [range(m // i + 1) for i in range(1, m + 1)]
    return sorted(nu for nu in itertools.product(*ranges)
                  if sum(i * n for i, n in enumerate(nu, 1)) == m and sum(nu) <= r - m)


def test_criterion_03_prop2(acceptance_log):
    rng = np.random.default_rng(3)
    ok = True
    details = []
    for p, r in [(2, 3), (2, 5), (3, 3)]:
        counts = Counter(classify_word(w) for w in itertools.product(range(p), repeat=r))
        lines = spectrum_Qrect_power(HierParams(p, r, tuple(rng.uniform(0.1, 1, r + 1))))
        ok &= all(counts[ln.label.partition] == ln.multiplicity for ln in lines)
        ok &= sum(counts.values()) == total_multiplicity(lines) == p ** r
        for _ in range(5):
            rep = verify_spectrum(HierParams(p, r, tuple(rng.uniform(0.1, 1, r + 1))),
                                  "QrectPower")
            ok &= rep.passed
        details.append(f"p={p},r={r}:{len(all_classes(r))} classes")
    brute_ok = all([cp.nu for cp in enumerate_partitions(r, m)] == _brute_nu(r, m)
                   for r in range(2, 13) for m in range(1, r))
    ok &= brute_ok
    assert acceptance_log(3, ok, f"(T Q)^r classes exact, dense checks pass ({'; '.join(details)}),"
                                 f" partitions vs brute force r<=12: {brute_ok}")


def test_criterion_04_prop3(acceptance_log):
    rng = np.random.default_rng(4)
    ok, worst, conventions = True, 0.0, 0
    for p, r in [(p, r) for p in (2, 3) for r in (2, 3, 5)]:
        for _ in range(3):
            prm = HierParams(p, r, tuple(rng.uniform(0.1, 1, r + 1)))
            roots = [ln.value for ln in spectrum_Qrect(prm) for _ in range(ln.multiplicity)]
            powers = [ln.value for ln in spectrum_Qrect_power(prm)
                      for _ in range(ln.multiplicity)]
            # multiset agreement of roots**r with the power spectrum
            pending = list(powers)
            for v in roots:
                i = int(np.argmin([abs(v ** r - w) for w in pending]))
                ok &= abs(v ** r - pending[i]) <= 1e-10
                pending.pop(i)
            ok &= len(roots) == p ** r
            rep = verify_spectrum(prm, "Qrect")
            ok &= rep.passed
            worst = max([worst] + [c.max_residual for c in rep.checks
                                   if c.name.startswith("P3")])
            conv = [c for c in rep.checks if c.name.startswith("eigenvalue_convention")]
            ok &= len(conv) == 1
            conventions += len(conv)
    assert acceptance_log(4, ok, f"prime-r phase split, worst eigenvector residual {worst:.2e}, "
                                 f"convention recorded in {conventions} reports")


def test_criterion_05_moments(acceptance_log):
    t0 = time.perf_counter()
    worst = 0.0
    for r in (6, 8, 10):
        for beta in (0.5, 1.0, 2.0):
            model = boltzmann_model(2, r, beta)
            ana = analytic_moments(model)
            for method in ("hamming", "generator"):
                mean, var = exact_moments(model.params, r, (0,) * r, method)
                worst = max(worst, abs(ana.mean - mean), abs(ana.variance - var))
    elapsed = time.perf_counter() - t0
    assert acceptance_log(5, worst <= 1e-10 and elapsed < 60,
                          f"analytic vs exact evolution max diff {worst:.2e}, {elapsed:.1f}s")


def test_criterion_06_monte_carlo(acceptance_log):
    model = boltzmann_model(2, 20, 1.0)
    ana = analytic_moments(model)
    first = simulate_full_cycle(model, (0,) * 20, seed=2024, n_trials=100_000)
    again = simulate_full_cycle(model, (0,) * 20, seed=2024, n_trials=100_000)
    z = abs(first.mean - ana.mean) / first.std_error_mean
    ok = z <= 4 and first == again
    assert acceptance_log(6, ok, f"MC mean {first.mean:.4f} vs {ana.mean:.4f} ({z:.2f} SE), "
                                 f"rerun identical: {first == again}")


def test_criterion_07_fig3b(acceptance_log):
    r = 100
    betas = beta_grid(0.1, 8.0, 80, "log")
    reps = [analytic_moments(boltzmann_model(2, r, b)) for b in betas]
    mean = np.array([x.mean for x in reps])
    var = np.array([x.variance for x in reps])
    low = abs(mean[0] - 50) <= 1 and abs(var[0] - 25) <= 1
    tail = betas >= 5
    lead = 0.5 * r * np.exp(-betas[tail])
    high = (np.all(np.abs(mean[tail] - var[tail]) / mean[tail] <= 0.05)
            and np.all(np.abs(mean[tail] - lead) <= 0.1 * lead)
            and np.all(np.abs(var[tail] - lead) <= 0.1 * lead))
    peak = int(np.argmax(var))
    interior = var[peak] > var[0] and var[peak] > var[-1]
    ok = low and high and interior
    assert acceptance_log(7, ok, f"low-beta mean {mean[0]:.2f} var {var[0]:.2f}; tail ok {high};"
                                 f" variance peak {var[peak]:.2f} at beta={betas[peak]:.2f}")


def test_criterion_08_asymptotics(acceptance_log):
    worst = 0.0
    for beta in (0.5, 1.0, 2.0):
        model = boltzmann_model(2, 100, beta)
        ana, asy = analytic_moments(model), asymptotic_moments(model)
        worst = max(worst, abs(ana.mean - asy.mean), abs(ana.variance - asy.variance))
    assert acceptance_log(8, worst <= 2.0, f"r=100 analytic vs asymptotic max diff {worst:.2e}")


def test_criterion_09_equilibration(acceptance_log):
    ok = True
    margin = math.inf
    for r in (20, 100):
        for beta in (0.5, 1.0, 2.0, 4.0):
            rep = equilibration_report(boltzmann_model(2, r, beta), slack=1e-12)
            lo, hi = rep.bounds
            ok &= lo - 1e-12 <= rep.gap_shifted <= hi + 1e-12
            margin = min(margin, rep.gap_shifted - lo, hi - rep.gap_shifted)
    assert acceptance_log(9, ok, f"shifted-gap bounds hold, tightest margin {margin:.2e}")


def test_criterion_10_structural(acceptance_log):
    t0 = time.perf_counter()
    rng = np.random.default_rng(10)
    failures = 0
    for case in range(100):
        p = int(rng.integers(2, 4))
        r = int(rng.integers(1, 5 if p == 2 else 4))
        a = rng.uniform(0.1, 1.0, r + 1) * rng.choice([-1, 1], r + 1)
        prm = HierParams(p, r, tuple(a))
        S = [build_S(prm, g).entries for g in range(r + 1)]
        for g, h in itertools.product(range(r + 1), repeat=2):
            failures += not np.allclose(S[g] @ S[h], S[max(g, h)], atol=1e-12, rtol=0)
        T = build_T(prm).entries
        failures += not np.array_equal(T @ T.T, np.eye(prm.dim))
        failures += not np.array_equal(np.linalg.matrix_power(T, r), np.eye(prm.dim))
        # stochasticity on the normalized positive version of the same draw
        w = np.abs(a) / np.abs(a).sum()
        pos = HierParams(p, r, tuple(w))
        failures += not np.allclose(build_Qrect(pos).entries.sum(axis=0), 1, atol=1e-12)
        start = tuple(int(x) for x in rng.integers(0, p, r))
        failures += any(abs(s.w.sum() - 1) > 1e-12 for s in evolve(pos, start, 2 * r))
        for form in ("Q", "B", "C"):
            src = pos if form in ("B", "C") else prm
            back = convert_coeffs(convert_coeffs(src, form), "A").coeffs
            failures += not np.allclose(back, src.coeffs, rtol=1e-12, atol=0)
    elapsed = time.perf_counter() - t0
    ok = failures == 0 and elapsed < 10
    assert acceptance_log(10, ok, f"100 randomized structural cases, {failures} failures, "
                                  f"{elapsed:.1f}s")
