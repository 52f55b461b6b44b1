"""Acceptance criteria, one test each, printing a PASS/FAIL line per criterion.

Run alone with ``pytest tests/test_acceptance.py -v``; the 2D gap runs
and the four-level omega estimate are marked ``slow`` (about twelve minutes
together on one core).
"""

import subprocess
import sys

import numpy as np
import pytest

from lavgap.classifiers import muckenhoupt_ball_value, muckenhoupt_constant, z_constant
from lavgap.decomposition import decompose_on_grid, omega_at, sigma_at
from lavgap.energy import EnergySpec, approximate, energy
from lavgap.errors import GateRefused
from lavgap.experiments import ConeConfig, gap_experiment
from lavgap.geometry import Ball, Domain, StarShape, sample_balls
from lavgap.mollifier import (
    MollifierConfig,
    ScalarField,
    check_holder_bound,
    check_linf_bound,
    kernel_eval,
    mollify,
    mollify_field,
    mollify_gradient,
)
from lavgap.polycover import (
    DerivativeWindow,
    interval_cover,
    negative_power_average_bound,
    polynomial_weight,
    verify_cover,
)
from lavgap.weights import catalog_get, catalog_names

INNER = Domain.interval(-1, 1)
OUTER = Domain.interval(-2, 2)


def report(capsys, number, ok, detail):
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
    assert ok, detail


def verdicts(rep):
    return f"{rep.verdict} {[f'{e:.4g}' for _, e in rep.estimates]}"


def test_criterion_01_factorization_identity(capsys):
    bad = []
    for name in catalog_names():
        f = decompose_on_grid(catalog_get(name).weight, INNER, 1001)
        pos = f.sigma > 0
        ident = np.all(np.abs(f.sigma[pos] * f.omega[pos] - f.a[pos]) <= 1e-12 * f.a[pos] + 1e-300)
        if not (ident and np.all((f.omega >= 0) & (f.omega <= 1))):
            bad.append(name)
    report(capsys, 1, not bad, f"sigma*omega = a and omega in [0,1] on 8 weights; failures: {bad}")


@pytest.mark.slow
def test_criterion_02_sin6_factor_verdicts(capsys):
    w = catalog_get("sin6").weight
    z_sigma = z_constant(lambda x: sigma_at(w, x), 3.0, INNER, levels=3)
    # the worst ball for omega is first sampled at level 3, so a fourth level confirms it
    a_omega = muckenhoupt_constant(lambda x: omega_at(w, x), 4.0, INNER, OUTER, levels=4)
    z_raw = z_constant(w.value, 3.0, INNER, levels=3)
    a_raw = muckenhoupt_constant(w.value, 4.0, INNER, OUTER, levels=3)
    ok = (z_sigma.verdict == "bounded" and a_omega.verdict == "bounded"
          and z_raw.verdict == "diverging" and a_raw.verdict == "diverging")
    report(capsys, 2, ok, f"sigma Z3 {verdicts(z_sigma)}; omega A4 {verdicts(a_omega)}; "
                          f"raw Z3 {verdicts(z_raw)}; raw A4 {verdicts(a_raw)}")


def test_criterion_03_example_weight_claims(capsys):
    t2 = catalog_get("power2n(1)").weight.value
    flat = catalog_get("gauss_flat").weight.value
    runs = {
        "t2 Z2": (z_constant(t2, 2.0, INNER, levels=3), "bounded"),
        "t2 Z2.5": (z_constant(t2, 2.5, INNER, levels=3), "diverging"),
        "t2 A3.5": (muckenhoupt_constant(t2, 3.5, INNER, OUTER, levels=3), "bounded"),
        "t2 A2.9": (muckenhoupt_constant(t2, 2.9, INNER, OUTER, levels=3), "diverging"),
    }
    for kappa in (1.0, 3.0, 6.0):
        runs[f"flat Z{kappa:g}"] = (z_constant(flat, kappa, INNER, levels=3), "bounded")
    for r in (2.0, 4.0, 8.0):
        runs[f"flat A{r:g}"] = (muckenhoupt_constant(flat, r, INNER, OUTER, levels=3), "diverging")
    wrong = {k: rep.verdict for k, (rep, want) in runs.items() if rep.verdict != want}
    report(capsys, 3, not wrong, f"{len(runs)} claims checked; mismatches: {wrong}")


def test_criterion_04_random_cover_suite(capsys):
    rng = np.random.default_rng(2024)
    accepted, failures, worst = 0, [], 0.0
    while accepted < 200:
        deg = int(rng.integers(1, 6))
        coeffs = rng.uniform(-3, 3, size=deg + 1)
        T = float(rng.uniform(0.5, 5.0))
        t = np.linspace(0, T, 10_000)
        if coeffs[-1] <= 0 or np.any(np.polyval(coeffs[::-1], t) < 0):
            continue
        accepted += 1
        for eps in (1.0, 0.5, 0.1):
            cov = interval_cover(coeffs, T, eps)
            ok = verify_cover(coeffs, T, eps, cov, 10_000)[0]
            worst = max(worst, cov.measured_ratio / cov.ratio_bound)
            if not (ok and cov.is_disjoint() and cov.measured_ratio <= cov.ratio_bound):
                failures.append((coeffs.tolist(), T, eps))
    fix = interval_cover([1, -2, 1], 2.0, 1.0)
    contains = bool(np.all(fix.contains(np.linspace(2 / 3 + 1e-3, 2 - 1e-3, 10_000))))
    report(capsys, 4, not failures and contains,
           f"600 covers, {len(failures)} failures, max ratio/bound {worst:.3g}; (t-1)^2 window covered: {contains}")


def test_criterion_05_negative_power_scale_invariance(capsys):
    w = polynomial_weight([0, 0, 1])
    ratios = []
    for h in (0.1, 0.01, 0.001):
        m, s = negative_power_average_bound(w, DerivativeWindow(Ball((0.0,), h), 2, (1.0,), 2.0, 1.0, 3.0))
        ratios.append(m / s)
    spread = max(ratios) / min(ratios) - 1
    report(capsys, 5, spread < 0.1, f"ratios {[f'{r:.4f}' for r in ratios]}, spread {spread:.2e}")


def test_criterion_06_mollifier_suite(capsys):
    notes, ok = [], True
    star = StarShape(INNER, (0.0,), 0.9)
    cfg = MollifierConfig(star, 0.05)
    t = np.linspace(-0.1, 0.1, 200_001)
    v = kernel_eval(MollifierConfig(star, 0.1), t)
    mass = float(np.sum(v[1:] + v[:-1]) / 2 * (t[1] - t[0]))
    ok &= abs(mass - 1) <= 1e-10
    notes.append(f"mass-1 {mass - 1:.1e}")

    smooth = ScalarField.from_function(INNER, 2001, lambda x: np.sin(np.pi * x) * (1 - x**2))
    x = np.random.default_rng(0).uniform(-0.8, 0.8, 20)
    fd = (mollify(cfg, smooth, x + 1e-4) - mollify(cfg, smooth, x - 1e-4)) / 2e-4
    g = mollify_gradient(cfg, smooth, x)[:, 0]
    rel = float(np.max(np.abs(g - fd) / np.maximum(np.abs(fd), 1e-2 * np.max(np.abs(fd)))))
    ok &= rel <= 1e-3
    notes.append(f"gradient rel {rel:.1e}")

    fixtures = {
        "hat": (ScalarField.from_function(INNER, 2001, lambda x: np.maximum(0, 1 - np.abs(x))), 1.0),
        "sqrt": (ScalarField.from_function(INNER, 2001, lambda x: np.sqrt(np.minimum(1, 1 - np.abs(x)))), 0.5),
        "smooth": (smooth, 1.0),
    }
    for name, (u, gamma) in fixtures.items():
        linf = check_linf_bound(cfg, u)[2]
        hold = check_holder_bound(cfg, u, gamma)[2]
        ok &= linf and hold
        if not (linf and hold):
            notes.append(f"{name} bound fails")

    # the squeeze costs about (delta / R) ||u||_1, so these fixtures use R = 1.9
    wide = Domain.interval(-2, 2)
    wstar = StarShape(wide, (0.0,), 1.9)
    for name, f in (("hat", lambda x: np.maximum(0, 1 - np.abs(x))), ("tent", lambda x: np.maximum(0, 2 - np.abs(x)))):
        u = ScalarField.from_function(wide, 4001, f)
        errs = [u.with_values(mollify_field(MollifierConfig(wstar, d), u).values - u.values).l1_norm()
                for d in (0.1, 0.05, 0.025, 0.0125)]
        mono = all(b < a for a, b in zip(errs, errs[1:]))
        last = errs[-1] / u.l1_norm()
        ok &= mono and last <= 1e-2
        notes.append(f"{name} L1 last {last:.2e} monotone {mono}")
    report(capsys, 6, bool(ok), "; ".join(notes))


def test_criterion_07_approximation_convergence(capsys):
    spec = EnergySpec(2, 4, catalog_get("power2n(1)").weight, INNER)
    u = ScalarField.from_function(INNER, 8001, lambda x: np.maximum(0, 1 - np.abs(x)))
    tr = approximate(u, spec, StarShape(INNER, (0.0,), 0.9), [0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001])
    rel = abs(tr.energies[-1] - energy(u, spec)) / energy(u, spec)
    mono = all(b < a for a, b in zip(tr.w11_errors, tr.w11_errors[1:]))
    try:
        approximate(u, EnergySpec(1, 4, spec.weight, INNER), StarShape(INNER, (0.0,), 0.9), [0.1])
        refused = False
    except GateRefused:
        refused = True
    report(capsys, 7, rel < 0.02 and mono and refused,
           f"relative energy error {rel:.2e} at delta=1e-3, W11 decreasing {mono}, p=1 q=4 refused {refused}")


def _osc(t):
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(t == 0, 0.0, t**2 * np.sin(1.0 / np.where(t == 0, 1.0, t)) ** 2)


def test_criterion_08_muckenhoupt_monotone_in_r(capsys):
    balls = sample_balls(OUTER, INNER, 1000, seed=8)
    violations = {}
    for name, f in (("|t|", np.abs), ("t^2 sin^2(1/t)", _osc)):
        count = 0
        for b in balls:
            lo = muckenhoupt_ball_value(f, 3.0, b, 5)
            hi = muckenhoupt_ball_value(f, 4.0, b, 5)
            if hi > lo * (1 + 1e-10) + 1e-10:
                count += 1
        violations[name] = count
    report(capsys, 8, sum(violations.values()) == 0, f"A4 <= A3 on 1000 balls; violations {violations}")


@pytest.mark.slow
def test_criterion_09_gap_detector(capsys):
    runs = {
        "out-of-range": (ConeConfig(), "gap-consistent"),
        "in-range": (ConeConfig(kappa=1.0, scale=10.0, q=2.5), "absence-consistent"),
        "single-phase": (ConeConfig(single_phase=True), "absence-consistent"),
    }
    notes, ok = [], True
    for name, (cfg, want) in runs.items():
        rep = gap_experiment(cfg)
        good = rep.verdict == want and (want != "gap-consistent" or rep.margin >= 0.05)
        ok &= good
        notes.append(f"{name} {rep.verdict} margin {rep.margin:.3f} F[u0] {rep.competitor_energy:.4f} "
                     f"oracle {rep.oracle_energy:.4f}")
    report(capsys, 9, bool(ok), "; ".join(notes))


CLI_RUNS = [
    ["zconst", "--weight", "power2n:1", "--kappa", "2", "--levels", "2", "--seed", "3"],
    ["muck", "--weight", "power2n:1", "--r", "3.5", "--levels", "2", "--seed", "5"],
    ["muck-global", "--weight", "power2n:1", "--r", "3.5", "--region=0,1", "--levels", "2", "--seed", "1"],
    ["classify", "--weight", "power2n:1", "--p", "2", "--q", "4", "--levels", "2", "--seed", "2"],
    ["polycover", "--coeffs=1,-2,1", "--T", "2", "--eps", "1", "--verify", "10000"],
    ["decompose", "--weight", "sin6", "--resolution", "101"],
]


def test_criterion_10_determinism(capsys):
    differ = []
    for argv in CLI_RUNS:
        outs = [subprocess.run([sys.executable, "-m", "lavgap.cli", *argv], capture_output=True, check=True).stdout
                for _ in range(2)]
        if outs[0] != outs[1] or not outs[0]:
            differ.append(argv[0])
    report(capsys, 10, not differ, f"{len(CLI_RUNS)} seeded CLI runs repeated; differing: {differ}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
