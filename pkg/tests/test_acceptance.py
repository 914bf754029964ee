"""Acceptance gate: every release criterion at its stated tolerance.

Run with `pytest tests/test_acceptance.py -v -s` to see one PASS/FAIL line
per criterion.
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from cslmzi import (
    ContrastSeries,
    CslParams,
    NoiseModel,
    RunConfig,
    coherence_damping,
    contrast,
    estimate_contrast_mc,
    estimate_phase_variance_mc,
    exclusion_curve,
    overlap_bound,
    packet_width,
    phase_variance,
    phase_variance_large_rc,
    phase_variance_small_rc,
)
from cslmzi.cli import main, _validation_sets
from conftest import recovery_trial
from helpers import draw_param_sets, quad_loop_variance

CFG = RunConfig()
RB = CFG.species


def report(num: int, ok: bool, detail: str) -> None:
    print(f"\ncriterion {num}: {'PASS' if ok else 'FAIL'} - {detail}", flush=True)
    assert ok, f"criterion {num} failed: {detail}"


def test_criterion_1_overlap_bound_number():
    bound = overlap_bound(1e-6, 0.52, RB, safety=0.1)
    start = time.perf_counter()
    for _ in range(10):
        overlap_bound(1e-6, 0.52, RB, safety=0.1)
    per_call = (time.perf_counter() - start) / 10.0
    ok = abs(bound - 3.9e6) / 3.9e6 < 0.05 and per_call < 1e-3
    report(1, ok, f"overlap bound {bound:.4g} /(m^2 s) vs 3.9e6 (5%), "
                  f"{per_call * 1e6:.1f} us/call")


def test_criterion_2_packet_spread_numbers():
    ell_mid = packet_width(1e-6, 0.19, RB)
    ell_end = packet_width(1e-6, 0.52, RB)
    ok = (abs(ell_mid - 7e-5) / 7e-5 < 0.05
          and abs(ell_end - 1.9e-4) / 1.9e-4 < 0.05)
    report(2, ok, f"ell(0.19 s) = {ell_mid:.3g} m vs 7e-5, "
                  f"ell(0.52 s) = {ell_end:.3g} m vs 1.9e-4 (5%)")


def test_criterion_3_exclusion_crossover():
    lam_flat = 5.6e-5
    t = np.linspace(0.011, 0.26, 23)
    c = 0.45 * np.exp(-2.0 * lam_flat * 87**2 * t)
    series = ContrastSeries(t, c, np.full(23, 0.01))
    curve = exclusion_curve(
        series, RB, CFG.geometry(0.2), CFG.sigma, np.geomspace(1e-8, 1e-4, 41)
    )
    ok = (curve.crossover_rc is not None
          and abs(curve.crossover_rc - 3.8e-6) / 3.8e-6 < 0.05)
    report(3, ok, f"crossover r_C = {curve.crossover_rc:.4g} m vs 3.8e-6 (5%)")


def test_criterion_4_packet_loop_consistency():
    start = time.perf_counter()
    worst = 0.0
    for params in draw_param_sets(seed=2024, n=100, u_lo=1e-3, u_hi=1e4):
        via_packets = coherence_damping(
            params["csl"], params["wp"], params["ifo"].t_sep
        ) ** 2
        via_loop = contrast(params["csl"], params["species"], params["ifo"])
        worst = max(worst, abs(via_packets - via_loop) / via_loop)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and elapsed < 10.0
    report(4, ok, f"squared packet damping vs loop contrast: worst rel diff "
                  f"{worst:.2e} over 100 sets (tol 1e-10), {elapsed:.1f} s")


def test_criterion_5_monte_carlo_oracle():
    start = time.perf_counter()
    worst_z = 0.0
    for i, params in enumerate(_validation_sets(CFG)):
        csl = CslParams(params["lambda_s"], params["r_c_m"])
        ifo = CFG.geometry(params["t_s"])
        noise = NoiseModel(seed=3000 + i, dt=params["t_s"] / 1e4)
        var_est = estimate_phase_variance_mc(csl, RB, ifo, 100_000, noise, threads=2)
        c_est = estimate_contrast_mc(csl, RB, ifo, 100_000, noise, threads=2)
        var_true = phase_variance(csl, RB, ifo)
        z_var = abs(var_est.mean - var_true) / var_est.std_error
        z_c = abs(c_est.mean - math.exp(-0.5 * var_true)) / c_est.std_error
        worst_z = max(worst_z, z_var, z_c)
    elapsed = time.perf_counter() - start
    ok = worst_z <= 3.0 and elapsed < 120.0
    report(5, ok, f"MC vs closed form over 10 regime-crossing sets at n=1e5, "
                  f"dt=T/1e4: worst |z| = {worst_z:.2f} (<= 3), {elapsed:.0f} s")


def test_criterion_6_quadrature_oracle():
    worst = 0.0
    for params in draw_param_sets(seed=606, n=20):
        expected = quad_loop_variance(params["csl"], params["species"], params["ifo"])
        got = phase_variance(params["csl"], params["species"], params["ifo"])
        worst = max(worst, abs(got - expected) / expected)
    ok = worst <= 1e-8
    report(6, ok, f"closed form vs loop-integral quadrature: worst rel diff "
                  f"{worst:.2e} over 20 sets (tol 1e-8)")


def test_criterion_7_end_to_end_recovery():
    start = time.perf_counter()
    hits = 0
    for seed in range(100):
        lam, sigma = recovery_trial(seed, lam_true=5.6e-5, sigma_p=0.01)
        hits += abs(lam - 5.6e-5) <= 2.0 * sigma
    elapsed = time.perf_counter() - start
    ok = hits >= 90 and elapsed < 60.0
    report(7, ok, f"synthetic pipeline recovered the collapse rate within "
                  f"2 sigma in {hits}/100 trials (>= 90), {elapsed:.0f} s")


def test_criterion_8_asymptotic_regimes():
    def csl_at(u):
        return CslParams(3e-5, 11e-3 * 0.26 / (2.0 * u))

    ifo = CFG.geometry(0.26)
    worst_flat, worst_cubic = 0.0, 0.0
    for u in (100.0, 316.0, 1e3, 1e4):
        v = phase_variance(csl_at(u), RB, ifo)
        flat = phase_variance_small_rc(csl_at(u), RB, ifo)
        excess = abs(v - flat) / flat - (2.0 / (math.sqrt(math.pi) * u) + 1e-12)
        worst_flat = max(worst_flat, excess)
    for u in (1e-4, 1e-3, 1e-2):
        v = phase_variance(csl_at(u), RB, ifo)
        cubic = phase_variance_large_rc(csl_at(u), RB, ifo)
        worst_cubic = max(worst_cubic, abs(v - cubic) / cubic)
    ok = worst_flat <= 0.0 and worst_cubic <= 1e-3
    report(8, ok, f"flat-regime deviation within analytic envelope for u >= 100; "
                  f"cubic-law deviation {worst_cubic:.1e} (<= 1e-3) for u <= 0.01")


def test_criterion_9_byte_determinism(tmp_path):
    def fringe_tree(out, threads):
        code = main(["simulate-fringe", "--out-dir", str(out), "--lambda",
                     "5.6e-5", "--seed", "11", "--t-count", "4",
                     "--threads", str(threads)])
        assert code == 0
        return {p.name: p.read_bytes() for p in sorted(out.iterdir())}

    trees = [fringe_tree(tmp_path / f"f{i}", threads)
             for i, threads in enumerate((1, 1, 3))]
    fringe_ok = trees[0] == trees[1] == trees[2]

    reports = []
    for i, threads in enumerate((1, 1, 2)):
        rep = tmp_path / f"mc{i}.json"
        code = main(["mc-validate", "--n-samples", "2000", "--dt-frac", "500",
                     "--seed", "5", "--threads", str(threads),
                     "--report", str(rep)])
        assert code == 0
        reports.append(rep.read_bytes())
    mc_ok = reports[0] == reports[1] == reports[2]

    ok = fringe_ok and mc_ok
    report(9, ok, "fringe files and MC reports byte-identical across reruns "
                  "and across --threads 1/2/3")
