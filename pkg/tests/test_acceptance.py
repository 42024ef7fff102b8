"""Acceptance criteria 1-9.

Each test records one PASS/FAIL line (printed in the terminal summary) and
then asserts. Monte Carlo criteria run the shipped configs in ``configs/``
with their fixed master seed.
"""

import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import integrate

from momentevt.linalg import det_normalize, determinant, mahalanobis_norm, spd_inverse, spd_sqrt
from momentevt.models import elliptical_sample, model_frechet
from momentevt.regions import (
    EllipticalModel,
    affine_transform_region,
    estimate_region,
    region_contains,
    sym_diff_probability,
    true_region,
)
from momentevt.simlab.config import load_config
from momentevt.simlab.runner import run_experiment
from momentevt.univariate import (
    QuantileQuery,
    extreme_quantile,
    log_moments,
    moment_estimates,
    order_sample,
    q_gamma,
)

from conftest import random_invertible, random_spd

ROOT = Path(__file__).resolve().parent.parent
CONFIGS = ROOT / "configs"
RESULTS: list[str] = []


def record(number: int, title: str, passed: bool, detail: str) -> None:
    RESULTS.append(f"criterion {number} {'PASS' if passed else 'FAIL'}: {title} ({detail})")
    assert passed, f"criterion {number} failed: {detail}"


def rel(a: float, b: float) -> float:
    return abs(a - b) / abs(b)


def test_criterion_1_hand_example():
    start = time.perf_counter()
    ln2 = math.log(2.0)
    s = order_sample([1.0, 2.0, 4.0, 8.0])
    lm = log_moments(s, 2)
    est = moment_estimates(s, 2)
    errors = {
        "gamma_plus": rel(est.gamma_plus, 1.5 * ln2),
        "m1^2/m2": rel(lm.m1**2 / lm.m2, 0.9),
        "gamma_minus": rel(est.gamma_minus, -4.0),
        "gamma_m": rel(est.gamma_m, 1.5 * ln2 - 4.0),
        "sigma_m": rel(est.sigma_m, 15.0 * ln2),
        "x_p": rel(extreme_quantile(s, QuantileQuery(k=2, p=1 / 8, n=4)), 5.454253487958055837),
    }
    elapsed = time.perf_counter() - start
    worst = max(errors, key=errors.get)
    record(
        1, "hand-computed moment estimates",
        errors[worst] <= 1e-12 and elapsed < 1.0,
        f"max rel error {errors[worst]:.1e} ({worst}), {elapsed:.3f}s",
    )


def test_criterion_2_q_gamma():
    start = time.perf_counter()
    worst_abs = 0.0
    for g in (-1.0, -0.5, 0.0, 0.5, 1.0, 2.0):
        for t in (2.0, 10.0, 1e3):
            oracle, _ = integrate.quad(
                lambda u: u * math.exp(g * u), 0.0, math.log(t), epsabs=0.0, epsrel=1e-13, limit=200
            )
            worst_abs = max(worst_abs, abs(q_gamma(g, t) - oracle))
    worst_cont = 0.0
    for t in (1.5, 10.0, 1e3, 1e6):
        base = q_gamma(0.0, t)
        for eps in (1e-9, -1e-9):
            worst_cont = max(worst_cont, abs(q_gamma(eps, t) - base) / base)
    elapsed = time.perf_counter() - start
    record(
        2, "q_gamma against quadrature and continuity at 0",
        worst_abs <= 1e-8 and worst_cont <= 1e-6 and elapsed < 1.0,
        f"max abs error {worst_abs:.1e}, continuity {worst_cont:.1e}, {elapsed:.3f}s",
    )


def test_criterion_3_equivariance():
    start = time.perf_counter()
    rng = np.random.default_rng(3)

    worst_scale = 0.0
    for _ in range(50):
        s = order_sample(rng.pareto(2.0, size=400) + 1.0)
        c = float(rng.uniform(1e-3, 1e3))
        k = int(rng.integers(20, 200))
        base, scaled = moment_estimates(s, k), moment_estimates(s.scaled(c), k)
        q = QuantileQuery(k=k, p=1e-3, n=s.n)
        worst_scale = max(
            worst_scale,
            rel(scaled.gamma_plus, base.gamma_plus),
            abs(scaled.gamma_minus - base.gamma_minus) / max(1.0, abs(base.gamma_minus)),
            abs(scaled.gamma_m - base.gamma_m) / max(1.0, abs(base.gamma_m)),
            rel(scaled.sigma_m, c * base.sigma_m),
            rel(extreme_quantile(s.scaled(c), q), c * extreme_quantile(s, q, base)),
        )

    mismatches, worst_norm = 0, 0.0
    for d in (2, 3):
        mu = rng.normal(size=d)
        sigma = det_normalize(random_spd(rng, d, eps=0.5))
        x = elliptical_sample(mu, sigma, model_frechet(5), 3000, rng)
        a, b = random_invertible(rng, d), rng.normal(size=d)
        k, p = math.floor(3000**0.7), 1 / 3000
        direct = estimate_region(x @ a.T + b, k, p)
        mapped = affine_transform_region(estimate_region(x, k, p), a, b)
        probes = direct.center + direct.radius * rng.normal(size=(1000, d))
        nd = mahalanobis_norm(probes, direct.center, direct.shape) / direct.radius
        nm = mahalanobis_norm(probes, mapped.center, mapped.shape) / mapped.radius
        worst_norm = max(worst_norm, float(np.max(np.abs(nd - nm))))
        clear = np.abs(nd - 1.0) > 1e-8
        mismatches += int(np.sum(region_contains(direct, probes)[clear] != region_contains(mapped, probes)[clear]))
    elapsed = time.perf_counter() - start
    record(
        3, "scale and affine equivariance",
        worst_scale <= 1e-12 and worst_norm <= 1e-8 and mismatches == 0 and elapsed < 10.0,
        f"scale rel error {worst_scale:.1e}, probe norm gap {worst_norm:.1e}, "
        f"{mismatches} membership mismatches, {elapsed:.2f}s",
    )


UNI_CONFIGS = [
    "uni_bounded_m025", "uni_exponential", "uni_frechet5", "uni_frechet2", "uni_pareto1",
]


@pytest.mark.slow
def test_criterion_4_univariate_consistency():
    start = time.perf_counter()
    parts, ok = [], True
    for name in UNI_CONFIGS:
        cfg = load_config(CONFIGS / f"{name}.json")
        _, report = run_experiment(cfg)
        entry = report["per_n"][0]
        med = entry["gamma_m"]["median"]
        gamma = cfg.tail_model().gamma
        good = entry["ok"] == cfg.replications and abs(med - gamma) <= 0.12
        ok &= good
        parts.append(f"gamma={gamma:g}: median {med:.3f}")
    elapsed = time.perf_counter() - start
    record(4, "univariate consistency", ok and elapsed < 120.0, "; ".join(parts) + f"; {elapsed:.1f}s")


@pytest.mark.slow
def test_criterion_5_error_propagation():
    start = time.perf_counter()
    cfg = load_config(CONFIGS / "error_propagation_frechet2.json")
    _, report = run_experiment(cfg)
    parts, ok = [], True
    for metric in ("gamma_disc", "order_stat_disc", "scale_disc", "quantile_disc"):
        first = report["per_n"][0][metric]["p95"]
        last = report["per_n"][-1][metric]["p95"]
        ok &= last <= 2.0 * first
        parts.append(f"{metric} p95 {first:.3g}->{last:.3g}")
    ok &= report["counts"]["failed"] == 0
    elapsed = time.perf_counter() - start
    record(5, "error propagation bounds", ok and elapsed < 180.0, "; ".join(parts) + f"; {elapsed:.1f}s")


@pytest.mark.slow
def test_criterion_6_ratio_bound():
    start = time.perf_counter()
    cfg = load_config(CONFIGS / "ratio_bound_pareto5_d2.json")
    _, report = run_experiment(cfg)
    p95 = [e["max_ratio_stat"]["p95"] for e in report["per_n"]]
    ok = p95[-1] <= 2.0 * p95[0] and report["counts"]["failed"] == 0
    elapsed = time.perf_counter() - start
    record(
        6, "ratio bound", ok and elapsed < 120.0,
        "p95 sqrt(n) max ratio error " + " -> ".join(f"{v:.3g}" for v in p95) + f"; {elapsed:.1f}s",
    )


@pytest.mark.slow
def test_criterion_7_region_consistency():
    start = time.perf_counter()
    cfg = load_config(CONFIGS / "elliptical_frechet5_d2.json")
    _, report = run_experiment(cfg)
    meds = [e["ratio"]["median"] for e in report["per_n"]]

    ell = EllipticalModel(np.zeros(2), np.eye(2), model_frechet(5))
    region = true_region(ell, 1e-3)
    same = sym_diff_probability(region, region, ell, 100_000, np.random.default_rng(0)).probability / 1e-3

    ok = meds[-1] <= 0.5 and meds[-1] <= meds[0] and same == 0.0 and report["counts"]["failed"] == 0
    elapsed = time.perf_counter() - start
    record(
        7, "extreme region consistency", ok and elapsed < 300.0,
        f"median ratio n=1000: {meds[0]:.3f}, n=4000: {meds[-1]:.3f}; identical regions {same}; {elapsed:.1f}s",
    )


def test_criterion_8_linear_algebra():
    start = time.perf_counter()
    rng = np.random.default_rng(8)
    worst_sqrt = worst_inv = worst_det = 0.0
    for d in range(1, 9):
        for _ in range(5):
            a = random_spd(rng, d)
            s = spd_sqrt(a).values
            worst_sqrt = max(worst_sqrt, np.abs(s @ s - a).max() / np.abs(a).max())
            worst_inv = max(worst_inv, np.abs(a @ spd_inverse(a).values - np.eye(d)).max())
            worst_det = max(worst_det, abs(determinant(det_normalize(a)) - 1.0))
    elapsed = time.perf_counter() - start
    record(
        8, "linear algebra",
        worst_sqrt <= 1e-9 and worst_inv <= 1e-10 and worst_det <= 1e-10 and elapsed < 1.0,
        f"sqrt {worst_sqrt:.1e}, inverse {worst_inv:.1e}, det {worst_det:.1e}, {elapsed:.3f}s",
    )


def test_criterion_9_determinism(tmp_path):
    start = time.perf_counter()
    config = CONFIGS / "error_propagation_frechet2.json"
    outputs = []
    for threads in (1, 4):
        out = tmp_path / f"t{threads}"
        res = subprocess.run(
            [sys.executable, "-m", "momentevt.simlab", "run", "--config", str(config),
             "--out", str(out), "--reps", "40", "--threads", str(threads)],
            capture_output=True, text=True, check=False,
        )
        assert res.returncode in (0, 1), res.stderr
        outputs.append((out / "records.csv").read_bytes())
    elapsed = time.perf_counter() - start
    same = outputs[0] == outputs[1]
    record(
        9, "determinism across worker counts", same and elapsed < 60.0,
        f"records.csv {'identical' if same else 'differs'} at 1 and 4 workers "
        f"({len(outputs[0])} bytes), {elapsed:.1f}s",
    )
