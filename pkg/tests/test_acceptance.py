"""Exit criteria. Each test records one PASS/FAIL line shown in the pytest
terminal summary (and on stdout with ``-s``)."""
import math
import subprocess
import sys
import time

import numpy as np
import pytest
from scipy import integrate

from effcap import (DegenerateEstimate, IidSource, OnOffChannel, SimConfig, approx_effective_capacity,
                    approx_ge_limit, block_variance, estimate_ge_limit, exact_effective_capacity,
                    exact_ge_limit, gaussian_iid_ge_limit, ge_limit_iid, ge_limit_mmp, simulate_queue)
from effcap.report import queue_thresholds

REF = OnOffChannel(0.2, 0.6, 10.0)
K = 10_000


def test_1_closed_form_matches_eigenvalue(acceptance_record):
    rng = np.random.default_rng(20240601)
    start = time.perf_counter()
    worst, n = 0.0, 0
    while n < 1000:
        lam, mu = rng.uniform(0, 1, 2)
        if abs(lam + mu - 1) > 0.9:
            continue
        ch = OnOffChannel(lam, mu, rng.uniform(0, 20))
        theta = rng.uniform(-5, 5)
        worst = max(worst, abs(exact_ge_limit(ch, theta) - ge_limit_mmp(ch.to_markov(), theta)))
        n += 1
    elapsed = time.perf_counter() - start
    ok = worst < 1e-10 and elapsed < 5
    acceptance_record(1, "closed form vs log spectral radius", ok,
                      f"max |diff|={worst:.3e} (<1e-10) over {n} draws in {elapsed:.2f}s (<5s)")
    assert ok


def test_2_theta_agreement_region(acceptance_record):
    start = time.perf_counter()
    thetas = np.linspace(0.05, 0.4, 351)
    gap = max(abs(exact_effective_capacity(REF, t) - approx_effective_capacity(REF, K, t)) for t in thetas)
    approx12 = approx_effective_capacity(REF, K, 1.2)
    exact12 = exact_effective_capacity(REF, 1.2)
    elapsed = time.perf_counter() - start
    mean = REF.moments().mean
    ok = (gap < 0.35 and gap < 0.05 * mean and approx12 < 0 < exact12
          and round(approx12, 2) == -2.22 and round(exact12, 2) == 1.34 and elapsed < 1)
    acceptance_record(2, "agreement for theta in [0.05, 0.4], sign flip at 1.2", ok,
                      f"max gap={gap:.4f} (<0.35), approx(1.2)={approx12:.4f}, exact(1.2)={exact12:.4f}, "
                      f"{elapsed:.3f}s")
    assert ok


def test_3_rate_agreement_region(acceptance_record):
    start = time.perf_counter()
    worst = 0.0
    for r in np.linspace(0.01, 3.0, 300):
        ch = OnOffChannel(0.2, 0.6, r)
        exact = exact_effective_capacity(ch, 0.6)
        worst = max(worst, abs(exact - approx_effective_capacity(ch, K, 0.6)) / exact)
    flipped = all(approx_effective_capacity(OnOffChannel(0.2, 0.6, r), K, 0.6) < 0
                  < exact_effective_capacity(OnOffChannel(0.2, 0.6, r), 0.6)
                  for r in np.linspace(20, 200, 181))
    elapsed = time.perf_counter() - start
    ok = worst < 0.05 and flipped and elapsed < 1
    acceptance_record(3, "rate sweep at theta=0.6", ok,
                      f"max rel gap for r<=3: {worst:.4f} (<0.05); approx<0<exact for r in [20,200]: "
                      f"{flipped}; {elapsed:.3f}s")
    assert ok


def _gaussian_log_mgf_quadrature(mean, var, theta):
    sd = math.sqrt(var)
    f = lambda x: math.exp(theta * x - (x - mean) ** 2 / (2 * var)) / (sd * math.sqrt(2 * math.pi))
    centre = mean + theta * var
    value = integrate.quad(f, centre - 40 * sd, centre + 40 * sd, epsabs=0, epsrel=1e-13, limit=200)[0]
    return math.log(value)


def test_4_gaussian_iid_equivalence(acceptance_record):
    # phi = 0 makes the ON-OFF slots iid, so the approximation is a per-slot Gaussian log-MGF
    ch = OnOffChannel(0.3, 0.7, 5.0)
    mom = ch.moments()
    thetas = np.linspace(-2, 2, 41)
    identity = max(abs(approx_ge_limit(ch, 1, t) - gaussian_iid_ge_limit(mom.mean, mom.variance, t))
                   for t in thetas)
    quad = max(abs(_gaussian_log_mgf_quadrature(mom.mean, mom.variance, t)
                   - gaussian_iid_ge_limit(mom.mean, mom.variance, t)) for t in thetas)
    p_on = REF.pi_on
    src = IidSource.from_pairs([(0.0, 1 - p_on), (10.0, p_on)])
    gap = abs(ge_limit_iid(src, -1.0) - gaussian_iid_ge_limit(src.mean, src.variance, -1.0))
    ok = identity < 1e-12 and quad < 1e-9 and gap > 0.05
    acceptance_record(4, "Gaussian iid equivalence, two-point gap", ok,
                      f"identity diff={identity:.2e} (<1e-12), quadrature diff={quad:.2e}, "
                      f"two-point gap at theta=-1: {gap:.4f} (>0.05)")
    assert ok


def test_5_monte_carlo_coverage(acceptance_record):
    ch = REF.to_markov()
    start = time.perf_counter()
    summary = []
    ok = True
    for theta in (-0.6, -0.2, 0.2):
        exact = exact_ge_limit(REF, theta)
        covered, degenerate, ess = 0, 0, []
        for seed in range(20):
            cfg = SimConfig(horizon_t=200, num_paths=100_000, seed=seed)
            try:
                est = estimate_ge_limit(ch, theta, cfg, resamples=200)
            except DegenerateEstimate as exc:
                degenerate += 1
                ess.append(exc.effective_samples)
                continue
            ess.append(est.effective_samples)
            covered += est.covers(exact)
        ok &= covered >= 17
        summary.append(f"theta={theta}: {covered}/20 covered, {degenerate} degenerate, "
                       f"median ESS {np.median(ess):.2f}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 120
    acceptance_record(5, "MC GE-limit 99% CI coverage (t=200, 1e5 paths)", ok,
                      "; ".join(summary) + f"; {elapsed:.1f}s")
    assert ok


def test_6_queue_tail_duality(acceptance_record):
    theta = 0.3
    arrival = exact_effective_capacity(REF, theta)
    start = time.perf_counter()
    est = simulate_queue(REF.to_markov(), arrival, SimConfig(horizon_t=10 ** 7, num_paths=1, seed=1),
                         queue_thresholds(theta))
    elapsed = time.perf_counter() - start
    rel = abs(est.fitted_exponent - theta) / theta
    ok = rel <= 0.15 and elapsed < 60
    acceptance_record(6, "queue tail exponent at arrival E_C(0.3)", ok,
                      f"fitted={est.fitted_exponent:.4f}, rel err={rel:.3f} (<=0.15), "
                      f"fit range {est.fit_range}, {elapsed:.2f}s")
    assert ok


def _literal_double_sum(lam, mu, r, k):
    # product-moment autocovariance, written out independently of the package
    pi = (1 - lam) / (2 - lam - mu)
    phi = lam + mu - 1
    s2 = r * r * (1 - lam) * (1 - mu) / (2 - lam - mu) ** 2
    lags = np.arange(k)
    kc = r * r * pi * (1 - lam + (1 - mu) * phi ** lags) / (2 - lam - mu) - (r * pi) ** 2
    p, q = np.triu_indices(k, 1)
    return k * s2 + 2 * kc[q - p].sum()


def test_7_double_sum(acceptance_record):
    rng = np.random.default_rng(7)
    start = time.perf_counter()
    worst = 0.0
    made = 0
    while made < 100:
        lam, mu = rng.uniform(0, 1, 2)
        if abs(lam + mu - 1) >= 0.99:
            continue
        ch = OnOffChannel(lam, mu, rng.uniform(0.1, 20))
        made += 1
        for k in range(1, 201):
            ref = _literal_double_sum(ch.lam, ch.mu, ch.rate, k)
            worst = max(worst, abs(block_variance(ch, k) - ref) / abs(ref))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-9 and elapsed < 5
    acceptance_record(7, "collapsed block variance vs literal double sum", ok,
                      f"max rel diff={worst:.2e} (<1e-9), {elapsed:.2f}s (<5s)")
    assert ok


def test_8_validate_determinism(acceptance_record, tmp_path):
    outputs = []
    for workers in ("1", "4"):
        proc = subprocess.run([sys.executable, "-m", "effcap.cli", "validate", "--seed", "12345",
                               "--paths", "10000", "--horizon", "200", "--workers", workers],
                              capture_output=True, check=False)
        outputs.append(proc.stdout)
    ok = outputs[0] == outputs[1] and outputs[0].startswith(b"CHECK ")
    acceptance_record(8, "validate output byte-identical across worker counts", ok,
                      f"{len(outputs[0])} bytes, identical={outputs[0] == outputs[1]}")
    assert ok
