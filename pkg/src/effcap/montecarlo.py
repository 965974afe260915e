"""Sample-path oracles for the analytic results.

Paths are driven by counter-based uniforms (see :mod:`effcap.rng`): slot 0 of
a path draws the initial state, slot ``n`` draws the transition into state
``n``. Any path can therefore be regenerated alone, and batch results do not
depend on the number of worker threads.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numba
import numpy as np

from .errors import DegenerateEstimate, InsufficientTail, InvalidParameter, Unstable
from .markov import MarkovChannel
from .rng import path_key, uniform_at

STATIONARY = "stationary"
BOOTSTRAP_RESAMPLES = 200
CI_LEVEL = 0.99
MIN_EFFECTIVE_SAMPLES = 10
WARMUP_FRACTION = 0.1
TAIL_FIT_WINDOW = (1e-5, 1e-1)

# Prefer OpenMP: probing an outdated TBB prints a warning on every first launch.
numba.config.THREADING_LAYER_PRIORITY = ["omp", "tbb", "workqueue"]


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings.

    ``initial_state`` is either ``"stationary"`` or a fixed state index.
    """

    horizon_t: int = 200
    num_paths: int = 10_000
    seed: int = 0
    initial_state: Union[str, int] = STATIONARY

    def __post_init__(self):
        if int(self.horizon_t) < 1:
            raise InvalidParameter("horizon_t must be >= 1")
        if int(self.num_paths) < 1:
            raise InvalidParameter("num_paths must be >= 1")
        if not (0 <= int(self.seed) < 2 ** 64):
            raise InvalidParameter("seed must be an unsigned 64-bit integer")
        if self.initial_state != STATIONARY and int(self.initial_state) < 0:
            raise InvalidParameter(f"bad initial_state {self.initial_state!r}")


@dataclass(frozen=True)
class SamplePathEstimate:
    theta: float
    estimate: float
    ci_low: float
    ci_high: float
    effective_samples: float

    def covers(self, value: float) -> bool:
        return self.ci_low <= value <= self.ci_high


@dataclass(frozen=True)
class QueueTailEstimate:
    arrival_rate: float
    thresholds: Tuple[float, ...]
    log_tail_probs: Tuple[float, ...]
    fitted_exponent: Optional[float]
    fit_range: Optional[Tuple[float, float]]


@dataclass(frozen=True)
class EmpiricalMoments:
    mean: float
    variance: float
    autocovariance: np.ndarray  # lags 1..L


def _chain_arrays(ch: MarkovChannel, cfg: SimConfig):
    cum = np.cumsum(ch.transition, axis=1)
    init_cum = np.cumsum(ch.stationary)
    if cfg.initial_state == STATIONARY:
        fixed = -1
    else:
        fixed = int(cfg.initial_state)
        if fixed >= ch.n_states:
            raise InvalidParameter(f"initial state {fixed} out of range for {ch.n_states} states")
    return cum, init_cum, fixed, np.ascontiguousarray(ch.rates)


@numba.njit(cache=True)
def _draw(cum_row, u):
    j = 0
    last = cum_row.shape[0] - 1
    while j < last and u >= cum_row[j]:
        j += 1
    return j


@numba.njit(cache=True)
def _first_state(key, init_cum, fixed):
    if fixed >= 0:
        return fixed
    return _draw(init_cum, uniform_at(key, 0))


@numba.njit(cache=True)
def _path_rates(cum, init_cum, fixed, rates, seed, path, horizon):
    key = path_key(np.uint64(seed), np.uint64(path))
    out = np.empty(horizon + 1)
    s = _first_state(key, init_cum, fixed)
    out[0] = rates[s]
    for n in range(1, horizon + 1):
        s = _draw(cum[s], uniform_at(key, n))
        out[n] = rates[s]
    return out


@numba.njit(cache=True, parallel=True)
def _path_totals(cum, init_cum, fixed, rates, seed, num_paths, horizon):
    totals = np.empty(num_paths)
    for p in numba.prange(num_paths):
        key = path_key(np.uint64(seed), np.uint64(p))
        s = _first_state(key, init_cum, fixed)
        acc = rates[s]
        for n in range(1, horizon + 1):
            s = _draw(cum[s], uniform_at(key, n))
            acc += rates[s]
        totals[p] = acc
    return totals


@numba.njit(cache=True)
def _queue_hist(cum, init_cum, fixed, rates, seed, path, horizon, arrival, warmup, thresholds):
    # hist[j] counts post-warm-up slots whose queue exceeds exactly j thresholds
    key = path_key(np.uint64(seed), np.uint64(path))
    hist = np.zeros(thresholds.shape[0] + 1, dtype=np.int64)
    s = _first_state(key, init_cum, fixed)
    q = 0.0
    for n in range(horizon):
        if n >= warmup:
            hist[np.searchsorted(thresholds, q, side="left")] += 1
        q = max(q + arrival - rates[s], 0.0)
        s = _draw(cum[s], uniform_at(key, n + 1))
    return hist


@numba.njit(cache=True)
def _queue_trace(rates_seq, arrival):
    q = np.empty(rates_seq.shape[0] + 1)
    q[0] = 0.0
    for n in range(rates_seq.shape[0]):
        q[n + 1] = max(q[n] + arrival - rates_seq[n], 0.0)
    return q


def _with_workers(workers, fn, *args):
    if workers is None:
        return fn(*args)
    previous = numba.get_num_threads()
    numba.set_num_threads(max(1, min(int(workers), numba.config.NUMBA_NUM_THREADS)))
    try:
        return fn(*args)
    finally:
        numba.set_num_threads(previous)


def generate_path(ch: MarkovChannel, cfg: SimConfig, path_index: int = 0) -> np.ndarray:
    """Per-slot service rates ``c(0), ..., c(horizon_t)`` of one sample path."""
    if not 0 <= path_index < cfg.num_paths:
        raise InvalidParameter(f"path_index {path_index} outside [0, {cfg.num_paths})")
    cum, init_cum, fixed, rates = _chain_arrays(ch, cfg)
    return _path_rates(cum, init_cum, fixed, rates, np.uint64(cfg.seed), path_index, int(cfg.horizon_t))


def path_totals(ch: MarkovChannel, cfg: SimConfig, workers: Optional[int] = None) -> np.ndarray:
    """Cumulative service ``C(t)`` of every path, in path order."""
    cum, init_cum, fixed, rates = _chain_arrays(ch, cfg)
    return _with_workers(workers, _path_totals, cum, init_cum, fixed, rates,
                         np.uint64(cfg.seed), int(cfg.num_paths), int(cfg.horizon_t))


def _log_mean_weights(w: np.ndarray) -> float:
    return math.log(w.sum() / w.shape[0])


def estimate_ge_limit(ch: MarkovChannel, theta: float, cfg: SimConfig,
                      workers: Optional[int] = None,
                      resamples: int = BOOTSTRAP_RESAMPLES) -> SamplePathEstimate:
    """Empirical ``log E[exp(theta C(t))]`` per slot, with a 99% bootstrap CI.

    The log-mean is normalised by the number of slots in ``C(t)``
    (``horizon_t + 1``), which makes a constant channel exact.

    Raises
    ------
    DegenerateEstimate
        If the effective sample size of the exponential weights is below 10.
    """
    theta = float(theta)
    n = int(cfg.num_paths)
    if theta == 0.0:
        return SamplePathEstimate(0.0, 0.0, 0.0, 0.0, float(n))
    slots = cfg.horizon_t + 1
    x = theta * path_totals(ch, cfg, workers)
    top = float(x.max())
    w = np.exp(x - top)
    total = w.sum()
    ess = float(total * total / np.dot(w, w))
    if ess < MIN_EFFECTIVE_SAMPLES:
        raise DegenerateEstimate(
            f"effective sample size {ess:.3g} of {n} paths at theta={theta}, t={cfg.horizon_t}", ess)
    if ess < 0.01 * n:
        warnings.warn(f"MGF estimate at theta={theta} rests on {ess:.3g} effective samples",
                      RuntimeWarning, stacklevel=2)
    estimate = (top + _log_mean_weights(w)) / slots

    rng = np.random.default_rng([int(cfg.seed), 0xB007])
    boot = np.empty(resamples)
    for b in range(resamples):
        boot[b] = (top + _log_mean_weights(w[rng.integers(0, n, n)])) / slots
    tail = (1.0 - CI_LEVEL) / 2.0
    lo, hi = np.quantile(boot, [tail, 1.0 - tail])
    return SamplePathEstimate(theta, float(estimate), float(min(lo, estimate)),
                              float(max(hi, estimate)), ess)


def _check_thresholds(thresholds) -> np.ndarray:
    x = np.asarray(thresholds, dtype=float).reshape(-1)
    if x.size == 0:
        raise InvalidParameter("thresholds must be non-empty")
    if np.any(np.diff(x) <= 0):
        raise InvalidParameter("thresholds must be strictly ascending")
    return x


def queue_path(ch: MarkovChannel, arrival_rate: float, cfg: SimConfig, path_index: int = 0) -> np.ndarray:
    """Queue lengths ``q(0)=0, ..., q(horizon_t+1)`` under the Lindley recursion."""
    return _queue_trace(generate_path(ch, cfg, path_index), float(arrival_rate))


def tail_exponent(thresholds: np.ndarray, probs: np.ndarray, window=TAIL_FIT_WINDOW):
    """Least-squares decay rate of ``log P(Q > x)`` over thresholds whose probability lies in ``window``."""
    lo, hi = window
    mask = (probs >= lo) & (probs <= hi)
    if mask.sum() < 3:
        raise InsufficientTail(
            f"only {int(mask.sum())} thresholds have tail probability in [{lo:g}, {hi:g}]")
    xs = thresholds[mask]
    slope = np.polyfit(xs, np.log(probs[mask]), 1)[0]
    return float(-slope), (float(xs[0]), float(xs[-1]))


def simulate_queue(ch: MarkovChannel, arrival_rate: float, cfg: SimConfig,
                   thresholds: Sequence[float], path_index: int = 0) -> QueueTailEstimate:
    """Fluid queue fed at a constant rate and drained by one channel path.

    Runs ``cfg.horizon_t`` slots, drops the first 10% as warm-up and estimates
    ``P(Q > x)`` as the fraction of remaining slots with queue above ``x``.
    """
    arrival_rate = float(arrival_rate)
    if not (math.isfinite(arrival_rate) and arrival_rate >= 0):
        raise InvalidParameter(f"arrival rate must be finite and non-negative, got {arrival_rate}")
    if arrival_rate >= ch.mean_rate:
        raise Unstable(f"arrival rate {arrival_rate} >= mean service rate {ch.mean_rate}")
    x = _check_thresholds(thresholds)
    cum, init_cum, fixed, rates = _chain_arrays(ch, cfg)
    horizon = int(cfg.horizon_t)
    warmup = int(horizon * WARMUP_FRACTION)
    hist = _queue_hist(cum, init_cum, fixed, rates, np.uint64(cfg.seed), path_index,
                       horizon, arrival_rate, warmup, x)
    # q > x[i] exactly when more than i thresholds lie below q
    above = np.cumsum(hist[::-1])[::-1][1:]
    probs = above / float(horizon - warmup)
    with np.errstate(divide="ignore"):
        log_probs = np.log(probs)
    if arrival_rate == 0.0:
        return QueueTailEstimate(arrival_rate, tuple(x.tolist()), tuple(log_probs.tolist()), None, None)
    exponent, fit_range = tail_exponent(x, probs)
    return QueueTailEstimate(arrival_rate, tuple(x.tolist()), tuple(log_probs.tolist()),
                             exponent, fit_range)


def empirical_moments(path, max_lag: int = 1) -> EmpiricalMoments:
    """Sample mean, variance and biased autocovariances at lags ``1..max_lag``."""
    c = np.asarray(path, dtype=float)
    if c.size < 10_000:
        raise InvalidParameter(f"need at least 10^4 slots, got {c.size}")
    n = c.size
    mean = float(c.mean())
    d = c - mean
    var = float(np.dot(d, d) / n)
    acov = np.array([np.dot(d[:-m], d[m:]) / n for m in range(1, max_lag + 1)])
    return EmpiricalMoments(mean, var, acov)
