"""Sweeps comparing exact and CLT-approximate effective capacity, CSV output,
flat config files and the bundled Monte Carlo validation."""
from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass, field, replace
from typing import Iterable, List, Mapping, Optional, TextIO, Union

import numpy as np

from .errors import DegenerateEstimate, EffcapError, InvalidParameter
from .markov import ge_limit_mmp
from .montecarlo import SimConfig, estimate_ge_limit, simulate_queue
from .onoff import (BlockSpec, OnOffChannel, approx_effective_capacity,
                    block_variance_rate, exact_effective_capacity, exact_ge_limit)

THETA = "theta"
RATE = "rate"
CSV_HEADER = "x,exact_ec,approx_ec,abs_gap,approx_negative"

CONFIG_KEYS = {"lambda", "mu", "rate", "theta_start", "theta_stop", "points", "k",
               "fixed_theta", "rate_start", "rate_stop"}


@dataclass(frozen=True)
class SweepSpec:
    variable: str = THETA
    start: float = 0.05
    stop: float = 1.2
    points: int = 24
    fixed_theta: float = 0.6
    fixed_rate: float = 10.0
    lam: float = 0.2
    mu: float = 0.6
    k: Union[int, float] = 10_000

    def __post_init__(self):
        if self.variable not in (THETA, RATE):
            raise InvalidParameter(f"sweep variable must be 'theta' or 'rate', got {self.variable!r}")
        if int(self.points) != self.points or self.points < 1:
            raise InvalidParameter(f"points must be a positive integer, got {self.points}")
        if self.points == 1:
            if self.start != self.stop:
                raise InvalidParameter("a one-point sweep needs start == stop")
        elif not self.start < self.stop:
            raise InvalidParameter(f"start ({self.start}) must be below stop ({self.stop})")
        if self.variable == RATE and not self.fixed_theta > 0:
            raise InvalidParameter("fixed_theta must be positive for a rate sweep")
        if self.variable == THETA and not self.start > 0:
            raise InvalidParameter("theta sweep must start above 0")
        if self.variable == RATE and self.start < 0:
            raise InvalidParameter("rate sweep must start at or above 0")
        # validate channel and block eagerly
        self.channel(self.fixed_rate)
        self.block

    @classmethod
    def figure1(cls, **overrides) -> "SweepSpec":
        """Effective capacity against theta at r=10."""
        return cls(**{**dict(variable=THETA, start=0.05, stop=1.2, points=24), **overrides})

    @classmethod
    def figure2(cls, **overrides) -> "SweepSpec":
        """Effective capacity against r at theta=0.6."""
        return cls(**{**dict(variable=RATE, start=0.0, stop=40.0, points=41), **overrides})

    @property
    def block(self) -> BlockSpec:
        return BlockSpec(self.k)

    def channel(self, rate: Optional[float] = None) -> OnOffChannel:
        return OnOffChannel(self.lam, self.mu, self.fixed_rate if rate is None else rate)

    def grid(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, int(self.points))


@dataclass(frozen=True)
class ComparisonRow:
    x: float
    exact_ec: float
    approx_ec: float
    abs_gap: float = field(init=False)
    approx_negative: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "abs_gap", abs(self.exact_ec - self.approx_ec))
        object.__setattr__(self, "approx_negative", self.approx_ec < 0)


def run_theta_sweep(spec: SweepSpec) -> List[ComparisonRow]:
    if spec.variable != THETA:
        raise InvalidParameter("run_theta_sweep needs a theta sweep")
    ch, block = spec.channel(), spec.block
    return [ComparisonRow(float(th), exact_effective_capacity(ch, th),
                          approx_effective_capacity(ch, block, th))
            for th in spec.grid()]


def run_rate_sweep(spec: SweepSpec) -> List[ComparisonRow]:
    if spec.variable != RATE:
        raise InvalidParameter("run_rate_sweep needs a rate sweep")
    rows = []
    for r in spec.grid():
        ch = spec.channel(float(r))
        rows.append(ComparisonRow(float(r), exact_effective_capacity(ch, spec.fixed_theta),
                                  approx_effective_capacity(ch, spec.block, spec.fixed_theta)))
    return rows


def run_sweep(spec: SweepSpec) -> List[ComparisonRow]:
    return run_theta_sweep(spec) if spec.variable == THETA else run_rate_sweep(spec)


# -- CSV ------------------------------------------------------------------

def format_number(v: float) -> str:
    """12 significant digits in scientific notation; ``-0`` is printed as ``0``."""
    return f"{float(v) + 0.0:.11e}"


def csv_text(rows: Iterable[ComparisonRow]) -> str:
    lines = [CSV_HEADER]
    for row in rows:
        lines.append(",".join([format_number(row.x), format_number(row.exact_ec),
                               format_number(row.approx_ec), format_number(row.abs_gap),
                               "true" if row.approx_negative else "false"]))
    return "\n".join(lines) + "\n"


def emit_csv(rows: List[ComparisonRow], destination: Union[str, os.PathLike, TextIO]) -> None:
    """Write rows to a path or an open text stream. Paths are overwritten."""
    if not rows:
        raise InvalidParameter("no rows to write")
    text = csv_text(rows)
    if hasattr(destination, "write"):
        destination.write(text)
        return
    try:
        with open(destination, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write CSV to {os.fspath(destination)}: {exc}") from exc


def parse_csv(text: str) -> List[ComparisonRow]:
    lines = text.splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise InvalidParameter("missing or unexpected CSV header")
    rows = []
    for line in lines[1:]:
        x, exact, approx, _gap, _neg = line.split(",")
        rows.append(ComparisonRow(float(x), float(exact), float(approx)))
    return rows


# -- config ---------------------------------------------------------------

def parse_config(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else ":" if ":" in line else None
        if sep is None:
            raise InvalidParameter(f"config line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split(sep, 1))
        if key not in CONFIG_KEYS:
            raise InvalidParameter(f"config line {lineno}: unknown key {key!r}")
        values[key] = _config_value(key, value, lineno)
    return values


def _config_value(key, value, lineno):
    try:
        if key == "points":
            return int(value)
        if key == "k":
            return math.inf if value.lower() in ("inf", "infinite") else int(value)
        return float(value)
    except ValueError:
        raise InvalidParameter(f"config line {lineno}: bad value {value!r} for {key}") from None


def load_config(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def spec_from_config(values: Mapping, variable: str) -> SweepSpec:
    """Build a sweep from config keys; missing keys keep the figure defaults."""
    base = SweepSpec.figure1() if variable == THETA else SweepSpec.figure2()
    kw = {}
    simple = {"lambda": "lam", "mu": "mu", "points": "points", "k": "k",
              "fixed_theta": "fixed_theta", "rate": "fixed_rate"}
    for key, attr in simple.items():
        if values.get(key) is not None:
            kw[attr] = values[key]
    start_key, stop_key = ("theta_start", "theta_stop") if variable == THETA else ("rate_start", "rate_stop")
    if values.get(start_key) is not None:
        kw["start"] = values[start_key]
    if values.get(stop_key) is not None:
        kw["stop"] = values[stop_key]
    return replace(base, **kw)


# -- validation -----------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: float
    bound: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"CHECK {self.name} {status} measured={format_number(self.measured)} bound={format_number(self.bound)}"


@dataclass
class ValidationReport:
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def text(self) -> str:
        return "".join(c.line() + "\n" for c in self.checks)


EIGEN_TOL = 1e-10
TAIL_REL_TOL = 0.15
QUEUE_THETA = 0.3
MC_THETA_FACTORS = (-1.0, -0.5, -0.25, 0.5, 1.0)


def mc_theta_scale(ch: OnOffChannel, horizon: int) -> float:
    """Largest |theta| at which the MGF estimator keeps a usable sample size.

    The relative variance of ``exp(theta C(t))`` grows like
    ``exp(theta^2 t var_rate)``; the scale keeps that exponent near 1.
    """
    v = block_variance_rate(ch, BlockSpec.infinite_block())
    if v == 0:
        return 1.0
    return min(1.0, 1.0 / math.sqrt((horizon + 1) * v))


def queue_thresholds(theta: float, points: int = 101) -> np.ndarray:
    return np.linspace(0.0, 25.0 / theta, points)


def run_validation(spec: SweepSpec, cfg: SimConfig, workers: Optional[int] = None,
                   queue_slots: int = 10_000_000, queue_theta: float = QUEUE_THETA) -> ValidationReport:
    """Cross-check the closed forms against the eigenvalue route and Monte Carlo."""
    ch = spec.channel()
    mch = ch.to_markov()
    report = ValidationReport()

    thetas = np.linspace(-5.0, 5.0, 201)
    gap = max(abs(exact_ge_limit(ch, t) - ge_limit_mmp(mch, t)) for t in thetas)
    report.checks.append(CheckResult("eigen_closed_form", gap < EIGEN_TOL, gap, EIGEN_TOL))

    scale = mc_theta_scale(ch, cfg.horizon_t)
    for factor in MC_THETA_FACTORS:
        theta = factor * scale
        name = f"mc_ge_limit[theta={theta:.4e}]"
        exact = exact_ge_limit(ch, theta)
        try:
            est = estimate_ge_limit(mch, theta, cfg, workers)
        except DegenerateEstimate:
            report.checks.append(CheckResult(name, False, math.nan, math.nan))
            continue
        dev = abs(est.estimate - exact)
        half = est.ci_high - est.estimate if exact >= est.estimate else est.estimate - est.ci_low
        report.checks.append(CheckResult(name, est.covers(exact), dev, half))

    theta = scale
    try:
        short = estimate_ge_limit(mch, theta, cfg, workers)
        long = estimate_ge_limit(mch, theta, replace(cfg, horizon_t=2 * cfg.horizon_t), workers)
        drift = abs(long.estimate - short.estimate)
        width = short.ci_high - short.ci_low
        report.checks.append(CheckResult("mc_horizon_bias", drift <= width, drift, width))
    except DegenerateEstimate:
        report.checks.append(CheckResult("mc_horizon_bias", False, math.nan, math.nan))

    name = f"queue_tail[theta={queue_theta:.4e}]"
    if ch.moments().variance == 0 or mch.n_states == 1:
        # constant service at rate E_C: the queue never builds, any exponent holds
        report.checks.append(CheckResult(name, True, 0.0, TAIL_REL_TOL))
    else:
        arrival = exact_effective_capacity(ch, queue_theta)
        qcfg = SimConfig(horizon_t=queue_slots, num_paths=1, seed=cfg.seed)
        try:
            tail = simulate_queue(mch, arrival, qcfg, queue_thresholds(queue_theta))
            rel = abs(tail.fitted_exponent - queue_theta) / queue_theta
            report.checks.append(CheckResult(name, rel <= TAIL_REL_TOL, rel, TAIL_REL_TOL))
        except EffcapError:
            report.checks.append(CheckResult(name, False, math.nan, TAIL_REL_TOL))
    return report
