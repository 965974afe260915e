"""Exact effective capacity of finite-state Markov-modulated service processes.

The per-slot service rate is ``rates[s]`` where ``s`` is the current state of a
Markov chain with transition matrix ``transition``. The Gartner-Ellis limit of
the cumulative service is ``log rho(Q exp(theta R))`` and the effective
capacity follows as ``-alpha(-theta) / theta``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import InvalidMatrix, InvalidParameter, NonConvergent

ROW_SUM_TOL = 1e-12
MAX_ITER = 10_000
DEFAULT_TOL = 1e-12


def _reachable(pattern: np.ndarray, power: int) -> np.ndarray:
    """Boolean pattern of ``pattern ** power`` via repeated squaring."""
    n = pattern.shape[0]
    result = np.eye(n, dtype=bool)
    base = pattern.astype(bool)
    while power:
        if power & 1:
            result = (result.astype(np.int64) @ base.astype(np.int64)) > 0
        base = (base.astype(np.int64) @ base.astype(np.int64)) > 0
        power >>= 1
    return result


def is_irreducible(m: np.ndarray) -> bool:
    n = m.shape[0]
    return bool(_reachable(np.eye(n, dtype=bool) | (m > 0), n).all())


def is_primitive(m: np.ndarray) -> bool:
    # Wielandt: an irreducible aperiodic matrix has M^((n-1)^2 + 1) > 0.
    n = m.shape[0]
    return bool(_reachable(m > 0, (n - 1) ** 2 + 1).all())


@dataclass(frozen=True, eq=False)
class MarkovChannel:
    """N-state Markov-modulated service channel.

    Parameters
    ----------
    transition : array_like, shape (N, N)
        Row-stochastic transition matrix. Must be irreducible and aperiodic.
    rates : array_like, shape (N,)
        Service rate in each state (bits/slot), finite and non-negative.
    """

    transition: np.ndarray
    rates: np.ndarray
    _stationary: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        q = np.array(self.transition, dtype=float)
        r = np.array(self.rates, dtype=float).reshape(-1)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise InvalidMatrix(f"transition must be square, got shape {q.shape}")
        if q.shape[0] != r.shape[0]:
            raise InvalidParameter(
                f"{q.shape[0]} states but {r.shape[0]} rates")
        if not np.all(np.isfinite(q)) or np.any(q < 0) or np.any(q > 1):
            raise InvalidMatrix("transition entries must lie in [0, 1]")
        sums = q.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > ROW_SUM_TOL):
            raise InvalidMatrix(f"transition rows must sum to 1, got {sums.tolist()}")
        if not np.all(np.isfinite(r)) or np.any(r < 0):
            raise InvalidParameter("rates must be finite and non-negative")
        if not is_irreducible(q):
            raise InvalidMatrix("transition matrix is reducible")
        if not is_primitive(q):
            raise InvalidMatrix("transition matrix is periodic")
        q.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "transition", q)
        object.__setattr__(self, "rates", r)
        object.__setattr__(self, "_stationary", _solve_stationary(q))

    @classmethod
    def deterministic(cls, rate: float) -> "MarkovChannel":
        return cls([[1.0]], [rate])

    @property
    def n_states(self) -> int:
        return self.rates.shape[0]

    @property
    def stationary(self) -> np.ndarray:
        return self._stationary.copy()

    @property
    def mean_rate(self) -> float:
        return float(self._stationary @ self.rates)


def _solve_stationary(q: np.ndarray) -> np.ndarray:
    n = q.shape[0]
    a = np.vstack([(q - np.eye(n)).T, np.ones(n)])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    pi = np.linalg.lstsq(a, b, rcond=None)[0]
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    pi.setflags(write=False)
    return pi


@dataclass(frozen=True)
class QosExponent:
    """Strictly positive QoS exponent theta (1/bits)."""

    theta: float

    def __post_init__(self):
        if not (math.isfinite(self.theta) and self.theta > 0):
            raise InvalidParameter(f"QoS exponent must be positive and finite, got {self.theta}")

    def __float__(self):
        return float(self.theta)


ThetaLike = Union[QosExponent, float]


def as_theta(theta: ThetaLike) -> float:
    """Validate and unwrap a QoS exponent given as a float or ``QosExponent``."""
    if isinstance(theta, QosExponent):
        return theta.theta
    return QosExponent(float(theta)).theta


@dataclass(frozen=True)
class IidSource:
    """Discrete distribution of an iid per-slot service rate."""

    rates: tuple
    probs: tuple

    def __post_init__(self):
        r = np.asarray(self.rates, dtype=float).reshape(-1)
        p = np.asarray(self.probs, dtype=float).reshape(-1)
        if r.shape != p.shape or r.size == 0:
            raise InvalidParameter("rates and probs must be non-empty and equally long")
        if not np.all(np.isfinite(r)) or np.any(r < 0):
            raise InvalidParameter("rates must be finite and non-negative")
        if np.any(p < 0) or abs(p.sum() - 1.0) > ROW_SUM_TOL:
            raise InvalidParameter("probs must be non-negative and sum to 1")
        object.__setattr__(self, "rates", tuple(r.tolist()))
        object.__setattr__(self, "probs", tuple(p.tolist()))

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple]) -> "IidSource":
        rates, probs = zip(*pairs)
        return cls(rates, probs)

    @property
    def mean(self) -> float:
        return float(np.dot(self.rates, self.probs))

    @property
    def variance(self) -> float:
        r = np.asarray(self.rates)
        return float(np.dot((r - self.mean) ** 2, self.probs))


def _closed_form_2x2(m: np.ndarray) -> float:
    a, b = m[0]
    c, d = m[1]
    # (a - d)^2 + 4bc == tr^2 - 4 det, without the cancellation
    disc = (a - d) ** 2 + 4.0 * b * c
    return 0.5 * (a + d + math.sqrt(max(disc, 0.0)))


def _power_iteration(m: np.ndarray, tol: float, max_iter: int = MAX_ITER) -> float:
    n = m.shape[0]
    x = np.full(n, 1.0 / math.sqrt(n))
    prev = None
    for _ in range(max_iter):
        y = m @ x
        est = float(x @ y)  # Rayleigh quotient, x has unit norm
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0
        x = y / norm
        if prev is not None and abs(est - prev) <= tol * abs(est):
            return est
        prev = est
    raise NonConvergent(f"power iteration did not converge in {max_iter} iterations")


def _perron_root(m: np.ndarray, tol: float) -> float:
    if m.shape[0] == 1:
        return float(m[0, 0])
    if m.shape[0] == 2:
        return _closed_form_2x2(m)
    return _power_iteration(m, tol)


def spectral_radius(m, tol: float = DEFAULT_TOL) -> float:
    """Perron eigenvalue of a non-negative irreducible square matrix.

    2x2 matrices use the closed-form eigenvalue and ignore ``tol``; larger
    matrices use power iteration with a Rayleigh-quotient stopping rule.

    The closed form is exact for any non-negative 2x2 matrix, so the
    irreducibility requirement is only enforced for N > 2.

    Raises
    ------
    InvalidMatrix
        If ``m`` is not square, has a negative entry, or is reducible (N > 2).
    NonConvergent
        If power iteration exceeds 10,000 iterations.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidMatrix(f"matrix must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)) or np.any(m < 0):
        raise InvalidMatrix("matrix entries must be finite and non-negative")
    if not tol > 0:
        raise InvalidParameter("tol must be positive")
    if m.shape[0] > 2 and not is_irreducible(m):
        raise InvalidMatrix("matrix is reducible")
    return _perron_root(m, tol)


def ge_limit_mmp(ch: MarkovChannel, theta: float, tol: float = DEFAULT_TOL) -> float:
    """Gartner-Ellis limit ``log rho(Q exp(theta R))`` of a Markov channel.

    The largest exponent ``max_i theta r_i`` is factored out before the
    eigenvalue computation and added back in log space, so the matrix entries
    never exceed 1 and no intermediate overflow occurs.
    """
    theta = float(theta)
    if not math.isfinite(theta):
        raise InvalidParameter("theta must be finite")
    if theta == 0.0:
        return 0.0
    exponents = theta * ch.rates
    shift = float(exponents.max())
    scaled = ch.transition * np.exp(exponents - shift)[np.newaxis, :]
    rho = _perron_root(scaled, tol)
    result = shift + math.log(rho)
    if not math.isfinite(result):
        raise OverflowError(f"GE limit is not finite at theta={theta}")
    return result


def ge_limit_iid(src: IidSource, theta: float) -> float:
    """Per-slot log-MGF ``log sum_i p_i exp(theta r_i)`` of an iid source."""
    theta = float(theta)
    p = np.asarray(src.probs)
    x = theta * np.asarray(src.rates)
    keep = p > 0
    x, p = x[keep], p[keep]
    top = x.max()
    return float(top + math.log(np.dot(p, np.exp(x - top))))


def effective_capacity(alpha_at_minus_theta: float, theta: ThetaLike) -> float:
    """``-alpha(-theta) / theta`` for a GE limit value already evaluated at ``-theta``."""
    return -float(alpha_at_minus_theta) / as_theta(theta)


def gaussian_iid_ge_limit(mean: float, variance: float, theta: float) -> float:
    """Log-MGF of a Gaussian per-slot rate: ``theta*mean + theta**2*variance/2``."""
    if variance < 0:
        raise InvalidParameter("variance must be non-negative")
    return theta * mean + theta * theta * variance / 2.0


def channel_effective_capacity(ch: MarkovChannel, theta: ThetaLike) -> float:
    th = as_theta(theta)
    return effective_capacity(ge_limit_mmp(ch, -th), th)
