"""Closed forms for the two-state ON-OFF (Gilbert-Elliott) channel.

State OFF serves nothing, state ON serves ``rate`` bits/slot. ``lam`` is the
probability of staying OFF and ``mu`` the probability of staying ON.

Besides the exact GE limit, this module evaluates the CLT-based approximation
``theta * (m_c + theta/2 * var(C(k))/k)``. It is reproduced as-is, including
the negative effective capacities it yields at large ``theta`` or ``rate``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter
from .markov import MarkovChannel, ThetaLike, as_theta, gaussian_iid_ge_limit

DEFAULT_BLOCK = 10_000
_LOG_SPACE_THRESHOLD = 700.0


@dataclass(frozen=True)
class OnOffChannel:
    lam: float
    mu: float
    rate: float

    def __post_init__(self):
        for name in ("lam", "mu"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise InvalidParameter(f"{name} must lie in [0, 1], got {v}")
        if not abs(self.memory) < 1.0:
            raise InvalidParameter(
                f"|lam + mu - 1| must be < 1 (got lam={self.lam}, mu={self.mu})")
        if not (math.isfinite(self.rate) and self.rate >= 0):
            raise InvalidParameter(f"rate must be finite and non-negative, got {self.rate}")

    @property
    def memory(self) -> float:
        """phi = lam + mu - 1, the lag-1 correlation of the channel state."""
        return self.lam + self.mu - 1.0

    @property
    def pi_on(self) -> float:
        return stationary_on_probability(self)

    def moments(self) -> "OnOffMoments":
        pi = self.pi_on
        var = self.rate ** 2 * (1 - self.lam) * (1 - self.mu) / (2 - self.lam - self.mu) ** 2
        return OnOffMoments(mean=self.rate * pi, variance=var, memory=self.memory)

    def to_markov(self) -> MarkovChannel:
        """Equivalent MarkovChannel with state 0 = OFF and state 1 = ON.

        Channels that never leave ON (``lam=0, mu=1``) or never leave OFF
        (``lam=1``) are mapped to one-state channels.
        """
        if self.mu == 1.0:
            return MarkovChannel.deterministic(self.rate)
        if self.lam == 1.0:
            return MarkovChannel.deterministic(0.0)
        q = [[self.lam, 1.0 - self.lam], [1.0 - self.mu, self.mu]]
        return MarkovChannel(q, [0.0, self.rate])


@dataclass(frozen=True)
class OnOffMoments:
    mean: float
    variance: float
    memory: float


@dataclass(frozen=True)
class BlockSpec:
    """Block length ``k`` used by the CLT approximation; ``math.inf`` selects the k -> inf limit."""

    k: float = DEFAULT_BLOCK

    def __post_init__(self):
        k = self.k
        if k == math.inf:
            return
        if isinstance(k, float) and k.is_integer():
            object.__setattr__(self, "k", int(k))
        elif not isinstance(k, (int, np.integer)):
            raise InvalidParameter(f"block length must be an integer or inf, got {k!r}")
        if self.k < 1:
            raise InvalidParameter(f"block length must be >= 1, got {k}")

    @property
    def infinite(self) -> bool:
        return self.k == math.inf

    @classmethod
    def infinite_block(cls) -> "BlockSpec":
        return cls(math.inf)


def _block(block) -> BlockSpec:
    if block is None:
        return BlockSpec()
    if isinstance(block, BlockSpec):
        return block
    return BlockSpec(block)


def stationary_on_probability(ch: OnOffChannel) -> float:
    return (1.0 - ch.lam) / (2.0 - ch.lam - ch.mu)


def exact_ge_limit(ch: OnOffChannel, theta: float) -> float:
    """GE limit ``log(a/2 + sqrt(a^2 + 4b)/2)`` with ``a = lam + mu e^{r theta}``
    and ``b = (1 - lam - mu) e^{r theta}``.

    For ``r*theta > 0`` the factor ``e^{r theta}`` is pulled out of the
    eigenvalue, which keeps the evaluation finite for ``r*theta`` beyond 700.

    A channel with an absorbing state (``mu == 1`` or ``lam == 1``) is
    evaluated on its recurrent state only, matching :meth:`OnOffChannel.to_markov`.
    """
    lam, mu = ch.lam, ch.mu
    rt = ch.rate * float(theta)
    if mu == 1.0:
        return rt
    if lam == 1.0:
        return 0.0
    if rt > 0:
        # a/x, b/x with x = e^{r theta}; eig = x * eig'
        w = math.exp(-rt)
        a = lam * w + mu
        disc = (lam * w - mu) ** 2 + 4.0 * (1 - lam) * (1 - mu) * w
        offset = rt
    else:
        x = math.exp(rt)
        a = lam + mu * x
        disc = (lam - mu * x) ** 2 + 4.0 * (1 - lam) * (1 - mu) * x
        offset = 0.0
    if disc < -1e-12:
        raise ArithmeticError(f"negative discriminant {disc}")
    return offset + math.log(0.5 * a + 0.5 * math.sqrt(max(disc, 0.0)))


def exact_effective_capacity(ch: OnOffChannel, theta: ThetaLike) -> float:
    th = as_theta(theta)
    ec = -exact_ge_limit(ch, -th) / th
    # rounding can push the value a few ulps outside [0, r]
    return min(max(ec, 0.0), ch.rate)


def autocovariance(ch: OnOffChannel, m: int) -> float:
    """K_c(m) = E[c(n) c(n+m)] - m_c^2.

    Evaluated both through the product moment
    ``r^2 pi_on (1 - lam + (1 - mu) phi^m) / (2 - lam - mu)`` and as
    ``sigma_c^2 * phi^m``; the two must agree to 1e-12 (relative to r^2).
    """
    if m < 0:
        raise InvalidParameter(f"lag must be non-negative, got {m}")
    lam, mu, r = ch.lam, ch.mu, ch.rate
    mom = ch.moments()
    phi_m = mom.memory ** m
    product = r * r * ch.pi_on * (1 - lam + (1 - mu) * phi_m) / (2 - lam - mu)
    from_product = product - mom.mean ** 2
    geometric = mom.variance * phi_m
    if abs(from_product - geometric) > 1e-12 * max(1.0, r * r):
        raise ArithmeticError(
            f"autocovariance forms disagree at lag {m}: {from_product} vs {geometric}")
    return geometric


def block_variance(ch: OnOffChannel, block) -> float:
    """var(C(k)) = k sigma^2 + 2 sum_{m=1}^{k-1} (k - m) K_c(m)."""
    k = _block(block).k
    if k == math.inf:
        raise InvalidParameter("block variance diverges for an infinite block; use block_variance_rate")
    mom = ch.moments()
    if k == 1:
        return mom.variance
    m = np.arange(1, k, dtype=float)
    cov = mom.variance * mom.memory ** m
    return k * mom.variance + 2.0 * float(np.sum((k - m) * cov))


def block_variance_rate(ch: OnOffChannel, block=None) -> float:
    """var(C(k))/k, or its limit sigma^2 (1 + phi)/(1 - phi) for an infinite block."""
    b = _block(block)
    if b.infinite:
        mom = ch.moments()
        return mom.variance * (1 + mom.memory) / (1 - mom.memory)
    return block_variance(ch, b) / b.k


def approx_ge_limit(ch: OnOffChannel, block, theta: float) -> float:
    """CLT approximation ``theta * (m_c + theta/2 * var(C(k))/k)``."""
    # identical to the log-MGF of a Gaussian slot rate with the block moments
    return gaussian_iid_ge_limit(ch.moments().mean, block_variance_rate(ch, block), float(theta))


def approx_effective_capacity(ch: OnOffChannel, block, theta: ThetaLike) -> float:
    """``m_c - theta/2 * var(C(k))/k``. Not clamped: it goes negative for large theta."""
    th = as_theta(theta)
    return ch.moments().mean - 0.5 * th * block_variance_rate(ch, block)
