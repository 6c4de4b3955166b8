"""Markov-chain analysis of relay-aided random access sessions.

A contention round (a "session") lasts epsilon time units when no device is
active, 1 unit when a single device transmits, and M+1 units when two or more
devices collide and the M relay nodes forward their observations one by one.
Arrivals over a session are Poisson, so the session-state sequence forms a
4-state Markov chain over {Idle, Single, Success, Unsuccess}.  This module
evaluates the chain in closed form (state probabilities, stationary
distribution, throughput, outage) together with the large-M Gaussian
approximation and asymptotic limits.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

DEFAULT_EPSILON = 0.1

# Above this Poisson mean the cdf recurrence accumulates in log space.
_LOGSPACE_MEAN = 700.0

# Closed-form stationary solution is considered degenerate below this
# denominator magnitude and the power-iteration fallback is used instead.
_DELTA_SINGULAR = 1e-14


class ConvergenceError(RuntimeError):
    """Power iteration failed to reach the requested tolerance."""


@dataclass(frozen=True)
class SystemParams:
    """Traffic intensity, relay count, and idle-session length."""

    lam: float
    m_relays: int
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam >= 0):
            raise ValueError(f"traffic intensity must be finite and >= 0, got {self.lam}")
        if self.m_relays < 1:
            raise ValueError(f"need at least one relay, got {self.m_relays}")
        if not (0 < self.epsilon <= 1):
            raise ValueError(f"idle-session fraction must be in (0, 1], got {self.epsilon}")

    @property
    def durations(self) -> tuple[float, float, float, float]:
        """Session length per state, indexed by SessionKind."""
        long = self.m_relays + 1.0
        return (self.epsilon, 1.0, long, long)


class SessionKind(enum.IntEnum):
    IDLE = 0        # no active device, length epsilon
    SINGLE = 1      # one active device, length 1
    SUCCESS = 2     # 2..M+1 devices, decoded after M relay forwards
    UNSUCCESS = 3   # >= M+2 devices, outage


def session_length(kind: SessionKind, params: SystemParams) -> float:
    return params.durations[kind]


@dataclass(frozen=True)
class StationaryDistribution:
    """Stationary probabilities (pi_0, pi_1, pi_S, pi_U) of the session chain.

    ``method`` records how the vector was obtained: "closed_form",
    "power_iteration", or "degenerate" (closed form bypassed because its
    denominator vanished).
    """

    pi: np.ndarray
    method: str = "closed_form"

    def __getitem__(self, i):
        return self.pi[i]


@dataclass(frozen=True)
class PerformanceMetrics:
    throughput: float
    outage: float
    mean_session_length: float
    mean_success_count: float


def _pi_vec(pi) -> np.ndarray:
    if isinstance(pi, StationaryDistribution):
        return pi.pi
    return np.asarray(pi, dtype=float)


def poisson_pmf(k: int, mean: float) -> float:
    """P(X = k) for X ~ Poisson(mean), evaluated in log space."""
    if k < 0:
        raise ValueError(f"count must be >= 0, got {k}")
    if mean < 0 or not math.isfinite(mean):
        raise ValueError(f"mean must be finite and >= 0, got {mean}")
    if mean == 0:
        return 1.0 if k == 0 else 0.0
    return math.exp(k * math.log(mean) - mean - math.lgamma(k + 1))


def _poisson_pmf_array(ks: np.ndarray, mean: float) -> np.ndarray:
    """Vectorized log-space Poisson pmf for a fixed mean."""
    if mean == 0:
        return (ks == 0).astype(float)
    ks = np.asarray(ks)
    return np.exp(ks * math.log(mean) - mean - special.gammaln(ks + 1))


def poisson_cdf(n: int, mean: float) -> float:
    """P(X <= n) for X ~ Poisson(mean).

    Accumulates the multiplicative recurrence pmf(k+1) = pmf(k) * mean/(k+1)
    in ordinary space; for large means, where pmf(0) underflows, the partial
    sum is formed in log space instead.
    """
    if n < 0:
        return 0.0
    if mean < 0 or not math.isfinite(mean):
        raise ValueError(f"mean must be finite and >= 0, got {mean}")
    if mean == 0:
        return 1.0
    if mean <= _LOGSPACE_MEAN:
        pmf = math.exp(-mean)
        total = pmf
        for k in range(n):
            pmf *= mean / (k + 1)
            total += pmf
        return min(total, 1.0)
    ks = np.arange(n + 1)
    log_terms = ks * math.log(mean) - mean - special.gammaln(ks + 1)
    return float(min(np.exp(special.logsumexp(log_terms)), 1.0))


def poisson_tail(n: int, mean: float) -> float:
    """P(X >= n+1), in complement form (never by truncating the series)."""
    return max(1.0 - poisson_cdf(n, mean), 0.0)


def session_probs(params: SystemParams, duration: float) -> tuple[float, float, float, float]:
    """(p0, p1, pS, pU): probabilities of the four session outcomes given the
    number of arrivals accumulated over ``duration`` time units."""
    if duration <= 0:
        raise ValueError(f"duration must be > 0, got {duration}")
    mu = params.lam * duration
    p0 = poisson_pmf(0, mu)
    p1 = poisson_pmf(1, mu)
    cdf = poisson_cdf(params.m_relays + 1, mu)
    ps = max(cdf - p0 - p1, 0.0)
    pu = max(1.0 - cdf, 0.0)
    return p0, p1, ps, pu


def transition_matrix(params: SystemParams) -> np.ndarray:
    """4x4 row-stochastic matrix over (Idle, Single, Success, Unsuccess).

    Rows condition on the previous session's length, so the Success and
    Unsuccess rows (both of length M+1) are identical.
    """
    row_idle = session_probs(params, params.epsilon)
    row_single = session_probs(params, 1.0)
    row_long = session_probs(params, params.m_relays + 1.0)
    return np.array([row_idle, row_single, row_long, row_long])


def stationary_power_iteration(p: np.ndarray, tol: float = 1e-14,
                               max_iter: int = 200_000) -> StationaryDistribution:
    """Iterate pi <- pi P from a uniform start until the max component change
    drops below ``tol``.  Independent of the closed-form solution.

    ``p`` may be a stack of matrices (shape (..., n, n)); all chains are then
    iterated together until every one has converged.
    """
    if tol <= 0:
        raise ValueError(f"tolerance must be > 0, got {tol}")
    p = np.asarray(p, dtype=float)
    n = p.shape[-1]
    pi = np.full(p.shape[:-2] + (n,), 1.0 / n)
    for _ in range(max_iter):
        nxt = np.einsum('...i,...ij->...j', pi, p)
        nxt /= nxt.sum(axis=-1, keepdims=True)
        if np.max(np.abs(nxt - pi)) < tol:
            return StationaryDistribution(nxt, method="power_iteration")
        pi = nxt
    raise ConvergenceError(f"no convergence to {tol} within {max_iter} iterations")


def stationary_closed_form(params: SystemParams) -> StationaryDistribution:
    """Stationary distribution via the closed-form solution of pi = pi P.

    Degenerate cases (zero traffic, vanishing denominator) bypass the closed
    form; the result is then flagged with method="degenerate".
    """
    if params.lam == 0:
        return StationaryDistribution(np.array([1.0, 0.0, 0.0, 0.0]), method="degenerate")
    pe = session_probs(params, params.epsilon)
    p1 = session_probs(params, 1.0)
    pm = session_probs(params, params.m_relays + 1.0)
    delta = ((pm[0] + 1 - pe[0]) * (pm[1] + 1 - p1[1])
             - (pm[0] - p1[0]) * (pm[1] - pe[1]))
    if abs(delta) < _DELTA_SINGULAR:
        fallback = stationary_power_iteration(transition_matrix(params))
        return StationaryDistribution(fallback.pi, method="degenerate")
    pi0 = (pm[0] * (1 - p1[1]) + pm[1] * p1[0]) / delta
    pi1 = (pm[1] * (1 - pe[0]) + pm[0] * pe[1]) / delta
    pi_bar = ((1 - p1[1]) * (1 - pe[0]) - p1[0] * pe[1]) / delta
    pi_s = pe[2] * pi0 + p1[2] * pi1 + pm[2] * pi_bar
    pi_u = pe[3] * pi0 + p1[3] * pi1 + pm[3] * pi_bar
    pi = np.array([pi0, pi1, pi_s, pi_u])
    pi /= pi.sum()
    return StationaryDistribution(pi, method="closed_form")


def occupancy(k: int, params: SystemParams, pi) -> float:
    """Q(k): steady-state probability that a session sees k contenders."""
    v = _pi_vec(pi)
    return float(sum(poisson_pmf(k, params.lam * t) * v[i]
                     for i, t in enumerate(params.durations)))


def outage_exact(params: SystemParams, pi=None) -> float:
    """Probability of a session with >= M+2 contenders (undecodable even with
    all M relay forwards).  Tail computed in complement form per state."""
    if pi is None:
        pi = stationary_closed_form(params)
    v = _pi_vec(pi)
    n = params.m_relays + 1
    return float(sum(v[i] * poisson_tail(n, params.lam * t)
                     for i, t in enumerate(params.durations)))


def mean_session_length(params: SystemParams, pi) -> float:
    v = _pi_vec(pi)
    return float(params.epsilon * v[0] + v[1] + (params.m_relays + 1) * (v[2] + v[3]))


def mean_success_count(params: SystemParams, pi) -> float:
    """Mean successfully delivered packets per session.

    Evaluated both as the truncated first moment sum_{k=1}^{M+1} k Q(k) and
    as the closed expression lambda*T_i * cdf(M; lambda*T_i) summed over
    states; the two must agree or the evaluation is numerically broken.
    """
    v = _pi_vec(pi)
    m = params.m_relays
    closed = 0.0
    moment = 0.0
    ks = np.arange(1, m + 2)
    for i, t in enumerate(params.durations):
        mu = params.lam * t
        closed += mu * poisson_cdf(m, mu) * v[i]
        moment += v[i] * float(np.sum(ks * _poisson_pmf_array(ks, mu)))
    if abs(closed - moment) > 1e-10 * max(1.0, abs(closed)):
        raise ArithmeticError(
            f"moment and closed forms disagree: {closed} vs {moment}")
    return closed


def throughput_exact(params: SystemParams) -> PerformanceMetrics:
    """Exact throughput eta = mean packets per session / mean session length,
    bundled with outage and both means."""
    pi = stationary_closed_form(params)
    t_bar = mean_session_length(params, pi)
    k_bar = mean_success_count(params, pi)
    return PerformanceMetrics(
        throughput=k_bar / t_bar,
        outage=outage_exact(params, pi),
        mean_session_length=t_bar,
        mean_success_count=k_bar,
    )


def q_function(x: float) -> float:
    """Gaussian upper-tail probability, via the complementary error function."""
    return 0.5 * special.erfc(x / math.sqrt(2.0))


def psi(lam: float, m_relays: int) -> float:
    """(1 - lambda) * sqrt(M / lambda): the normalized deviation of the
    decodable-count threshold under the Gaussian approximation."""
    if lam <= 0:
        raise ValueError(f"traffic intensity must be > 0, got {lam}")
    return (1.0 - lam) * math.sqrt(m_relays / lam)


def throughput_approx(params: SystemParams) -> float:
    """Large-M Gaussian approximation of the throughput."""
    return params.lam * (1.0 - q_function(psi(params.lam, params.m_relays)))


def outage_approx(params: SystemParams) -> float:
    """Large-M Gaussian approximation of the outage probability."""
    return q_function(psi(params.lam, params.m_relays))


def asymptotic_throughput(lam: float) -> float:
    """M -> infinity throughput limit: lambda below unit load, 1/2 at exactly
    unit load, 0 above (pointwise definition; discontinuous at lambda = 1)."""
    if lam < 0:
        raise ValueError(f"traffic intensity must be >= 0, got {lam}")
    if lam < 1.0:
        return lam
    if lam == 1.0:
        return 0.5
    return 0.0
