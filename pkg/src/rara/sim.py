"""Monte-Carlo simulation of the relay-aided random access session protocol.

Devices arriving during session t contend at the start of session t+1 (they
cannot transmit while relays are forwarding).  A session with no contenders
lasts epsilon, with one contender lasts 1, and with two or more lasts M+1
unit times.  Under the threshold success rule a collision of K <= M+1
packets is always decoded; the phy-coupled rule instead runs the
decorrelating detector of :mod:`rara.mpr` at a configured SNR.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import mpr
from .analytic import SystemParams

THRESHOLD = "threshold"
PHY_COUPLED = "phy"

# Sessions simulated before counting starts, to wash out the arbitrary
# initial condition (first contenders drawn over one unit time).
DEFAULT_WARMUP = 1000

_BATCHES = 100
_POOL = 1 << 14


@dataclass(frozen=True)
class PoissonProcess:
    """Infinite-population arrivals: Poisson(lam * duration) per session."""

    lam: float

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"arrival rate must be >= 0, got {self.lam}")


@dataclass(frozen=True)
class FinitePopulation:
    """n_devices independent devices, each activating with probability
    p_active per unit time; activation over T units is 1 - (1-p)^T."""

    n_devices: int
    p_active: float

    def __post_init__(self):
        if self.n_devices < 1:
            raise ValueError(f"need at least one device, got {self.n_devices}")
        if not (0 <= self.p_active <= 1):
            raise ValueError(f"activation probability must be in [0, 1], got {self.p_active}")

    @classmethod
    def from_traffic(cls, lam: float, n_devices: int) -> "FinitePopulation":
        """Population whose aggregate rate n * p matches a target intensity."""
        return cls(n_devices=n_devices, p_active=lam / n_devices)


@dataclass(frozen=True)
class SimConfig:
    params: SystemParams
    arrivals: PoissonProcess | FinitePopulation
    n_sessions: int
    seed: int = 0
    success_rule: str = THRESHOLD
    snr_db: float | None = None
    warmup_sessions: int = DEFAULT_WARMUP

    def __post_init__(self):
        if self.n_sessions < 1:
            raise ValueError(f"need at least one session, got {self.n_sessions}")
        if self.success_rule not in (THRESHOLD, PHY_COUPLED):
            raise ValueError(f"unknown success rule {self.success_rule!r}")
        if self.success_rule == PHY_COUPLED and self.snr_db is None:
            raise ValueError("phy-coupled rule requires snr_db")
        if self.warmup_sessions < 0:
            raise ValueError("warmup_sessions must be >= 0")


@dataclass(frozen=True)
class SimReport:
    sessions_by_state: tuple[int, int, int, int]  # (Idle, Single, Success, Unsuccess)
    packets_arrived: int
    packets_delivered: int
    packets_lost: int
    total_time: float
    throughput_hat: float
    outage_hat: float
    mean_session_length_hat: float
    stderr_throughput: float
    stderr_outage: float
    stderr_mean_length: float
    seed: int


def sample_arrivals(model, duration: float, rng: np.random.Generator, size=None):
    """Number of devices becoming active over ``duration`` time units."""
    if duration <= 0:
        raise ValueError(f"duration must be > 0, got {duration}")
    if isinstance(model, PoissonProcess):
        return rng.poisson(model.lam * duration, size)
    if isinstance(model, FinitePopulation):
        p = 1.0 - (1.0 - model.p_active) ** duration
        return rng.binomial(model.n_devices, p, size)
    raise TypeError(f"unknown arrival model {model!r}")


class _ArrivalPools:
    """Pre-drawn arrival counts per session duration, refilled on demand.

    One pool per duration keeps the inner session loop cheap while staying
    deterministic for a fixed seed (consumption order is the session order).
    """

    def __init__(self, model, durations, rng):
        self.model = model
        self.durations = durations
        self.rng = rng
        self.pools = [np.empty(0, dtype=np.int64) for _ in durations]
        self.pos = [0] * len(durations)

    def draw(self, i: int) -> int:
        if self.pos[i] >= len(self.pools[i]):
            self.pools[i] = sample_arrivals(self.model, self.durations[i],
                                            self.rng, size=_POOL)
            self.pos[i] = 0
        v = self.pools[i][self.pos[i]]
        self.pos[i] += 1
        return int(v)


def _phy_decode(k: int, m: int, snr_db: float, phy_rng: np.random.Generator) -> bool:
    """Run the decorrelator on one collision; True iff all K symbols decode."""
    chan_seed, rx_seed = (int(s) for s in phy_rng.integers(0, 2**63, 2))
    ch = mpr.generate_channels(k, m, chan_seed)
    h = mpr.composite_matrix(ch)
    symbols = mpr.QPSK[phy_rng.integers(0, 4, k)]
    noise_var = 10.0 ** (-snr_db / 10.0)
    block = mpr.simulate_reception(h, ch, symbols, noise_var, noise_var, rx_seed)
    result = mpr.decorrelate(h, block)
    return bool(np.array_equal(result.decided, symbols))


def run(config: SimConfig) -> SimReport:
    """Simulate ``n_sessions`` counted sessions (after warm-up) and report
    empirical throughput, outage, and session-length estimates.

    The arrival stream and the PHY randomness use separate generators derived
    from the seed, so threshold and phy-coupled runs with the same seed see
    identical arrival sequences.
    """
    params = config.params
    m = params.m_relays
    eps = params.epsilon
    n = config.n_sessions
    arr_ss, phy_ss = np.random.SeedSequence(config.seed).spawn(2)
    arr_rng = np.random.default_rng(arr_ss)
    phy_rng = np.random.default_rng(phy_ss)
    durations = (eps, 1.0, m + 1.0)
    pools = _ArrivalPools(config.arrivals, durations, arr_rng)
    phy = config.success_rule == PHY_COUPLED

    states = np.empty(n, dtype=np.uint8)
    arrived = np.zeros(n, dtype=np.int64)
    delivered = np.zeros(n, dtype=np.int64)
    lost = np.zeros(n, dtype=np.int64)

    # initial contenders accumulate over one unit time
    k = pools.draw(1)
    for t in range(-config.warmup_sessions, n):
        if k == 0:
            state, d, l, dur_i = 0, 0, 0, 0
        elif k == 1:
            state, d, l, dur_i = 1, 1, 0, 1
        elif k <= m + 1:
            ok = _phy_decode(k, m, config.snr_db, phy_rng) if (phy and t >= 0) else True
            state = 2 if ok else 3
            d, l = (k, 0) if ok else (0, k)
            dur_i = 2
        else:
            state, d, l, dur_i = 3, 0, k, 2
        if t >= 0:
            states[t] = state
            arrived[t] = k
            delivered[t] = d
            lost[t] = l
        k = pools.draw(dur_i)

    counts = np.bincount(states, minlength=4)
    lengths = np.array([eps, 1.0, m + 1.0, m + 1.0])[states]
    total_time = float(np.sum(lengths))
    total_delivered = int(delivered.sum())
    total_lost = int(lost.sum())

    # batch means: sessions are Markov-dependent, so per-session errors
    # understate the variance; batches restore approximate independence
    n_batches = min(_BATCHES, n)
    batch_d = np.array([b.sum() for b in np.array_split(delivered, n_batches)], dtype=float)
    batch_t = np.array([b.sum() for b in np.array_split(lengths, n_batches)])
    batch_n = np.array([len(b) for b in np.array_split(lengths, n_batches)], dtype=float)
    batch_u = np.array([np.count_nonzero(b == 3)
                        for b in np.array_split(states, n_batches)], dtype=float)

    def _stderr(values):
        if n_batches < 2:
            return float("nan")
        return float(np.std(values, ddof=1)) / math.sqrt(n_batches)

    stderr = _stderr(batch_d / batch_t)
    stderr_outage = _stderr(batch_u / batch_n)
    stderr_mean_length = _stderr(batch_t / batch_n)

    return SimReport(
        sessions_by_state=tuple(int(c) for c in counts),
        packets_arrived=int(arrived.sum()),
        packets_delivered=total_delivered,
        packets_lost=total_lost,
        total_time=total_time,
        throughput_hat=total_delivered / total_time,
        outage_hat=int(counts[3]) / n,
        mean_session_length_hat=total_time / n,
        stderr_throughput=stderr,
        stderr_outage=stderr_outage,
        stderr_mean_length=stderr_mean_length,
        seed=config.seed,
    )


def derive_seeds(base_seed: int, count: int) -> list[int]:
    """Independent per-run seeds for a sweep, deterministic in (base, index)."""
    return [int(ss.generate_state(1)[0]) for ss in
            np.random.SeedSequence(base_seed).spawn(count)]


def sweep(configs: list[SimConfig]) -> list[SimReport]:
    """Run each configuration independently; results follow input order.

    Callers building a grid should give each config its own seed, e.g. via
    :func:`derive_seeds`, so the runs stay independent and reproducible.
    """
    if not configs:
        raise ValueError("need at least one configuration")
    return [run(c) for c in configs]
