"""Multipacket reception over relay-forwarded observations.

When K devices collide, the base station keeps its direct observation and the
M amplify-and-forward relay copies, stacking them into M+1 linear equations
in the K transmitted symbols.  A decorrelating (zero-forcing) detector then
recovers all K symbols whenever K <= M+1 and the composite channel matrix is
well conditioned.

Channels are i.i.d. circularly-symmetric complex Gaussian with unit variance
(Rayleigh envelope); symbols are unit-energy QPSK, one symbol standing in for
one packet.  Relays forward with unit gain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Composite matrices with a condition number above this are treated as
# effectively singular and the detection is not declared successful.
CONDITION_THRESHOLD = 1e8

QPSK = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / math.sqrt(2.0)

# Trials per vectorized batch inside symbol_error_rate.  Fixed so that the
# random stream, and hence the estimate, does not depend on trial count split.
_SER_CHUNK = 8192


class UnderdeterminedError(ValueError):
    """More colliding devices than stacked observations (K > M+1)."""


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of all link gains for K devices, M relays, and the BS."""

    direct: np.ndarray        # (K,) device -> BS
    device_relay: np.ndarray  # (M, K) device -> relay
    relay_bs: np.ndarray      # (M,) relay -> BS

    def __post_init__(self):
        k = self.direct.shape[0]
        m = self.relay_bs.shape[0]
        if self.device_relay.shape != (m, k):
            raise ValueError(f"device-relay gains must be ({m}, {k}), "
                             f"got {self.device_relay.shape}")
        for a in (self.direct, self.device_relay, self.relay_bs):
            if not np.all(np.isfinite(a.view(float))):
                raise ValueError("channel gains must be finite")


@dataclass(frozen=True)
class ReceivedBlock:
    """Stacked observations r_1..r_{M+1} from one collision round."""

    r: np.ndarray
    noise_var: float
    relay_noise_var: float

    def __post_init__(self):
        if self.noise_var < 0 or self.relay_noise_var < 0:
            raise ValueError("noise variances must be >= 0")


@dataclass(frozen=True)
class DetectionResult:
    estimates: np.ndarray  # raw decorrelator outputs
    decided: np.ndarray    # nearest QPSK symbols
    success: bool
    condition_number: float


def _cn(rng: np.random.Generator, shape) -> np.ndarray:
    """Circularly-symmetric complex Gaussian, unit variance per entry."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def generate_channels(k_devices: int, m_relays: int, rng_seed: int) -> ChannelRealization:
    """Draw all gains i.i.d. CN(0, 1); deterministic for a given seed."""
    if k_devices < 1 or m_relays < 1:
        raise ValueError("need at least one device and one relay")
    rng = np.random.default_rng(rng_seed)
    return ChannelRealization(
        direct=_cn(rng, k_devices),
        device_relay=_cn(rng, (m_relays, k_devices)),
        relay_bs=_cn(rng, m_relays),
    )


def composite_matrix(ch: ChannelRealization) -> np.ndarray:
    """(M+1) x K effective channel: row 1 is the direct link, row m+1 the
    m-th relay's forwarded copy g_m * h_{m,k}."""
    return np.vstack([ch.direct, ch.relay_bs[:, None] * ch.device_relay])


def simulate_reception(h: np.ndarray, ch: ChannelRealization, symbols: np.ndarray,
                       noise_var: float, relay_noise_var: float,
                       rng_seed: int) -> ReceivedBlock:
    """One noisy collision round: r = H s + stacked noise, where the relay
    rows carry the forwarded relay noise g_m * w_m on top of background n."""
    if noise_var < 0 or relay_noise_var < 0:
        raise ValueError("noise variances must be >= 0")
    rng = np.random.default_rng(rng_seed)
    n_obs = h.shape[0]
    r = h @ symbols + _cn(rng, n_obs) * math.sqrt(noise_var)
    r[1:] += ch.relay_bs * (_cn(rng, n_obs - 1) * math.sqrt(relay_noise_var))
    return ReceivedBlock(r=r, noise_var=noise_var, relay_noise_var=relay_noise_var)


def nearest_qpsk(estimates: np.ndarray) -> np.ndarray:
    """Minimum-distance projection onto the unit-energy QPSK alphabet."""
    re = np.where(estimates.real >= 0, 1.0, -1.0)
    im = np.where(estimates.imag >= 0, 1.0, -1.0)
    return (re + 1j * im) / math.sqrt(2.0)


def decorrelate(h: np.ndarray, block) -> DetectionResult:
    """Zero-forcing detection: estimates = pinv(H) r, decided by nearest
    alphabet point.  ``block`` may be a ReceivedBlock or a raw vector.

    Refuses K > M+1 (fewer equations than unknowns); a numerically
    rank-deficient H is flagged as unsuccessful but estimates are still
    returned.
    """
    n_obs, k = h.shape
    if k > n_obs:
        raise UnderdeterminedError(
            f"{k} colliding devices but only {n_obs} observations; "
            f"need K <= M+1")
    r = block.r if isinstance(block, ReceivedBlock) else np.asarray(block)
    cond = float(np.linalg.cond(h))
    estimates = np.linalg.pinv(h) @ r
    return DetectionResult(
        estimates=estimates,
        decided=nearest_qpsk(estimates),
        success=bool(cond < CONDITION_THRESHOLD),
        condition_number=cond,
    )


def symbol_error_rate(k_devices: int, m_relays: int, snr_db: float,
                      trials: int, rng_seed: int) -> float:
    """Monte-Carlo symbol error rate of the decorrelator over fresh channels,
    symbols, and noise each trial.  SNR is per received symbol relative to
    the unit-variance gains; relay and BS noise share the same variance.
    """
    if trials < 1:
        raise ValueError(f"need at least one trial, got {trials}")
    if k_devices > m_relays + 1:
        raise UnderdeterminedError(
            f"{k_devices} devices exceed {m_relays}+1 observations")
    noise_var = 10.0 ** (-snr_db / 10.0)
    rng = np.random.default_rng(rng_seed)
    errors = 0
    done = 0
    while done < trials:
        n = min(_SER_CHUNK, trials - done)
        direct = _cn(rng, (n, k_devices))
        dev_rel = _cn(rng, (n, m_relays, k_devices))
        rel_bs = _cn(rng, (n, m_relays))
        h = np.concatenate([direct[:, None, :], rel_bs[..., None] * dev_rel], axis=1)
        s = QPSK[rng.integers(0, 4, (n, k_devices))]
        r = np.einsum('nok,nk->no', h, s)
        r += _cn(rng, (n, m_relays + 1)) * math.sqrt(noise_var)
        r[:, 1:] += rel_bs * (_cn(rng, (n, m_relays)) * math.sqrt(noise_var))
        est = np.einsum('nko,no->nk', np.linalg.pinv(h), r)
        errors += int(np.count_nonzero(nearest_qpsk(est) != s))
        done += n
    return errors / (trials * k_devices)
