"""Queueing delays for the uplink flows.

Every flow is modeled as an M/D/1 queue: Poisson packet arrivals at rate
`rho` served deterministically at rate `rate` (both in bits/s with unit-size
packets, so the algebra is unit-free). The mean waiting time is

    w = rho / (2 * rate * (rate - rho))

which is the Pollaczek-Khinchine mean wait for deterministic service. A flow
whose service rate does not exceed its arrival rate is unstable; its delay is
reported as infinity and the utility layer maps it to a penalty value.

Split-traffic composition: the coarse stream queues at the direct rate, the
fine stream queues twice (access hop, then backhaul share), and the effective
delay is the worst of the two parallel streams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

UNSTABLE = math.inf


@dataclass(frozen=True)
class TrafficSpec:
    """Offered load per MUE in bits/s, split across streams by the fine fraction."""

    rho_bps: float = 180e3

    def coarse_load(self, fine_fraction: float) -> float:
        return (1.0 - fine_fraction) * self.rho_bps

    def fine_load(self, fine_fraction: float) -> float:
        return fine_fraction * self.rho_bps


@dataclass(frozen=True)
class DelayBreakdown:
    coarse_s: float
    fine_access_s: float
    fine_backhaul_s: float
    total_s: float

    @property
    def fine_s(self) -> float:
        return self.fine_access_s + self.fine_backhaul_s

    @property
    def unstable(self) -> bool:
        return not math.isfinite(self.total_s)


def md1_delay(rho: float, rate: float) -> float:
    """Mean M/D/1 waiting time; infinity when the queue is unstable.

    A zero-arrival stream never queues, so rho == 0 returns 0 regardless of
    the rate (this keeps fully one-sided traffic splits degenerate but finite).
    """
    if rho < 0 or rate < 0:
        raise ValueError("arrival and service rates must be non-negative")
    if rho == 0.0:
        return 0.0
    if rate <= rho:
        return UNSTABLE
    return rho / (2.0 * rate * (rate - rho))


def delay_classical(rho: float, rate: float) -> float:
    """Single-queue delay of an unsplit uplink flow."""
    return md1_delay(rho, rate)


def delay_split(
    traffic: TrafficSpec,
    fine_fraction: float,
    coarse_rate: float,
    fine_access_rate: float,
    backhaul_share: float,
) -> DelayBreakdown:
    """Delay of a split flow: max of the coarse queue and the two-hop fine chain."""
    if not 0.0 <= fine_fraction <= 1.0:
        raise ValueError("fine fraction must lie in [0, 1]")
    d_coarse = md1_delay(traffic.coarse_load(fine_fraction), coarse_rate)
    rho_fine = traffic.fine_load(fine_fraction)
    d_access = md1_delay(rho_fine, fine_access_rate)
    d_backhaul = md1_delay(rho_fine, backhaul_share)
    total = max(d_coarse, d_access + d_backhaul)
    return DelayBreakdown(
        coarse_s=d_coarse,
        fine_access_s=d_access,
        fine_backhaul_s=d_backhaul,
        total_s=total,
    )


def md1_oracle(rho: float, rate: float, n_packets: int, seed: int = 0) -> float:
    """Discrete-event estimate of the mean M/D/1 wait, for validating the closed form.

    Uses the Lindley recursion W_{k+1} = max(0, W_k + S - A_k) evaluated via
    prefix sums: with X_k = S - A_k and C the cumulative sum of X, the wait of
    customer k is C_k - min(C_0..C_k) (starting from an empty queue).
    """
    if rho <= 0 or rate <= rho:
        raise ValueError("oracle needs a stable, loaded queue (0 < rho < rate)")
    rng = np.random.default_rng(seed)
    service = 1.0 / rate
    inter = rng.exponential(1.0 / rho, size=n_packets)
    steps = service - inter
    cum = np.concatenate([[0.0], np.cumsum(steps)])
    # Wait of customer k is C_{k-1} - min(C_0..C_{k-1}), non-negative by construction.
    waits = cum[:-1] - np.minimum.accumulate(cum)[:-1]
    return float(waits.mean())
