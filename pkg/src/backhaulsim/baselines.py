"""Non-learning reference schemes the game-theoretic schemes are measured against.

CLA: every macro user transmits at full power on its own subcarriers straight
to the macro station, no small-cell involvement.

RU1: full power split uniformly across the whole subcarrier set, so every
subcarrier carries every macro user's signal and mutual interference.

OFF: full offloading with perfect information. Each macro user greedily
attaches to whichever serving option (macro direct, or any small cell capped
by its backhaul share) currently offers the highest rate; synchronous
best-response rounds run until associations stabilize, then users whose rate
fell below their macro-only rate are walked back, which restores the
per-user improvement guarantee.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import backhaul as bh
from .backhaul import allocate_wired_capacity
from .channel import ChannelState
from .delay_engine import TrafficSpec, md1_delay
from .game import UtilityParams, utility
from .rate_engine import RateEngine, spectral_rate
from .topology import ScenarioConfig, SubcarrierAllocation, Topology

CLA = "CLA"
RU1 = "RU1"
OFF = "OFF"


@dataclass(frozen=True)
class BaselineResult:
    """Per-MUE outcomes of one baseline run on one drop."""

    label: str
    rates_bps: dict[int, float]
    delays_s: dict[int, float]
    utilities: dict[int, float]
    # OFF only: serving node per MUE (the MBS id or an SBS id).
    associations: dict[int, int] = field(default_factory=dict)
    rounds: int = 0
    stabilized: bool = True

    def __post_init__(self):
        for m, r in self.rates_bps.items():
            if r < 0:
                raise ValueError(f"negative rate for user {m}")


def _finish(
    label: str,
    rates: dict[int, float],
    traffic: TrafficSpec,
    uparams: UtilityParams,
    **extra,
) -> BaselineResult:
    delays = {m: md1_delay(traffic.rho_bps, r) for m, r in rates.items()}
    utils = {m: utility(rates[m], delays[m], uparams) for m in rates}
    return BaselineResult(label, rates, delays, utils, **extra)


def run_cla(
    topology: Topology,
    alloc: SubcarrierAllocation,
    ch: ChannelState,
    config: ScenarioConfig,
    traffic: TrafficSpec,
    uparams: UtilityParams | None = None,
) -> BaselineResult:
    """Classical uncoordinated uplink: full power on own subcarriers."""
    uparams = uparams or UtilityParams()
    engine = RateEngine(topology, alloc, ch, config)
    row0 = ch.rx_row[topology.mbs]
    # Aggregate-minus-own assembly, in the same accumulation order as the
    # offloading baseline, so the two agree bitwise when nobody offloads.
    rx = engine.sue_base[row0].copy()
    own_at_mbs: dict[int, np.ndarray] = {}
    for m in topology.mue_ids:
        sc = engine.sc[m]
        own = ch.gains[m, row0, sc] * (engine.mue_power_w / sc.size)
        own_at_mbs[m] = own
        rx[sc] += own
    rates = {}
    for m in topology.mue_ids:
        sc = engine.sc[m]
        own = own_at_mbs[m]
        intf = np.maximum(rx[sc] - own, 0.0)
        rates[m] = spectral_rate(own, intf, ch.noise_per_subcarrier_w, ch.subcarrier_bw_hz)
    return _finish(CLA, rates, traffic, uparams)


def run_ru1(
    topology: Topology,
    alloc: SubcarrierAllocation,
    ch: ChannelState,
    config: ScenarioConfig,
    traffic: TrafficSpec,
    uparams: UtilityParams | None = None,
) -> BaselineResult:
    """Uniform full-band transmission: P/N on every one of the N subcarriers."""
    uparams = uparams or UtilityParams()
    engine = RateEngine(topology, alloc, ch, config)
    n_sc = alloc.n_total
    row0 = ch.rx_row[topology.mbs]
    per_sc = engine.mue_power_w / n_sc

    mues = list(topology.mue_ids)
    gains0 = np.array([ch.gains[m, row0] for m in mues])  # (M, N)
    total_rx = gains0.sum(axis=0) * per_sc + engine.sue_base[row0]
    rates: dict[int, float] = {}
    for i, m in enumerate(mues):
        own = gains0[i] * per_sc
        rates[m] = spectral_rate(
            own, np.maximum(total_rx - own, 0.0), ch.noise_per_subcarrier_w, ch.subcarrier_bw_hz
        )
    return _finish(RU1, rates, traffic, uparams)


class _OffloadState:
    """Shared precomputation for the greedy offloading rounds."""

    def __init__(
        self,
        topology: Topology,
        alloc: SubcarrierAllocation,
        ch: ChannelState,
        config: ScenarioConfig,
        mode: str,
        c_bar_bps: float,
        wired_policy: str,
        vacate: bool,
        half_duplex: bool = False,
    ):
        self.topology = topology
        self.mode = mode
        self.c_bar_bps = c_bar_bps
        self.wired_policy = wired_policy
        self.vacate = vacate
        self.relay_factor = 0.5 if half_duplex else 1.0
        self.engine = RateEngine(topology, alloc, ch, config)
        self.noise = ch.noise_per_subcarrier_w
        self.bw = ch.subcarrier_bw_hz
        self.mues = list(topology.mue_ids)
        self.sbss = list(topology.sbs_ids)
        self.n_sues = {s: len(topology.sues_of(s)) for s in self.sbss}
        p = self.engine.mue_power_w

        # Everyone transmits at full power on their own subcarriers no matter
        # where they attach, so received aggregates are round-invariant; only
        # the macro aggregate changes when offloaded users vacate it.
        self.rx_all = self.engine.sue_base.copy()
        self.own_at_mbs = np.zeros((len(self.mues), alloc.n_total))
        row0 = ch.rx_row[topology.mbs]
        self.row0 = row0
        for i, m in enumerate(self.mues):
            sc = self.engine.sc[m]
            per = p / sc.size
            self.rx_all[:, sc] += ch.gains[m, :, sc].T * per
            self.own_at_mbs[i, sc] = ch.gains[m, row0, sc] * per

        # Access rate to every SBS is also round-invariant.
        self.access: dict[int, dict[int, float]] = {m: {} for m in self.mues}
        for s in self.sbss:
            rs = ch.rx_row[s]
            for i, m in enumerate(self.mues):
                sc = self.engine.sc[m]
                own = ch.gains[m, rs, sc] * (p / sc.size)
                intf = np.maximum(self.rx_all[rs, sc] - own, 0.0)
                self.access[m][s] = spectral_rate(own, intf, self.noise, self.bw)

    def shares(self, assoc: dict[int, int]) -> tuple[dict[int, int], dict[int, float]]:
        """Flow counts per SBS and the wired split for one association map."""
        flows = dict(self.n_sues)
        for m, a in assoc.items():
            if a != self.topology.mbs:
                flows[a] += 1
        if self.mode == bh.OTA:
            wired = {s: 0.0 for s in self.sbss}
        elif self.wired_policy == bh.PROPORTIONAL_LOAD:
            wired = allocate_wired_capacity(
                self.sbss, self.c_bar_bps, self.wired_policy, {s: float(c) for s, c in flows.items()}
            )
        else:
            wired = allocate_wired_capacity(self.sbss, self.c_bar_bps, bh.EQUAL)
        return flows, wired

    def pipe(self, s: int, wired: dict[int, float]) -> float:
        """Total backhaul rate an SBS can draw on under the current mode."""
        if self.mode == bh.WIRED:
            return wired[s]
        if self.mode == bh.OTA:
            return self.engine.ota_rate_bps[s]
        return max(self.engine.ota_rate_bps[s], wired[s])

    def mbs_rates(self, assoc: dict[int, int]) -> dict[int, float]:
        """Macro-direct rate of every MUE given who has vacated the macro."""
        mbs = self.topology.mbs
        vacated = np.zeros(self.rx_all.shape[1])
        if self.vacate:
            for i, m in enumerate(self.mues):
                if assoc[m] != mbs:
                    vacated += self.own_at_mbs[i]
        base = self.rx_all[self.row0] - vacated
        out: dict[int, float] = {}
        for i, m in enumerate(self.mues):
            sc = self.engine.sc[m]
            own = self.own_at_mbs[i, sc]
            intf = base[sc] - (own if assoc[m] == mbs else 0.0)
            out[m] = spectral_rate(own, np.maximum(intf, 0.0), self.noise, self.bw)
        return out

    def served_rates(self, assoc: dict[int, int]) -> dict[int, float]:
        """Realized rate of every MUE under one association map."""
        mbs_direct = self.mbs_rates(assoc)
        flows, wired = self.shares(assoc)
        out: dict[int, float] = {}
        for m, a in assoc.items():
            if a == self.topology.mbs:
                out[m] = mbs_direct[m]
            else:
                out[m] = self.relay_factor * min(self.access[m][a], self.pipe(a, wired) / flows[a])
        return out


def run_off(
    topology: Topology,
    alloc: SubcarrierAllocation,
    ch: ChannelState,
    config: ScenarioConfig,
    traffic: TrafficSpec,
    mode: str = bh.OTA,
    c_bar_bps: float = 50e6,
    wired_policy: str = bh.EQUAL,
    uparams: UtilityParams | None = None,
    vacate: bool = True,
    half_duplex: bool = False,
    round_cap: int = 50,
) -> BaselineResult:
    """Greedy full offloading with perfect information.

    Synchronous best-response on associations until a fixed point or the
    round cap; on a cycle the best-seen association (by total rate) is kept
    and the result is flagged unstabilized. A final walk-back pass returns
    any offloaded user whose rate dropped below its macro-only baseline.

    `half_duplex` charges offloaded traffic the same 1/2 relaying factor the
    rate-splitting fine stream pays; by default offloaded users are served
    like small-cell users, at the plain min of access rate and backhaul share.
    """
    uparams = uparams or UtilityParams()
    st = _OffloadState(
        topology, alloc, ch, config, mode, c_bar_bps, wired_policy, vacate, half_duplex
    )
    mbs = topology.mbs

    assoc = {m: mbs for m in st.mues}
    cla_rates = st.mbs_rates(assoc)

    seen: set[tuple[int, ...]] = set()
    best_assoc, best_total = dict(assoc), sum(st.served_rates(assoc).values())
    stabilized = False
    rounds = 0
    while rounds < round_cap:
        rounds += 1
        mbs_direct = st.mbs_rates(assoc)
        flows, wired = st.shares(assoc)
        new_assoc: dict[int, int] = {}
        for m in st.mues:
            options = [mbs_direct[m]]
            targets = [mbs]
            for s in st.sbss:
                denom = flows[s] + (0 if assoc[m] == s else 1)
                options.append(st.relay_factor * min(st.access[m][s], st.pipe(s, wired) / denom))
                targets.append(s)
            new_assoc[m] = targets[int(np.argmax(options))]
        if new_assoc == assoc:
            stabilized = True
            break
        assoc = new_assoc
        total = sum(st.served_rates(assoc).values())
        if total > best_total:
            best_assoc, best_total = dict(assoc), total
        key = tuple(assoc[m] for m in st.mues)
        if key in seen:
            break
        seen.add(key)
    if not stabilized:
        assoc = best_assoc

    # Walk back offloaded users that ended up below their macro-only rate.
    for _ in range(len(st.mues) + 1):
        rates = st.served_rates(assoc)
        violators = [m for m in st.mues if assoc[m] != mbs and rates[m] < cla_rates[m] - 1e-9]
        if not violators:
            break
        for m in violators:
            assoc[m] = mbs

    rates = st.served_rates(assoc)
    return _finish(
        OFF,
        rates,
        traffic,
        uparams,
        associations=dict(assoc),
        rounds=rounds,
        stabilized=stabilized,
    )
