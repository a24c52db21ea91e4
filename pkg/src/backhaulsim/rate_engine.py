"""Achievable rates for every uplink flavor.

All rates are Shannon sums over a node's subcarriers, in bits/s:

    sum_n  W_sc * log2(1 + signal_n / (noise + interference_n))

Macro users either send a single stream decoded at the MBS (classical), or
split their power into a coarse stream (decoded only at the MBS, with the
fine power acting as self-interference) and a fine stream (decoded by a
nearby SBS, relayed decode-and-forward over the backhaul, half-duplex halves
the relayed throughput). Small-cell users are co-channel underlay
interferers; SBS backhaul transmissions live on their own pool and only
interfere with each other.

The engine precomputes per-drop constants (small-cell user contributions,
over-the-air backhaul rates) and offers readable per-link operations; batch
evaluation across whole action sets lives in the game layer.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Mapping

import numpy as np

from .backhaul import BackhaulView
from .channel import ChannelState, dbm_to_watts
from .topology import ScenarioConfig, SubcarrierAllocation, Topology

if TYPE_CHECKING:  # only for annotations; actions are plain attribute bags
    from .game import Action

IDENTITY = "identity"
ADD_DIRECT = "add-direct"
COMBINERS = (IDENTITY, ADD_DIRECT)


def spectral_rate(signal_w, interference_w, noise_w: float, subcarrier_bw_hz: float) -> float:
    """Shannon sum over subcarriers, bits/s. Arrays are aligned per subcarrier."""
    sig = np.asarray(signal_w, dtype=float)
    intf = np.asarray(interference_w, dtype=float)
    if (sig < 0).any() or (intf < 0).any() or noise_w < 0:
        raise ValueError("powers must be non-negative")
    return float(subcarrier_bw_hz * np.sum(np.log2(1.0 + sig / (noise_w + intf))))


def combine_g(relayed_bps: float, direct_fine_bps: float, mode: str = IDENTITY) -> float:
    """Combine the relayed fine stream with the copy overheard at the MBS.

    `identity` trusts the relay alone; `add-direct` credits half of the
    direct fine-stream rate on top, mirroring the half-duplex split.
    """
    if mode == IDENTITY:
        return relayed_bps
    if mode == ADD_DIRECT:
        return relayed_bps + 0.5 * direct_fine_bps
    raise ValueError(f"unknown combiner mode {mode!r}")


@dataclass(frozen=True)
class RateBreakdown:
    """Per-MUE rate components, bits/s."""

    coarse_bps: float
    fine_mbs_bps: float
    fine_sbs_bps: float
    backhaul_share_bps: float
    fine_total_bps: float
    total_bps: float


class RateEngine:
    """Rate evaluation bound to one drop (topology + allocation + channel)."""

    def __init__(
        self,
        topology: Topology,
        alloc: SubcarrierAllocation,
        ch: ChannelState,
        config: ScenarioConfig,
    ):
        self.topology = topology
        self.alloc = alloc
        self.ch = ch
        self.mue_power_w = dbm_to_watts(config.mue_power_dbm)
        self.sue_power_w = dbm_to_watts(config.mue_power_dbm)
        self.sbs_power_w = dbm_to_watts(config.sbs_power_dbm)

        self.sc: dict[int, np.ndarray] = {}
        for table in (alloc.mue_subcarriers, alloc.sue_subcarriers, alloc.sbs_subcarriers):
            for node, scs in table.items():
                self.sc[node] = np.asarray(scs, dtype=int)

        n_rx = len(ch.rx_row)
        n_sc = alloc.n_total

        # Small-cell users always transmit at full power on their subcarriers.
        self.sue_base = np.zeros((n_rx, n_sc))
        for k in topology.sue_ids:
            sck = self.sc[k]
            if sck.size:
                self.sue_base[:, sck] += ch.gains[k, :, sck].T * (self.sue_power_w / sck.size)

        # Over-the-air backhaul rates depend only on SBS transmissions, which
        # are static for a drop: every SBS drives its backhaul subcarriers at
        # full power and interferes with the others at the MBS.
        mbs_row = ch.rx_row[topology.mbs]
        backhaul_rx = np.zeros(n_sc)
        for s in topology.sbs_ids:
            scs = self.sc[s]
            if scs.size:
                backhaul_rx[scs] += ch.gains[s, mbs_row, scs] * (self.sbs_power_w / scs.size)
        self.ota_rate_bps: dict[int, float] = {}
        for s in topology.sbs_ids:
            scs = self.sc[s]
            if scs.size == 0:
                self.ota_rate_bps[s] = 0.0
                continue
            own = ch.gains[s, mbs_row, scs] * (self.sbs_power_w / scs.size)
            self.ota_rate_bps[s] = spectral_rate(
                own, backhaul_rx[scs] - own, ch.noise_per_subcarrier_w, ch.subcarrier_bw_hz
            )

    # -- interference assembly ------------------------------------------------

    def _per_subcarrier_power(self, node: int, total_power_w: float) -> float:
        return total_power_w / self.sc[node].size

    def access_interference(
        self, rx: int, sc: np.ndarray, profile: Mapping[int, "Action"], exclude: int
    ) -> np.ndarray:
        """Access-plane co-channel power at a receiver, excluding one transmitter.

        Macro users contribute their whole transmit power (coarse plus fine
        superimposed); small-cell users contribute their static transmissions.
        """
        row = self.ch.rx_row[rx]
        out = self.sue_base[row, sc].copy()
        if exclude in self.alloc.sue_subcarriers:
            sck = self.sc[exclude]
            mask = np.isin(sc, sck)
            if mask.any():
                out[mask] -= self.ch.gains[exclude, row, sc[mask]] * self._per_subcarrier_power(
                    exclude, self.sue_power_w
                )
        for i, act in profile.items():
            if i == exclude:
                continue
            sci = self.sc[i]
            mask = np.isin(sc, sci)
            if mask.any():
                out[mask] += self.ch.gains[i, row, sc[mask]] * (act.power_w / sci.size)
        return np.maximum(out, 0.0)

    # -- per-link rates --------------------------------------------------------

    def cla_mue_rate(self, m: int, profile: Mapping[int, "Action"]) -> float:
        """Classical single-stream rate of a macro user at the MBS."""
        act = profile[m]
        sc = self.sc[m]
        p = act.power_w / sc.size
        sig = self.ch.gain(m, self.topology.mbs)[sc] * p
        intf = self.access_interference(self.topology.mbs, sc, profile, m)
        return spectral_rate(sig, intf, self.ch.noise_per_subcarrier_w, self.ch.subcarrier_bw_hz)

    def sue_access_rate(self, k: int, profile: Mapping[int, "Action"]) -> float:
        """Small-cell user rate on the access hop to its serving SBS."""
        s = self.topology.serving_sbs[k]
        sc = self.sc[k]
        p = self._per_subcarrier_power(k, self.sue_power_w)
        sig = self.ch.gain(k, s)[sc] * p
        intf = self.access_interference(s, sc, profile, k)
        return spectral_rate(sig, intf, self.ch.noise_per_subcarrier_w, self.ch.subcarrier_bw_hz)

    def cla_sue_rate(self, k: int, profile: Mapping[int, "Action"], backhaul_share_bps: float) -> float:
        """Served small-cell user rate: access hop capped by its backhaul share."""
        if backhaul_share_bps < 0:
            raise ValueError("backhaul share must be non-negative")
        return min(self.sue_access_rate(k, profile), backhaul_share_bps)

    def coarse_rate(self, m: int, profile: Mapping[int, "Action"]) -> float:
        """Coarse-stream rate at the MBS; own fine power is self-interference."""
        act = profile[m]
        sc = self.sc[m]
        p = act.power_w / sc.size
        own = self.ch.gain(m, self.topology.mbs)[sc] * p
        intf = self.access_interference(self.topology.mbs, sc, profile, m)
        return spectral_rate(
            (1.0 - act.fine_fraction) * own,
            act.fine_fraction * own + intf,
            self.ch.noise_per_subcarrier_w,
            self.ch.subcarrier_bw_hz,
        )

    def fine_mbs_rate(self, m: int, profile: Mapping[int, "Action"]) -> float:
        """Fine-stream rate as overheard directly at the MBS."""
        act = profile[m]
        sc = self.sc[m]
        p = act.power_w / sc.size
        own = self.ch.gain(m, self.topology.mbs)[sc] * p
        intf = self.access_interference(self.topology.mbs, sc, profile, m)
        return spectral_rate(
            act.fine_fraction * own, intf, self.ch.noise_per_subcarrier_w, self.ch.subcarrier_bw_hz
        )

    def fine_sbs_rate(self, m: int, s: int, profile: Mapping[int, "Action"]) -> float:
        """Fine-stream rate decoded at a relay SBS; own coarse power interferes."""
        act = profile[m]
        sc = self.sc[m]
        p = act.power_w / sc.size
        own = self.ch.gain(m, s)[sc] * p
        intf = self.access_interference(s, sc, profile, m)
        return spectral_rate(
            act.fine_fraction * own,
            (1.0 - act.fine_fraction) * own + intf,
            self.ch.noise_per_subcarrier_w,
            self.ch.subcarrier_bw_hz,
        )

    # -- composition -----------------------------------------------------------

    def fine_total_rate(
        self,
        m: int,
        profile: Mapping[int, "Action"],
        view: BackhaulView,
        combiner: str = IDENTITY,
    ) -> tuple[float, float]:
        """Delivered fine-stream rate and the backhaul share it rode on.

        Decode-and-forward over two half-duplex hops: half the min of the
        access-hop rate and the flow's backhaul share, then combined with the
        overheard direct copy per the configured combiner.
        """
        act = profile[m]
        if act.relay is None or act.fine_fraction == 0.0:
            return 0.0, 0.0
        share = view.effective_share(act.relay, m)
        relayed = 0.5 * min(self.fine_sbs_rate(m, act.relay, profile), share)
        direct = self.fine_mbs_rate(m, profile) if combiner == ADD_DIRECT else 0.0
        return combine_g(relayed, direct, combiner), share

    def total_rate(
        self,
        m: int,
        profile: Mapping[int, "Action"],
        view: BackhaulView,
        combiner: str = IDENTITY,
    ) -> RateBreakdown:
        """Full per-MUE decomposition: coarse plus delivered fine."""
        act = profile[m]
        coarse = self.coarse_rate(m, profile)
        if act.relay is None or act.fine_fraction == 0.0:
            return RateBreakdown(coarse, 0.0, 0.0, 0.0, 0.0, coarse)
        fine_mbs = self.fine_mbs_rate(m, profile)
        fine_sbs = self.fine_sbs_rate(m, act.relay, profile)
        share = view.effective_share(act.relay, m)
        relayed = 0.5 * min(fine_sbs, share)
        direct = fine_mbs if combiner == ADD_DIRECT else 0.0
        fine_total = combine_g(relayed, direct, combiner)
        return RateBreakdown(
            coarse_bps=coarse,
            fine_mbs_bps=fine_mbs,
            fine_sbs_bps=fine_sbs,
            backhaul_share_bps=share,
            fine_total_bps=fine_total,
            total_bps=coarse + fine_total,
        )
