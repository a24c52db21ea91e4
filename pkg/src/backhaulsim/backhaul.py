"""Backhaul capacity bookkeeping.

Each SBS forwards its carried flows (its own small-cell users plus any macro
users relaying through it) over a wired pipe, an over-the-air uplink to the
MBS, or a hybrid of both. The operator budget caps the summed wired
capacities; per-flow fractions split whatever the chosen pipe offers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

WIRED = "wrd"
OTA = "ota"
HYBRID = "hyb"
MODES = (OTA, WIRED, HYBRID)

EQUAL = "equal"
PROPORTIONAL_LOAD = "proportional-load"
WIRED_POLICIES = (EQUAL, PROPORTIONAL_LOAD)


def allocate_wired_capacity(
    sbs_ids: Sequence[int],
    c_bar_bps: float,
    policy: str = EQUAL,
    loads: dict[int, float] | None = None,
) -> dict[int, float]:
    """Split the operator's wired budget across SBSs.

    `equal` gives every SBS the same slice; `proportional-load` weights by the
    supplied per-SBS load (flow counts), falling back to an equal split when
    all loads are zero.
    """
    if c_bar_bps < 0:
        raise ValueError("wired budget must be non-negative")
    if not sbs_ids:
        return {}
    if policy == EQUAL:
        share = c_bar_bps / len(sbs_ids)
        return {s: share for s in sbs_ids}
    if policy == PROPORTIONAL_LOAD:
        if loads is None:
            raise ValueError("proportional-load policy needs per-SBS loads")
        total = sum(loads.get(s, 0.0) for s in sbs_ids)
        if total <= 0:
            share = c_bar_bps / len(sbs_ids)
            return {s: share for s in sbs_ids}
        return {s: c_bar_bps * loads.get(s, 0.0) / total for s in sbs_ids}
    raise ValueError(f"unknown wired capacity policy {policy!r}")


def allocate_flow_shares(flows: Iterable[int]) -> dict[int, float]:
    """Equal fractions over the flows currently traversing one SBS."""
    flow_list = list(flows)
    if not flow_list:
        return {}
    frac = 1.0 / len(flow_list)
    return {f: frac for f in flow_list}


@dataclass
class BackhaulView:
    """Snapshot of backhaul state for one iteration.

    `shares[s][flow]` is the fraction of SBS s's pipe granted to a flow
    (small-cell user or relayed macro user). Fractions per SBS sum to one
    whenever the SBS carries any flow.
    """

    mode: str
    c_bar_bps: float
    wired_capacity_bps: dict[int, float]
    ota_rate_bps: dict[int, float]
    shares: dict[int, dict[int, float]] = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown backhaul mode {self.mode!r}")

    def set_flows(self, flows_per_sbs: dict[int, Iterable[int]]) -> None:
        self.shares = {s: allocate_flow_shares(flows) for s, flows in flows_per_sbs.items()}

    def fraction(self, sbs: int, flow: int) -> float:
        try:
            return self.shares[sbs][flow]
        except KeyError:
            raise KeyError(f"flow {flow} is not registered at SBS {sbs}") from None

    def wired_share(self, sbs: int, flow: int) -> float:
        return self.fraction(sbs, flow) * self.wired_capacity_bps[sbs]

    def ota_share(self, sbs: int, flow: int) -> float:
        return self.fraction(sbs, flow) * self.ota_rate_bps[sbs]

    def share(self, sbs: int, flow: int) -> float | tuple[float, float]:
        """Backhaul bits/s granted to one flow; hybrid returns both branches."""
        if self.mode == WIRED:
            return self.wired_share(sbs, flow)
        if self.mode == OTA:
            return self.ota_share(sbs, flow)
        return (self.ota_share(sbs, flow), self.wired_share(sbs, flow))

    def effective_share(self, sbs: int, flow: int) -> float:
        """Single share used for rate and delay; hybrid takes the better branch.

        The fine rate is monotone in the share, so per-flow max simultaneously
        maximizes the relayed rate and minimizes the backhaul queueing delay.
        """
        s = self.share(sbs, flow)
        return max(s) if isinstance(s, tuple) else s
