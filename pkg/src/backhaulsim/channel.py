"""Link gains: distance pathloss, lognormal shadowing, block Rayleigh fading.

Gains are frozen for a whole drop (block fading). Receivers are the MBS and
the SBSs; transmitters are every node. A gain entry is

    10 ** (-(PL(d) + X) / 10) * F

with PL(d) = 15.3 + 37.6 log10(d) dB, X zero-mean Gaussian shadowing per
directed link, and F a unit-mean exponential fading power per link and
subcarrier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .topology import ScenarioConfig, Topology

# Below roughly a meter the pathloss law turns into an amplifier; link
# distances are clamped so indoor-close SUE links stay physical.
MIN_LINK_DISTANCE_M = 1.0

PATHLOSS_INTERCEPT_DB = 15.3
PATHLOSS_SLOPE_DB = 37.6

NOISE_PSD_DBM_PER_HZ = -174.0


def pathloss_db(d_m: float) -> float:
    """Distance pathloss in dB. Raises for non-positive distances."""
    if d_m <= 0:
        raise ValueError("pathloss needs a positive distance")
    return PATHLOSS_INTERCEPT_DB + PATHLOSS_SLOPE_DB * math.log10(d_m)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) * 1e-3


def noise_power_w(bandwidth_hz: float) -> float:
    """Thermal noise power in watts over the given bandwidth."""
    return dbm_to_watts(NOISE_PSD_DBM_PER_HZ) * bandwidth_hz


@dataclass(frozen=True)
class ChannelState:
    """Frozen per-drop link gains plus derived noise figures.

    `gains[t, r, n]` is the linear power gain from transmitter node t to
    receiver row r on subcarrier n; `rx_row` maps receiver node ids (MBS and
    SBSs) to rows.
    """

    gains: np.ndarray
    rx_row: dict[int, int]
    subcarrier_bw_hz: float
    noise_per_subcarrier_w: float

    def gain(self, tx: int, rx: int) -> np.ndarray:
        """Gain vector over all subcarriers for one directed link."""
        return self.gains[tx, self.rx_row[rx]]


def build_channel_state(topology: Topology, config: ScenarioConfig, seed: int | None = None) -> ChannelState:
    """Draw shadowing and fading for every link of a drop."""
    config.validate()
    rng = np.random.default_rng(config.seed if seed is None else seed)
    receivers = [topology.mbs, *topology.sbs_ids]
    n_nodes = topology.n_nodes
    n_rx = len(receivers)
    n_sc = config.n_subcarriers

    diff = topology.positions[:, None, :] - topology.positions[None, receivers, :]
    dist = np.maximum(np.hypot(diff[..., 0], diff[..., 1]), MIN_LINK_DISTANCE_M)
    pl_db = PATHLOSS_INTERCEPT_DB + PATHLOSS_SLOPE_DB * np.log10(dist)

    shadow_db = (
        rng.normal(0.0, config.shadowing_std_db, size=(n_nodes, n_rx))
        if config.shadowing_std_db > 0
        else np.zeros((n_nodes, n_rx))
    )
    fading = (
        rng.exponential(1.0, size=(n_nodes, n_rx, n_sc))
        if config.rayleigh_fading
        else np.ones((n_nodes, n_rx, n_sc))
    )

    gains = 10.0 ** (-(pl_db + shadow_db) / 10.0)
    gains = gains[:, :, None] * fading

    bw = config.system_bandwidth_hz / config.n_subcarriers
    return ChannelState(
        gains=gains,
        rx_row={node: row for row, node in enumerate(receivers)},
        subcarrier_bw_hz=bw,
        noise_per_subcarrier_w=noise_power_w(bw),
    )
