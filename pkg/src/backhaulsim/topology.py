"""Network geometry for a sectorized two-tier uplink.

One macro base station sits at the origin of a circular region split into
equal angular sectors. Each sector holds uniformly placed macro users and
small-cell base stations; every small cell serves its own users placed
uniformly inside a disc around it. Subcarriers are dealt round-robin inside
each sector and the full pool is reused across sectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

MBS = "MBS"
SBS = "SBS"
MUE = "MUE"
SUE = "SUE"


class ConfigurationError(ValueError):
    """Raised when a scenario or experiment configuration is structurally invalid."""


@dataclass(frozen=True)
class ScenarioConfig:
    """Deployment and physical-layer parameters for one scenario.

    Counts are per sector for MUEs and SBSs and per SBS for SUEs. The
    published evaluation setup caps deployments at 30 MUEs and 15 SBSs per
    sector; the generator itself accepts any non-negative counts.
    """

    macro_radius_m: float = 400.0
    small_cell_radius_m: float = 50.0
    sectors: int = 3
    mues_per_sector: int = 10
    sbss_per_sector: int = 8
    sues_per_sbs: int = 1
    n_subcarriers: int = 16
    n_mue_subcarriers: int = 8
    system_bandwidth_hz: float = 5e6
    carrier_freq_hz: float = 1.85e9  # informational; the pathloss law is distance-only
    mue_power_dbm: float = 21.0
    sbs_power_dbm: float = 30.0
    shadowing_std_db: float = 10.0
    rayleigh_fading: bool = True
    min_mbs_distance_m: float = 10.0
    seed: int = 0

    def validate(self) -> None:
        if self.macro_radius_m <= 0 or self.small_cell_radius_m <= 0:
            raise ConfigurationError("radii must be positive")
        if self.sectors < 1:
            raise ConfigurationError("need at least one sector")
        if self.mues_per_sector < 0 or self.sbss_per_sector < 0 or self.sues_per_sbs < 0:
            raise ConfigurationError("node counts must be non-negative")
        if self.n_subcarriers < 1:
            raise ConfigurationError("need at least one subcarrier")
        if not 1 <= self.n_mue_subcarriers <= self.n_subcarriers:
            raise ConfigurationError("access pool must satisfy 1 <= n_mue_subcarriers <= n_subcarriers")
        if self.system_bandwidth_hz <= 0:
            raise ConfigurationError("system bandwidth must be positive")
        if not 0 < self.min_mbs_distance_m < self.macro_radius_m:
            raise ConfigurationError("min MBS clearance must lie inside the macro radius")

    def replace(self, **kw) -> "ScenarioConfig":
        current = {f.name: getattr(self, f.name) for f in fields(self)}
        current.update(kw)
        return ScenarioConfig(**current)


@dataclass(frozen=True)
class Topology:
    """Node positions and roles. Node ids are dense ints; the MBS is id 0."""

    positions: np.ndarray  # (n_nodes, 2), meters
    tiers: tuple[str, ...]
    sector_of: tuple[int, ...]  # -1 for the MBS
    mbs: int
    sbs_ids: tuple[int, ...]
    mue_ids: tuple[int, ...]
    sue_ids: tuple[int, ...]
    serving_sbs: dict[int, int] = field(default_factory=dict)  # SUE id -> SBS id

    @property
    def n_nodes(self) -> int:
        return self.positions.shape[0]

    def sues_of(self, sbs_id: int) -> tuple[int, ...]:
        return tuple(k for k, s in self.serving_sbs.items() if s == sbs_id)


@dataclass(frozen=True)
class SubcarrierAllocation:
    """Subcarrier index sets per node.

    Indices 0 .. n_mue_pool-1 form the access pool (macro users and small-cell
    users), the remainder is the backhaul pool (SBS uplinks to the MBS).
    """

    mue_subcarriers: dict[int, tuple[int, ...]]
    sue_subcarriers: dict[int, tuple[int, ...]]
    sbs_subcarriers: dict[int, tuple[int, ...]]
    n_mue_pool: int
    n_total: int

    def of(self, node_id: int) -> tuple[int, ...]:
        for table in (self.mue_subcarriers, self.sue_subcarriers, self.sbs_subcarriers):
            if node_id in table:
                return table[node_id]
        raise KeyError(f"node {node_id} has no subcarrier assignment")


def distance(topology: Topology, a: int, b: int) -> float:
    """Euclidean distance in meters between two nodes."""
    d = topology.positions[a] - topology.positions[b]
    return float(math.hypot(d[0], d[1]))


def _uniform_annulus_sector(rng, n, r_min, r_max, ang_lo, ang_hi):
    # Area-uniform draw over the sector slice between two radii.
    u = rng.random(n)
    r = np.sqrt(u * (r_max**2 - r_min**2) + r_min**2)
    ang = rng.uniform(ang_lo, ang_hi, size=n)
    return np.column_stack([r * np.cos(ang), r * np.sin(ang)])


def generate_topology(config: ScenarioConfig, seed: int | None = None) -> Topology:
    """Place all nodes for one drop. Identical seeds give identical layouts."""
    config.validate()
    rng = np.random.default_rng(config.seed if seed is None else seed)
    arc = 2.0 * math.pi / config.sectors

    positions = [np.zeros(2)]
    tiers = [MBS]
    sector_of = [-1]

    sbs_ids: list[int] = []
    mue_ids: list[int] = []
    sue_ids: list[int] = []
    sbs_sector: list[int] = []

    # SBS transmit on the backhaul toward the MBS, so they get the same
    # clearance from the origin as MUEs to stay off the pathloss singularity.
    for sector in range(config.sectors):
        pts = _uniform_annulus_sector(
            rng, config.sbss_per_sector, config.min_mbs_distance_m,
            config.macro_radius_m, sector * arc, (sector + 1) * arc,
        )
        for p in pts:
            sbs_ids.append(len(tiers))
            positions.append(p)
            tiers.append(SBS)
            sector_of.append(sector)
            sbs_sector.append(sector)

    for sector in range(config.sectors):
        pts = _uniform_annulus_sector(
            rng, config.mues_per_sector, config.min_mbs_distance_m,
            config.macro_radius_m, sector * arc, (sector + 1) * arc,
        )
        for p in pts:
            mue_ids.append(len(tiers))
            positions.append(p)
            tiers.append(MUE)
            sector_of.append(sector)

    serving: dict[int, int] = {}
    for i, s in enumerate(sbs_ids):
        center = positions[s]
        u = rng.random(config.sues_per_sbs)
        r = config.small_cell_radius_m * np.sqrt(u)
        ang = rng.uniform(0.0, 2.0 * math.pi, size=config.sues_per_sbs)
        for j in range(config.sues_per_sbs):
            k = len(tiers)
            sue_ids.append(k)
            positions.append(center + np.array([r[j] * math.cos(ang[j]), r[j] * math.sin(ang[j])]))
            tiers.append(SUE)
            sector_of.append(sbs_sector[i])
            serving[k] = s

    return Topology(
        positions=np.array(positions),
        tiers=tuple(tiers),
        sector_of=tuple(sector_of),
        mbs=0,
        sbs_ids=tuple(sbs_ids),
        mue_ids=tuple(mue_ids),
        sue_ids=tuple(sue_ids),
        serving_sbs=serving,
    )


def _deal(rng, node_ids: list[int], pool: np.ndarray) -> dict[int, list[int]]:
    """Round-robin deal of a subcarrier pool to nodes.

    Fewer nodes than subcarriers: every subcarrier is handed out and sets are
    disjoint. More nodes than subcarriers: each node gets one subcarrier and
    reuse is spread as evenly as possible.
    """
    out: dict[int, list[int]] = {n: [] for n in node_ids}
    if not node_ids or pool.size == 0:
        return out
    order = pool[rng.permutation(pool.size)]
    if len(node_ids) <= order.size:
        for j, sc in enumerate(order):
            out[node_ids[j % len(node_ids)]].append(int(sc))
    else:
        for j, node in enumerate(node_ids):
            out[node].append(int(order[j % order.size]))
    return out


def assign_subcarriers(topology: Topology, config: ScenarioConfig, seed: int | None = None) -> SubcarrierAllocation:
    """Deal access subcarriers to MUEs and SUEs and backhaul subcarriers to SBSs.

    Deals are per sector; all sectors reuse the same pools. Small-cell users
    share the access pool with macro users (co-channel underlay), which is what
    makes them cross-tier interferers.
    """
    config.validate()
    rng = np.random.default_rng(config.seed if seed is None else seed)
    access_pool = np.arange(config.n_mue_subcarriers)
    backhaul_pool = np.arange(config.n_mue_subcarriers, config.n_subcarriers)

    mue_sets: dict[int, tuple[int, ...]] = {}
    sue_sets: dict[int, tuple[int, ...]] = {}
    sbs_sets: dict[int, tuple[int, ...]] = {}
    for sector in range(config.sectors):
        mues = [m for m in topology.mue_ids if topology.sector_of[m] == sector]
        sbss = [s for s in topology.sbs_ids if topology.sector_of[s] == sector]
        sues = [k for k in topology.sue_ids if topology.sector_of[k] == sector]
        for node, scs in _deal(rng, mues, access_pool).items():
            mue_sets[node] = tuple(sorted(scs))
        for node, scs in _deal(rng, sbss, backhaul_pool).items():
            sbs_sets[node] = tuple(sorted(scs))
        for node, scs in _deal(rng, sues, access_pool).items():
            sue_sets[node] = tuple(sorted(scs))

    return SubcarrierAllocation(
        mue_subcarriers=mue_sets,
        sue_subcarriers=sue_sets,
        sbs_subcarriers=sbs_sets,
        n_mue_pool=config.n_mue_subcarriers,
        n_total=config.n_subcarriers,
    )
