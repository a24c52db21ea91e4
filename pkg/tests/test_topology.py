import math

import numpy as np
import pytest

from backhaulsim import ScenarioConfig, assign_subcarriers, generate_topology
from backhaulsim.topology import ConfigurationError, distance

from conftest import small_scenario


def test_node_counts_and_roles():
    cfg = ScenarioConfig(sectors=3, mues_per_sector=10, sbss_per_sector=8, sues_per_sbs=1)
    topo = generate_topology(cfg, seed=0)
    assert topo.mbs == 0
    assert topo.tiers[0] == "MBS"
    assert len(topo.sbs_ids) == 24
    assert len(topo.mue_ids) == 30
    assert len(topo.sue_ids) == 24
    assert topo.n_nodes == 1 + 24 + 30 + 24
    assert set(topo.serving_sbs) == set(topo.sue_ids)
    assert set(topo.serving_sbs.values()) <= set(topo.sbs_ids)


def test_sector_wedges_and_annulus():
    cfg = ScenarioConfig(sectors=3, mues_per_sector=40, sbss_per_sector=10)
    topo = generate_topology(cfg, seed=3)
    arc = 2 * math.pi / 3
    for n in list(topo.mue_ids) + list(topo.sbs_ids):
        x, y = topo.positions[n]
        r = math.hypot(x, y)
        assert cfg.min_mbs_distance_m <= r <= cfg.macro_radius_m
        ang = math.atan2(y, x) % (2 * math.pi)
        sector = topo.sector_of[n]
        assert sector * arc <= ang <= (sector + 1) * arc


def test_sues_stay_within_small_cell_radius():
    cfg = small_scenario(sues_per_sbs=4)
    topo = generate_topology(cfg, seed=11)
    for k in topo.sue_ids:
        s = topo.serving_sbs[k]
        assert distance(topo, k, s) <= cfg.small_cell_radius_m + 1e-9
        assert topo.sector_of[k] == topo.sector_of[s]


def test_subcarrier_pools_are_disjoint():
    cfg = ScenarioConfig()
    topo = generate_topology(cfg, seed=5)
    alloc = assign_subcarriers(topo, cfg, seed=5)
    assert alloc.n_mue_pool == 8
    assert alloc.n_total == 16
    access = set(range(8))
    backhaul = set(range(8, 16))
    for m in topo.mue_ids:
        assert set(alloc.of(m)) <= access
        assert len(alloc.of(m)) >= 1
    for k in topo.sue_ids:
        assert set(alloc.of(k)) <= access
    for s in topo.sbs_ids:
        assert set(alloc.of(s)) <= backhaul


def test_access_pool_fully_dealt_per_sector():
    # 10 MUEs share 8 subcarriers in each sector: every subcarrier is used and
    # every user holds exactly one.
    cfg = ScenarioConfig()
    topo = generate_topology(cfg, seed=9)
    alloc = assign_subcarriers(topo, cfg, seed=9)
    for sector in range(cfg.sectors):
        held = [alloc.of(m) for m in topo.mue_ids if topo.sector_of[m] == sector]
        assert all(len(h) == 1 for h in held)
        assert set().union(*held) == set(range(8))


def test_generation_is_seed_deterministic():
    cfg = small_scenario()
    a = generate_topology(cfg, seed=42)
    b = generate_topology(cfg, seed=42)
    c = generate_topology(cfg, seed=43)
    assert np.array_equal(a.positions, b.positions)
    assert not np.array_equal(a.positions, c.positions)
    alloc_a = assign_subcarriers(a, cfg, seed=42)
    alloc_b = assign_subcarriers(b, cfg, seed=42)
    assert alloc_a.mue_subcarriers == alloc_b.mue_subcarriers


def test_allocation_raises_for_unknown_node():
    cfg = small_scenario()
    topo = generate_topology(cfg, seed=1)
    alloc = assign_subcarriers(topo, cfg, seed=1)
    with pytest.raises(KeyError):
        alloc.of(10_000)


@pytest.mark.parametrize(
    "kw",
    [
        {"macro_radius_m": -1.0},
        {"sectors": 0},
        {"mues_per_sector": -2},
        {"n_subcarriers": 0},
        {"n_mue_subcarriers": 0},
        {"n_mue_subcarriers": 17},
        {"system_bandwidth_hz": 0.0},
        {"min_mbs_distance_m": 500.0},
    ],
)
def test_validate_rejects_bad_configs(kw):
    with pytest.raises(ConfigurationError):
        ScenarioConfig(**kw).validate()
