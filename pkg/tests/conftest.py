import numpy as np
import pytest

from backhaulsim import (
    ExperimentConfig,
    GameParams,
    ScenarioConfig,
    TrafficSpec,
    UplinkGame,
    UtilityParams,
    assign_subcarriers,
    build_channel_state,
    generate_topology,
)


def small_scenario(**kw) -> ScenarioConfig:
    base = dict(sectors=1, mues_per_sector=3, sbss_per_sector=2, sues_per_sbs=1)
    base.update(kw)
    return ScenarioConfig(**base)


def build_world(scenario: ScenarioConfig, seed: int = 0):
    topo = generate_topology(scenario, seed=seed)
    alloc = assign_subcarriers(topo, scenario, seed=seed + 1)
    ch = build_channel_state(topo, scenario, seed=seed + 2)
    return topo, alloc, ch


@pytest.fixture
def tiny_world():
    scenario = small_scenario()
    return scenario, *build_world(scenario, seed=7)


@pytest.fixture
def tiny_game(tiny_world):
    scenario, topo, alloc, ch = tiny_world
    game = UplinkGame(
        topo,
        alloc,
        ch,
        scenario,
        TrafficSpec(),
        UtilityParams(),
        GameParams(),
        mode="ota",
    )
    return scenario, topo, alloc, ch, game


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
