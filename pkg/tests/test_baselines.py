import math

import pytest

from backhaulsim import TrafficSpec, UtilityParams, run_cla, run_off, run_ru1
from backhaulsim.delay_engine import md1_delay
from backhaulsim.game import utility

from conftest import build_world, small_scenario


TRAFFIC = TrafficSpec()
UPARAMS = UtilityParams()


def _world(seed=0, **kw):
    scenario = small_scenario(mues_per_sector=6, sbss_per_sector=3, **kw)
    return scenario, *build_world(scenario, seed=seed)


def test_labels_and_shapes():
    scenario, topo, alloc, ch = _world()
    cla = run_cla(topo, alloc, ch, scenario, TRAFFIC, UPARAMS)
    ru1 = run_ru1(topo, alloc, ch, scenario, TRAFFIC, UPARAMS)
    off = run_off(topo, alloc, ch, scenario, TRAFFIC)
    assert (cla.label, ru1.label, off.label) == ("CLA", "RU1", "OFF")
    for res in (cla, ru1, off):
        assert set(res.rates_bps) == set(topo.mue_ids)
        assert set(res.delays_s) == set(topo.mue_ids)
        assert set(res.utilities) == set(topo.mue_ids)


def test_baseline_outputs_are_internally_consistent():
    scenario, topo, alloc, ch = _world(seed=3)
    res = run_cla(topo, alloc, ch, scenario, TRAFFIC, UPARAMS)
    for m in topo.mue_ids:
        r = res.rates_bps[m]
        assert res.delays_s[m] == pytest.approx(md1_delay(TRAFFIC.rho_bps, r))
        assert res.utilities[m] == pytest.approx(utility(r, res.delays_s[m], UPARAMS))


@pytest.mark.parametrize("vacate,half_duplex", [(True, False), (False, True), (False, False)])
def test_offloading_never_hurts_any_user(vacate, half_duplex):
    # Greedy offloading walks back anyone who ends up below their macro rate,
    # so per-user rates dominate the classical baseline under every flag mix.
    for seed in (0, 1, 2):
        scenario, topo, alloc, ch = _world(seed=seed)
        cla = run_cla(topo, alloc, ch, scenario, TRAFFIC, UPARAMS)
        off = run_off(
            topo, alloc, ch, scenario, TRAFFIC, vacate=vacate, half_duplex=half_duplex
        )
        for m in topo.mue_ids:
            assert off.rates_bps[m] >= cla.rates_bps[m] - 1e-9


def test_offloading_bookkeeping():
    scenario, topo, alloc, ch = _world(seed=5)
    off = run_off(topo, alloc, ch, scenario, TRAFFIC)
    assert set(off.associations) == set(topo.mue_ids)
    valid = {topo.mbs} | set(topo.sbs_ids)
    assert set(off.associations.values()) <= valid
    assert off.rounds >= 1
    assert isinstance(off.stabilized, bool)


def test_offloading_without_relays_is_classical():
    scenario = small_scenario(mues_per_sector=5, sbss_per_sector=0, sues_per_sbs=0)
    topo, alloc, ch = build_world(scenario, seed=2)
    cla = run_cla(topo, alloc, ch, scenario, TRAFFIC, UPARAMS)
    off = run_off(topo, alloc, ch, scenario, TRAFFIC)
    assert all(a == topo.mbs for a in off.associations.values())
    for m in topo.mue_ids:
        assert off.rates_bps[m] == pytest.approx(cla.rates_bps[m], rel=1e-12)


def test_offloading_backhaul_modes_run():
    scenario, topo, alloc, ch = _world(seed=7)
    for mode in ("ota", "wrd", "hyb"):
        res = run_off(topo, alloc, ch, scenario, TRAFFIC, mode=mode)
        assert all(math.isfinite(r) and r >= 0 for r in res.rates_bps.values())


def test_uniform_spreading_agrees_with_classical_on_one_subcarrier():
    # With a single shared subcarrier both schemes transmit identically.
    scenario = small_scenario(
        mues_per_sector=4, sbss_per_sector=0, sues_per_sbs=0,
        n_subcarriers=1, n_mue_subcarriers=1,
    )
    topo, alloc, ch = build_world(scenario, seed=4)
    cla = run_cla(topo, alloc, ch, scenario, TRAFFIC, UPARAMS)
    ru1 = run_ru1(topo, alloc, ch, scenario, TRAFFIC, UPARAMS)
    for m in topo.mue_ids:
        assert ru1.rates_bps[m] == pytest.approx(cla.rates_bps[m], rel=1e-12)


def test_uniform_spreading_differs_on_many_subcarriers():
    scenario, topo, alloc, ch = _world(seed=9)
    cla = run_cla(topo, alloc, ch, scenario, TRAFFIC, UPARAMS)
    ru1 = run_ru1(topo, alloc, ch, scenario, TRAFFIC, UPARAMS)
    assert any(
        abs(ru1.rates_bps[m] - cla.rates_bps[m]) > 1.0 for m in topo.mue_ids
    )
