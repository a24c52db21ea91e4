import numpy as np
import pytest
from hypothesis import given, strategies as st

from backhaulsim import ScenarioConfig, build_channel_state, dbm_to_watts, pathloss_db
from backhaulsim.channel import noise_power_w

from conftest import build_world, small_scenario


def test_pathloss_reference_points():
    assert pathloss_db(1.0) == pytest.approx(15.3)
    assert pathloss_db(10.0) == pytest.approx(52.9)
    assert pathloss_db(100.0) == pytest.approx(90.5)


def test_pathloss_rejects_nonpositive_distance():
    with pytest.raises(ValueError):
        pathloss_db(0.0)
    with pytest.raises(ValueError):
        pathloss_db(-3.0)


@given(st.floats(min_value=1.0, max_value=1e4), st.floats(min_value=1.001, max_value=4.0))
def test_pathloss_monotone_in_distance(d, factor):
    assert pathloss_db(d * factor) > pathloss_db(d)


def test_dbm_conversion():
    assert dbm_to_watts(0.0) == pytest.approx(1e-3)
    assert dbm_to_watts(30.0) == pytest.approx(1.0)
    assert dbm_to_watts(21.0) == pytest.approx(10 ** (21 / 10) * 1e-3)


def test_noise_power_tracks_bandwidth():
    # -174 dBm/Hz over one subcarrier of a 5 MHz / 16 carrier grid.
    w_sc = 5e6 / 16
    expected = 10 ** (-174 / 10) * 1e-3 * w_sc
    assert noise_power_w(w_sc) == pytest.approx(expected, rel=1e-12)


def test_deterministic_gain_at_known_distance():
    # With shadowing and fading disabled the gain is pure pathloss.
    scenario = small_scenario(shadowing_std_db=0.0, rayleigh_fading=False)
    topo, alloc, ch = build_world(scenario, seed=3)
    m = topo.mue_ids[0]
    d = float(np.linalg.norm(topo.positions[m] - topo.positions[topo.mbs]))
    gain = ch.gains[m, ch.rx_row[topo.mbs], 0]
    assert gain == pytest.approx(10 ** (-pathloss_db(d) / 10), rel=1e-12)
    # All subcarriers identical without fading.
    assert np.allclose(ch.gains[m, ch.rx_row[topo.mbs], :], gain)


def test_gain_reference_value_at_ten_meters():
    assert 10 ** (-pathloss_db(10.0) / 10) == pytest.approx(10 ** (-5.29))


def test_channel_state_deterministic_under_seed():
    scenario = small_scenario()
    topo, alloc, _ = build_world(scenario, seed=5)
    a = build_channel_state(topo, scenario, seed=42)
    b = build_channel_state(topo, scenario, seed=42)
    c = build_channel_state(topo, scenario, seed=43)
    assert np.array_equal(a.gains, b.gains)
    assert not np.array_equal(a.gains, c.gains)


def test_gains_positive_and_finite(tiny_world):
    _, _, _, ch = tiny_world
    assert np.isfinite(ch.gains).all()
    assert (ch.gains > 0).all()


def test_monotone_decay_without_randomness():
    scenario = ScenarioConfig(
        sectors=1,
        mues_per_sector=30,
        sbss_per_sector=0,
        sues_per_sbs=0,
        shadowing_std_db=0.0,
        rayleigh_fading=False,
    )
    topo, alloc, ch = build_world(scenario, seed=11)
    mbs_row = ch.rx_row[topo.mbs]
    dist = np.array([np.linalg.norm(topo.positions[m] - topo.positions[topo.mbs]) for m in topo.mue_ids])
    gain = np.array([ch.gains[m, mbs_row, 0] for m in topo.mue_ids])
    order = np.argsort(dist)
    assert (np.diff(gain[order]) < 0).all()


def _pathloss_floor(topo, ch):
    """Per-(tx, rx, subcarrier) pathloss-only gain, clamp included."""
    from backhaulsim.channel import MIN_LINK_DISTANCE_M

    rx_nodes = sorted(ch.rx_row, key=ch.rx_row.get)
    d = np.linalg.norm(
        topo.positions[:, None, :] - topo.positions[rx_nodes][None, :, :], axis=2
    )
    d = np.maximum(d, MIN_LINK_DISTANCE_M)
    pl = 15.3 + 37.6 * np.log10(d)
    return 10 ** (-pl / 10)


def test_shadowing_std_over_many_links():
    # Fading off isolates shadowing as the only random factor per link.
    samples = []
    for seed in range(40):
        scenario = small_scenario(rayleigh_fading=False, seed=seed)
        topo, _, ch = build_world(scenario, seed=seed)
        db = 10 * np.log10(_pathloss_floor(topo, ch) / ch.gains[:, :, 0])
        samples.append(db.ravel())
    shadow = np.concatenate(samples)
    assert abs(shadow.mean()) < 1.5
    assert shadow.std() == pytest.approx(10.0, abs=1.2)


def test_fading_unit_mean_over_many_links():
    # Shadowing off isolates fading; every tensor entry is one sample.
    scenario = ScenarioConfig(
        sectors=3, mues_per_sector=30, sbss_per_sector=15, sues_per_sbs=2, shadowing_std_db=0.0
    )
    topo, _, ch = build_world(scenario, seed=17)
    fading = ch.gains / _pathloss_floor(topo, ch)[:, :, None]
    assert fading.size > 1e5
    assert fading.mean() == pytest.approx(1.0, abs=0.01)
