import math

import pytest
from hypothesis import given, strategies as st

from backhaulsim import TrafficSpec, delay_split, md1_delay, md1_oracle
from backhaulsim.delay_engine import delay_classical


def test_md1_closed_form_points():
    assert md1_delay(1.0, 2.0) == pytest.approx(0.25)
    assert md1_delay(1.0, 4.0) == pytest.approx(1.0 / 24.0)


def test_md1_unstable_and_degenerate():
    assert math.isinf(md1_delay(1.0, 1.0))
    assert math.isinf(md1_delay(2.0, 1.0))
    assert md1_delay(0.0, 5.0) == 0.0
    assert md1_delay(0.0, 0.0) == 0.0
    with pytest.raises(ValueError):
        md1_delay(-1.0, 2.0)
    with pytest.raises(ValueError):
        md1_delay(1.0, -2.0)


def test_classical_delay_at_typical_load():
    # 180 kb/s offered on a 360 kb/s pipe.
    assert delay_classical(180e3, 360e3) == pytest.approx(180e3 / (2 * 360e3 * 180e3))
    assert delay_classical(180e3, 360e3) == pytest.approx(1.3889e-6, rel=1e-4)


@given(
    rho=st.floats(min_value=1e2, max_value=1e6),
    margin=st.floats(min_value=1.01, max_value=100.0),
    extra=st.floats(min_value=1.001, max_value=10.0),
)
def test_md1_decreases_with_service_rate(rho, margin, extra):
    slow = md1_delay(rho, rho * margin)
    fast = md1_delay(rho, rho * margin * extra)
    assert fast < slow


def test_split_delay_takes_worst_parallel_stream():
    traffic = TrafficSpec(rho_bps=2.0)
    bd = delay_split(traffic, 0.5, coarse_rate=2.0, fine_access_rate=4.0, backhaul_share=4.0)
    assert bd.coarse_s == pytest.approx(0.25)
    assert bd.fine_access_s == pytest.approx(1.0 / 24.0)
    assert bd.fine_backhaul_s == pytest.approx(1.0 / 24.0)
    assert bd.fine_s == pytest.approx(1.0 / 12.0)
    assert bd.total_s == pytest.approx(0.25)
    assert not bd.unstable


def test_split_delay_zero_fine_fraction_ignores_fine_path():
    traffic = TrafficSpec(rho_bps=1.0)
    bd = delay_split(traffic, 0.0, coarse_rate=2.0, fine_access_rate=0.0, backhaul_share=0.0)
    assert bd.coarse_s == pytest.approx(0.25)
    assert bd.fine_access_s == 0.0
    assert bd.fine_backhaul_s == 0.0
    assert bd.total_s == pytest.approx(0.25)


def test_split_delay_unstable_branch_propagates():
    traffic = TrafficSpec(rho_bps=2.0)
    bd = delay_split(traffic, 0.5, coarse_rate=2.0, fine_access_rate=0.5, backhaul_share=4.0)
    assert math.isinf(bd.fine_access_s)
    assert bd.unstable


def test_split_delay_rejects_bad_fraction():
    with pytest.raises(ValueError):
        delay_split(TrafficSpec(), 1.5, 1.0, 1.0, 1.0)


@pytest.mark.parametrize("rho,expected", [(0.5, 0.5), (0.3, 0.3 / 1.4)])
def test_oracle_matches_closed_form(rho, expected):
    est = md1_oracle(rho, 1.0, n_packets=200_000, seed=4)
    assert est == pytest.approx(expected, rel=0.05)
    assert md1_delay(rho, 1.0) == pytest.approx(expected)


def test_oracle_rejects_unstable_queue():
    with pytest.raises(ValueError):
        md1_oracle(1.0, 1.0, 100)
    with pytest.raises(ValueError):
        md1_oracle(0.0, 1.0, 100)
