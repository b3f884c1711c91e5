import math

import numpy as np
import pytest

from tsnsim import mobility as mob
from tsnsim.mobility import DistanceBin, HallBounds, MobilityError, Position, SpeedRange, WaypointState

GNB = Position(0.0, 0.0, 1.5)


def test_distance_bin_boundaries():
    assert mob.distance_bin(0) is DistanceBin.D1
    assert mob.distance_bin(85.0) is DistanceBin.D1
    assert mob.distance_bin(85.000001) is DistanceBin.D2
    assert mob.distance_bin(170.0) is DistanceBin.D2
    assert mob.distance_bin(255.0) is DistanceBin.D3
    assert mob.distance_bin(300) is DistanceBin.OUT_OF_RANGE
    with pytest.raises(MobilityError):
        mob.distance_bin(-1)


def test_distances_examples():
    assert mob.distances(Position(0, 0, 1.5), Position(0, 0, 8)) == (0.0, 6.5)
    assert mob.distances(Position(3, 4, 1.5), GNB) == (5.0, 5.0)
    d2, d3 = mob.distances(Position(30, 40, 1.5), Position(0, 0, 8))
    assert d2 == 50.0
    assert d3 == pytest.approx(math.sqrt(2542.25))
    assert round(d3, 4) == 50.4207


def test_straight_line_step():
    hall = HallBounds.square(260, GNB)
    st = WaypointState(Position(0, 0, 1.5), Position(10, 0, 1.5), speed=1.0)
    out = mob.advance(st, 1.0, hall, np.random.default_rng(0))
    assert out.current == Position(1.0, 0.0, 1.5)
    assert out.target == st.target


def test_exact_arrival_draws_new_target_same_tick():
    hall = HallBounds.square(260, GNB)
    st = WaypointState(Position(0, 0, 1.5), Position(2, 0, 1.5), speed=1.0)
    out = mob.advance(st, 2.0, hall, np.random.default_rng(0))
    assert out.current == Position(2, 0, 1.5)
    assert out.target != Position(2, 0, 1.5)
    assert 0.2 <= out.speed <= 1.5


def test_pause_at_waypoint():
    hall = HallBounds.square(260, GNB)
    st = WaypointState(Position(0, 0, 1.5), Position(1, 0, 1.5), speed=1.0)
    out = mob.advance(st, 2.0, hall, np.random.default_rng(0), pause=5.0)
    assert out.current == Position(1, 0, 1.5)
    assert out.pause_remaining == pytest.approx(4.0)
    out = mob.advance(out, 4.0, hall, np.random.default_rng(0), pause=5.0)
    assert out.pause_remaining == 0.0
    assert out.current == Position(1, 0, 1.5)


def test_long_trajectory_stays_in_bounds():
    rng = np.random.default_rng(42)
    hall = HallBounds.square(260, GNB, max_distance=250)
    speeds = SpeedRange()
    st = mob.initial_state(hall, 1.5, speeds, rng)
    prev = st.current
    dt = 1.0
    # 10^6 s at 1 s steps would take minutes; 10^5 steps of 10 s cover it
    for _ in range(100_000):
        st = mob.advance(st, 10 * dt, hall, rng, speeds)
        assert 0.2 <= st.speed <= 1.5
        assert hall.contains(st.current)
        assert math.hypot(st.current.x - prev.x, st.current.y - prev.y) <= 1.5 * 10 * dt + 1e-9
        prev = st.current


def test_replay_is_deterministic():
    def trace(seed):
        rng = np.random.default_rng(seed)
        hall = HallBounds.square(260, GNB)
        st = mob.initial_state(hall, 1.5, SpeedRange(), rng)
        out = []
        for _ in range(500):
            st = mob.advance(st, 0.1, hall, rng)
            out.append(st.current)
        return out

    assert trace(7) == trace(7)
    assert trace(7) != trace(8)


def test_hall_feasibility():
    with pytest.raises(MobilityError):
        HallBounds(300, 400, 300, 400, GNB, max_distance=10)
    with pytest.raises(MobilityError):
        HallBounds(0, 0, 0, 1, GNB)
    with pytest.raises(MobilityError):
        SpeedRange(1.5, 0.2)


def test_ring_position():
    p = mob.ring_position(Position(0, 0, 8), 127.5, 1.5)
    assert mob.distances(p, Position(0, 0, 8))[0] == 127.5
    assert mob.distance_bin(127.5) is DistanceBin.D2


def test_ring_centers_fall_in_their_bins():
    for name, d in mob.RING_CENTERS.items():
        assert mob.distance_bin(d).value == name


def test_trace_row_format():
    row = mob.trace_row(0.1, Position(3, 4, 1.5), GNB)
    assert row[0] == "0.100000"
    assert row[4] == "5.000000"
    assert row[-1] == "d1"
