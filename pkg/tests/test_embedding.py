"""Delay embedding: window stacking, shifted pairs, trajectory stitching."""

import numpy as np
import pytest

import gridmodes as gm
from gridmodes.embedding import build_embedded_pair, embed_window
from gridmodes.errors import DataError
from gridmodes.trajectory import ChannelSchema, SteadyState, Trajectory


def _set(list_of_values, dt=0.1):
    schema = ChannelSchema.from_bus_ids([1])
    trajs = tuple(Trajectory(schema, dt, 0.0, np.asarray(v, dtype=float))
                  for v in list_of_values)
    return gm.TrajectorySet(trajs)


class TestEmbedWindow:
    def test_stacks_oldest_first(self):
        window = np.array([[1.0, 2.0], [3.0, 4.0]])  # columns are snapshots
        assert np.array_equal(embed_window(window, 2), [1.0, 3.0, 2.0, 4.0])

    def test_wrong_width_rejected(self):
        with pytest.raises(ValueError):
            embed_window(np.ones((2, 3)), 2)


class TestBuildEmbeddedPair:
    def test_hand_built_matrices(self):
        values = [[1.0, 2.0, 3.0, 4.0], [10.0, 20.0, 30.0, 40.0]]
        pair = build_embedded_pair(_set([values]), 2)
        x_expected = np.array([[1.0, 2.0],
                               [10.0, 20.0],
                               [2.0, 3.0],
                               [20.0, 30.0]])
        y_expected = np.array([[2.0, 3.0],
                               [20.0, 30.0],
                               [3.0, 4.0],
                               [30.0, 40.0]])
        assert np.array_equal(pair.x, x_expected)
        assert np.array_equal(pair.y, y_expected)
        assert pair.d == 2
        assert pair.n_channels == 2
        assert pair.n_trajectories == 1

    def test_shift_relation_within_trajectory(self):
        rng = np.random.default_rng(5)
        pair = build_embedded_pair(_set([rng.standard_normal((2, 30))]), 4)
        assert np.array_equal(pair.x[:, 1:], pair.y[:, :-1])

    def test_no_column_spans_two_trajectories(self):
        a = [[1.0, 2.0, 3.0], [0.0, 0.0, 0.0]]
        b = [[100.0, 200.0, 300.0], [0.0, 0.0, 0.0]]
        pair = build_embedded_pair(_set([a, b]), 2)
        # each trajectory of length 3 yields exactly one (x, y) column
        assert pair.x.shape[1] == 2
        assert np.array_equal(pair.x[:, 0], [1.0, 0.0, 2.0, 0.0])
        assert np.array_equal(pair.x[:, 1], [100.0, 0.0, 200.0, 0.0])
        assert pair.boundaries == ((0, 1), (1, 2))

    def test_x_firsts_hold_initial_windows(self):
        a = [[1.0, 2.0, 3.0, 4.0], [0.5, 0.6, 0.7, 0.8]]
        pair = build_embedded_pair(_set([a]), 3)
        assert np.array_equal(pair.x_firsts[:, 0],
                              [1.0, 0.5, 2.0, 0.6, 3.0, 0.7])

    def test_centering_subtracts_steady_state(self):
        a = [[2.0, 3.0, 4.0], [1.0, 1.0, 1.0]]
        steady = SteadyState([2.0, 1.0])
        pair = build_embedded_pair(_set([a]), 1, steady)
        assert np.array_equal(pair.x, [[0.0, 1.0], [0.0, 0.0]])
        assert np.array_equal(pair.center, steady.values)
        raw = build_embedded_pair(_set([a]), 1)
        assert raw.center is None
        assert np.array_equal(raw.x, [[2.0, 3.0], [1.0, 1.0]])

    def test_too_short_trajectory_rejected(self):
        with pytest.raises(DataError):
            build_embedded_pair(_set([[[1.0, 2.0], [0.0, 0.0]]]), 2)

    def test_order_validation(self):
        tset = _set([[[1.0, 2.0, 3.0], [0.0, 0.0, 0.0]]])
        with pytest.raises(ValueError):
            build_embedded_pair(tset, 0)
        with pytest.raises(ValueError):
            build_embedded_pair(tset, 1.5)

    def test_steady_length_checked(self):
        tset = _set([[[1.0, 2.0, 3.0], [0.0, 0.0, 0.0]]])
        with pytest.raises(DataError):
            build_embedded_pair(tset, 1, SteadyState([1.0, 2.0, 3.0]))

    def test_metadata_propagates(self):
        tset = _set([[[1.0, 2.0, 3.0], [0.0, 0.0, 0.0]]], dt=0.25)
        pair = build_embedded_pair(tset, 2)
        assert pair.dt == 0.25
        assert pair.schema == tset.schema

    def test_arrays_read_only(self):
        pair = build_embedded_pair(_set([[[1.0, 2.0, 3.0], [0.0, 0.0, 0.0]]]), 1)
        with pytest.raises(ValueError):
            pair.x[0, 0] = 5.0
