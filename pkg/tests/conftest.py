"""Shared fixtures: small deterministic networks and trajectory sets."""

import math

import numpy as np
import pytest

import gridmodes as gm
from gridmodes.trajectory import ChannelSchema, SteadyState, Trajectory


@pytest.fixture
def two_machine():
    b = np.array([[0.0, 1.0], [1.0, 0.0]])
    return gm.SwingNetwork((1, 2), [10.0, 10.0], [0.5, 0.5], [0.2, -0.2],
                           b, 2 * math.pi * 50.0)


@pytest.fixture
def one_bus_schema():
    return ChannelSchema.from_bus_ids([1])


@pytest.fixture
def geometric_set(one_bus_schema):
    """omega decays geometrically (ratio 0.95 per step), delta mirrors it."""
    k = np.arange(40)
    omega = 3.0 * 0.95**k
    delta = 0.5 * 0.95**k
    values = np.vstack([omega, delta])
    return gm.TrajectorySet((Trajectory(one_bus_schema, 0.1, 0.0, values),))


@pytest.fixture
def spiral_set(one_bus_schema):
    """Exactly linear two-channel data: a decaying rotation, rank 2."""
    theta, rho = 0.4, 0.97
    a = rho * np.array([[np.cos(theta), -np.sin(theta)],
                        [np.sin(theta), np.cos(theta)]])
    x = np.empty((2, 120))
    x[:, 0] = [1.0, 0.25]
    for k in range(1, 120):
        x[:, k] = a @ x[:, k - 1]
    traj = Trajectory(one_bus_schema, 0.05, 0.0, x)
    return gm.TrajectorySet((traj,)), a


@pytest.fixture
def zero_steady(one_bus_schema):
    return SteadyState(np.zeros(one_bus_schema.n_channels))
