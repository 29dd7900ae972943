import numpy as np
import pytest

import splinefield as sf
from splinefield.spline import n_free_weights

# Two concatenated quadratic segments with a C1 joint: an S-shape whose
# generating control points are known exactly (used as the fit oracle).
S_SHAPE_CONTROL = np.array(
    [
        [[0.0, 0.0], [1.0, 1.2], [2.0, 0.0]],
        [[2.0, 0.0], [3.0, -1.2], [4.0, 0.0]],
    ]
)


def make_random_spline(rng, n_segments, dim, scale=1.0, terminal_zero_velocity=False):
    n_free = n_free_weights(n_segments, terminal_zero_velocity)
    free = rng.uniform(-0.5 * scale, 0.5 * scale, size=(n_free, dim))
    return sf.QuadraticSpline(free, n_segments, terminal_zero_velocity)


def s_shape_points(m=200):
    u = np.linspace(0.0, 1.0, m)
    return np.column_stack([u, 0.3 * np.sin(2.0 * np.pi * u)])


def l_shape_points(m=200):
    u = np.linspace(0.0, 1.0, m)
    pts = np.empty((m, 2))
    first = u < 0.5
    pts[first] = np.column_stack([np.zeros(first.sum()), 1.0 - 2.0 * u[first]])
    pts[~first] = np.column_stack([2.0 * u[~first] - 1.0, np.zeros((~first).sum())])
    return pts


@pytest.fixture(scope="session")
def s_spline():
    traj = sf.Trajectory(s_shape_points())
    return sf.fit(traj, sf.FitConfig(n_segments=6, terminal_zero_velocity=True))


@pytest.fixture(scope="session")
def l_spline():
    traj = sf.Trajectory(l_shape_points())
    return sf.fit(traj, sf.FitConfig(n_segments=6, terminal_zero_velocity=True))


@pytest.fixture(scope="session")
def s_generator_spline():
    return sf.QuadraticSpline.from_control_points(S_SHAPE_CONTROL)


def sample_spline(spline, s_values):
    return np.stack([spline.evaluate(s) for s in np.atleast_1d(s_values)])
