"""Randomized invariant checks across the library."""

import cmath
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from gridmodes import RankSpec
from gridmodes.decomposition import fit, select_rank
from gridmodes.embedding import build_embedded_pair
from gridmodes.modal import (
    bus_participation,
    continuous_parameters,
    fft_spectrum,
)
from gridmodes.prediction import reconstruct, rrmse
from gridmodes.trajectory import (
    ChannelSchema,
    SteadyState,
    Trajectory,
    TrajectorySet,
    inject_noise,
    load_trajectory,
    write_trajectory,
)

SCHEMA1 = ChannelSchema.from_bus_ids([1])


def _linear_tset(seed, n_traj=1, t=40, radius=0.9):
    """Trajectories of one stable random 2x2 linear map."""
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.2, 1.2)
    a = radius * np.array([[math.cos(theta), -math.sin(theta)],
                           [math.sin(theta), math.cos(theta)]])
    trajs = []
    for _ in range(n_traj):
        values = np.empty((2, t))
        values[:, 0] = rng.uniform(-1, 1, size=2) + [1.5, 0]
        for k in range(t - 1):
            values[:, k + 1] = a @ values[:, k]
        trajs.append(Trajectory(SCHEMA1, 0.05, 0.0, values))
    return TrajectorySet(tuple(trajs))


class TestContinuousParameters:
    @settings(max_examples=60, deadline=None)
    @given(sigma=st.floats(-2.0, 5.0), freq=st.floats(0.01, 24.5))
    def test_round_trip_through_discrete_eigenvalue(self, sigma, freq):
        dt = 0.02
        lam = cmath.exp(complex(-sigma, 2 * math.pi * freq) * dt)
        f_out, sigma_out, zeta = continuous_parameters(lam, dt)
        assert math.isclose(f_out, freq, rel_tol=1e-10)
        assert math.isclose(sigma_out, sigma, rel_tol=1e-9, abs_tol=1e-10)
        assert zeta is not None

    @settings(max_examples=40, deadline=None)
    @given(sigma=st.floats(0.01, 2.0), freq=st.floats(0.05, 10.0),
           scale=st.floats(0.1, 2.0))
    def test_damping_ratio_scale_invariant(self, sigma, freq, scale):
        # zeta depends only on the angle of the continuous pole, so scaling
        # (sigma, freq) together must not move it
        dt = 0.02
        lam_a = cmath.exp(complex(-sigma, 2 * math.pi * freq) * dt)
        lam_b = cmath.exp(complex(-scale * sigma,
                                  2 * math.pi * scale * freq) * dt)
        _, _, zeta_a = continuous_parameters(lam_a, dt)
        _, _, zeta_b = continuous_parameters(lam_b, dt)
        assert math.isclose(zeta_a, zeta_b, rel_tol=1e-9)


class TestParticipation:
    @settings(max_examples=50, deadline=None)
    @given(parts=st.lists(st.floats(-5, 5), min_size=8, max_size=8),
           phase=st.floats(0, 2 * math.pi),
           scale=st.floats(0.01, 100.0))
    def test_scale_and_phase_invariance(self, parts, phase, scale):
        u = np.array(parts[:4]) + 1j * np.array(parts[4:])
        assume(np.linalg.norm(u) > 1e-3)
        schema = ChannelSchema.from_bus_ids([1, 2])
        base = bus_participation(u, schema)
        rotated = bus_participation(scale * u * cmath.exp(1j * phase), schema)
        assert np.allclose(rotated, base, atol=1e-12)
        assert math.isclose(base.sum(), 1.0, rel_tol=1e-12)


class TestSelectRank:
    @settings(max_examples=50, deadline=None)
    @given(values=st.lists(st.floats(1e-12, 1.0), min_size=1, max_size=12),
           tol=st.floats(1e-9, 0.99))
    def test_tolerance_rule_counts_threshold_crossings(self, values, tol):
        s = np.sort(np.asarray(values))[::-1]
        r = select_rank(s, RankSpec.tolerance(tol))
        assert r == int(np.sum(s > tol * s[0]))

    @settings(max_examples=30, deadline=None)
    @given(values=st.lists(st.floats(1e-6, 1.0), min_size=1, max_size=12),
           r=st.integers(1, 20))
    def test_fixed_rule_caps_at_available(self, values, r):
        s = np.sort(np.asarray(values))[::-1]
        assert select_rank(s, RankSpec.fixed(r)) == min(r, s.size)


class TestRrmse:
    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10_000), scale=st.floats(0.01, 1000.0))
    def test_scale_invariance(self, seed, scale):
        rng = np.random.default_rng(seed)
        ref_vals = rng.standard_normal((2, 30))
        pred_vals = ref_vals + 0.1 * rng.standard_normal((2, 30))
        xbar = rng.standard_normal(2)
        ref = Trajectory(SCHEMA1, 0.1, 0.0, ref_vals)
        pred = Trajectory(SCHEMA1, 0.1, 0.0, pred_vals)
        base = rrmse(ref, pred, SteadyState(xbar, "explicit"))
        scaled = rrmse(
            Trajectory(SCHEMA1, 0.1, 0.0, scale * ref_vals),
            Trajectory(SCHEMA1, 0.1, 0.0, scale * pred_vals),
            SteadyState(scale * xbar, "explicit"))
        assert math.isclose(base, scaled, rel_tol=1e-9)

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_trajectory_order_invariance(self, seed):
        rng = np.random.default_rng(seed)
        refs = [Trajectory(SCHEMA1, 0.1, 0.0, rng.standard_normal((2, 20)))
                for _ in range(3)]
        preds = [Trajectory(t.schema, t.dt, t.t0,
                            t.values + 0.05 * rng.standard_normal((2, 20)))
                 for t in refs]
        steady = SteadyState(np.zeros(2), "explicit")
        fwd = rrmse(TrajectorySet(tuple(refs)), TrajectorySet(tuple(preds)),
                    steady)
        rev = rrmse(TrajectorySet(tuple(refs[::-1])),
                    TrajectorySet(tuple(preds[::-1])), steady)
        assert math.isclose(fwd, rev, rel_tol=1e-12)


class TestDecomposition:
    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_eigenvalues_closed_under_conjugation(self, seed):
        model = fit(build_embedded_pair(_linear_tset(seed), 2, None))
        lams = model.lambdas
        for lam in lams:
            if abs(lam.imag) > 1e-9:
                assert np.min(np.abs(lams - lam.conjugate())) < 1e-7

    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_reconstruction_linear_in_window(self, seed):
        # without centering the forecast is a linear function of the window
        tset = _linear_tset(seed, t=30)
        model = fit(build_embedded_pair(tset, 3, None))
        v = tset.trajectories[0].values
        w1, w2 = v[:, 0:3], v[:, 5:8]
        p1 = reconstruct(model, w1, steps=4, t0=0.0).values
        p2 = reconstruct(model, w2, steps=4, t0=0.0).values
        p12 = reconstruct(model, w1 + w2, steps=4, t0=0.0).values
        assert np.allclose(p12, p1 + p2, atol=1e-8)

    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(0, 10_000), d=st.integers(1, 6))
    def test_replayed_linear_data_is_exact(self, seed, d):
        tset = _linear_tset(seed, t=25)
        model = fit(build_embedded_pair(tset, d, None))
        traj = tset.trajectories[0]
        pred = reconstruct(model, traj.values[:, :d],
                           steps=traj.n_samples - d + 1, t0=0.0)
        assert np.allclose(pred.values, traj.values[:, d - 1:], atol=1e-7)


class TestEmbedding:
    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 10_000), t=st.integers(4, 30),
           d=st.integers(1, 10))
    def test_stacking_and_shift_structure(self, seed, t, d):
        assume(d < t)
        rng = np.random.default_rng(seed)
        values = rng.standard_normal((2, t))
        tset = TrajectorySet((Trajectory(SCHEMA1, 0.1, 0.0, values),))
        pair = build_embedded_pair(tset, d, None)
        n_cols = t - d
        assert pair.x.shape == (2 * d, n_cols)
        for j in range(n_cols):
            expected = np.concatenate([values[:, j + i] for i in range(d)])
            assert np.array_equal(pair.x[:, j], expected)
            shifted = np.concatenate([values[:, j + 1 + i] for i in range(d)])
            assert np.array_equal(pair.y[:, j], shifted)


class TestSpectrum:
    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 10_000), t=st.integers(8, 300))
    def test_rectangular_window_preserves_energy(self, seed, t):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal(t)
        traj = Trajectory(SCHEMA1, 0.01, 0.0, np.vstack([x, np.zeros(t)]))
        spec = fft_spectrum(traj, "omega_1", window="none")
        energy = t * np.sum((x - x.mean()) ** 2)
        assert math.isclose(float(np.sum(spec.magnitudes ** 2)), energy,
                            rel_tol=1e-9)


class TestCsvRoundTrip:
    @settings(max_examples=30, deadline=None)
    @given(data=st.lists(st.floats(-1e12, 1e12,
                                   allow_nan=False, allow_infinity=False),
                         min_size=4, max_size=60),
           dt=st.floats(0.01, 10.0), t0=st.floats(0.0, 10.0))
    def test_values_survive_exactly(self, data, dt, t0, tmp_path_factory):
        t = len(data) // 2
        values = np.asarray(data[:2 * t]).reshape(2, t)
        traj = Trajectory(SCHEMA1, dt, t0, values)
        path = str(tmp_path_factory.mktemp("csv") / "traj.csv")
        write_trajectory(traj, path)
        loaded = load_trajectory(path)
        assert np.array_equal(loaded.values, values)
        assert math.isclose(loaded.dt, dt, rel_tol=1e-9)
        assert math.isclose(loaded.t0, t0, rel_tol=1e-9, abs_tol=1e-9)


class TestInjectNoise:
    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(0, 10_000), snr=st.floats(5.0, 40.0))
    def test_seed_reproducibility(self, seed, snr):
        tset = _linear_tset(3, n_traj=2, t=30)
        steady = SteadyState(np.zeros(2), "explicit")
        a = inject_noise(tset, snr, steady, seed)
        b = inject_noise(tset, snr, steady, seed)
        c = inject_noise(tset, snr, steady, seed + 1)
        for ta, tb in zip(a, b):
            assert np.array_equal(ta.values, tb.values)
        assert not all(
            np.array_equal(ta.values, tc.values) for ta, tc in zip(a, c))
