"""Reconstruction, forecast error, and the order-selection sweep.

A fitted model reconstructs a trajectory from an initial window of d
consecutive samples: the window is stacked into one embedded vector,
projected onto the modes, and propagated by powers of the eigenvalues.
The first reconstructed sample coincides with the window's last column,
so predictions and reference data align on the same time grid without
interpolation.

Errors are reported as RRMSE: the root of summed squared errors over
summed squared deviations from the steady state, which removes the
dominant constant component from the normalization.
"""

from __future__ import annotations

import csv
import os
import time
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Union

import numpy as np

from .decomposition import HodmdModel, RankSpec, fit
from .embedding import build_embedded_pair, embed_window
from .errors import DataError
from .trajectory import (
    FLOAT_FORMAT,
    SteadyState,
    Trajectory,
    TrajectorySet,
    compute_steady_state,
    default_steady_policy,
)

__all__ = [
    "PredictionReport",
    "SweepRow",
    "SweepReport",
    "reconstruct",
    "replay",
    "rrmse",
    "sweep_order",
    "write_sweep_report",
]


@dataclass(frozen=True)
class PredictionReport:
    """RRMSE summary of one model evaluation."""

    d: int
    r: int
    rrmse_train: Optional[float] = None
    rrmse_test: Optional[float] = None
    per_trajectory: tuple[float, ...] = ()


def reconstruct(model: HodmdModel, initial_window: np.ndarray, steps: int,
                t0: float = 0.0) -> Trajectory:
    """Propagate the model from a (2N, d) window of consecutive samples.

    Returns ``steps`` samples starting at the window's last column (the
    first output reproduces it up to truncation error); ``t0`` is the time
    of that first output sample.  Requires a model carrying its stacked
    eigenvectors.
    """
    if model.phi_pinv is None:
        raise DataError("model was saved without stacked eigenvectors; refit "
                        "or rewrite it with them included")
    if not isinstance(steps, (int, np.integer)) or isinstance(steps, bool) or steps < 1:
        raise ValueError(f"steps must be a positive integer, got {steps!r}")
    window = np.asarray(initial_window, dtype=float)
    if window.shape != (model.n_channels, model.d):
        raise DataError(
            f"initial window must have shape ({model.n_channels}, {model.d}), "
            f"got {window.shape}"
        )
    if model.center is not None:
        window = window - model.center.values[:, None]

    coeffs = model.phi_pinv @ embed_window(window, model.d)
    exponents = (model.d - 1) + np.arange(int(steps))
    powers = model.lambdas[:, None] ** exponents[None, :]
    lphi = model.spatial_modes * model.mode_norms[None, :]
    out = (lphi @ (coeffs[:, None] * powers)).real
    if model.center is not None:
        out = out + model.center.values[:, None]
    return Trajectory(model.schema, model.dt, t0, out)


def replay(model: HodmdModel, traj: Trajectory) -> tuple[Trajectory, Trajectory]:
    """Reconstruct a trajectory from its own first d samples.

    Returns (predicted, reference) on the common grid from sample d
    onward, ready for :func:`rrmse`.
    """
    d = model.d
    if traj.n_samples <= d:
        raise DataError(f"trajectory too short for order {d}")
    t_first = traj.t0 + (d - 1) * traj.dt
    steps = traj.n_samples - d + 1
    pred = reconstruct(model, traj.values[:, :d], steps, t0=t_first)
    ref = replace(traj, values=traj.values[:, d - 1:], t0=t_first)
    return pred, ref


def rrmse(
    reference: Union[TrajectorySet, Trajectory],
    predicted: Union[TrajectorySet, Trajectory],
    steady: Union[SteadyState, np.ndarray],
) -> float:
    """Relative root mean square error over a whole trajectory set.

    sqrt(sum of squared errors / sum of squared deviations from the steady
    state), pooled over all trajectories, channels, and samples.  Single
    trajectories are accepted and treated as one-element sets.  Raises
    :class:`DataError` when the reference never leaves the steady state
    (zero denominator).
    """
    if isinstance(reference, Trajectory):
        reference = TrajectorySet((reference,))
    if isinstance(predicted, Trajectory):
        predicted = TrajectorySet((predicted,))
    if len(reference) != len(predicted):
        raise DataError("reference and prediction have different trajectory counts")
    xbar = np.asarray(steady.values if isinstance(steady, SteadyState) else steady,
                      dtype=float).ravel()
    if xbar.shape != (reference.schema.n_channels,):
        raise DataError("steady-state vector does not match the channel count")
    num = 0.0
    den = 0.0
    for ref, pred in zip(reference, predicted):
        if ref.values.shape != pred.values.shape:
            raise DataError("reference and prediction shapes do not match")
        if ref.schema != pred.schema:
            raise DataError("reference and prediction schemas do not match")
        num += float(np.sum((ref.values - pred.values) ** 2))
        den += float(np.sum((ref.values - xbar[:, None]) ** 2))
    if den == 0.0:
        raise DataError("degenerate reference: data never leaves the steady state")
    return float(np.sqrt(num / den))


@dataclass(frozen=True)
class SweepRow:
    d: int
    r: int
    rrmse_train: float
    rrmse_test: float
    fit_seconds: float


@dataclass(frozen=True)
class SweepReport:
    """Order-selection sweep results, one row per d, ascending."""

    rows: tuple[SweepRow, ...]

    def __post_init__(self) -> None:
        ds = [row.d for row in self.rows]
        if sorted(set(ds)) != ds:
            raise ValueError("sweep rows must have unique ascending d values")

    def row(self, d: int) -> SweepRow:
        for r in self.rows:
            if r.d == d:
                return r
        raise KeyError(d)


def _replay_set(model: HodmdModel, tset: TrajectorySet) -> tuple[TrajectorySet, TrajectorySet]:
    pairs = [replay(model, traj) for traj in tset]
    preds = TrajectorySet(tuple(p for p, _ in pairs))
    refs = TrajectorySet(tuple(r for _, r in pairs))
    return preds, refs


def sweep_order(
    train: TrajectorySet,
    test: TrajectorySet,
    d_values: Sequence[int],
    spec: Optional[RankSpec] = None,
    steady: Optional[SteadyState] = None,
    center: bool = True,
) -> SweepReport:
    """Fit one model per delay order and score it on both data sets.

    Every trajectory (training and test alike) is reconstructed from its
    own first d samples over its full remaining length.  ``steady``
    defaults to the training set's own steady state and is used both for
    centering (when ``center``) and for the RRMSE normalization.
    """
    if not d_values:
        raise ValueError("d_values must not be empty")
    ds = sorted(set(int(d) for d in d_values))
    if list(ds) != sorted(int(d) for d in d_values):
        raise ValueError("d values must be unique")
    min_t = min(tr.n_samples for tr in list(train) + list(test))
    if ds[0] < 1 or ds[-1] >= min_t:
        raise ValueError(f"d values must lie in [1, {min_t - 1}]")
    if steady is None:
        steady = compute_steady_state(train, default_steady_policy(train))

    rows = []
    for d in ds:
        t_start = time.perf_counter()
        pair = build_embedded_pair(train, d, steady if center else None)
        model = fit(pair, spec)
        fit_seconds = time.perf_counter() - t_start
        pred_tr, ref_tr = _replay_set(model, train)
        pred_te, ref_te = _replay_set(model, test)
        rows.append(SweepRow(
            d=d,
            r=model.r,
            rrmse_train=rrmse(ref_tr, pred_tr, steady),
            rrmse_test=rrmse(ref_te, pred_te, steady),
            fit_seconds=fit_seconds,
        ))
    return SweepReport(tuple(rows))


def write_sweep_report(report: SweepReport, path: str) -> None:
    """Write the sweep as CSV: d,r,rrmse_train,rrmse_test,fit_seconds."""
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["d", "r", "rrmse_train", "rrmse_test", "fit_seconds"])
        for row in report.rows:
            writer.writerow([
                row.d,
                row.r,
                FLOAT_FORMAT % row.rrmse_train,
                FLOAT_FORMAT % row.rrmse_test,
                FLOAT_FORMAT % row.fit_seconds,
            ])
    os.replace(tmp, path)
