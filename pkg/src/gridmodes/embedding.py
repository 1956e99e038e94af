"""Delay embedding of multi-trajectory snapshot data.

Each trajectory with samples x_1 .. x_T (columns, 2N channels) is turned
into stacked snapshots

    xt_k = [x_k; x_{k+1}; ...; x_{k+d-1}]      (2 N d rows)

and the shifted pair matrices X = [xt_1 .. xt_{T-d}], Y = [xt_2 ..
xt_{T-d+1}].  Trajectory blocks are concatenated column-wise so a single
linear map can be fitted across all of them; no column ever mixes samples
from two trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import DataError
from .trajectory import ChannelSchema, SteadyState, TrajectorySet

__all__ = ["EmbeddedPair", "build_embedded_pair", "embed_window"]


@dataclass(frozen=True)
class EmbeddedPair:
    """Concatenated delay-embedded snapshot pair matrices.

    ``x`` and ``y`` are (2 N d, sum_q (T_q - d)); ``boundaries`` holds the
    half-open column span of each trajectory block; ``x_firsts`` the first
    embedded column of each trajectory (one per column); ``center`` the
    per-channel offset subtracted before embedding, or None.
    """

    x: np.ndarray
    y: np.ndarray
    d: int
    schema: ChannelSchema
    dt: float
    boundaries: tuple[tuple[int, int], ...]
    x_firsts: np.ndarray
    center: Optional[np.ndarray]

    def __post_init__(self) -> None:
        for name in ("x", "y", "x_firsts", "center"):
            arr = getattr(self, name)
            if arr is None:
                continue
            arr = np.asarray(arr, dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_channels(self) -> int:
        return self.schema.n_channels

    @property
    def n_trajectories(self) -> int:
        return len(self.boundaries)


def _embed_block(values: np.ndarray, d: int) -> np.ndarray:
    """All embedded columns of one trajectory: shape (2Nd, T - d + 1)."""
    t = values.shape[1]
    k = t - d + 1
    return np.vstack([values[:, s:s + k] for s in range(d)])


def embed_window(window: np.ndarray, d: int) -> np.ndarray:
    """Stack a (2N, d) window of consecutive samples into one (2Nd,) column."""
    window = np.asarray(window, dtype=float)
    if window.ndim != 2 or window.shape[1] != d:
        raise ValueError(f"window must have exactly {d} columns")
    return window.ravel(order="F")


def build_embedded_pair(
    tset: TrajectorySet,
    d: int,
    steady: Optional[Union[SteadyState, np.ndarray]] = None,
) -> EmbeddedPair:
    """Build the shifted pair matrices for one delay order.

    ``steady`` (a steady state or plain per-channel vector) is subtracted
    from every sample before embedding so the fitted map acts on
    deviations.  Every trajectory must have at least ``d + 1`` samples.
    """
    if not isinstance(d, (int, np.integer)) or isinstance(d, bool) or d < 1:
        raise ValueError(f"delay order must be a positive integer, got {d!r}")
    d = int(d)
    center = None
    if steady is not None:
        center = np.asarray(steady.values if isinstance(steady, SteadyState) else steady,
                            dtype=float).ravel()
        if center.shape != (tset.schema.n_channels,):
            raise DataError(
                f"steady-state vector has {center.size} entries, "
                f"expected {tset.schema.n_channels}"
            )

    x_blocks, y_blocks, firsts, boundaries = [], [], [], []
    start = 0
    for q, traj in enumerate(tset):
        if traj.n_samples <= d:
            raise DataError(
                f"trajectory {q} has {traj.n_samples} samples, "
                f"need more than d={d} to form one snapshot pair"
            )
        values = traj.values - center[:, None] if center is not None else traj.values
        emb = _embed_block(values, d)
        x_blocks.append(emb[:, :-1])
        y_blocks.append(emb[:, 1:])
        firsts.append(emb[:, 0])
        stop = start + emb.shape[1] - 1
        boundaries.append((start, stop))
        start = stop

    return EmbeddedPair(
        x=np.concatenate(x_blocks, axis=1),
        y=np.concatenate(y_blocks, axis=1),
        d=d,
        schema=tset.schema,
        dt=tset.dt,
        boundaries=tuple(boundaries),
        x_firsts=np.column_stack(firsts),
        center=center,
    )
