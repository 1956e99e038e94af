"""Multi-trajectory time-series data model and file ingestion.

A trajectory is a uniformly sampled multi-channel time series for one
perturbation scenario of a networked oscillator system.  Channels are the
normalized angular speed ``omega_<bus>`` (per unit) and the rotor angle
``delta_<bus>`` (radians) of each generator bus, kept in a fixed
interleaved order ``(omega_b1, delta_b1, omega_b2, delta_b2, ...)`` with
bus ids ascending.

All types are immutable after construction and safe to share between
threads; the value matrices are marked read-only.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DataError

__all__ = [
    "ChannelSchema",
    "Trajectory",
    "TrajectorySet",
    "SteadyState",
    "load_trajectory_set",
    "write_trajectory",
    "write_trajectory_set",
    "compute_steady_state",
    "default_steady_policy",
    "inject_noise",
]

QUANTITIES = ("omega", "delta")

#: significant digits used for all CSV/JSON float output; 17 round-trips
#: IEEE doubles exactly.
FLOAT_FORMAT = "%.17g"


def _fmt(x: float) -> str:
    return FLOAT_FORMAT % x


@dataclass(frozen=True)
class ChannelSchema:
    """Ordered channel layout shared by every trajectory in a set.

    ``entries`` is a tuple of ``(bus_id, quantity)`` pairs with quantity in
    ``{"omega", "delta"}``, interleaved per bus and sorted by bus id.
    """

    entries: tuple[tuple[int, str], ...]

    def __post_init__(self) -> None:
        buses = []
        for i, (bus, qty) in enumerate(self.entries):
            if qty not in QUANTITIES:
                raise DataError(f"unknown quantity {qty!r} in channel schema")
            if i % 2 == 0:
                if qty != "omega":
                    raise DataError("schema must interleave (omega_b, delta_b) per bus")
                buses.append(bus)
            else:
                if qty != "delta" or bus != buses[-1]:
                    raise DataError("schema must interleave (omega_b, delta_b) per bus")
        if len(set(buses)) != len(buses):
            raise DataError("duplicate bus id in channel schema")
        if sorted(buses) != buses:
            raise DataError("schema bus ids must be ascending")

    @classmethod
    def from_bus_ids(cls, bus_ids: Iterable[int]) -> "ChannelSchema":
        entries = []
        for bus in sorted(set(int(b) for b in bus_ids)):
            entries.append((bus, "omega"))
            entries.append((bus, "delta"))
        return cls(tuple(entries))

    @property
    def bus_ids(self) -> tuple[int, ...]:
        return tuple(bus for bus, qty in self.entries if qty == "omega")

    @property
    def n_buses(self) -> int:
        return len(self.entries) // 2

    @property
    def n_channels(self) -> int:
        return len(self.entries)

    def names(self) -> list[str]:
        return [f"{qty}_{bus}" for bus, qty in self.entries]

    def index(self, channel: str) -> int:
        """Row index of a channel name such as ``"omega_3"``."""
        try:
            return self.names().index(channel)
        except ValueError:
            raise DataError(f"unknown channel {channel!r}") from None

    def bus_rows(self, bus: int) -> tuple[int, int]:
        """(omega, delta) row indices of one bus."""
        names = self.names()
        try:
            return names.index(f"omega_{bus}"), names.index(f"delta_{bus}")
        except ValueError:
            raise DataError(f"unknown bus {bus!r}") from None


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Trajectory:
    """One uniformly sampled perturbation scenario.

    Parameters
    ----------
    schema:
        Channel layout; ``values`` rows follow it.
    dt:
        Sampling interval in seconds, > 0.
    t0:
        Time of the first sample.
    values:
        Matrix of shape ``(n_channels, n_samples)`` with omega in per unit
        and delta in radians.
    fault_time:
        Optional absolute time at which the disturbance was applied.
    """

    schema: ChannelSchema
    dt: float
    t0: float
    values: np.ndarray
    fault_time: Optional[float] = None

    def __post_init__(self) -> None:
        if not (self.dt > 0):
            raise DataError("dt must be positive")
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[0] != self.schema.n_channels:
            raise DataError(
                f"values must have {self.schema.n_channels} rows, got shape {vals.shape}"
            )
        if vals.shape[1] < 1:
            raise DataError("trajectory must contain at least one sample")
        if not np.all(np.isfinite(vals)):
            raise DataError("trajectory contains non-finite values")
        object.__setattr__(self, "values", _freeze(vals))

    @property
    def n_samples(self) -> int:
        return self.values.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.n_samples) * self.dt

    def channel(self, channel: str) -> np.ndarray:
        return self.values[self.schema.index(channel)]

    def window(self, t_from: Optional[float] = None, t_to: Optional[float] = None) -> "Trajectory":
        """Sub-trajectory with samples in ``t_from <= t < t_to``.

        The fault time is kept only if it falls inside the window.
        """
        t = self.times
        mask = np.ones(self.n_samples, dtype=bool)
        if t_from is not None:
            mask &= t >= t_from - 1e-12
        if t_to is not None:
            mask &= t < t_to - 1e-12
        idx = np.nonzero(mask)[0]
        if idx.size < 1:
            raise DataError("window selects no samples")
        ft = self.fault_time
        if ft is not None and not (t[idx[0]] <= ft < t[idx[-1]] + self.dt):
            ft = None
        return Trajectory(self.schema, self.dt, float(t[idx[0]]),
                          self.values[:, idx[0]:idx[-1] + 1], ft)

    def select_buses(self, bus_ids: Iterable[int]) -> "Trajectory":
        """Restrict the trajectory to the (omega, delta) channels of a bus subset.

        Models measurement at a subset of instrumented buses; the remaining
        machines keep influencing the dynamics but are no longer observed.
        """
        sub = ChannelSchema.from_bus_ids(bus_ids)
        rows = [self.schema.index(name) for name in sub.names()]
        return Trajectory(sub, self.dt, self.t0, self.values[rows], self.fault_time)


@dataclass(frozen=True)
class TrajectorySet:
    """A batch of trajectories sharing one schema and sampling interval."""

    trajectories: tuple[Trajectory, ...]

    def __post_init__(self) -> None:
        trajs = tuple(self.trajectories)
        if not trajs:
            raise DataError("trajectory set must contain at least one trajectory")
        schema = trajs[0].schema
        dt = trajs[0].dt
        for k, tr in enumerate(trajs):
            if tr.schema != schema:
                raise DataError(f"trajectory {k} does not share the set's channel schema")
            if not math.isclose(tr.dt, dt, rel_tol=1e-12):
                raise DataError("trajectories have mixed sampling intervals")
        object.__setattr__(self, "trajectories", trajs)

    def __len__(self) -> int:
        return len(self.trajectories)

    def __iter__(self):
        return iter(self.trajectories)

    @property
    def schema(self) -> ChannelSchema:
        return self.trajectories[0].schema

    @property
    def dt(self) -> float:
        return self.trajectories[0].dt

    @property
    def total_samples(self) -> int:
        return sum(tr.n_samples for tr in self.trajectories)

    def stacked_values(self) -> np.ndarray:
        """All samples concatenated along time, shape (n_channels, total)."""
        return np.concatenate([tr.values for tr in self.trajectories], axis=1)

    def select_buses(self, bus_ids: Iterable[int]) -> "TrajectorySet":
        """Set with every trajectory restricted to a bus subset."""
        ids = tuple(bus_ids)
        return TrajectorySet(tuple(tr.select_buses(ids) for tr in self.trajectories))

    def window(self, t_from: Optional[float] = None,
               t_to: Optional[float] = None) -> "TrajectorySet":
        """Set with every trajectory cut to the same time window."""
        return TrajectorySet(tuple(tr.window(t_from, t_to) for tr in self.trajectories))


@dataclass(frozen=True)
class SteadyState:
    """Per-channel steady-state value used for centering and error metrics."""

    values: np.ndarray
    source: str = "explicit"

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float).ravel()
        if not np.all(np.isfinite(vals)):
            raise DataError("steady state contains non-finite values")
        object.__setattr__(self, "values", _freeze(vals))


# ---------------------------------------------------------------------------
# CSV / manifest I/O
#
# Trajectory CSV: UTF-8, comma separated, header `t,omega_<bus>,delta_<bus>,...`
# (column order free), one row per sample.
# Manifest JSON: {"dt_tolerance": 1e-9, "fault_time": float|null,
#                 "trajectories": ["relative/path.csv", ...]}
# ---------------------------------------------------------------------------


def _parse_header(header_line: str, path: str) -> list[tuple[str, Optional[int]]]:
    cols = [c.strip() for c in header_line.rstrip("\n").split(",")]
    if not cols or cols[0] != "t":
        raise DataError(f"{path}: first CSV column must be 't'")
    parsed: list[tuple[str, Optional[int]]] = [("t", None)]
    for c in cols[1:]:
        for qty in QUANTITIES:
            prefix = qty + "_"
            if c.startswith(prefix):
                try:
                    bus = int(c[len(prefix):])
                except ValueError:
                    raise DataError(f"{path}: malformed channel header {c!r}") from None
                parsed.append((qty, bus))
                break
        else:
            raise DataError(f"{path}: unknown column header {c!r}")
    return parsed


def _load_csv(path: str) -> tuple[list[tuple[str, Optional[int]]], np.ndarray]:
    if not os.path.exists(path):
        raise DataError(f"trajectory file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header.strip():
            raise DataError(f"{path}: empty trajectory file")
        cols = _parse_header(header, path)
        try:
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise DataError(f"{path}: could not parse numeric data ({exc})") from None
    if data.size == 0 or data.shape[0] < 2:
        raise DataError(f"{path}: trajectory must contain at least 2 samples")
    if data.shape[1] != len(cols):
        raise DataError(f"{path}: row width does not match header")
    if not np.all(np.isfinite(data)):
        raise DataError(f"{path}: non-finite values are not accepted")
    return cols, data


def load_trajectory(path: str, fault_time: Optional[float] = None,
                    rel_tol: float = 1e-9) -> Trajectory:
    """Load one trajectory CSV (canonical header, any column order)."""
    cols, data = _load_csv(path)
    buses = [bus for qty, bus in cols[1:] if qty == "omega"]
    deltas = {bus for qty, bus in cols[1:] if qty == "delta"}
    if set(buses) != deltas or len(cols) - 1 != 2 * len(buses):
        raise DataError(f"{path}: each bus needs exactly one omega and one delta column")
    schema = ChannelSchema.from_bus_ids(buses)
    t = data[:, 0]
    gaps = np.diff(t)
    dt = float(gaps[0])
    if dt <= 0:
        raise DataError(f"{path}: time stamps must be strictly increasing")
    if np.any(np.abs(gaps - dt) > rel_tol * abs(dt)):
        raise DataError(f"{path}: non-uniform sampling (expected dt={dt})")
    col_of = {(qty, bus): j for j, (qty, bus) in enumerate(cols)}
    order = [col_of[(qty, bus)] for bus, qty in schema.entries]
    return Trajectory(schema, dt, float(t[0]), data[:, order].T, fault_time)


def load_trajectory_set(manifest_path: str) -> TrajectorySet:
    """Load and validate the trajectory set referenced by a manifest.

    All CSVs must share the same channel set and sampling interval; the
    interval is inferred from the first two time stamps of the first file
    and every gap in every file is checked against it within the manifest's
    relative ``dt_tolerance``.  Channel columns are reordered to the
    canonical schema order regardless of their order in the files.
    """
    if not os.path.exists(manifest_path):
        raise DataError(f"manifest not found: {manifest_path}")
    with open(manifest_path, "r", encoding="utf-8") as fh:
        try:
            manifest = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{manifest_path}: invalid JSON ({exc})") from None
    rel_tol = float(manifest.get("dt_tolerance", 1e-9))
    fault_time = manifest.get("fault_time", None)
    fault_time = None if fault_time is None else float(fault_time)
    paths = manifest.get("trajectories", [])
    if not paths:
        raise DataError(f"{manifest_path}: manifest lists no trajectories")
    base = os.path.dirname(os.path.abspath(manifest_path))

    schema: Optional[ChannelSchema] = None
    channel_set: Optional[frozenset] = None
    dt: Optional[float] = None
    trajectories = []
    for rel in paths:
        path = rel if os.path.isabs(rel) else os.path.join(base, rel)
        cols, data = _load_csv(path)
        chans = frozenset(cols[1:])
        if channel_set is None:
            channel_set = chans
            buses = [bus for qty, bus in cols[1:] if qty == "omega"]
            deltas = {bus for qty, bus in cols[1:] if qty == "delta"}
            if set(buses) != deltas or len(cols) - 1 != 2 * len(buses):
                raise DataError(f"{path}: each bus needs exactly one omega and one delta column")
            schema = ChannelSchema.from_bus_ids(buses)
        elif chans != channel_set:
            raise DataError(f"{path}: header schema differs from first trajectory")

        t = data[:, 0]
        gaps = np.diff(t)
        if dt is None:
            dt = float(gaps[0])
            if dt <= 0:
                raise DataError(f"{path}: time stamps must be strictly increasing")
        if np.any(np.abs(gaps - dt) > rel_tol * abs(dt)):
            raise DataError(f"{path}: non-uniform sampling (expected dt={dt})")

        # reorder data columns into schema order
        col_of = {(qty, bus): j for j, (qty, bus) in enumerate(cols)}
        order = [col_of[(qty, bus)] for bus, qty in schema.entries]
        values = data[:, order].T
        trajectories.append(Trajectory(schema, dt, float(t[0]), values, fault_time))
    return TrajectorySet(tuple(trajectories))


def write_trajectory(traj: Trajectory, path: str) -> None:
    """Write one trajectory in the canonical CSV format."""
    names = traj.schema.names()
    t = traj.times
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(",".join(["t"] + names) + "\n")
        for k in range(traj.n_samples):
            row = [_fmt(t[k])] + [_fmt(v) for v in traj.values[:, k]]
            fh.write(",".join(row) + "\n")
    os.replace(tmp, path)


def write_trajectory_set(
    tset: TrajectorySet,
    out_dir: str,
    manifest_name: str = "manifest.json",
    basenames: Optional[Sequence[str]] = None,
) -> str:
    """Write every trajectory plus a manifest into ``out_dir``.

    Returns the manifest path.  The manifest records a fault time only when
    it is shared by all trajectories.
    """
    os.makedirs(out_dir, exist_ok=True)
    if basenames is None:
        basenames = [f"trajectory_{k:03d}.csv" for k in range(len(tset))]
    if len(basenames) != len(tset):
        raise ValueError("one basename per trajectory required")
    for name, traj in zip(basenames, tset):
        write_trajectory(traj, os.path.join(out_dir, name))
    fault_times = {tr.fault_time for tr in tset}
    fault_time = fault_times.pop() if len(fault_times) == 1 else None
    manifest = {
        "dt_tolerance": 1e-9,
        "fault_time": fault_time,
        "trajectories": list(basenames),
    }
    manifest_path = os.path.join(out_dir, manifest_name)
    tmp = manifest_path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    os.replace(tmp, manifest_path)
    return manifest_path


# ---------------------------------------------------------------------------
# Steady state and noise
# ---------------------------------------------------------------------------


def compute_steady_state(
    tset: TrajectorySet,
    policy: str = "pre_fault_mean",
    explicit: Optional[np.ndarray] = None,
) -> SteadyState:
    """Per-channel steady-state estimate of a trajectory set.

    ``pre_fault_mean`` averages all samples earlier than the first
    trajectory's fault time; ``final_window_mean`` averages the trailing 10%
    of each trajectory; ``explicit`` passes a user vector through.
    """
    n = tset.schema.n_channels
    if policy == "explicit":
        if explicit is None:
            raise ValueError("policy 'explicit' requires a vector")
        vec = np.asarray(explicit, dtype=float).ravel()
        if vec.size != n:
            raise DataError(f"explicit steady state must have length {n}, got {vec.size}")
        return SteadyState(vec, "explicit")
    if policy == "pre_fault_mean":
        for k, tr in enumerate(tset):
            if tr.fault_time is None or not tr.fault_time > tr.t0 + tr.dt:
                raise DataError(
                    f"trajectory {k}: pre_fault_mean needs fault_time > t0 + dt"
                )
        cut = tset.trajectories[0].fault_time
        chunks = []
        for tr in tset:
            pre = tr.values[:, tr.times < cut]
            if pre.shape[1]:
                chunks.append(pre)
        if not chunks:
            raise DataError("no pre-fault samples available")
        return SteadyState(np.concatenate(chunks, axis=1).mean(axis=1), "pre_fault_mean")
    if policy == "final_window_mean":
        chunks = []
        for tr in tset:
            w = max(1, tr.n_samples // 10)
            chunks.append(tr.values[:, -w:])
        return SteadyState(np.concatenate(chunks, axis=1).mean(axis=1), "final_window_mean")
    raise ValueError(f"unknown steady-state policy {policy!r}")


def default_steady_policy(tset: TrajectorySet) -> str:
    """Pre-fault averaging when fault metadata exists, else the final window."""
    usable = all(
        tr.fault_time is not None and tr.fault_time > tr.t0 + tr.dt for tr in tset
    )
    return "pre_fault_mean" if usable else "final_window_mean"


def inject_noise(
    tset: TrajectorySet,
    snr_db: float,
    steady: SteadyState,
    seed: int,
) -> TrajectorySet:
    """Add per-channel Gaussian noise calibrated against an SNR in dB.

    The noise standard deviation of channel c is
    ``10**(-snr_db/20) * rms(x_c - steady_c)`` with the RMS taken over the
    whole set, so the expected noisy-vs-clean relative RMS error equals
    ``10**(-snr_db/20)``.  ``snr_db = inf`` returns the input unchanged.
    Deterministic for a fixed seed.
    """
    if math.isnan(snr_db):
        raise ValueError("snr_db must not be NaN")
    if math.isinf(snr_db):
        if snr_db > 0:
            return tset
        raise ValueError("snr_db must be finite or +inf")
    dev = tset.stacked_values() - steady.values[:, None]
    rms = np.sqrt(np.mean(dev**2, axis=1))
    sigma = 10.0 ** (-snr_db / 20.0) * rms
    rng = np.random.default_rng(seed)
    noisy = []
    for tr in tset:
        noise = rng.standard_normal(tr.values.shape) * sigma[:, None]
        noisy.append(replace(tr, values=tr.values + noise))
    return TrajectorySet(tuple(noisy))
