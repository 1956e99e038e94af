"""Desk-scale swing-equation network simulator.

Implements the classical lossless second-order model of N coupled
generator rotors,

    d(delta_i)/dt = omega0 * (omega_i - 1)
    J_i d(omega_i)/dt = P_m,i - sum_j B_ij sin(delta_i - delta_j)
                        - D_i * (omega_i - 1)

with omega in per unit, delta in radians, and electrical power realized by
the sinusoidal coupling matrix B.  Disturbances are temporary faults,
modeled either as a transient power sink at one bus or as a scaling of
that bus's couplings.  Integration is classic fixed-step RK4 with fault
switching aligned to integration-step boundaries.
"""

from __future__ import annotations

import json
import math
import os
import warnings
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .errors import DataError, NumericalError
from .trajectory import ChannelSchema, Trajectory, TrajectorySet

__all__ = [
    "SwingNetwork",
    "FaultSpec",
    "SimConfig",
    "swing_rhs",
    "swing_energy",
    "solve_equilibrium",
    "simulate",
    "generate_scenarios",
    "load_network",
    "write_network",
    "five_machine_network",
]

#: instability guard: per-unit speed deviation beyond which a scenario is
#: rejected rather than integrated further.
OMEGA_DEVIATION_LIMIT = 0.5


@dataclass(frozen=True)
class SwingNetwork:
    """Generator and coupling parameters of the network.

    Parameters
    ----------
    bus_ids:
        Generator bus identifiers, ascending; they name the trajectory
        channels (``omega_<bus>``, ``delta_<bus>``).
    j:
        Inertia constants, > 0.  Convention: ``j`` multiplies the per-unit
        speed derivative directly, so the two-machine linearized swing
        frequency is ``sqrt(2 B omega0 / j) / (2 pi)``.
    d:
        Damping coefficients, >= 0.
    p_m:
        Mechanical powers in per unit.  The lossless model needs zero net
        power for a synchronous equilibrium, so the constructor removes the
        mean.
    b:
        Symmetric coupling matrix with zero diagonal (effective
        susceptance times EMF products), entries >= 0.
    omega0:
        Nominal angular velocity in rad/s (2 pi f_n).
    """

    bus_ids: tuple[int, ...]
    j: np.ndarray
    d: np.ndarray
    p_m: np.ndarray
    b: np.ndarray
    omega0: float

    def __post_init__(self) -> None:
        bus_ids = tuple(int(b) for b in self.bus_ids)
        if sorted(set(bus_ids)) != list(bus_ids):
            raise DataError("bus ids must be unique and ascending")
        n = len(bus_ids)
        j = np.asarray(self.j, dtype=float).ravel()
        d = np.asarray(self.d, dtype=float).ravel()
        p_m = np.asarray(self.p_m, dtype=float).ravel()
        b = np.asarray(self.b, dtype=float)
        if not (j.shape == d.shape == p_m.shape == (n,)) or b.shape != (n, n):
            raise DataError("parameter shapes do not match the generator count")
        if np.any(j <= 0):
            raise DataError("inertia constants must be positive")
        if np.any(d < 0):
            raise DataError("damping coefficients must be non-negative")
        if np.any(b < 0) or np.any(np.abs(np.diag(b)) > 0) or not np.allclose(b, b.T):
            raise DataError("coupling matrix must be symmetric, non-negative, zero-diagonal")
        if not (self.omega0 > 0):
            raise DataError("omega0 must be positive")
        if not self._connected(b):
            warnings.warn("coupling graph is not connected", stacklevel=2)
        p_m = p_m - p_m.mean()  # enforce zero net power (lossless model)
        for name, arr in (("j", j), ("d", d), ("p_m", p_m), ("b", b)):
            a = np.array(arr, copy=True)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        object.__setattr__(self, "bus_ids", bus_ids)

    @staticmethod
    def _connected(b: np.ndarray) -> bool:
        n = b.shape[0]
        seen = {0}
        frontier = [0]
        while frontier:
            i = frontier.pop()
            for k in np.nonzero(b[i] > 0)[0]:
                if k not in seen:
                    seen.add(int(k))
                    frontier.append(int(k))
        return len(seen) == n

    @property
    def n(self) -> int:
        return len(self.bus_ids)

    @property
    def schema(self) -> ChannelSchema:
        return ChannelSchema.from_bus_ids(self.bus_ids)

    def bus_index(self, bus: int) -> int:
        try:
            return self.bus_ids.index(bus)
        except ValueError:
            raise DataError(f"bus {bus} is not part of the network") from None


@dataclass(frozen=True)
class FaultSpec:
    """A temporary disturbance at one bus.

    ``power_sink`` draws ``magnitude`` per unit of extra power at the bus
    while the fault is active; ``coupling_drop`` scales the bus's row and
    column of the coupling matrix by ``magnitude`` (gamma in [0, 1)).
    """

    bus: int
    t_start: float = 1.0
    duration: float = 0.1
    mode: str = "power_sink"
    magnitude: float = 0.5

    def __post_init__(self) -> None:
        if self.mode not in ("power_sink", "coupling_drop"):
            raise ValueError(f"unknown fault mode {self.mode!r}")
        if not self.t_start > 0:
            raise ValueError("fault t_start must be positive")
        if not self.duration > 0:
            raise ValueError("fault duration must be positive")
        if self.mode == "coupling_drop" and not (0.0 <= self.magnitude < 1.0):
            raise ValueError("coupling_drop magnitude must be in [0, 1)")


@dataclass(frozen=True)
class SimConfig:
    """Integration configuration.

    ``dt_out`` is the output sampling interval; ``dt_int`` the internal RK4
    step (defaults to the largest exact divisor of ``dt_out`` not above
    1 ms) and must divide ``dt_out``;  ``initial_state`` is a
    ``(2n,)`` vector ``[delta, omega]`` or None for the solved equilibrium.
    """

    dt_out: float
    horizon: float
    dt_int: Optional[float] = None
    initial_state: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if not (self.dt_out > 0 and self.horizon > 0):
            raise ValueError("dt_out and horizon must be positive")
        dt_int = self.dt_int
        if dt_int is None:
            dt_int = self.dt_out / max(1, round(self.dt_out / 1e-3))
            object.__setattr__(self, "dt_int", dt_int)
        stride = self.dt_out / dt_int
        if not (dt_int > 0) or abs(stride - round(stride)) > 1e-9 or round(stride) < 1:
            raise ValueError("dt_out must be an integer multiple of dt_int")

    @property
    def stride(self) -> int:
        return round(self.dt_out / self.dt_int)


def _split(state: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    return state[:n], state[n:]


def swing_rhs(net: SwingNetwork, state: np.ndarray, b: Optional[np.ndarray] = None,
              p_m: Optional[np.ndarray] = None) -> np.ndarray:
    """Time derivative of the ``[delta, omega]`` state vector.

    ``b`` and ``p_m`` override the network's coupling matrix and mechanical
    power while a fault is active.
    """
    n = net.n
    delta, omega = _split(np.asarray(state, dtype=float), n)
    b_eff = net.b if b is None else b
    p_eff = net.p_m if p_m is None else p_m
    p_e = (b_eff * np.sin(delta[:, None] - delta[None, :])).sum(axis=1)
    ddelta = net.omega0 * (omega - 1.0)
    domega = (p_eff - p_e - net.d * (omega - 1.0)) / net.j
    return np.concatenate([ddelta, domega])


def swing_energy(net: SwingNetwork, state: np.ndarray) -> float:
    """Energy function of the lossless model.

    Kinetic term plus coupling and mechanical potential; constant along
    undamped, fault-free trajectories.
    """
    n = net.n
    delta, omega = _split(np.asarray(state, dtype=float), n)
    kinetic = 0.5 * net.omega0 * float(np.sum(net.j * (omega - 1.0) ** 2))
    diff = delta[:, None] - delta[None, :]
    coupling = -0.5 * float(np.sum(net.b * np.cos(diff)))  # each pair counted once
    mechanical = -float(np.dot(net.p_m, delta))
    return kinetic + coupling + mechanical


def solve_equilibrium(net: SwingNetwork, max_iter: int = 100, tol: float = 1e-10) -> np.ndarray:
    """Synchronous equilibrium ``[delta*, omega*=1]`` with gauge delta*[0] = 0.

    Newton iteration on the reduced angle vector; raises
    :class:`NumericalError` when it does not converge within ``max_iter``
    iterations, which signals an infeasible or over-stressed network.
    """
    n = net.n
    if n == 1:
        return np.concatenate([[0.0], [1.0]])
    delta = np.zeros(n)

    def residual(dl: np.ndarray) -> np.ndarray:
        return net.p_m - (net.b * np.sin(dl[:, None] - dl[None, :])).sum(axis=1)

    for _ in range(max_iter):
        r = residual(delta)
        if np.max(np.abs(r)) < tol:
            return np.concatenate([delta, np.ones(n)])
        cos = np.cos(delta[:, None] - delta[None, :])
        jac_full = net.b * cos
        np.fill_diagonal(jac_full, -np.sum(net.b * cos, axis=1))
        jac = jac_full[1:, 1:]
        try:
            step = np.linalg.solve(jac, -r[1:])
        except np.linalg.LinAlgError:
            raise NumericalError("equilibrium Newton iteration hit a singular Jacobian") from None
        delta = delta.copy()
        delta[1:] += step
        if not np.all(np.isfinite(delta)):
            raise NumericalError("equilibrium Newton iteration diverged")
    raise NumericalError(
        f"no equilibrium found in {max_iter} Newton iterations (over-stressed network?)"
    )


def _fault_arrays(net: SwingNetwork, fault: FaultSpec) -> tuple[np.ndarray, np.ndarray]:
    idx = net.bus_index(fault.bus)
    if fault.mode == "power_sink":
        p = net.p_m.copy()
        p[idx] -= fault.magnitude
        return net.b, p
    b = net.b.copy()
    b[idx, :] *= fault.magnitude
    b[:, idx] *= fault.magnitude
    return b, net.p_m


def _rk4_step(net: SwingNetwork, state: np.ndarray, h: float,
              b: Optional[np.ndarray], p_m: Optional[np.ndarray]) -> np.ndarray:
    k1 = swing_rhs(net, state, b, p_m)
    k2 = swing_rhs(net, state + 0.5 * h * k1, b, p_m)
    k3 = swing_rhs(net, state + 0.5 * h * k2, b, p_m)
    k4 = swing_rhs(net, state + h * k3, b, p_m)
    return state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def simulate(net: SwingNetwork, fault: Optional[FaultSpec], cfg: SimConfig) -> Trajectory:
    """Integrate one scenario and sample it at ``cfg.dt_out``.

    The fault window ``[t_start, t_start + duration)`` is snapped to the
    integration grid so the dynamics never switch inside an RK4 step.
    Raises :class:`NumericalError` when any per-unit speed deviation
    exceeds ``OMEGA_DEVIATION_LIMIT`` (severe fault, system instability).
    """
    n = net.n
    if cfg.initial_state is not None:
        state = np.asarray(cfg.initial_state, dtype=float).copy()
        if state.shape != (2 * n,):
            raise ValueError(f"initial state must have shape ({2 * n},)")
    else:
        state = solve_equilibrium(net)

    h = cfg.dt_int
    # fault on/off as internal-step indices, snapped to the grid
    if fault is not None:
        if fault.t_start + fault.duration > cfg.horizon + 1e-12:
            raise ValueError("fault window must lie inside the horizon")
        net.bus_index(fault.bus)
        on = round(fault.t_start / h)
        off = round((fault.t_start + fault.duration) / h)
        b_fault, p_fault = _fault_arrays(net, fault)
    else:
        on = off = -1
        b_fault = p_fault = None

    n_out = int(math.floor(cfg.horizon / cfg.dt_out + 1e-9)) + 1
    stride = cfg.stride
    out = np.empty((2 * n, n_out))

    def record(col: int, s: np.ndarray) -> None:
        delta, omega = _split(s, n)
        out[0::2, col] = omega
        out[1::2, col] = delta

    record(0, state)
    step = 0
    for col in range(1, n_out):
        for _ in range(stride):
            faulted = on <= step < off
            state = _rk4_step(net, state, h,
                              b_fault if faulted else None,
                              p_fault if faulted else None)
            step += 1
            if np.max(np.abs(state[n:] - 1.0)) > OMEGA_DEVIATION_LIMIT:
                raise NumericalError(
                    f"instability: speed deviation exceeded {OMEGA_DEVIATION_LIMIT} p.u. "
                    f"at t={step * h:.3f}s"
                )
        record(col, state)

    fault_time = fault.t_start if fault is not None else None
    return Trajectory(net.schema, cfg.dt_out, 0.0, out, fault_time)


def generate_scenarios(
    net: SwingNetwork,
    buses: Sequence[int],
    cfg: SimConfig,
    fault_template: FaultSpec,
) -> TrajectorySet:
    """One trajectory per bus, using the fault template at each location.

    Scenarios that hit the instability guard are skipped with a warning;
    if every scenario is unstable, raises :class:`NumericalError`.
    """
    if not buses:
        raise ValueError("bus list must not be empty")
    trajectories = []
    for bus in buses:
        fault = replace(fault_template, bus=bus)
        try:
            trajectories.append(simulate(net, fault, cfg))
        except NumericalError as exc:
            warnings.warn(f"skipping unstable scenario at bus {bus}: {exc}", stacklevel=2)
    if not trajectories:
        raise NumericalError("all scenarios were unstable")
    return TrajectorySet(tuple(trajectories))


# ---------------------------------------------------------------------------
# Network JSON I/O
#
# {"omega0": 314.159, "generators": [{"bus": 1, "J": 10, "D": 1, "Pm": 0.5}],
#  "couplings": [{"i": 1, "j": 2, "B": 6.0}]}
# ---------------------------------------------------------------------------


def load_network(path: str) -> SwingNetwork:
    """Read a network description from JSON."""
    if not os.path.exists(path):
        raise DataError(f"network file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid JSON ({exc})") from None
    try:
        gens = sorted(raw["generators"], key=lambda g: int(g["bus"]))
        bus_ids = tuple(int(g["bus"]) for g in gens)
        j = [float(g["J"]) for g in gens]
        d = [float(g["D"]) for g in gens]
        p_m = [float(g["Pm"]) for g in gens]
        omega0 = float(raw["omega0"])
        n = len(bus_ids)
        pos = {bus: k for k, bus in enumerate(bus_ids)}
        b = np.zeros((n, n))
        for c in raw.get("couplings", []):
            bi, bj = pos[int(c["i"])], pos[int(c["j"])]
            b[bi, bj] = b[bj, bi] = float(c["B"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: malformed network description ({exc})") from None
    return SwingNetwork(bus_ids, j, d, p_m, b, omega0)


def write_network(net: SwingNetwork, path: str) -> None:
    """Write a network description as JSON."""
    gens = [
        {"bus": bus, "J": float(net.j[k]), "D": float(net.d[k]), "Pm": float(net.p_m[k])}
        for k, bus in enumerate(net.bus_ids)
    ]
    couplings = []
    for a in range(net.n):
        for c in range(a + 1, net.n):
            if net.b[a, c] > 0:
                couplings.append({"i": net.bus_ids[a], "j": net.bus_ids[c],
                                  "B": float(net.b[a, c])})
    doc = {"omega0": net.omega0, "generators": gens, "couplings": couplings}
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    os.replace(tmp, path)


def five_machine_network() -> SwingNetwork:
    """Two-area five-machine test network with a weakly coupled outlier.

    Buses 1-2 and 3-4 form two strongly coupled areas joined by weak ties,
    which produces a low-frequency inter-area mode (near 0.6 Hz) spread over
    the whole system; the light machine at bus 5 hangs off bus 4 through a
    weak coupling and carries a distinct local mode near 1.4 Hz.  Area 1-2
    exports power over the ties, so the tie angles sit well away from zero
    and coupling faults produce visibly anharmonic swings.  Used by the
    demos and the test suite.
    """
    b = np.zeros((5, 5))
    pairs = {(0, 1): 6.0, (2, 3): 6.0, (0, 2): 0.5, (1, 3): 0.5, (3, 4): 0.4}
    for (a, c), val in pairs.items():
        b[a, c] = b[c, a] = val
    return SwingNetwork(
        bus_ids=(1, 2, 3, 4, 5),
        j=[18.0, 14.0, 16.0, 12.0, 1.5],
        d=[1.2, 1.0, 1.1, 0.9, 0.06],
        p_m=[0.45, 0.20, -0.25, -0.30, -0.10],
        b=b,
        omega0=2 * math.pi * 50.0,
    )
