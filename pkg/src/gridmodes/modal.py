"""Modal parameters, mode classification, ranking, and FFT cross-checks.

Discrete eigenvalues are mapped to continuous-time frequency, decay and
damping ratio through the principal logarithm.  Spatial concentration is
measured by the inverse participation ratio (IPR) over per-bus energy
shares, which separates modes localized on a few generators from
system-wide ones.  FFT spectra of individual channels provide an
independent frequency reference for validating identified modes.
"""

from __future__ import annotations

import cmath
import csv
import math
import os
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.signal import find_peaks

from .decomposition import HodmdModel
from .errors import DataError
from .trajectory import FLOAT_FORMAT, ChannelSchema, Trajectory

__all__ = [
    "F_MIN_HZ",
    "Classification",
    "ModeSummary",
    "Spectrum",
    "continuous_parameters",
    "classify_mode",
    "bus_participation",
    "rank_modes",
    "fft_spectrum",
    "spectral_peaks",
    "write_mode_table",
]

#: below this frequency a mode is reported as non-oscillatory (pure decay).
F_MIN_HZ = 1e-3


def continuous_parameters(lam: complex, dt: float) -> tuple[float, float, Optional[float]]:
    """Frequency (Hz), decay (1/s) and damping ratio (%) of one eigenvalue.

    Uses the principal branch s = ln(lambda)/dt, so the frequency is capped
    at the Nyquist limit 1/(2 dt).  The damping ratio
    100 * sigma / sqrt(sigma^2 + Im(s)^2) is undefined for non-oscillatory
    modes (frequency below ``F_MIN_HZ``) and returned as None there.
    """
    if lam == 0:
        raise ValueError("eigenvalue must be nonzero")
    if not dt > 0:
        raise ValueError("dt must be positive")
    s = cmath.log(complex(lam)) / dt
    freq = abs(s.imag) / (2.0 * math.pi)
    sigma = -s.real
    if freq < F_MIN_HZ:
        return freq, sigma, None
    zeta = 100.0 * sigma / math.hypot(sigma, s.imag)
    return freq, sigma, zeta


@dataclass(frozen=True)
class Classification:
    """Spatial character of a mode: ``local`` (with bus ids), ``global``,
    or ``non_oscillatory``."""

    kind: str
    buses: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in ("local", "global", "non_oscillatory"):
            raise ValueError(f"unknown classification {self.kind!r}")

    def __str__(self) -> str:
        return self.kind


def bus_participation(u: np.ndarray, schema: ChannelSchema) -> np.ndarray:
    """Per-bus energy shares p_i of a spatial mode vector.

    Each bus contributes the squared moduli of its two channels, normalized
    so the shares sum to one.  Invariant under global phase and scaling.
    """
    u = np.asarray(u, dtype=complex).ravel()
    if u.shape != (schema.n_channels,):
        raise DataError(f"mode vector must have {schema.n_channels} entries")
    power = np.abs(u) ** 2
    total = power.sum()
    if total == 0:
        raise ValueError("mode vector must be nonzero")
    shares = np.empty(schema.n_buses)
    for k, bus in enumerate(schema.bus_ids):
        rows = schema.bus_rows(bus)
        shares[k] = power[rows[0]] + power[rows[1]]
    return shares / total


def classify_mode(u: np.ndarray, schema: ChannelSchema,
                  ipr_threshold: float = 0.5) -> Classification:
    """Label a unit spatial mode as local (listing its buses) or global.

    A mode is local when the inverse participation ratio of its per-bus
    energy shares reaches ``ipr_threshold``; the buses reported are those
    holding at least a quarter of the energy.
    """
    shares = bus_participation(u, schema)
    ipr = float(np.sum(shares**2))
    if ipr >= ipr_threshold:
        buses = tuple(bus for bus, p in zip(schema.bus_ids, shares) if p >= 0.25)
        return Classification("local", buses)
    return Classification("global")


@dataclass(frozen=True)
class ModeSummary:
    """One reported mode: continuous-time parameters, aggregated amplitude,
    spatial classification and IPR concentration."""

    index: int
    frequency: float
    decay: float
    damping_pct: Optional[float]
    amplitude: float
    classification: Classification
    concentration: float


def _conjugate_partner(lambdas: np.ndarray, i: int, tol: float = 1e-9) -> bool:
    """Whether mode i has a conjugate partner elsewhere in the set."""
    others = np.delete(np.arange(lambdas.size), i)
    return bool(np.any(np.abs(lambdas[others] - np.conj(lambdas[i])) <= tol))


def rank_modes(
    model: HodmdModel,
    top_n: int,
    ipr_threshold: float = 0.5,
    aggregate: str = "max",
    f_min: float = F_MIN_HZ,
) -> list[ModeSummary]:
    """Top modes by amplitude, conjugate pairs collapsed.

    Per-trajectory amplitudes are aggregated with ``max`` (a mode counts if
    any scenario excites it) or ``mean``.  Of each conjugate pair only the
    positive-frequency member is reported.  Modes below ``f_min`` are
    labelled non-oscillatory.
    """
    if aggregate == "max":
        agg = model.amplitudes.max(axis=0)
    elif aggregate == "mean":
        agg = model.amplitudes.mean(axis=0)
    else:
        raise ValueError(f"unknown aggregate {aggregate!r}")

    summaries = []
    for m in range(model.n_modes):
        lam = model.lambdas[m]
        if lam.imag < -1e-9 and _conjugate_partner(model.lambdas, m):
            continue  # the positive-frequency member represents the pair
        freq, sigma, zeta = continuous_parameters(lam, model.dt)
        shares = bus_participation(model.spatial_modes[:, m], model.schema)
        ipr = float(np.sum(shares**2))
        if freq < f_min:
            cls = Classification("non_oscillatory")
        else:
            cls = classify_mode(model.spatial_modes[:, m], model.schema, ipr_threshold)
        summaries.append(ModeSummary(
            index=m,
            frequency=freq,
            decay=sigma,
            damping_pct=zeta,
            amplitude=float(agg[m]),
            classification=cls,
            concentration=ipr,
        ))
    summaries.sort(key=lambda s: (-s.amplitude, s.index))
    return summaries[:max(0, top_n)]


@dataclass(frozen=True)
class Spectrum:
    """One-sided magnitude spectrum of a single channel."""

    freqs: np.ndarray
    magnitudes: np.ndarray
    channel: str
    resolution: float

    def __post_init__(self) -> None:
        for name in ("freqs", "magnitudes"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def fft_spectrum(traj: Trajectory, channel: str, window: str = "hann") -> Spectrum:
    """One-sided magnitude spectrum of a mean-removed channel.

    Magnitudes carry the sqrt(2) one-sided energy weighting, so with
    ``window="none"`` the sum of squared magnitudes equals T times the
    centered signal energy sum((x - mean)^2) (Parseval), and a unit-
    amplitude sinusoid at an exact bin peaks at T/sqrt(2).  The Hann
    window (default) sharpens peak reading on decaying signals; its
    magnitudes are rescaled by T / sum(w) so peak heights stay comparable
    between the two windows.
    """
    t = traj.n_samples
    if t < 8:
        raise DataError(f"need at least 8 samples for a spectrum, got {t}")
    x = traj.channel(channel)
    x = x - x.mean()
    if window == "hann":
        w = np.hanning(t)
    elif window == "none":
        w = np.ones(t)
    else:
        raise ValueError(f"unknown window {window!r}")
    mags = np.abs(np.fft.rfft(x * w))
    one_sided = slice(1, -1) if t % 2 == 0 else slice(1, None)
    mags[one_sided] *= math.sqrt(2.0)
    mags *= t / w.sum()
    freqs = np.fft.rfftfreq(t, traj.dt)
    return Spectrum(freqs, mags, channel, 1.0 / (t * traj.dt))


def spectral_peaks(spectrum: Spectrum, rel_threshold: float = 0.1) -> list[tuple[float, float]]:
    """Local maxima above ``rel_threshold`` times the largest magnitude.

    Returns (frequency, magnitude) tuples sorted by magnitude descending;
    empty for an all-zero spectrum.
    """
    mags = spectrum.magnitudes
    top = mags.max() if mags.size else 0.0
    if top <= 0:
        return []
    idx, _ = find_peaks(mags, height=rel_threshold * top)
    peaks = [(float(spectrum.freqs[i]), float(mags[i])) for i in idx]
    peaks.sort(key=lambda p: -p[1])
    return peaks


def write_mode_table(summaries: Sequence[ModeSummary], path: str) -> None:
    """Write ranked modes as CSV.

    Columns: mode_index, frequency_hz, decay, damping_pct (empty for
    non-oscillatory modes), amplitude, classification, buses
    (semicolon-separated).
    """
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["mode_index", "frequency_hz", "decay", "damping_pct",
                         "amplitude", "classification", "buses"])
        for s in summaries:
            writer.writerow([
                s.index,
                FLOAT_FORMAT % s.frequency,
                FLOAT_FORMAT % s.decay,
                "" if s.damping_pct is None else FLOAT_FORMAT % s.damping_pct,
                FLOAT_FORMAT % s.amplitude,
                str(s.classification),
                ";".join(str(b) for b in s.classification.buses),
            ])
    os.replace(tmp, path)
