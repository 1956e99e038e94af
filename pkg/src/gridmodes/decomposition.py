"""Core decomposition: truncated SVD, reduced operator, eigenmodes.

Given the delay-embedded pair (X, Y) this fits the best linear map Y = A X
in the standard reduced form: X = U S V^H truncated at rank r, reduced
operator K = U^H Y V S^{-1}, eigendecomposition K W = W Lambda.  The
stacked eigenvectors are Phi = U W; the reported spatial modes are the
first 2N rows of Phi with columns normalized to unit length, and the
column norms are kept separately so reconstruction can undo the
normalization.

Everything is made deterministic: singular-vector signs follow the
largest-entry-positive convention, eigenvalues are sorted by modulus
descending then angle ascending, and each eigenvector's largest entry is
rotated to the positive real axis.
"""

from __future__ import annotations

import json
import os
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .embedding import EmbeddedPair
from .errors import DataError, NumericalError
from .trajectory import ChannelSchema, SteadyState

__all__ = ["RankSpec", "HodmdModel", "select_rank", "fit", "write_model", "load_model"]

#: modes whose spatial content (first-block norm) falls below this are
#: artifacts of the delay structure and are dropped with a warning.
DEGENERATE_MODE_TOL = 1e-12


@dataclass(frozen=True)
class RankSpec:
    """SVD truncation rule.

    ``tolerance`` mode keeps the largest r with sigma_r / sigma_1 >
    ``eps_rel``; ``fixed`` mode keeps exactly ``r`` (capped at the number
    of singular values available).
    """

    mode: str = "tolerance"
    r: Optional[int] = None
    eps_rel: float = 1e-8

    def __post_init__(self) -> None:
        if self.mode == "fixed":
            if self.r is None or self.r < 1:
                raise ValueError("fixed rank must be >= 1")
        elif self.mode == "tolerance":
            if not (0.0 < self.eps_rel < 1.0):
                raise ValueError("relative tolerance must lie in (0, 1)")
        else:
            raise ValueError(f"unknown rank mode {self.mode!r}")

    @classmethod
    def fixed(cls, r: int) -> "RankSpec":
        return cls(mode="fixed", r=r)

    @classmethod
    def tolerance(cls, eps_rel: float = 1e-8) -> "RankSpec":
        return cls(mode="tolerance", eps_rel=eps_rel)


def select_rank(singular_values, spec: RankSpec) -> int:
    """Number of singular values to retain under the given rule."""
    s = np.asarray(singular_values, dtype=float).ravel()
    if s.size == 0:
        raise ValueError("singular value list must not be empty")
    if np.any(np.diff(s) > 0) or np.any(s < 0):
        raise ValueError("singular values must be non-negative and descending")
    if spec.mode == "fixed":
        return min(spec.r, s.size)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > spec.eps_rel * s[0]))


@dataclass(frozen=True)
class HodmdModel:
    """Fitted linear model of delay-embedded dynamics.

    ``lambdas`` are discrete-time eigenvalues (per sample step);
    ``spatial_modes`` (2N x m) hold the unit-norm first-block parts of the
    stacked eigenvectors and ``mode_norms`` their original column norms;
    ``amplitudes`` (Q x m) give each trajectory's modal excitation,
    measured at its first embedded snapshot.  ``phi`` (2Nd x m stacked
    eigenvectors) and ``phi_pinv`` (its left inverse on the retained
    subspace) are carried for reconstruction; a model loaded from JSON
    written without them cannot reconstruct.
    """

    d: int
    dt: float
    schema: ChannelSchema
    r: int
    lambdas: np.ndarray
    spatial_modes: np.ndarray
    mode_norms: np.ndarray
    amplitudes: np.ndarray
    center: Optional[SteadyState] = None
    phi: Optional[np.ndarray] = None
    phi_pinv: Optional[np.ndarray] = None
    u: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        for name in ("lambdas", "spatial_modes", "mode_norms", "amplitudes",
                     "phi", "phi_pinv", "u"):
            arr = getattr(self, name)
            if arr is None:
                continue
            arr = np.array(arr, copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_modes(self) -> int:
        return self.lambdas.size

    @property
    def n_channels(self) -> int:
        return self.schema.n_channels


def _canonical_svd(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """SVD with each left singular vector's largest entry made positive."""
    u, s, vh = np.linalg.svd(x, full_matrices=False)
    for k in range(u.shape[1]):
        i = int(np.argmax(np.abs(u[:, k])))
        if u[i, k] < 0:
            u[:, k] = -u[:, k]
            vh[k, :] = -vh[k, :]
    return u, s, vh


def _canonical_phases(w: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-modulus entry is real positive."""
    w = w.copy()
    for k in range(w.shape[1]):
        i = int(np.argmax(np.abs(w[:, k])))
        pivot = w[i, k]
        if pivot != 0:
            w[:, k] = w[:, k] * (np.conj(pivot) / abs(pivot))
    return w


def fit(pair: EmbeddedPair, spec: Optional[RankSpec] = None) -> HodmdModel:
    """Fit the reduced linear operator and extract its eigenmodes.

    Raises :class:`NumericalError` for degenerate data (rank-deficient
    truncated SVD) or a defective eigenvector basis.
    """
    if spec is None:
        spec = RankSpec()
    x, y = pair.x, pair.y
    if x.shape[1] < 1:
        raise DataError("embedded pair has no snapshot columns")

    u, s, vh = _canonical_svd(x)
    r = select_rank(s, spec)
    if r < 1 or s[r - 1] <= 0.0:
        raise NumericalError("rank-deficient data: truncated SVD has zero singular values")

    ur = u[:, :r]
    k_red = (ur.conj().T @ y @ vh[:r].conj().T) / s[:r][None, :]
    try:
        lam, w = np.linalg.eig(k_red)
    except np.linalg.LinAlgError:
        raise NumericalError("eigendecomposition of the reduced operator failed") from None

    order = np.lexsort((np.angle(lam), -np.abs(lam)))
    lam = lam[order]
    w = _canonical_phases(w[:, order])

    phi = ur.astype(complex) @ w
    try:
        phi_pinv = np.linalg.solve(w, ur.conj().T.astype(complex))
    except np.linalg.LinAlgError:
        raise NumericalError("defective eigenvector basis: modes are not independent") from None

    n_ch = pair.n_channels
    lphi = phi[:n_ch, :]
    norms = np.linalg.norm(lphi, axis=0)
    keep = norms >= DEGENERATE_MODE_TOL
    if not np.all(keep):
        warnings.warn(
            f"dropping {int(np.count_nonzero(~keep))} mode(s) with no spatial content",
            stacklevel=2,
        )
        if not np.any(keep):
            raise NumericalError("every mode is spatially degenerate")
        lam = lam[keep]
        phi = phi[:, keep]
        phi_pinv = phi_pinv[keep, :]
        lphi = lphi[:, keep]
        norms = norms[keep]

    spatial = lphi / norms[None, :]
    coeffs = phi_pinv @ pair.x_firsts  # (m, Q)
    amplitudes = (norms[:, None] * np.abs(coeffs)).T  # (Q, m)

    center = SteadyState(pair.center, source="centering") if pair.center is not None else None
    return HodmdModel(
        d=pair.d,
        dt=pair.dt,
        schema=pair.schema,
        r=r,
        lambdas=lam,
        spatial_modes=spatial,
        mode_norms=norms,
        amplitudes=amplitudes,
        center=center,
        phi=phi,
        phi_pinv=phi_pinv,
        u=ur,
    )


# ---------------------------------------------------------------------------
# Model JSON I/O.  Complex numbers are stored as [re, im] pairs; the heavy
# matrices phi / phi_pinv are written only when include_phi is set (they are
# required for reconstruction, not for mode tables).
# ---------------------------------------------------------------------------


def _complex_out(arr: np.ndarray) -> list:
    stacked = np.stack([arr.real, arr.imag], axis=-1)
    return stacked.tolist()


def _complex_in(obj, ndim: int) -> np.ndarray:
    arr = np.asarray(obj, dtype=float)
    if arr.ndim != ndim + 1 or arr.shape[-1] != 2:
        raise DataError("malformed complex array in model file")
    return arr[..., 0] + 1j * arr[..., 1]


def write_model(model: HodmdModel, path: str, include_phi: bool = True) -> None:
    """Write a fitted model as JSON."""
    doc = {
        "d": model.d,
        "dt": model.dt,
        "r": model.r,
        "schema": {"buses": list(model.schema.bus_ids)},
        "lambdas": _complex_out(model.lambdas),
        "spatial_modes": _complex_out(model.spatial_modes),
        "mode_norms": model.mode_norms.tolist(),
        "amplitudes": model.amplitudes.tolist(),
        "center": None if model.center is None else model.center.values.tolist(),
    }
    if include_phi:
        if model.phi is None or model.phi_pinv is None:
            raise DataError("model carries no stacked eigenvectors to write")
        doc["phi"] = _complex_out(model.phi)
        doc["phi_pinv"] = _complex_out(model.phi_pinv)
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")
    os.replace(tmp, path)


def load_model(path: str) -> HodmdModel:
    """Read a model written by :func:`write_model`."""
    if not os.path.exists(path):
        raise DataError(f"model file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid JSON ({exc})") from None
    try:
        schema = ChannelSchema.from_bus_ids(doc["schema"]["buses"])
        center = doc.get("center")
        model = HodmdModel(
            d=int(doc["d"]),
            dt=float(doc["dt"]),
            schema=schema,
            r=int(doc["r"]),
            lambdas=_complex_in(doc["lambdas"], 1),
            spatial_modes=_complex_in(doc["spatial_modes"], 2),
            mode_norms=np.asarray(doc["mode_norms"], dtype=float),
            amplitudes=np.asarray(doc["amplitudes"], dtype=float),
            center=None if center is None else SteadyState(np.asarray(center), "centering"),
            phi=_complex_in(doc["phi"], 2) if "phi" in doc else None,
            phi_pinv=_complex_in(doc["phi_pinv"], 2) if "phi_pinv" in doc else None,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: malformed model file ({exc})") from None
    return model
