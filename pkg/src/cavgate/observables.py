"""Gate metrics and field reconstructions computed from integrated states."""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import trapezoid

from .errors import ZeroInput
from .model import AmplitudeState, ModeGrid

SCHEMA_VERSION = 1
# |Phi| this close to pi/2 sits on the branch seam of the half-angle
PHASE_SEAM_MARGIN = 0.05


def fidelity_phase(c_plus_0, c_plus_final) -> tuple[float, float]:
    """Overlap of the final + channel with the input, as ``F exp(2 i Phi)``.

    Uses ``F exp(2i Phi) = -<C(0)|C(inf)> / <C(0)|C(0)>``, which does not depend on
    how the + channel is normalised. ``Phi`` lies in (-pi/2, pi/2].

    Raises:
        ZeroInput: the input vector is zero.
        ValueError: the vectors differ in length.
    """
    c0 = np.asarray(c_plus_0, dtype=complex)
    cf = np.asarray(c_plus_final, dtype=complex)
    if c0.shape != cf.shape:
        raise ValueError(f"shape mismatch {c0.shape} vs {cf.shape}")
    norm = float(np.vdot(c0, c0).real)
    if norm == 0:
        raise ZeroInput("input + channel is empty")
    ratio = -np.vdot(c0, cf) / norm
    phi = float(np.angle(ratio)) / 2.0
    if phi <= -math.pi / 2:  # np.angle gives -pi for a signed-zero imaginary part
        phi += math.pi
    return float(abs(ratio)), phi


def numeric_loss(traj, gamma: float) -> float:
    """``2 gamma int |C2|^2 dt`` by the trapezoidal rule over the dense record."""
    if gamma == 0:
        return 0.0
    t, p = traj.c2_record
    return float(2.0 * gamma * trapezoid(p, t))


def polarization_amplitudes(state: AmplitudeState) -> tuple[np.ndarray, np.ndarray]:
    return state.c_h, state.c_v


def mode_spectrum(state: AmplitudeState) -> tuple[np.ndarray, np.ndarray]:
    """``(|C_hn|^2, |C_vn|^2)`` per mode."""
    h, v = polarization_amplitudes(state)
    return np.abs(h) ** 2, np.abs(v) ** 2


def spectral_moments(grid: ModeGrid, weights) -> tuple[float, float]:
    """Centroid and variance of a spectrum, in units of the mode index."""
    w = np.asarray(weights, dtype=float)
    total = w.sum()
    if total == 0:
        raise ZeroInput("empty spectrum")
    n = grid.n
    mean = float(np.dot(n, w) / total)
    var = float(np.dot((n - mean) ** 2, w) / total)
    return mean, var


def field_profile(
    grid: ModeGrid, state: AmplitudeState, z, kappa: float = 1.0
) -> tuple[np.ndarray, np.ndarray]:
    """Envelope intensities ``(I_h(z), I_v(z))`` of the photon at time ``state.t``.

    ``I(z) = (s / 2 pi) |sum_n C_n exp(i n s (z - t))|^2`` with ``s`` the mode spacing,
    so that integrating over one quantization length returns ``sum_n |C_n|^2``.
    Positions with ``z > 0`` show the reflected pulse unfolded onto the line
    beyond the mirror. ``z`` is in units of ``c / kappa``.
    """
    z = np.asarray(z, dtype=float)
    if z.size and np.max(np.abs(z)) > 0.5 * grid.quantization_time:
        raise ValueError("positions must lie within half a quantization length of the mirror")
    s = grid.spacing
    k = grid.n * s
    # spectral sums are short compared with typical z grids, so chunk over z
    out_h = np.empty(z.shape)
    out_v = np.empty(z.shape)
    h, v = polarization_amplitudes(state)
    flat = (z / kappa - state.t).ravel()
    fh = out_h.reshape(-1)
    fv = out_v.reshape(-1)
    chunk = max(1, 2_000_000 // max(grid.size, 1))
    for i in range(0, flat.size, chunk):
        ph = np.exp(1j * np.multiply.outer(flat[i : i + chunk], k))
        fh[i : i + chunk] = np.abs(ph @ h) ** 2
        fv[i : i + chunk] = np.abs(ph @ v) ** 2
    scale = s / (2.0 * math.pi)
    return out_h * scale, out_v * scale


def write_profile_csv(path, z, i_h, i_v) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["z_s", "I_h", "I_v"])
        for row in zip(np.ravel(z), np.ravel(i_h), np.ravel(i_v)):
            w.writerow([repr(float(x)) for x in row])
    return path


def write_spectrum_csv(path, grid: ModeGrid, state: AmplitudeState) -> Path:
    path = Path(path)
    sh, sv = mode_spectrum(state)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "|C_hn|^2", "|C_vn|^2"])
        for n, a, b in zip(grid.n, sh, sv):
            w.writerow([int(n), repr(float(a)), repr(float(b))])
    return path


def _jsonable(x):
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


@dataclass
class GateReport:
    """Outcome of one scattering run, with the closed-form references alongside."""

    F: float
    Phi: float
    p_loss_numeric: float
    phi: float | None
    multiplier: complex
    lambda1: complex
    lambda2: complex
    p_loss_formula: float
    p_loss_sqrt_swap: float | None
    adiabaticity_ratio: float
    norm_drift: float
    final_norm: float
    c2_final: float
    params: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    run: dict = field(default_factory=dict)

    @property
    def phase_near_seam(self) -> bool:
        return abs(abs(self.Phi) - math.pi / 2) < PHASE_SEAM_MARGIN

    def to_dict(self) -> dict:
        d = {"schema_version": SCHEMA_VERSION}
        for f in dataclasses.fields(self):
            if f.name == "multiplier":
                continue
            d[f.name] = _jsonable(getattr(self, f.name))
        d["multiplier_re"] = self.multiplier.real
        d["multiplier_im"] = self.multiplier.imag
        d["phase_near_seam"] = self.phase_near_seam
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), default=_jsonable, **kw)

    @classmethod
    def from_dict(cls, d: dict) -> GateReport:
        def c(v):
            return complex(*v) if isinstance(v, list) else complex(v)

        names = {f.name for f in dataclasses.fields(cls)}
        kw = {k: v for k, v in d.items() if k in names}
        kw["multiplier"] = complex(d["multiplier_re"], d["multiplier_im"])
        kw["lambda1"] = c(d["lambda1"])
        kw["lambda2"] = c(d["lambda2"])
        if kw.get("adiabaticity_ratio") is None:
            kw["adiabaticity_ratio"] = math.inf
        return cls(**kw)
