"""Units, parameters, the discrete mode lattice and initial pulse coefficients.

Everything is nondimensional: the cavity decay rate sets the unit of
frequency, times are in units of 1/kappa and positions in c/kappa (c = 1).
The only property of the large enclosing resonator that survives is the
spacing of its mode frequencies, ``spacing = pi c / L``.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    GridTooLarge,
    IndexOutOfRange,
    InfeasibleGrid,
    LatticeMismatch,
    PoorNormalization,
)

DEFAULT_SPAN = 8.0
DEFAULT_MAX_SPACING = 0.01
DEFAULT_TIME_FACTOR = 8.0
DEFAULT_MAX_MODES = 200_000


@dataclass(frozen=True)
class SystemParams:
    """Physical rates and detunings, in units of kappa.

    ``Delta`` is the pulse-cavity detuning. When the parameters are used with a
    mode grid it must equal ``n0 * grid.spacing`` for the integer ``n0`` carried
    alongside; :meth:`on_lattice` builds parameters that satisfy this exactly.
    """

    g: float
    gamma: float = 0.0
    delta_a: float = 0.0
    Delta: float = 0.0
    T: float = 100.0
    kappa: float = 1.0
    n0: int | None = None

    def __post_init__(self):
        if self.g < 0:
            raise ValueError(f"g must be >= 0, got {self.g}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.T <= 0:
            raise ValueError(f"T must be > 0, got {self.T}")
        if self.kappa <= 0:
            raise ValueError(f"kappa must be > 0, got {self.kappa}")

    @property
    def Gamma(self) -> float:
        """Purcell-enhanced atomic decay rate into the cavity channel, 2 g^2 / kappa."""
        return 2.0 * self.g**2 / self.kappa

    def replace(self, **changes) -> SystemParams:
        return dataclasses.replace(self, **changes)

    @classmethod
    def on_lattice(cls, grid: ModeGrid, n0: int, **kwargs) -> SystemParams:
        return cls(Delta=n0 * grid.spacing, n0=int(n0), **kwargs)

    def check_lattice(self, grid: ModeGrid) -> None:
        if self.n0 is None:
            if self.Delta != 0.0:
                raise LatticeMismatch("Delta != 0 but no lattice index n0 was given")
            return
        if not grid.n_min <= self.n0 <= grid.n_max:
            raise LatticeMismatch(f"n0={self.n0} outside grid [{grid.n_min}, {grid.n_max}]")
        if self.Delta != self.n0 * grid.spacing:
            raise LatticeMismatch(
                f"Delta={self.Delta!r} != n0*spacing={self.n0 * grid.spacing!r}"
            )


@dataclass(frozen=True)
class GridSafety:
    time_factor: float = DEFAULT_TIME_FACTOR
    max_modes: int = DEFAULT_MAX_MODES


@dataclass(frozen=True)
class ModeGrid:
    """Integer mode indices ``n_min..n_max`` with angular-frequency spacing ``spacing``."""

    spacing: float
    n_min: int
    n_max: int

    def __post_init__(self):
        if not self.spacing > 0:
            raise ValueError(f"spacing must be > 0, got {self.spacing}")
        if not self.n_min < 0 < self.n_max:
            raise ValueError(f"need n_min < 0 < n_max, got [{self.n_min}, {self.n_max}]")

    @property
    def n(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_max + 1)

    @property
    def size(self) -> int:
        return self.n_max - self.n_min + 1

    @property
    def frequencies(self) -> np.ndarray:
        """Mode offsets from the cavity line, ``n * spacing``."""
        return self.n * self.spacing

    @property
    def quantization_time(self) -> float:
        """Round-trip (recurrence) time of the enclosing resonator, 2 pi / spacing."""
        return 2.0 * math.pi / self.spacing

    @property
    def band(self) -> tuple[float, float]:
        """Frequency interval covered by the modes (midpoint-rule cell edges)."""
        return ((self.n_min - 0.5) * self.spacing, (self.n_max + 0.5) * self.spacing)

    def index(self, n: int) -> int:
        """Array position of mode ``n``."""
        if not self.n_min <= n <= self.n_max:
            raise IndexOutOfRange(f"mode {n} outside [{self.n_min}, {self.n_max}]")
        return int(n - self.n_min)


@dataclass(frozen=True)
class PulseSpec:
    """Incoming Gaussian pulse: duration ``T``, start position ``z0`` (< 0), carrier index ``n0``.

    ``z0`` defaults to ``-4 T`` so the pulse starts well clear of the mirror.
    """

    T: float
    z0: float | None = None
    n0: int = 0

    def __post_init__(self):
        if self.T <= 0:
            raise ValueError(f"T must be > 0, got {self.T}")
        if self.z0 is None:
            object.__setattr__(self, "z0", -4.0 * self.T)
        if not self.z0 < 0:
            raise ValueError(f"z0 must be < 0, got {self.z0}")


@dataclass(frozen=True)
class AmplitudeState:
    """Wavefunction coefficients at time ``t`` in the +/- polarization basis.

    ``c_plus``/``c_minus`` are ``(C_h +/- C_v) / sqrt(2)`` for each mode.
    """

    c2: complex
    c_plus: np.ndarray
    c_minus: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "c2", complex(self.c2))
        object.__setattr__(self, "c_plus", np.asarray(self.c_plus, dtype=complex))
        object.__setattr__(self, "c_minus", np.asarray(self.c_minus, dtype=complex))
        if self.c_plus.shape != self.c_minus.shape or self.c_plus.ndim != 1:
            raise ValueError("c_plus and c_minus must be 1-d arrays of equal length")

    @property
    def c_h(self) -> np.ndarray:
        return (self.c_plus + self.c_minus) / math.sqrt(2.0)

    @property
    def c_v(self) -> np.ndarray:
        return (self.c_plus - self.c_minus) / math.sqrt(2.0)

    def norm(self) -> float:
        """Total probability |C2|^2 + sum |C+|^2 + sum |C-|^2."""
        return float(
            abs(self.c2) ** 2
            + np.vdot(self.c_plus, self.c_plus).real
            + np.vdot(self.c_minus, self.c_minus).real
        )


def build_mode_grid(
    spacing: float,
    span: float = DEFAULT_SPAN,
    T: float | None = None,
    safety: GridSafety = GridSafety(),
    center: float = 0.0,
    min_time: float | None = None,
) -> ModeGrid:
    """Build the mode lattice and check it against the run's time and size budget.

    Args:
        spacing: Mode angular-frequency spacing (units of kappa).
        span: Required spectral half-width about ``center``.
        T: Pulse duration. When given, the quantization time must be at least
            ``safety.time_factor * T``.
        safety: Time factor and mode-count ceiling.
        center: Frequency the band is centred on. Rounded to the lattice.
        min_time: Additional lower bound on the quantization time, e.g. the
            integration end time.

    Raises:
        InfeasibleGrid: the spacing is too coarse for the time constraints.
        GridTooLarge: the implied mode count exceeds ``safety.max_modes``.
    """
    if not spacing > 0 or not span > 0:
        raise ValueError("spacing and span must be positive")
    qtime = 2.0 * math.pi / spacing
    if T is not None and qtime < safety.time_factor * T * (1 - 1e-12):
        raise InfeasibleGrid(
            f"quantization time {qtime:.4g} < {safety.time_factor:g} T = {safety.time_factor * T:.4g}"
        )
    if min_time is not None and qtime < min_time * (1 - 1e-12):
        raise InfeasibleGrid(f"quantization time {qtime:.4g} < required {min_time:.4g}")
    c = round(center / spacing)
    half = math.ceil(span / spacing - 1e-9)
    n_min, n_max = c - half, c + half
    if not n_min < 0 < n_max:
        raise InfeasibleGrid(f"band centred at {center} does not contain the cavity line")
    count = n_max - n_min + 1
    if count > safety.max_modes:
        raise GridTooLarge(f"{count} modes exceeds ceiling {safety.max_modes}")
    return ModeGrid(spacing, n_min, n_max)


def lattice_spacing(
    max_spacing: float, Delta: float = 0.0
) -> tuple[float, int]:
    """Largest spacing <= ``max_spacing`` that puts ``Delta`` exactly on the lattice.

    Returns ``(spacing, n0)`` with ``n0 * spacing == Delta`` up to rounding of the
    final product; callers should store ``Delta = n0 * spacing``.
    """
    if Delta == 0.0:
        return max_spacing, 0
    n0 = math.ceil(abs(Delta) / max_spacing - 1e-12)
    n0 = n0 if Delta > 0 else -n0
    return Delta / n0, n0


def default_max_spacing(T: float, min_time: float | None = None,
                        time_factor: float = DEFAULT_TIME_FACTOR) -> float:
    """Spacing ceiling: resolves kappa/100 and keeps the recurrence beyond the run."""
    s = min(DEFAULT_MAX_SPACING, 2.0 * math.pi / (time_factor * T))
    if min_time is not None:
        s = min(s, 2.0 * math.pi / min_time)
    return s


def coupling_coefficients(grid: ModeGrid, kappa: float = 1.0) -> np.ndarray:
    """Cavity-to-mode coupling weights M'_n; a Lorentzian in n that sums to ~1 in square."""
    nu = grid.frequencies
    return np.sqrt(kappa * grid.spacing / math.pi) / np.sqrt(nu**2 + kappa**2)


def gaussian_pulse_coefficients(
    grid: ModeGrid, pulse: PulseSpec, tol: float = 1e-6
) -> tuple[np.ndarray, float]:
    """Mode coefficients of a Gaussian single-photon pulse centred at ``pulse.z0``.

    Returns:
        The coefficient vector and its norm ``sum |C_n|^2``.

    Raises:
        PoorNormalization: the norm is off by more than ``tol``, i.e. the grid
            does not resolve or contain the pulse spectrum.
    """
    s = grid.spacing
    n = grid.n
    ts = pulse.T * s
    amp = (math.pi / 2.0) ** 0.25 * math.sqrt(ts / math.pi)
    coeffs = amp * np.exp(-1j * n * s * pulse.z0) * np.exp(-((ts * (n - pulse.n0) / 2.0) ** 2))
    norm = float(np.vdot(coeffs, coeffs).real)
    if abs(norm - 1.0) > tol:
        raise PoorNormalization(f"pulse norm {norm:.12f} deviates from 1 by more than {tol:g}")
    return coeffs, norm


def mode_detuning(grid: ModeGrid, n: int, delta_a: float) -> float:
    """Detuning of mode ``n`` from the atom."""
    grid.index(n)
    return n * grid.spacing + delta_a


def initial_state(
    grid: ModeGrid, pulse: PulseSpec, polarization: str = "V", tol: float = 1e-6
) -> AmplitudeState:
    """Atom in its ground state and one photon in the Gaussian pulse.

    ``polarization="V"`` pairs the photon with atomic state |0>, ``"H"`` with |1>;
    either way the + channel carries half of the norm.
    """
    coeffs, _ = gaussian_pulse_coefficients(grid, pulse, tol=tol)
    half = coeffs / math.sqrt(2.0)
    if polarization.upper() == "V":
        c_minus = -half
    elif polarization.upper() == "H":
        c_minus = half.copy()
    else:
        raise ValueError(f"polarization must be 'H' or 'V', got {polarization!r}")
    return AmplitudeState(0.0, half, c_minus, 0.0)


def write_grid_csv(path, grid: ModeGrid, coeffs: np.ndarray, kappa: float = 1.0) -> Path:
    """Write ``n, M_n, Re C_n, Im C_n`` with a header row."""
    path = Path(path)
    m = coupling_coefficients(grid, kappa)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "M_n", "Re C_n", "Im C_n"])
        for n, mn, c in zip(grid.n, m, coeffs):
            w.writerow([int(n), repr(float(mn)), repr(float(c.real)), repr(float(c.imag))])
    return path
