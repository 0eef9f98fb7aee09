"""Time integration of the reduced single-excitation amplitude equations.

The + channel obeys

    dC2/dt  = g sqrt(2) sum_n M'_n C_n+ exp(-i delta_n t) - gamma C2
    dC_n+/dt = -g sqrt(2) M'_n C2 exp(+i delta_n t)

and the - amplitudes are constants of motion. Samples and the final state are
reported in exactly these (interaction-picture) variables.

Internally the integrator steps the free-evolution variables
``B_n = C_n+ exp(-i delta_n t)``, for which the system is linear with constant
coefficients. The oscillating phase factors then never have to be
re-evaluated inside a step, and the step size is set by accuracy
rather than by resolving every exp(i delta_n t).
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import DOP853

from .errors import (
    DimensionMismatch,
    IncompleteScattering,
    QuantizationTimeExceeded,
    StepSizeUnderflow,
)
from .model import AmplitudeState, ModeGrid, PulseSpec, SystemParams, coupling_coefficients

DEFAULT_RTOL = 1e-9
# absolute tolerance relative to rtol; most mode amplitudes are far below 1
DEFAULT_ATOL_RATIO = 1e-3
C2_TAIL_THRESHOLD = 1e-4


@dataclass
class Trajectory:
    """Time-sampled states plus a dense record of C2 for loss quadrature."""

    samples: list[tuple[float, AmplitudeState]]
    record_t: np.ndarray
    record_c2: np.ndarray
    norm_t: np.ndarray
    norm_values: np.ndarray
    final: AmplitudeState
    norm_drift: float
    n_steps: int = 0
    n_rhs: int = 0
    info: dict = field(default_factory=dict)

    @property
    def c2_record(self) -> tuple[np.ndarray, np.ndarray]:
        """``(t, |C2|^2)`` on the dense record grid."""
        return self.record_t, np.abs(self.record_c2) ** 2

    @property
    def record_norm(self) -> np.ndarray:
        """Total norm interpolated onto the record grid from the step boundaries."""
        return np.interp(self.record_t, self.norm_t, self.norm_values)

    def state_at(self, t: float) -> AmplitudeState:
        for ts, st in self.samples:
            if ts == t:
                return st
        raise KeyError(f"no sample at t={t}")

    def write_csv(self, path) -> Path:
        """Dense record as ``t, Re C2, Im C2, norm``."""
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "Re C2", "Im C2", "norm"])
            for t, c, nrm in zip(self.record_t, self.record_c2, self.record_norm):
                w.writerow([repr(float(t)), repr(float(c.real)), repr(float(c.imag)), repr(float(nrm))])
        return path


def write_snapshot_csv(path, grid: ModeGrid, state: AmplitudeState) -> Path:
    """Mode amplitudes of one state as ``n, Re C+, Im C+, Re C-, Im C-``."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "Re C+", "Im C+", "Re C-", "Im C-"])
        for n, p, m in zip(grid.n, state.c_plus, state.c_minus):
            w.writerow([int(n), repr(p.real), repr(p.imag), repr(m.real), repr(m.imag)])
    return path


def save_checkpoint(path, state: AmplitudeState) -> Path:
    """Store a state as JSON (real and imaginary parts listed separately)."""
    path = Path(path)
    payload = {
        "schema_version": 1,
        "t": state.t,
        "c2": [state.c2.real, state.c2.imag],
        "c_plus_re": state.c_plus.real.tolist(),
        "c_plus_im": state.c_plus.imag.tolist(),
        "c_minus_re": state.c_minus.real.tolist(),
        "c_minus_im": state.c_minus.imag.tolist(),
    }
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


def load_checkpoint(path) -> AmplitudeState:
    d = json.loads(Path(path).read_text(encoding="utf-8"))
    return AmplitudeState(
        complex(*d["c2"]),
        np.asarray(d["c_plus_re"]) + 1j * np.asarray(d["c_plus_im"]),
        np.asarray(d["c_minus_re"]) + 1j * np.asarray(d["c_minus_im"]),
        d["t"],
    )


def _first_component(dense, ts: np.ndarray) -> np.ndarray:
    # Evaluates only C2 from a DOP853 step interpolant; the full vector costs O(modes) per point.
    try:
        coeffs = dense.F[:, 0]
        y_old = dense.y_old[0]
        x = (ts - dense.t_old) / dense.h
    except AttributeError:
        return dense(ts)[0]
    y = np.zeros(ts.shape, dtype=complex)
    for i, c in enumerate(coeffs[::-1]):
        y += c
        y *= x if i % 2 == 0 else 1.0 - x
    return y + y_old


def _couplings(params: SystemParams, grid: ModeGrid) -> tuple[np.ndarray, np.ndarray]:
    v = params.g * math.sqrt(2.0) * coupling_coefficients(grid, params.kappa)
    detunings = grid.frequencies + params.delta_a
    return v, detunings


def rhs(state: AmplitudeState, t: float, params: SystemParams, grid: ModeGrid) -> AmplitudeState:
    """Time derivative of ``state`` in the interaction picture (returned as a state)."""
    if state.c_plus.shape != (grid.size,):
        raise DimensionMismatch(f"state has {state.c_plus.size} modes, grid has {grid.size}")
    v, dn = _couplings(params, grid)
    phase = np.exp(1j * dn * t)
    dc2 = np.dot(v, state.c_plus * phase.conj()) - params.gamma * state.c2
    dplus = -v * state.c2 * phase
    return AmplitudeState(dc2, dplus, np.zeros_like(state.c_minus), t)


def default_t_end(pulse: PulseSpec, params: SystemParams) -> float:
    """Round trip to the mirror plus a buffer for the pulse tail and cavity ring-down."""
    gamma_eff = max(params.Gamma, params.kappa * 1e-3)
    buffer = max(6.0 * pulse.T, 20.0 / min(params.kappa, gamma_eff))
    return 2.0 * abs(pulse.z0) + buffer


def default_record_step(T: float) -> float:
    return min(0.05, T / 200.0)


def _decoupled(initial, t_end, times, rec_t, minus_norm, gamma, tol, record_step) -> Trajectory:
    # g = 0: the + amplitudes are constant and C2 decays freely, so no stepping is needed
    t0 = float(initial.t)

    def c2(t):
        return initial.c2 * np.exp(-gamma * (np.asarray(t) - t0))

    plus_norm = float(np.vdot(initial.c_plus, initial.c_plus).real)
    samples = [
        (t, AmplitudeState(complex(c2(t)), initial.c_plus, initial.c_minus, t)) for t in times
    ]
    rec_c2 = c2(rec_t).astype(complex)
    norms = np.abs(rec_c2) ** 2 + plus_norm + minus_norm
    return Trajectory(
        samples=samples,
        record_t=rec_t,
        record_c2=rec_c2,
        norm_t=rec_t.copy(),
        norm_values=norms,
        final=samples[-1][1],
        norm_drift=float(np.max(np.abs(norms - norms[0]))),
        info={"rtol": tol, "atol": None, "record_step": record_step, "decoupled": True},
    )


def integrate(
    params: SystemParams,
    grid: ModeGrid,
    initial: AmplitudeState,
    t_end: float,
    tol: float = DEFAULT_RTOL,
    *,
    sample_times=None,
    record_step: float | None = None,
    atol: float | None = None,
    max_step: float = np.inf,
    check_tail: bool = True,
) -> Trajectory:
    """Integrate the amplitude equations from ``initial.t`` to ``t_end``.

    Uses the adaptive 8th-order Dormand-Prince pair with relative tolerance
    ``tol``. The - amplitudes are carried through unchanged.

    Args:
        params: System parameters.
        grid: Mode lattice matching the state's length.
        initial: Starting state.
        t_end: Final time; must not exceed one quantization time past the start.
        tol: Relative local error tolerance.
        sample_times: Times at which full states are stored. The start and
            end times are always included.
        record_step: Spacing of the dense |C2| record; defaults to
            ``min(0.05, T/200)``.
        atol: Absolute tolerance; defaults to ``tol * 1e-3``.
        max_step: Optional step ceiling.
        check_tail: Warn with :class:`IncompleteScattering` if ``|C2(t_end)|``
            is not below 1e-4.

    Raises:
        QuantizationTimeExceeded: the run would reach the recurrence of the
            discrete resonator.
        StepSizeUnderflow: the step controller failed.
    """
    t0 = float(initial.t)
    if initial.c_plus.shape != (grid.size,):
        raise DimensionMismatch(f"state has {initial.c_plus.size} modes, grid has {grid.size}")
    if t_end - t0 > grid.quantization_time * (1 + 1e-12):
        raise QuantizationTimeExceeded(
            f"run length {t_end - t0:.6g} exceeds quantization time {grid.quantization_time:.6g}"
        )
    if not t_end > t0:
        raise ValueError("t_end must be after the initial time")
    v, dn = _couplings(params, grid)
    gamma = params.gamma
    mi_dn = -1j * dn

    def f(t, y):
        out = np.empty_like(y)
        c2 = y[0]
        b = y[1:]
        out[0] = np.dot(v, b) - gamma * c2
        np.multiply(mi_dn, b, out=out[1:])
        out[1:] -= v * c2
        return out

    y0 = np.empty(grid.size + 1, dtype=complex)
    y0[0] = initial.c2
    y0[1:] = initial.c_plus * np.exp(-1j * dn * t0)
    minus_norm = float(np.vdot(initial.c_minus, initial.c_minus).real)

    if record_step is None:
        record_step = default_record_step(params.T)
    n_rec = int(math.ceil((t_end - t0) / record_step - 1e-9))
    rec_t = np.linspace(t0, t_end, n_rec + 1)
    rec_c2 = np.empty(rec_t.size, dtype=complex)
    rec_c2[0] = y0[0]
    norm_t = [t0]
    norm_v = [float(np.vdot(y0, y0).real) + minus_norm]

    times = sorted({t0, float(t_end), *(float(t) for t in (sample_times or ()))})
    if times[0] < t0 or times[-1] > t_end:
        raise ValueError("sample times must lie within [initial.t, t_end]")

    def to_state(y, t):
        return AmplitudeState(y[0], y[1:] * np.exp(-mi_dn * t), initial.c_minus, t)

    samples = [(t0, to_state(y0, t0))]
    if params.g == 0:
        return _decoupled(initial, t_end, times, rec_t, minus_norm, gamma, tol, record_step)
    si = 1
    ri = 1
    if atol is None:
        atol = tol * DEFAULT_ATOL_RATIO
    solver = DOP853(f, t0, y0, t_end, rtol=tol, atol=atol, max_step=max_step)
    n_steps = 0
    while solver.status == "running":
        msg = solver.step()
        if solver.status == "failed":
            raise StepSizeUnderflow(f"integrator failed at t={solver.t:.6g}: {msg}")
        n_steps += 1
        t_new = solver.t
        j = ri
        while j < rec_t.size and rec_t[j] <= t_new:
            j += 1
        need = [t for t in times[si:] if t <= t_new]
        if j > ri or need:
            dense = solver.dense_output()
            if j > ri:
                rec_c2[ri:j] = _first_component(dense, rec_t[ri:j])
                ri = j
            for t in need:
                y = solver.y if t == t_new else dense(t)
                samples.append((t, to_state(y, t)))
                si += 1
        norm_t.append(t_new)
        norm_v.append(float(np.vdot(solver.y, solver.y).real) + minus_norm)
    # guard against rounding at the very end of the record
    if ri < rec_t.size:
        rec_c2[ri:] = solver.y[0]
    while si < len(times):
        samples.append((times[si], to_state(solver.y, times[si])))
        si += 1

    final = samples[-1][1]
    norm_t = np.asarray(norm_t)
    norm_v = np.asarray(norm_v)
    drift = float(np.max(np.abs(norm_v - norm_v[0])))
    if check_tail and abs(final.c2) >= C2_TAIL_THRESHOLD:
        warnings.warn(
            f"|C2(t_end)| = {abs(final.c2):.3g} >= {C2_TAIL_THRESHOLD:g}; "
            "the pulse has not finished scattering",
            IncompleteScattering,
            stacklevel=2,
        )
    return Trajectory(
        samples=samples,
        record_t=rec_t,
        record_c2=rec_c2,
        norm_t=norm_t,
        norm_values=norm_v,
        final=final,
        norm_drift=drift,
        n_steps=n_steps,
        n_rhs=solver.nfev,
        info={"rtol": tol, "atol": atol, "record_step": record_step},
    )
