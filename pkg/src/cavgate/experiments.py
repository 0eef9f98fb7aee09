"""Run configuration, single runs, parameter sweeps and power-law fits."""

from __future__ import annotations

import csv
import dataclasses
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import trapezoid
from scipy.stats import linregress

from . import analytic
from .dynamics import DEFAULT_RTOL, Trajectory, default_t_end, integrate
from .errors import CavgateError, ConfigError, NonPositivePoint
from .model import (
    DEFAULT_SPAN,
    AmplitudeState,
    GridSafety,
    ModeGrid,
    PulseSpec,
    SystemParams,
    build_mode_grid,
    default_max_spacing,
    initial_state,
    lattice_spacing,
)
from .observables import (
    SCHEMA_VERSION,
    GateReport,
    field_profile,
    fidelity_phase,
    numeric_loss,
    write_profile_csv,
    write_spectrum_csv,
)

WORKERS_ENV = "CAVGATE_WORKERS"
POLICIES = ("fixed", "solve-Delta", "solve-delta_a")
SWEEP_PARAMS = ("g", "T", "gamma")
DEFAULT_SWEEP_VALUES = {
    "g": tuple(float(x) for x in np.geomspace(0.05, 3.0, 12)),
    "T": (25.0, 50.0, 100.0, 200.0, 400.0),
    "gamma": (1e-4, 3e-4, 1e-3, 3e-3, 1e-2),
}


# ---------------------------------------------------------------- configuration


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to set up and run one scattering simulation.

    Frequencies are in units of kappa and times in 1/kappa.

    ``policy`` chooses how the detunings are fixed: ``"fixed"`` uses the given
    ``Delta`` (or ``n0``) and ``delta_a``; ``"solve-Delta"`` keeps ``delta_a`` and
    solves for the pulse detuning giving a square-root-of-SWAP; ``"solve-delta_a"``
    keeps ``Delta`` and solves for the atomic detuning.

    ``spacing`` is an upper bound on the mode spacing; the actual spacing is
    reduced so that ``Delta`` is a lattice point and the quantization time
    covers the run. ``band_center`` is ``"auto"`` (cancel the self-energy
    error from truncating the band), ``"zero"`` or a number.
    """

    g: float
    gamma: float = 0.0
    delta_a: float = 0.0
    Delta: float | None = None
    n0: int | None = None
    T: float = 100.0
    kappa: float = 1.0
    spacing: float | None = None
    span: float = DEFAULT_SPAN
    z0: float | None = None
    rtol: float = DEFAULT_RTOL
    policy: str = "fixed"
    band_center: str | float = "auto"
    polarization: str = "V"
    t_end: float | None = None
    record_step: float | None = None
    max_modes: int = GridSafety().max_modes

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ConfigError(f"policy must be one of {POLICIES}, got {self.policy!r}")
        for name in ("g", "gamma"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        for name in ("T", "kappa", "span", "rtol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0")
        if self.spacing is not None and not self.spacing > 0:
            raise ConfigError("spacing must be > 0")
        if self.Delta is not None and self.n0 is not None:
            raise ConfigError("give Delta or n0, not both")
        if self.policy == "solve-Delta" and (self.Delta is not None or self.n0 is not None):
            raise ConfigError("policy solve-Delta computes Delta; do not set Delta or n0")
        if self.policy != "fixed" and self.g == 0:
            raise ConfigError("detuning policies need g > 0")
        if self.polarization.upper() not in ("H", "V"):
            raise ConfigError("polarization must be 'H' or 'V'")
        if isinstance(self.band_center, str) and self.band_center not in ("auto", "zero"):
            raise ConfigError("band_center must be 'auto', 'zero' or a number")
        if self.z0 is not None and not self.z0 < 0:
            raise ConfigError("z0 must be < 0")

    def replace(self, **changes) -> RunConfig:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> RunConfig:
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "g" not in data:
            raise ConfigError("config needs 'g'")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_file(cls, path) -> RunConfig:
        return cls.from_dict(load_json(path))


def load_json(path) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must hold a JSON object")
    return data


@dataclass(frozen=True)
class Setup:
    """Resolved parameters, grid, pulse and initial state for one run."""

    config: RunConfig
    params: SystemParams
    grid: ModeGrid
    pulse: PulseSpec
    initial: AmplitudeState
    t_end: float


def _target_detunings(cfg: RunConfig) -> tuple[float, float]:
    if cfg.policy == "solve-Delta":
        return analytic.solve_sqrt_swap_detuning(cfg.g, delta_a=cfg.delta_a, kappa=cfg.kappa), cfg.delta_a
    Delta = cfg.Delta if cfg.Delta is not None else 0.0
    if cfg.policy == "solve-delta_a":
        return Delta, analytic.solve_sqrt_swap_detuning(cfg.g, Delta=Delta, kappa=cfg.kappa)
    return Delta, cfg.delta_a


def prepare(cfg: RunConfig) -> Setup:
    """Resolve detunings, build the mode lattice and the initial state.

    Raises:
        ConfigError: the requested grid is infeasible or too large.
    """
    Delta, delta_a = _target_detunings(cfg)
    pulse_T = cfg.T
    z0 = cfg.z0 if cfg.z0 is not None else -4.0 * pulse_T
    probe = SystemParams(g=cfg.g, gamma=cfg.gamma, delta_a=delta_a, T=pulse_T, kappa=cfg.kappa)
    t_end = cfg.t_end if cfg.t_end is not None else default_t_end(PulseSpec(pulse_T, z0), probe)
    if cfg.spacing is None:
        max_spacing = default_max_spacing(pulse_T, min_time=t_end)
    else:
        max_spacing = cfg.spacing
    if cfg.n0 is not None:
        spacing, n0 = max_spacing, int(cfg.n0)
        Delta = n0 * spacing
        if cfg.policy == "solve-delta_a":
            delta_a = analytic.solve_sqrt_swap_detuning(cfg.g, Delta=Delta, kappa=cfg.kappa)
    else:
        spacing, n0 = lattice_spacing(max_spacing, Delta)
        Delta = n0 * spacing
    if cfg.band_center == "auto":
        center = analytic.balanced_band_center(Delta, cfg.span, cfg.kappa)
    elif cfg.band_center == "zero":
        center = 0.0
    else:
        center = float(cfg.band_center)
    grid = build_mode_grid(
        spacing,
        cfg.span,
        T=pulse_T,
        safety=GridSafety(max_modes=cfg.max_modes),
        center=center,
        min_time=t_end,
    )
    params = SystemParams(
        g=cfg.g, gamma=cfg.gamma, delta_a=delta_a, Delta=Delta, T=pulse_T, kappa=cfg.kappa, n0=n0
    )
    params.check_lattice(grid)
    pulse = PulseSpec(pulse_T, z0, n0)
    state = initial_state(grid, pulse, cfg.polarization)
    return Setup(cfg, params, grid, pulse, state, t_end)


# ---------------------------------------------------------------- single runs


def make_report(setup: Setup, traj: Trajectory) -> GateReport:
    """Gate metrics of a finished run plus the closed-form references."""
    p = setup.params
    F, Phi = fidelity_phase(setup.initial.c_plus, traj.final.c_plus)
    roots = analytic.characteristic_roots(p)
    mult = analytic.adiabatic_final_multiplier(p).multiplier
    loss = analytic.loss_probability(p)
    g = setup.grid
    return GateReport(
        F=F,
        Phi=Phi,
        p_loss_numeric=numeric_loss(traj, p.gamma),
        phi=analytic.gate_phase(p) if p.g > 0 else None,
        multiplier=mult,
        lambda1=roots.lambda1,
        lambda2=roots.lambda2,
        p_loss_formula=loss.general,
        p_loss_sqrt_swap=loss.sqrt_swap,
        adiabaticity_ratio=analytic.adiabaticity_ratio(p, roots),
        norm_drift=traj.norm_drift,
        final_norm=traj.final.norm(),
        c2_final=abs(traj.final.c2),
        params=dataclasses.asdict(p),
        grid={
            "spacing": g.spacing,
            "n_min": g.n_min,
            "n_max": g.n_max,
            "modes": g.size,
            "quantization_time": g.quantization_time,
        },
        run={"t_end": setup.t_end, "rtol": setup.config.rtol, "steps": traj.n_steps,
             "z0": setup.pulse.z0, "polarization": setup.config.polarization},
    )


@dataclass
class RunResult:
    report: GateReport
    trajectory: Trajectory
    setup: Setup


def simulate(cfg: RunConfig, sample_times=None) -> RunResult:
    """Set up, integrate and evaluate one configuration."""
    setup = prepare(cfg)
    traj = integrate(
        setup.params,
        setup.grid,
        setup.initial,
        setup.t_end,
        cfg.rtol,
        sample_times=sample_times,
        record_step=cfg.record_step,
    )
    return RunResult(make_report(setup, traj), traj, setup)


def run_single(cfg: RunConfig) -> GateReport:
    return simulate(cfg).report


# ---------------------------------------------------------------- fits


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    n_points: int

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def fit_loglog_slope(points) -> FitResult:
    """Least-squares line through ``(ln x, ln y)``.

    Raises:
        NonPositivePoint: some ``x`` or ``y`` is not strictly positive.
        ValueError: fewer than three points.
    """
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise ValueError("need at least three (x, y) points")
    if np.any(~(pts > 0)):
        raise NonPositivePoint("log-log fit needs strictly positive coordinates")
    res = linregress(np.log(pts[:, 0]), np.log(pts[:, 1]))
    return FitResult(float(res.slope), float(res.intercept), float(res.rvalue**2), len(pts))


# ---------------------------------------------------------------- sweeps


@dataclass(frozen=True)
class SweepConfig:
    """A base configuration and the values of one parameter to step through."""

    base: RunConfig
    param: str
    values: tuple[float, ...]
    output_csv: str | None = None
    summary_json: str | None = None
    workers: int | None = None

    def __post_init__(self):
        if self.param not in SWEEP_PARAMS:
            raise ConfigError(f"param must be one of {SWEEP_PARAMS}, got {self.param!r}")
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ConfigError("sweep needs at least one value")
        if any(v <= 0 for v in vals):
            raise ConfigError("sweep values must be positive")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ConfigError("sweep values must be strictly increasing")
        object.__setattr__(self, "values", vals)

    def point_config(self, value: float) -> RunConfig:
        return self.base.replace(**{self.param: value})


@dataclass
class SweepPoint:
    value: float
    report: GateReport | None
    error: str | None = None


@dataclass
class SweepResult:
    config: SweepConfig
    points: list[SweepPoint]
    fits: dict[str, FitResult] = field(default_factory=dict)
    baseline: GateReport | None = None

    @property
    def ok(self) -> bool:
        return all(p.report is not None for p in self.points)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "param": self.config.param,
            "values": list(self.config.values),
            "base": self.config.base.to_dict(),
            "fits": {k: v.to_dict() for k, v in self.fits.items()},
            "errors": {str(p.value): p.error for p in self.points if p.error},
            "baseline": self.baseline.to_dict() if self.baseline else None,
            "points": [p.report.to_dict() if p.report else None for p in self.points],
        }


def worker_count(explicit: int | None = None) -> int:
    """Worker count from the argument, else ``$CAVGATE_WORKERS``, else 1."""
    if explicit is not None:
        n = explicit
    else:
        raw = os.environ.get(WORKERS_ENV, "1")
        try:
            n = int(raw)
        except ValueError as exc:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigError("worker count must be >= 1")
    return n


def _run_point(cfg: RunConfig) -> tuple[GateReport | None, str | None]:
    try:
        return run_single(cfg), None
    except CavgateError as exc:
        return None, f"{type(exc).__name__}: {exc}"


def _run_all(configs: list[RunConfig], workers: int) -> list[tuple[GateReport | None, str | None]]:
    if workers == 1 or len(configs) == 1:
        return [_run_point(c) for c in configs]
    with ProcessPoolExecutor(max_workers=min(workers, len(configs))) as pool:
        return list(pool.map(_run_point, configs))


def sweep(sc: SweepConfig) -> SweepResult:
    """Run every sweep point (in a process pool when more than one worker is set).

    Results come back in input order. A failed point is recorded with its
    error and the fits are skipped. For ``T`` the infidelity ``1 - F`` and the
    phase error ``|Phi - phi|`` are fitted against ``T``; for ``gamma`` the
    fidelity and phase changes relative to a lossless run on the same grid.
    """
    configs = [sc.point_config(v) for v in sc.values]
    baseline_cfg = sc.base.replace(gamma=0.0) if sc.param == "gamma" else None
    jobs = configs + ([baseline_cfg] if baseline_cfg else [])
    outcomes = _run_all(jobs, worker_count(sc.workers))
    baseline, baseline_err = outcomes.pop() if baseline_cfg is not None else (None, None)
    points = [SweepPoint(v, r, e) for v, (r, e) in zip(sc.values, outcomes)]
    result = SweepResult(sc, points, baseline=baseline)
    if baseline_err:
        for p in points:
            p.error = p.error or f"baseline failed: {baseline_err}"
            p.report = None
    if result.ok and len(points) >= 3:
        result.fits = _fits(sc.param, points, baseline)
    if sc.output_csv:
        write_sweep_csv(sc.output_csv, result)
    if sc.summary_json:
        Path(sc.summary_json).write_text(json.dumps(result.to_dict(), indent=2), encoding="utf-8")
    return result


def _fits(param: str, points: list[SweepPoint], baseline: GateReport | None) -> dict[str, FitResult]:
    xs = [p.value for p in points]
    reps = [p.report for p in points]
    fits = {}
    if param == "T":
        fits["infidelity"] = fit_loglog_slope(zip(xs, [1.0 - r.F for r in reps]))
        fits["phase_error"] = fit_loglog_slope(zip(xs, [abs(r.Phi - r.phi) for r in reps]))
    elif param == "gamma" and baseline is not None:
        fits["fidelity_damage"] = fit_loglog_slope(zip(xs, [baseline.F - r.F for r in reps]))
        fits["phase_damage"] = fit_loglog_slope(zip(xs, [abs(baseline.Phi - r.Phi) for r in reps]))
    return fits


def write_sweep_csv(path, result: SweepResult) -> Path:
    path = Path(path)
    base = result.baseline
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([result.config.param, "F", "Phi", "phi", "p_loss_numeric", "p_loss_formula",
                    "dF", "dPhi", "error"])
        for p in result.points:
            r = p.report
            if r is None:
                w.writerow([p.value, "", "", "", "", "", "", "", p.error])
                continue
            dF = base.F - r.F if base else ""
            dPhi = abs(base.Phi - r.Phi) if base else ""
            w.writerow([p.value, r.F, r.Phi, r.phi, r.p_loss_numeric, r.p_loss_formula, dF, dPhi, ""])
    return path


# ---------------------------------------------------------------- snapshots


def canonical_times(setup: Setup) -> tuple[float, float, float]:
    """Before, during and after the interaction."""
    return 0.0, abs(setup.pulse.z0), setup.t_end


def default_positions(setup: Setup, times, n_points: int = 2001) -> np.ndarray:
    """Positions covering the pulse at all ``times``, clipped to the periodic domain."""
    T, z0 = setup.pulse.T, setup.pulse.z0
    half = 0.5 * setup.grid.quantization_time * (1 - 1e-9)
    lo = max(z0 - 3 * T, -half)
    hi = min(z0 + max(times) + 3 * T, half)
    return np.linspace(lo, hi, n_points)


@dataclass
class Snapshot:
    t: float
    state: AmplitudeState
    z: np.ndarray
    i_h: np.ndarray
    i_v: np.ndarray
    profile_csv: Path | None = None
    spectrum_csv: Path | None = None


def snapshot(
    cfg: RunConfig,
    times=None,
    out_dir=None,
    *,
    z=None,
    n_points: int = 2001,
    spectra: bool = True,
    profiles: bool = True,
) -> tuple[list[Snapshot], RunResult]:
    """Integrate once and reconstruct the field at each requested time.

    With ``out_dir`` set, writes ``profile_t<t>.csv`` (z_s, I_h, I_v) and
    ``spectrum_t<t>.csv`` (n, |C_hn|^2, |C_vn|^2) per time.
    """
    setup = prepare(cfg)
    times = list(canonical_times(setup) if times is None else times)
    if any(t < 0 or t > setup.t_end for t in times):
        raise ConfigError(f"snapshot times must lie in [0, {setup.t_end:g}]")
    traj = integrate(
        setup.params, setup.grid, setup.initial, setup.t_end, cfg.rtol,
        sample_times=times, record_step=cfg.record_step,
    )
    result = RunResult(make_report(setup, traj), traj, setup)
    positions = default_positions(setup, times, n_points) if z is None else np.asarray(z, float)
    out = []
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
    for t in times:
        st = traj.state_at(float(t))
        if profiles:
            ih, iv = field_profile(setup.grid, st, positions, cfg.kappa)
        else:
            ih = iv = np.empty(0)
        snap = Snapshot(float(t), st, positions, ih, iv)
        if out_dir is not None:
            tag = f"{t:g}"
            if profiles:
                snap.profile_csv = write_profile_csv(Path(out_dir) / f"profile_t{tag}.csv",
                                                     positions * cfg.kappa, ih, iv)
            if spectra:
                snap.spectrum_csv = write_spectrum_csv(Path(out_dir) / f"spectrum_t{tag}.csv",
                                                       setup.grid, st)
        out.append(snap)
    return out, result


def integrated_intensity(snap: Snapshot) -> tuple[float, float]:
    """Trapezoidal integrals of ``I_h`` and ``I_v`` over the sampled positions."""
    return float(trapezoid(snap.i_h, snap.z)), float(trapezoid(snap.i_v, snap.z))


def sweep_values(param: str) -> tuple[float, ...]:
    """Default values for a sweep over ``param``."""
    try:
        return DEFAULT_SWEEP_VALUES[param]
    except KeyError:
        raise ConfigError(f"param must be one of {SWEEP_PARAMS}, got {param!r}") from None

