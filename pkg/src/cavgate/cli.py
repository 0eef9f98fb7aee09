"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import analytic
from .errors import CavgateError, ConfigError, NumericalError
from .experiments import (
    SWEEP_PARAMS,
    RunConfig,
    SweepConfig,
    load_json,
    simulate,
    snapshot,
    sweep,
    sweep_values,
)
from .model import SystemParams

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    print(text)


def cmd_simulate(args) -> int:
    cfg = RunConfig.from_file(args.config)
    run = simulate(cfg)
    if args.trajectory:
        run.trajectory.write_csv(args.trajectory)
    _emit(run.report.to_dict(), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    data = load_json(args.config)
    values = data.pop("values", None)
    if args.values:
        values = _floats(args.values)
    if values is None:
        values = sweep_values(args.param)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sc = SweepConfig(
        RunConfig.from_dict(data),
        args.param,
        tuple(values),
        output_csv=str(out / f"sweep_{args.param}.csv"),
        summary_json=str(out / f"sweep_{args.param}.json"),
    )
    result = sweep(sc)
    print(json.dumps({k: v.to_dict() for k, v in result.fits.items()}, indent=2))
    for p in result.points:
        if p.error:
            print(f"point {p.value:g} failed: {p.error}", file=sys.stderr)
    return EXIT_OK if result.ok else EXIT_NUMERICAL


def cmd_solve(args) -> int:
    if args.g <= 0:
        raise ConfigError("--g must be > 0")
    if args.delta_a is not None:
        Delta = analytic.solve_sqrt_swap_detuning(args.g, delta_a=args.delta_a, kappa=args.kappa)
        delta_a = args.delta_a
    else:
        delta_a = analytic.solve_sqrt_swap_detuning(args.g, Delta=args.Delta, kappa=args.kappa)
        Delta = args.Delta
    p = SystemParams(g=args.g, delta_a=delta_a, Delta=Delta, kappa=args.kappa)
    _emit(
        {
            "schema_version": 1,
            "g": args.g,
            "kappa": args.kappa,
            "Delta": Delta,
            "delta_a": delta_a,
            "phi": analytic.gate_phase(p),
            "phi_minus_pi_4": analytic.gate_phase(p) - math.pi / 4,
            "residual": analytic.sqrt_swap_residual(args.g, Delta, delta_a, args.kappa),
        },
        None,
    )
    return EXIT_OK


def _snapshots(args, *, profiles: bool, spectra: bool) -> int:
    cfg = RunConfig.from_file(args.config)
    times = _floats(args.times) if args.times else None
    snaps, _ = snapshot(
        cfg, times, args.out_dir, n_points=args.points, profiles=profiles, spectra=spectra
    )
    for s in snaps:
        print(s.profile_csv if profiles else s.spectrum_csv)
    return EXIT_OK


def cmd_profile(args) -> int:
    return _snapshots(args, profiles=True, spectra=False)


def cmd_spectrum(args) -> int:
    return _snapshots(args, profiles=False, spectra=True)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cavgate", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run one configuration and print its gate report")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="also write the JSON report here")
    s.add_argument("--trajectory", help="write the C2 record as CSV")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sweep", help="sweep one parameter and fit power laws")
    s.add_argument("--config", required=True)
    s.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    s.add_argument("--values", help="comma-separated values (overrides the config)")
    s.add_argument("--out-dir", default=".")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("solve-detuning", help="detuning giving a square-root-of-SWAP gate")
    s.add_argument("--g", type=float, required=True)
    s.add_argument("--kappa", type=float, default=1.0)
    grp = s.add_mutually_exclusive_group(required=True)
    grp.add_argument("--delta-a", type=float, dest="delta_a", help="solve for Delta")
    grp.add_argument("--Delta", type=float, dest="Delta", help="solve for delta_a")
    s.set_defaults(func=cmd_solve)

    for name, func, what in (
        ("profile", cmd_profile, "spatial intensity profiles (z_s, I_h, I_v)"),
        ("spectrum", cmd_spectrum, "mode spectra (n, |C_hn|^2, |C_vn|^2)"),
    ):
        s = sub.add_parser(name, help=f"write {what} as CSV")
        s.add_argument("--config", required=True)
        s.add_argument("--times", help="comma-separated times; default before/during/after")
        s.add_argument("--out-dir", default=".")
        s.add_argument("--points", type=int, default=2001, help="positions per profile")
        s.set_defaults(func=func)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except CavgateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
