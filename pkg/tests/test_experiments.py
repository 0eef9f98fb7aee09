import csv
import json
import math

import numpy as np
import pytest

from cavgate import analytic
from cavgate.errors import ConfigError, NonPositivePoint
from cavgate.experiments import (
    DEFAULT_SWEEP_VALUES,
    WORKERS_ENV,
    RunConfig,
    SweepConfig,
    canonical_times,
    fit_loglog_slope,
    prepare,
    run_single,
    snapshot,
    sweep,
    sweep_values,
    worker_count,
)

from .conftest import sqrt_swap_config


class TestRunConfig:
    @pytest.mark.parametrize(
        "kw",
        [
            dict(g=-1),
            dict(g=0.5, gamma=-0.1),
            dict(g=0.5, T=0),
            dict(g=0.5, span=-1),
            dict(g=0.5, rtol=0),
            dict(g=0.5, spacing=0),
            dict(g=0.5, policy="magic"),
            dict(g=0.5, Delta=0.1, n0=3),
            dict(g=0.5, policy="solve-Delta", Delta=0.2),
            dict(g=0.0, policy="solve-Delta"),
            dict(g=0.5, polarization="D"),
            dict(g=0.5, band_center="left"),
            dict(g=0.5, z0=10.0),
        ],
    )
    def test_rejects(self, kw):
        with pytest.raises(ConfigError):
            RunConfig(**kw)

    def test_dict_round_trip(self):
        cfg = RunConfig(g=0.3, gamma=1e-3, policy="solve-Delta", T=50.0)
        assert RunConfig.from_dict(cfg.to_dict()) == cfg

    def test_from_dict_errors(self):
        with pytest.raises(ConfigError, match="unknown"):
            RunConfig.from_dict({"g": 0.5, "colour": "red"})
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"T": 10.0})

    def test_from_file(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"g": 0.5, "T": 40.0}), encoding="utf-8")
        assert RunConfig.from_file(p).T == 40.0
        bad = tmp_path / "bad.json"
        bad.write_text("{g: 1", encoding="utf-8")
        with pytest.raises(ConfigError):
            RunConfig.from_file(bad)
        bad.write_text("[1, 2]", encoding="utf-8")
        with pytest.raises(ConfigError):
            RunConfig.from_file(bad)
        with pytest.raises(ConfigError):
            RunConfig.from_file(tmp_path / "missing.json")


class TestPrepare:
    def test_solve_delta_lands_on_lattice(self):
        s = prepare(sqrt_swap_config())
        p = s.params
        assert p.Delta == p.n0 * s.grid.spacing
        assert analytic.gate_phase(p) == pytest.approx(math.pi / 4, abs=1e-12)
        assert s.grid.quantization_time >= s.t_end

    def test_solve_delta_a_keeps_delta(self):
        s = prepare(RunConfig(g=0.5, Delta=0.0, policy="solve-delta_a"))
        assert s.params.Delta == 0.0
        assert s.params.delta_a == pytest.approx(0.5)

    def test_fixed_n0(self):
        s = prepare(RunConfig(g=0.5, n0=10, spacing=0.004))
        assert s.params.Delta == pytest.approx(0.04)
        assert s.grid.index(10) is not None

    def test_band_centre_options(self):
        auto = prepare(sqrt_swap_config())
        zero = prepare(sqrt_swap_config(band_center="zero"))
        mid = 0.5 * (zero.grid.n_min + zero.grid.n_max) * zero.grid.spacing
        assert abs(mid) < 2 * zero.grid.spacing
        mid_auto = 0.5 * (auto.grid.n_min + auto.grid.n_max) * auto.grid.spacing
        assert mid_auto == pytest.approx(auto.params.Delta / 3, abs=0.1)

    def test_grid_too_large(self):
        with pytest.raises(ConfigError):
            prepare(sqrt_swap_config(max_modes=100))


class TestRunSingle:
    def test_identity_at_zero_coupling(self):
        r = run_single(RunConfig(g=0.0, T=20.0))
        assert r.F == pytest.approx(1.0, abs=1e-15)
        assert r.Phi == pytest.approx(math.pi / 2)
        assert r.phi is None and r.multiplier == 1

    def test_sqrt_swap_short_pulse(self):
        r = run_single(sqrt_swap_config(T=50.0))
        assert r.Phi == pytest.approx(math.pi / 4, abs=0.01)
        assert r.norm_drift < 1e-6

    def test_loss_lowers_fidelity(self):
        clean = run_single(sqrt_swap_config(T=50.0))
        lossy = run_single(sqrt_swap_config(T=50.0, gamma=0.01))
        assert lossy.F < clean.F
        assert lossy.p_loss_numeric == pytest.approx(lossy.p_loss_formula, rel=0.1)


class TestFit:
    def test_exact_power_law(self):
        x = np.array([1.0, 2.0, 4.0, 8.0])
        fit = fit_loglog_slope(zip(x, 3 * x**-2))
        assert fit.slope == pytest.approx(-2)
        assert math.exp(fit.intercept) == pytest.approx(3)
        assert fit.r_squared == pytest.approx(1) and fit.n_points == 4

    def test_errors(self):
        with pytest.raises(NonPositivePoint):
            fit_loglog_slope([(1, 1), (2, 0), (3, 1)])
        with pytest.raises(NonPositivePoint):
            fit_loglog_slope([(-1, 1), (2, 1), (3, 1)])
        with pytest.raises(ValueError):
            fit_loglog_slope([(1, 1), (2, 2)])


class TestSweepConfig:
    @pytest.mark.parametrize(
        "param,values",
        [("kappa", (1, 2, 3)), ("T", ()), ("T", (10, 0, 20)), ("T", (20, 10, 30)), ("T", (10, 10, 20))],
    )
    def test_rejects(self, param, values):
        with pytest.raises(ConfigError):
            SweepConfig(sqrt_swap_config(), param, values)

    def test_point_config(self):
        sc = SweepConfig(sqrt_swap_config(), "gamma", (1e-3, 1e-2))
        assert sc.point_config(1e-2).gamma == 1e-2
        assert sc.values == (1e-3, 1e-2)

    def test_defaults(self):
        assert sweep_values("T") == DEFAULT_SWEEP_VALUES["T"]
        with pytest.raises(ConfigError):
            sweep_values("kappa")


def test_worker_count(monkeypatch):
    monkeypatch.delenv(WORKERS_ENV, raising=False)
    assert worker_count() == 1
    monkeypatch.setenv(WORKERS_ENV, "3")
    assert worker_count() == 3 and worker_count(2) == 2
    monkeypatch.setenv(WORKERS_ENV, "many")
    with pytest.raises(ConfigError):
        worker_count()
    with pytest.raises(ConfigError):
        worker_count(0)


SMALL_T = (10.0, 12.0, 14.0)


class TestSweep:
    def test_serial_and_parallel_agree(self, tmp_path):
        a = sweep(SweepConfig(sqrt_swap_config(), "T", SMALL_T, workers=1))
        b = sweep(SweepConfig(sqrt_swap_config(), "T", SMALL_T, workers=2,
                              output_csv=str(tmp_path / "s.csv"),
                              summary_json=str(tmp_path / "s.json")))
        assert a.ok and b.ok
        assert [p.report.F for p in a.points] == [p.report.F for p in b.points]
        assert a.fits["infidelity"] == b.fits["infidelity"]
        # short pulses: infidelity falls with T
        fs = [1 - p.report.F for p in a.points]
        assert fs[0] > fs[1] > fs[2]
        rows = list(csv.reader((tmp_path / "s.csv").open(encoding="utf-8")))
        assert rows[0][:3] == ["T", "F", "Phi"] and len(rows) == 4
        summary = json.loads((tmp_path / "s.json").read_text(encoding="utf-8"))
        assert summary["values"] == list(SMALL_T)
        assert set(summary["fits"]) == {"infidelity", "phase_error"}

    def test_gamma_sweep_has_baseline(self):
        r = sweep(SweepConfig(sqrt_swap_config(T=20.0), "gamma", (1e-3, 1e-2, 1e-1)))
        assert r.baseline is not None and r.baseline.p_loss_numeric == 0
        assert set(r.fits) == {"fidelity_damage", "phase_damage"}
        assert r.fits["fidelity_damage"].slope == pytest.approx(1, abs=0.15)

    def test_partial_failure(self, tmp_path):
        # with a fixed coarse spacing the longer pulses outgrow the quantization time
        r = sweep(SweepConfig(sqrt_swap_config(spacing=0.04), "T", SMALL_T,
                              output_csv=str(tmp_path / "s.csv")))
        assert not r.ok and r.fits == {}
        assert r.points[0].report is not None
        assert "InfeasibleGrid" in r.points[1].error
        rows = list(csv.reader((tmp_path / "s.csv").open(encoding="utf-8")))
        assert rows[2][-1].startswith("InfeasibleGrid")
        assert json.dumps(r.to_dict())


class TestSnapshot:
    def test_files_and_times(self, tmp_path):
        cfg = sqrt_swap_config(T=20.0)
        snaps, run = snapshot(cfg, out_dir=tmp_path, n_points=201)
        assert [s.t for s in snaps] == list(canonical_times(run.setup))
        for s in snaps:
            assert s.profile_csv.exists() and s.spectrum_csv.exists()
            assert s.profile_csv.name == f"profile_t{s.t:g}.csv"
            assert len(s.profile_csv.read_text(encoding="utf-8").splitlines()) == 202
        assert snaps[-1].state.c2 == run.trajectory.final.c2

    def test_rejects_time_outside_run(self):
        with pytest.raises(ConfigError):
            snapshot(sqrt_swap_config(T=20.0), times=[1e6])


@pytest.mark.slow
def test_loss_scaling_on_wider_gamma_range():
    """Over gamma in [1e-3, 1e-1] the damage slopes settle near 1 (fidelity) and 2 (phase)."""
    r = sweep(SweepConfig(sqrt_swap_config(), "gamma", (1e-3, 3e-3, 1e-2, 3e-2, 1e-1)))
    assert r.fits["fidelity_damage"].slope == pytest.approx(0.97, abs=0.05)
    assert r.fits["phase_damage"].slope == pytest.approx(1.92, abs=0.1)
