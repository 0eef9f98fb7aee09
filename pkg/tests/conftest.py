"""Shared long-running simulations and the per-criterion acceptance summary."""

import math

import pytest

from cavgate.experiments import RunConfig, SweepConfig, simulate, sweep

# ---------------------------------------------------------------- shared runs

T_VALUES = (25.0, 50.0, 100.0, 200.0, 400.0)
GAMMA_VALUES = (1e-4, 3e-4, 1e-3, 3e-3, 1e-2)


def sqrt_swap_config(**kw) -> RunConfig:
    """g = kappa/2 with delta_a = 0 and Delta from the phi = pi/4 condition."""
    base = dict(g=0.5, policy="solve-Delta", T=100.0)
    base.update(kw)
    return RunConfig(**base)


@pytest.fixture(scope="session")
def t_sweep():
    return sweep(SweepConfig(sqrt_swap_config(), "T", T_VALUES))


@pytest.fixture(scope="session")
def gamma_sweep():
    return sweep(SweepConfig(sqrt_swap_config(), "gamma", GAMMA_VALUES))


@pytest.fixture(scope="session")
def run_t100():
    return simulate(sqrt_swap_config(), sample_times=[400.0])


# ---------------------------------------------------------------- acceptance summary

_results: dict[str, tuple[str, str, str]] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    props = dict(report.user_properties)
    crit = props.get("criterion")
    if crit is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        outcome = "PASS" if report.outcome == "passed" else "FAIL"
        _results[crit] = (outcome, props.get("title", ""), props.get("measured", ""))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")

    def key(c):
        head = c.rstrip("abcdefghijklmnopqrstuvwxyz")
        return (int(head), c) if head.isdigit() else (math.inf, c)

    for crit in sorted(_results, key=key):
        outcome, title, measured = _results[crit]
        line = f"[{outcome}] criterion {crit}: {title}"
        if measured:
            line += f" | {measured}"
        tr.write_line(line)
