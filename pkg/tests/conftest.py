"""Shared helpers and session fixtures for the test suite."""

from __future__ import annotations

import sys

import numpy as np
import pytest

from thermoflock import (
    MixtureState,
    derive_T0,
    diagnostics_series,
    get_builtin,
    integrate,
    normalize_frame,
)


def make_state(u, T, x=None) -> MixtureState:
    """Build an admissible rest-frame state from plain lists."""
    u = np.asarray(u, dtype=float)
    T = np.asarray(T, dtype=float)
    if x is None:
        x = np.zeros_like(u)
    return normalize_frame(MixtureState(np.asarray(x, dtype=float), u, T))


def random_admissible(rng: np.random.Generator, n: int, d: int = 1) -> MixtureState:
    """Random rest-frame state with temperatures well above the floor."""
    u = rng.uniform(-2.0, 2.0, size=(n, d))
    T = rng.uniform(0.3, 3.0, size=n)
    x = rng.uniform(-1.0, 1.0, size=(n, d))
    return normalize_frame(MixtureState(x, u, T))


@pytest.fixture(scope="session")
def case_a_runs():
    """Full case-a trajectories and diagnostics for both models (shared)."""
    scenario = get_builtin("case-a")
    initial, T0 = scenario.realize()
    out = {}
    for model in ("pbcs", "kbcs"):
        traj = integrate(model, initial, scenario.topology, T0, scenario.config)
        diag = diagnostics_series(traj, scenario.topology, T0)
        out[model] = (traj, diag)
    return out, scenario, T0


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "ACCEPTANCE_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
