"""Serialization of runs: CSV emission, verification checks, report text, figures.

CSV files are the machine-readable contract: a header row, comma
delimiters, and every number at 17 significant digits so a reload loses
no precision.  The verification report is plain deterministic text (no
timestamps, no environment details), one line per requested check with
its worst-case margin.  Figures are rendered from the recorded series as
a human convenience; nothing downstream consumes them, and they can be
switched off.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .diagnostics import DiagnosticsSeries, envelope_check, envelope_for, fluctuations
from .integrate import Trajectory
from .topology import ConstantTopology, Topology

ENTROPY_STEP_SLACK = 1e-12
PRODUCTION_SLACK = 1e-15
CONSERVATION_TOL = 1e-10
ENVELOPE_TOL = 1e-6


def format_value(value: float) -> str:
    """Fixed 17-significant-digit formatting used in every CSV cell."""
    return "%.17g" % value


def _particle_columns(prefix: str, n: int, d: int) -> list[str]:
    if d == 1:
        return [f"{prefix}{alpha + 1}" for alpha in range(n)]
    return [
        f"{prefix}{alpha + 1}_{k + 1}" for alpha in range(n) for k in range(d)
    ]


def trajectory_csv_text(trajectory: Trajectory) -> str:
    """Rows of t, positions, velocities, temperatures (particles flattened)."""
    m = trajectory.n_records
    n = trajectory.x.shape[1]
    d = trajectory.x.shape[2]
    header = ",".join(
        ["t"]
        + _particle_columns("x", n, d)
        + _particle_columns("u", n, d)
        + _particle_columns("T", n, 1)
    )
    lines = [header]
    for k in range(m):
        row = [trajectory.times[k]]
        row.extend(trajectory.x[k].ravel())
        row.extend(trajectory.u[k].ravel())
        row.extend(trajectory.T[k])
        lines.append(",".join(format_value(v) for v in row))
    return "\n".join(lines) + "\n"


def diagnostics_csv_text(series: DiagnosticsSeries) -> str:
    header = "t,X,V,E,S,Sigma,mom_res,energy_res,minT"
    lines = [header]
    for k in range(series.times.size):
        row = (
            series.times[k],
            series.X[k],
            series.V[k],
            series.E[k],
            series.S[k],
            series.Sigma[k],
            series.mom_res[k],
            series.energy_res[k],
            series.min_T[k],
        )
        lines.append(",".join(format_value(v) for v in row))
    return "\n".join(lines) + "\n"


def deviation_csv_text(
    times: np.ndarray,
    u_deviation: np.ndarray,
    E_deviation: np.ndarray,
    x_deviation: np.ndarray,
) -> str:
    """Per-record, per-particle gaps between the two models' trajectories."""
    n = u_deviation.shape[1]
    header = ",".join(
        ["t"]
        + [f"du{alpha + 1}" for alpha in range(n)]
        + [f"dE{alpha + 1}" for alpha in range(n)]
        + [f"dx{alpha + 1}" for alpha in range(n)]
    )
    lines = [header]
    for k in range(times.size):
        row = [times[k]]
        row.extend(u_deviation[k])
        row.extend(E_deviation[k])
        row.extend(x_deviation[k])
        lines.append(",".join(format_value(v) for v in row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Verification checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one named verification pass on one model run."""

    name: str
    model: str  # "" for scenario-level checks
    passed: bool
    skipped: bool
    detail: str

    def line(self) -> str:
        status = "SKIP" if self.skipped else ("PASS" if self.passed else "FAIL")
        scope = f"[{self.model}] " if self.model else ""
        return f"{status} {scope}{self.name} — {self.detail}"


def _is_uniform_constant(topology: Topology) -> bool:
    if not isinstance(topology, ConstantTopology):
        return False
    weights = topology.weights
    off = weights[~np.eye(weights.shape[0], dtype=bool)]
    return bool(off.size) and float(off.min()) == float(off.max()) and off.min() > 0.0


def check_conservation(model: str, series: DiagnosticsSeries) -> CheckResult:
    worst_mom = float(np.max(series.mom_res))
    worst_energy = float(np.max(series.energy_res))
    passed = worst_mom <= CONSERVATION_TOL and worst_energy <= CONSERVATION_TOL
    detail = (
        f"max |sum u| = {worst_mom:.3e}, max |mean energy - T0| = {worst_energy:.3e}"
        f" (tolerance {CONSERVATION_TOL:.0e})"
    )
    return CheckResult("conservation", model, passed, False, detail)


def check_entropy(model: str, series: DiagnosticsSeries) -> CheckResult:
    steps = np.diff(series.S)
    worst_step = float(steps.min()) if steps.size else 0.0
    worst_sigma = float(np.min(series.Sigma))
    passed = worst_step >= -ENTROPY_STEP_SLACK and worst_sigma >= -PRODUCTION_SLACK
    detail = (
        f"min entropy step = {worst_step:.3e}, min production = {worst_sigma:.3e}"
    )
    return CheckResult("entropy", model, passed, False, detail)


def check_envelope(
    model: str,
    trajectory: Trajectory,
    topology: Topology,
    T0: float,
) -> CheckResult:
    if model != "kbcs":
        return CheckResult(
            "envelope", model, True, True,
            "decay envelopes apply to the kinetic model only",
        )
    X0, V0, E0 = fluctuations(trajectory.state_at(0), T0)
    reports = [
        envelope_check(trajectory, envelope_for(topology, initial, X0, V0),
                       functional, T0, tolerance=ENVELOPE_TOL)
        for functional, initial in (("V", V0), ("E", E0))
    ]
    passed = all(r.passed for r in reports)
    parts = []
    for r in reports:
        part = f"{r.functional}: max ratio = {r.max_ratio:.9f} at t = {r.worst_time:g}"
        if r.first_violation is not None:
            part += f" (first violation at t = {r.first_violation:g})"
        parts.append(part)
    return CheckResult("envelope", model, passed, False, ", ".join(parts))


def check_nonmonotonicity(
    model: str,
    trajectory: Trajectory,
    topology: Topology,
) -> CheckResult:
    from .analysis import detect_nonmonotonicity

    events = detect_nonmonotonicity(trajectory, "speed")
    described = ", ".join(
        f"particle {p + 1} rises on [{t0:g}, {t1:g}]" for p, (t0, t1) in events
    )
    if model == "kbcs" and _is_uniform_constant(topology):
        passed = not events
        detail = (
            "no transient speed growth (uniform coupling)" if passed
            else f"speed growth found where monotone decay is required: {described}"
        )
        return CheckResult("nonmonotonicity", model, passed, False, detail)
    detail = described if events else "no transient speed growth detected"
    return CheckResult("nonmonotonicity", model, True, False, detail)


def check_deviation(
    times: np.ndarray,
    u_deviation: np.ndarray,
    E_deviation: np.ndarray,
    eps: float,
    a_min: float,
    constants: tuple[float, float, float, float] | None,
) -> CheckResult:
    """The two models must drift apart and re-converge, not diverge.

    Passes when the combined per-record deviation either never leaves
    numerical zero or ends strictly below its peak.  Envelope constants
    (sup and least-squares fits) are reported when the initial data is
    small enough for them to mean anything.
    """
    combined = np.maximum(u_deviation.max(axis=1), E_deviation.max(axis=1))
    peak = float(combined.max())
    peak_time = float(times[int(combined.argmax())])
    final = float(combined[-1])
    passed = peak <= 1e-12 or final <= peak * (1.0 - 1e-6)
    detail = (
        f"peak deviation = {peak:.3e} at t = {peak_time:g}, final = {final:.3e}, "
        f"eps = {eps:.3e}, min coupling = {a_min:g}"
    )
    if constants is not None:
        C_sup_u, C_fit_u, C_sup_E, C_fit_E = constants
        detail += (
            f"; envelope constants: velocity C_sup = {C_sup_u:.3e} "
            f"(fit {C_fit_u:.3e}), energy C_sup = {C_sup_E:.3e} (fit {C_fit_E:.3e})"
        )
    else:
        detail += "; initial data not small, envelope constants skipped"
    return CheckResult("deviation", "", passed, False, detail)


# ---------------------------------------------------------------------------
# Report text
# ---------------------------------------------------------------------------


def describe_topology(topology: Topology) -> str:
    if isinstance(topology, ConstantTopology):
        n = topology.weights.shape[0]
        return (
            f"constant weights (n = {n}, min off-diagonal = "
            f"{format_value(topology.min_weight())})"
        )
    return f"metric weights (exponent = {format_value(topology.exponent)})"


def report_text(
    scenario_name: str,
    model: str,
    topology: Topology,
    T0: float,
    t0_mode: str,
    runs: dict[str, tuple[Trajectory, DiagnosticsSeries]],
    results: list[CheckResult],
) -> str:
    lines = [f"scenario: {scenario_name}", f"model: {model}"]
    lines.append(f"topology: {describe_topology(topology)}")
    lines.append(f"T0: {format_value(T0)} ({t0_mode})")
    for name, (trajectory, _) in runs.items():
        lines.append(
            f"run [{name}]: {trajectory.n_records} records on "
            f"t in [0, {format_value(trajectory.times[-1])}]"
        )
    if results:
        lines.append("checks:")
        lines.extend(f"  {r.line()}" for r in results)
        failed = [r for r in results if not r.passed and not r.skipped]
        verdict = "FAIL" if failed else "PASS"
        counted = [r for r in results if not r.skipped]
        lines.append(
            f"result: {verdict} ({len(counted) - len(failed)}/{len(counted)} checks passed)"
        )
    else:
        lines.append("checks: none requested")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Figures
# ---------------------------------------------------------------------------

_FIGURE_STYLE = {
    "figure.figsize": (9.0, 3.4),
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
    "legend.fontsize": 8,
}


def _semilog_safe(ax: plt.Axes, t: np.ndarray, y: np.ndarray, label: str) -> None:
    positive = y > 0.0
    if positive.any():
        ax.semilogy(t[positive], y[positive], label=label)
    else:
        ax.plot(t, np.zeros_like(t), label=label)


def render_state_figure(
    path: Path,
    title: str,
    trajectory: Trajectory,
    T0: float,
) -> None:
    speeds = np.linalg.norm(trajectory.u, axis=2)
    n = speeds.shape[1]
    with plt.rc_context(_FIGURE_STYLE):
        fig, (ax_u, ax_T) = plt.subplots(1, 2)
        for alpha in range(n):
            ax_u.plot(trajectory.times, speeds[:, alpha], label=f"|u{alpha + 1}|")
            ax_T.plot(trajectory.times, trajectory.T[:, alpha], label=f"T{alpha + 1}")
        ax_T.axhline(T0, color="black", linestyle="--", linewidth=0.9, label="T0")
        ax_u.set_xlabel("t")
        ax_u.set_ylabel("speed")
        ax_T.set_xlabel("t")
        ax_T.set_ylabel("temperature")
        ax_u.legend()
        ax_T.legend()
        fig.suptitle(title)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def render_diagnostics_figure(path: Path, title: str, series: DiagnosticsSeries) -> None:
    with plt.rc_context(_FIGURE_STYLE):
        fig, (ax_fluct, ax_S, ax_Sigma) = plt.subplots(1, 3, figsize=(12.0, 3.4))
        _semilog_safe(ax_fluct, series.times, series.V, "V")
        _semilog_safe(ax_fluct, series.times, series.E, "E")
        _semilog_safe(ax_fluct, series.times, series.X, "X")
        ax_fluct.set_xlabel("t")
        ax_fluct.set_ylabel("fluctuation")
        ax_fluct.legend()
        ax_S.plot(series.times, series.S)
        ax_S.set_xlabel("t")
        ax_S.set_ylabel("entropy")
        _semilog_safe(ax_Sigma, series.times, series.Sigma, "production")
        ax_Sigma.set_xlabel("t")
        ax_Sigma.set_ylabel("entropy production")
        fig.suptitle(title)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def render_deviation_figure(
    path: Path,
    title: str,
    times: np.ndarray,
    u_deviation: np.ndarray,
    E_deviation: np.ndarray,
) -> None:
    n = u_deviation.shape[1]
    with plt.rc_context(_FIGURE_STYLE):
        fig, (ax_u, ax_E) = plt.subplots(1, 2)
        for alpha in range(n):
            _semilog_safe(ax_u, times, u_deviation[:, alpha], f"|du{alpha + 1}|")
            _semilog_safe(ax_E, times, E_deviation[:, alpha], f"|dE{alpha + 1}|")
        ax_u.set_xlabel("t")
        ax_u.set_ylabel("velocity gap")
        ax_E.set_xlabel("t")
        ax_E.set_ylabel("energy gap")
        ax_u.legend()
        ax_E.legend()
        fig.suptitle(title)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
