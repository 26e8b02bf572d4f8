"""Closed forms, derivative probes and the two-model deviation experiment.

For uniform all-ones weights the kinetic model is solvable in closed form:
velocities and energy fluctuations decay like ``exp(-t)`` while positions
converge to a finite limit.  That solution is the reference oracle for
integrator accuracy and convergence-order tests.

The phenomenological model can transiently amplify velocity or energy
fluctuations even though both decay eventually; the initial-derivative
probes below evaluate the exact rates ``d(V^2)/dt`` and ``d(E^2)/dt`` at a
state, and the pair classifier identifies which particle pairs push the
energy fluctuation up (energy and temperature deviations of opposite
ordering) versus down.

``deviation_experiment`` integrates both models side by side from shared
initial data near equilibrium and quantifies how far apart they drift:
the gap decays exponentially at half the smallest coupling rate, with a
constant fitted per scenario, never assumed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTemperatureError, ScenarioError
from .integrate import IntegratorConfig, Trajectory, integrate
from .state import TEMPERATURE_FLOOR, MixtureState, energy_fluctuations, validate_initial
from .topology import ConstantTopology, Topology


def closed_form_kbcs_uniform_series(
    initial: MixtureState,
    T0: float,
    times: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact kinetic-model solution for uniform all-ones weights, vectorized.

    Requires rest-frame initial data.  Returns ``(x, u, T)`` arrays of
    shapes (m, n, d), (m, n, d) and (m, n):

    * ``u(t) = u(0) exp(-t)``
    * ``x(t) = x(0) + u(0) (1 - exp(-t))``
    * ``T(t) = T0 + E(0) exp(-t) - |u(0)|^2 exp(-2t) / 2``

    where ``E(0)`` is the initial per-particle energy fluctuation.
    """
    report = validate_initial(initial, T0, tol=1e-9)
    if not report.passed:
        raise ScenarioError("closed form requires rest-frame initial data at T0")
    t = np.asarray(times, dtype=np.float64)
    decay = np.exp(-t)[:, None, None]
    u = initial.u[None, :, :] * decay
    x = initial.x[None, :, :] + initial.u[None, :, :] * (1.0 - decay)
    E0 = energy_fluctuations(initial, T0)
    u0_sq = np.sum(initial.u * initial.u, axis=1)
    decay1 = np.exp(-t)[:, None]
    T = T0 + E0[None, :] * decay1 - 0.5 * u0_sq[None, :] * decay1 * decay1
    return x, u, T


def closed_form_kbcs_uniform(
    initial: MixtureState,
    T0: float,
    t: float,
) -> MixtureState:
    """Exact kinetic-model state at time ``t`` for uniform all-ones weights.

    See :func:`closed_form_kbcs_uniform_series` for the solution formulas.
    A particle whose exact temperature lands at or below the positivity
    floor (possible for inadmissibly cold initial data) raises the same
    degeneracy error the integrator would.
    """
    x, u, T = closed_form_kbcs_uniform_series(initial, T0, np.asarray([float(t)]))
    if np.any(T[0] <= TEMPERATURE_FLOOR):
        worst = int(np.argmin(T[0]))
        raise DegenerateTemperatureError(
            f"closed-form temperature of particle {worst} is {T[0][worst]:.6g} "
            f"at t={t:.6g}, at or below the floor {TEMPERATURE_FLOOR:g}",
            particle=worst,
            time=float(t),
        )
    return MixtureState(x=x[0], u=u[0], T=T[0])


def initial_velocity_derivative_pbcs(
    state: MixtureState,
    topology: Topology,
    T0: float,
) -> float:
    """Exact ``d(V^2)/dt`` of the phenomenological model at a state.

    Requires zero total velocity.  The rate is a weighted sum over pairs
    of an indefinite quadratic form, so it can be positive: velocity
    alignment scaled by temperature can transiently feed the velocity
    fluctuation.
    """
    weights = topology.weight_matrix(state.x)
    u, T = state.u, state.T
    n = state.n
    u_sq_T = np.sum(u * u, axis=1) / T
    inv_T = 1.0 / T
    dots = u @ u.T
    inv_sum = inv_T[:, None] + inv_T[None, :]
    quad = -u_sq_T[:, None] + inv_sum * dots - u_sq_T[None, :]
    return float(T0 / n * np.sum(weights * quad))


def initial_energy_derivative_pbcs(
    state: MixtureState,
    topology: Topology,
    T0: float,
) -> float:
    """Exact ``d(E^2)/dt`` of the phenomenological model at a state.

    Pairs whose energy-fluctuation ordering opposes their temperature
    ordering contribute positively; the sign of the total decides whether
    the energy fluctuation initially grows.
    """
    weights = topology.weight_matrix(state.x)
    T = state.T
    n = state.n
    E = energy_fluctuations(state, T0)
    dE = E[:, None] - E[None, :]
    dT = T[None, :] - T[:, None]
    T_prod = T[:, None] * T[None, :]
    return float(np.sum(weights * (T0 * T0 / T_prod) * dE * dT) / n)


def classify_energy_pairs(
    state: MixtureState,
    T0: float,
) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    """Split particle pairs by the sign of their energy-derivative term.

    Returns ``(plus, minus)`` lists of index pairs ``(a, b)`` with
    ``a < b``: a pair lands in ``plus`` when
    ``(E_a - E_b)(T_b - T_a) > 0``, i.e. it pushes ``d(E^2)/dt`` up.
    """
    E = energy_fluctuations(state, T0)
    T = state.T
    plus: list[tuple[int, int]] = []
    minus: list[tuple[int, int]] = []
    for a in range(state.n):
        for b in range(a + 1, state.n):
            if (E[a] - E[b]) * (T[b] - T[a]) > 0.0:
                plus.append((a, b))
            else:
                minus.append((a, b))
    return plus, minus


FUNCTIONALS = ("speed", "energy", "temperature")


def functional_series(trajectory: Trajectory, functional: str) -> np.ndarray:
    """Per-particle series (m, n) of a named scalar along a trajectory.

    ``speed`` is the velocity magnitude, ``energy`` the per-particle value
    ``T + |u|^2 / 2`` and ``temperature`` the temperature itself.
    """
    if functional == "speed":
        return np.linalg.norm(trajectory.u, axis=2)
    if functional == "energy":
        return trajectory.T + 0.5 * np.sum(trajectory.u * trajectory.u, axis=2)
    if functional == "temperature":
        return trajectory.T.copy()
    raise ScenarioError(
        f"unknown per-particle functional {functional!r}; choose from {FUNCTIONALS}"
    )


def detect_nonmonotonicity(
    trajectory: Trajectory,
    functional: str,
    rel_margin: float = 1e-9,
) -> list[tuple[int, tuple[float, float]]]:
    """Find particles whose functional rises and later falls.

    Scans the discrete derivative of the chosen per-particle series for a
    strict increase followed by a strict decrease (strict relative to a
    noise margin scaled by the series magnitude).  Returns, per flagged
    particle, the time interval of its first maximal run of increasing
    steps.  Monotone and constant series are never flagged.
    """
    if trajectory.n_records < 3:
        raise ScenarioError(
            f"nonmonotonicity detection needs >= 3 records, got {trajectory.n_records}"
        )
    series = functional_series(trajectory, functional)
    times = trajectory.times
    events: list[tuple[int, tuple[float, float]]] = []
    for p in range(series.shape[1]):
        col = series[:, p]
        tol = rel_margin * max(1.0, float(np.max(np.abs(col))))
        diffs = np.diff(col)
        increases = diffs > tol
        decreases = diffs < -tol
        if not increases.any():
            continue
        first = int(np.argmax(increases))
        if not decreases[first:].any():
            continue
        end = first
        while end + 1 < diffs.size and increases[end + 1]:
            end += 1
        events.append((p, (float(times[first]), float(times[end + 1]))))
    return events


@dataclass(frozen=True)
class DeviationReport:
    """Gap between the two models integrated from shared initial data.

    Deviations are per-record, per-particle maxima over components.  The
    envelope constants bound the velocity and energy gaps by
    ``C * eps * exp(-a_min t / 2)`` where ``eps`` measures how far the
    initial data sits from equilibrium; ``C_sup`` is the smallest constant
    that works at every record, ``C_fit`` the least-squares fit on
    log-residuals over the first half of the run.
    """

    times: np.ndarray          # (m,)
    u_deviation: np.ndarray    # (m, n) max-component |u_p - u_k|
    E_deviation: np.ndarray    # (m, n) |E_p - E_k|
    x_deviation: np.ndarray    # (m, n) max-component |x_p - x_k|
    tilde_a: np.ndarray        # (n,) per-particle mean coupling (row sum / n)
    a_min: float
    eps: float                 # equilibrium-distance scale of the initial data
    small: bool                # eps small enough for the envelope to be meaningful
    C_sup_u: float
    C_sup_E: float
    C_fit_u: float
    C_fit_E: float
    bound_checked: bool
    pbcs: Trajectory
    kbcs: Trajectory


def equilibrium_distance(initial: MixtureState, T0: float) -> float:
    """Smallest ``eps`` for which the near-equilibrium smallness holds.

    The conditions are ``max |u| <= eps/2``, ``max |T - T0| <= eps T0 / 2``
    and ``sum(|u|^2 / 2 + (T - T0)^2) <= eps^2 / 8``.
    """
    u_max = float(np.max(np.linalg.norm(initial.u, axis=1)))
    dT = initial.T - T0
    dT_max = float(np.max(np.abs(dT)))
    quad = float(np.sum(0.5 * np.sum(initial.u * initial.u, axis=1) + dT * dT))
    return max(2.0 * u_max, 2.0 * dT_max / T0, np.sqrt(8.0 * quad))


def trajectory_deviations(
    traj_p: Trajectory,
    traj_k: Trajectory,
    T0: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-record, per-particle gaps between two runs on one grid.

    Returns ``(du, dE, dx)`` of shape (m, n): max-over-components velocity
    and position gaps plus the per-particle energy gap.
    """
    if traj_p.times.shape != traj_k.times.shape or not np.array_equal(
        traj_p.times, traj_k.times
    ):
        raise ScenarioError("deviation series need trajectories on identical time grids")
    du = np.max(np.abs(traj_p.u - traj_k.u), axis=2)
    dx = np.max(np.abs(traj_p.x - traj_k.x), axis=2)
    E_p = traj_p.T + 0.5 * np.sum(traj_p.u * traj_p.u, axis=2) - T0
    E_k = traj_k.T + 0.5 * np.sum(traj_k.u * traj_k.u, axis=2) - T0
    dE = np.abs(E_p - E_k)
    return du, dE, dx


def fit_envelope_constants(
    times: np.ndarray,
    residuals: np.ndarray,
    a_min: float,
    eps: float,
) -> tuple[float, float]:
    """Return ``(C_sup, C_fit)`` for ``residual <= C eps exp(-a_min t / 2)``."""
    envelope = eps * np.exp(-0.5 * a_min * times)
    with np.errstate(divide="ignore"):
        ratios = residuals / envelope
    C_sup = float(np.max(ratios))
    half = times <= times[-1] / 2.0
    usable = half & (residuals > 0.0)
    if np.count_nonzero(usable) >= 2:
        # least squares with the decay rate held fixed: fit the level only
        log_C = np.mean(np.log(residuals[usable]) + 0.5 * a_min * times[usable] - np.log(eps))
        C_fit = float(np.exp(log_C))
    else:
        C_fit = C_sup
    return C_sup, C_fit


def deviation_experiment(
    initial: MixtureState,
    topology: Topology,
    T0: float,
    config: IntegratorConfig,
) -> DeviationReport:
    """Integrate both models on one grid and measure their drift apart.

    Requires a constant topology (the envelope rate is its smallest
    off-diagonal weight).  Initial data that is admissible but not close
    to equilibrium still produces a report; only the envelope-constant
    fitting is skipped in that case.
    """
    if not isinstance(topology, ConstantTopology):
        raise ScenarioError("the deviation experiment needs a constant topology")
    report = validate_initial(initial, T0, tol=1e-9)
    if not report.passed:
        raise ScenarioError(
            "deviation experiment requires rest-frame initial data at T0 "
            f"(|sum u|={report.momentum_residual:.3e}, "
            f"|mean energy - T0|={report.energy_residual:.3e})"
        )
    traj_p = integrate("pbcs", initial, topology, T0, config)
    traj_k = integrate("kbcs", initial, topology, T0, config)
    du, dE, dx = trajectory_deviations(traj_p, traj_k, T0)

    n = initial.n
    tilde_a = topology.weights.sum(axis=1) / n
    a_min = topology.min_weight()
    eps = equilibrium_distance(initial, T0)
    small = eps <= 1.0

    if small and a_min > 0.0:
        u_res = du.max(axis=1)
        E_res = dE.max(axis=1)
        C_sup_u, C_fit_u = fit_envelope_constants(traj_p.times, u_res, a_min, eps)
        C_sup_E, C_fit_E = fit_envelope_constants(traj_p.times, E_res, a_min, eps)
        bound_checked = True
    else:
        C_sup_u = C_sup_E = C_fit_u = C_fit_E = float("nan")
        bound_checked = False

    return DeviationReport(
        times=traj_p.times,
        u_deviation=du,
        E_deviation=dE,
        x_deviation=dx,
        tilde_a=tilde_a,
        a_min=a_min,
        eps=eps,
        small=small,
        C_sup_u=C_sup_u,
        C_sup_E=C_sup_E,
        C_fit_u=C_fit_u,
        C_fit_E=C_fit_E,
        bound_checked=bound_checked,
        pbcs=traj_p,
        kbcs=traj_k,
    )
