"""Fixed-step deterministic time integration of the flocking models.

Only fixed step sizes are supported: determinism and byte-identical reruns
take priority over adaptivity.  Two explicit schemes are available, the
classical fourth-order Runge-Kutta scheme (default) and the first-order
Euler scheme kept as a convergence reference.  Distance-dependent weights
are re-evaluated at every stage from that stage's positions.

Internally the schemes advance ``(x, u, E)`` with the total particle
energy ``E = T + |u|^2 / 2`` as the thermal coordinate, recovering the
temperature at stage evaluations and record points.  Total momentum and
total energy are linear functions of that state vector and are therefore
conserved to rounding by any Runge-Kutta step, even across fast thermal
transients that the step size barely resolves; advancing ``T`` directly
would lose them to truncation error exactly there.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateTemperatureError, IntegrationError, ScenarioError
from .models import kbcs_rates, pbcs_rates
from .state import TEMPERATURE_FLOOR, MixtureState, validate_initial
from .topology import Topology

SCHEMES = ("rk4", "euler")
MODELS = ("pbcs", "kbcs")


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step integration parameters.

    ``t_end`` must be an integer number of steps of size ``dt`` (within
    1e-9 relative); every ``record_every``-th step is recorded, plus the
    initial and final states.  ``t_end = 0`` is allowed and means "record
    the initial state only".
    """

    dt: float
    t_end: float
    scheme: str = "rk4"
    record_every: int = 1

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise ScenarioError(f"unknown scheme {self.scheme!r}, expected one of {SCHEMES}")
        if not (self.dt > 0.0 and np.isfinite(self.dt)):
            raise ScenarioError(f"dt must be positive and finite, got {self.dt}")
        if not (np.isfinite(self.t_end) and self.t_end >= 0.0):
            raise ScenarioError(f"t_end must be finite and non-negative, got {self.t_end}")
        if 0.0 < self.t_end < self.dt:
            raise ScenarioError(
                f"t_end must be 0 or at least dt, got t_end={self.t_end} dt={self.dt}"
            )
        steps = self.t_end / self.dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ScenarioError(
                f"t_end={self.t_end} is not an integer multiple of dt={self.dt}"
            )
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ScenarioError(f"record_every must be a positive integer, got {self.record_every}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass(frozen=True)
class Trajectory:
    """Recorded states of one integration run.

    Attributes:
        times: (m,) record times.
        x: (m, n, d) positions.
        u: (m, n, d) velocities.
        T: (m, n) temperatures.
        model: which model produced the run.
    """

    times: np.ndarray
    x: np.ndarray
    u: np.ndarray
    T: np.ndarray
    model: str

    @property
    def n_records(self) -> int:
        return int(self.times.shape[0])

    def state_at(self, index: int) -> MixtureState:
        return MixtureState(x=self.x[index], u=self.u[index], T=self.T[index])


def _temperature(u: np.ndarray, E: np.ndarray) -> np.ndarray:
    return E - 0.5 * (u * u).sum(axis=1)


def _eval_rhs(
    model: str,
    x: np.ndarray,
    u: np.ndarray,
    E: np.ndarray,
    topology: Topology,
    T0: float,
    stage: str,
    t: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    T = _temperature(u, E)
    if T.min() <= TEMPERATURE_FLOOR:
        worst = int(np.argmin(T))
        raise DegenerateTemperatureError(
            f"temperature of particle {worst} reached {T[worst]:.6g} "
            f"(floor {TEMPERATURE_FLOOR:g}) at stage {stage}, t={t:.6g}",
            particle=worst,
            stage=stage,
            time=t,
        )
    weights = topology.weight_matrix(x)
    if model == "pbcs":
        du, dE = pbcs_rates(u, T, weights, T0)
    else:
        du, dE = kbcs_rates(u, T, weights)
    return u, du, dE


def _advance(
    model: str,
    x: np.ndarray,
    u: np.ndarray,
    E: np.ndarray,
    topology: Topology,
    T0: float,
    dt: float,
    scheme: str = "rk4",
    t: float = 0.0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Advance one fixed step at the array level; returns new ``(x, u, E)``.

    The classical Runge-Kutta scheme evaluates four stages; stage states
    with a temperature at or below the floor abort with an error naming
    the particle and stage.
    """
    if model not in MODELS:
        raise ScenarioError(f"unknown model {model!r}, expected one of {MODELS}")
    if scheme == "euler":
        dx, du, dE = _eval_rhs(model, x, u, E, topology, T0, "euler", t)
        return x + dt * dx, u + dt * du, E + dt * dE
    if scheme != "rk4":
        raise ScenarioError(f"unknown scheme {scheme!r}, expected one of {SCHEMES}")
    half = 0.5 * dt
    k1 = _eval_rhs(model, x, u, E, topology, T0, "rk4-1", t)
    k2 = _eval_rhs(model, x + half * k1[0], u + half * k1[1], E + half * k1[2],
                   topology, T0, "rk4-2", t + half)
    k3 = _eval_rhs(model, x + half * k2[0], u + half * k2[1], E + half * k2[2],
                   topology, T0, "rk4-3", t + half)
    k4 = _eval_rhs(model, x + dt * k3[0], u + dt * k3[1], E + dt * k3[2],
                   topology, T0, "rk4-4", t + dt)
    sixth = dt / 6.0
    new_x = x + sixth * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
    new_u = u + sixth * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
    new_E = E + sixth * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
    return new_x, new_u, new_E


def step(
    model: str,
    state: MixtureState,
    topology: Topology,
    T0: float,
    config: IntegratorConfig,
) -> MixtureState:
    """Advance one step of ``config.dt`` with ``config.scheme``.

    Returns the new state; the new temperatures are re-validated by the
    state constructor, so a step that lands at or below the temperature
    floor raises rather than returning a degenerate state.
    """
    E = state.T + 0.5 * np.sum(state.u * state.u, axis=1)
    x, u, E = _advance(model, state.x, state.u, E, topology, T0,
                       config.dt, scheme=config.scheme)
    return MixtureState(x=x, u=u, T=_temperature(u, E))


def integrate(
    model: str,
    initial: MixtureState,
    topology: Topology,
    T0: float,
    config: IntegratorConfig,
) -> Trajectory:
    """Integrate one model from validated initial data.

    The initial state must sit in the rest frame at reference energy
    ``T0`` within 1e-9 (see :func:`thermoflock.state.validate_initial`);
    anything else is rejected before stepping.  Record times are exact
    multiples of ``dt`` computed by multiplication, so repeated runs are
    bit-identical.
    """
    if model not in MODELS:
        raise ScenarioError(f"unknown model {model!r}, expected one of {MODELS}")
    report = validate_initial(initial, T0, tol=1e-9)
    if not report.passed:
        raise ScenarioError(
            "initial data is not admissible: "
            f"|sum u|={report.momentum_residual:.3e}, "
            f"|sum x|={report.position_residual:.3e}, "
            f"|mean energy - T0|={report.energy_residual:.3e}, "
            f"min T={report.min_temperature:.3e} (tolerance {report.tolerance:g})"
        )
    n_steps = config.n_steps
    record_steps = sorted(set(range(0, n_steps + 1, config.record_every)) | {n_steps})

    x, u = initial.x.copy(), initial.u.copy()
    E = initial.T + 0.5 * np.sum(u * u, axis=1)
    times = np.empty(len(record_steps))
    xs = np.empty((len(record_steps),) + x.shape)
    us = np.empty((len(record_steps),) + u.shape)
    Ts = np.empty((len(record_steps),) + initial.T.shape)

    rec = 0
    for k in range(n_steps + 1):
        if k == record_steps[rec]:
            times[rec] = k * config.dt
            xs[rec], us[rec] = x, u
            Ts[rec] = initial.T if k == 0 else _temperature(u, E)
            rec += 1
        if k == n_steps:
            break
        try:
            x, u, E = _advance(model, x, u, E, topology, T0, config.dt,
                               scheme=config.scheme, t=k * config.dt)
        except DegenerateTemperatureError:
            raise
        except FloatingPointError as exc:  # pragma: no cover - defensive
            raise IntegrationError(f"floating point failure at step {k}: {exc}") from exc
    return Trajectory(times=times, x=xs, u=us, T=Ts, model=model)


def convergence_order(
    model: str,
    scenario,
    dt_sequence: Sequence[float],
    scheme: str | None = None,
    t_end: float | None = None,
    reference: Callable[[float], MixtureState] | None = None,
) -> float:
    """Observed order of a scheme, fitted over a sequence of step sizes.

    ``scenario`` supplies the initial data and defaults: it must expose
    ``realize() -> (MixtureState, T0)``, ``topology``, and ``config``
    (``scheme`` and ``t_end`` default to the scenario's own).  Errors are
    sup-norm distances at ``t_end`` against ``reference(t_end)`` when an
    exact solution is supplied, otherwise against a Runge-Kutta run at an
    eight-fold finer step.  Returns the slope of log error vs log dt; at
    least three step sizes are required for a meaningful fit.
    """
    if len(dt_sequence) < 3:
        raise ScenarioError(
            f"need at least 3 step sizes to estimate an order, got {len(dt_sequence)}"
        )
    initial, T0 = scenario.realize()
    topology = scenario.topology
    if scheme is None:
        scheme = scenario.config.scheme
    if t_end is None:
        t_end = scenario.config.t_end
    if reference is not None:
        ref_state = reference(t_end)
        ref = (ref_state.x, ref_state.u, ref_state.T)
    else:
        fine = min(dt_sequence) / 8.0
        ref_config = IntegratorConfig(dt=fine, t_end=t_end, scheme="rk4",
                                      record_every=max(1, int(round(t_end / fine))))
        ref_traj = integrate(model, initial, topology, T0, ref_config)
        ref = (ref_traj.x[-1], ref_traj.u[-1], ref_traj.T[-1])

    errors = np.empty(len(dt_sequence))
    for i, dt in enumerate(dt_sequence):
        config = IntegratorConfig(dt=dt, t_end=t_end, scheme=scheme,
                                  record_every=max(1, int(round(t_end / dt))))
        traj = integrate(model, initial, topology, T0, config)
        errors[i] = max(
            float(np.max(np.abs(traj.x[-1] - ref[0]))),
            float(np.max(np.abs(traj.u[-1] - ref[1]))),
            float(np.max(np.abs(traj.T[-1] - ref[2]))),
        )
    if np.any(errors <= 0.0):
        raise IntegrationError("zero error against reference; order fit is undefined")
    return float(np.polyfit(np.log(np.asarray(dt_sequence, dtype=float)),
                            np.log(errors), 1)[0])
