"""Scalar diagnostics along trajectories and decay-envelope checks.

Fluctuation sizes are root-sum-square norms over particles: position
fluctuation ``X``, velocity fluctuation ``V`` and energy fluctuation ``E``
(the latter measured against the reference temperature ``T0``).  Entropy
is the per-particle mean of ``log T``; its exact production rate has a
closed form for each model and is reported as ``dS/dt``.

The kinetic model admits a priori decay envelopes for ``V`` and ``E``:

* constant topology: exponential decay at the smallest off-diagonal
  weight;
* metric topology with exponent ``lam``: stretched-exponential decay for
  ``lam < 1/2`` and algebraic decay for ``lam = 1/2``, with the rate
  constant built from the initial fluctuation sizes.

``envelope_check`` verifies a recorded trajectory against such an envelope
with a relative tolerance that absorbs integrator rounding.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .integrate import Trajectory
from .state import MixtureState, derive_T0, energy_fluctuations
from .topology import ConstantTopology, MetricTopology, Topology

ENVELOPE_KINDS = ("exponential", "subexponential", "algebraic")


def fluctuations(state: MixtureState, T0: float) -> tuple[float, float, float]:
    """Root-sum-square fluctuation sizes ``(X, V, E)`` of a state."""
    X = float(np.sqrt(np.sum(state.x * state.x)))
    V = float(np.sqrt(np.sum(state.u * state.u)))
    E = float(np.sqrt(np.sum(energy_fluctuations(state, T0) ** 2)))
    return X, V, E


def fluctuation_series(
    trajectory: Trajectory, T0: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Fluctuation sizes ``(X, V, E)`` at every record, as (m,) arrays."""
    X = np.sqrt(np.sum(trajectory.x * trajectory.x, axis=(1, 2)))
    V = np.sqrt(np.sum(trajectory.u * trajectory.u, axis=(1, 2)))
    e_fluct = trajectory.T + 0.5 * np.sum(trajectory.u * trajectory.u, axis=2) - T0
    E = np.sqrt(np.sum(e_fluct * e_fluct, axis=1))
    return X, V, E


def entropy(state: MixtureState) -> float:
    """Per-particle mean of ``log T``."""
    return float(np.mean(np.log(state.T)))


def entropy_production(
    model: str,
    state: MixtureState,
    topology: Topology,
    T0: float,
) -> float:
    """Exact rate of entropy change ``dS/dt`` for the given model at a state.

    Both rates are sums of squares and therefore non-negative; they vanish
    exactly at flocking equilibrium (equal velocities and temperatures).
    """
    weights = topology.weight_matrix(state.x)
    n = state.n
    T = state.T
    if model == "pbcs":
        w = state.u / T[:, None]
        dw = w[None, :, :] - w[:, None, :]
        dw_sq = np.sum(dw * dw, axis=2)
        inv_T = 1.0 / T
        dinv = inv_T[:, None] - inv_T[None, :]
        total = np.sum(weights * (dw_sq + T0 * dinv * dinv))
        return float(T0 * total / (2.0 * n * n))
    if model == "kbcs":
        du = state.u[None, :, :] - state.u[:, None, :]
        du_sq = np.sum(du * du, axis=2)
        dT = T[None, :] - T[:, None]
        T_prod = T[:, None] * T[None, :]
        T_sum = T[:, None] + T[None, :]
        total = np.sum(weights / T_prod * (0.5 * T_sum * du_sq + dT * dT))
        return float(total / (2.0 * n * n))
    raise ValueError(f"unknown model {model!r}")


def conservation_residuals(state: MixtureState, T0: float) -> tuple[float, float, float]:
    """Absolute residuals ``(|sum u|, |mean energy - T0|, |sum x|)``."""
    mom = float(np.linalg.norm(state.u.sum(axis=0)))
    energy_res = abs(derive_T0(state) - T0)
    pos = float(np.linalg.norm(state.x.sum(axis=0)))
    return mom, energy_res, pos


@dataclass(frozen=True)
class DiagnosticsSeries:
    """Per-record diagnostics of a trajectory; all fields are (m,) arrays."""

    times: np.ndarray
    X: np.ndarray
    V: np.ndarray
    E: np.ndarray
    S: np.ndarray
    Sigma: np.ndarray
    mom_res: np.ndarray
    energy_res: np.ndarray
    min_T: np.ndarray
    model: str

    @property
    def n_records(self) -> int:
        return int(self.times.shape[0])


def diagnostics_series(trajectory: Trajectory, topology: Topology, T0: float) -> DiagnosticsSeries:
    """Evaluate all scalar diagnostics at every record of a trajectory."""
    m = trajectory.n_records
    out = {name: np.empty(m) for name in
           ("X", "V", "E", "S", "Sigma", "mom_res", "energy_res", "min_T")}
    out["X"], out["V"], out["E"] = fluctuation_series(trajectory, T0)
    for i in range(m):
        state = trajectory.state_at(i)
        out["S"][i] = entropy(state)
        out["Sigma"][i] = entropy_production(trajectory.model, state, topology, T0)
        mom, energy_res, _ = conservation_residuals(state, T0)
        out["mom_res"][i] = mom
        out["energy_res"][i] = energy_res
        out["min_T"][i] = float(state.T.min())
    return DiagnosticsSeries(times=trajectory.times.copy(), model=trajectory.model, **out)


def lambda0_constant(X0: float, V0: float, exponent: float) -> float:
    """Rate constant of the metric-topology envelopes.

    ``(max(1 + 2 X0^2, 2 V0^2)) ** (-exponent)``: a provable lower bound
    on the communication kernel along the flow, evaluated from the initial
    fluctuation sizes.
    """
    return float(max(1.0 + 2.0 * X0 * X0, 2.0 * V0 * V0) ** (-exponent))


@dataclass(frozen=True)
class Envelope:
    """A closed-form decay bound ``t -> prefactor * shape(t)``.

    Kinds:
        ``exponential``     — ``prefactor * exp(-rate * t)``;
        ``subexponential``  — ``prefactor * exp(-lambda0 ((1+t)^(1-2 lam) - 1)
        / (1 - 2 lam))`` for a metric exponent ``lam < 1/2``;
        ``algebraic``       — ``prefactor * (1+t)^(-lambda0)`` (the metric
        boundary exponent ``lam = 1/2``).
    """

    kind: str
    prefactor: float
    rate: float = 0.0
    lambda0: float = 0.0
    exponent: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ENVELOPE_KINDS:
            raise ValueError(f"unknown envelope kind {self.kind!r}, expected one of {ENVELOPE_KINDS}")
        if self.prefactor < 0.0:
            raise ValueError(f"prefactor must be nonnegative, got {self.prefactor}")
        if self.kind == "exponential":
            if not self.rate > 0.0:
                raise ValueError(f"exponential envelope needs rate > 0, got {self.rate}")
        else:
            if not 0.0 < self.lambda0 <= 1.0:
                raise ValueError(f"lambda0 must lie in (0, 1], got {self.lambda0}")
        if self.kind == "subexponential" and not 0.0 < self.exponent < 0.5:
            raise ValueError(
                f"subexponential envelope needs an exponent in (0, 1/2), got {self.exponent}"
            )

    def value(self, times: np.ndarray | float) -> np.ndarray:
        """Envelope values at the given times."""
        t = np.asarray(times, dtype=np.float64)
        if self.kind == "exponential":
            return self.prefactor * np.exp(-self.rate * t)
        if self.kind == "algebraic":
            return self.prefactor * (1.0 + t) ** (-self.lambda0)
        power = 1.0 - 2.0 * self.exponent
        return self.prefactor * np.exp(-self.lambda0 * ((1.0 + t) ** power - 1.0) / power)


def envelope_for(
    topology: Topology,
    initial_value: float,
    X0: float,
    V0: float,
) -> Envelope:
    """Decay envelope implied by a topology for a series starting at ``initial_value``.

    Constant topology: exponential decay at the smallest off-diagonal
    weight.  Metric topology: stretched-exponential (exponent < 1/2) or
    algebraic (exponent = 1/2) decay at the rate constant computed from
    the initial fluctuation sizes ``X0`` and ``V0``.
    """
    if isinstance(topology, ConstantTopology):
        a_min = topology.min_weight()
        if a_min <= 0.0:
            raise ValueError("constant-topology envelope needs a positive smallest weight")
        return Envelope(kind="exponential", prefactor=initial_value, rate=a_min)
    if isinstance(topology, MetricTopology):
        lam = topology.exponent
        lam0 = lambda0_constant(X0, V0, lam)
        if lam == 0.5:
            return Envelope(kind="algebraic", prefactor=initial_value, lambda0=lam0)
        return Envelope(kind="subexponential", prefactor=initial_value,
                        lambda0=lam0, exponent=lam)
    raise TypeError(f"unsupported topology type {type(topology).__name__}")


@dataclass(frozen=True)
class EnvelopeReport:
    """Worst-case comparison of a recorded series against a decay envelope."""

    functional: str                 # "V" or "E"
    max_ratio: float                # max over records of value / envelope
    worst_time: float
    first_violation: float | None   # first record time with ratio > 1 + tolerance
    tolerance: float                # allowed relative overshoot
    passed: bool


def envelope_check(
    trajectory: Trajectory,
    envelope: Envelope,
    functional: str,
    T0: float,
    tolerance: float = 1e-6,
) -> EnvelopeReport:
    """Check a trajectory's ``V`` or ``E`` series against a decay envelope.

    Passing means ``value <= envelope * (1 + tolerance)`` at every record.
    A zero-prefactor envelope passes only a series that stays exactly zero
    (the dynamics keep an exact-zero fluctuation at zero).
    """
    if functional not in ("V", "E"):
        raise ValueError(f"functional must be 'V' or 'E', got {functional!r}")
    _, V, E = fluctuation_series(trajectory, T0)
    values = V if functional == "V" else E
    if envelope.prefactor == 0.0:
        top = float(values.max())
        worst = int(values.argmax())
        return EnvelopeReport(functional=functional,
                              max_ratio=0.0 if top == 0.0 else np.inf,
                              worst_time=float(trajectory.times[worst]),
                              first_violation=None if top == 0.0
                              else float(trajectory.times[int(np.argmax(values > 0.0))]),
                              tolerance=tolerance, passed=top == 0.0)
    env = envelope.value(trajectory.times)
    ratios = values / env
    worst = int(np.argmax(ratios))
    max_ratio = float(ratios[worst])
    violations = ratios > 1.0 + tolerance
    first_violation = (float(trajectory.times[int(np.argmax(violations))])
                       if bool(violations.any()) else None)
    return EnvelopeReport(
        functional=functional,
        max_ratio=max_ratio,
        worst_time=float(trajectory.times[worst]),
        first_violation=first_violation,
        tolerance=tolerance,
        passed=first_violation is None,
    )
