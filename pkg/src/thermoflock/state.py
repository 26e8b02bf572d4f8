"""Particle-ensemble state: positions, velocities, temperatures.

The ensemble lives in the rest frame of its own mean motion: total position
and total velocity are zero and the mean mechanical-plus-thermal energy per
particle is a conserved reference temperature ``T0``.  Per-particle energy
fluctuations are measured against that reference and are always recomputed
from the current state, never stored.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTemperatureError

# Temperatures at or below this are treated as a degenerate state.
TEMPERATURE_FLOOR = 1e-12


def _as_particle_matrix(values: object, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a (n,) or (n, d) array, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class MixtureState:
    """State of ``n`` thermo-mechanical particles in ``d`` spatial dimensions.

    Attributes:
        x: positions, shape (n, d).
        u: velocities, shape (n, d).
        T: temperatures, shape (n,), strictly positive.

    One-dimensional ``x``/``u`` inputs are promoted to shape (n, 1).
    """

    x: np.ndarray
    u: np.ndarray
    T: np.ndarray

    def __post_init__(self) -> None:
        x = _as_particle_matrix(self.x, "x")
        u = _as_particle_matrix(self.u, "u")
        T = np.asarray(self.T, dtype=np.float64)
        if T.ndim != 1:
            raise ValueError(f"T must be a (n,) array, got shape {T.shape}")
        n = T.shape[0]
        if n < 2:
            raise ValueError(f"need at least 2 particles, got {n}")
        if x.shape[0] != n or u.shape[0] != n:
            raise ValueError(
                f"inconsistent particle counts: x has {x.shape[0]}, "
                f"u has {u.shape[0]}, T has {n}"
            )
        if x.shape[1] != u.shape[1]:
            raise ValueError(
                f"x is {x.shape[1]}-dimensional but u is {u.shape[1]}-dimensional"
            )
        if x.shape[1] < 1:
            raise ValueError("spatial dimension must be at least 1")
        for name, arr in (("x", x), ("u", u), ("T", T)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
        if np.any(T <= TEMPERATURE_FLOOR):
            worst = int(np.argmin(T))
            raise DegenerateTemperatureError(
                f"temperature of particle {worst} is {T[worst]:.6g}, "
                f"at or below the floor {TEMPERATURE_FLOOR:g}",
                particle=worst,
            )
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "T", T)

    @property
    def n(self) -> int:
        return int(self.T.shape[0])

    @property
    def d(self) -> int:
        return int(self.x.shape[1])


def derive_T0(state: MixtureState) -> float:
    """Reference temperature: mean of ``T + |u|^2 / 2`` over all particles.

    The models conserve this quantity, so its initial value is the
    equilibrium temperature every particle relaxes towards.
    """
    kinetic = 0.5 * np.sum(state.u * state.u, axis=1)
    return float(np.mean(state.T + kinetic))


def normalize_frame(state: MixtureState) -> MixtureState:
    """Shift positions and velocities into the zero-mean rest frame.

    Idempotent: applying it twice gives the same state as applying it once.
    """
    return MixtureState(
        x=state.x - state.x.mean(axis=0),
        u=state.u - state.u.mean(axis=0),
        T=state.T,
    )


def energy_fluctuations(state: MixtureState, T0: float) -> np.ndarray:
    """Per-particle energy fluctuation ``T + |u|^2 / 2 - T0``, shape (n,)."""
    kinetic = 0.5 * np.sum(state.u * state.u, axis=1)
    return state.T + kinetic - T0


@dataclass(frozen=True)
class InitialDataReport:
    """Result of :func:`validate_initial`; all residuals are absolute."""

    momentum_residual: float   # |sum of velocities|
    position_residual: float   # |sum of positions|
    energy_residual: float     # |mean energy - T0|
    min_temperature: float
    tolerance: float
    passed: bool


def validate_initial(state: MixtureState, T0: float, tol: float = 1e-9) -> InitialDataReport:
    """Check that initial data sits in the rest frame at reference energy T0.

    Returns a report rather than raising, so callers can decide whether a
    violation is fatal.  Passing requires zero total position and velocity
    and mean energy T0, all within ``tol``, plus strictly positive
    temperatures above the degeneracy floor.
    """
    mom = float(np.linalg.norm(state.u.sum(axis=0)))
    pos = float(np.linalg.norm(state.x.sum(axis=0)))
    energy = abs(derive_T0(state) - T0)
    min_T = float(state.T.min())
    ok = mom <= tol and pos <= tol and energy <= tol and min_T > TEMPERATURE_FLOOR
    return InitialDataReport(
        momentum_residual=mom,
        position_residual=pos,
        energy_residual=energy,
        min_temperature=min_T,
        tolerance=tol,
        passed=ok,
    )
