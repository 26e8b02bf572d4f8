"""Communication topologies and coupling-matrix transforms.

Two interaction topologies are supported:

* a constant symmetric non-negative weight matrix, and
* a metric kernel where the weight between two particles decays
  algebraically with their squared distance, ``1 / (1 + |dx|^2)^lam``
  with exponent ``0 < lam <= 1/2``.

Alignment dynamics only ever use differences of particle quantities, so
diagonal entries of a weight matrix are inert; ``min_weight`` therefore
ignores the diagonal.

The module also converts between an ``n x n`` symmetric coupling matrix
(pairwise couplings with an arbitrary diagonal) and its reduced
``(n-1) x (n-1)`` form, which is the natural parameterization once one
particle is eliminated through the conservation constraints.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:  # import only for annotations; avoids a runtime cycle
    from .state import MixtureState


def _pairwise_sq_dists(x: np.ndarray) -> np.ndarray:
    # (n, n) matrix of |x_b - x_a|^2
    diff = x[None, :, :] - x[:, None, :]
    return (diff * diff).sum(axis=2)


@dataclass(frozen=True)
class ConstantTopology:
    """Constant symmetric non-negative weights; diagonal entries are inert."""

    weights: np.ndarray  # (n, n)

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError(f"weights must be a square matrix, got shape {w.shape}")
        if w.shape[0] < 2:
            raise ValueError("weight matrix needs at least 2 particles")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights contain non-finite entries")
        if not np.array_equal(w, w.T):
            raise ValueError("weights must be exactly symmetric")
        if np.any(w < 0.0):
            raise ValueError("weights must be non-negative")
        object.__setattr__(self, "weights", w)

    @property
    def is_constant(self) -> bool:
        return True

    @property
    def n(self) -> int:
        return int(self.weights.shape[0])

    def weight_matrix(self, x: np.ndarray) -> np.ndarray:
        """Weights are independent of positions ``x``."""
        return self.weights

    def min_weight(self, x: np.ndarray | None = None) -> float:
        """Smallest off-diagonal weight."""
        w = self.weights
        mask = ~np.eye(w.shape[0], dtype=bool)
        return float(w[mask].min())


@dataclass(frozen=True)
class MetricTopology:
    """Distance-dependent weights ``1 / (1 + |x_b - x_a|^2)^exponent``.

    The exponent must lie in (0, 1/2]; in that range the kernel decays
    slowly enough that unconditional velocity and energy decay envelopes
    exist.
    """

    exponent: float

    def __post_init__(self) -> None:
        lam = float(self.exponent)
        if not (0.0 < lam <= 0.5):
            raise ValueError(f"metric exponent must be in (0, 1/2], got {lam}")
        object.__setattr__(self, "exponent", lam)

    @property
    def is_constant(self) -> bool:
        return False

    def weight_matrix(self, x: np.ndarray) -> np.ndarray:
        """Kernel evaluated at the current positions; values in (0, 1]."""
        return (1.0 + _pairwise_sq_dists(x)) ** (-self.exponent)

    def min_weight(self, x: np.ndarray) -> float:
        """Smallest off-diagonal weight at positions ``x``."""
        w = self.weight_matrix(x)
        mask = ~np.eye(w.shape[0], dtype=bool)
        return float(w[mask].min())


Topology = ConstantTopology | MetricTopology


def uniform_topology(n: int) -> ConstantTopology:
    """All-ones weight matrix for ``n`` particles."""
    return ConstantTopology(np.ones((n, n)))


def weight(topology: Topology, state: MixtureState, alpha: int, beta: int) -> float:
    """Coupling weight between particles ``alpha`` and ``beta`` (0-based).

    Constant topologies return the matrix entry; metric topologies
    evaluate the kernel at the state's current positions.
    """
    x = state.x
    n = x.shape[0]
    for name, index in (("alpha", alpha), ("beta", beta)):
        if not 0 <= index < n:
            raise IndexError(f"{name} = {index} is out of range for {n} particles")
    return float(topology.weight_matrix(x)[alpha, beta])


def min_weight(topology: Topology, state: MixtureState) -> float:
    """Smallest off-diagonal coupling at the state's current positions.

    For a constant topology this is the fixed lower rate of every decay
    envelope; for a metric topology it is the instantaneous kernel minimum,
    which decays as the ensemble spreads.
    """
    return topology.min_weight(state.x)


def phi_to_psi(phi: np.ndarray) -> np.ndarray:
    """Reduce an ``n x n`` symmetric coupling matrix to ``(n-1) x (n-1)`` form.

    Off-diagonal entries are negated couplings, ``psi_ij = -phi_ij``; each
    diagonal entry collects the full coupling of particle ``i`` to everyone
    else, ``psi_ii = sum_{b != i} phi_ib``.  The diagonal of ``phi`` is
    ignored (it never enters the dynamics).
    """
    phi = np.asarray(phi, dtype=np.float64)
    if phi.ndim != 2 or phi.shape[0] != phi.shape[1]:
        raise ValueError(f"phi must be square, got shape {phi.shape}")
    n = phi.shape[0]
    if n < 2:
        raise ValueError("phi needs at least 2 particles")
    if not np.array_equal(phi, phi.T):
        raise ValueError("phi must be exactly symmetric")
    off = phi - np.diag(np.diag(phi))
    psi = -off[: n - 1, : n - 1]
    np.fill_diagonal(psi, off[: n - 1, :].sum(axis=1))
    return psi


def psi_to_phi(psi: np.ndarray, diag_value: float = 0.0) -> np.ndarray:
    """Expand a reduced ``(n-1) x (n-1)`` coupling matrix back to ``n x n``.

    Inverse of :func:`phi_to_psi` up to the inert diagonal, which is set
    to ``diag_value``.  The couplings to the eliminated particle are
    recovered from the row sums of ``psi``.
    """
    psi = np.asarray(psi, dtype=np.float64)
    if psi.ndim != 2 or psi.shape[0] != psi.shape[1]:
        raise ValueError(f"psi must be square, got shape {psi.shape}")
    if not np.array_equal(psi, psi.T):
        raise ValueError("psi must be exactly symmetric")
    m = psi.shape[0]
    if m < 1:
        raise ValueError("psi must be at least 1 x 1")
    n = m + 1
    phi = np.full((n, n), diag_value, dtype=np.float64)
    phi[:m, :m] = -psi
    last_row = psi.sum(axis=1)
    phi[:m, m] = last_row
    phi[m, :m] = last_row
    np.fill_diagonal(phi, diag_value)
    return phi
