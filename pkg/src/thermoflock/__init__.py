"""Deterministic simulation and verification of thermo-mechanical flocking.

The package integrates two agent-based flocking models for a mixture of
particles that carry a temperature alongside position and velocity:

* ``pbcs`` — velocity alignment driven by the temperature-scaled field
  ``u / T`` with energies relaxing through inverse-temperature gaps (the
  phenomenological closure);
* ``kbcs`` — direct velocity alignment with total particle energies
  averaging out (the kinetic closure).

Both conserve total momentum and total energy and produce entropy.  The
library exposes the right-hand sides, a deterministic fixed-step
integrator, the gas-mixture production terms the models descend from,
scalar diagnostics (fluctuation sizes, entropy, entropy production,
conservation residuals), closed-form decay envelopes with checkers,
analysis probes (exact solution for uniform coupling, initial-derivative
formulas, transient-growth detection, the two-model deviation
experiment), JSON scenarios with compiled-in reference cases, and a CLI
that writes trajectories and diagnostics as CSV plus a deterministic
verification report.
"""
from .analysis import (
    FUNCTIONALS,
    DeviationReport,
    classify_energy_pairs,
    closed_form_kbcs_uniform,
    closed_form_kbcs_uniform_series,
    detect_nonmonotonicity,
    deviation_experiment,
    equilibrium_distance,
    fit_envelope_constants,
    functional_series,
    initial_energy_derivative_pbcs,
    initial_velocity_derivative_pbcs,
    trajectory_deviations,
)
from .cli import (
    EXIT_CHECK_FAILED,
    EXIT_INPUT_ERROR,
    EXIT_INTEGRATION_ERROR,
    EXIT_OK,
    RunResult,
    main,
    run,
)
from .diagnostics import (
    DiagnosticsSeries,
    Envelope,
    EnvelopeReport,
    conservation_residuals,
    diagnostics_series,
    entropy,
    entropy_production,
    envelope_check,
    envelope_for,
    fluctuation_series,
    fluctuations,
    lambda0_constant,
)
from .errors import (
    DegenerateTemperatureError,
    IntegrationError,
    ScenarioError,
    ThermoflockError,
)
from .integrate import (
    MODELS,
    SCHEMES,
    IntegratorConfig,
    Trajectory,
    convergence_order,
    integrate,
    step,
)
from .models import (
    MixtureParams,
    StateDerivative,
    entropy_production_from_sources,
    kbcs_rates,
    linearization_match,
    pbcs_rates,
    production_kinetic,
    production_phenomenological,
    rhs_kbcs,
    rhs_pbcs,
)
from .scenarios import (
    RandomInitial,
    Scenario,
    builtin_scenarios,
    get_builtin,
    list_builtins,
    load_scenario,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
)
from .state import (
    TEMPERATURE_FLOOR,
    InitialDataReport,
    MixtureState,
    derive_T0,
    energy_fluctuations,
    normalize_frame,
    validate_initial,
)
from .topology import (
    ConstantTopology,
    MetricTopology,
    Topology,
    min_weight,
    phi_to_psi,
    psi_to_phi,
    uniform_topology,
    weight,
)

__version__ = "0.1.0"

__all__ = [
    # errors
    "ThermoflockError",
    "ScenarioError",
    "IntegrationError",
    "DegenerateTemperatureError",
    # state
    "TEMPERATURE_FLOOR",
    "MixtureState",
    "InitialDataReport",
    "derive_T0",
    "normalize_frame",
    "energy_fluctuations",
    "validate_initial",
    # topology
    "Topology",
    "ConstantTopology",
    "MetricTopology",
    "uniform_topology",
    "weight",
    "min_weight",
    "phi_to_psi",
    "psi_to_phi",
    # models
    "MODELS",
    "StateDerivative",
    "MixtureParams",
    "rhs_pbcs",
    "rhs_kbcs",
    "pbcs_rates",
    "kbcs_rates",
    "production_phenomenological",
    "production_kinetic",
    "entropy_production_from_sources",
    "linearization_match",
    # integrate
    "SCHEMES",
    "IntegratorConfig",
    "Trajectory",
    "step",
    "integrate",
    "convergence_order",
    # diagnostics
    "DiagnosticsSeries",
    "diagnostics_series",
    "fluctuations",
    "fluctuation_series",
    "entropy",
    "entropy_production",
    "conservation_residuals",
    "Envelope",
    "EnvelopeReport",
    "envelope_for",
    "envelope_check",
    "lambda0_constant",
    # analysis
    "FUNCTIONALS",
    "DeviationReport",
    "closed_form_kbcs_uniform",
    "closed_form_kbcs_uniform_series",
    "initial_velocity_derivative_pbcs",
    "initial_energy_derivative_pbcs",
    "classify_energy_pairs",
    "functional_series",
    "detect_nonmonotonicity",
    "equilibrium_distance",
    "trajectory_deviations",
    "fit_envelope_constants",
    "deviation_experiment",
    # scenarios
    "Scenario",
    "RandomInitial",
    "builtin_scenarios",
    "get_builtin",
    "list_builtins",
    "load_scenario",
    "save_scenario",
    "scenario_from_dict",
    "scenario_to_dict",
    # cli
    "main",
    "run",
    "RunResult",
    "EXIT_OK",
    "EXIT_CHECK_FAILED",
    "EXIT_INPUT_ERROR",
    "EXIT_INTEGRATION_ERROR",
]
