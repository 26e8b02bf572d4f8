"""Scenario definitions: built-in experiments, JSON files, serialization.

A scenario bundles everything one run needs: the model selection, the
coupling topology, initial data (explicit arrays or a seeded random
recipe), how the reference temperature is obtained, the integrator
configuration and the list of verification checks to apply.

Scenario files are JSON with a strict, documented schema (see README).
The built-in scenarios cover the package's standard experiments and are
compiled in, so reproducing them needs no external files.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ScenarioError
from .integrate import MODELS, IntegratorConfig
from .state import MixtureState, derive_T0, normalize_frame
from .topology import ConstantTopology, MetricTopology, Topology, uniform_topology

VALID_CHECKS = ("conservation", "entropy", "envelope", "deviation", "nonmonotonicity")
MODEL_CHOICES = MODELS + ("both",)
T0_MODES = ("derive", "fixed")


@dataclass(frozen=True)
class RandomInitial:
    """Recipe for seeded random admissible initial data.

    Velocities and positions are centered Gaussian draws (means removed,
    so the rest-frame constraints hold exactly); temperatures are uniform
    on [base, base + spread], keeping them positive.
    """

    n: int
    d: int = 1
    velocity_scale: float = 1.0
    position_scale: float = 1.0
    temperature_base: float = 1.0
    temperature_spread: float = 0.5
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ScenarioError(f"random initial data needs n >= 2 particles, got {self.n}")
        if self.d < 1:
            raise ScenarioError(f"random initial data needs dimension >= 1, got {self.d}")
        if self.temperature_base <= 0.0:
            raise ScenarioError(
                f"temperature_base must be positive, got {self.temperature_base}"
            )
        if self.temperature_spread < 0.0:
            raise ScenarioError(
                f"temperature_spread must be non-negative, got {self.temperature_spread}"
            )

    def realize(self, seed: int | None = None) -> MixtureState:
        """Draw a concrete admissible state; ``seed`` overrides the stored one."""
        effective = seed if seed is not None else self.seed
        rng = np.random.default_rng(effective)
        x = self.position_scale * rng.standard_normal((self.n, self.d))
        u = self.velocity_scale * rng.standard_normal((self.n, self.d))
        T = self.temperature_base + self.temperature_spread * rng.random(self.n)
        state = MixtureState(x=x, u=u, T=T)
        return normalize_frame(state)


@dataclass(frozen=True)
class Scenario:
    """A fully specified experiment, ready to realize and integrate."""

    name: str
    model: str  # "pbcs" | "kbcs" | "both"
    topology: Topology
    initial: MixtureState | RandomInitial
    config: IntegratorConfig
    checks: tuple[str, ...] = ()
    t0_mode: str = "derive"
    t0_value: float | None = None
    description: str = ""

    def __post_init__(self) -> None:
        if self.model not in MODEL_CHOICES:
            raise ScenarioError(
                f"model must be one of {MODEL_CHOICES}, got {self.model!r}"
            )
        if self.t0_mode not in T0_MODES:
            raise ScenarioError(
                f"t0_mode must be one of {T0_MODES}, got {self.t0_mode!r}"
            )
        if self.t0_mode == "fixed" and self.t0_value is None:
            raise ScenarioError("t0_mode 'fixed' requires t0_value")
        if self.t0_mode == "derive" and self.t0_value is not None:
            raise ScenarioError("t0_value is only allowed with t0_mode 'fixed'")
        for check in self.checks:
            if check not in VALID_CHECKS:
                raise ScenarioError(
                    f"unknown check {check!r}; valid checks are {VALID_CHECKS}"
                )

    @property
    def models(self) -> tuple[str, ...]:
        """The concrete models this scenario runs."""
        return MODELS if self.model == "both" else (self.model,)

    def realize(self, seed: int | None = None) -> tuple[MixtureState, float]:
        """Produce the concrete initial state and reference temperature.

        Explicit data is frame-normalized (an exact no-op for data already
        in the rest frame).  Random recipes require a seed whenever checks
        are requested, so check outcomes stay reproducible.  In fixed-T0
        mode the stored value is cross-checked against the mean particle
        energy of the realized data; disagreement beyond 1e-9 is an error.
        """
        if isinstance(self.initial, RandomInitial):
            if seed is None and self.initial.seed is None and self.checks:
                raise ScenarioError(
                    f"scenario {self.name!r} has random initial data and checks "
                    "enabled; pass an explicit seed to keep results reproducible"
                )
            state = self.initial.realize(seed)
        else:
            state = normalize_frame(self.initial)
        derived = derive_T0(state)
        if self.t0_mode == "fixed":
            assert self.t0_value is not None
            mismatch = abs(self.t0_value - derived)
            if mismatch > 1e-9 * max(1.0, abs(self.t0_value)):
                raise ScenarioError(
                    f"fixed T0 = {self.t0_value} disagrees with the mean particle "
                    f"energy {derived} of the initial data (|diff| = {mismatch:.3e})"
                )
            return state, float(self.t0_value)
        return state, derived


# ---------------------------------------------------------------------------
# Built-in scenarios
# ---------------------------------------------------------------------------


def _case_a_state() -> MixtureState:
    return MixtureState(
        x=np.array([0.2108, -0.3500, 0.1392]),
        u=np.array([1.0, 2.0, -3.0]),
        T=np.array([3.0, 0.01, 3.0]),
    )


def _case_b_matrix() -> np.ndarray:
    return np.array(
        [
            [0.0, 100.0, 1.0, 1.0],
            [100.0, 0.0, 1.0, 1.0],
            [1.0, 1.0, 0.0, 100.0],
            [1.0, 1.0, 100.0, 0.0],
        ]
    )


def _case_b_state(u: tuple[float, float, float, float]) -> MixtureState:
    return MixtureState(
        x=np.array([0.3709, -0.1899, 0.2992, -0.4802]),
        u=np.array(u),
        T=np.array([1.0, 0.1, 1.0, 1.0]),
    )


def builtin_scenarios() -> dict[str, Scenario]:
    """The six compiled-in scenarios, keyed by name."""
    scenarios = [
        Scenario(
            name="case-a",
            model="both",
            topology=uniform_topology(3),
            initial=_case_a_state(),
            config=IntegratorConfig(dt=1e-3, t_end=10.0, record_every=10),
            checks=("conservation", "entropy", "envelope", "nonmonotonicity"),
            description=(
                "three particles, uniform coupling, one initially very cold "
                "particle; run under both models"
            ),
        ),
        Scenario(
            name="case-b-1",
            model="both",
            topology=ConstantTopology(_case_b_matrix()),
            initial=_case_b_state((2.0, 1.1, -1.1, -2.0)),
            config=IntegratorConfig(dt=1e-4, t_end=1.0, record_every=10),
            checks=("conservation", "entropy"),
            description=(
                "four particles in two strongly coupled pairs; velocity "
                "fluctuation transiently grows under the phenomenological model"
            ),
        ),
        Scenario(
            name="case-b-2",
            model="both",
            topology=ConstantTopology(_case_b_matrix()),
            initial=_case_b_state((1.0, 2.0, -1.0, -2.0)),
            config=IntegratorConfig(dt=1e-4, t_end=1.0, record_every=10),
            checks=("conservation", "entropy"),
            description=(
                "four particles in two strongly coupled pairs; the fastest "
                "particle first speeds up under both models"
            ),
        ),
        Scenario(
            name="prop52",
            model="pbcs",
            topology=ConstantTopology(
                np.array([[0.0, 200.0, 1.0], [200.0, 0.0, 1.0], [1.0, 1.0, 0.0]])
            ),
            initial=MixtureState(
                x=np.zeros(3),
                u=np.array([4.0, 3.0, -7.0]),
                T=np.array([2.0, 1.0, 1.0]),
            ),
            # the dominant coupling drives a fast thermal transient; the
            # step must resolve it or the stage temperatures overshoot zero
            config=IntegratorConfig(dt=1e-4, t_end=0.5, record_every=10),
            checks=("conservation", "entropy"),
            description=(
                "three particles with one dominant coupling; the velocity "
                "fluctuation initially grows under the phenomenological model"
            ),
        ),
        Scenario(
            name="prop53",
            model="pbcs",
            topology=ConstantTopology(
                np.array([[0.0, 3.0, 1.0], [3.0, 0.0, 1.0], [1.0, 1.0, 0.0]])
            ),
            initial=MixtureState(
                x=np.zeros(3),
                u=np.array([1.0, -2.0, 1.0]),
                T=np.array([2.0, 1.0, 1.0]),
            ),
            config=IntegratorConfig(dt=1e-3, t_end=2.0, record_every=1),
            checks=("conservation", "entropy"),
            description=(
                "three particles arranged so the energy fluctuation initially "
                "grows under the phenomenological model"
            ),
        ),
        Scenario(
            name="uniform-oracle",
            model="kbcs",
            topology=uniform_topology(3),
            initial=_case_a_state(),
            config=IntegratorConfig(dt=1e-3, t_end=10.0, record_every=10),
            checks=("conservation", "entropy", "envelope"),
            description=(
                "kinetic model with uniform coupling, solvable in closed form; "
                "the integrator-accuracy oracle"
            ),
        ),
    ]
    return {scenario.name: scenario for scenario in scenarios}


def list_builtins() -> list[tuple[str, str]]:
    """Names and one-line descriptions of the compiled-in scenarios."""
    return [(s.name, s.description) for s in builtin_scenarios().values()]


def get_builtin(name: str) -> Scenario:
    scenarios = builtin_scenarios()
    if name not in scenarios:
        available = ", ".join(scenarios)
        raise ScenarioError(f"unknown builtin scenario {name!r}; available: {available}")
    return scenarios[name]


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------


def _require_keys(mapping: dict, allowed: set[str], required: set[str], where: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ScenarioError(f"unknown {where} field(s): {sorted(unknown)}")
    missing = required - set(mapping)
    if missing:
        raise ScenarioError(f"missing {where} field(s): {sorted(missing)}")


def _parse_topology(data: object) -> Topology:
    if not isinstance(data, dict):
        raise ScenarioError("topology must be an object with a 'type' field")
    kind = data.get("type")
    if kind == "matrix":
        _require_keys(data, {"type", "weights"}, {"type", "weights"}, "topology")
        try:
            weights = np.asarray(data["weights"], dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"topology.weights is not a numeric matrix: {exc}") from exc
        return ConstantTopology(weights)
    if kind == "metric":
        _require_keys(data, {"type", "exponent"}, {"type", "exponent"}, "topology")
        exponent = data["exponent"]
        if not isinstance(exponent, (int, float)):
            raise ScenarioError(f"topology.exponent must be a number, got {exponent!r}")
        return MetricTopology(float(exponent))
    raise ScenarioError(f"topology.type must be 'matrix' or 'metric', got {kind!r}")


def _parse_initial(data: object) -> MixtureState | RandomInitial:
    if not isinstance(data, dict):
        raise ScenarioError("initial must be an object")
    if "random" in data:
        _require_keys(data, {"random"}, {"random"}, "initial")
        recipe = data["random"]
        if not isinstance(recipe, dict):
            raise ScenarioError("initial.random must be an object")
        allowed = {
            "n",
            "d",
            "velocity_scale",
            "position_scale",
            "temperature_base",
            "temperature_spread",
            "seed",
        }
        _require_keys(recipe, allowed, {"n"}, "initial.random")
        return RandomInitial(**recipe)
    _require_keys(data, {"x", "u", "T"}, {"u", "T"}, "initial")
    try:
        u = np.asarray(data["u"], dtype=np.float64)
        T = np.asarray(data["T"], dtype=np.float64)
        x = np.asarray(data["x"], dtype=np.float64) if "x" in data else np.zeros_like(u)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"initial data is not numeric: {exc}") from exc
    return MixtureState(x=x, u=u, T=T)


def _parse_integrator(data: object) -> IntegratorConfig:
    if not isinstance(data, dict):
        raise ScenarioError("integrator must be an object with dt and t_end")
    allowed = {"scheme", "dt", "t_end", "record_every"}
    _require_keys(data, allowed, {"dt", "t_end"}, "integrator")
    kwargs: dict = {"dt": data["dt"], "t_end": data["t_end"]}
    if "scheme" in data:
        kwargs["scheme"] = data["scheme"]
    if "record_every" in data:
        kwargs["record_every"] = data["record_every"]
    return IntegratorConfig(**kwargs)


def scenario_from_dict(data: dict, name: str = "scenario") -> Scenario:
    """Build a validated Scenario from parsed JSON data."""
    if not isinstance(data, dict):
        raise ScenarioError("scenario file must contain a JSON object")
    allowed = {
        "name",
        "description",
        "model",
        "topology",
        "initial",
        "t0_mode",
        "t0_value",
        "integrator",
        "checks",
    }
    _require_keys(data, allowed, {"model", "topology", "initial", "integrator"}, "scenario")
    checks = data.get("checks", [])
    if not isinstance(checks, list) or not all(isinstance(c, str) for c in checks):
        raise ScenarioError("checks must be a list of check names")
    t0_mode = data.get("t0_mode", "derive")
    t0_value = data.get("t0_value")
    if t0_value is not None and not isinstance(t0_value, (int, float)):
        raise ScenarioError(f"t0_value must be a number, got {t0_value!r}")
    return Scenario(
        name=str(data.get("name", name)),
        model=data.get("model", ""),
        topology=_parse_topology(data["topology"]),
        initial=_parse_initial(data["initial"]),
        config=_parse_integrator(data["integrator"]),
        checks=tuple(checks),
        t0_mode=t0_mode,
        t0_value=None if t0_value is None else float(t0_value),
        description=str(data.get("description", "")),
    )


def load_scenario(path: str | Path) -> Scenario:
    """Load and validate a scenario from a JSON file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(
            f"scenario file {path} is not valid JSON "
            f"(line {exc.lineno}, column {exc.colno}): {exc.msg}"
        ) from exc
    try:
        return scenario_from_dict(data, name=path.stem)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


def _array_to_json(arr: np.ndarray) -> list:
    if arr.ndim == 2 and arr.shape[1] == 1:
        return [float(v) for v in arr[:, 0]]
    return arr.tolist()


def scenario_to_dict(scenario: Scenario) -> dict:
    """Serialize a Scenario to the JSON schema accepted by load_scenario."""
    data: dict = {"name": scenario.name, "model": scenario.model}
    if scenario.description:
        data["description"] = scenario.description
    if isinstance(scenario.topology, ConstantTopology):
        data["topology"] = {"type": "matrix", "weights": scenario.topology.weights.tolist()}
    else:
        data["topology"] = {"type": "metric", "exponent": scenario.topology.exponent}
    if isinstance(scenario.initial, RandomInitial):
        recipe = {
            "n": scenario.initial.n,
            "d": scenario.initial.d,
            "velocity_scale": scenario.initial.velocity_scale,
            "position_scale": scenario.initial.position_scale,
            "temperature_base": scenario.initial.temperature_base,
            "temperature_spread": scenario.initial.temperature_spread,
        }
        if scenario.initial.seed is not None:
            recipe["seed"] = scenario.initial.seed
        data["initial"] = {"random": recipe}
    else:
        data["initial"] = {
            "x": _array_to_json(scenario.initial.x),
            "u": _array_to_json(scenario.initial.u),
            "T": scenario.initial.T.tolist(),
        }
    data["t0_mode"] = scenario.t0_mode
    if scenario.t0_value is not None:
        data["t0_value"] = scenario.t0_value
    data["integrator"] = {
        "scheme": scenario.config.scheme,
        "dt": scenario.config.dt,
        "t_end": scenario.config.t_end,
        "record_every": scenario.config.record_every,
    }
    data["checks"] = list(scenario.checks)
    return data


def save_scenario(scenario: Scenario, path: str | Path) -> None:
    """Write a scenario as JSON; loading it back reproduces the run exactly."""
    Path(path).write_text(json.dumps(scenario_to_dict(scenario), indent=2) + "\n")
