"""Benchmark problems: parameter priors, synthetic observations and the MSE loss."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import pde
from .errors import ConfigError, SolverFailure
from .ode import (
    FHN_DEFAULT_CONSTANTS,
    IntegratorConfig,
    OdeKind,
    TimeGrid,
    _dopri5,
)

FORMAT_VERSION = 1
MAX_REJECTIONS = 10_000
MAX_REDRAWS = 100


@dataclass(frozen=True)
class ParameterPrior:
    """Independent normals, optionally truncated to ``(low, high]``."""

    means: tuple[float, ...]
    stds: tuple[float, ...]
    low: float | None = None
    high: float | None = None

    def __post_init__(self):
        if len(self.means) != len(self.stds):
            raise ConfigError("means and stds differ in length")
        if any(s <= 0 for s in self.stds):
            raise ConfigError("prior std must be positive")
        if self.low is not None and self.high is not None and not self.low < self.high:
            raise ConfigError("empty truncation interval")

    def contains(self, value: float) -> bool:
        if self.low is not None and not value > self.low:
            return False
        if self.high is not None and not value <= self.high:
            return False
        return True


def sample_parameters(prior: ParameterPrior, rng: np.random.Generator) -> np.ndarray:
    out = np.empty(len(prior.means))
    for i, (mean, std) in enumerate(zip(prior.means, prior.stds)):
        for _ in range(MAX_REJECTIONS):
            value = rng.normal(mean, std)
            if prior.contains(value):
                out[i] = value
                break
        else:
            raise ConfigError(
                f"could not draw parameter {i} from N({mean}, {std}) inside "
                f"({prior.low}, {prior.high}] in {MAX_REJECTIONS} tries"
            )
    return out


@dataclass(frozen=True)
class Equation:
    name: str
    family: str  # "ode" or "pde"
    param_names: tuple[str, ...]
    prior: ParameterPrior
    max_iterations: int
    t_range: tuple[float, float] | None = None
    initial_state: tuple[float, ...] | None = None
    ode_kind: OdeKind | None = None

    @property
    def dim(self) -> int:
        return len(self.param_names)


def _prior(means, std=0.5, low=None, high=None):
    return ParameterPrior(tuple(means), (std,) * len(means), low, high)


EQUATIONS: dict[str, Equation] = {
    e.name: e
    for e in (
        Equation(
            "lotka-volterra",
            "ode",
            ("alpha", "beta", "delta", "gamma"),
            _prior((0.4, 1.3, 1.0, 1.0), low=0.0),
            200,
            t_range=(0.0, 4.0),
            initial_state=(0.9, 0.9),
            ode_kind=OdeKind.LOTKA_VOLTERRA,
        ),
        Equation(
            "lorenz",
            "ode",
            ("sigma", "r", "beta"),
            _prior((2.0, 1.0, 4.0), low=0.0),
            100,
            t_range=(0.0, 4.0),
            initial_state=(0.0, 1.0, 1.25),
            ode_kind=OdeKind.LORENZ,
        ),
        Equation(
            "fitzhugh-nagumo",
            "ode",
            ("theta0", "theta1"),
            _prior((0.7, 0.8)),
            100,
            t_range=(0.0, 20.0),
            initial_state=(0.0, 0.0),
            ode_kind=OdeKind.FITZHUGH_NAGUMO,
        ),
        Equation("heat", "pde", ("alpha",), _prior((0.4,), low=0.0, high=1.0), 50),
        Equation(
            "convection-diffusion",
            "pde",
            ("D", "v"),
            _prior((0.5, 0.5), low=0.0, high=1.0),
            50,
        ),
        Equation("helmholtz", "pde", ("lambda",), _prior((0.5,), low=0.0, high=1.0), 50),
    )
}


def get_equation(name: str) -> Equation:
    try:
        return EQUATIONS[name]
    except KeyError:
        raise ConfigError(f"unknown equation {name!r}; choose from {', '.join(EQUATIONS)}") from None


def default_grid(equation: str, points: int) -> dict[str, Any]:
    eq = get_equation(equation)
    if eq.family == "ode":
        if points < 2:
            raise ConfigError("an ODE time grid needs at least 2 points")
        return {"t_start": eq.t_range[0], "t_end": eq.t_range[1], "points": int(points)}
    if points < 3:
        raise ConfigError("a PDE grid needs at least 3 points per axis")
    if equation == "helmholtz":
        return {"x_points": int(points), "y_points": int(points)}
    return {"x_points": int(points), "t_points": int(points)}


@dataclass
class Problem:
    """A forward model on a fixed grid plus the observations it must match."""

    equation: str
    grid: dict[str, Any]
    observed: np.ndarray
    true_params: np.ndarray
    initial_state: tuple[float, ...] | None = None
    fixed_constants: tuple[float, ...] = ()
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    seed: int | None = None
    redraws: int = 0

    def __post_init__(self):
        self.spec = get_equation(self.equation)
        self.observed = np.asarray(self.observed, dtype=float)
        self.true_params = np.asarray(self.true_params, dtype=float)
        if self.spec.family == "ode":
            self._times = TimeGrid(**self.grid).times
            self._y0 = np.asarray(self.initial_state, dtype=float)
            consts = self.fixed_constants
            if self.spec.ode_kind == OdeKind.FITZHUGH_NAGUMO and not consts:
                consts = FHN_DEFAULT_CONSTANTS
            self.fixed_constants = tuple(float(c) for c in consts)
            self._consts = np.asarray(self.fixed_constants or (0.0, 0.0), dtype=float)
        elif self.equation == "helmholtz":
            self._grid = pde.Grid2D(**self.grid)
        else:
            self._grid = pde.Grid1D(**self.grid)

    @property
    def dim(self) -> int:
        return self.spec.dim

    def forward(self, params) -> np.ndarray:
        """Solve the model at ``params``; raises SolverFailure."""
        params = np.asarray(params, dtype=float)
        if params.shape != (self.dim,):
            raise ValueError(f"{self.equation} takes {self.dim} parameters")
        if self.spec.family == "ode":
            cfg = self.integrator
            status, states = _dopri5(
                int(self.spec.ode_kind),
                params,
                self._consts,
                self._y0,
                self._times,
                cfg.rel_tol,
                cfg.abs_tol,
                cfg.max_steps,
                cfg.initial_step or 0.0,
            )
            if status != 0:
                raise SolverFailure(f"integration failed with status {status}")
            return states
        if self.equation == "heat":
            return pde.solve_heat_1d(params[0], self._grid)
        if self.equation == "convection-diffusion":
            return pde.solve_convection_diffusion_1d(params[0], params[1], self._grid)
        return pde.solve_helmholtz_2d(params[0], self._grid)

    def to_dict(self) -> dict[str, Any]:
        doc = {
            "version": FORMAT_VERSION,
            "equation": self.equation,
            "grid": dict(self.grid),
            "initial_state": list(self.initial_state) if self.initial_state is not None else None,
            "fixed_constants": list(self.fixed_constants),
            "integrator": {
                "rel_tol": self.integrator.rel_tol,
                "abs_tol": self.integrator.abs_tol,
                "max_steps": self.integrator.max_steps,
                "initial_step": self.integrator.initial_step,
            },
            "observed": self.observed.tolist(),
            "true_params": self.true_params.tolist(),
            "param_names": list(self.spec.param_names),
            "seed": self.seed,
            "redraws": self.redraws,
        }
        return doc

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> Problem:
        if doc.get("version") != FORMAT_VERSION:
            raise ConfigError(f"unsupported problem version {doc.get('version')!r}")
        try:
            integ = doc.get("integrator") or {}
            problem = cls(
                equation=doc["equation"],
                grid=dict(doc["grid"]),
                observed=np.asarray(doc["observed"], dtype=float),
                true_params=np.asarray(doc["true_params"], dtype=float),
                initial_state=tuple(doc["initial_state"]) if doc.get("initial_state") is not None else None,
                fixed_constants=tuple(doc.get("fixed_constants") or ()),
                integrator=IntegratorConfig(**integ),
                seed=doc.get("seed"),
                redraws=doc.get("redraws", 0),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed problem document: {exc}") from exc
        expected = problem.forward_shape()
        if problem.observed.shape != expected:
            raise ConfigError(f"observed has shape {problem.observed.shape}, grid implies {expected}")
        return problem

    def forward_shape(self) -> tuple[int, int]:
        g = self.grid
        if self.spec.family == "ode":
            return (g["points"], len(self.initial_state))
        if self.equation == "helmholtz":
            return (g["x_points"], g["y_points"])
        return (g["t_points"], g["x_points"])


def evaluate_loss(problem: Problem, params) -> float:
    """Mean squared deviation over every observed sample; +inf on solver failure."""
    try:
        predicted = problem.forward(params)
    except SolverFailure:
        return math.inf
    diff = predicted - problem.observed
    loss = float(np.mean(diff * diff))
    return loss if math.isfinite(loss) else math.inf


def simulate_observations(problem_template: Problem, true_params) -> np.ndarray:
    return problem_template.forward(true_params)


def make_problem(
    equation: str,
    points: int,
    rng: np.random.Generator,
    *,
    seed: int | None = None,
    integrator: IntegratorConfig | None = None,
    true_params=None,
    fixed_constants: tuple[float, ...] = (),
) -> Problem:
    """Draw parameters from the equation's prior and simulate noiseless observations.

    Parameters whose forward solve fails are redrawn, up to ``MAX_REDRAWS`` times.
    """
    eq = get_equation(equation)
    grid = default_grid(equation, points)
    integrator = integrator or IntegratorConfig()
    shape_probe = Problem(
        equation,
        grid,
        observed=np.zeros(1),
        true_params=np.zeros(eq.dim),
        initial_state=eq.initial_state,
        fixed_constants=fixed_constants,
        integrator=integrator,
    )
    for redraws in range(MAX_REDRAWS):
        params = np.asarray(true_params, dtype=float) if true_params is not None else sample_parameters(eq.prior, rng)
        try:
            observed = simulate_observations(shape_probe, params)
        except SolverFailure:
            if true_params is not None:
                raise
            continue
        return Problem(
            equation,
            grid,
            observed=observed,
            true_params=params,
            initial_state=eq.initial_state,
            fixed_constants=shape_probe.fixed_constants,
            integrator=integrator,
            seed=seed,
            redraws=redraws,
        )
    raise SolverFailure(f"no solvable parameter draw for {equation} in {MAX_REDRAWS} attempts")
