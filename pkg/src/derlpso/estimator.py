"""The DERLPSO estimation loop and its RLLPSO baseline."""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import ConfigError
from .ode import IntegratorConfig
from .problems import FORMAT_VERSION, Problem, evaluate_loss
from .qlearning import QTable, RLConfig, compute_reward, select_action, update_q
from .swarm import (
    LeveledSwarm,
    SwarmConfig,
    bottom_up_sweep,
    init_swarm,
    reinitialize,
    sort_and_assign,
    top_down_sweep,
)

log = logging.getLogger(__name__)


@dataclass
class EstimationResult:
    best_params: np.ndarray
    best_loss: float
    loss_curve: list[float]
    level_choices: list[int]
    iterations_used: int
    seed: int
    reinit_triggered: bool
    reinit_iteration: int | None = None
    algorithm: str = "derlpso"
    q_table: dict[str, Any] = field(default_factory=dict)
    config_echo: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "version": FORMAT_VERSION,
            "algorithm": self.algorithm,
            "best_params": [float(v) for v in self.best_params],
            "best_loss": _json_float(self.best_loss),
            "loss_curve": [_json_float(v) for v in self.loss_curve],
            "level_choices": list(self.level_choices),
            "iterations_used": self.iterations_used,
            "reinit_triggered": self.reinit_triggered,
            "reinit_iteration": self.reinit_iteration,
            "seed": self.seed,
            "q_table": self.q_table,
            "config_echo": self.config_echo,
        }

    def same_as(self, other: EstimationResult) -> bool:
        return self.to_dict() == other.to_dict()


def _json_float(value: float):
    # JSON has no infinity; None marks a run whose every evaluation failed
    return float(value) if math.isfinite(value) else None


def swarm_config_for(problem: Problem, **overrides) -> SwarmConfig:
    """Default swarm settings for ``problem`` (dimension and iteration budget)."""
    kwargs = {"dim": problem.dim, "max_iterations": problem.spec.max_iterations}
    kwargs.update(overrides)
    return SwarmConfig(**kwargs)


def _evaluate(swarm: LeveledSwarm, problem: Problem, indices=None) -> None:
    targets = range(swarm.size) if indices is None else indices
    for i in targets:
        p = swarm.particles[i]
        p.loss = evaluate_loss(problem, p.position)


def _run(
    problem: Problem,
    swarm_config: SwarmConfig | None,
    rl_config: RLConfig | None,
    integrator_config: IntegratorConfig | None,
    seed: int,
    *,
    enhanced: bool,
    initial_positions: np.ndarray | None = None,
) -> EstimationResult:
    swarm_config = swarm_config or swarm_config_for(problem)
    rl_config = rl_config or RLConfig()
    if swarm_config.dim != problem.dim:
        raise ConfigError(f"swarm dim {swarm_config.dim} does not match problem dim {problem.dim}")
    if swarm_config.population < 2 * max(rl_config.candidate_levels):
        raise ConfigError("population must hold at least two particles per level")
    if integrator_config is not None and integrator_config != problem.integrator:
        problem = dataclasses.replace(problem, integrator=integrator_config)

    rng = np.random.default_rng(seed)
    swarm = init_swarm(swarm_config, rng, logarithmic=enhanced)
    if initial_positions is not None:
        for p, x in zip(swarm.particles, np.asarray(initial_positions, dtype=float)):
            p.position = x.copy()
    qtable = QTable(rl_config.candidate_levels)
    sweep = bottom_up_sweep if enhanced else top_down_sweep
    max_iter = swarm_config.max_iterations
    midpoint = max_iter // 2

    _evaluate(swarm, problem)
    swarm.update_gbest()
    swarm.gbest_prev_loss = swarm.gbest.loss

    loss_curve: list[float] = []
    level_choices: list[int] = []
    reinit_iteration = None
    for it in range(max_iter):
        action = select_action(qtable, rl_config, rng)
        levels = rl_config.candidate_levels[action]
        sort_and_assign(swarm, levels)
        sweep(swarm, levels, it, max_iter, swarm_config.phi, rng)
        # level 1 is never moved, so only the rest need re-scoring
        _evaluate(swarm, problem, range(swarm.level_counts[0], swarm.size))
        swarm.update_gbest()

        reward = compute_reward(swarm.gbest.loss, swarm.gbest_prev_loss)
        update_q(qtable, qtable.current_state, action, reward, rl_config)

        if enhanced and it == midpoint and swarm.gbest.loss > swarm_config.reinit_threshold:
            reinitialize(swarm, swarm_config, rng)
            _evaluate(swarm, problem)
            swarm.update_gbest()
            reinit_iteration = it
            log.debug("reinitialized swarm at iteration %d", it)

        swarm.gbest_prev_loss = swarm.gbest.loss
        loss_curve.append(swarm.gbest.loss)
        level_choices.append(levels)
        if swarm_config.early_stop_loss is not None and swarm.gbest.loss <= swarm_config.early_stop_loss:
            break

    return EstimationResult(
        best_params=swarm.gbest.position.copy(),
        best_loss=swarm.gbest.loss,
        loss_curve=loss_curve,
        level_choices=level_choices,
        iterations_used=len(loss_curve),
        seed=seed,
        reinit_triggered=reinit_iteration is not None,
        reinit_iteration=reinit_iteration,
        algorithm="derlpso" if enhanced else "rllpso",
        q_table=qtable.to_dict(),
        config_echo={
            "swarm": dataclasses.asdict(swarm_config),
            "rl": {**dataclasses.asdict(rl_config), "candidate_levels": list(rl_config.candidate_levels)},
            "integrator": dataclasses.asdict(problem.integrator),
        },
    )


def run_derlpso(
    problem: Problem,
    swarm_config: SwarmConfig | None = None,
    rl_config: RLConfig | None = None,
    integrator_config: IntegratorConfig | None = None,
    seed: int = 0,
    *,
    initial_positions: np.ndarray | None = None,
) -> EstimationResult:
    """Estimate ``problem``'s parameters with the full DERLPSO loop.

    ``initial_positions`` overrides the sampled starting positions (velocities
    are still drawn); it exists for controlled experiments on the reinit rule.
    """
    return _run(
        problem,
        swarm_config,
        rl_config,
        integrator_config,
        seed,
        enhanced=True,
        initial_positions=initial_positions,
    )


def run_rllpso(
    problem: Problem,
    swarm_config: SwarmConfig | None = None,
    rl_config: RLConfig | None = None,
    integrator_config: IntegratorConfig | None = None,
    seed: int = 0,
) -> EstimationResult:
    """Baseline: uniform initialization only, no reinitialization, top-down sweep."""
    return _run(problem, swarm_config, rl_config, integrator_config, seed, enhanced=False)


ALGORITHMS = {"derlpso": run_derlpso, "rllpso": run_rllpso}
