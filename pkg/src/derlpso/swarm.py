"""Level-structured particle swarm: initialization, layering, exemplar
selection, the velocity/position update and the level sweep."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

UNEVALUATED = math.inf


@dataclass(eq=False)
class Particle:
    position: np.ndarray
    velocity: np.ndarray
    loss: float = UNEVALUATED

    def copy(self) -> Particle:
        return Particle(self.position.copy(), self.velocity.copy(), self.loss)


@dataclass(frozen=True)
class SwarmConfig:
    population: int = 100
    dim: int = 1
    lower: float = -10.0
    upper: float = 10.0
    beta_min: float = 1e-10
    beta_max: float = 10.0
    phi: float = 0.4
    max_iterations: int = 100
    reinit_threshold: float = 1e-4
    early_stop_loss: float | None = None

    def __post_init__(self):
        if self.population < 2:
            raise ConfigError("population must be >= 2")
        if self.dim < 1:
            raise ConfigError("dim must be >= 1")
        if not self.lower < self.upper:
            raise ConfigError("lower must be < upper")
        if not 0 < self.beta_min < self.beta_max:
            raise ConfigError("need 0 < beta_min < beta_max")
        if not 0 < self.phi <= 1:
            raise ConfigError("phi must lie in (0, 1]")
        if self.max_iterations < 0:
            raise ConfigError("max_iterations must be >= 0")
        if self.reinit_threshold <= 0:
            raise ConfigError("reinit_threshold must be positive")
        if self.early_stop_loss is not None and self.early_stop_loss < 0:
            raise ConfigError("early_stop_loss must be nonnegative")


@dataclass
class LeveledSwarm:
    particles: list[Particle]
    level_counts: list[int] = field(default_factory=list)
    gbest: Particle | None = None
    gbest_prev_loss: float = UNEVALUATED

    @property
    def size(self) -> int:
        return len(self.particles)

    def level(self, index: int) -> list[Particle]:
        """Members of 1-based level ``index``."""
        start = sum(self.level_counts[: index - 1])
        return self.particles[start : start + self.level_counts[index - 1]]

    def update_gbest(self) -> None:
        best = min(self.particles, key=lambda p: p.loss)
        if self.gbest is None or best.loss < self.gbest.loss:
            self.gbest = best.copy()


def init_uniform(dim: int, lower: float, upper: float, rng: np.random.Generator):
    position = rng.uniform(lower, upper, dim)
    velocity = rng.uniform(lower, upper, dim)
    return position, velocity


def _log_uniform(dim, beta_min, beta_max, rng):
    magnitude = np.exp(np.log(beta_min) + np.log(beta_max / beta_min) * rng.random(dim))
    sign = rng.integers(0, 2, dim) * 2 - 1
    return magnitude * sign


def init_logarithmic(dim: int, beta_min: float, beta_max: float, rng: np.random.Generator):
    """Log-uniform magnitudes in ``[beta_min, beta_max)`` with random signs."""
    return _log_uniform(dim, beta_min, beta_max, rng), _log_uniform(dim, beta_min, beta_max, rng)


def init_swarm(config: SwarmConfig, rng: np.random.Generator, *, logarithmic: bool = True) -> LeveledSwarm:
    """First ``N // 2`` particles uniform, the rest logarithmic.

    With ``logarithmic=False`` every particle is drawn uniformly.
    """
    n_uniform = config.population // 2 if logarithmic else config.population
    particles = []
    for i in range(config.population):
        if i < n_uniform:
            pos, vel = init_uniform(config.dim, config.lower, config.upper, rng)
        else:
            pos, vel = init_logarithmic(config.dim, config.beta_min, config.beta_max, rng)
        particles.append(Particle(pos, vel))
    return LeveledSwarm(particles)


def partition_levels(n: int, levels: int) -> list[int]:
    if not 1 <= levels <= n:
        raise ValueError(f"cannot split {n} particles into {levels} nonempty levels")
    base = n // levels
    return [base] * (levels - 1) + [base + n % levels]


def sort_and_assign(swarm: LeveledSwarm, levels: int) -> LeveledSwarm:
    # sorted() is stable, so ties keep their previous order
    swarm.particles = sorted(swarm.particles, key=lambda p: p.loss)
    swarm.level_counts = partition_levels(swarm.size, levels)
    return swarm


def competition_probability(cur_iter: int, max_iter: int) -> float:
    return (cur_iter / max_iter) ** 2 if max_iter > 0 else 1.0


def select_sample_levels(current_level: int, levels: int, cur_iter: int, max_iter: int, rng: np.random.Generator):
    """Pick two exemplar levels above ``current_level`` (1-based, 1 = best).

    Returns ``(l1, l2)`` with ``1 <= l1 <= l2 < current_level``.
    """
    if current_level < 3 or current_level > levels:
        raise ValueError("sample levels are only drawn for levels 3..L")
    p = competition_probability(cur_iter, max_iter)
    picks = []
    for _ in range(2):
        if rng.random() < p:
            a, b = rng.integers(1, current_level, 2)
            picks.append(int(min(a, b)))
        else:
            picks.append(int(rng.integers(1, current_level)))
    l1, l2 = sorted(picks)
    return l1, l2


def select_particles_same_level(members: list[Particle], rng: np.random.Generator):
    """Two members of one loss-sorted level, the first never worse than the second."""
    size = len(members)
    if size < 2:
        raise ValueError("a level needs at least two particles to supply exemplars")
    i1 = int(rng.integers(0, size - 1))
    i2 = int(rng.integers(i1 + 1, size))
    return members[i1], members[i2]


def update_particle(particle: Particle, exemplar1: Particle, exemplar2: Particle, phi: float, rng: np.random.Generator) -> Particle:
    x = particle.position
    omega = rng.random()
    r1 = rng.random()
    r2 = rng.random()
    velocity = omega * particle.velocity + r1 * (exemplar1.position - x) + phi * r2 * (exemplar2.position - x)
    return Particle(x + velocity, velocity, UNEVALUATED)


def _update_level(swarm, index, levels, cur_iter, max_iter, phi, rng):
    start = sum(swarm.level_counts[: index - 1])
    for offset in range(swarm.level_counts[index - 1]):
        if index == 2:
            ex1, ex2 = select_particles_same_level(swarm.level(1), rng)
        else:
            l1, l2 = select_sample_levels(index, levels, cur_iter, max_iter, rng)
            if l1 == l2:
                ex1, ex2 = select_particles_same_level(swarm.level(l1), rng)
            else:
                pool1, pool2 = swarm.level(l1), swarm.level(l2)
                ex1 = pool1[int(rng.integers(len(pool1)))]
                ex2 = pool2[int(rng.integers(len(pool2)))]
        i = start + offset
        swarm.particles[i] = update_particle(swarm.particles[i], ex1, ex2, phi, rng)


def bottom_up_sweep(swarm: LeveledSwarm, levels: int, cur_iter: int, max_iter: int, phi: float, rng: np.random.Generator) -> LeveledSwarm:
    """Update levels L, L-1, ..., 2; level 1 is left alone.

    Exemplars always come from better levels, which are still untouched when
    a level is processed, so they carry their start-of-sweep losses.
    """
    for index in range(levels, 1, -1):
        _update_level(swarm, index, levels, cur_iter, max_iter, phi, rng)
    return swarm


def top_down_sweep(swarm: LeveledSwarm, levels: int, cur_iter: int, max_iter: int, phi: float, rng: np.random.Generator) -> LeveledSwarm:
    """Update levels 2, 3, ..., L, learning from already-moved better levels.

    Used by the RLLPSO baseline; exemplar positions are read live, so a level
    may follow particles that moved earlier in the same sweep.
    """
    for index in range(2, levels + 1):
        _update_level(swarm, index, levels, cur_iter, max_iter, phi, rng)
    return swarm


def reinitialize(swarm: LeveledSwarm, config: SwarmConfig, rng: np.random.Generator) -> LeveledSwarm:
    """Redraw every particle logarithmically; the gbest record is kept."""
    for p in swarm.particles:
        p.position, p.velocity = init_logarithmic(config.dim, config.beta_min, config.beta_max, rng)
        p.loss = UNEVALUATED
    return swarm
