"""Tabular Q-learning over candidate level counts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

REWARD_FLOOR = 1e-10


@dataclass(frozen=True)
class RLConfig:
    epsilon: float = 0.9  # probability of exploiting the Q row
    alpha: float = 0.4
    gamma: float = 0.8
    candidate_levels: tuple[int, ...] = (4, 6, 8, 10)

    def __post_init__(self):
        if not 0 <= self.epsilon <= 1:
            raise ConfigError("epsilon must lie in [0, 1]")
        if not 0 < self.alpha <= 1:
            raise ConfigError("alpha must lie in (0, 1]")
        if not 0 <= self.gamma <= 1:
            raise ConfigError("gamma must lie in [0, 1]")
        levels = tuple(int(v) for v in self.candidate_levels)
        if not levels or len(set(levels)) != len(levels) or min(levels) < 1:
            raise ConfigError("candidate_levels must be distinct positive integers")
        object.__setattr__(self, "candidate_levels", levels)


@dataclass
class QTable:
    candidate_levels: tuple[int, ...]
    values: np.ndarray = field(default=None)
    current_state: int = 0

    def __post_init__(self):
        n = len(self.candidate_levels)
        if self.values is None:
            self.values = np.zeros((n, n))
        if self.values.shape != (n, n):
            raise ValueError("Q table must be square over the candidate levels")

    def to_dict(self) -> dict:
        return {
            "candidate_levels": list(self.candidate_levels),
            "values": self.values.tolist(),
            "current_state": self.current_state,
        }


def select_action(qtable: QTable, config: RLConfig, rng: np.random.Generator) -> int:
    """Greedy with probability ``epsilon``, uniform otherwise.

    ``np.argmax`` returns the first maximum, so ties go to the lowest index.
    """
    if rng.random() < config.epsilon:
        return int(np.argmax(qtable.values[qtable.current_state]))
    return int(rng.integers(len(qtable.candidate_levels)))


def compute_reward(loss_current: float, loss_previous: float) -> float:
    if math.isinf(loss_current) or math.isinf(loss_previous):
        return 0.0
    return abs(loss_current - loss_previous) / max(loss_current, REWARD_FLOOR)


def update_q(qtable: QTable, state: int, action: int, reward: float, config: RLConfig) -> None:
    q = qtable.values
    q[state, action] += config.alpha * (reward + config.gamma * q[action].max() - q[state, action])
    qtable.current_state = action
