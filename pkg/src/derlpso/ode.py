"""Benchmark ODE systems and an adaptive Dormand-Prince 5(4) integrator.

The stepping loop is compiled with numba; a swarm run calls it tens of
thousands of times, so everything on the hot path stays inside ``_dopri5``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import SolverFailure

BLOWUP_LIMIT = 1e12

# status codes returned by the compiled core
_OK = 0
_MAX_STEPS = 1
_UNDERFLOW = 2
_BLOWUP = 3

_FAILURE_MESSAGES = {
    _MAX_STEPS: "step budget exhausted",
    _UNDERFLOW: "step size underflow",
    _BLOWUP: "state magnitude exceeded blow-up guard",
}


class OdeKind(enum.IntEnum):
    LOTKA_VOLTERRA = 0
    LORENZ = 1
    FITZHUGH_NAGUMO = 2


PARAM_COUNT = {OdeKind.LOTKA_VOLTERRA: 4, OdeKind.LORENZ: 3, OdeKind.FITZHUGH_NAGUMO: 2}
STATE_DIM = {OdeKind.LOTKA_VOLTERRA: 2, OdeKind.LORENZ: 3, OdeKind.FITZHUGH_NAGUMO: 2}
FHN_DEFAULT_CONSTANTS = (3.0, 0.0)


@dataclass(frozen=True)
class OdeSystem:
    """An ODE right-hand side with its unknown parameters bound.

    ``params`` is ``[alpha, beta, delta, gamma]`` for Lotka-Volterra,
    ``[sigma, r, beta]`` for Lorenz and ``[theta0, theta1]`` for
    FitzHugh-Nagumo. ``fixed_constants`` is only read by FitzHugh-Nagumo
    (``[gamma, xi]``).
    """

    kind: OdeKind
    params: tuple[float, ...]
    fixed_constants: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", OdeKind(self.kind))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if len(self.params) != PARAM_COUNT[self.kind]:
            raise ValueError(
                f"{self.kind.name} takes {PARAM_COUNT[self.kind]} parameters, got {len(self.params)}"
            )
        consts = tuple(float(c) for c in self.fixed_constants)
        if self.kind == OdeKind.FITZHUGH_NAGUMO and not consts:
            consts = FHN_DEFAULT_CONSTANTS
        object.__setattr__(self, "fixed_constants", consts)

    @property
    def state_dim(self) -> int:
        return STATE_DIM[self.kind]


@dataclass(frozen=True)
class TimeGrid:
    t_start: float
    t_end: float
    points: int

    def __post_init__(self):
        if not self.t_start < self.t_end:
            raise ValueError("t_start must be < t_end")
        if self.points < 2:
            raise ValueError("a time grid needs at least 2 points")

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.points)


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_steps: int = 100_000
    initial_step: float | None = None  # None selects the step automatically

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (points, state_dim)


@njit(cache=True)
def _lotka_volterra_into(state, params, out):
    x, y = state[0], state[1]
    alpha, beta, delta, gamma = params[0], params[1], params[2], params[3]
    out[0] = alpha * x - beta * x * y
    out[1] = delta * x * y - gamma * y


@njit(cache=True)
def _lorenz_into(state, params, out):
    x, y, z = state[0], state[1], state[2]
    sigma, r, beta = params[0], params[1], params[2]
    out[0] = sigma * (y - x)
    out[1] = r * x - x * z - y
    out[2] = -beta * z + x * y


@njit(cache=True)
def _fitzhugh_nagumo_into(state, params, constants, out):
    u, v = state[0], state[1]
    theta0, theta1 = params[0], params[1]
    gamma, xi = constants[0], constants[1]
    out[0] = gamma * (u - u * u * u / 3.0 + v) + xi
    out[1] = -(u - theta0 + theta1 * v) / gamma


@njit(cache=True)
def _rhs_into(kind, y, p, c, out):
    if kind == 0:
        _lotka_volterra_into(y, p, out)
    elif kind == 1:
        _lorenz_into(y, p, out)
    else:
        _fitzhugh_nagumo_into(y, p, c, out)


def rhs_lotka_volterra(state, params) -> np.ndarray:
    out = np.empty(2)
    _lotka_volterra_into(np.asarray(state, dtype=float), np.asarray(params, dtype=float), out)
    return out


def rhs_lorenz(state, params) -> np.ndarray:
    out = np.empty(3)
    _lorenz_into(np.asarray(state, dtype=float), np.asarray(params, dtype=float), out)
    return out


def rhs_fitzhugh_nagumo(state, params, constants=FHN_DEFAULT_CONSTANTS) -> np.ndarray:
    out = np.empty(2)
    _fitzhugh_nagumo_into(
        np.asarray(state, dtype=float),
        np.asarray(params, dtype=float),
        np.asarray(constants, dtype=float),
        out,
    )
    return out


# Dormand-Prince 5(4) tableau
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
# fifth-order minus embedded fourth-order weights
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)


@njit(cache=True)
def _initial_step(kind, p, c, y0, f0, rtol, atol, span):
    # Hairer, Norsett & Wanner, Solving ODEs I, sec. II.4
    n = y0.shape[0]
    d0 = 0.0
    d1 = 0.0
    for i in range(n):
        sc = atol + rtol * abs(y0[i])
        d0 += (y0[i] / sc) ** 2
        d1 += (f0[i] / sc) ** 2
    d0 = np.sqrt(d0 / n)
    d1 = np.sqrt(d1 / n)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, span)
    y1 = np.empty(n)
    f1 = np.empty(n)
    for i in range(n):
        y1[i] = y0[i] + h0 * f0[i]
    _rhs_into(kind, y1, p, c, f1)
    d2 = 0.0
    for i in range(n):
        sc = atol + rtol * abs(y0[i])
        d2 += ((f1[i] - f0[i]) / sc) ** 2
    d2 = np.sqrt(d2 / n) / h0
    if not np.isfinite(d2):
        return h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, span)


@njit(cache=True)
def _dopri5(kind, p, c, y0, t_out, rtol, atol, max_steps, h_init):
    n = y0.shape[0]
    m = t_out.shape[0]
    out = np.empty((m, n))
    out[0, :] = y0
    y = y0.copy()
    y_new = np.empty(n)
    tmp = np.empty(n)
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    k5 = np.empty(n)
    k6 = np.empty(n)
    k7 = np.empty(n)
    t = t_out[0]
    _rhs_into(kind, y, p, c, k1)
    if h_init > 0.0:
        h = h_init
    else:
        h = _initial_step(kind, p, c, y, k1, rtol, atol, t_out[m - 1] - t)
    steps = 0
    for j in range(1, m):
        t_target = t_out[j]
        while t < t_target:
            if steps >= max_steps:
                return _MAX_STEPS, out
            if h < 16.0 * 2.220446049250313e-16 * max(abs(t), 1.0):
                return _UNDERFLOW, out
            capped = t + h >= t_target
            hs = t_target - t if capped else h
            for i in range(n):
                tmp[i] = y[i] + hs * (_A21 * k1[i])
            _rhs_into(kind, tmp, p, c, k2)
            for i in range(n):
                tmp[i] = y[i] + hs * (_A31 * k1[i] + _A32 * k2[i])
            _rhs_into(kind, tmp, p, c, k3)
            for i in range(n):
                tmp[i] = y[i] + hs * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
            _rhs_into(kind, tmp, p, c, k4)
            for i in range(n):
                tmp[i] = y[i] + hs * (_A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i])
            _rhs_into(kind, tmp, p, c, k5)
            for i in range(n):
                tmp[i] = y[i] + hs * (
                    _A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i] + _A64 * k4[i] + _A65 * k5[i]
                )
            _rhs_into(kind, tmp, p, c, k6)
            for i in range(n):
                y_new[i] = y[i] + hs * (
                    _B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i] + _B5 * k5[i] + _B6 * k6[i]
                )
            _rhs_into(kind, y_new, p, c, k7)
            steps += 1
            acc = 0.0
            for i in range(n):
                e = hs * (
                    _E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i] + _E5 * k5[i] + _E6 * k6[i] + _E7 * k7[i]
                )
                scale = atol + rtol * max(abs(y[i]), abs(y_new[i]))
                acc += (e / scale) ** 2
            err_norm = np.sqrt(acc / n)
            if not np.isfinite(err_norm):
                h = 0.2 * hs
                continue
            if err_norm <= 1.0:
                t = t_target if capped else t + hs
                for i in range(n):
                    y[i] = y_new[i]
                    k1[i] = k7[i]
                    if not abs(y[i]) <= BLOWUP_LIMIT:
                        return _BLOWUP, out
                if err_norm == 0.0:
                    factor = 10.0
                else:
                    factor = min(10.0, max(0.2, 0.9 * err_norm ** -0.2))
                # a step shortened to land on an output time does not shrink the next one
                h = max(h, hs * factor) if capped else hs * factor
            else:
                h = hs * max(0.2, 0.9 * err_norm ** -0.2)
        out[j, :] = y
    return _OK, out


def integrate(
    system: OdeSystem,
    init_state,
    grid: TimeGrid,
    config: IntegratorConfig | None = None,
) -> Trajectory:
    """Solve ``system`` from ``init_state`` and sample it on ``grid``.

    Raises SolverFailure on step-budget exhaustion, step-size underflow or
    any state component exceeding ``BLOWUP_LIMIT`` in magnitude.
    """
    config = config or IntegratorConfig()
    y0 = np.asarray(init_state, dtype=float)
    if y0.shape != (system.state_dim,):
        raise ValueError(f"initial state must have length {system.state_dim}")
    times = grid.times
    consts = np.asarray(system.fixed_constants or (0.0, 0.0), dtype=float)
    status, states = _dopri5(
        int(system.kind),
        np.asarray(system.params, dtype=float),
        consts,
        y0,
        times,
        config.rel_tol,
        config.abs_tol,
        config.max_steps,
        config.initial_step or 0.0,
    )
    if status != _OK:
        raise SolverFailure(_FAILURE_MESSAGES[status])
    return Trajectory(times=times, states=states)
