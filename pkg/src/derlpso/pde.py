"""Finite-difference forward solvers for the three PDE benchmarks.

Parabolic solvers return fields shaped ``(t_points, x_points)``; the
Helmholtz solver returns ``(x_points, y_points)`` with ``u[i, j] = u(x_i, y_j)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from numba import njit

from .errors import SingularSystem, SolverFailure

PULSE_CENTER = 0.3
PULSE_WIDTH = 100.0
SINGULAR_RTOL = 1e-8


@dataclass(frozen=True)
class Grid1D:
    x_points: int
    t_points: int

    def __post_init__(self):
        if self.x_points < 3:
            raise ValueError("x_points must be >= 3")
        if self.t_points < 2:
            raise ValueError("t_points must be >= 2")

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.x_points)

    @property
    def t(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.t_points)

    @property
    def dx(self) -> float:
        return 1.0 / (self.x_points - 1)

    @property
    def dt(self) -> float:
        return 1.0 / (self.t_points - 1)


@dataclass(frozen=True)
class Grid2D:
    x_points: int
    y_points: int

    def __post_init__(self):
        if self.x_points < 3 or self.y_points < 3:
            raise ValueError("x_points and y_points must be >= 3")

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.x_points)

    @property
    def y(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.y_points)


@njit(cache=True)
def solve_tridiagonal(lower, diag, upper, rhs):
    """Thomas algorithm. ``lower[0]`` and ``upper[-1]`` are ignored."""
    n = diag.shape[0]
    c = np.empty(n)
    d = np.empty(n)
    c[0] = upper[0] / diag[0]
    d[0] = rhs[0] / diag[0]
    for i in range(1, n):
        denom = diag[i] - lower[i] * c[i - 1]
        c[i] = upper[i] / denom
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom
    x = np.empty(n)
    x[n - 1] = d[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x


@njit(cache=True)
def _march(u0, lower, diag, upper, explicit_weight, t_points):
    # interior-only time loop with zero Dirichlet data; explicit_weight couples
    # neighbours on the right-hand side (0 for backward Euler)
    nx = u0.shape[0]
    m = nx - 2
    field = np.zeros((t_points, nx))
    field[0, :] = u0
    u = u0[1:-1].copy()
    rhs = np.empty(m)
    for n in range(1, t_points):
        for i in range(m):
            left = u[i - 1] if i > 0 else 0.0
            right = u[i + 1] if i < m - 1 else 0.0
            rhs[i] = u[i] + explicit_weight * (left - 2.0 * u[i] + right)
        u = solve_tridiagonal(lower, diag, upper, rhs)
        field[n, 1:-1] = u
    return field


def _check_finite(field: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(field)):
        raise SolverFailure("non-finite values in PDE solution")
    return field


def heat_initial(x: np.ndarray) -> np.ndarray:
    return np.sin(np.pi * x)


def heat_exact(alpha: float, x: np.ndarray, t: np.ndarray) -> np.ndarray:
    return np.exp(-alpha * np.pi**2 * t)[:, None] * np.sin(np.pi * x)[None, :]


def solve_heat_1d(alpha: float, grid: Grid1D) -> np.ndarray:
    """Crank-Nicolson solution of ``u_t = alpha u_xx`` on [0,1]x[0,1].

    Initial data ``sin(pi x)``, zero Dirichlet boundaries.
    """
    if not alpha > 0:
        raise SolverFailure(f"thermal diffusivity must be positive, got {alpha}")
    m = grid.x_points - 2
    r = alpha * grid.dt / grid.dx**2
    lower = np.full(m, -0.5 * r)
    upper = np.full(m, -0.5 * r)
    diag = np.full(m, 1.0 + r)
    field = _march(heat_initial(grid.x), lower, diag, upper, 0.5 * r, grid.t_points)
    return _check_finite(field)


def pulse_initial(x: np.ndarray) -> np.ndarray:
    return np.exp(-PULSE_WIDTH * (x - PULSE_CENTER) ** 2)


def solve_convection_diffusion_1d(D: float, v: float, grid: Grid1D) -> np.ndarray:
    """Backward-Euler / upwind solution of ``u_t + v u_x = D u_xx``.

    Initial data is a Gaussian pulse centred at 0.3; boundaries are held at
    zero after the initial row.
    """
    if not D > 0:
        raise SolverFailure(f"diffusion coefficient must be positive, got {D}")
    if not math.isfinite(v):
        raise SolverFailure("non-finite convection coefficient")
    m = grid.x_points - 2
    a = D * grid.dt / grid.dx**2
    c = abs(v) * grid.dt / grid.dx
    diag = np.full(m, 1.0 + 2.0 * a + c)
    if v >= 0:
        lower = np.full(m, -(a + c))
        upper = np.full(m, -a)
    else:
        lower = np.full(m, -a)
        upper = np.full(m, -(a + c))
    field = _march(pulse_initial(grid.x), lower, diag, upper, 0.0, grid.t_points)
    return _check_finite(field)


def wavenumber(lam: float) -> float:
    return 2.0 * math.pi / lam


def helmholtz_exact(k: float, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    s = k / math.sqrt(2.0)
    return np.sin(s * x)[:, None] * np.sin(s * y)[None, :]


def laplacian_eigenvalues(grid: Grid2D) -> np.ndarray:
    """Eigenvalues of the negative 5-point Laplacian with zero Dirichlet data."""
    hx = 1.0 / (grid.x_points - 1)
    hy = 1.0 / (grid.y_points - 1)
    p = np.arange(1, grid.x_points - 1)
    q = np.arange(1, grid.y_points - 1)
    mx = 4.0 / hx**2 * np.sin(p * np.pi * hx / 2) ** 2
    my = 4.0 / hy**2 * np.sin(q * np.pi * hy / 2) ** 2
    return (mx[:, None] + my[None, :]).ravel()


@lru_cache(maxsize=16)
def _laplacian(grid: Grid2D) -> tuple[sp.csc_matrix, np.ndarray]:
    nx, ny = grid.x_points - 2, grid.y_points - 2
    hx = 1.0 / (grid.x_points - 1)
    hy = 1.0 / (grid.y_points - 1)

    def second_diff(n, h):
        return sp.diags([np.ones(n - 1), -2.0 * np.ones(n), np.ones(n - 1)], [-1, 0, 1]) / h**2

    lap = sp.kron(second_diff(nx, hx), sp.identity(ny)) + sp.kron(sp.identity(nx), second_diff(ny, hy))
    lap = sp.csc_matrix(lap)
    lap.sort_indices()
    # position of each diagonal entry inside lap.data, for cheap k^2 shifts
    rows = lap.indices
    cols = np.repeat(np.arange(lap.shape[1]), np.diff(lap.indptr))
    diag_pos = np.flatnonzero(rows == cols)
    return lap, diag_pos


def helmholtz_operator(k: float, grid: Grid2D) -> sp.csc_matrix:
    """Interior 5-point discretization of ``u_xx + u_yy + k^2 u``, x-major ordering."""
    lap, diag_pos = _laplacian(grid)
    data = lap.data.copy()
    data[diag_pos] += k**2
    return sp.csc_matrix((data, lap.indices, lap.indptr), shape=lap.shape)


def helmholtz_boundary_rhs(u_full: np.ndarray, grid: Grid2D) -> np.ndarray:
    """Move known boundary values of ``u_full`` to the right-hand side."""
    hx = 1.0 / (grid.x_points - 1)
    hy = 1.0 / (grid.y_points - 1)
    rhs = np.zeros((grid.x_points - 2, grid.y_points - 2))
    rhs[0, :] -= u_full[0, 1:-1] / hx**2
    rhs[-1, :] -= u_full[-1, 1:-1] / hx**2
    rhs[:, 0] -= u_full[1:-1, 0] / hy**2
    rhs[:, -1] -= u_full[1:-1, -1] / hy**2
    return rhs.ravel()


def solve_helmholtz_2d(lam: float, grid: Grid2D) -> np.ndarray:
    """5-point solution of ``u_xx + u_yy + k^2 u = 0`` with ``k = 2 pi / lam``.

    Dirichlet data come from ``sin(kx/sqrt2) sin(ky/sqrt2)``, an exact
    solution of the continuous problem. Raises SingularSystem when ``k^2``
    sits within relative 1e-8 of a discrete Laplacian eigenvalue.
    """
    if not lam > 0 or not math.isfinite(lam):
        raise SolverFailure(f"wavelength must be positive and finite, got {lam}")
    k = wavenumber(lam)
    eig = laplacian_eigenvalues(grid)
    if np.min(np.abs(k**2 - eig) / eig) < SINGULAR_RTOL:
        raise SingularSystem(f"k^2={k**2:.6g} hits a discrete Laplacian eigenvalue")
    boundary = helmholtz_exact(k, grid.x, grid.y)
    A = helmholtz_operator(k, grid)
    interior = spla.spsolve(A, helmholtz_boundary_rhs(boundary, grid))
    field = boundary.copy()
    field[1:-1, 1:-1] = interior.reshape(grid.x_points - 2, grid.y_points - 2)
    return _check_finite(field)
