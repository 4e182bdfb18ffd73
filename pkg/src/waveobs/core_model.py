"""Fully discrete 1D wave equation as a linear state-space plant.

The field ``u`` on ``[0, l]`` with homogeneous Dirichlet ends is sampled on
the ``n_x`` interior nodes ``x_i = i * dx`` (``i = 1..n_x``, ``dx = l/(n_x+1)``).
The state is the stacked vector ``xi = [v; w]`` of field values and their
time derivative, and one step of the scheme reads::

    xi[j+1] = G @ xi[j] + B @ f + b
    z[j]    = H @ xi[j]

with ``G = [[dt*E + I, dt*I], [E, I]]``, ``B = [dt**2 * I; dt * I]`` and ``E``
the interior Dirichlet Laplacian scaled by ``s = c**2 * dt / dx**2``.
"""

from __future__ import annotations

import math
import warnings
from functools import cached_property
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import scipy.sparse as sp

from .exceptions import CFLWarning, DimensionError


@dataclass(frozen=True)
class PhysicalParams:
    c_squared: float
    length_l: float
    T_final: float

    def __post_init__(self):
        for name in ("c_squared", "length_l", "T_final"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")

    @property
    def c(self) -> float:
        return math.sqrt(self.c_squared)


@dataclass(frozen=True)
class Grid:
    dx: float
    dt: float
    n_x: int
    n_t: int

    def __post_init__(self):
        if self.n_x < 2:
            raise DimensionError(f"n_x must be >= 2, got {self.n_x}")
        if self.n_t < 2:
            raise DimensionError(f"n_t must be >= 2, got {self.n_t}")
        if not (self.dx > 0 and self.dt > 0):
            raise ValueError("dx and dt must be positive")

    @classmethod
    def from_nodes(cls, params: PhysicalParams, n_x: int, *, cfl: float | None = None,
                   dt: float | None = None) -> Grid:
        """Uniform grid with ``n_x`` interior nodes; ``dt`` given directly or via a CFL number."""
        if (cfl is None) == (dt is None):
            raise ValueError("give exactly one of cfl or dt")
        dx = params.length_l / (n_x + 1)
        if dt is None:
            dt = cfl * dx / params.c
        n_t = int(round(params.T_final / dt)) + 1
        return cls(dx=dx, dt=dt, n_x=n_x, n_t=n_t)

    @classmethod
    def from_spacing(cls, params: PhysicalParams, dx: float, dt: float) -> Grid:
        """Grid from explicit steps, e.g. ``dx = dt = 0.01`` on ``l = 2`` gives 199 interior nodes."""
        n_cells = int(round(params.length_l / dx))
        if not math.isclose(n_cells * dx, params.length_l, rel_tol=1e-9):
            raise ValueError(f"dx={dx} does not divide length {params.length_l}")
        n_t = int(round(params.T_final / dt)) + 1
        return cls(dx=dx, dt=dt, n_x=n_cells - 1, n_t=n_t)

    @property
    def nodes(self) -> np.ndarray:
        return self.dx * np.arange(1, self.n_x + 1)

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_t)

    def cfl(self, params: PhysicalParams) -> float:
        return params.c * self.dt / self.dx


@dataclass(frozen=True)
class MeasurementSelection:
    """Which interior nodes have their field value ``v`` sensed.

    ``kind='full'`` senses every node; ``kind='window'`` senses the contiguous
    block ``start .. start+count-1``.  ``count=None`` on a full selection is
    resolved against the grid at assembly time.
    """

    kind: Literal["full", "window"] = "full"
    start: int = 0
    count: int | None = None

    @classmethod
    def full(cls) -> MeasurementSelection:
        return cls("full")

    @classmethod
    def window(cls, start: int, count: int) -> MeasurementSelection:
        return cls("window", start, count)

    @classmethod
    def end(cls, n_x: int, fraction: float = 0.5) -> MeasurementSelection:
        count = max(1, int(round(fraction * n_x)))
        return cls("window", n_x - count, count)

    @classmethod
    def middle(cls, n_x: int, fraction: float = 0.5) -> MeasurementSelection:
        count = max(1, int(round(fraction * n_x)))
        return cls("window", (n_x - count) // 2, count)

    def indices(self, n_x: int) -> np.ndarray:
        if self.kind == "full":
            if self.count is not None and self.count != n_x:
                raise DimensionError(f"full selection has count {self.count} but grid has {n_x} nodes")
            return np.arange(n_x)
        if self.kind != "window":
            raise ValueError(f"unknown selection kind {self.kind!r}")
        if self.count is None or self.count < 1:
            raise DimensionError("window selection needs count >= 1")
        if self.start < 0 or self.start + self.count > n_x:
            raise DimensionError(
                f"window [{self.start}, {self.start + self.count}) exceeds the {n_x} interior nodes")
        return np.arange(self.start, self.start + self.count)


@dataclass(frozen=True, eq=False)
class DiscreteWaveSystem:
    """Assembled plant. ``H`` is kept as the list of measured node indices."""

    G: sp.csr_matrix
    B: sp.csr_matrix
    measured: np.ndarray
    b: np.ndarray
    grid: Grid
    params: PhysicalParams
    E: sp.csr_matrix = field(repr=False)

    @property
    def n_x(self) -> int:
        return self.grid.n_x

    @property
    def n_state(self) -> int:
        return 2 * self.grid.n_x

    @property
    def count_m(self) -> int:
        return len(self.measured)

    @cached_property
    def B_dense(self) -> np.ndarray:
        return self.B.toarray()

    @property
    def H(self) -> sp.csr_matrix:
        m = self.count_m
        return sp.csr_matrix((np.ones(m), (np.arange(m), self.measured)), shape=(m, self.n_state))


def build_laplacian(grid: Grid, params: PhysicalParams) -> sp.csr_matrix:
    """Tridiagonal ``E`` with ``-2s`` on the diagonal and ``s`` beside it, ``s = c^2 dt / dx^2``."""
    n = grid.n_x
    if n < 2:
        raise DimensionError(f"n_x must be >= 2, got {n}")
    s = params.c_squared * grid.dt / grid.dx**2
    off = np.full(n - 1, s)
    return sp.diags([off, np.full(n, -2.0 * s), off], [-1, 0, 1], format="csr")


def boundary_vector(grid: Grid, params: PhysicalParams, left: float = 0.0,
                    right: float = 0.0) -> np.ndarray:
    """Forcing from boundary traces ``u(0) = left`` and ``u(l) = right``."""
    n = grid.n_x
    s = params.c_squared * grid.dt / grid.dx**2
    b = np.zeros(2 * n)
    b[0], b[n - 1] = grid.dt * s * left, grid.dt * s * right
    b[n], b[2 * n - 1] = s * left, s * right
    return b


def assemble_system(grid: Grid, params: PhysicalParams,
                    sel: MeasurementSelection | None = None,
                    boundary: tuple[float, float] = (0.0, 0.0)) -> DiscreteWaveSystem:
    sel = sel or MeasurementSelection.full()
    measured = sel.indices(grid.n_x)
    cfl = grid.cfl(params)
    if cfl >= 1.0:
        warnings.warn(f"CFL number {cfl:.4f} >= 1: the wave update is not stable", CFLWarning,
                      stacklevel=2)
    E = build_laplacian(grid, params)
    I = sp.identity(grid.n_x, format="csr")
    dt = grid.dt
    G = sp.bmat([[dt * E + I, dt * I], [E, I]], format="csr")
    B = sp.vstack([dt**2 * I, dt * I], format="csr")
    b = boundary_vector(grid, params, *boundary)
    return DiscreteWaveSystem(G=G, B=B, measured=measured, b=b, grid=grid, params=params, E=E)


def _check_len(name, vec, n):
    vec = np.asarray(vec, dtype=float)
    if vec.shape != (n,):
        raise DimensionError(f"{name} must have shape ({n},), got {vec.shape}")
    return vec


def apply_step(sys: DiscreteWaveSystem, xi, f) -> np.ndarray:
    xi = _check_len("xi", xi, sys.n_state)
    f = _check_len("f", f, sys.n_x)
    return sys.G @ xi + sys.B @ f + sys.b


def measure(sys: DiscreteWaveSystem, xi) -> np.ndarray:
    xi = _check_len("xi", xi, sys.n_state)
    return xi[sys.measured]


def stack_state(v, w) -> np.ndarray:
    v, w = np.asarray(v, dtype=float), np.asarray(w, dtype=float)
    if v.shape != w.shape or v.ndim != 1:
        raise DimensionError(f"v and w must be equal-length vectors, got {v.shape} and {w.shape}")
    return np.concatenate([v, w])


def split_state(xi) -> tuple[np.ndarray, np.ndarray]:
    xi = np.asarray(xi)
    n = xi.shape[-1] // 2
    return xi[..., :n], xi[..., n:]


def discrete_energy(sys: DiscreteWaveSystem, xi) -> float:
    """``0.5 * |w|^2 + 0.5 * c^2 * |D v|^2`` with Dirichlet zeros padded at both ends."""
    v, w = split_state(_check_len("xi", xi, sys.n_state))
    dv = np.diff(np.concatenate([[0.0], v, [0.0]])) / sys.grid.dx
    return 0.5 * float(w @ w) + 0.5 * sys.params.c_squared * float(dv @ dv)


def modified_energy(sys: DiscreteWaveSystem, xi) -> float:
    """Quadratic form that the unforced update conserves exactly.

    The scheme is a symplectic Euler step (velocity first), so
    ``discrete_energy + 0.5 * v @ E @ w`` is invariant; the plain discrete
    energy oscillates around it by a factor of at most ``(1+cfl)/(1-cfl)``.
    """
    v, w = split_state(_check_len("xi", xi, sys.n_state))
    return discrete_energy(sys, xi) + 0.5 * float(v @ (sys.E @ w))
