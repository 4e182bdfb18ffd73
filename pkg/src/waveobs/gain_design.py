"""Sparse observer gains ``L`` that make ``G - L H`` a contraction.

Classic pole placement is not attempted: ``G`` is large and the output is
narrow.  A gain is instead drawn from a small parameterised template that
shares the sparsity of ``G``, and the template scalars are searched to
minimise the spectral radius of ``G - L H``.

Templates (``k`` a measured node, ``c`` its output column, ``S`` the node
selection, ``I`` the identity):

``diagonal``
    ``L[k, c] = p1`` and ``L[n_x + k, c] = p2``.  One injection into the field
    row and one into the velocity row of each measured node.
``two_block``
    ``L = [(dt E + p1 I) S^T; (E + p2 I) S^T]``, i.e. the first block column of
    ``G`` restricted to measured nodes plus two diagonal shifts.  Under full
    sensing every Laplacian mode then sees the same 2x2 error dynamics
    ``[[1 - p1, dt], [-p2, 1]]``, which is nilpotent at ``p1 = 2, p2 = 1/dt``.
    Under partial sensing it decouples unsensed nodes and cannot stabilise them.
``explicit``
    A fixed matrix, e.g. loaded from a CSV fixture.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import minimize

from .core_model import DiscreteWaveSystem
from .exceptions import DimensionError, EmptyTemplateError

DENSE_EIG_LIMIT = 1200
UNIT_MARGIN = 1e-8
TEMPLATE_KINDS = ("diagonal", "two_block", "explicit")


def spectral_radius(M) -> float:
    """Largest eigenvalue modulus; dense QR below 1200 rows, ARPACK above."""
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"spectral radius needs a square matrix, got shape {M.shape}")
    n = M.shape[0]
    if n == 0:
        return 0.0
    if n <= DENSE_EIG_LIMIT:
        dense = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)
        return float(np.max(np.abs(np.linalg.eigvals(dense))))
    vals = spla.eigs(sp.csr_matrix(M) if sp.issparse(M) else M, k=1, which="LM",
                     return_eigenvectors=False, maxiter=20 * n, tol=1e-12)
    return float(np.abs(vals).max())


@dataclass(frozen=True, eq=False)
class GainTemplate:
    parameterization: str
    pattern: frozenset
    shape: tuple[int, int]
    _basis: tuple = field(repr=False, default=())
    values: np.ndarray | None = field(repr=False, default=None)

    @property
    def n_params(self) -> int:
        return len(self._basis)

    def build(self, params=()) -> np.ndarray:
        if self.parameterization == "explicit":
            return np.array(self.values, dtype=float)
        const, *scaled = self._basis
        L = const.copy()
        for p, basis in zip(params, scaled):
            L += p * basis
        return L

    @classmethod
    def diagonal(cls, sys: DiscreteWaveSystem) -> GainTemplate:
        n, nx, m = sys.n_state, sys.n_x, sys.count_m
        cols = np.arange(m)
        v_part, w_part = np.zeros((n, m)), np.zeros((n, m))
        v_part[sys.measured, cols] = 1.0
        w_part[nx + sys.measured, cols] = 1.0
        pattern = frozenset(zip(*np.nonzero(v_part + w_part)))
        return cls("diagonal", pattern, (n, m), (np.zeros((n, m)), v_part, w_part))

    @classmethod
    def two_block(cls, sys: DiscreteWaveSystem) -> GainTemplate:
        n, nx, m = sys.n_state, sys.n_x, sys.count_m
        E = sys.E.toarray()
        const = np.vstack([sys.grid.dt * E[:, sys.measured], E[:, sys.measured]])
        diag = cls.diagonal(sys)
        _, v_part, w_part = diag._basis
        pattern = frozenset(zip(*np.nonzero(np.abs(const) + v_part + w_part)))
        return cls("two_block", pattern, (n, m), (const, v_part, w_part))

    @classmethod
    def explicit(cls, L) -> GainTemplate:
        L = np.asarray(L, dtype=float)
        return cls("explicit", frozenset(zip(*np.nonzero(L))), L.shape, values=L)

    @classmethod
    def named(cls, kind: str, sys: DiscreteWaveSystem) -> GainTemplate:
        if kind == "diagonal":
            return cls.diagonal(sys)
        if kind == "two_block":
            return cls.two_block(sys)
        raise ValueError(f"unknown template {kind!r}; expected one of {TEMPLATE_KINDS}")


@dataclass(frozen=True, eq=False)
class GainDesignResult:
    L: np.ndarray
    spectral_radius: float
    params_used: tuple[float, ...]
    template: str
    stable: bool
    meets_target: bool


def validate_gain(sys: DiscreteWaveSystem, L, margin: float = UNIT_MARGIN) -> tuple[float, bool]:
    """Spectral radius of ``G - L H`` and whether it sits inside the unit circle by ``margin``."""
    L = np.asarray(L, dtype=float)
    if L.shape != (sys.n_state, sys.count_m):
        raise DimensionError(f"L must have shape {(sys.n_state, sys.count_m)}, got {L.shape}")
    radius = spectral_radius(sys.G - sp.csr_matrix(L) @ sys.H)
    return radius, radius < 1.0 - margin


def design_gain(sys: DiscreteWaveSystem, template: GainTemplate | str, target_radius: float = 0.99,
                grid_size: int = 11, refine: bool = True) -> GainDesignResult:
    """Search the template scalars for the smallest spectral radius of ``G - L H``.

    A coarse ``grid_size x grid_size`` scan over ``p1 in [0, 2.5]`` and
    ``p2 * dt in [0, 2]`` is followed by a Nelder-Mead refinement from the
    best grid point.  An unstable best result is returned flagged, not raised.
    """
    if not 0 < target_radius < 1:
        raise ValueError(f"target_radius must lie in (0, 1), got {target_radius}")
    if isinstance(template, str):
        template = GainTemplate.named(template, sys)
    if template.shape != (sys.n_state, sys.count_m):
        raise DimensionError(f"template shape {template.shape} does not match the system")
    if not template.pattern and sys.count_m > 0:
        raise EmptyTemplateError("gain template allows no nonzero entries")

    H = sys.H
    G = sys.G

    def radius_of(p):
        return spectral_radius(G - sp.csr_matrix(template.build(p)) @ H)

    if template.n_params == 0 or sys.count_m == 0:
        params = ()
    else:
        dt = sys.grid.dt
        best = None
        for p1 in np.linspace(0.0, 2.5, grid_size):
            for q in np.linspace(0.0, 2.0, grid_size):
                p = (p1, q / dt)
                r = radius_of(p)
                if best is None or r < best[0]:
                    best = (r, p)
        params = best[1]
        if refine:
            # optimise in (p1, p2*dt) so both coordinates are O(1)
            res = minimize(lambda u: radius_of((u[0], u[1] / dt)), [params[0], params[1] * dt],
                           method="Nelder-Mead",
                           options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 400})
            if res.fun < best[0]:
                params = (res.x[0], res.x[1] / dt)
        params = tuple(float(p) for p in params)

    L = template.build(params) if sys.count_m else np.zeros((sys.n_state, 0))
    radius, stable = validate_gain(sys, L)
    return GainDesignResult(L=L, spectral_radius=radius, params_used=params,
                            template=template.parameterization, stable=stable,
                            meets_target=radius <= target_radius)


def design_auto(sys: DiscreteWaveSystem, target_radius: float = 0.99, **kwargs) -> GainDesignResult:
    """Run every built-in template and keep the smallest radius."""
    results = [design_gain(sys, kind, target_radius, **kwargs) for kind in ("two_block", "diagonal")]
    return min(results, key=lambda r: r.spectral_radius)


def save_gain(path, L) -> None:
    """Write the nonzeros of ``L`` as ``row,col,value`` triplets."""
    L = np.asarray(L, dtype=float)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["row", "col", "value"])
        for r, c in zip(*np.nonzero(L)):
            writer.writerow([int(r), int(c), f"{L[r, c]:.17g}"])


def load_gain(path, shape: tuple[int, int]) -> np.ndarray:
    L = np.zeros(shape)
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["row", "col", "value"]:
            raise ValueError(f"{path}: expected header row,col,value, got {header}")
        for lineno, row in enumerate(reader, start=2):
            r, c, v = int(row[0]), int(row[1]), float(row[2])
            if not (0 <= r < shape[0] and 0 <= c < shape[1]):
                raise DimensionError(f"{path}:{lineno}: entry ({r}, {c}) outside gain shape {shape}")
            L[r, c] = v
    return L
