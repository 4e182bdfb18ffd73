"""Observability diagnostics and estimation-error metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .core_model import Grid, MeasurementSelection, PhysicalParams, DiscreteWaveSystem, assemble_system
from .exceptions import DimensionError

DEFAULT_STATE_CAP = 200


@dataclass(frozen=True, eq=False)
class ObservabilityReport:
    n_states: int
    m: int
    rank_W: int
    cond_W: float
    singular_values: np.ndarray


@dataclass(frozen=True, eq=False)
class ErrorMetrics:
    source_rmse: float
    state_error_norms: np.ndarray
    terminal_state_error: float


def observability_from(G, H, n_blocks: int | None = None) -> np.ndarray:
    """Stack ``H, H G, ..., H G^(n-1)``, advancing one block at a time."""
    n = G.shape[0]
    if G.shape != (n, n) or H.shape[1] != n:
        raise DimensionError(f"incompatible G {G.shape} and H {H.shape}")
    n_blocks = n if n_blocks is None else n_blocks
    Hk = H.toarray() if sp.issparse(H) else np.asarray(H, dtype=float)
    GT = G.T.tocsr() if sp.issparse(G) else np.asarray(G, dtype=float).T
    m = Hk.shape[0]
    W = np.empty((n_blocks * m, n))
    for k in range(n_blocks):
        W[k * m:(k + 1) * m] = Hk
        Hk = (GT @ Hk.T).T
    return W


def observability_matrix(sys: DiscreteWaveSystem, max_states: int = DEFAULT_STATE_CAP) -> np.ndarray:
    if sys.n_state > max_states:
        raise ValueError(
            f"observability matrix for {sys.n_state} states exceeds the cap of {max_states}; "
            "raise max_states explicitly to build it")
    return observability_from(sys.G, sys.H)


def conditioning_of(W: np.ndarray) -> ObservabilityReport:
    """Rank and condition number from the singular values of ``W``.

    Singular values at or below ``max(W.shape) * eps * s_max`` count as zero;
    a rank-deficient ``W`` has infinite condition number.
    """
    s = np.linalg.svd(W, compute_uv=False)
    n = W.shape[1]
    if s.size == 0 or s[0] == 0.0:
        return ObservabilityReport(n, 0, 0, np.inf, s)
    tol = max(W.shape) * np.finfo(float).eps * s[0]
    rank = int(np.sum(s > tol))
    cond = float(s[0] / s[-1]) if rank == n else np.inf
    return ObservabilityReport(n_states=n, m=0, rank_W=rank, cond_W=cond, singular_values=s)


def conditioning_report(sys: DiscreteWaveSystem, max_states: int = DEFAULT_STATE_CAP) -> ObservabilityReport:
    rep = conditioning_of(observability_matrix(sys, max_states))
    return ObservabilityReport(n_states=sys.n_state, m=sys.count_m, rank_W=rep.rank_W,
                               cond_W=rep.cond_W, singular_values=rep.singular_values)


def end_anchored_windows(n_x: int, sizes=None) -> list[MeasurementSelection]:
    """Nested contiguous windows ending at the last interior node."""
    sizes = range(1, n_x + 1) if sizes is None else sizes
    return [MeasurementSelection.window(n_x - m, m) for m in sizes]


def measurement_sweep(grid: Grid, params: PhysicalParams, placements,
                      max_states: int = DEFAULT_STATE_CAP) -> list[ObservabilityReport]:
    rows = []
    for i, sel in enumerate(placements):
        try:
            sys = assemble_system(grid, params, sel)
        except (DimensionError, ValueError) as exc:
            raise DimensionError(f"placement #{i} ({sel}) is invalid: {exc}") from exc
        rows.append(conditioning_report(sys, max_states))
    return rows


def source_rmse(f_true, f_hat) -> float:
    """Root of the mean squared pointwise source error."""
    f_true, f_hat = np.asarray(f_true, dtype=float), np.asarray(f_hat, dtype=float)
    if f_true.shape != f_hat.shape:
        raise DimensionError(f"source lengths differ: {f_true.shape} vs {f_hat.shape}")
    return float(np.sqrt(np.mean((f_true - f_hat) ** 2)))


def state_error_series(truth, est) -> np.ndarray:
    truth, est = np.asarray(truth, dtype=float), np.asarray(est, dtype=float)
    if truth.shape != est.shape:
        raise DimensionError(f"trajectory shapes differ: {truth.shape} vs {est.shape}")
    return np.linalg.norm(truth - est, axis=1)


def error_metrics(f_true, f_hat, truth_states, est_states) -> ErrorMetrics:
    norms = state_error_series(truth_states, est_states)
    return ErrorMetrics(source_rmse=source_rmse(f_true, f_hat), state_error_norms=norms,
                        terminal_state_error=float(norms[-1]))
