"""Adaptive observer for joint estimation of the wave state and its constant source.

Each spatial sample of the source is treated as an unknown constant
parameter.  With innovation ``e = z - H xi_hat`` one step is::

    Y_next  = (G - L H) Y + B
    f_next  = f_hat + sigma * Y.T @ H.T @ e          # uses Y before its update
    xi_next = G xi_hat + B f_hat + b + L e + Y_next @ (f_next - f_hat)

``Y`` (``2 n_x x n_x``) is ``B`` passed through the stable filter ``G - L H``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .core_model import DiscreteWaveSystem
from .exceptions import DimensionError


@dataclass(frozen=True, eq=False)
class ObserverConfig:
    L: np.ndarray
    sigma: float
    xi0_hat: np.ndarray | None = None
    f0_hat: np.ndarray | None = None
    upsilon0: np.ndarray | None = None

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    def validate(self, sys: DiscreteWaveSystem) -> None:
        n, nx, m = sys.n_state, sys.n_x, sys.count_m
        checks = [("L", self.L, (n, m)), ("xi0_hat", self.xi0_hat, (n,)),
                  ("f0_hat", self.f0_hat, (nx,)), ("upsilon0", self.upsilon0, (n, nx))]
        for name, arr, shape in checks:
            if arr is not None and np.shape(arr) != shape:
                raise DimensionError(f"{name} must have shape {shape}, got {np.shape(arr)}")

    def initial_state(self, sys: DiscreteWaveSystem) -> ObserverState:
        self.validate(sys)
        n, nx = sys.n_state, sys.n_x
        return ObserverState(
            xi_hat=np.zeros(n) if self.xi0_hat is None else np.array(self.xi0_hat, dtype=float),
            f_hat=np.zeros(nx) if self.f0_hat is None else np.array(self.f0_hat, dtype=float),
            upsilon=np.zeros((n, nx)) if self.upsilon0 is None else np.array(self.upsilon0, dtype=float),
            step_index=0,
        )


@dataclass(frozen=True, eq=False)
class ObserverState:
    xi_hat: np.ndarray
    f_hat: np.ndarray
    upsilon: np.ndarray
    step_index: int = 0


@dataclass(frozen=True, eq=False)
class EstimateTrajectory:
    xi_hat: np.ndarray            # (n_steps + 1, 2 n_x)
    f_hat: np.ndarray             # (n_steps + 1, n_x)
    innovation_norms: np.ndarray  # (n_steps,)
    final: ObserverState

    @property
    def terminal_f_hat(self) -> np.ndarray:
        return self.f_hat[-1]


@dataclass(frozen=True)
class AssumptionReport:
    max_filter_norm: float
    pe_beta: float
    pe_kappa: int
    satisfied: tuple[bool, bool]
    n_steps: int


def closed_loop(sys: DiscreteWaveSystem, L) -> sp.csr_matrix:
    """``G - L H`` as a sparse matrix; ``L H`` only touches the measured ``v`` columns."""
    L = np.asarray(L, dtype=float)
    if L.shape != (sys.n_state, sys.count_m):
        raise DimensionError(f"L must have shape {(sys.n_state, sys.count_m)}, got {L.shape}")
    return (sys.G - sp.csr_matrix(L) @ sys.H).tocsr()


def observer_step(sys: DiscreteWaveSystem, cfg: ObserverConfig, st: ObserverState, z_j,
                  *, A: sp.spmatrix | None = None) -> ObserverState:
    """Advance the observer by one measurement.

    ``A`` may carry a precomputed ``G - L H``; it is rebuilt from ``cfg.L``
    otherwise.
    """
    z_j = np.asarray(z_j, dtype=float)
    if z_j.shape != (sys.count_m,):
        raise DimensionError(f"measurement must have shape ({sys.count_m},), got {z_j.shape}")
    if st.xi_hat.shape != (sys.n_state,) or st.upsilon.shape != (sys.n_state, sys.n_x):
        raise DimensionError("observer state does not match the system dimensions")
    if A is None:
        A = closed_loop(sys, cfg.L)

    innovation = z_j - st.xi_hat[sys.measured]
    upsilon_next = A @ st.upsilon + sys.B_dense
    f_next = st.f_hat + cfg.sigma * (st.upsilon[sys.measured].T @ innovation)
    xi_next = (sys.G @ st.xi_hat + sys.B @ st.f_hat + sys.b + cfg.L @ innovation
               + upsilon_next @ (f_next - st.f_hat))
    return ObserverState(xi_hat=xi_next, f_hat=f_next, upsilon=upsilon_next,
                         step_index=st.step_index + 1)


def run_observer(sys: DiscreteWaveSystem, cfg: ObserverConfig, measurements) -> EstimateTrajectory:
    measurements = np.asarray(measurements, dtype=float)
    if measurements.ndim != 2 or measurements.shape[1] != sys.count_m:
        raise DimensionError(
            f"measurements must have shape (n_steps, {sys.count_m}), got {measurements.shape}")
    n_steps = measurements.shape[0]
    st = cfg.initial_state(sys)
    A = closed_loop(sys, cfg.L)

    xi_hat = np.empty((n_steps + 1, sys.n_state))
    f_hat = np.empty((n_steps + 1, sys.n_x))
    innov = np.empty(n_steps)
    xi_hat[0], f_hat[0] = st.xi_hat, st.f_hat
    for j in range(n_steps):
        innov[j] = np.linalg.norm(measurements[j] - st.xi_hat[sys.measured])
        st = observer_step(sys, cfg, st, measurements[j], A=A)
        xi_hat[j + 1], f_hat[j + 1] = st.xi_hat, st.f_hat
    return EstimateTrajectory(xi_hat=xi_hat, f_hat=f_hat, innovation_norms=innov, final=st)


def _filter_sequence(sys, L, n_steps, upsilon0=None, tol=1e-14):
    """Yield ``(j, H @ Y_j, converged)`` for ``j = 0..n_steps-1``.

    Once ``Y`` stops changing (relative step below ``tol``) the remaining
    iterates are the fixed point, and ``converged`` is True from then on.
    """
    A = closed_loop(sys, L)
    Y = np.zeros((sys.n_state, sys.n_x)) if upsilon0 is None else np.array(upsilon0, dtype=float)
    converged = False
    for j in range(n_steps):
        yield j, Y[sys.measured], converged
        if not converged:
            Y_next = A @ Y + sys.B_dense
            delta = np.linalg.norm(Y_next - Y)
            converged = delta <= tol * max(np.linalg.norm(Y_next), 1e-300)
            Y = Y_next


def max_filter_norm(sys: DiscreteWaveSystem, L, n_steps: int, upsilon0=None) -> float:
    """``max_j ||H Y_j||_2`` over the first ``n_steps`` filter iterates."""
    best = 0.0
    for _, HY, converged in _filter_sequence(sys, L, n_steps, upsilon0):
        best = max(best, np.linalg.norm(HY, 2))
        if converged:
            break
    return best


def auto_sigma(sys: DiscreteWaveSystem, L, n_steps: int, margin: float = 0.9,
               upsilon0=None) -> float:
    """Largest adaptation gain keeping ``||sqrt(sigma) H Y_j||_2 <= margin`` for all steps.

    The norm scales with ``sqrt(sigma)``, so the bound is met exactly by
    ``sigma = (margin / max_j ||H Y_j||)^2``.
    """
    if not 0 < margin <= 1:
        raise ValueError(f"margin must lie in (0, 1], got {margin}")
    peak = max_filter_norm(sys, L, n_steps, upsilon0)
    if peak == 0.0:
        raise ValueError("the filtered input H Y is identically zero; no sigma can excite the source update")
    return (margin / peak) ** 2


def check_assumption(sys: DiscreteWaveSystem, cfg: ObserverConfig, n_steps: int,
                     kappa: int) -> AssumptionReport:
    """Evaluate the two gain conditions on the propagated filter sequence.

    Condition 1: ``max_j ||sqrt(sigma) H Y_j||_2 <= 1``.
    Condition 2: every window of ``kappa`` consecutive steps has
    ``(1/kappa) sum sigma Y_i^T H^T H Y_i >= beta I``; ``pe_beta`` is the
    smallest window eigenvalue, with eigenvalues below the round-off level
    ``n_x * eps * lambda_max`` counted as zero.
    """
    if not (isinstance(kappa, (int, np.integer)) and kappa >= 1 and n_steps >= kappa):
        raise ValueError(f"need n_steps >= kappa >= 1, got n_steps={n_steps}, kappa={kappa}")
    cfg.validate(sys)
    nx = sys.n_x
    eps = np.finfo(float).eps

    def window_min_eig(S):
        lam = np.linalg.eigvalsh(S / kappa)
        floor = nx * eps * max(lam[-1], 0.0)
        return 0.0 if lam[0] <= floor else float(lam[0])

    window = []
    running = np.zeros((nx, nx))
    peak = 0.0
    beta = np.inf
    steady_windows = 0
    for j, HY, converged in _filter_sequence(sys, cfg.L, n_steps, cfg.upsilon0):
        peak = max(peak, np.sqrt(cfg.sigma) * np.linalg.norm(HY, 2))
        gram = cfg.sigma * (HY.T @ HY)
        window.append(gram)
        running += gram
        if len(window) > kappa:
            running -= window.pop(0)
        if len(window) == kappa:
            beta = min(beta, window_min_eig(running))
            # a window made only of fixed-point iterates repeats forever
            steady_windows = steady_windows + 1 if converged else 0
            if steady_windows >= kappa:
                break
    pe_beta = max(float(beta), 0.0)
    return AssumptionReport(max_filter_norm=float(peak), pe_beta=pe_beta, pe_kappa=int(kappa),
                            satisfied=(bool(peak <= 1.0), bool(pe_beta > 0.0)), n_steps=n_steps)
