"""Ground-truth trajectories and synthetic measurement streams."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

from .core_model import DiscreteWaveSystem, Grid, apply_step, measure, stack_state
from .exceptions import DimensionError, UnknownProfileError

SOURCE_PROFILES = ("zero", "sine", "gaussian", "piecewise_constant", "tabulated")


@dataclass(frozen=True)
class InitialConditions:
    r1: np.ndarray
    r2: np.ndarray

    @classmethod
    def zeros(cls, n_x: int) -> InitialConditions:
        return cls(np.zeros(n_x), np.zeros(n_x))

    def state(self, n_x: int) -> np.ndarray:
        if len(self.r1) != n_x or len(self.r2) != n_x:
            raise DimensionError(
                f"initial conditions have lengths {len(self.r1)}, {len(self.r2)}; grid has {n_x} nodes")
        return stack_state(self.r1, self.r2)


@dataclass(frozen=True)
class NoiseSpec:
    """Zero-mean white Gaussian noise on the states (process) and on the measurements.

    Draws come from numpy's PCG64 bit generator seeded with ``rng_seed``, so a
    run is reproducible across platforms for a given numpy major version.
    """

    sigma_state: float = 0.0
    sigma_meas: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.sigma_state < 0 or self.sigma_meas < 0:
            raise ValueError("noise standard deviations must be non-negative")


@dataclass(frozen=True, eq=False)
class SyntheticRun:
    states: np.ndarray        # (n_t, 2 n_x)
    measurements: np.ndarray  # (n_t, count_m)
    truth_source: np.ndarray
    noise: NoiseSpec | None
    times: np.ndarray


def simulate_forward(sys: DiscreteWaveSystem, ic: InitialConditions, f,
                     noise: NoiseSpec | None = None) -> SyntheticRun:
    n_t, n_x, m = sys.grid.n_t, sys.n_x, sys.count_m
    if n_t < 1:
        raise DimensionError(f"n_t must be positive, got {n_t}")
    f = np.asarray(f, dtype=float)
    if f.shape != (n_x,):
        raise DimensionError(f"source must have shape ({n_x},), got {f.shape}")

    if noise is not None:
        rng = np.random.Generator(np.random.PCG64(noise.rng_seed))
        state_noise = noise.sigma_state * rng.standard_normal((n_t - 1, 2 * n_x))
        meas_noise = noise.sigma_meas * rng.standard_normal((n_t, m))

    states = np.empty((n_t, 2 * n_x))
    states[0] = ic.state(n_x)
    for j in range(n_t - 1):
        states[j + 1] = apply_step(sys, states[j], f)
        if noise is not None:
            states[j + 1] += state_noise[j]

    measurements = states[:, sys.measured].copy()
    if noise is not None:
        measurements += meas_noise
    return SyntheticRun(states=states, measurements=measurements, truth_source=f.copy(),
                        noise=noise, times=sys.grid.times)


def sample_source(profile: Mapping | str, grid: Grid) -> np.ndarray:
    """Evaluate a named source profile at the interior nodes.

    ``profile`` is a mapping with a ``kind`` key (or just the kind name):

    - ``zero``
    - ``sine``: ``amplitude * sin(frequency * x)``
    - ``gaussian``: ``amplitude * exp(-(x - center)^2 / (2 width^2))``
    - ``piecewise_constant``: ``values[k]`` between successive ``breakpoints``
      (``len(values) == len(breakpoints) + 1``)
    - ``tabulated``: linear interpolation of ``(x, values)`` samples
    """
    if isinstance(profile, str):
        profile = {"kind": profile}
    kind = profile.get("kind")
    x = grid.nodes
    if kind == "zero":
        return np.zeros_like(x)
    if kind == "sine":
        return float(profile.get("amplitude", 1.0)) * np.sin(float(profile.get("frequency", 1.0)) * x)
    if kind == "gaussian":
        a = float(profile.get("amplitude", 1.0))
        c = float(profile["center"])
        s = float(profile["width"])
        return a * np.exp(-((x - c) ** 2) / (2 * s * s))
    if kind == "piecewise_constant":
        breaks = np.asarray(profile["breakpoints"], dtype=float)
        values = np.asarray(profile["values"], dtype=float)
        if len(values) != len(breaks) + 1:
            raise ValueError("piecewise_constant needs len(values) == len(breakpoints) + 1")
        return values[np.searchsorted(breaks, x, side="right")]
    if kind == "tabulated":
        xs = np.asarray(profile["x"], dtype=float)
        values = np.asarray(profile["values"], dtype=float)
        if xs.shape != values.shape or np.any(np.diff(xs) <= 0):
            raise ValueError("tabulated profile needs increasing x and matching values")
        return np.interp(x, xs, values)
    raise UnknownProfileError(f"unknown source profile {kind!r}; expected one of {SOURCE_PROFILES}")
