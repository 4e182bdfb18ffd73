"""Simulate -> design gain -> estimate -> analyse, driven by an ExperimentConfig."""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import gain_design
from .analysis import error_metrics
from .config import ExperimentConfig, config_to_dict
from .core_model import DiscreteWaveSystem, assemble_system
from .exceptions import RecordError
from .observer import ObserverConfig, auto_sigma, check_assumption, run_observer
from .simulate import InitialConditions, NoiseSpec, SyntheticRun, sample_source, simulate_forward

RECORD_KEYS = ("config", "n_x", "n_t", "count_m", "source_rmse", "terminal_state_error",
               "sigma", "gain", "assumption", "f_true", "f_hat", "innovation_norms",
               "state_error_norms", "timing_s")


def build_system(cfg: ExperimentConfig) -> DiscreteWaveSystem:
    grid = cfg.make_grid()
    return assemble_system(grid, cfg.physical_params(), cfg.selection(grid.n_x))


def synthesize(cfg: ExperimentConfig, sys: DiscreteWaveSystem | None = None) -> tuple[DiscreteWaveSystem, SyntheticRun]:
    sys = sys or build_system(cfg)
    f = sample_source(cfg.source, sys.grid)
    ic = InitialConditions(sample_source(cfg.initial_conditions.r1, sys.grid),
                           sample_source(cfg.initial_conditions.r2, sys.grid))
    noise = None
    if cfg.noise is not None:
        noise = NoiseSpec(cfg.noise.sigma_state, cfg.noise.sigma_meas, cfg.noise.seed)
    return sys, simulate_forward(sys, ic, f, noise)


def choose_gain(cfg: ExperimentConfig, sys: DiscreteWaveSystem) -> gain_design.GainDesignResult:
    g = cfg.gain
    if g.source == "file":
        L = gain_design.load_gain(g.path, (sys.n_state, sys.count_m))
        return gain_design.design_gain(sys, gain_design.GainTemplate.explicit(L), g.target_radius)
    if g.template == "auto":
        return gain_design.design_auto(sys, g.target_radius)
    return gain_design.design_gain(sys, g.template, g.target_radius)


@dataclass
class RunRecord:
    config: dict
    n_x: int
    n_t: int
    count_m: int
    source_rmse: float
    terminal_state_error: float
    sigma: float
    gain: dict
    assumption: dict
    f_true: list
    f_hat: list
    innovation_norms: list
    state_error_norms: list
    timing_s: float
    extras: dict = field(default_factory=dict, repr=False)

    def to_json(self) -> str:
        data = asdict(self)
        data.pop("extras")
        return json.dumps(data, indent=1)

    @classmethod
    def from_json(cls, text: str) -> RunRecord:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            offset = len(text[:exc.pos].encode("utf-8"))
            raise RecordError(f"run record is not valid JSON: {exc.msg}", offset=offset) from exc
        if not isinstance(data, dict):
            raise RecordError("run record must be a JSON object", offset=0)
        missing = [k for k in RECORD_KEYS if k not in data]
        if missing:
            raise RecordError(f"run record is missing fields: {', '.join(missing)}")
        return cls(**{k: data[k] for k in RECORD_KEYS})


def run_estimate(cfg: ExperimentConfig, sys: DiscreteWaveSystem | None = None,
                 gain: gain_design.GainDesignResult | None = None) -> RunRecord:
    """Full pipeline for one configuration.

    The trajectories (truth, estimates) ride along in ``record.extras`` for
    callers that want to write them out; they are not serialised.
    """
    t0 = time.perf_counter()
    sys, run = synthesize(cfg, sys)
    gain = gain or choose_gain(cfg, sys)
    n_t = sys.grid.n_t

    obs = cfg.observer
    if obs.sigma == "auto":
        sigma = auto_sigma(sys, gain.L, n_t + 1, obs.sigma_margin)
    else:
        sigma = float(obs.sigma)
    init = {}
    if obs.init == "truth":
        init = {"xi0_hat": run.states[0].copy(), "f0_hat": run.truth_source.copy()}
    ocfg = ObserverConfig(L=gain.L, sigma=sigma, **init)

    traj = run_observer(sys, ocfg, run.measurements)
    report = check_assumption(sys, ocfg, n_t + 1, min(obs.kappa, n_t + 1))
    metrics = error_metrics(run.truth_source, traj.terminal_f_hat, run.states, traj.xi_hat[:n_t])

    return RunRecord(
        config=config_to_dict(cfg), n_x=sys.n_x, n_t=n_t, count_m=sys.count_m,
        source_rmse=metrics.source_rmse, terminal_state_error=metrics.terminal_state_error,
        sigma=sigma,
        gain={"template": gain.template, "params": list(gain.params_used),
              "spectral_radius": gain.spectral_radius, "stable": bool(gain.stable)},
        assumption={"max_filter_norm": report.max_filter_norm, "pe_beta": report.pe_beta,
                    "pe_kappa": report.pe_kappa, "condition_1": report.satisfied[0],
                    "condition_2": report.satisfied[1]},
        f_true=run.truth_source.tolist(), f_hat=traj.terminal_f_hat.tolist(),
        innovation_norms=traj.innovation_norms.tolist(),
        state_error_norms=metrics.state_error_norms.tolist(),
        timing_s=time.perf_counter() - t0,
        extras={"system": sys, "run": run, "trajectory": traj, "gain": gain},
    )


def summarize(record: RunRecord) -> str:
    cfg = record.config
    gain, asm = record.gain, record.assumption
    lines = []
    if not gain["stable"]:
        lines += ["WARNING: observer gain is NOT stable "
                  f"(spectral radius of G - LH = {gain['spectral_radius']:.6g} >= 1); "
                  "the estimates below are not trustworthy.", ""]
    meas = cfg["measurement"]
    noise = cfg.get("noise")
    lines += [
        "waveobs estimation run",
        f"  grid            n_x={record.n_x}  n_t={record.n_t}",
        f"  measurements    {meas['kind']} (m={record.count_m})",
        "  noise           " + ("none" if not noise else
                               f"sigma_state={noise['sigma_state']:g}  sigma_meas={noise['sigma_meas']:g}  "
                               f"seed={noise['seed']}"),
        f"  gain            template={gain['template']}  spectral radius={gain['spectral_radius']:.6g}  "
        f"({'stable' if gain['stable'] else 'UNSTABLE'})",
        f"  sigma           {record.sigma:.6g}",
        f"  gain bound      max ||sqrt(sigma) H Y|| = {asm['max_filter_norm']:.6g}  "
        f"({'satisfied' if asm['condition_1'] else 'VIOLATED'})",
        f"  excitation     beta = {asm['pe_beta']:.6g} at kappa = {asm['pe_kappa']}  "
        f"({'satisfied' if asm['condition_2'] else 'VIOLATED'})",
        f"  source RMSE     {record.source_rmse:.6g}",
        f"  terminal |xi - xi_hat|  {record.terminal_state_error:.6g}",
        f"  wall time       {record.timing_s:.2f} s",
    ]
    return "\n".join(lines) + "\n"


def seed_average_rmse(cfg: ExperimentConfig, seeds, gain=None) -> float:
    """Mean terminal source RMSE over noise seeds, reusing one gain design."""
    sys = build_system(cfg)
    gain = gain or choose_gain(cfg, sys)
    return float(np.mean([run_estimate(cfg.with_seed(s), sys, gain).source_rmse for s in seeds]))
