"""Adaptive-observer reconstruction of the source of a 1D wave equation."""

from .analysis import (ErrorMetrics, ObservabilityReport, conditioning_report, end_anchored_windows,
                       measurement_sweep, observability_matrix, source_rmse, state_error_series)
from .core_model import (DiscreteWaveSystem, Grid, MeasurementSelection, PhysicalParams, apply_step,
                         assemble_system, build_laplacian, measure)
from .exceptions import (CFLWarning, ConfigError, DimensionError, EmptyTemplateError, RecordError,
                         UnknownProfileError, WaveObsError)
from .gain_design import (GainDesignResult, GainTemplate, design_auto, design_gain, spectral_radius,
                          validate_gain)
from .observer import (AssumptionReport, EstimateTrajectory, ObserverConfig, ObserverState, auto_sigma,
                       check_assumption, observer_step, run_observer)
from .simulate import InitialConditions, NoiseSpec, SyntheticRun, sample_source, simulate_forward

__version__ = "0.1.0"
