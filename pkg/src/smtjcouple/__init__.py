"""Coupled superparamagnetic tunnel junction simulator and analysis toolkit."""

from .analog import (
    GainConfig,
    LevelShiftConfig,
    PipelineConfig,
    Polarity,
    ThresholdConfig,
    TransconductanceConfig,
    delta_current,
    gain_stage,
    level_shift_stage,
    pipeline_output,
    threshold_stage,
    transconductance_stage,
)
from .anneal import (
    AnnealSchedule,
    IsingProblem,
    anneal,
    boltzmann_distribution,
    calibrate_gain_to_temperature,
    model_energy,
)
from .device import (
    MagState,
    SmtjParams,
    load_presets,
    mean_dwell_time,
    preset,
    resistance,
    sample_dwell,
    state_probability,
)
from .errors import (
    BreakdownError,
    ConfigError,
    InvalidArgumentError,
    InvalidConfigurationError,
    NumericalFailureError,
    SmtjError,
    UndefinedCorrelationError,
    UnsupportedConfigurationError,
)
from .estimators import PairMarkovEstimator, TelegraphDigitizer
from .markov import (
    CoupledPairModel,
    Generator4,
    build_generator,
    joint_dwell_times,
    predict_correlation,
    relaxation_rate,
    slowest_eigenvalue,
    steady_state,
)
from .simnet import (
    NetworkSpec,
    SquareWave,
    TelegraphTrace,
    effective_current,
    ising_network,
    pair_network,
    sample_trace,
    sample_traces,
    simulate,
)
from .stats import digitize, equilibration_check, event_occupancy, joint_dwell_stats, pearson

__version__ = "0.1.0"
