"""Massive MIMO uplink with 1-bit ADCs: simulation and closed-form analysis.

Layers, bottom up: ``model`` (channel, QPSK, quantizer), ``detectors``
(pilots, channel estimation, linear filters), ``analytic`` (Gaussian
closed forms for the MRC soft output), ``simulate`` (seeded Monte Carlo,
exact enumeration oracle, sweeps), ``presets``/``config``/``cli`` (figure
presets and the command-line driver), ``estimators`` (scikit-learn style
wrappers).
"""

from .analytic import (
    DiscretizationGrid,
    SoftEstimateMoments,
    analytic_user_metrics,
    antenna_output_pmf,
    batch_user_metrics,
    interference_variance,
    mi_hard,
    mi_soft_discretized,
    moments_for_all_symbols,
    ser_analytic,
    soft_moments,
    transition_matrix,
)
from .detectors import (
    ChannelEstimate,
    MapGrid,
    PilotBlock,
    ReceiveFilter,
    demodulate,
    ls_channel_estimate,
    ls_direct_filter,
    map_channel_estimate,
    mrc_filter,
    orthogonal_qpsk_pilots,
    pilot_length,
    random_qpsk_pilots,
    soft_detect,
    zf_filter,
)
from .estimators import (
    DirectLSDetector,
    LSChannelEstimator,
    MAPChannelEstimator,
    MRCDetector,
    ZFDetector,
)
from .exceptions import (
    ComplexityCapError,
    ConfigError,
    DegenerateChannelError,
    GridCoverageError,
    InsufficientPilotsError,
    InvalidPmfError,
    OneBitMimoError,
    RankDeficiencyError,
    SingularMatrixError,
    SizeCapError,
    UnsupportedCombinationError,
)
from .model import (
    QPSK_ALPHABET,
    QUANTIZER_ALPHABET,
    QuantizerMode,
    SystemConfig,
    propagate,
    quadrant_index,
    quantize,
    sample_channel,
    sample_symbols,
    symbols_to_indices,
)
from .simulate import (
    ExperimentSpec,
    HistogramSpec,
    MetricEstimate,
    MetricPoint,
    OracleResult,
    SweepCell,
    exact_enumeration_oracle,
    run_mi_hard_mc,
    run_mi_soft_mc,
    run_ser_mc,
    run_soft_histogram,
    run_sweep,
)
from .streams import RandomStream, sample_complex_gaussian

__version__ = "0.1.0"
