"""Zero measurement detection (ZMD) of vacant sub-channels in sub-Nyquist wideband spectrum sensing."""
from .analysis import AnalyticalPrediction, predict
from .detect import (
    ChannelParams,
    DetectionReport,
    calibrate_threshold,
    calibrate_threshold_irregular,
    detect_lrt,
    detect_noiseless,
    detect_threshold,
    hypothesis_prior,
    likelihood_ratio,
)
from .errors import *  # noqa: F401,F403
from .experiments import ExperimentConfig, TrialMetrics, reproduce_figure, run_point, run_sweep, run_trial
from .graphs import (
    DegreeDistribution,
    SensingGraph,
    build_irregular_graph,
    build_one_to_one_graph,
    build_regular_graph,
)
from .operator import BlockSensingMatrix, MeasurementVector, build_sensing_matrix, measure
from .spectrum import SpectrumRealization, sample_occupancy, sample_spectrum

__version__ = "0.1.0"
