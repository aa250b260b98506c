"""Cutoff-rate optimization of SIM-based holographic MIMO links."""
from .geometry import SimGeometry, build_all_propagation
from .channel import PathLossModel, correlation_pair, sample_channel, path_gain_linear
from .signaling import build_constellation, enumerate_vectors, build_differences
from .wavefield import DesignPoint, transmit_cascade, receive_cascade, end_to_end
from .objective import NoiseModel, cutoff_rate, mutual_information_mc
from .apgm import OptimizerConfig, LineSearchParams, Problem, run, random_initial_point

__version__ = "0.1.0"
