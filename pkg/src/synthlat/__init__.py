"""Simulation and analysis of photon dynamics along a synthetic frequency
dimension of a parametrically modulated multimode resonator."""

__version__ = "0.1.0"

from .device import (DeviceParams, FluxDrive, ModeSpectrum, SquidArray, TuningCalibration,
                     derive_drive_coefficients, solve_mode_frequencies, table_one, tuning_curve,
                     zero_point_phase)
from .dynamics import (PulseSequence, Segment, SiteTimeTrace, bloch_oscillate, bloch_period,
                       evolve, run_sequence, time_reverse_protocol)
from .lattice import DisorderSpec, LatticeModel, build_hamiltonian, from_device, uniform_chain
from .scattering import ChannelModel, ScatteringResult, steady_state_s, transient_s

__all__ = [
    "DeviceParams", "FluxDrive", "ModeSpectrum", "SquidArray", "TuningCalibration",
    "derive_drive_coefficients", "solve_mode_frequencies", "table_one", "tuning_curve",
    "zero_point_phase",
    "PulseSequence", "Segment", "SiteTimeTrace", "bloch_oscillate", "bloch_period", "evolve",
    "run_sequence", "time_reverse_protocol",
    "DisorderSpec", "LatticeModel", "build_hamiltonian", "from_device", "uniform_chain",
    "ChannelModel", "ScatteringResult", "steady_state_s", "transient_s",
]
