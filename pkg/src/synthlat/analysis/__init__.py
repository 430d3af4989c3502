"""Analysis pipelines: dispersion, band fits, tuning fits, calibration,
wavepackets and defect scattering."""
from .bands import BAND_MODELS, BandFitError, band_nn, band_second_nn, band_two_tone, fit_band_models
from .calibration import (CalibrationError, CalibrationResult, calibrate_phases,
                          expected_calibration, fit_interference, two_site_response)
from .defect import DefectScatteringResult, defect_scattering, simulate_transmission
from .dispersion import DispersionResult, correct_output, extract_dispersion, nn_band, power_map
from .tuning import FitError, TuningFit, fit_tuning
from .wavepacket import (BoundaryError, WavepacketSpec, centroid, group_velocity, make_wavepacket,
                         spread)

__all__ = [
    "BAND_MODELS", "BandFitError", "band_nn", "band_second_nn", "band_two_tone", "fit_band_models",
    "CalibrationError", "CalibrationResult", "calibrate_phases", "expected_calibration",
    "fit_interference", "two_site_response",
    "DefectScatteringResult", "defect_scattering", "simulate_transmission",
    "DispersionResult", "correct_output", "extract_dispersion", "nn_band", "power_map",
    "FitError", "TuningFit", "fit_tuning",
    "BoundaryError", "WavepacketSpec", "centroid", "group_velocity", "make_wavepacket", "spread",
]
