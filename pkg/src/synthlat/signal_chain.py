"""Measurement-chain emulation: output coupling, carrier-phase jitter,
reference-channel correction and moving-average smoothing.

The emulation acts on rotating-frame envelopes. Each site is acquired in
its own shot; generator and detector timebases drift linearly from the
start of the raster, and the downconversion LO phase is redrawn per shot.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter1d

from .dynamics import SiteTimeTrace
from .scattering import ChannelModel


class ReferenceAmplitudeError(ValueError):
    pass


@dataclass(frozen=True)
class JitterModel:
    """Per-shot phase disturbances of the carrier.

    Drift rates are dimensionless (s of timebase error per s of lab time);
    defaults are order-of-magnitude guesses. ``awg_jitter`` is the rms
    shot-to-shot offset of the common AWG timebase (s), which the
    reference channel cannot remove.
    """

    seed: int = 0
    randomize_lo: bool = True
    drift_uc: float = 1e-9
    drift_dc: float = 1e-9
    drift_adc: float = 1e-9
    awg_jitter: float = 0.0
    shot_time: float = 1e-3
    t_out: float = 0.0
    omega_uc: float = 2 * math.pi * 6.0e9
    omega_dc: float = 2 * math.pi * 4.9e9
    omega_adc: float = 2 * math.pi * 0.1e9
    omega_ch1: float = 2 * math.pi * 1.0e9
    omega_ch3: float = 2 * math.pi * 1.1e9
    omega_mod: float = 2 * math.pi * 155.1e6

    def realize(self, sites, times):
        """Phases ``(common, awg)`` of shape ``(site, time)``.

        ``common`` collects the LO, drift and ADC terms shared by both ADC
        channels; ``awg`` is the AWG timebase offset per shot.
        """
        sites = np.asarray(sites)
        t = np.asarray(times, float)
        rng = np.random.default_rng(self.seed)
        n = sites.size
        rand = rng.uniform(-math.pi, math.pi, n) if self.randomize_lo else np.zeros(n)
        t_awg = self.awg_jitter * rng.standard_normal(n)
        lab = np.arange(n)[:, None] * self.shot_time + t[None, :]
        common = (self.omega_uc * self.drift_uc * lab - self.omega_dc * self.drift_dc * lab
                  + self.omega_adc * self.drift_adc * lab + rand[:, None])
        return common, np.broadcast_to(t_awg[:, None], common.shape)


IDENTITY_JITTER = JitterModel(randomize_lo=False, drift_uc=0.0, drift_dc=0.0, drift_adc=0.0)


def apply_channel(trace: SiteTimeTrace, channel: ChannelModel = None,
                  jitter: JitterModel = None, kappa_e=1.0) -> SiteTimeTrace:
    """Measured envelopes of every site.

    Multiplies each row by ``-sqrt(ke) G_out exp(i n Omega T_out)`` and by
    the carrier phase of ADC channel A for the jitter realization.
    """
    channel = channel or ChannelModel()
    ke = np.broadcast_to(np.asarray(kappa_e, float), trace.sites.shape)
    data = trace.amps * channel.output_factor(trace.sites, ke)[:, None]
    if jitter is not None:
        common, t_awg = jitter.realize(trace.sites, trace.times)
        ph = common + (-jitter.omega_ch1 + trace.sites[:, None] * jitter.omega_mod) * t_awg
        data = data * np.exp(1j * ph)
    return SiteTimeTrace(trace.times, trace.sites, data)


def reference_channel(trace: SiteTimeTrace, jitter: JitterModel, amplitude=1.0) -> SiteTimeTrace:
    """Envelope on ADC channel B sharing the jitter realization of ``trace``."""
    common, t_awg = jitter.realize(trace.sites, trace.times)
    ph = common - jitter.omega_ch3 * t_awg
    return SiteTimeTrace(trace.times, trace.sites, amplitude * np.exp(1j * ph))


def phase_reference_correct(trace_a: SiteTimeTrace, trace_b: SiteTimeTrace, mode="mean",
                            threshold=1e-12) -> SiteTimeTrace:
    """Remove the reference phase from every shot.

    ``mode="mean"`` subtracts the time-averaged reference phase of each
    shot; ``mode="instantaneous"`` divides by the reference phasor at
    every sample, which also cancels drift within a shot.

    Raises
    ------
    ReferenceAmplitudeError
        If the reference amplitude falls below ``threshold``.
    """
    if trace_a.amps.shape != trace_b.amps.shape:
        raise ValueError("signal and reference traces differ in shape")
    b = trace_b.amps
    mag = np.abs(b)
    if np.any(mag.mean(axis=1) < threshold):
        raise ReferenceAmplitudeError("reference amplitude below threshold")
    if mode == "mean":
        unit = b / np.where(mag > 0, mag, 1)
        avg = unit.mean(axis=1)
        phase = np.exp(1j * np.angle(avg))[:, None]
    elif mode == "instantaneous":
        if np.any(mag < threshold):
            raise ReferenceAmplitudeError("reference amplitude below threshold")
        phase = b / mag
    else:
        raise ValueError(f"unknown correction mode {mode!r}")
    return SiteTimeTrace(trace_a.times, trace_a.sites, trace_a.amps * np.conj(phase))


def smooth(trace, window=16):
    """Moving average of ``window`` samples along time (edges held constant).

    Accepts a :class:`SiteTimeTrace` or a complex array ``(site, time)``.
    """
    if int(window) != window or window < 1:
        raise ValueError("window must be a positive integer")
    window = int(window)
    arr = trace.amps if isinstance(trace, SiteTimeTrace) else np.asarray(trace)
    if window == 1:
        out = np.array(arr, copy=True)
    elif np.iscomplexobj(arr):
        out = (uniform_filter1d(arr.real, window, axis=-1, mode="nearest")
               + 1j * uniform_filter1d(arr.imag, window, axis=-1, mode="nearest"))
    else:
        out = uniform_filter1d(arr, window, axis=-1, mode="nearest")
    if isinstance(trace, SiteTimeTrace):
        return SiteTimeTrace(trace.times, trace.sites, out)
    return out


def smoothing_response(omega, window, dt):
    """Magnitude response ``|sin(N w dt / 2) / (N sin(w dt / 2))|`` of the moving average."""
    x = np.asarray(omega, float) * dt / 2
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.sin(window * x) / (window * np.sin(x))
    return np.abs(np.where(np.abs(np.sin(x)) < 1e-15, 1.0, r))
