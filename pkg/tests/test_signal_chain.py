import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from synthlat.dynamics import SiteTimeTrace, evolve
from synthlat.lattice import build_hamiltonian, uniform_chain
from synthlat.scattering import ChannelModel
from synthlat.signal_chain import (IDENTITY_JITTER, JitterModel, ReferenceAmplitudeError,
                                   apply_channel, phase_reference_correct, reference_channel,
                                   smooth, smoothing_response)

TWO_PI = 2 * math.pi


def _trace(n=7, nt=400):
    m = uniform_chain(n, TWO_PI * 1e6, TWO_PI * 60e3)
    b0 = np.zeros(n, complex)
    b0[n // 2] = 1
    return m, evolve(build_hamiltonian(m), b0, np.arange(nt) * 2e-9, m.sites)


def test_smooth_window_one_is_identity():
    x = np.random.default_rng(0).normal(size=(3, 50)) + 0j
    assert np.array_equal(smooth(x, 1), x)


@settings(max_examples=25, deadline=None)
@given(w=st.integers(2, 40), c=st.complex_numbers(max_magnitude=1e3))
def test_smooth_preserves_dc(w, c):
    x = np.full((2, 100), c)
    assert np.allclose(smooth(x, w), c)


def test_smooth_reduces_white_noise_variance():
    x = np.random.default_rng(1).normal(size=(1, 20000))
    y = smooth(x, 16)
    assert y[0, 100:-100].var() == pytest.approx(1 / 16, rel=0.1)


def test_smoothing_response_matches_filter():
    dt, w = 2e-9, 16
    om = TWO_PI * 7e6
    t = np.arange(8000) * dt
    y = smooth(np.exp(1j * om * t)[None, :], w)
    gain = np.abs(y[0, 1000:-1000]).mean()
    assert gain == pytest.approx(smoothing_response(om, w, dt), rel=1e-3)
    assert smoothing_response(0.0, w, dt) == 1.0


def test_smooth_trace_and_errors():
    _, tr = _trace()
    s = smooth(tr, 4)
    assert isinstance(s, SiteTimeTrace) and s.amps.shape == tr.amps.shape
    with pytest.raises(ValueError):
        smooth(tr, 0)


def test_identity_channel_is_minus_sqrt_kappa():
    m, tr = _trace()
    out = apply_channel(tr, None, IDENTITY_JITTER, m.kappa_e)
    assert np.allclose(out.amps, -np.sqrt(m.kappa_e)[:, None] * tr.amps)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_reference_correction_removes_shot_phases(seed):
    m, tr = _trace()
    jit = JitterModel(seed=seed, drift_uc=0.0, drift_dc=0.0, drift_adc=0.0)
    ch = ChannelModel(g_out=0.7)
    clean = apply_channel(tr, ch, None, m.kappa_e)
    meas = apply_channel(tr, ch, jit, m.kappa_e)
    fixed = phase_reference_correct(meas, reference_channel(tr, jit))
    # without drift only a global phase per shot is left, common to all shots
    ratio = fixed.amps / np.where(np.abs(clean.amps) > 0, clean.amps, 1)
    good = np.abs(clean.amps) > 1e-6 * np.abs(clean.amps).max()
    assert np.allclose(ratio[good], ratio[good][0], atol=1e-9)


def test_instantaneous_mode_cancels_drift():
    m, tr = _trace()
    jit = JitterModel(seed=3, drift_uc=1e-6, drift_dc=2e-6)
    meas = apply_channel(tr, None, jit, m.kappa_e)
    ref = reference_channel(tr, jit)
    clean = apply_channel(tr, None, None, m.kappa_e)
    inst = phase_reference_correct(meas, ref, mode="instantaneous")
    assert np.allclose(inst.amps, clean.amps, atol=1e-12)
    mean = phase_reference_correct(meas, ref, mode="mean")
    assert np.max(np.abs(mean.amps - clean.amps)) > 1e-6


def test_awg_jitter_survives_correction():
    m, tr = _trace()
    jit = JitterModel(seed=2, awg_jitter=1e-9, randomize_lo=False, drift_uc=0, drift_dc=0,
                      drift_adc=0)
    fixed = phase_reference_correct(apply_channel(tr, None, jit, m.kappa_e),
                                    reference_channel(tr, jit), mode="instantaneous")
    clean = apply_channel(tr, None, None, m.kappa_e)
    assert np.max(np.abs(fixed.amps - clean.amps)) > 1e-3 * np.abs(clean.amps).max()


def test_jitter_realization_is_seeded():
    a = JitterModel(seed=9).realize(np.arange(4), np.linspace(0, 1e-6, 5))
    b = JitterModel(seed=9).realize(np.arange(4), np.linspace(0, 1e-6, 5))
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_reference_threshold_and_mode_errors():
    _, tr = _trace()
    jit = JitterModel(seed=1)
    with pytest.raises(ReferenceAmplitudeError):
        phase_reference_correct(tr, reference_channel(tr, jit, amplitude=0.0))
    with pytest.raises(ValueError):
        phase_reference_correct(tr, reference_channel(tr, jit), mode="bogus")
