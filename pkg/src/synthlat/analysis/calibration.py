"""Two-site interference calibration of input phases."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..lattice import LatticeModel, build_hamiltonian
from .bands import _wrap
from scipy.linalg import expm


class CalibrationError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class CalibrationResult:
    """Per-pair calibration phases and fit amplitudes.

    ``theta_calib[i]`` belongs to ``pairs[i] = (n, n + 1)``; ``amplitude``
    is the fitted interference coefficient ``b > 0`` and ``offset`` the
    mean level ``a``. ``r_scale`` is ``b / (2 a)`` for reference.
    """

    pairs: tuple
    theta_calib: np.ndarray
    amplitude: np.ndarray
    offset: np.ndarray
    r_scale: np.ndarray

    def awg_phases(self, k_eff, theta_first=0.0):
        """Drive phases realizing a uniform ``k_eff`` along the calibrated chain.

        ``k_eff = -(theta_{n+1} - theta_n) + theta_calib_n``, so each phase
        follows from its predecessor.
        """
        ph = [theta_first]
        for tc in self.theta_calib:
            ph.append(ph[-1] + tc - k_eff)
        return np.array([_wrap(p) for p in ph])


def fit_interference(theta, power):
    """Fit ``a + b sin(-theta + theta_c)`` with ``b >= 0`` by linear least squares."""
    th = np.asarray(theta, float)
    y = np.asarray(power, float)
    a = np.column_stack([np.ones_like(th), np.cos(th), np.sin(th)])
    c0, c1, c2 = np.linalg.lstsq(a, y, rcond=None)[0]
    # b sin(theta_c - theta) = b sin(theta_c) cos(theta) - b cos(theta_c) sin(theta)
    b = math.hypot(c1, c2)
    tc = math.atan2(c1, -c2) if b > 0 else 0.0
    return float(c0), float(b), _wrap(tc)


def two_site_response(model: LatticeModel, n, theta_sweep, t_probe, r=1.0,
                      input_phases=None, mod_phase=0.0):
    """``|beta_n(t_probe)|^2`` for two-site starts over a phase sweep.

    Site ``n`` starts with ``exp(-i phi_n)`` and site ``n + 1`` with
    ``r exp(-i (theta + phi_{n+1}))``, where ``phi`` are the unknown
    channel phases (``input_phases``, indexed like ``model.sites``).
    """
    h = build_hamiltonian(model.scaled_couplings(1.0, mod_phase))
    u = expm(-1j * h * t_probe)
    phi = np.zeros(model.n_sites) if input_phases is None else np.asarray(input_phases, float)
    i, j = model.index(n), model.index(n + 1)
    th = np.asarray(theta_sweep, float)
    amp = u[i, i] * np.exp(-1j * phi[i]) + r * u[i, j] * np.exp(-1j * (th + phi[j]))
    return np.abs(amp) ** 2


def calibrate_phases(model: LatticeModel, site_pairs, theta_sweep, t_probe, r=1.0,
                     input_phases=None, mod_phase=0.0, noise_floor=1e-12):
    """Simulate and fit the pairwise interference patterns.

    Parameters
    ----------
    model : LatticeModel
    site_pairs : iterable of int or (int, int)
        Lower sites ``n`` (or explicit ``(n, n + 1)`` pairs).
    theta_sweep : array
        Swept drive phase of the upper site (rad).
    t_probe : float
        Modulation time at which the lower site is read out (s).
    r : float
        Relative drive amplitude of the upper site.
    input_phases : array, optional
        Unknown per-site phase offsets of the input lines.

    Returns
    -------
    CalibrationResult

    Raises
    ------
    CalibrationError
        If a fitted interference amplitude is below ``noise_floor``.
    """
    jmax = max((np.abs(v).max() for v in model.couplings.values() if v.size), default=0.0)
    if jmax * t_probe > 1.0:
        import warnings
        warnings.warn("t_probe |J| > 1: outside the short-time calibration regime",
                      RuntimeWarning, stacklevel=2)
    pairs = tuple((p, p + 1) if np.isscalar(p) else tuple(int(x) for x in p) for p in site_pairs)
    tc, amp, off = [], [], []
    for lo, hi in pairs:
        if hi != lo + 1:
            raise ValueError("calibration pairs must be adjacent")
        y = two_site_response(model, lo, theta_sweep, t_probe, r, input_phases, mod_phase)
        a, b, t = fit_interference(theta_sweep, y)
        if b < noise_floor * max(a, 1e-300):
            raise CalibrationError(f"pair {lo, hi}: interference amplitude {b:.3g} below noise floor")
        tc.append(t)
        amp.append(b)
        off.append(a)
    amp = np.array(amp)
    off = np.array(off)
    return CalibrationResult(pairs, np.array(tc), amp, off, amp / (2 * off))


def expected_calibration(model: LatticeModel, n, input_phases=None, mod_phase=0.0):
    """Short-time limit ``phi_n - phi_{n+1} + arg J_{n,n+1}``."""
    phi = np.zeros(model.n_sites) if input_phases is None else np.asarray(input_phases, float)
    i = model.index(n)
    j = model.couplings[1][i] * np.exp(1j * mod_phase)
    return _wrap(phi[i] - phi[i + 1] + np.angle(j))
