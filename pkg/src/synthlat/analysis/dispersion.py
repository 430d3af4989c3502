"""Band-structure extraction from site-by-time traces."""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .bands import band_nn, fit_band_models


@dataclass(frozen=True, eq=False)
class DispersionResult:
    """Power map over ``(k, omega)`` with ridge and band fit.

    ``power[i, j]`` belongs to ``k_grid[i]`` and ``omega_grid[j]``.
    ``ambiguous`` lists k values whose ridge maximum is not well separated.
    """

    k_grid: np.ndarray
    omega_grid: np.ndarray
    power: np.ndarray
    ridge: np.ndarray
    fit: dict
    ambiguous: tuple = ()

    def __post_init__(self):
        if np.any(self.power < 0):
            raise ValueError("power must be non-negative")

    @property
    def j_fit(self):
        return self.fit.get("j", float("nan"))

    def power_along(self, band):
        """Mean power at ``omega = band(k)`` (nearest bin) over all k."""
        idx = np.abs(self.omega_grid[None, :] - band(self.k_grid)[:, None]).argmin(axis=1)
        return float(np.mean(self.power[np.arange(self.k_grid.size), idx]))

    def ridge_power(self, points=None):
        """Mean power at ridge points ``(k, omega)`` (nearest bins).

        ``points`` defaults to this result's own ridge; passing another
        result's ridge measures how much power sits where that ridge was.
        """
        pts = self.ridge if points is None else np.asarray(points, float)
        ki = np.abs(self.k_grid[:, None] - pts[:, 0][None]).argmin(axis=0)
        wi = np.abs(self.omega_grid[:, None] - pts[:, 1][None]).argmin(axis=0)
        return float(self.power[ki, wi].mean())

    def to_csv(self, path):
        """Long format ``k, omega_hz, power``."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", "omega_hz", "power"])
            for i, k in enumerate(self.k_grid):
                for om, p in zip(self.omega_grid, self.power[i]):
                    w.writerow([repr(float(k)), repr(float(om / (2 * math.pi))), repr(float(p))])

    def fit_record(self):
        return {"fit": self.fit,
                "ridge": [[float(k), float(w)] for k, w in self.ridge],
                "ambiguous_k": [float(k) for k in self.ambiguous]}

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.fit_record(), fh, indent=1, sort_keys=True)
            fh.write("\n")


def correct_output(data, sites, channel, kappa_e):
    """Undo the output chain: divide by ``-sqrt(ke) G_out exp(i n Omega T_out)``."""
    fac = channel.output_factor(sites, kappa_e)
    if np.any(fac == 0):
        raise ValueError("zero external coupling: cannot undo the output chain")
    return np.asarray(data, complex) / fac[:, None]


def power_map(amps, dt, pad=4, k_pad=4):
    """``|sum_n sum_t beta_n(t) exp(-i k n + i omega t)|^2``.

    Rows are k in ``[-pi, pi)`` (``exp(i k n)`` lands at ``+k``); columns
    are sorted omega. Zero padding is ``pad``-fold in time and
    ``k_pad``-fold across sites; the latter interpolates between the
    standing-wave eigenmodes of a finite chain.
    """
    a = np.asarray(amps, complex)
    n_s, n_t = a.shape
    spec = np.fft.fft(a, n=k_pad * n_s, axis=0)
    spec = np.fft.ifft(spec, n=pad * n_t, axis=1) * (pad * n_t) * dt
    k = 2 * math.pi * np.fft.fftfreq(k_pad * n_s)
    om = 2 * math.pi * np.fft.fftfreq(pad * n_t, dt)
    ko, oo = np.argsort(k), np.argsort(om)
    k = np.where(k[ko] >= math.pi, k[ko] - 2 * math.pi, k[ko])
    return k, om[oo], np.abs(spec[np.ix_(ko, oo)]) ** 2


def ridge_points(k, omega, power, ambiguity=0.8):
    """Per-k argmax with 3-point parabolic refinement.

    Returns ``(ridge, ambiguous_k)``; a k bin is ambiguous when a second
    local maximum reaches ``ambiguity`` times the peak.
    """
    ridge = np.empty((k.size, 2))
    amb = []
    dw = omega[1] - omega[0]
    for i, row in enumerate(power):
        j = int(np.argmax(row))
        shift = 0.0
        if 0 < j < row.size - 1:
            y0, y1, y2 = row[j - 1], row[j], row[j + 1]
            den = y0 - 2 * y1 + y2
            if den < 0:
                shift = 0.5 * (y0 - y2) / den
        ridge[i] = k[i], omega[j] + shift * dw
        inner = row[1:-1]
        peaks = np.nonzero((inner > row[:-2]) & (inner >= row[2:]))[0] + 1
        others = peaks[np.abs(peaks - j) > 2]
        if others.size and row[others].max() >= ambiguity * row[j]:
            amb.append(float(k[i]))
    return ridge, tuple(amb)


def extract_dispersion(trace, channel=None, kappa_e=None, model="nn", pad=4, k_pad=4,
                       use_outputs=False, omega_window=None):
    """Dispersion of the lattice from a site-by-time record.

    Parameters
    ----------
    trace : SiteTimeTrace
        Uniformly sampled in time, contiguous sites.
    channel : ChannelModel, optional
        When given, the record is treated as measured output and corrected
        for output coupling, gain and delay before transforming.
    kappa_e : array, optional
        External loss per site, needed with ``channel`` (default 1).
    pad, k_pad : int
        Zero-padding factors in time and across sites.
    model : str
        Band model passed to :func:`fit_band_models`.
    omega_window : (float, float), optional
        Restrict the ridge search to this omega range (rad/s).

    Returns
    -------
    DispersionResult
    """
    data = trace.outputs if use_outputs else trace.amps
    if data is None:
        raise ValueError("trace carries no output record")
    steps = np.diff(trace.times)
    if steps.size == 0 or not np.allclose(steps, steps[0], rtol=1e-6):
        raise ValueError("dispersion extraction needs a uniform time grid")
    if np.any(np.diff(trace.sites) != 1):
        raise ValueError("sites must be contiguous and increasing")
    if channel is not None:
        ke = np.ones(trace.sites.size) if kappa_e is None else np.asarray(kappa_e, float)
        data = correct_output(data, trace.sites, channel, ke)
    if trace.sites.size < 20:
        warnings.warn("fewer than 20 sites: k resolution is coarse", RuntimeWarning, stacklevel=2)
    k, om, p = power_map(data, steps[0], pad, k_pad)
    if omega_window is not None:
        keep = (om >= omega_window[0]) & (om <= omega_window[1])
        om, p = om[keep], p[:, keep]
    ridge, amb = ridge_points(k, om, p)
    fit = fit_band_models(ridge, model)
    if amb:
        warnings.warn(f"ridge ambiguous at {len(amb)} k values", RuntimeWarning, stacklevel=2)
    return DispersionResult(k, om, p, ridge, fit, amb)


def nn_band(fit):
    """Callable band ``omega(k)`` from an ``nn`` fit record."""
    return lambda k: band_nn(k, fit["c"], fit["j"], fit["theta"])
