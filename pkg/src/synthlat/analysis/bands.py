"""Least-squares fits of ridge data to cosine band models.

All models carry a constant offset ``c`` (rad/s) for a uniform detuning of
the lattice. Fits use Levenberg-Marquardt with analytic Jacobians.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.optimize import least_squares

BAND_MODELS = ("nn", "second_nn", "second_nn_h2", "two_tone")


class BandFitError(ValueError):
    pass


def _wrap(theta):
    """Map to (-pi, pi]."""
    return float(-((-theta + math.pi) % (2 * math.pi) - math.pi))


def band_nn(k, c, j, theta):
    return c + 2 * j * np.cos(k + theta)


def band_second_nn(k, c, j2, j4=0.0):
    return c + 2 * j2 * np.cos(2 * k) + 2 * j4 * np.cos(4 * k)


def band_two_tone(k, c, j1, j2, theta2, j4=0.0):
    return (c + 2 * j1 * np.cos(k) + 2 * j2 * np.cos(2 * k + theta2)
            + 2 * j4 * np.cos(4 * k + 2 * theta2))


def _linear(cols, w):
    a = np.column_stack(cols)
    if np.linalg.matrix_rank(a) < a.shape[1]:
        raise BandFitError("rank-deficient design matrix (too few distinct k values)")
    coef, *_ = np.linalg.lstsq(a, w, rcond=None)
    return coef


def _fit_nn(k, w):
    c, a, b = _linear([np.ones_like(k), np.cos(k), np.sin(k)], w)
    # 2|J| cos(k + theta) = a cos k + b sin k
    j0 = 0.5 * math.hypot(a, b)
    th0 = math.atan2(-b, a) if j0 > 0 else 0.0

    def res(p):
        return band_nn(k, *p) - w

    def jac(p):
        c, j, th = p
        return np.column_stack([np.ones_like(k), 2 * np.cos(k + th), -2 * j * np.sin(k + th)])

    p = np.array([c, j0, th0])
    if j0 > 0 and k.size > 3:
        p = least_squares(res, p, jac=jac, method="lm").x
    c, j, th = p
    if j < 0:
        j, th = -j, th + math.pi
    return {"c": float(c), "j": float(j), "theta": _wrap(th) if j > 0 else 0.0}


def _fit_second(k, w, with_h2):
    cols = [np.ones_like(k), np.cos(2 * k)] + ([np.cos(4 * k)] if with_h2 else [])
    coef = _linear(cols, w)
    out = {"c": float(coef[0]), "j2": float(coef[1] / 2)}
    out["j4"] = float(coef[2] / 2) if with_h2 else 0.0
    return out


def _fit_two_tone(k, w, with_h2=True, n_starts=12):
    def model(p):
        c, j1, j2, th, j4 = p if with_h2 else (*p, 0.0)
        return band_two_tone(k, c, j1, j2, th, j4)

    def res(p):
        return model(p) - w

    def jac(p):
        c, j1, j2, th, j4 = p if with_h2 else (*p, 0.0)
        cols = [np.ones_like(k), 2 * np.cos(k), 2 * np.cos(2 * k + th),
                -2 * j2 * np.sin(2 * k + th) - 4 * j4 * np.sin(4 * k + 2 * th)]
        if with_h2:
            cols.append(2 * np.cos(4 * k + 2 * th))
        return np.column_stack(cols)

    n_par = 5 if with_h2 else 4
    if k.size < n_par:
        raise BandFitError("rank-deficient design matrix (too few distinct k values)")
    if not np.any(w):
        return {"c": 0.0, "j1": 0.0, "j2": 0.0, "theta2": 0.0, "j4": 0.0}
    best = None
    for th0 in np.linspace(-math.pi, math.pi, n_starts, endpoint=False):
        # linear solve for amplitudes at fixed phase, then refine all
        cols = [np.ones_like(k), np.cos(k), np.cos(2 * k + th0)]
        if with_h2:
            cols.append(np.cos(4 * k + 2 * th0))
        a, *_ = np.linalg.lstsq(np.column_stack(cols), w, rcond=None)
        p0 = [a[0], a[1] / 2, a[2] / 2, th0] + ([a[3] / 2] if with_h2 else [])
        r = least_squares(res, p0, jac=jac, method="lm")
        if best is None or r.cost < best.cost:
            best = r
    c, j1, j2, th, j4 = best.x if with_h2 else (*best.x, 0.0)
    # sign conventions: j2 >= 0 by shifting theta2 by pi (j4 picks up 2pi, unchanged)
    if j2 < 0:
        j2, th = -j2, th + math.pi
    return {"c": float(c), "j1": float(j1), "j2": float(j2), "theta2": _wrap(th),
            "j4": float(j4)}


def fit_band_models(ridge, model="nn"):
    """Fit ridge points ``(k, omega)`` to a band model.

    Parameters
    ----------
    ridge : array, (n, 2)
        Quasimomentum (rad) and ridge frequency (rad/s).
    model : {"nn", "second_nn", "second_nn_h2", "two_tone"}
        ``nn``: ``c + 2|J| cos(k + theta)``.
        ``second_nn``: ``c + 2 J2 cos 2k``.
        ``second_nn_h2``: adds ``2 J4 cos 4k`` (harmonic in phase with the
        fundamental).
        ``two_tone``: ``c + 2 J1 cos k + 2|J2| cos(2k + theta2)
        + 2 J4 cos(4k + 2 theta2)``.

    Returns
    -------
    dict
        Coefficients in rad/s and phases in rad, plus ``rms`` residual.
        The phaseless models report signed ``j2``/``j4`` (a negative value
        is a pi phase).
    """
    r = np.asarray(ridge, float)
    if r.ndim != 2 or r.shape[0] == 0:
        raise BandFitError("empty ridge")
    k, w = r[:, 0], r[:, 1]
    if model == "nn":
        out = _fit_nn(k, w)
        pred = band_nn(k, out["c"], out["j"], out["theta"])
    elif model in ("second_nn", "second_nn_h2"):
        out = _fit_second(k, w, model == "second_nn_h2")
        pred = band_second_nn(k, out["c"], out["j2"], out["j4"])
    elif model == "two_tone":
        out = _fit_two_tone(k, w)
        pred = band_two_tone(k, out["c"], out["j1"], out["j2"], out["theta2"], out["j4"])
    else:
        raise ValueError(f"unknown band model {model!r}; choose from {BAND_MODELS}")
    out["model"] = model
    out["rms"] = float(np.sqrt(np.mean((pred - w) ** 2)))
    return out
