"""Fit of the flux-tuning model to measured mode frequencies."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from ..device import TABLE_I, _solve_branch

PARAM_NAMES = ("g_volt", "v_ss", "omega_rt", "A", "B", "d_sq2")


class FitError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class TuningFit:
    """Fitted tuning parameters with covariance (in ``PARAM_NAMES`` order).

    ``degenerate`` is set when ``B`` and ``d_sq2`` are poorly constrained
    (strongly correlated, or uncertain by more than half at the reference
    noise level).
    """

    params: dict
    covariance: np.ndarray
    rms: float
    degenerate: bool
    correlation_b_dsq2: float
    success: bool = True
    message: str = ""
    stderr: dict = field(default_factory=dict)


def _model(p, v, n):
    """Frequencies (rad/s) and Jacobian wrt ``(G, V_ss, w_rt, A, 1/B, d_sq2)``."""
    g, vss, wrt, a, binv, d2 = p
    f = g * (v - vss)
    c2, s2 = np.cos(f) ** 2, np.sin(f) ** 2
    d2a = abs(d2)
    root = np.sqrt(c2 + d2a * s2)
    at = a * root
    b = math.inf if binv == 0 else 1.0 / binv
    y = np.array([_solve_branch(int(ni), float(ai), abs(b)) for ni, ai in zip(n, at)])
    if binv < 0:
        raise FitError("B left the physical range")
    # implicit derivative of sin y + (y/B - Ã/y) cos y = 0
    cy, sy = np.cos(y), np.sin(y)
    q = y * binv - at / y
    dh_dy = cy + (binv + at / y**2) * cy - q * sy
    dy_dat = (cy / y) / dh_dy
    dy_dbinv = -(y * cy) / dh_dy
    dat_df = a * np.sin(f) * np.cos(f) * (d2a - 1) / root
    dat_dd2 = np.sign(d2) * a * s2 / (2 * root)
    w = y * wrt / math.pi
    k = wrt / math.pi
    jac = np.column_stack([
        k * dy_dat * dat_df * (v - vss),
        k * dy_dat * dat_df * (-g),
        y / math.pi,
        k * dy_dat * root,
        k * dy_dbinv,
        k * dy_dat * dat_dd2,
    ])
    return w, jac


def _initial_flux(v, w):
    """Guess ``(G, V_ss)`` from the positions of maximum and minimum frequency."""
    order = np.argsort(v)
    v, w = v[order], w[order]
    i_max = int(np.argmax(w))
    i_min = int(np.argmin(w))
    quarter = abs(v[i_max] - v[i_min])
    if quarter == 0:
        raise FitError("cannot locate the flux period")
    return math.pi / (2 * quarter), v[i_max]


def fit_tuning(v, omega, n, initial=None, scale=2 * math.pi * 1e6,
               noise_ref=2 * math.pi * 1e5):
    """Least-squares fit of the tuning model.

    Parameters
    ----------
    v : array
        Flux-line bias voltages (V).
    omega : array
        Measured mode frequencies (rad/s).
    n : int or array
        Mode number of each sample.
    initial : dict, optional
        Starting values keyed by ``PARAM_NAMES``. Missing ``g_volt`` and
        ``v_ss`` are estimated from the data; the circuit constants default
        to the published table values.
    scale : float
        Residual scale (rad/s) used for conditioning.
    noise_ref : float
        Frequency noise (rad/s) at which the ``B``/``d_sq2`` degeneracy is
        judged: the flag is raised when either would be uncertain by more
        than 50% at this noise, so noiseless data are flagged too.

    Returns
    -------
    TuningFit

    Raises
    ------
    FitError
        On degenerate input (no tuning) or non-convergence.
    """
    v = np.asarray(v, float)
    w = np.asarray(omega, float)
    n = np.broadcast_to(np.asarray(n, int), v.shape)
    if v.size < len(PARAM_NAMES):
        raise FitError("too few samples")
    for ni in np.unique(n):
        sel = n == ni
        if np.ptp(w[sel]) <= 1e-9 * np.abs(w[sel]).max():
            raise FitError(f"mode {ni} shows no tuning: flux model is unconstrained")
    init = dict(initial or {})
    if "g_volt" not in init or "v_ss" not in init:
        ref = n == np.unique(n)[0]
        g0, vss0 = _initial_flux(v[ref], w[ref])
        init.setdefault("g_volt", g0)
        init.setdefault("v_ss", vss0)
    init.setdefault("omega_rt", 2 * math.pi * TABLE_I["omega_rt_hz"])
    init.setdefault("A", TABLE_I["A"])
    init.setdefault("B", TABLE_I["B"])
    init.setdefault("d_sq2", 0.5 * TABLE_I["d_sq2_max"])
    p0 = np.array([init["g_volt"], init["v_ss"], init["omega_rt"], init["A"],
                   1.0 / init["B"], init["d_sq2"]], float)

    def res(p):
        return (_model(p, v, n)[0] - w) / scale

    def jac(p):
        return _model(p, v, n)[1] / scale

    try:
        r = least_squares(res, p0, jac=jac, method="lm", x_scale="jac",
                          xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
    except (FitError, RuntimeError, ValueError) as exc:
        raise FitError(f"tuning fit failed: {exc}") from exc
    if r.status <= 0:
        raise FitError(f"tuning fit did not converge: {r.message}")
    p = r.x.copy()
    # flux map sign and period are not observable: G > 0, V_ss nearest the start
    if p[0] < 0:
        p[0] = -p[0]
    per = math.pi / p[0]
    p[1] = p0[1] + ((p[1] - p0[1] + per / 2) % per - per / 2)
    p[5] = abs(p[5])
    jac_s = _model(p, v, n)[1] / scale
    dof = max(v.size - p.size, 1)
    s2 = 2 * r.cost / dof
    # column-normalized inverse: parameter scales span many decades
    norms = np.linalg.norm(jac_s, axis=0)
    norms[norms == 0] = 1.0
    js = jac_s / norms
    inv = np.linalg.pinv(js.T @ js) / np.outer(norms, norms)
    tr = np.eye(6)
    tr[4, 4] = -1.0 / p[4] ** 2
    cov = tr @ (inv * s2) @ tr.T
    err = np.sqrt(np.clip(np.diag(cov), 0, None))
    # degeneracy from the normal matrix alone, independent of the noise level
    den = math.sqrt(max(inv[4, 4] * inv[5, 5], 0))
    corr = float(inv[4, 5] / den) if den > 0 else 1.0
    cond = np.linalg.cond(js.T @ js)
    # relative spread of B and d_sq2 expected at the reference noise level
    ref = tr @ inv @ tr.T * (noise_ref / scale) ** 2
    rel_b = math.sqrt(max(ref[4, 4], 0)) * p[4] if p[4] != 0 else math.inf
    rel_d = math.sqrt(max(ref[5, 5], 0)) / p[5] if p[5] > 0 else math.inf
    degenerate = (abs(corr) > 0.9 or not np.isfinite(cond) or cond > 1e8
                  or max(rel_b, rel_d) > 0.5)
    params = dict(zip(PARAM_NAMES, [p[0], p[1], p[2], p[3], 1.0 / p[4], p[5]]))
    params = {k: float(x) for k, x in params.items()}
    return TuningFit(params, cov, float(math.sqrt(2 * r.cost / v.size) * scale), bool(degenerate),
                     corr, True, r.message, dict(zip(PARAM_NAMES, err.tolist())))
