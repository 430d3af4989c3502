"""Frequency-domain scattering between lattice sites.

Frequencies are rotating-frame angular frequencies (rad/s). A field
``exp(-i omega t)`` convention is used throughout, matching the time-domain
propagator ``exp(-i H t)``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .lattice import LatticeModel, build_hamiltonian


class ScatteringError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class ScatteringResult:
    """``s_matrix[out, in, freq]`` on ``omega_grid``.

    ``in_sites`` lists the array positions of the input columns.
    """

    omega_grid: np.ndarray
    s_matrix: np.ndarray
    kind: str
    in_sites: np.ndarray = None

    def __post_init__(self):
        w = np.asarray(self.omega_grid, float)
        s = np.asarray(self.s_matrix, complex)
        if np.any(np.diff(w) < 0):
            raise ValueError("omega grid must be sorted")
        if s.ndim != 3 or s.shape[2] != w.size:
            raise ValueError("s_matrix must be (out, in, freq)")
        ins = np.arange(s.shape[1]) if self.in_sites is None else np.asarray(self.in_sites, int)
        object.__setattr__(self, "omega_grid", w)
        object.__setattr__(self, "s_matrix", s)
        object.__setattr__(self, "in_sites", ins)

    def element(self, out, inp):
        col = int(np.nonzero(self.in_sites == inp)[0][0])
        return self.s_matrix[out, col]

    def to_csv(self, path, site_labels=None):
        """Columns ``omega_hz, out_site, in_site, re, im``."""
        labels = np.arange(self.s_matrix.shape[0]) if site_labels is None else site_labels
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["omega_hz", "out_site", "in_site", "re", "im"])
            for o in range(self.s_matrix.shape[0]):
                for c, i in enumerate(self.in_sites):
                    for f, v in zip(self.omega_grid, self.s_matrix[o, c]):
                        w.writerow([repr(float(f / (2 * math.pi))), int(labels[o]),
                                    int(labels[i]), repr(float(v.real)), repr(float(v.imag))])


@dataclass(frozen=True, eq=False)
class ChannelModel:
    """Lumped measurement-chain model.

    ``g_out`` and ``g_in`` are complex gains per site (scalars broadcast),
    ``t_out`` a uniform output delay, ``g_mm`` per-site lumped gains from
    the sum rule. ``omega_mod`` converts the delay into a per-site phase.
    """

    g_out: np.ndarray = 1.0
    g_in: np.ndarray = 1.0
    t_out: float = 0.0
    g_mm: np.ndarray = None
    omega_mod: float = 2 * math.pi * 155.1e6

    def __post_init__(self):
        for name in ("g_out", "g_in"):
            g = np.asarray(getattr(self, name), complex)
            if np.any(np.abs(g) == 0):
                raise ValueError(f"{name} must be nonzero")
            object.__setattr__(self, name, g)

    def output_factor(self, sites, kappa_e):
        """``-sqrt(kappa_e) G_out exp(i n Omega T_out)`` per site."""
        sites = np.asarray(sites)
        g = np.broadcast_to(self.g_out, sites.shape)
        return -np.sqrt(kappa_e) * g * np.exp(1j * sites * self.omega_mod * self.t_out)


def default_grid(center=0.0, half_span=2 * math.pi * 4e6, n=801):
    return center + np.linspace(-half_span, half_span, n)


def _resolvent_kernel(model, omega_grid, cols):
    h = build_hamiltonian(model)
    n = model.n_sites
    sk = np.sqrt(model.kappa_e)
    eye = np.eye(n)
    out = np.empty((n, len(cols), omega_grid.size), complex)
    rhs = sk[:, None] * eye[:, cols]
    for i, w in enumerate(omega_grid):
        a = h - w * eye
        cond = np.linalg.cond(a)
        if not np.isfinite(cond) or cond > 1e14:
            ev = np.linalg.eigvals(h)
            d = np.min(np.abs(ev - w))
            raise ScatteringError(f"resolvent singular at omega={w:.6g} rad/s "
                                  f"(nearest pole {d:.3g} rad/s away)")
        out[:, :, i] = 1j * sk[:, None] * np.linalg.solve(a, rhs)
    return out


def steady_state_s(model: LatticeModel, omega_grid) -> ScatteringResult:
    """``S(omega) = I + i sqrt(ke) (H - i kappa/2 - omega)^-1 sqrt(ke)``."""
    w = np.asarray(omega_grid, float)
    cols = list(range(model.n_sites))
    s = _resolvent_kernel(model, w, cols)
    s += np.eye(model.n_sites)[:, :, None]
    return ScatteringResult(w, s, "with_direct_reflection")


def transient_s(model: LatticeModel, initial_site=None, omega_grid=None) -> ScatteringResult:
    """Scattering with the direct reflection removed (steady minus identity).

    ``initial_site`` (relative index) restricts the result to one input
    column; ``None`` returns all columns.
    """
    w = default_grid() if omega_grid is None else np.asarray(omega_grid, float)
    if initial_site is None:
        cols = list(range(model.n_sites))
    else:
        i = model.index(initial_site)
        if model.kappa_e[i] == 0:
            raise ScatteringError(f"site {initial_site} has no external coupling")
        cols = [i]
    return ScatteringResult(w, _resolvent_kernel(model, w, cols), "transient", np.array(cols))


def transient_from_trace(out_field, dt, pad_to=None):
    """Fourier transform ``int_0^inf beta_out(t) exp(i omega t) dt`` of sampled output.

    ``out_field`` is ``(sites, times)`` sampled from ``t = 0+`` (first
    sample at ``t = 0``). Trapezoid weights are applied; returns
    ``(omega, spectrum)`` with omega sorted.
    """
    x = np.asarray(out_field, complex).copy()
    x[:, 0] *= 0.5
    n = x.shape[1] if pad_to is None else int(pad_to)
    spec = np.fft.ifft(x, n=n, axis=1) * n * dt
    omega = 2 * math.pi * np.fft.fftfreq(n, dt)
    order = np.argsort(omega)
    return omega[order], spec[:, order]


def _pv_integral(values, omega):
    return np.trapezoid(values, omega, axis=-1)


def kappa_e_from_integral(s_diag, omega_grid, tail_tol=0.05):
    """External loss rate from the reflection sum rule.

    ``S_mm - 1`` integrates over a symmetric window to ``-pi kappa_e`` in
    this sign convention (the transient reflection is a dip of depth
    ``2 kappa_e / kappa``). The antisymmetric imaginary part cancels in the
    principal value.

    Raises
    ------
    ScatteringError
        If the Lorentzian tails beyond the grid exceed ``tail_tol`` of the
        result.
    """
    s = np.asarray(s_diag, complex)
    w = np.asarray(omega_grid, float)
    val = -_pv_integral(s, w).real / math.pi
    if val == 0:
        return 0.0
    # a 1/omega^2 tail beyond distance L from the centre integrates to S(L) L
    p = np.abs(s.real)
    center = np.sum(p * w) / np.sum(p) if np.sum(p) > 0 else 0.5 * (w[0] + w[-1])
    tail = (abs(s[0].real) * abs(w[0] - center) + abs(s[-1].real) * abs(w[-1] - center)) / math.pi
    if tail > tail_tol * abs(val):
        raise ScatteringError(f"insufficient bandwidth: estimated tail {tail:.3g} "
                              f"vs integral {abs(val):.3g}")
    return val


def normalize_gains(raw_spectra, kappa_e, omega_grid, channel=None):
    """Per-site lumped gains and the symmetrized off-diagonal estimate.

    Parameters
    ----------
    raw_spectra : array, (sites, sites, freq)
        Measured transient spectra ``v_mn``.
    kappa_e : array
        External loss of each site.

    Returns
    -------
    channel : ChannelModel
        With ``g_mm`` filled in.
    normalized : array
        ``|sqrt(v_mn v_nm / (G_mm G_nn))|``.
    """
    v = np.asarray(raw_spectra, complex)
    ke = np.asarray(kappa_e, float)
    w = np.asarray(omega_grid, float)
    n = v.shape[0]
    g = np.empty(n, complex)
    for m in range(n):
        integral = -_pv_integral(v[m, m], w) / math.pi
        if abs(integral) == 0 or ke[m] == 0:
            raise ScatteringError(f"vanishing diagonal integral at site {m}")
        g[m] = integral / ke[m]
    norm = np.abs(np.sqrt(v * np.transpose(v, (1, 0, 2))
                          / (g[:, None, None] * g[None, :, None])))
    base = channel or ChannelModel()
    out = ChannelModel(base.g_out, base.g_in, base.t_out, g, base.omega_mod)
    return out, norm
