"""Wavepacket launch and centroid tracking."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class BoundaryError(ValueError):
    pass


@dataclass(frozen=True)
class WavepacketSpec:
    """Truncated Gaussian with a phase gradient.

    Nonzero only for ``|n - center| <= (n_sites - 1) // 2``. ``norm`` is
    the target 2-norm of the packet.
    """

    sigma: float
    k_eff: float
    n_sites: int = 5
    center: int = 0
    norm: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.n_sites < 1:
            raise ValueError("n_sites must be >= 1")


def make_wavepacket(spec: WavepacketSpec, sites=None, theta_mod=0.0):
    """Site amplitudes ``N0 exp(-(n - mu)^2 / 2 sigma^2) exp(i k n)``.

    ``k = k_eff - theta_mod``: the effective quasimomentum includes the
    hopping phase, so the on-chip gradient is shifted by it. ``sites``
    defaults to the packet window itself.
    """
    half = (spec.n_sites - 1) // 2
    if sites is None:
        sites = np.arange(spec.center - half, spec.center - half + spec.n_sites)
    n = np.asarray(sites, float)
    d = n - spec.center
    inside = (d >= -half) & (d <= spec.n_sites - 1 - half)
    env = np.where(inside, np.exp(-d**2 / (2 * spec.sigma**2)), 0.0)
    beta = env * np.exp(1j * (spec.k_eff - theta_mod) * n)
    nrm = np.linalg.norm(beta)
    if nrm == 0:
        raise ValueError("packet window does not overlap the given sites")
    return spec.norm * beta / nrm


def centroid(trace):
    """Population-weighted mean site at every sample."""
    p = np.abs(trace.amps) ** 2
    tot = p.sum(axis=0)
    return (trace.sites[:, None] * p).sum(axis=0) / np.where(tot > 0, tot, 1)


def spread(trace):
    """Population-weighted standard deviation of the site index."""
    p = np.abs(trace.amps) ** 2
    tot = np.where(p.sum(axis=0) > 0, p.sum(axis=0), 1)
    c = (trace.sites[:, None] * p).sum(axis=0) / tot
    return np.sqrt(((trace.sites[:, None] - c) ** 2 * p).sum(axis=0) / tot)


def group_velocity(trace, sigma=None, barriers=(), guard=2.0, min_points=5):
    """Slope of the centroid (sites/s) while the packet is clear of boundaries.

    The fit window starts at ``t = 0`` and ends when the centroid comes
    within ``guard * sigma`` sites of an edge of the trace or of a
    ``barriers`` site. ``sigma`` defaults to the initial spread.

    Raises
    ------
    BoundaryError
        If fewer than ``min_points`` samples precede the first contact.
    """
    c = centroid(trace)
    sig = float(spread(trace)[0]) if sigma is None else float(sigma)
    walls = [trace.sites.min(), trace.sites.max()] + list(barriers)
    c0 = c[0]
    lo = max([w for w in walls if w <= c0], default=-math.inf)
    hi = min([w for w in walls if w >= c0], default=math.inf)
    ok = (c > lo + guard * sig) & (c < hi - guard * sig)
    bad = np.nonzero(~ok)[0]
    end = bad[0] if bad.size else c.size
    if end < min_points:
        raise BoundaryError("packet touches a boundary before the fit window opens")
    slope = np.polyfit(trace.times[:end], c[:end], 1)[0]
    return float(slope)
