"""Rotating-frame tight-binding model of the modulated resonator."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .device import (DeviceParams, FluxDrive, SquidArray, coupling_rates,
                     derive_drive_coefficients, solve_mode_frequencies, static_shift)


@dataclass(frozen=True, eq=False)
class LatticeModel:
    """On-site detunings, losses and hoppings of the synthetic lattice.

    Site ``i`` carries relative index ``sites[i]``; ``n_abs`` is the
    absolute mode number of relative site 0. ``couplings[k][i]`` is
    ``J_{i, i+k}`` in array positions.
    """

    delta: np.ndarray
    kappa_e: np.ndarray
    kappa_i: np.ndarray
    couplings: dict = field(default_factory=dict)
    sites: np.ndarray = None
    n_abs: int = 0

    def __post_init__(self):
        delta = np.asarray(self.delta, dtype=float).copy()
        n = delta.size
        ke = np.broadcast_to(np.asarray(self.kappa_e, dtype=float), (n,)).copy()
        ki = np.broadcast_to(np.asarray(self.kappa_i, dtype=float), (n,)).copy()
        if np.any(ke < 0) or np.any(ki < 0):
            raise ValueError("loss rates must be non-negative")
        cpl = {}
        for k, arr in self.couplings.items():
            k = int(k)
            if k < 1:
                raise ValueError("coupling distances must be >= 1")
            a = np.asarray(arr, dtype=complex)
            if a.ndim == 0:
                a = np.full(max(n - k, 0), complex(a))
            if a.size != n - k:
                raise ValueError(f"coupling array for k={k} must have length {n - k}")
            cpl[k] = a.copy()
        sites = (np.arange(n) - n // 2) if self.sites is None else np.asarray(self.sites, dtype=int)
        if sites.size != n:
            raise ValueError("sites must match the number of detunings")
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "kappa_e", ke)
        object.__setattr__(self, "kappa_i", ki)
        object.__setattr__(self, "couplings", cpl)
        object.__setattr__(self, "sites", sites.copy())

    @property
    def n_sites(self):
        return self.delta.size

    @property
    def kappa(self):
        return self.kappa_e + self.kappa_i

    def index(self, site):
        pos = np.nonzero(self.sites == site)[0]
        if pos.size == 0:
            raise KeyError(f"site {site} not in lattice")
        return int(pos[0])

    def with_couplings(self, couplings):
        return replace(self, couplings=couplings)

    def without_couplings(self):
        return replace(self, couplings={})

    def scaled_couplings(self, factor=1.0, phase=0.0):
        """Hoppings multiplied by ``factor * exp(i k phase)``.

        A shift ``phase`` of the modulation phase enters harmonic ``k`` as
        ``k * phase``.
        """
        return replace(self, couplings={k: factor * np.exp(1j * k * phase) * v
                                        for k, v in self.couplings.items()})

    def to_dict(self):
        return {
            "n_abs": int(self.n_abs),
            "sites": self.sites.tolist(),
            "delta": self.delta.tolist(),
            "kappa_e": self.kappa_e.tolist(),
            "kappa_i": self.kappa_i.tolist(),
            "couplings": {str(k): {"re": v.real.tolist(), "im": v.imag.tolist()}
                          for k, v in sorted(self.couplings.items())},
        }

    @classmethod
    def from_dict(cls, d):
        cpl = {int(k): np.asarray(v["re"]) + 1j * np.asarray(v["im"])
               for k, v in d.get("couplings", {}).items()}
        return cls(np.asarray(d["delta"]), np.asarray(d["kappa_e"]), np.asarray(d["kappa_i"]),
                   cpl, np.asarray(d["sites"]), int(d.get("n_abs", 0)))

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=1, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    @classmethod
    def from_json(cls, text_or_path):
        text = str(text_or_path)
        if not text.lstrip().startswith("{"):
            with open(text) as fh:
                text = fh.read()
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class DisorderSpec:
    """Random on-site disorder plus explicit barrier sites.

    ``barrier_sites`` holds ``(site, delta, kappa_extra)`` triples, with
    ``site`` a relative index; values in rad/s.
    """

    seed: int = 0
    delta_sigma: float = 0.0
    kappa_spread: float = 0.0
    barrier_sites: tuple = ()


def uniform_chain(n_sites, j, kappa_e=0.0, kappa_i=0.0, delta=0.0, sites=None, n_abs=0):
    """Translation-invariant nearest-neighbour chain."""
    return LatticeModel(np.full(n_sites, float(delta)), kappa_e, kappa_i,
                        {1: np.full(n_sites - 1, complex(j))}, sites, n_abs)


def build_hamiltonian(model: LatticeModel):
    """Effective non-Hermitian matrix ``H - i kappa / 2``.

    Diagonal ``Delta_m - i kappa_m / 2``; ``H[m, m+k] = J_{m,m+k}`` and
    ``H[m+k, m] = conj(J_{m,m+k})``.
    """
    n = model.n_sites
    h = np.diag(model.delta - 0.5j * model.kappa).astype(complex)
    idx = np.arange(n)
    for k, j in model.couplings.items():
        if j.size:
            h[idx[:-k], idx[k:]] += j
            h[idx[k:], idx[:-k]] += np.conj(j)
    return h


def bloch_ladder(model: LatticeModel, detuning: float) -> LatticeModel:
    """Add a linear on-site gradient ``n * detuning`` (``n`` relative to site 0)."""
    return replace(model, delta=model.delta + model.sites * detuning)


def apply_disorder(model: LatticeModel, spec: DisorderSpec) -> LatticeModel:
    """Gaussian detuning draws, loss spread, and barrier overrides."""
    rng = np.random.default_rng(spec.seed)
    n = model.n_sites
    delta = model.delta + spec.delta_sigma * rng.standard_normal(n)
    scale = 1 + spec.kappa_spread * rng.uniform(-1, 1, n)
    ki = model.kappa_i * np.clip(scale, 0, None)
    for site, d, kx in spec.barrier_sites:
        if site in model.sites:
            i = model.index(site)
            delta[i] += d
            ki[i] += kx
    return replace(model, delta=delta, kappa_i=ki)


def from_device(params: DeviceParams, squids: SquidArray, drive: FluxDrive, site_window,
                n0: int, kappa_e=0.0, kappa_i=0.0, omega0=None, k_max=2,
                include_static_shift=True, spectrum=None, drive_coeffs=None) -> LatticeModel:
    """Compose solved modes and drive coefficients into a lattice.

    Parameters
    ----------
    site_window : (int, int)
        Inclusive range of relative site indices.
    n0 : int
        Absolute mode number of relative site 0.
    omega0 : float, optional
        Rotating-frame frequency of site 0; defaults to the bare frequency
        of mode ``n0``.
    k_max : int
        Highest hopping distance kept.

    Returns
    -------
    LatticeModel
        ``Delta_m = omega_m - (omega0 + m Omega)`` (plus the static
        modulation shift when requested) and hoppings up to ``k_max``.
    """
    lo, hi = site_window
    rel = np.arange(lo, hi + 1)
    absn = rel + n0
    if absn[0] < 0:
        raise ValueError("site window reaches below mode 0")
    if spectrum is None:
        spectrum = solve_mode_frequencies(params, squids, drive.f_dc, absn)
    else:
        if not np.all(np.isin(absn, spectrum.indices)):
            raise ValueError("site window is not covered by the supplied spectrum")
        keep = np.isin(spectrum.indices, absn)
        spectrum = type(spectrum)(spectrum.indices[keep], spectrum.y_n[keep],
                                  spectrum.omega_n[keep], spectrum.phi_zp[keep],
                                  spectrum.a_tilde)
    if drive_coeffs is None:
        drive_coeffs = derive_drive_coefficients(squids, drive, k_max)
    if omega0 is None:
        omega0 = spectrum.omega_n[spectrum.index_of(n0)]
    delta = spectrum.omega_n - (omega0 + rel * drive.omega_mod)
    if include_static_shift:
        delta = delta + static_shift(spectrum, drive_coeffs)
    cpl = {}
    for k in range(1, k_max + 1):
        if k < drive_coeffs.d.size and rel.size > k:
            cpl[k] = coupling_rates(spectrum, drive_coeffs, k)
    return LatticeModel(delta, kappa_e, kappa_i, cpl, rel, n0)

