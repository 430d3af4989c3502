"""Circuit model of a CPW resonator terminated by a flux-tunable SQUID array.

Maps circuit constants and a flux drive onto mode frequencies, zero-point
phases at the SQUID end, and the tight-binding hopping rates produced by
parametric flux modulation.

Fluxes are normalized as ``f = pi * Phi / Phi_0`` (radians). Frequencies are
angular (rad/s) unless a name ends in ``_hz``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import constants as cs

HBAR = cs.hbar
#: reduced flux quantum hbar / 2e
PHI0_REDUCED = cs.hbar / (2 * cs.e)
#: flux quantum h / 2e
PHI0 = cs.h / (2 * cs.e)


class DeviceError(ValueError):
    """Invalid device or drive parameters."""


class RootBracketError(RuntimeError):
    """The mode equation has no sign change on the requested branch."""

    def __init__(self, n, lo, hi):
        super().__init__(f"no root of the mode equation on branch n={n}: "
                         f"y in ({lo:.6g}, {hi:.6g})")
        self.n = n
        self.bracket = (lo, hi)


class QuadratureError(RuntimeError):
    """Fourier quadrature of the drive did not converge."""

    def __init__(self, residual):
        super().__init__(f"drive quadrature did not converge (residual {residual:.3g})")
        self.residual = residual


def bessel_j1(x):
    """Bessel function of the first kind, order one, by its power series.

    Accurate to double precision for ``|x| <= 8``, which covers every
    physical modulation depth (``|delta f| < pi/4``).
    """
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 8):
        raise ValueError("series evaluation of J1 is limited to |x| <= 8")
    half = x / 2
    term = half.copy()
    total = term.copy()
    q = -half * half
    for m in range(1, 40):
        term = term * q / (m * (m + 1))
        total = total + term
    return total if total.ndim else float(total)


@dataclass(frozen=True)
class DeviceParams:
    """Circuit constants of the resonator (the tuning-fit parameter set).

    Parameters
    ----------
    omega_rt : float
        Round-trip frequency ``pi v_p / d`` in rad/s.
    A : float
        Inductance ratio ``l d / L_s0``.
    B : float
        Capacitance ratio ``c d / C_s``. ``math.inf`` disables the
        capacitive term.
    Z0 : float
        CPW wave impedance in ohm.
    n_squid : int
        Number of SQUIDs in the termination.
    """

    omega_rt: float
    A: float
    B: float
    Z0: float = 50.0
    n_squid: int = 8

    def __post_init__(self):
        if not self.omega_rt > 0:
            raise DeviceError("omega_rt must be positive")
        if self.A < 0 or not self.B > 0:
            raise DeviceError("need A >= 0 and B > 0")
        if not self.Z0 > 0:
            raise DeviceError("Z0 must be positive")
        if self.n_squid < 1:
            raise DeviceError("n_squid must be >= 1")

    @property
    def omega_plasma(self):
        """SQUID-array plasma frequency ``omega_rt sqrt(A B) / pi``."""
        return self.omega_rt * math.sqrt(self.A * self.B) / math.pi

    @property
    def l_s0(self):
        """Minimum Josephson inductance of the whole array (henry)."""
        # l*d = pi Z0 / omega_rt
        return math.pi * self.Z0 / (self.omega_rt * self.A)

    @property
    def ej0(self):
        """Maximum Josephson energy of the array, in rad/s."""
        return PHI0_REDUCED**2 / (HBAR * self.l_s0)

    @property
    def zp_scale(self):
        """``sqrt(hbar Z0) / phi_0``, the dimensionless zero-point phase scale."""
        return math.sqrt(HBAR * self.Z0) / PHI0_REDUCED

    def squid_array(self, d_sq2=0.0, eta0=0.0):
        """Identical SQUIDs whose series inductance equals ``l_s0``."""
        n = self.n_squid
        return SquidArray(np.full(n, self.l_s0 / n), np.full(n, math.sqrt(d_sq2)),
                          np.full(n, float(eta0)))


@dataclass(frozen=True)
class TuningCalibration:
    """Linear map from flux-line bias voltage to normalized flux.

    ``f(V) = g_volt * (V - v_ss)``; ``r_tot`` and ``mutual`` are kept for
    bookkeeping only.
    """

    g_volt: float
    v_ss: float
    r_tot: float = 4e3
    mutual: float = float("nan")

    def __post_init__(self):
        if self.g_volt == 0:
            raise DeviceError("g_volt must be nonzero (flux map must be monotone)")

    def flux(self, v):
        return self.g_volt * (np.asarray(v, dtype=float) - self.v_ss)

    @property
    def period(self):
        """Voltage period of the tuning curve, ``pi / |G|``."""
        return math.pi / abs(self.g_volt)


@dataclass(frozen=True, eq=False)
class SquidArray:
    """Series array of asymmetric SQUIDs.

    Parameters
    ----------
    lj0 : array_like
        Minimum Josephson inductance of each SQUID (henry).
    d_n : array_like
        Junction asymmetry of each SQUID, ``|d_n| < 1``.
    eta0_n : array_like, optional
        Residual phase offsets (rad); zero by default.
    """

    lj0: np.ndarray
    d_n: np.ndarray
    eta0_n: np.ndarray = None

    def __post_init__(self):
        lj0 = np.atleast_1d(np.asarray(self.lj0, dtype=float))
        d_n = np.broadcast_to(np.asarray(self.d_n, dtype=float), lj0.shape).copy()
        eta = (np.zeros_like(lj0) if self.eta0_n is None else
               np.broadcast_to(np.asarray(self.eta0_n, dtype=float), lj0.shape).copy())
        if np.any(lj0 <= 0):
            raise DeviceError("all lj0 must be positive")
        if np.any(np.abs(d_n) >= 1):
            raise DeviceError("asymmetries must satisfy |d_n| < 1")
        object.__setattr__(self, "lj0", lj0)
        object.__setattr__(self, "d_n", d_n)
        object.__setattr__(self, "eta0_n", eta)

    @classmethod
    def uniform(cls, n, lj0, d=0.0):
        return cls(np.full(n, float(lj0)), np.full(n, float(d)))

    @classmethod
    def random(cls, n, lj0_mean, lj0_spread, d_max, seed=0):
        """Disordered array with uniform draws around the nominal values."""
        rng = np.random.default_rng(seed)
        lj0 = lj0_mean * (1 + lj0_spread * rng.uniform(-1, 1, n))
        return cls(lj0, rng.uniform(-d_max, d_max, n))

    @property
    def n(self):
        return self.lj0.size

    @property
    def l_total(self):
        return float(self.lj0.sum())

    @property
    def d_sq2(self):
        """Effective asymmetry ``<z_n(0) d_n^2>`` weighted by inductance."""
        return float(np.sum(self.lj0 * self.d_n**2) / self.lj0.sum())

    def max_disorder_term(self, f):
        """``max_n d_n^2 tan^2 f``, the small parameter of the single-SQUID model."""
        return float(np.max(self.d_n**2) * math.tan(f) ** 2)


@dataclass(frozen=True)
class FluxDrive:
    """DC flux bias plus a periodic modulation.

    ``f(t) = f_dc + sum_j df_j cos(k_j * omega_mod * t + theta_j)``.
    ``harmonics`` is a sequence of ``(k, df, theta)`` triples.
    """

    f_dc: float
    harmonics: tuple = ()
    omega_mod: float = 2 * math.pi * 155.1e6

    def __post_init__(self):
        hs = tuple((int(k), float(a), float(th)) for k, a, th in self.harmonics)
        if any(k < 1 for k, _, _ in hs):
            raise DeviceError("harmonic orders must be >= 1")
        if sum(abs(a) for _, a, _ in hs) >= math.pi / 4:
            raise DeviceError("total modulation depth must stay below pi/4 (Phi_AC < Phi_0/4)")
        object.__setattr__(self, "harmonics", hs)

    @classmethod
    def single_tone(cls, f_dc, df, omega_mod, theta=0.0):
        return cls(f_dc, ((1, df, theta),), omega_mod)

    def flux(self, t):
        t = np.asarray(t, dtype=float)
        out = np.full_like(t, self.f_dc)
        for k, a, th in self.harmonics:
            out = out + a * np.cos(k * self.omega_mod * t + th)
        return out

    def check_margin(self, margin):
        """Raise if the DC bias sits within ``margin`` of a half-flux pole."""
        check_flux_margin(self.f_dc, margin)


def check_flux_margin(f, margin):
    if margin <= 0:
        return
    dist = abs(abs(math.remainder(f, math.pi)) - math.pi / 2)
    if dist < margin:
        raise DeviceError(f"flux {f:.4g} rad lies within {margin:.3g} rad of the "
                          "half-flux pole where the array expansion fails")


@dataclass(frozen=True, eq=False)
class ModeSpectrum:
    """Solved resonator modes at a fixed DC flux."""

    indices: np.ndarray
    y_n: np.ndarray
    omega_n: np.ndarray
    phi_zp: np.ndarray
    a_tilde: float = field(default=float("nan"))

    def index_of(self, n):
        pos = np.nonzero(self.indices == n)[0]
        if pos.size == 0:
            raise KeyError(f"mode {n} not in spectrum")
        return int(pos[0])

    def fsr(self):
        """Spacings ``omega_{n+1} - omega_n``."""
        return np.diff(self.omega_n)


def a_tilde(A, d_sq2, f):
    return A * np.sqrt(np.cos(f) ** 2 + d_sq2 * np.sin(f) ** 2)


def mode_residual(y, at, B):
    """``tan y + y/B - Ã/y``; zero at a resonance."""
    return np.tan(y) + y / B - at / y


def _solve_branch(n, at, B):
    # tan y + y/B - Ã/y is increasing on each branch ((n-1/2)pi, (n+1/2)pi);
    # h below is the same function times |cos y|, which is finite at the ends
    sgn = -1.0 if n % 2 else 1.0
    lo = (n - 0.5) * math.pi if n > 0 else 0.0
    hi = (n + 0.5) * math.pi

    def h(y):
        return sgn * (math.sin(y) + math.cos(y) * (y / B - at / y))

    a, b = lo, hi
    if n == 0:
        # h(0+) = -Ã/y -> -inf; walk down to a finite left end
        if at <= 0:
            raise RootBracketError(n, lo, hi)
        a = min(1e-3, at)
        while h(a) >= 0:
            a *= 0.5
            if a < 1e-300:
                raise RootBracketError(n, lo, hi)
    elif not (h(a) < 0 < h(b)):
        raise RootBracketError(n, lo, hi)
    for _ in range(200):
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        if h(mid) < 0:
            a = mid
        else:
            b = mid
    y = 0.5 * (a + b)
    for _ in range(3):
        c = math.cos(y)
        if c == 0:
            break
        f = math.tan(y) + y / B - at / y
        df = 1 / c**2 + 1 / B + at / y**2
        step = f / df
        if not (lo < y - step < hi):
            break
        y -= step
    return y


def solve_mode_frequencies(params: DeviceParams, squids: SquidArray, f_dc: float,
                           n_range, margin: float = 0.0) -> ModeSpectrum:
    """Solve the round-trip mode condition for a set of mode numbers.

    For each ``n`` the root of ``tan y + y/B = Ã(F)/y`` is found on the
    monotone branch around ``n pi`` by bisection with a Newton polish.
    ``omega_n = y_n omega_rt / pi``.

    Parameters
    ----------
    params : DeviceParams
    squids : SquidArray
        Supplies the effective asymmetry ``d_sq^2``.
    f_dc : float
        Normalized DC flux in rad.
    n_range : iterable of int
        Mode numbers (non-negative).
    margin : float
        Minimum distance of ``f_dc`` from the half-flux pole, in rad.

    Raises
    ------
    RootBracketError
        If a branch holds no root.
    DeviceError
        If ``f_dc`` violates ``margin``.
    """
    ns = np.array(sorted(set(int(n) for n in n_range)), dtype=int)
    if ns.size == 0:
        raise DeviceError("n_range is empty")
    if ns[0] < 0:
        raise DeviceError("mode numbers must be non-negative")
    check_flux_margin(f_dc, margin)
    at = float(a_tilde(params.A, squids.d_sq2, f_dc))
    y = np.array([_solve_branch(int(n), at, params.B) for n in ns])
    omega = y * params.omega_rt / math.pi
    phi = _phi_zp(params, at, y)
    return ModeSpectrum(ns, y, omega, phi, at)


def _phi_zp(params, at, y):
    c = np.cos(y)
    return params.zp_scale * c / np.sqrt(y + (at / y + y / params.B) * c**2)


def zero_point_phase(params, squids, f_dc, n):
    """Zero-point phase amplitude at the SQUID end for mode ``n``.

    ``phi_zp = s cos(y) / sqrt(y + (Ã/y + y/B) cos^2 y)`` with
    ``s = sqrt(hbar Z0) / phi_0``. The sign follows ``cos(y_n)``, so it
    alternates between neighbouring modes.
    """
    spec = solve_mode_frequencies(params, squids, f_dc, [n])
    return float(spec.phi_zp[0])


def tuning_curve(params, squids, calib: TuningCalibration, n, v):
    """Frequency of mode ``n`` (rad/s) at flux-line bias ``v`` (volts).

    Uses the tuning model over the full flux period, so no validity margin
    is applied.
    """
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if not np.all(np.isfinite(v)):
        raise DeviceError("bias voltages must be finite")
    d2 = squids.d_sq2
    out = np.empty_like(v)
    for i, f in enumerate(calib.flux(v)):
        at = float(a_tilde(params.A, d2, f))
        out[i] = _solve_branch(int(n), at, params.B) * params.omega_rt / math.pi
    return out


def effective_ej(squids: SquidArray, f, mode="single_squid", units="J", margin=0.0):
    """Effective Josephson energy of the array at normalized flux ``f``.

    Parameters
    ----------
    mode : {"full_sum", "single_squid"}
        ``full_sum`` adds the SQUID inductances exactly; ``single_squid``
        is the lumped approximation
        ``phi_0^2 / (N <L_J0>) sqrt(cos^2 f + d_sq^2 sin^2 f)``.
    units : {"J", "rad/s", "Hz"}
    margin : float
        Validity margin (rad) enforced in ``single_squid`` mode.
    """
    f = np.asarray(f, dtype=float)
    if mode == "single_squid":
        for fi in np.atleast_1d(f):
            check_flux_margin(float(fi), margin)
        ej = PHI0_REDUCED**2 / squids.l_total * np.sqrt(np.cos(f) ** 2
                                                        + squids.d_sq2 * np.sin(f) ** 2)
    elif mode == "full_sum":
        c = np.cos(f)[..., None]
        s = np.sin(f)[..., None]
        # |cos f| sqrt(1 + d^2 tan^2 f) written without the tangent pole
        per = np.sqrt(c**2 + squids.d_n**2 * s**2)
        if np.any(per == 0):
            raise DeviceError("full_sum diverges at half flux for a symmetric SQUID")
        ej0_n = PHI0_REDUCED**2 / squids.lj0
        ej = 1.0 / np.sum(1.0 / (ej0_n * per), axis=-1)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return _energy_units(ej, units)


def _energy_units(ej, units):
    if units == "J":
        return ej
    if units == "rad/s":
        return ej / HBAR
    if units == "Hz":
        return ej / cs.h
    raise ValueError(f"unknown units {units!r}")


def voltage_divider(squids: SquidArray, f):
    """Linear voltage-divider coefficients of the array at flux ``f``.

    Returns ``(z, x)`` with ``phi_n = x_n + z_n phi_d``. ``z`` sums to one.
    """
    eta = np.arctan(squids.d_n * math.tan(f)) + squids.eta0_n
    ej0_n = PHI0_REDUCED**2 / squids.lj0
    ej_n = ej0_n * np.sqrt(math.cos(f) ** 2 + squids.d_n**2 * math.sin(f) ** 2)
    l_i = PHI0_REDUCED**2 / (ej_n * np.cos(eta))
    z = l_i / l_i.sum()
    x = np.tan(eta) - z * np.tan(eta).sum()
    return z, x


@dataclass(frozen=True, eq=False)
class DriveCoefficients:
    """Fourier cosine coefficients of ``D(t) = (E_J(f(t)) - E_J(F)) / 2``.

    ``D(t) = sum_k d[k] cos(k Omega t + theta[k])`` with ``d[0]`` signed and
    ``d[k >= 1] >= 0``. Units rad/s.
    """

    d: np.ndarray
    theta: np.ndarray
    residual: float = 0.0

    def complex(self, k):
        """``d_k exp(i theta_k)``, the factor entering ``J_{m,m+k}`` for ``k > 0``."""
        return self.d[k] * np.exp(1j * self.theta[k])


def derive_drive_coefficients(squids: SquidArray, drive: FluxDrive, k_max: int,
                              n_points=4096, mode="single_squid", tol=1e-9,
                              margin=0.0) -> DriveCoefficients:
    """Fourier-analyse the modulated Josephson energy over one period.

    The trapezoid rule on a periodic integrand is spectrally accurate; the
    result is compared against a half-resolution evaluation and
    :class:`QuadratureError` is raised when they differ by more than
    ``tol`` relative to the largest coefficient.
    """
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    drive.check_margin(margin)
    ej_dc = float(effective_ej(squids, drive.f_dc, mode, "rad/s"))

    def coeffs(npts):
        tau = 2 * math.pi * np.arange(npts) / npts
        f_t = drive.f_dc + sum(a * np.cos(k * tau + th) for k, a, th in drive.harmonics)
        d_t = (effective_ej(squids, f_t, mode, "rad/s") - ej_dc) / 2
        c = np.fft.fft(d_t) / npts
        return c[: k_max + 1]

    full = coeffs(n_points)
    half = coeffs(n_points // 2)
    scale = max(np.max(np.abs(full)), 1e-300)
    residual = float(np.max(np.abs(full - half)) / scale) if np.any(full) else 0.0
    if residual > tol:
        raise QuadratureError(residual)
    d = np.empty(k_max + 1)
    theta = np.zeros(k_max + 1)
    d[0] = full[0].real
    # D cos(k tau + th) contributes (D/2) e^{i th} to fft bin k
    ck = 2 * full[1:]
    d[1:] = np.abs(ck)
    theta[1:] = np.angle(ck)
    theta[1:][d[1:] == 0] = 0.0
    return DriveCoefficients(d, theta, residual)


def coupling_rates(spectrum: ModeSpectrum, drive_coeffs: DriveCoefficients, k: int):
    """Hopping rates ``J_{m,m+k}`` (rad/s) for all ``m`` in the spectrum.

    ``J_{m,m+k} = D_|k| phi_m phi_{m+k} exp(i theta_|k| sgn k)``. Entry
    ``i`` couples ``spectrum.indices[i]`` to ``spectrum.indices[i] + k``.
    """
    ak = abs(k)
    if ak == 0:
        raise ValueError("use static_shift for k = 0")
    if ak >= drive_coeffs.d.size:
        raise ValueError(f"drive coefficients only computed up to k={drive_coeffs.d.size - 1}")
    phi = spectrum.phi_zp
    if np.any(np.diff(spectrum.indices) != 1):
        raise ValueError("spectrum indices must be contiguous")
    n = phi.size - ak
    if n <= 0:
        return np.zeros(0, dtype=complex)
    phase = np.exp(1j * drive_coeffs.theta[ak] * np.sign(k))
    return drive_coeffs.d[ak] * phi[:n] * phi[ak:] * phase


def static_shift(spectrum: ModeSpectrum, drive_coeffs: DriveCoefficients):
    """On-site frequency shift from the time-averaged modulation (rad/s).

    Both counter-rotating exponentials of the ``k = 0`` term survive the
    rotating-wave approximation, so the shift is ``2 D_0 phi_m^2``.
    """
    return 2 * drive_coeffs.d[0] * spectrum.phi_zp**2


# Tuning-fit values of the measured device.
TABLE_I = {
    "g_over_pi": 0.0796,        # 1/V
    "v_ss": 4.481,              # V
    "omega_rt_hz": 155.52e6,
    "A": 40.11,
    "B": 4479.0,
    "d_sq2_max": 0.01,
    "omega_s_hz": 21.0e9,
}


def table_one(d_sq2=0.01, n_squid=8):
    """Device, SQUID array and calibration with the published fit values."""
    params = DeviceParams(2 * math.pi * TABLE_I["omega_rt_hz"], TABLE_I["A"], TABLE_I["B"],
                          Z0=50.0, n_squid=n_squid)
    calib = TuningCalibration(math.pi * TABLE_I["g_over_pi"], TABLE_I["v_ss"])
    return params, params.squid_array(d_sq2), calib
