"""Command-line front end.

Exit status: 0 on success, 2 for invalid input (schema violations,
missing files), 3 for numerical failures.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import re
import shutil
import sys
import tempfile
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (BandFitError, BoundaryError, CalibrationError, FitError,
                       calibrate_phases, centroid, defect_scattering, extract_dispersion,
                       fit_tuning, group_velocity, simulate_transmission)
from .config import ConfigError, build_initial, build_lattice, build_sequence, load_experiment
from .device import DeviceError, QuadratureError, RootBracketError, table_one, tuning_curve
from .dynamics import (IntegratorError, SiteTimeTrace, bloch_oscillate, bloch_period,
                       run_sequence, state_fidelity, time_reverse_protocol)
from .lattice import DisorderSpec, apply_disorder, uniform_chain
from .scattering import ScatteringError, ScatteringResult, default_grid, transient_s
from .svg import heatmap

TWO_PI = 2 * math.pi
NUMERICAL_ERRORS = (RootBracketError, QuadratureError, IntegratorError, ScatteringError,
                    FitError, BandFitError, BoundaryError, CalibrationError,
                    np.linalg.LinAlgError, FloatingPointError)

_UNITS = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "ns": 1e-9}


def parse_duration(text):
    """``"0.5us"`` -> 5e-7; a bare number is seconds."""
    m = re.fullmatch(r"\s*([-+0-9.eE]+)\s*([a-zµ]*)\s*", str(text))
    if not m or m.group(2) not in ("",) + tuple(_UNITS):
        raise argparse.ArgumentTypeError(f"bad duration {text!r}")
    return float(m.group(1)) * _UNITS.get(m.group(2) or "s")


def parse_angle(text):
    """``"0.5pi"``, ``"pi/2"``, ``"-0.2pi"`` or plain radians."""
    s = str(text).replace(" ", "").lower()
    m = re.fullmatch(r"([-+]?[0-9.eE]*)\*?pi(?:/([0-9.]+))?", s)
    if m:
        coef = m.group(1)
        c = 1.0 if coef in ("", "+") else -1.0 if coef == "-" else float(coef)
        return c * math.pi / (float(m.group(2)) if m.group(2) else 1.0)
    try:
        return float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad angle {text!r}") from None


def n_threads():
    """Worker cap from ``SYNTHLAT_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("SYNTHLAT_THREADS", "1")))
    except ValueError:
        return 1


def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _dump(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


class ArtifactWriter:
    """Stages artifacts in a scratch directory and publishes them with a manifest.

    Nothing appears at the destination unless :meth:`commit` runs, so a
    failed run leaves no partial output.
    """

    def __init__(self, dest):
        self.dest = Path(dest)
        if self.dest.exists() and not (self.dest / "manifest.json").is_file():
            if any(self.dest.iterdir()):
                raise ConfigError(f"output directory {self.dest} exists and is not a synthlat output")
        self.dest.parent.mkdir(parents=True, exist_ok=True)
        self.stage = Path(tempfile.mkdtemp(prefix=".synthlat-", dir=self.dest.parent))
        self.files = []

    def path(self, name):
        self.files.append(name)
        return self.stage / name

    def commit(self, meta):
        entries = [{"file": f, "bytes": (self.stage / f).stat().st_size,
                    "sha256": sha256(self.stage / f)} for f in sorted(self.files)]
        _dump(self.stage / "manifest.json", {"files": entries, **meta})
        os.chmod(self.stage, 0o755)
        if self.dest.exists():
            shutil.rmtree(self.dest)
        os.replace(self.stage, self.dest)
        return entries

    def abort(self):
        shutil.rmtree(self.stage, ignore_errors=True)


def _scatter_parallel(model, site, grid):
    chunks = [c for c in np.array_split(grid, n_threads()) if c.size]
    with ThreadPoolExecutor(max_workers=n_threads()) as pool:
        parts = list(pool.map(lambda g: transient_s(model, site, g), chunks))
    return ScatteringResult(grid, np.concatenate([p.s_matrix for p in parts], axis=2),
                            "transient", parts[0].in_sites)


def _trace_svg(trace, title):
    return heatmap(np.abs(trace.amps) ** 2, trace.times * 1e6, trace.sites, title,
                   "time (us)", "site")


def _analysis_bloch(model, trace):
    grad = np.diff(model.delta)
    det = float(np.median(grad)) if grad.size else 0.0
    tb = bloch_period(det)
    c = centroid(trace)
    c = c - c.mean()
    dt = trace.times[1] - trace.times[0]
    n = 8 * c.size
    spec = np.abs(np.fft.rfft(c, n=n))
    f = np.fft.rfftfreq(n, dt)
    spec[0] = 0
    f_peak = float(f[int(np.argmax(spec))])
    span = float(trace.times[-1] - trace.times[0])
    return {"detuning_hz": det / TWO_PI, "bloch_period_s": tb,
            "periods_in_window": span / tb if math.isfinite(tb) else 0.0,
            "centroid_peak_hz": f_peak,
            "centroid_swing_sites": float(np.ptp(c))}


def execute_experiment(doc, out_dir, analyses=True):
    """Simulate one validated experiment and write its artifacts."""
    model = build_lattice(doc)
    seq = build_sequence(doc)
    beta0 = build_initial(doc, model)
    dt = doc.get("dt_s", 2e-9)
    writer = ArtifactWriter(out_dir)
    try:
        full = run_sequence(model, seq, dt=dt, beta0=beta0)
        t0 = doc["sequence"].get("record_from_s", 0.0)
        trace = full.window(t0 - 1e-3 * dt)
        trace = SiteTimeTrace(trace.times - trace.times[0], trace.sites, trace.amps, trace.outputs)
        model.to_json(writer.path("lattice.json"))
        trace.to_csv(writer.path("trace.csv"))
        trace.to_csv(writer.path("output.csv"), which="outputs")
        with open(writer.path("trace.svg"), "w") as fh:
            fh.write(_trace_svg(trace, f"{doc['name']}: |beta_n(t)|^2"))
        summary = {"name": doc["name"], "n_sites": model.n_sites, "dt_s": dt,
                   "duration_s": seq.duration, "record_from_s": t0,
                   "final_norm": float(np.linalg.norm(trace.amps[:, -1]))}
        for req in (doc.get("analyses", []) if analyses else []):
            kind = req["type"]
            if kind == "dispersion":
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", RuntimeWarning)
                    res = extract_dispersion(trace, model=req.get("model", "nn"))
                res.to_csv(writer.path("dispersion.csv"))
                res.to_json(writer.path("dispersion.json"))
                with open(writer.path("dispersion.svg"), "w") as fh:
                    fh.write(heatmap(res.power.T, res.k_grid / math.pi, res.omega_grid / TWO_PI / 1e6,
                                     "dispersion power", "k / pi", "omega / 2pi (MHz)"))
                summary["dispersion"] = res.fit
            elif kind == "group_velocity":
                v = group_velocity(trace, barriers=req.get("barriers", []))
                summary["group_velocity_sites_per_s"] = v
            elif kind == "bloch":
                summary["bloch"] = _analysis_bloch(model, trace)
            elif kind == "scatter":
                grid = default_grid(0.0, TWO_PI * req.get("half_span_hz", 4e6), req.get("n_points", 801))
                res = _scatter_parallel(model, req.get("site", 0), grid)
                res.to_csv(writer.path("scatter.csv"), model.sites)
        _dump(writer.path("summary.json"), summary)
        entries = writer.commit({"name": doc["name"], "version": __version__})
    except BaseException:
        writer.abort()
        raise
    return summary, entries


def _resolve_out(doc, args, config_path):
    if getattr(args, "out", None):
        return Path(args.out)
    base = Path(config_path).resolve().parent
    return base / doc.get("output_dir", f"out/{doc['name']}")


def cmd_run(args, analyses=True):
    doc = load_experiment(args.config)
    out = _resolve_out(doc, args, args.config)
    summary, entries = execute_experiment(doc, out, analyses)
    print(f"wrote {len(entries) + 1} files to {out}")
    for key in ("dispersion", "group_velocity_sites_per_s", "bloch"):
        if key in summary:
            print(f"{key}: {json.dumps(summary[key], sort_keys=True)}")
    return 0


def cmd_simulate(args):
    return cmd_run(args, analyses=False)


def cmd_scatter(args):
    doc = load_experiment(args.config)
    model = build_lattice(doc)
    grid = default_grid(0.0, TWO_PI * args.half_span_hz, args.n_points)
    res = _scatter_parallel(model, args.site, grid)
    out = Path(args.out or f"scatter_{doc['name']}.csv")
    res.to_csv(out, model.sites)
    print(f"wrote {out}")
    return 0


def cmd_dispersion(args):
    if not Path(args.trace).is_file():
        raise ConfigError(f"file not found: {args.trace}")
    trace = SiteTimeTrace.from_csv(args.trace)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        res = extract_dispersion(trace, model=args.model)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    writer = ArtifactWriter(args.out)
    try:
        res.to_csv(writer.path("dispersion.csv"))
        res.to_json(writer.path("dispersion.json"))
        with open(writer.path("dispersion.svg"), "w") as fh:
            fh.write(heatmap(res.power.T, res.k_grid / math.pi, res.omega_grid / TWO_PI / 1e6,
                             "dispersion power", "k / pi", "omega / 2pi (MHz)"))
        writer.commit({"source": Path(args.trace).name})
    except BaseException:
        writer.abort()
        raise
    fit = res.fit
    if "j" in fit:
        print(f"|J|/2pi = {fit['j'] / TWO_PI / 1e6:.4f} MHz  theta = {fit['theta'] / math.pi:.4f} pi")
    print(json.dumps(fit, sort_keys=True))
    return 0


def _read_tuning_csv(path):
    if not Path(path).is_file():
        raise ConfigError(f"file not found: {path}")
    rows = np.genfromtxt(path, delimiter=",", names=True)
    for col in ("v", "freq_hz", "n"):
        if col not in rows.dtype.names:
            raise ConfigError(f"{path}: missing column {col!r} (need v, freq_hz, n)")
    return rows["v"], TWO_PI * rows["freq_hz"], rows["n"].astype(int)


def cmd_fit_tuning(args):
    if args.data:
        v, w, n = _read_tuning_csv(args.data)
    else:
        params, squids, calib = table_one()
        vv = np.linspace(calib.v_ss - 0.7 * calib.period, calib.v_ss + 0.7 * calib.period, 81)
        rng = np.random.default_rng(args.seed)
        v = np.tile(vv, 3)
        n = np.repeat([31, 32, 33], vv.size)
        w = np.concatenate([tuning_curve(params, squids, calib, m, vv) for m in (31, 32, 33)])
        w = w + TWO_PI * args.noise_hz * rng.standard_normal(w.size)
    fit = fit_tuning(v, w, n)
    rec = {"params": fit.params, "stderr": fit.stderr, "rms_hz": fit.rms / TWO_PI,
           "degenerate_B_dsq2": fit.degenerate, "corr_B_dsq2": fit.correlation_b_dsq2}
    for k in ("g_volt", "v_ss", "omega_rt", "A", "B", "d_sq2"):
        print(f"{k:9s} = {fit.params[k]:.8g} +/- {fit.stderr[k]:.3g}")
    if fit.degenerate:
        print("warning: B and d_sq2 are not well constrained by these data")
    if args.out:
        _dump(args.out, rec)
    return 0


def cmd_calibrate(args):
    j = TWO_PI * args.j_mhz * 1e6 * np.exp(1j * args.theta_mod)
    pairs = list(args.pairs)
    lo, hi = min(pairs), max(pairs) + 1
    sites = np.arange(lo - 2, hi + 3)
    model = uniform_chain(sites.size, j, 0.0, TWO_PI * args.kappa_khz * 1e3, sites=sites)
    rng = np.random.default_rng(args.seed)
    phases = rng.uniform(-math.pi, math.pi, sites.size) if args.random_phases else None
    theta = np.linspace(-math.pi, math.pi, args.n_points, endpoint=False)
    res = calibrate_phases(model, pairs, theta, args.t_probe, args.r, phases)
    for (a, b), tc, amp in zip(res.pairs, res.theta_calib, res.amplitude):
        print(f"pair ({a:+d},{b:+d}): theta_calib = {tc / math.pi:+.4f} pi  b = {amp:.4g}")
    awg = res.awg_phases(args.keff)
    print("AWG phases for k_eff = %.4f pi: %s" % (args.keff / math.pi,
          " ".join(f"{p / math.pi:+.4f}pi" for p in awg)))
    if args.out:
        _dump(args.out, {"pairs": [list(p) for p in res.pairs],
                         "theta_calib": res.theta_calib.tolist(),
                         "amplitude": res.amplitude.tolist(), "awg_phases": awg.tolist()})
    return 0


def cmd_bloch(args):
    det = TWO_PI * args.detuning_mhz * 1e6
    model = uniform_chain(args.n_sites, TWO_PI * args.j_mhz * 1e6)
    beta0 = np.zeros(model.n_sites, complex)
    beta0[model.index(0)] = 1.0
    tb = bloch_period(det)
    tr = bloch_oscillate(model, det, beta0, args.periods * tb, dt=tb / 200)
    fid = state_fidelity(beta0, tr.final())
    print(f"T_B = {tb * 1e9:.3f} ns")
    print(f"return fidelity after {args.periods:g} period(s) = {fid:.6f}")
    return 0


def cmd_defect(args):
    j = TWO_PI * args.j_mhz * 1e6
    delta = args.delta_over_j * j
    res = defect_scattering(delta, j, args.keff)
    print(f"v_g = {res.v_g / j:+.4f} |J| per site")
    print(f"|A_r|^2 = {res.reflectance:.4f}")
    print(f"|A_t|^2 = {res.transmittance:.4f}")
    if args.simulate:
        sim, _ = simulate_transmission(args.delta_over_j, args.keff, args.sigma, j)
        print(f"wavepacket transmission (sigma = {args.sigma:g}) = {sim:.4f}")
    return 0


def cmd_reverse(args):
    j = TWO_PI * args.j_mhz * 1e6
    model = uniform_chain(args.n_sites, j, 0.0, TWO_PI * args.kappa_khz * 1e3)
    if args.disorder_khz:
        model = apply_disorder(model, DisorderSpec(args.seed, TWO_PI * args.disorder_khz * 1e3))
    beta0 = np.zeros(model.n_sites, complex)
    beta0[model.index(0)] = 1.0
    res = time_reverse_protocol(model, args.pulse, args.gap, beta0, dt=args.dt)
    print(f"revival fidelity = {res.fidelity:.10f}")
    print(f"final norm = {np.linalg.norm(res.trace.final()):.6f}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="synthlat",
                                description="Synthetic-frequency-lattice simulator and analysis tools.")
    p.add_argument("--version", action="version", version=f"synthlat {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    s = sub.add_parser("run", help="run an experiment config (simulation and analyses)")
    s.add_argument("config")
    s.add_argument("--out", help="output directory (overrides the config)")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("simulate", help="run an experiment config without analyses")
    s.add_argument("config")
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("scatter", help="transient scattering spectra of a configured lattice")
    s.add_argument("config")
    s.add_argument("--site", type=int, default=0, help="input site (relative index)")
    s.add_argument("--half-span-hz", type=float, default=4e6)
    s.add_argument("--n-points", type=int, default=801)
    s.add_argument("--out", help="CSV path")
    s.set_defaults(func=cmd_scatter)

    s = sub.add_parser("dispersion", help="extract a band from a site-time CSV")
    s.add_argument("trace", help="CSV with columns t_s, site, re, im")
    s.add_argument("--model", default="nn", choices=["nn", "second_nn", "second_nn_h2", "two_tone"])
    s.add_argument("--out", default="dispersion_out")
    s.set_defaults(func=cmd_dispersion)

    s = sub.add_parser("fit-tuning", help="fit the flux-tuning model")
    s.add_argument("data", nargs="?", help="CSV with columns v, freq_hz, n (default: synthetic)")
    s.add_argument("--noise-hz", type=float, default=0.0, help="noise for synthetic data")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", help="JSON path")
    s.set_defaults(func=cmd_fit_tuning)

    s = sub.add_parser("calibrate", help="simulate two-site interference calibration")
    s.add_argument("--pairs", type=int, nargs="+", default=[-2, -1, 0, 1], help="lower sites n")
    s.add_argument("--j-mhz", type=float, default=1.25)
    s.add_argument("--theta-mod", type=parse_angle, default=0.0)
    s.add_argument("--kappa-khz", type=float, default=90.0)
    s.add_argument("--t-probe", type=parse_duration, default=0.1e-6)
    s.add_argument("--r", type=float, default=1.0)
    s.add_argument("--n-points", type=int, default=33)
    s.add_argument("--keff", type=parse_angle, default=0.5 * math.pi)
    s.add_argument("--random-phases", action="store_true", help="inject random input-line phases")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("bloch", help="Bloch period and return fidelity of a tilted chain")
    s.add_argument("--detuning-mhz", type=float, default=3.0)
    s.add_argument("--j-mhz", type=float, default=1.25)
    s.add_argument("--n-sites", type=int, default=61)
    s.add_argument("--periods", type=float, default=1.0)
    s.set_defaults(func=cmd_bloch)

    s = sub.add_parser("defect", help="closed-form scattering from a detuned site")
    s.add_argument("--delta-over-j", type=float, required=True)
    s.add_argument("--keff", type=parse_angle, default=0.5 * math.pi)
    s.add_argument("--j-mhz", type=float, default=1.25)
    s.add_argument("--simulate", action="store_true", help="also run a wavepacket simulation")
    s.add_argument("--sigma", type=float, default=3.0)
    s.set_defaults(func=cmd_defect)

    s = sub.add_parser("reverse", help="time-reversal revival by a pi modulation-phase flip")
    s.add_argument("--gap", type=parse_duration, default=0.5e-6)
    s.add_argument("--pulse", type=parse_duration, default=1e-6)
    s.add_argument("--j-mhz", type=float, default=1.25)
    s.add_argument("--n-sites", type=int, default=31)
    s.add_argument("--kappa-khz", type=float, default=0.0)
    s.add_argument("--disorder-khz", type=float, default=0.0, help="rms on-site detuning")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--dt", type=parse_duration, default=2e-9)
    s.set_defaults(func=cmd_reverse)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DeviceError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NUMERICAL_ERRORS as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
