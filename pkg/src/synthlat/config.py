"""Schema validation and construction of models from JSON configs."""
from __future__ import annotations

import json
import math
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .device import DeviceParams, FluxDrive, TuningCalibration, solve_mode_frequencies, table_one
from .dynamics import PulseSequence, Segment
from .lattice import DisorderSpec, LatticeModel, apply_disorder, bloch_ladder, from_device, uniform_chain
from .analysis.wavepacket import WavepacketSpec, make_wavepacket

TWO_PI = 2 * math.pi


class ConfigError(ValueError):
    """Invalid or unreadable configuration (CLI exit status 2)."""


def load_schema(name):
    text = resources.files("synthlat").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def _read_json(path):
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"file not found: {p}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON ({exc})") from exc


def validate(doc, name, where=""):
    v = jsonschema.Draft202012Validator(load_schema(name))
    errs = sorted(v.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errs:
        msgs = [f"{'/'.join(str(p) for p in e.absolute_path) or '<root>'}: {e.message}" for e in errs]
        raise ConfigError(f"{where or name} failed schema validation:\n  " + "\n  ".join(msgs))
    return doc


def load_device(path):
    """``(DeviceParams, SquidArray, TuningCalibration)`` from a device JSON file."""
    doc = validate(_read_json(path), "device", str(path))
    d2 = doc.get("d_sq2", 0.01)
    if doc.get("preset") == "table_one":
        params, squids, calib = table_one(d2, doc.get("n_squid", 8))
        return params, squids, calib
    params = DeviceParams(TWO_PI * doc["omega_rt_hz"], doc["A"], doc["B"], doc.get("Z0", 50.0),
                          doc.get("n_squid", 8))
    calib = None
    if "g_volt" in doc and "v_ss" in doc:
        calib = TuningCalibration(doc["g_volt"], doc["v_ss"])
    return params, params.squid_array(d2), calib


def load_experiment(path):
    """Validated experiment dict with ``_base`` set to the config directory.

    Referenced device files are checked for existence here so that no
    artifact is written for an incomplete configuration.
    """
    path = Path(path)
    doc = validate(_read_json(path), "experiment", str(path))
    doc["_base"] = str(path.resolve().parent)
    lat = doc["lattice"]
    if lat["source"] == "device":
        dev = Path(doc["_base"]) / lat["device"]
        if not dev.is_file():
            raise ConfigError(f"device file not found: {dev}")
        validate(_read_json(dev), "device", str(dev))
    return doc


def build_lattice(doc) -> LatticeModel:
    lat = doc["lattice"]
    ke = TWO_PI * lat.get("kappa_e_hz", 0.0)
    ki = TWO_PI * lat.get("kappa_i_hz", 0.0)
    if lat["source"] == "uniform":
        j = TWO_PI * lat["j_hz"] * np.exp(1j * lat.get("theta_mod", 0.0))
        model = uniform_chain(lat["n_sites"], j, ke, ki)
    else:
        params, squids, _ = load_device(Path(doc["_base"]) / lat["device"])
        drv = lat["drive"]
        n0 = lat["n0"]
        if "omega_mod_hz" in drv:
            om = TWO_PI * drv["omega_mod_hz"]
        else:
            sp = solve_mode_frequencies(params, squids, drv["f_dc"], [n0, n0 + 1])
            om = float(sp.omega_n[1] - sp.omega_n[0])
        drive = FluxDrive.single_tone(drv["f_dc"], drv["df"], om, drv.get("theta", 0.0))
        model = from_device(params, squids, drive, tuple(lat["site_window"]), n0, ke, ki,
                            k_max=drv.get("k_max", 2),
                            include_static_shift=drv.get("include_static_shift", True))
    dis = lat.get("disorder", {})
    barriers = tuple((b["site"], TWO_PI * b.get("delta_hz", 0.0), TWO_PI * b.get("kappa_hz", 0.0))
                     for b in lat.get("barriers", []))
    spec = DisorderSpec(doc.get("seed", 0), TWO_PI * dis.get("delta_sigma_hz", 0.0),
                        dis.get("kappa_spread", 0.0), barriers)
    model = apply_disorder(model, spec)
    if lat.get("detuning_hz", 0.0):
        model = bloch_ladder(model, TWO_PI * lat["detuning_hz"])
    return model


def build_sequence(doc):
    seq = doc["sequence"]
    segs = tuple(Segment(s["duration_s"], s.get("drive_on", False),
                         tuple((i["site"], complex(i.get("re", 1.0), i.get("im", 0.0)))
                               for i in s.get("inputs", [])),
                         s.get("mod_phase", 0.0))
                 for s in seq["segments"])
    return PulseSequence(segs)


def build_initial(doc, model: LatticeModel):
    init = doc["sequence"].get("initial", {"type": "zero"})
    beta = np.zeros(model.n_sites, complex)
    if init["type"] == "site":
        beta[model.index(init.get("site", 0))] = 1.0
    elif init["type"] == "wavepacket":
        theta = 0.0
        if 1 in model.couplings and model.couplings[1].size:
            theta = float(np.angle(np.mean(model.couplings[1])))
        spec = WavepacketSpec(init["sigma"], init["k_eff"], init.get("n_sites", 5),
                              init.get("center", 0))
        beta = make_wavepacket(spec, model.sites, theta)
    return beta
