import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from synthlat.device import FluxDrive, table_one
from synthlat.lattice import (DisorderSpec, LatticeModel, apply_disorder, bloch_ladder,
                              build_hamiltonian, from_device, uniform_chain)

TWO_PI = 2 * math.pi


def _random(seed, n=7):
    r = np.random.default_rng(seed)
    return LatticeModel(r.normal(size=n), r.random(n), r.random(n),
                        {1: r.normal(size=n - 1) + 1j * r.normal(size=n - 1),
                         3: r.normal(size=n - 3) + 0j}, sites=np.arange(n) - 2)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_hamiltonian_structure(seed):
    m = _random(seed)
    h = build_hamiltonian(m)
    herm = h + 0.5j * np.diag(m.kappa)
    assert np.allclose(herm, herm.conj().T)
    assert np.allclose(np.diag(h).imag, -m.kappa / 2)
    assert h[1, 2] == m.couplings[1][1]
    assert h[4, 1] == np.conj(m.couplings[3][1])
    assert h[0, 2] == 0


def test_round_trip(tmp_path):
    m = _random(3)
    back = LatticeModel.from_json(m.to_json())
    for name in ("delta", "kappa_e", "kappa_i", "sites"):
        assert np.array_equal(getattr(m, name), getattr(back, name))
    assert np.array_equal(m.couplings[3], back.couplings[3])
    p = tmp_path / "l.json"
    m.to_json(p)
    assert np.array_equal(LatticeModel.from_json(p).couplings[1], m.couplings[1])


def test_disorder_deterministic_and_barriers():
    m = uniform_chain(9, 1.0, 0.1, 0.2, sites=np.arange(-4, 5))
    spec = DisorderSpec(seed=5, delta_sigma=0.3, kappa_spread=0.2, barrier_sites=((2, 50.0, 1.0),))
    a, b = apply_disorder(m, spec), apply_disorder(m, spec)
    assert np.array_equal(a.delta, b.delta) and np.array_equal(a.kappa_i, b.kappa_i)
    assert a.delta[m.index(2)] > 40
    c = apply_disorder(m, DisorderSpec(seed=6, delta_sigma=0.3))
    assert not np.array_equal(a.delta, c.delta)


def test_bloch_ladder_and_scaling():
    m = uniform_chain(5, 2.0, sites=np.arange(-2, 3))
    assert np.array_equal(bloch_ladder(m, 3.0).delta, [-6, -3, 0, 3, 6])
    s = m.scaled_couplings(0.5, math.pi)
    assert np.allclose(s.couplings[1], -1.0)
    assert m.without_couplings().couplings == {} or all(
        v.size == 0 or not np.any(v) for v in m.without_couplings().couplings.values())


def test_validation():
    with pytest.raises(ValueError):
        LatticeModel([0, 0], -1.0, 0.0)
    with pytest.raises(ValueError):
        LatticeModel([0, 0, 0], 0.0, 0.0, {1: [1.0]})
    with pytest.raises(KeyError):
        uniform_chain(3, 1.0).index(10)


def test_from_device_window():
    params, squids, _ = table_one()
    drive = FluxDrive.single_tone(-math.pi / 4, 0.062 * math.pi, TWO_PI * 155.09e6)
    m = from_device(params, squids, drive, (-3, 3), 32, include_static_shift=False)
    assert m.n_sites == 7 and list(m.sites) == list(range(-3, 4))
    assert m.delta[m.index(0)] == pytest.approx(0.0, abs=1e-6)
    assert abs(m.couplings[1][m.index(0)]) / TWO_PI == pytest.approx(1.2254e6, rel=1e-3)
    assert set(m.couplings) == {1, 2}
    with pytest.raises(ValueError):
        from_device(params, squids, drive, (-40, 0), 32)
