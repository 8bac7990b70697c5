import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qlangevin import dynamics as dy
from qlangevin import radiation_pressure as rp
from qlangevin.core import BrownianKernel, ComplexSpectrum, FrequencyGrid, MechanicalSystem, Scatterer, ThermalState
from qlangevin.errors import InvalidArgumentError, StabilityError
from qlangevin.linear_coupling import abraham_lorentz_system


def lorentzian(w):
    return 1.0 / (1.0 + np.asarray(w) ** 2)


def test_noise_is_reproducible_per_stream():
    a = dy.synthesize_noise(lorentzian, 100.0, 0.1, master_seed=5, stream=3)
    b = dy.synthesize_noise(lorentzian, 100.0, 0.1, master_seed=5, stream=3)
    c = dy.synthesize_noise(lorentzian, 100.0, 0.1, master_seed=5, stream=4)
    assert np.array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, c.samples)


def test_ensembles_are_bit_identical_across_worker_counts():
    system = MechanicalSystem(1.0, 1.0, BrownianKernel(0.5, 1.0))
    runs = [dy.simulate_ensemble(system, 1.0, 12, 200.0, 0.1, master_seed=99, max_workers=w) for w in (1, 3, 8)]
    for other in runs[1:]:
        assert np.array_equal(runs[0].q, other.q) and np.array_equal(runs[0].v, other.v)
    # streams are independent of how the ensemble is sliced
    tail = dy.simulate_ensemble(system, 1.0, 4, 200.0, 0.1, master_seed=99, first_stream=8)
    assert np.array_equal(runs[0].q[8:], tail.q)


@settings(max_examples=10, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_motion_is_linear_in_the_force(a, b):
    system = MechanicalSystem(1.0, 0.7, BrownianKernel(0.3, 0.5))
    f1 = dy.synthesize_noise(1.0, 50.0, 0.1, 1, 0)
    f2 = dy.synthesize_noise(lorentzian, 50.0, 0.1, 1, 1)
    mix = dy.NoiseRealization(0.1, a * f1.samples + b * f2.samples, 1, 2)
    x1, x2, xm = (dy.solve_motion_frequency(system, f) for f in (f1, f2, mix))
    scale = np.max(np.abs(x1.q)) + np.max(np.abs(x2.q))
    assert np.max(np.abs(xm.q - (a * x1.q + b * x2.q))) <= 1e-12 * scale * (1 + abs(a) + abs(b))
    assert np.max(np.abs(xm.v - (a * x1.v + b * x2.v))) <= 1e-12 * (np.max(np.abs(x1.v)) + np.max(np.abs(x2.v))) * (1 + abs(a) + abs(b))


def test_response_is_causal():
    system = MechanicalSystem(1.0, 1.0, BrownianKernel(0.5, 1.0))
    n, dt = 4096, 0.05
    kick = np.zeros(n)
    kick[n // 2] = 1 / dt
    tr = dy.solve_motion_frequency(system, dy.NoiseRealization(dt, kick, 0, 0))
    assert np.max(np.abs(tr.q[: n // 2 - 5])) < 1e-3 * np.max(np.abs(tr.q))


def _periodogram_error(n_real, seed=0):
    n, dt = 1024, 0.1
    acc = np.zeros(n)
    for s in range(n_real):
        nu, P = dy.periodogram(dy.synthesize_noise(lorentzian, n * dt, dt, seed, s).samples, dt)
        acc += P
    sel = (np.abs(nu) > 0) & (np.abs(nu) < 5)
    return np.sqrt(np.mean((acc[sel] / n_real / lorentzian(nu[sel]) - 1) ** 2))


def test_spectral_fidelity_improves_like_inverse_square_root():
    e25, e100 = _periodogram_error(25), _periodogram_error(100)
    assert e25 == pytest.approx(1 / 5, rel=0.1)
    assert e25 / e100 == pytest.approx(2.0, rel=0.15)


def test_out_of_band_spectrum_is_rejected():
    grid = FrequencyGrid(0.1, 1000)  # flat up to w = 100, above the Nyquist frequency pi/dt
    spec = ComplexSpectrum.from_positive_half(grid, np.ones(1001), "even")
    with pytest.raises(InvalidArgumentError):
        dy.synthesize_noise(spec, 10.0, 0.1, 0)


def test_runaway_systems_are_refused():
    with pytest.raises(StabilityError) as exc:
        dy.simulate_ensemble(abraham_lorentz_system(1.0, 1.0, 0.0), 1.0, 2, 10.0, 0.1, 0)
    assert exc.value.report.label == "runaway"


def test_bound_brownian_variance_matches_oracles():
    system = MechanicalSystem(1.0, 2.0, BrownianKernel(0.6, 0.3))  # friction 2, T/K = 0.15
    ens = dy.simulate_ensemble(system, 2 * 0.6, 100, 4096 * 0.1, 0.1, master_seed=3)
    est = dy.estimate_equilibrium_variance(ens)
    exact = dy.discrete_variance_oracle(system, 1.2, 4096, 0.1)
    assert abs(est.value - exact) <= 3 * est.stderr
    assert dy.equilibrium_variance_oracle(system, 1.2) == pytest.approx(0.15, rel=1e-8)


def test_doubling_the_spring_halves_the_classical_variance():
    v1 = dy.equilibrium_variance_oracle(MechanicalSystem(1.0, 1.0, BrownianKernel(0.5, 0.5)), 1.0)
    v2 = dy.equilibrium_variance_oracle(MechanicalSystem(1.0, 2.0, BrownianKernel(0.5, 0.5)), 1.0)
    assert v1 / v2 == pytest.approx(2.0, rel=1e-8)


def test_free_brownian_diffusion():
    D, T = 0.5, 1.0
    system = dy.classical_limit_system(1e4, 0.0, D, T)
    ens = dy.simulate_ensemble(system, 2 * D, 100, 8192 * 0.2, 0.2, master_seed=11)
    est = dy.estimate_diffusion(ens)
    assert abs(est.value - D) <= 3 * est.stderr + 0.02 * D
    with pytest.raises(InvalidArgumentError):
        dy.estimate_diffusion(dy.simulate_ensemble(MechanicalSystem(1.0, 1.0, BrownianKernel(D, T)),
                                                   2 * D, 2, 20.0, 0.2, 0))


def test_vacuum_scatterer_does_not_diffuse(resonance):
    dt = 0.3
    band = FrequencyGrid(np.pi / dt / 1000, 1000)
    c_sym = ComplexSpectrum.from_positive_half(
        band, rp.symmetrized_force_spectrum(resonance, 0.0, band.positive_points), "even")
    system = MechanicalSystem(1.0, 0.0, Scatterer(resonance, ThermalState(0.0)))
    est = dy.estimate_diffusion(dy.simulate_ensemble(system, c_sym, 50, 4096 * dt, dt, master_seed=7))
    # the thermal scale for comparison: D at T = 0.1 is about 1.7e-4
    assert abs(est.value) < 0.25 * rp.momentum_diffusion(resonance, 0.1)


def test_scatterer_variance_matches_spectral_oracle(resonance):
    dt, T = 0.3, 0.5
    band = FrequencyGrid(np.pi / dt / 400, 400)
    c_sym = ComplexSpectrum.from_positive_half(
        band, rp.symmetrized_force_spectrum(resonance, T, band.positive_points), "even")
    system = MechanicalSystem(1.0, 0.5, Scatterer(resonance, ThermalState(T)))
    ens = dy.simulate_ensemble(system, c_sym, 60, 2048 * dt, dt, master_seed=21)
    est = dy.estimate_equilibrium_variance(ens)
    oracle = dy.discrete_variance_oracle(system, c_sym, 2048, dt)
    assert abs(est.value - oracle) <= 3 * est.stderr + 1e-6 * oracle


def test_exports(tmp_path):
    system = MechanicalSystem(1.0, 1.0, BrownianKernel(0.5, 1.0))
    ens = dy.simulate_ensemble(system, 1.0, 3, 5.0, 0.5, master_seed=4)
    paths = dy.write_trajectories_csv(ens, tmp_path, {"seed": 4})
    assert [p.name for p in paths] == ["traj_0.csv", "traj_1.csv", "traj_2.csv"]
    data = np.loadtxt(paths[1], delimiter=",", skiprows=2)
    assert np.array_equal(data[:, 1], ens.q[1])
    doc = json.loads(dy.ensemble_to_json(ens, version="x"))
    assert doc["metadata"]["seed"] == 4 and "summary" in doc
