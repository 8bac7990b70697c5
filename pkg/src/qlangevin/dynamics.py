"""Time-domain Langevin trajectories driven by stationary Gaussian force noise.

Noise is synthesized spectrally: white Gaussian samples are filtered in the
frequency domain by ``sqrt(C_sym / dt)``, so the stationary autocovariance
at lag ``n`` is ``(1 / (N dt)) sum_k C_sym(nu_k) cos(nu_k n dt)`` (``2D/dt`` at lag 0
for a white spectrum ``2D``).  Motion follows from ``q[w] = F[w] / (K - M w^2 - chi[w])``
on the same periodic grid.

numpy's forward FFT uses ``exp(-i nu t)`` while spectra here use
``f[w] = int dt f(t) exp(+i w t)``, so an FFT bin at ``nu`` carries the
frequency ``w = -nu``.  Transfer functions are therefore applied conjugated.

Each trajectory draws from its own stream
``SeedSequence(master_seed, spawn_key=(stream,))``; results do not depend on
the number of worker threads.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import (AbrahamLorentz, BrownianKernel, ComplexSpectrum, LinearCharge, MechanicalSystem,
                   Scatterer, UNITS_NOTE)
from .errors import InvalidArgumentError, StabilityError
from .quadrature import quad


# ---------------------------------------------------------------------------
# spectra and noise


def symmetrize_spectrum(c_ff: ComplexSpectrum, tol: float = 1e-12) -> ComplexSpectrum:
    """``C_sym[w] = (C_FF[w] + C_FF[-w]) / 2`` (real and even)."""
    v = c_ff.values
    scale = c_ff.max_abs() or 1.0
    if np.max(np.abs(v.imag)) > tol * scale or np.min(v.real) < -tol * scale:
        raise InvalidArgumentError("force spectrum samples must be real and non-negative")
    sym = 0.5 * (v.real + v.real[::-1])
    return ComplexSpectrum(c_ff.grid, sym.astype(complex), hermitian=True)


def stream_rng(master_seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(master_seed), spawn_key=(int(stream),)))


def fft_frequencies(n: int, dt: float) -> np.ndarray:
    return 2 * np.pi * np.fft.fftfreq(n, dt)


def _spectrum_on_bins(c_sym, nu, dt, tol=1e-8):
    a = np.abs(nu)
    if isinstance(c_sym, ComplexSpectrum):
        nyquist = np.pi / dt
        w = c_sym.omega
        beyond = np.abs(c_sym.real[w > nyquist * (1 + 1e-12)])
        if beyond.size and beyond.max() > tol * max(c_sym.max_abs(), 1e-300):
            raise InvalidArgumentError(
                f"time step too coarse: spectrum is non-negligible above the Nyquist frequency {nyquist:.6g}"
            )
        s = c_sym.at(a).real
    elif callable(c_sym):
        s = np.asarray(c_sym(a), dtype=float) * np.ones_like(a)
    else:
        s = np.full_like(a, float(c_sym))
    if np.any(s < 0):
        raise InvalidArgumentError("symmetric spectrum must be non-negative")
    return s


@dataclass(frozen=True)
class NoiseRealization:
    dt: float
    samples: np.ndarray
    master_seed: int
    stream: int

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) * self.dt


def noise_amplitudes(c_sym, n: int, dt: float) -> np.ndarray:
    """Per-bin filter ``sqrt(C_sym(|nu_k|) / dt)`` for an ``n``-sample series."""
    nu = fft_frequencies(n, dt)
    return np.sqrt(_spectrum_on_bins(c_sym, nu, dt) / dt)


def _noise_from_amplitudes(amp, dt, master_seed, stream):
    white = stream_rng(master_seed, stream).standard_normal(amp.size)
    samples = np.fft.ifft(np.fft.fft(white) * amp).real
    return NoiseRealization(dt, samples, int(master_seed), int(stream))


def _sample_count(duration, dt):
    if not dt > 0 or not duration > 0:
        raise InvalidArgumentError("duration and dt must be positive")
    n = int(round(duration / dt))
    if n < 4:
        raise InvalidArgumentError("duration must span at least four time steps")
    return n


def synthesize_noise(c_sym, duration: float, dt: float, master_seed: int, stream: int = 0) -> NoiseRealization:
    """Stationary Gaussian force series with symmetric spectrum ``c_sym``.

    ``c_sym`` is a :class:`ComplexSpectrum` (zero beyond its grid; must be
    negligible above ``pi/dt``), a callable of ``|w|``, or a constant.
    """
    n = _sample_count(duration, dt)
    return _noise_from_amplitudes(noise_amplitudes(c_sym, n, dt), dt, master_seed, stream)


def periodogram(samples, dt: float):
    """``(nu, |FFT|^2 dt / N)``; its expectation is ``C_sym`` on the FFT bins."""
    x = np.asarray(samples, dtype=float)
    return fft_frequencies(x.size, dt), np.abs(np.fft.fft(x)) ** 2 * dt / x.size


# ---------------------------------------------------------------------------
# motion


def zero_frequency_friction(system: MechanicalSystem) -> float:
    c = system.coupling
    if isinstance(c, BrownianKernel):
        return c.friction
    if isinstance(c, Scatterer):
        from .radiation_pressure import quasistatic_coefficients

        if getattr(c.smatrix, "closed_form", True):
            return quasistatic_coefficients(c.smatrix, c.state).friction
    return 0.0


def _refuse_unstable(system: MechanicalSystem, classification=None):
    if isinstance(system.coupling, AbrahamLorentz) or "unbound" in system.flags:
        from .stability import classify_system

        raise StabilityError("runaway kernel: simulation refused", classify_system(system))
    if classification is None:
        from .stability import classify_system

        classification = classify_system(system)
    if classification.label != "stable_causal":
        raise StabilityError(f"{classification.label} system: simulation refused", classification)
    return classification


@dataclass(frozen=True)
class TransferFunctions:
    """Position and velocity responses on FFT bins (already conjugated for numpy's sign)."""

    position: np.ndarray
    velocity: np.ndarray
    free: bool


def transfer_functions(system: MechanicalSystem, n: int, dt: float) -> TransferFunctions:
    nu = fft_frequencies(n, dt)
    a = np.abs(nu)
    pos = a > 0
    chi = np.zeros(n, dtype=complex)
    uniq, inv = np.unique(a[pos], return_inverse=True)
    chi_u = np.asarray(system.susceptibility(uniq), dtype=complex)
    chi[pos] = np.where(nu[pos] > 0, chi_u[inv], np.conj(chi_u[inv]))
    G = system.spring - system.mass * nu**2 - chi
    hq = np.zeros(n, dtype=complex)
    hv = np.zeros(n, dtype=complex)
    hq[pos] = 1.0 / G[pos]
    hv[pos] = -1j * nu[pos] / G[pos]
    free = system.spring == 0
    if not free:
        hq[0] = 1.0 / system.spring
    else:
        gamma = zero_frequency_friction(system)
        hv[0] = 1.0 / gamma if gamma > 0 else 0.0
    return TransferFunctions(np.conj(hq), np.conj(hv), free)


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    q: np.ndarray
    v: np.ndarray
    stream: int


def _apply(tf: TransferFunctions, force, dt, stream):
    n = force.size
    Fk = np.fft.fft(force)
    v = np.fft.ifft(Fk * tf.velocity).real
    if tf.free:
        q = np.concatenate([[0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * dt)])
    else:
        q = np.fft.ifft(Fk * tf.position).real
    return Trajectory(np.arange(n) * dt, q, v, stream)


def solve_motion_frequency(system: MechanicalSystem, noise: NoiseRealization, classification=None,
                           transfer: TransferFunctions | None = None) -> Trajectory:
    """Velocity ``Y[w] F[w]`` and position ``F[w] / (K - M w^2 - chi[w])`` on the periodic grid.

    Bound systems (``K > 0``) take the ``w = 0`` bin from ``1/K``; free systems
    get the position by trapezoidal integration of the velocity, whose
    ``w = 0`` response is ``1 / xi'[0]`` (zero when there is no friction).

    Raises
    ------
    StabilityError
        If the system is not classified ``stable_causal``.
    """
    _refuse_unstable(system, classification)
    n = noise.samples.size
    tf = transfer or transfer_functions(system, n, noise.dt)
    return _apply(tf, noise.samples, noise.dt, noise.stream)


# ---------------------------------------------------------------------------
# ensembles


@dataclass
class TrajectoryEnsemble:
    dt: float
    t: np.ndarray
    q: np.ndarray          # (n_traj, n_steps)
    v: np.ndarray
    streams: tuple
    master_seed: int
    system: dict = field(default_factory=dict)

    @property
    def n_traj(self) -> int:
        return self.q.shape[0]

    @property
    def mass(self) -> float:
        return float(self.system.get("mass", 1.0))

    def variance_vs_time(self, which: str = "q") -> np.ndarray:
        x = self.q if which == "q" else self.v
        return np.mean(x**2, axis=0)

    def summary(self) -> dict:
        return {
            "n_traj": self.n_traj,
            "n_steps": int(self.t.size),
            "dt": self.dt,
            "master_seed": self.master_seed,
            "streams": [int(s) for s in self.streams],
            "mean_q2": _fmean([float(np.mean(x**2)) for x in self.q]),
            "mean_v2": _fmean([float(np.mean(x**2)) for x in self.v]),
            "system": self.system,
        }


def _fmean(values):
    values = list(values)
    return math.fsum(values) / len(values) if values else float("nan")


def _system_dict(system: MechanicalSystem) -> dict:
    c = system.coupling
    d = {"mass": system.mass, "spring": system.spring, "coupling": type(c).__name__}
    if isinstance(c, BrownianKernel):
        d.update(diffusion=c.diffusion, temperature=c.temperature)
    elif isinstance(c, Scatterer):
        d.update(smatrix=repr(c.smatrix), temperature=c.state.temperature)
    elif isinstance(c, LinearCharge):
        d.update(charge_squared=c.charge_squared, regulator=repr(c.regulator), temperature=c.temperature)
    return d


def simulate_ensemble(system: MechanicalSystem, c_sym, n_traj: int, duration: float, dt: float,
                      master_seed: int, max_workers: int = 1, first_stream: int = 0,
                      classification=None) -> TrajectoryEnsemble:
    """Independent trajectories for streams ``first_stream .. first_stream + n_traj - 1``."""
    if n_traj < 1:
        raise InvalidArgumentError("n_traj must be >= 1")
    _refuse_unstable(system, classification)
    n = _sample_count(duration, dt)
    amp = noise_amplitudes(c_sym, n, dt)
    tf = transfer_functions(system, n, dt)
    streams = tuple(range(first_stream, first_stream + n_traj))

    def run(stream):
        return _apply(tf, _noise_from_amplitudes(amp, dt, master_seed, stream).samples, dt, stream)

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as ex:
            trajs = list(ex.map(run, streams))
    else:
        trajs = [run(s) for s in streams]
    return TrajectoryEnsemble(
        dt=dt, t=trajs[0].t,
        q=np.stack([tr.q for tr in trajs]), v=np.stack([tr.v for tr in trajs]),
        streams=streams, master_seed=int(master_seed), system=_system_dict(system),
    )


# ---------------------------------------------------------------------------
# estimators


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float

    def as_dict(self):
        return {"value": self.value, "stderr": self.stderr}


def circular_msd(x: np.ndarray, lags: np.ndarray) -> np.ndarray:
    """``mean_t (x[t + lag] - x[t])^2`` with periodic wrap-around, per row."""
    x = np.atleast_2d(x)
    xm = x - x.mean(axis=1, keepdims=True)
    n = x.shape[1]
    spec = np.abs(np.fft.rfft(xm, axis=1)) ** 2
    acov = np.fft.irfft(spec, n=n, axis=1) / n
    return 2.0 * (acov[:, :1] - acov[:, lags])


def estimate_diffusion(ensemble: TrajectoryEnsemble, fit_window: tuple | None = None) -> Estimate:
    """Momentum diffusion ``D`` from the growth of ``<(p(t + s) - p(t))^2>``, ``p = M v``.

    Trajectories are periodic, so the increment variance of a diffusing
    momentum is ``2 D s (1 - s/L)`` for a record of length ``L`` (the zero
    mode is not a random walk).  Each trajectory is fitted to
    ``a + 2 D s (1 - s/L)`` over ``fit_window = (s_min, s_max)``; the default
    window is ``[max(20 dt, L/1000), L/50]`` (short lags carry the least
    statistical noise; the intercept absorbs band-edge structure).  The standard error is the spread across
    trajectories.
    """
    if float(ensemble.system.get("spring", 0.0)) != 0.0:
        raise InvalidArgumentError("diffusion is estimated for free particles (K = 0)")
    n = ensemble.t.size
    L = n * ensemble.dt
    lo, hi = fit_window or (max(20 * ensemble.dt, L / 1000), L / 50)
    lags = np.arange(max(1, int(round(lo / ensemble.dt))), int(round(hi / ensemble.dt)) + 1)
    if lags.size < 2 or lags[-1] >= n:
        raise InvalidArgumentError("fit window must cover at least two lags inside the record")
    s = lags * ensemble.dt
    basis = np.column_stack([np.ones_like(s), 2.0 * s * (1.0 - s / L)])
    p = ensemble.mass * ensemble.v
    msd = circular_msd(p, lags)
    coef, *_ = np.linalg.lstsq(basis, msd.T, rcond=None)
    d = coef[1]
    mean = _fmean(d)
    se = float(np.std(d, ddof=1) / np.sqrt(d.size)) if d.size > 1 else float("nan")
    return Estimate(mean, se)


def estimate_equilibrium_variance(ensemble: TrajectoryEnsemble, discard: float = 0.0) -> Estimate:
    """``<q^2>`` from per-trajectory time averages (after ``discard`` time units)."""
    start = int(round(discard / ensemble.dt))
    per = [math.fsum(row[start:] ** 2) / row[start:].size for row in ensemble.q]
    mean = _fmean(per)
    se = float(np.std(per, ddof=1) / np.sqrt(len(per))) if len(per) > 1 else float("nan")
    return Estimate(mean, se)


def equilibrium_variance_oracle(system: MechanicalSystem, c_sym, omega_max: float | None = None) -> float:
    """``int dw/2pi C_sym[w] / |K - M w^2 - chi[w]|^2`` by adaptive quadrature."""
    if not system.spring > 0:
        raise InvalidArgumentError("equilibrium variance needs K > 0")
    if isinstance(c_sym, ComplexSpectrum):
        spec = lambda w: c_sym.at(w).real  # noqa: E731
        upper = c_sym.grid.max_frequency if omega_max is None else omega_max
    else:
        spec = c_sym if callable(c_sym) else (lambda w, c=float(c_sym): c)
        upper = omega_max

    def f(w):
        g = system.stiffness(np.array([w]))[0]
        return float(np.asarray(spec(np.array([w]))).ravel()[0]) / abs(g) ** 2

    w0 = np.sqrt(system.spring / system.mass) if system.mass > 0 else 1.0
    pts = [w0]
    if upper is None or not np.isfinite(upper):
        from .quadrature import integrate_to_infinity

        head = quad(f, 0.0, 2 * w0, points=pts, limit=800)
        tail, _ = integrate_to_infinity(f, 2 * w0, 2 * w0)
        return (head + tail) / np.pi
    pts = [p for p in pts if p < upper]
    return quad(f, 0.0, upper, points=pts or None, limit=800) / np.pi


def discrete_variance_oracle(system: MechanicalSystem, c_sym, n: int, dt: float) -> float:
    """Exact ``<q^2>`` of the periodic simulation: ``(1/(N dt)) sum_k C_sym(nu_k) |1/G(nu_k)|^2``."""
    tf = transfer_functions(system, n, dt)
    s = _spectrum_on_bins(c_sym, fft_frequencies(n, dt), dt)
    return math.fsum(s * np.abs(tf.position) ** 2) / (n * dt)


def classical_limit_system(mass: float, spring: float, diffusion: float, temperature: float) -> MechanicalSystem:
    """Brownian limit: white noise ``2D`` and friction ``D/T``."""
    return MechanicalSystem(mass, spring, BrownianKernel(diffusion, temperature))


# ---------------------------------------------------------------------------
# export


def ensemble_to_json(ensemble: TrajectoryEnsemble, path=None, extra: dict | None = None, version: str = ""):
    doc = {"metadata": {"units": UNITS_NOTE, "seed": ensemble.master_seed, "version": version}}
    doc["summary"] = ensemble.summary()
    if extra:
        doc.update(extra)
    text = json.dumps(doc, indent=2, default=_json_default)
    if path is not None:
        Path(path).write_text(text)
    return text


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"cannot serialize {type(o).__name__}")


def write_trajectories_csv(ensemble: TrajectoryEnsemble, directory, metadata: dict | None = None) -> list:
    """One ``traj_<stream>.csv`` per trajectory with columns ``t,q,v``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    header = [f"# {k}: {v}" for k, v in (metadata or {}).items()]
    paths = []
    for i, stream in enumerate(ensemble.streams):
        path = directory / f"traj_{stream}.csv"
        data = np.column_stack([ensemble.t, ensemble.q[i], ensemble.v[i]])
        with path.open("w") as fh:
            for line in header:
                fh.write(line + "\n")
            fh.write("t,q,v\n")
            np.savetxt(fh, data, delimiter=",", fmt="%.17g")
        paths.append(path)
    return paths
