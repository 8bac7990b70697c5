"""Shared domain types: frequency grids, sampled spectra, thermal states and
mechanical systems.

All quantities are in reduced units hbar = k_B = c = 1.  Fourier transforms
follow ``f(t) = int dw/2pi f[w] exp(-i w t)``, so a real time signal has a
hermitian spectrum ``f[-w] = conj(f[w])``.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Union

import numpy as np

from .errors import InvalidArgumentError

ALGEBRAIC_TOL = 1e-12
QUADRATURE_TOL = 1e-8

UNITS_NOTE = "reduced units: hbar = k_B = c = 1"


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform grid ``w_j = j * delta`` for ``j = -half_count .. half_count``."""

    delta: float
    half_count: int

    def __post_init__(self):
        if not np.isfinite(self.delta) or self.delta <= 0:
            raise InvalidArgumentError(f"grid step must be positive, got {self.delta!r}")
        if int(self.half_count) != self.half_count or self.half_count < 1:
            raise InvalidArgumentError(f"half_count must be an integer >= 1, got {self.half_count!r}")
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "half_count", int(self.half_count))

    @property
    def size(self) -> int:
        return 2 * self.half_count + 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.half_count, self.half_count + 1)

    @property
    def points(self) -> np.ndarray:
        # index * delta keeps w[-j] == -w[j] bit for bit
        return self.indices * self.delta

    @property
    def positive_points(self) -> np.ndarray:
        """The points with ``j >= 0``, starting at zero."""
        return np.arange(0, self.half_count + 1) * self.delta

    @property
    def max_frequency(self) -> float:
        return self.half_count * self.delta

    def index_of(self, omega: float, atol: float = 1e-9) -> int:
        """Signed index of a grid point; raises if ``omega`` is off-grid."""
        x = omega / self.delta
        j = int(round(x))
        if abs(x - j) > atol or abs(j) > self.half_count:
            raise InvalidArgumentError(f"frequency {omega!r} is not a grid point")
        return j

    def extended(self, half_count: int) -> "FrequencyGrid":
        return FrequencyGrid(self.delta, half_count)

    def to_dict(self) -> dict:
        return {"delta": self.delta, "half_count": self.half_count}


def make_grid(delta_omega: float, half_count: int) -> FrequencyGrid:
    """Symmetric grid with ``2 * half_count + 1`` points."""
    return FrequencyGrid(delta_omega, half_count)


def parse_grid(text: str) -> FrequencyGrid:
    """Parse ``"delta:half_count"`` as used on the command line."""
    try:
        delta, count = text.split(":")
        return make_grid(float(delta), int(count))
    except ValueError as exc:
        raise InvalidArgumentError(f"grid must look like 'delta:half_count', got {text!r}") from exc


@dataclass(frozen=True)
class ComplexSpectrum:
    """A complex function sampled on a :class:`FrequencyGrid`."""

    grid: FrequencyGrid
    values: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        values = np.array(self.values, dtype=complex)
        if values.shape != (self.grid.size,):
            raise InvalidArgumentError(
                f"expected {self.grid.size} samples for the grid, got shape {values.shape}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, grid: FrequencyGrid, func: Callable, hermitian: bool = False):
        return cls(grid, np.asarray(func(grid.points), dtype=complex), hermitian)

    @classmethod
    def from_positive_half(cls, grid: FrequencyGrid, positive_values, parity: str = "hermitian"):
        """Build a full spectrum from samples at ``w >= 0``.

        ``parity`` is ``"hermitian"`` (f[-w] = conj f[w]), ``"even"`` or ``"odd"``.
        """
        pos = np.asarray(positive_values, dtype=complex)
        if pos.shape != (grid.half_count + 1,):
            raise InvalidArgumentError("positive half must have half_count + 1 samples")
        if parity == "hermitian":
            neg = np.conj(pos[:0:-1])
        elif parity == "even":
            neg = pos[:0:-1]
        elif parity == "odd":
            neg = -pos[:0:-1]
        else:
            raise InvalidArgumentError(f"unknown parity {parity!r}")
        return cls(grid, np.concatenate([neg, pos]), hermitian=parity == "hermitian")

    @property
    def omega(self) -> np.ndarray:
        return self.grid.points

    @property
    def real(self) -> np.ndarray:
        return self.values.real

    @property
    def imag(self) -> np.ndarray:
        return self.values.imag

    def positive_half(self) -> np.ndarray:
        return self.values[self.grid.half_count:]

    def at(self, omega):
        """Linear interpolation on the grid; zero outside its span."""
        w = np.asarray(omega, dtype=float)
        x = self.omega
        re = np.interp(w, x, self.values.real, left=0.0, right=0.0)
        im = np.interp(w, x, self.values.imag, left=0.0, right=0.0)
        return re + 1j * im

    def with_values(self, values, hermitian: bool | None = None) -> "ComplexSpectrum":
        return ComplexSpectrum(self.grid, values, self.hermitian if hermitian is None else hermitian)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0


def hermitian_residual(spectrum: ComplexSpectrum, relative: bool = False) -> float:
    """``max_j |s[-w_j] - conj(s[w_j])|``, optionally divided by ``max |s|``."""
    v = spectrum.values
    res = float(np.max(np.abs(v[::-1] - np.conj(v))))
    if relative:
        scale = spectrum.max_abs()
        return res / scale if scale > 0 else res
    return res


def same_grid(a: ComplexSpectrum, b: ComplexSpectrum) -> bool:
    return a.grid == b.grid


# ---------------------------------------------------------------------------
# serialization


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def spectrum_to_csv(spectrum: ComplexSpectrum, path, metadata: dict | None = None) -> Path:
    """Write ``omega,re,im`` rows; metadata goes in leading ``#`` lines."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        meta = {"units": UNITS_NOTE, "delta": spectrum.grid.delta,
                "half_count": spectrum.grid.half_count}
        meta.update(metadata or {})
        for key, value in meta.items():
            fh.write(f"# {key}: {json.dumps(value) if not isinstance(value, str) else value}\n")
        writer = csv.writer(fh)
        writer.writerow(["omega", "re", "im"])
        for w, v in zip(spectrum.omega, spectrum.values):
            writer.writerow([_fmt(w), _fmt(v.real), _fmt(v.imag)])
    return path


def spectrum_from_csv(path, hermitian: bool = False) -> ComplexSpectrum:
    rows = []
    with Path(path).open() as fh:
        lines = [ln for ln in fh if not ln.startswith("#") and ln.strip()]
    reader = csv.reader(lines)
    header = next(reader)
    if [h.strip() for h in header] != ["omega", "re", "im"]:
        raise InvalidArgumentError(f"{path}: expected header omega,re,im, got {header}")
    for row in reader:
        rows.append([float(x) for x in row])
    data = np.array(rows)
    return _spectrum_from_columns(data[:, 0], data[:, 1] + 1j * data[:, 2], hermitian, str(path))


def _spectrum_from_columns(omega, values, hermitian, source) -> ComplexSpectrum:
    n = len(omega)
    if n < 3 or n % 2 == 0:
        raise InvalidArgumentError(f"{source}: need an odd number (>= 3) of symmetric samples")
    half = n // 2
    # the j = 1 sample is written as exactly delta, so it round-trips bit for bit
    delta = float(omega[half + 1])
    grid = make_grid(delta, half)
    if not np.allclose(omega, grid.points, rtol=0, atol=1e-9 * max(1.0, grid.max_frequency)):
        raise InvalidArgumentError(f"{source}: frequencies are not a symmetric uniform grid")
    return ComplexSpectrum(grid, values, hermitian)


def spectrum_to_json(spectrum: ComplexSpectrum, path=None, metadata: dict | None = None):
    obj: dict[str, Any] = {
        "grid": {"delta": spectrum.grid.delta, "half_count": spectrum.grid.half_count},
        "values": [[float(v.real), float(v.imag)] for v in spectrum.values],
    }
    if metadata is not None:
        obj["metadata"] = {"units": UNITS_NOTE, **metadata}
    if path is None:
        return obj
    Path(path).write_text(json.dumps(obj))
    return Path(path)


def spectrum_from_json(source, hermitian: bool = False) -> ComplexSpectrum:
    if isinstance(source, (str, Path)) and Path(source).exists():
        obj = json.loads(Path(source).read_text())
    elif isinstance(source, dict):
        obj = source
    else:
        obj = json.loads(source)
    grid = make_grid(obj["grid"]["delta"], obj["grid"]["half_count"])
    vals = np.array([complex(re, im) for re, im in obj["values"]])
    return ComplexSpectrum(grid, vals, hermitian)


# ---------------------------------------------------------------------------
# states and systems


@dataclass(frozen=True)
class ThermalState:
    temperature: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.temperature) or self.temperature < 0:
            raise InvalidArgumentError(f"temperature must be >= 0, got {self.temperature!r}")
        object.__setattr__(self, "temperature", float(self.temperature))

    @property
    def is_vacuum(self) -> bool:
        return self.temperature == 0.0


TemperatureLike = Union[float, ThermalState]


def as_temperature(T: TemperatureLike) -> float:
    if isinstance(T, ThermalState):
        return T.temperature
    return ThermalState(float(T)).temperature


def symmetric_thermal_factor(omega, T: float):
    """``coth(|w| / 2T)`` with the vacuum value 1; singular at w = 0 for T > 0."""
    w = np.abs(np.asarray(omega, dtype=float))
    if T == 0:
        return np.ones_like(w)
    with np.errstate(divide="ignore"):
        return 1.0 / np.tanh(w / (2.0 * T))


@dataclass(frozen=True)
class LinearCharge:
    """Point charge coupled through ``e A(0) . qdot``, one Cartesian component."""

    charge_squared: float
    regulator: Any
    temperature: float = 0.0

    def __post_init__(self):
        if not self.charge_squared > 0:
            raise InvalidArgumentError("charge_squared must be positive")


@dataclass(frozen=True)
class Scatterer:
    """Point scatterer driven by radiation pressure of a thermal scalar field."""

    smatrix: Any
    state: ThermalState = field(default_factory=ThermalState)


@dataclass(frozen=True)
class BrownianKernel:
    """White force noise ``C_FF = 2D`` with friction ``D/T``."""

    diffusion: float
    temperature: float

    def __post_init__(self):
        if self.diffusion < 0:
            raise InvalidArgumentError("diffusion must be >= 0")
        if not self.temperature > 0:
            raise InvalidArgumentError("Brownian kernel needs T > 0")

    @property
    def friction(self) -> float:
        return self.diffusion / self.temperature


@dataclass(frozen=True)
class AbrahamLorentz:
    """Renormalized radiation reaction ``chi = (2/3) i e^2 w^3`` (infinite cutoff)."""

    charge_squared: float
    temperature: float = 0.0

    def __post_init__(self):
        if not self.charge_squared > 0:
            raise InvalidArgumentError("charge_squared must be positive")


Coupling = Union[LinearCharge, Scatterer, BrownianKernel, AbrahamLorentz]


@dataclass(frozen=True)
class MechanicalSystem:
    """``M qddot - chi * q = -K q + F`` with the mass that appears in that equation.

    ``mass`` is the bare (high frequency) mass for a regulated charge, the vacuum
    quasistatic mass ``M_0`` for a scatterer, and the renormalized mass for the
    Abraham-Lorentz form.
    """

    mass: float
    spring: float
    coupling: Coupling
    flags: tuple = ()

    def __post_init__(self):
        flags = set(self.flags)
        if self.spring < 0:
            if not isinstance(self.coupling, AbrahamLorentz):
                raise InvalidArgumentError("spring constant must be >= 0")
            flags.add("unbound")
        object.__setattr__(self, "flags", tuple(sorted(flags)))

    @property
    def is_bound(self) -> bool:
        return self.spring > 0

    def susceptibility(self, omega):
        """Motional susceptibility on the real axis (vectorized)."""
        c = self.coupling
        w = np.asarray(omega, dtype=float)
        if isinstance(c, BrownianKernel):
            return 1j * c.friction * w
        if isinstance(c, AbrahamLorentz):
            return (2.0 / 3.0) * 1j * c.charge_squared * w**3 + 0j
        if isinstance(c, LinearCharge):
            from .linear_coupling import charge_susceptibility, LinearCoupling

            return charge_susceptibility(LinearCoupling(c.charge_squared, c.regulator), w)
        if isinstance(c, Scatterer):
            from .radiation_pressure import thermal_susceptibility

            return thermal_susceptibility(c.smatrix, c.state, w)
        raise InvalidArgumentError(f"unknown coupling {c!r}")

    def stiffness(self, omega, chi=None):
        """``K - M w^2 - chi[w]``; the position response is ``q = F / stiffness``."""
        w = np.asarray(omega, dtype=float)
        if chi is None:
            chi = self.susceptibility(w)
        return self.spring - self.mass * w**2 - chi

    def admittance(self, omega, chi=None):
        """Velocity response ``Y[w] = -i w / stiffness``."""
        w = np.asarray(omega, dtype=float)
        return -1j * w / self.stiffness(w, chi)

    def noise_spectrum(self, omega):
        """Symmetrized force spectrum ``(C_FF[w] + C_FF[-w]) / 2``."""
        c = self.coupling
        w = np.asarray(omega, dtype=float)
        if isinstance(c, BrownianKernel):
            return np.full_like(w, 2.0 * c.diffusion)
        if isinstance(c, Scatterer):
            from .radiation_pressure import symmetrized_force_spectrum

            return symmetrized_force_spectrum(c.smatrix, c.state, w)
        chi = self.susceptibility(np.abs(w))
        # xi ~ w^3 near zero for both charge models, so the coth pole is harmless
        with np.errstate(invalid="ignore"):
            out = chi.imag * symmetric_thermal_factor(w, c.temperature)
        return np.where(w == 0, 0.0, out)
