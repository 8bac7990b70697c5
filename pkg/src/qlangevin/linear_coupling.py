"""Point charge linearly coupled to the field: susceptibility, force commutator,
induced mass, and the Abraham-Lorentz limit.  Also the generic 1D linear
coupling ``e[w, k]`` of a particle to a scalar field.

Formulas are per Cartesian component; the 3D angular factors are already
folded in.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .core import AbrahamLorentz, LinearCharge, MechanicalSystem
from .errors import DomainError, InvalidArgumentError
from .quadrature import integrate_to_infinity, quad, second_derivative_at


# ---------------------------------------------------------------------------
# regulators


@dataclass(frozen=True)
class ModelFormFactor:
    """``W[k] = (W^2 / (W^2 + k^2))^2`` with cutoff ``W``."""

    cutoff: float

    def __post_init__(self):
        if not self.cutoff > 0:
            raise InvalidArgumentError("cutoff must be positive")

    @property
    def scale(self) -> float:
        return self.cutoff

    def __call__(self, k):
        W2 = self.cutoff**2
        return (W2 / (W2 + np.asarray(k, dtype=float) ** 2)) ** 2


@dataclass(frozen=True)
class TabulatedRegulator:
    """Samples ``W[k]`` on increasing ``k >= 0``; linear in between, zero past the table."""

    k: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.k, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if k.ndim != 1 or k.shape != v.shape or k.size < 2:
            raise InvalidArgumentError("regulator table needs matching 1D k and value arrays")
        if np.any(np.diff(k) <= 0) or k[0] < 0:
            raise InvalidArgumentError("regulator k samples must be increasing and >= 0")
        if np.any(v < 0) or np.any(v > 1):
            raise InvalidArgumentError("regulator values must lie in [0, 1]")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "values", v)

    @property
    def scale(self) -> float:
        # half-weight point of the table
        above = np.nonzero(self.values < 0.5 * self.values[0])[0]
        return float(self.k[above[0]]) if above.size else float(self.k[-1])

    @property
    def support(self) -> float:
        return float(self.k[-1])

    def __call__(self, k):
        return np.interp(np.asarray(k, dtype=float), self.k, self.values, right=0.0)


@dataclass(frozen=True)
class FunctionRegulator:
    """Any vectorized callable ``W[k]``; ``scale`` sets the quadrature breakpoints."""

    func: Callable
    scale: float = 1.0

    def __call__(self, k):
        return np.asarray(self.func(np.asarray(k, dtype=float)), dtype=float) * np.ones_like(k, dtype=float)


def load_regulator_csv(path) -> TabulatedRegulator:
    data = np.genfromtxt(Path(path), delimiter=",", names=True, comments="#")
    if data.dtype.names is None or tuple(data.dtype.names[:2]) != ("k", "value"):
        raise InvalidArgumentError(f"{path}: expected header k,value")
    return TabulatedRegulator(np.atleast_1d(data["k"]), np.atleast_1d(data["value"]))


@dataclass(frozen=True)
class LinearCoupling:
    charge_squared: float
    regulator: object

    def __post_init__(self):
        if not self.charge_squared > 0:
            raise InvalidArgumentError("charge_squared must be positive")


# ---------------------------------------------------------------------------
# point charge


def charge_force_commutator(c: LinearCoupling, omega):
    """``xi_FF[w] = (2/3) e^2 w^3 W[|w|]``, real and odd."""
    w = np.asarray(omega, dtype=float)
    return (2.0 / 3.0) * c.charge_squared * w**3 * c.regulator(np.abs(w))


def charge_susceptibility(c: LinearCoupling, omega):
    """Retarded susceptibility ``-(4/3) w^2 int k^2 dk/pi e^2 W[k] / ((w + i0)^2 - k^2)``.

    The model form factor uses its closed form ``-(e^2/3) W^3 w^2 / (w + iW)^2``;
    other regulators are integrated numerically (principal value plus half
    residue on the real axis).
    """
    w = np.asarray(omega)
    if np.any(np.imag(w) < 0):
        raise DomainError("susceptibility is only defined for Im(omega) >= 0")
    if isinstance(c.regulator, ModelFormFactor):
        W = c.regulator.cutoff
        wc = w.astype(complex)
        return -(c.charge_squared / 3.0) * W**3 * wc**2 / (wc + 1j * W) ** 2
    flat = np.atleast_1d(w).ravel()
    out = np.array([_charge_chi_quadrature(c, complex(x)) for x in flat])
    return out.reshape(np.shape(w)) if np.ndim(w) else out[0]


def _regulator_breaks(reg):
    scale = float(getattr(reg, "scale", 1.0))
    end = float(getattr(reg, "support", np.inf))
    return scale, end


def _charge_chi_quadrature(c: LinearCoupling, w: complex) -> complex:
    reg = c.regulator
    pref = -(4.0 / 3.0) * c.charge_squared / np.pi
    scale, end = _regulator_breaks(reg)
    if w == 0:
        return 0j
    if w.imag > 0:
        def f(k):
            return k * k * reg(k) / (w * w - k * k)

        re = _half_line(lambda k: f(k).real, scale, end)
        im = _half_line(lambda k: f(k).imag, scale, end)
        return pref * w * w * (re + 1j * im)
    x = abs(w.real)
    # PV int_0^inf k^2 W / (x^2 - k^2) = PV int -k^2 W / (k + x) / (k - x)
    b = max(4.0 * x, 20.0 * scale) if not np.isfinite(end) else end
    pv = quad(lambda k: -k * k * reg(k) / (k + x), 0.0, b, weight="cauchy", wvar=x)
    if np.isfinite(end):
        tail = 0.0
    else:
        tail, _ = integrate_to_infinity(lambda k: k * k * reg(k) / (x * x - k * k), b, b)
    real = pref * x * x * (pv + tail)
    imag = float(charge_force_commutator(c, w.real))
    return real + 1j * imag


def _half_line(f, scale, end):
    if np.isfinite(end):
        return quad(f, 0.0, end, points=[scale] if scale < end else None)
    head = quad(f, 0.0, scale)
    tail, _ = integrate_to_infinity(f, scale, scale)
    return head + tail


def induced_mass_charge(c: LinearCoupling, rtol: float = 1e-11) -> float:
    """``mu = 2 int_0^inf dk/pi xi_FF[k] / k^3 = (4/3pi) e^2 int_0^inf W[k] dk``.

    Raises :class:`DivergenceError` when the regulator does not decay.
    """
    reg = c.regulator
    scale, end = _regulator_breaks(reg)
    if np.isfinite(end):
        integral = quad(reg, 0.0, end, rtol=rtol)
    else:
        integral, _ = integrate_to_infinity(reg, 0.0, scale, rtol=rtol)
    return (4.0 / (3.0 * np.pi)) * c.charge_squared * integral


def half_curvature_at_zero(c: LinearCoupling, h: float | None = None) -> float:
    """``(1/2) chi''[0]`` by Richardson-extrapolated central differences."""
    scale, _ = _regulator_breaks(c.regulator)
    h = 1e-3 * scale if h is None else h
    return float(np.real(second_derivative_at(lambda x: charge_susceptibility(c, x), 0.0, h))) / 2


def abraham_lorentz_system(M: float, e2: float, K: float) -> MechanicalSystem:
    """Renormalized system ``M qddot - (2/3) e^2 qdddot = -K q + F``.

    Its impedance is ``Z[w] = -iMw + iK/w + (2/3) e^2 w^2``.  ``K < 0`` is
    accepted and flagged ``unbound``.
    """
    return MechanicalSystem(mass=M, spring=K, coupling=AbrahamLorentz(e2))


def point_charge_system(M: float, coupling: LinearCoupling, K: float = 0.0,
                        temperature: float = 0.0) -> MechanicalSystem:
    """Regulated charge with quasistatic mass ``M``; the equation carries ``m = M - mu``."""
    mu = induced_mass_charge(coupling)
    return MechanicalSystem(
        mass=M - mu, spring=K,
        coupling=LinearCharge(coupling.charge_squared, coupling.regulator, temperature),
    )


# ---------------------------------------------------------------------------
# generic 1D linear coupling


def _check_reality(coupling, w, k, tol=1e-12):
    a = np.asarray(coupling(w, k), dtype=complex)
    b = np.asarray(coupling(-w, -k), dtype=complex)
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(b - np.conj(a))) > tol * scale:
        raise InvalidArgumentError("coupling is not real: e[w, k]* != e[-w, -k]")


def generic_force_commutator(coupling, omega: float) -> float:
    """``xi_FF[w] = (e[w,w] e[-w,-w] + e[w,-w] e[-w,w]) / 4w``."""
    w = float(omega)
    if w == 0:
        return 0.0
    a = coupling(w, w) * coupling(-w, -w) + coupling(w, -w) * coupling(-w, w)
    return float(np.real(a)) / (4 * w)


def generic_linear_susceptibility(coupling, omega: float, scale: float = 1.0,
                                  k_max: float = np.inf) -> complex:
    """``chi[w] = -int dk/2pi e[w,k] e[-w,-k] / ((w + i0)^2 - k^2)`` for real ``w``.

    ``coupling(w, k)`` must be vectorized in ``k``; ``scale`` is the coupling's
    decay scale in ``k`` (used for quadrature breakpoints).
    """
    w = float(omega)
    probe = np.linspace(-5 * scale, 5 * scale, 41)
    _check_reality(coupling, w, probe)

    def h(k):
        return np.abs(np.asarray(coupling(w, k), dtype=complex)) ** 2 + np.abs(
            np.asarray(coupling(w, -k), dtype=complex)) ** 2

    if w == 0:
        return 0j
    x = abs(w)
    b = min(max(4.0 * x, 20.0 * scale), k_max)
    pv = quad(lambda k: -h(k) / (k + x), 0.0, b, weight="cauchy", wvar=x)
    tail = 0.0
    if b < k_max:
        if np.isfinite(k_max):
            tail = quad(lambda k: h(k) / (x * x - k * k), b, k_max)
        else:
            tail, _ = integrate_to_infinity(lambda k: h(k) / (x * x - k * k), b, b)
    real = -(pv + tail) / (2 * np.pi)
    return real + 1j * generic_force_commutator(coupling, w)
