"""Scattering models ``(r, s)`` of a point scatterer at rest and their checks.

Closed-form kinds accept complex frequencies (they are analytic in the upper
half plane); tabulated kinds only answer on their own real grid.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ComplexSpectrum, FrequencyGrid, hermitian_residual, spectrum_from_csv
from .errors import InvalidArgumentError, UnsupportedContinuationError


class SMatrixModel:
    """Base class; subclasses implement :meth:`rs` and, if closed form, :meth:`derivatives`."""

    closed_form = True

    def rs(self, omega):
        raise NotImplementedError

    def derivatives(self, omega, order: int):
        """``(d^n r/dw^n, d^n s/dw^n)``."""
        raise NotImplementedError

    def poles(self):
        """Known poles of ``r`` and ``s`` (closed forms only)."""
        return []


@dataclass(frozen=True)
class PerfectReflector(SMatrixModel):
    """``r = -1``, ``s = 0`` at all frequencies (no transparency)."""

    def rs(self, omega):
        w = np.asarray(omega)
        return np.full(w.shape, -1.0 + 0j), np.zeros(w.shape, dtype=complex)

    def derivatives(self, omega, order):
        w = np.asarray(omega)
        z = np.zeros(w.shape, dtype=complex)
        return z, z.copy()


@dataclass(frozen=True)
class ResonanceCutoff(SMatrixModel):
    """``r = -i W / (w + i W)``, ``s = 1 + r = w / (w + i W)``."""

    cutoff: float

    def __post_init__(self):
        if not self.cutoff > 0:
            raise InvalidArgumentError("cutoff must be positive")

    def rs(self, omega):
        w = np.asarray(omega, dtype=complex)
        W = self.cutoff
        d = w + 1j * W
        return -1j * W / d, w / d

    def derivatives(self, omega, order):
        w = np.asarray(omega, dtype=complex)
        W = self.cutoff
        d = w + 1j * W
        # r^(n) = -iW (-1)^n n! / d^(n+1); s = 1 + r
        fact = float(np.prod(np.arange(1, order + 1))) if order > 0 else 1.0
        if order == 0:
            return self.rs(w)
        rn = -1j * W * (-1) ** order * fact / d ** (order + 1)
        return rn, rn.copy()

    def poles(self):
        return [-1j * self.cutoff]


@dataclass(frozen=True)
class Tabulated(SMatrixModel):
    """Reflection and transmission sampled on one real grid."""

    r: ComplexSpectrum
    s: ComplexSpectrum
    closed_form = False

    def __post_init__(self):
        if self.r.grid != self.s.grid:
            raise InvalidArgumentError("r and s must share one grid")

    @property
    def grid(self) -> FrequencyGrid:
        return self.r.grid

    def rs(self, omega):
        w = np.asarray(omega)
        if np.iscomplexobj(w) and np.any(np.imag(w) != 0):
            raise UnsupportedContinuationError("tabulated S-matrix cannot be evaluated off the real axis")
        w = np.real(w).astype(float)
        x = w / self.grid.delta
        j = np.rint(x).astype(int)
        if np.any(np.abs(x - j) > 1e-9) or np.any(np.abs(j) > self.grid.half_count):
            raise UnsupportedContinuationError("tabulated S-matrix only answers on its grid points")
        idx = j + self.grid.half_count
        return self.r.values[idx], self.s.values[idx]

    def derivatives(self, omega, order):
        raise UnsupportedContinuationError("tabulated S-matrix has no derivatives")


def load_tabulated(r_path, s_path) -> Tabulated:
    """Load ``r`` and ``s`` from two ``omega,re,im`` CSV files."""
    return Tabulated(spectrum_from_csv(r_path, hermitian=True), spectrum_from_csv(s_path, hermitian=True))


def parse_model(text: str) -> SMatrixModel:
    """``"perfect"`` or ``"resonance:<cutoff>"``."""
    text = text.strip().lower()
    if text in ("perfect", "perfect_reflector", "perfect-reflector"):
        return PerfectReflector()
    if text.startswith("resonance"):
        _, _, arg = text.partition(":")
        try:
            return ResonanceCutoff(float(arg) if arg else 1.0)
        except ValueError as exc:
            raise InvalidArgumentError(f"bad cutoff in model {text!r}") from exc
    raise InvalidArgumentError(f"unknown S-matrix model {text!r} (use 'perfect' or 'resonance:<W>')")


def eval_rs(model: SMatrixModel, omega):
    """Reflection and transmission amplitudes at ``omega``."""
    return model.rs(omega)


def check_unitarity(model: SMatrixModel, grid: FrequencyGrid) -> float:
    """``max | |r|^2 + |s|^2 - 1 |`` over the grid."""
    w = model.grid.points if isinstance(model, Tabulated) else grid.points
    r, s = model.rs(w)
    return float(np.max(np.abs(np.abs(r) ** 2 + np.abs(s) ** 2 - 1.0)))


def check_reality(model: SMatrixModel, grid: FrequencyGrid) -> float:
    """Largest hermitian residual of ``r`` and ``s`` on the grid."""
    g = model.grid if isinstance(model, Tabulated) else grid
    r, s = model.rs(g.points)
    return max(hermitian_residual(ComplexSpectrum(g, r)), hermitian_residual(ComplexSpectrum(g, s)))


def check_transparency(model: SMatrixModel, omega_c: float, band_factor: float = 10.0,
                       samples: int = 2001) -> float:
    """``max |r|`` over ``[band_factor * omega_c, 10 * band_factor * omega_c]``."""
    if not omega_c > 0:
        raise InvalidArgumentError("omega_c must be positive")
    if band_factor < 1:
        raise InvalidArgumentError("band_factor must be >= 1")
    lo, hi = band_factor * omega_c, 10 * band_factor * omega_c
    if isinstance(model, Tabulated):
        w = model.grid.points
        w = w[(w >= lo) & (w <= hi)]
        if w.size == 0:
            raise InvalidArgumentError("tabulated grid does not reach the transparency band")
    else:
        w = np.linspace(lo, hi, samples)
    r, _ = model.rs(w)
    return float(np.max(np.abs(r)))


def check_causality(model: SMatrixModel, box, **kwargs) -> int:
    """Net number of poles of ``r`` and ``s`` inside ``box = (re_min, re_max, im_min, im_max)``.

    Each amplitude contributes the winding number of its reciprocal around the
    box (poles minus zeros).  Amplitudes that vanish identically are entire
    and are skipped.  Zero means no singularity in the box.
    """
    if not getattr(model, "closed_form", True):
        raise UnsupportedContinuationError("causality of tabulated data is checked via dispersion relations")
    re0, re1, im0, im1 = box
    if im0 <= 0 or re1 <= re0 or im1 <= im0:
        raise InvalidArgumentError("box must be a proper rectangle inside Im(w) > 0")
    from .contour import winding_number

    probe = np.array([re0 + 1j * im0, re1 + 1j * im1, 0.5 * (re0 + re1) + 1j * im1])
    total = 0
    for pick in (0, 1):
        if np.all(model.rs(probe)[pick] == 0):
            continue
        total += winding_number(lambda w, pick=pick: 1.0 / model.rs(w)[pick], box, **kwargs)
    return total
