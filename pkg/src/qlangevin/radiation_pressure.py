"""Radiation pressure on a point scatterer in a thermal scalar field (2D space-time).

Kernels ``alpha``, ``beta``, ``gamma`` built from the S-matrix, the field
spectra ``sigma`` and ``c``, the motional susceptibility ``chi_T`` (vacuum
part plus Bose-weighted thermal part), the force commutator ``xi_T``, the
force spectrum ``C_FF`` and the quasistatic coefficients.

Convention: ``Im chi_T = xi_T`` on the real axis with ``xi_T`` real and odd.

Integrals over ``[0, w]`` are mapped to ``u in [0, 1]``; Bose-weighted
semi-infinite integrals are mapped to ``u = w'/T`` and truncated where the
weight drops below 1e-16 of its peak.  Both are done with vectorized adaptive
quadrature over all requested frequencies at once.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad_vec

from ._backend import kernels
from .core import ComplexSpectrum, FrequencyGrid, TemperatureLike, as_temperature
from .errors import InvalidArgumentError, UnsupportedContinuationError
from .quadrature import bose_cutoff, bose_weight
from .smatrix import PerfectReflector, SMatrixModel, Tabulated

RTOL = 1e-12
ATOL = 1e-14
_BATCH = 512
_U_MAX = bose_cutoff(1e-16, power=3)


def _alpha(model, a, b):
    ra, sa = model.rs(a)
    rb, sb = model.rs(b)
    return 1.0 - sa * sb + ra * rb


def alpha_beta_gamma(model: SMatrixModel, omega, omega_prime):
    """``alpha = 1 - s s' + r r'``, ``beta = s r' - r s'``, ``gamma = |alpha|^2 + |beta|^2``."""
    ra, sa = model.rs(omega)
    rb, sb = model.rs(omega_prime)
    al = 1.0 - sa * sb + ra * rb
    be = sa * rb - ra * sb
    ga = np.abs(al) ** 2 + np.abs(be) ** 2
    return al, be, ga


def gamma_kernel(model, a, b):
    """``gamma[a, b]``, symmetrized so that swapping the arguments is bit-exact
    (fused multiply-add makes complex products order dependent)."""
    return 0.5 * (alpha_beta_gamma(model, a, b)[2] + alpha_beta_gamma(model, b, a)[2])


# ---------------------------------------------------------------------------
# field spectra


def field_commutator(omega):
    """``xi[w] = w / 4``, independent of the state."""
    return np.asarray(omega, dtype=float) / 4.0


def thermal_sigma(T: TemperatureLike, omega):
    """``sigma[w] = (w/4) coth(w / 2T)``; ``|w|/4`` in vacuum and ``T/2`` at ``w = 0``."""
    T = as_temperature(T)
    w = np.asarray(omega, dtype=float)
    if T == 0:
        return np.abs(w) / 4.0
    x = np.abs(w) / (2.0 * T)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.abs(w) / (4.0 * np.tanh(x))
    return np.where(w == 0, T / 2.0, out)


def field_c(T: TemperatureLike, omega):
    """``c[w] = xi[w] + sigma[w] = w / (2 (1 - exp(-w/T)))``."""
    T = as_temperature(T)
    w = np.asarray(omega, dtype=float)
    if T == 0:
        return np.where(w > 0, w / 2.0, 0.0)
    a = np.abs(w) / T
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        pos = np.abs(w) / (-2.0 * np.expm1(-a))
        neg = np.abs(w) / (2.0 * np.expm1(a))
    out = np.where(w > 0, pos, neg)
    return np.where(w == 0, T / 2.0, out)


# ---------------------------------------------------------------------------
# helpers


def _require_closed_form(model):
    if isinstance(model, Tabulated) or not getattr(model, "closed_form", True):
        raise UnsupportedContinuationError(
            "continuous-frequency quadrature needs a closed-form S-matrix; "
            "use the *_grid functions for tabulated models"
        )


def _batched(w, fn):
    w = np.asarray(w)
    flat = w.ravel()
    out = np.empty(flat.shape, dtype=complex)
    for start in range(0, flat.size, _BATCH):
        out[start:start + _BATCH] = fn(flat[start:start + _BATCH])
    return out.reshape(w.shape)


def _qv(f, a, b):
    val, _ = quad_vec(f, a, b, epsrel=RTOL, epsabs=ATOL, norm="max", limit=20000)
    return val


def _unit_integral(model, w, kernel):
    """``int_0^1 u (1 - u) kernel(w u, w (1 - u)) du``, vectorized in ``w``."""

    def f(u):
        return u * (1 - u) * kernel(model, w * u, w * (1 - u))

    return _qv(f, 0.0, 1.0)


def _bose_integral(T, w, bracket):
    """``int_0^inf dw' w' n(w') bracket(w, w') = T^2 int_0^U du u/(e^u - 1) bracket(w, T u)``.

    ``bracket`` values are divided by ``(|w| + T)`` while integrating so the
    absolute tolerance is uniform across frequencies.
    """
    scale = np.abs(w) + T

    def f(u):
        return bose_weight(u) * bracket(w, T * u) / scale

    return T**2 * scale * _qv(f, 0.0, _U_MAX)


# ---------------------------------------------------------------------------
# susceptibility and force commutator


def vacuum_susceptibility(model: SMatrixModel, omega):
    """``chi_0[w] = i int_0^w dw'/2pi w' (w - w') alpha[w', w - w']``.

    Accepts complex ``w`` with ``Im w >= 0`` (the straight path from 0 stays
    in the upper half plane where the S-matrix is analytic).
    """
    _require_closed_form(model)
    w = np.asarray(omega)
    if np.any(np.imag(w) < 0):
        raise InvalidArgumentError("vacuum_susceptibility needs Im(omega) >= 0")
    wc = w.astype(complex)

    def one(batch):
        return 1j * batch**3 * _unit_integral(model, batch, _alpha) / (2 * np.pi)

    return _batched(wc, one)


def vacuum_force_commutator(model: SMatrixModel, omega):
    """``xi_0[w] = int_0^w dw'/4pi w' (w - w') gamma[w', w - w']``; real and odd."""
    _require_closed_form(model)
    w = np.asarray(omega, dtype=float)

    def one(batch):
        return batch**3 * _unit_integral(model, batch, gamma_kernel) / (4 * np.pi)

    return _batched(w, one).real


def _thermal_chi_bracket(model):
    def bracket(w, wp):
        return (w + wp) * _alpha(model, -wp, w + wp) + (w - wp) * _alpha(model, wp, w - wp)

    return bracket


def _thermal_xi_bracket(model):
    def bracket(w, wp):
        return (w - wp) * gamma_kernel(model, wp, w - wp) + (w + wp) * gamma_kernel(model, -wp, w + wp)

    return bracket


def thermal_susceptibility(model: SMatrixModel, T: TemperatureLike, omega):
    """``chi_T = chi_0 + 2i int_0^inf dw'/2pi w' n(w') {(w+w') alpha[-w', w+w'] + (w-w') alpha[w', w-w']}``."""
    T = as_temperature(T)
    chi0 = vacuum_susceptibility(model, omega)
    if T == 0:
        return chi0
    w = np.asarray(omega).astype(complex)
    bracket = _thermal_chi_bracket(model)

    def one(batch):
        return 1j * _bose_integral(T, batch, bracket) / np.pi

    return chi0 + _batched(w, one)


def force_commutator(model: SMatrixModel, T: TemperatureLike, omega):
    """``xi_T = xi_0 + int_0^inf dw'/2pi w' n(w') {(w-w') gamma[w', w-w'] + (w+w') gamma[-w', w+w']}``.

    This is the vacuum/thermal split of ``int dw'/2pi 2 (w - w') sigma[w'] gamma[w', w - w']``.
    """
    T = as_temperature(T)
    xi0 = vacuum_force_commutator(model, omega)
    if T == 0:
        return xi0
    w = np.asarray(omega, dtype=float)
    bracket = _thermal_xi_bracket(model)

    def one(batch):
        return _bose_integral(T, batch, bracket) / (2 * np.pi)

    return xi0 + _batched(w, one).real


def force_spectrum(model: SMatrixModel, T: TemperatureLike, omega):
    """``C_FF[w] = int dw'/2pi 4 c[w'] c[w - w'] gamma[w', w - w']``.

    The integrand is supported on ``[min(0, w), max(0, w)]`` in vacuum and
    decays like ``exp(-|.|/T)`` outside it at finite temperature.
    """
    _require_closed_form(model)
    T = as_temperature(T)
    w = np.asarray(omega, dtype=float)

    def integrand(batch, wp):
        return 4.0 * field_c(T, wp) * field_c(T, batch - wp) * gamma_kernel(model, wp, batch - wp)

    def one(batch):
        lo = np.minimum(batch, 0.0)
        hi = np.maximum(batch, 0.0)
        span = hi - lo
        # scale by the expected magnitude, (|w|^3 + T^3) times the Boltzmann factor
        # for w < 0, so that tolerances stay relative across the batch
        boltz = np.exp(np.minimum(batch, 0.0) / T) if T > 0 else 1.0
        scale = np.maximum((np.abs(batch) ** 3 + T**3) * boltz, 1e-300)
        mid = _qv(lambda u: span * integrand(batch, lo + span * u) / scale, 0.0, 1.0) * scale
        if T == 0:
            return mid / (2 * np.pi)
        right = _qv(lambda v: T * integrand(batch, hi + T * v) / scale, 0.0, _U_MAX) * scale
        left = _qv(lambda v: T * integrand(batch, lo - T * v) / scale, 0.0, _U_MAX) * scale
        return (mid + right + left) / (2 * np.pi)

    return _batched(w, one).real


def symmetrized_force_spectrum(model: SMatrixModel, T: TemperatureLike, omega):
    """``(C_FF[w] + C_FF[-w]) / 2``."""
    w = np.asarray(omega, dtype=float)
    return 0.5 * (force_spectrum(model, T, w) + force_spectrum(model, T, -w))


# ---------------------------------------------------------------------------
# quasistatic responses


@dataclass(frozen=True)
class QuasistaticCoefficients:
    friction: float          # xi_T'[0] = Im chi_T'[0]
    half_curvature: float    # (1/2) chi_T''[0]

    def as_dict(self):
        return {"friction": self.friction, "half_curvature": self.half_curvature}


def quasistatic_coefficients(model: SMatrixModel, T: TemperatureLike) -> QuasistaticCoefficients:
    """Friction ``xi_T'[0]`` and mass correction ``(1/2) chi_T''[0]`` from the
    Taylor expansion of the thermal integrand at ``w = 0``.  Both vanish in vacuum.
    """
    _require_closed_form(model)
    T = as_temperature(T)
    if T == 0:
        return QuasistaticCoefficients(0.0, 0.0)

    def d_alpha(a, b, order):
        ra, sa = model.rs(a)
        rn, sn = model.derivatives(b, order)
        return -sa * sn + ra * rn

    def brackets(wp):
        # f(w) = (w + w') A(w + w') + (w - w') B(w - w'), A = alpha[-w', .], B = alpha[w', .]
        A0 = _alpha(model, -wp, wp)
        B0 = _alpha(model, wp, -wp)
        A1 = d_alpha(-wp, wp, 1)
        B1 = d_alpha(wp, -wp, 1)
        A2 = d_alpha(-wp, wp, 2)
        B2 = d_alpha(wp, -wp, 2)
        f1 = A0 + B0 + wp * (A1 - B1)
        f2 = 2 * A1 + wp * A2 + 2 * B1 - wp * B2
        return np.array([f1, f2])

    def f(u):
        return bose_weight(u) * brackets(T * u)

    vals = T**2 * _qv(f, 0.0, _U_MAX)
    chi1 = 2j * vals[0] / (2 * np.pi)
    half_chi2 = 2j * vals[1] / (2 * np.pi) / 2
    return QuasistaticCoefficients(float(chi1.imag), float(half_chi2.real))


def small_T_correction(model: SMatrixModel, T: TemperatureLike, omega):
    """Leading thermal correction ``(i pi T^2 / 3) w alpha[0, w]`` to ``chi_0``."""
    T = as_temperature(T)
    w = np.asarray(omega, dtype=float)
    return 1j * np.pi * T**2 / 3.0 * w * _alpha(model, np.zeros_like(w), w)


def momentum_diffusion(model: SMatrixModel, T: TemperatureLike) -> float:
    """``D = T xi_T'[0]``; zero in vacuum."""
    T = as_temperature(T)
    if T == 0:
        return 0.0
    if isinstance(model, PerfectReflector):
        return 2 * np.pi * T**3 / 3
    return T * quasistatic_coefficients(model, T).friction


def perfect_reflector_xi(T: TemperatureLike, omega):
    """Constant-reflectivity limit ``xi_T = w^3/6pi + 2pi T^2 w / 3``."""
    T = as_temperature(T)
    w = np.asarray(omega, dtype=float)
    return w**3 / (6 * np.pi) + 2 * np.pi * T**2 * w / 3


# ---------------------------------------------------------------------------
# direct summation on a uniform grid


def _grid_samples(model, T, delta, half_count):
    g = FrequencyGrid(delta, half_count)
    if isinstance(model, Tabulated):
        if model.grid.delta != delta or model.grid.half_count < half_count:
            raise InvalidArgumentError(
                f"tabulated S-matrix must share the step and cover half_count >= {half_count}"
            )
        off = model.grid.half_count - half_count
        r = model.r.values[off:off + g.size]
        s = model.s.values[off:off + g.size]
    else:
        r, s = model.rs(g.points)
    return g, np.ascontiguousarray(r, dtype=complex), np.ascontiguousarray(s, dtype=complex)


def force_commutator_grid(model: SMatrixModel, T: TemperatureLike, band: FrequencyGrid,
                          out_half_count: int) -> ComplexSpectrum:
    """``xi_T`` on ``w_i = i * delta`` (``|i| <= out_half_count``) by trapezoidal
    summation over the band grid of the symmetrized integrand
    ``{(w - w') sigma[w'] + w' sigma[w - w']} gamma[w', w - w'] / 2pi``.
    """
    T = as_temperature(T)
    L = band.half_count + out_half_count
    g, r, s = _grid_samples(model, T, band.delta, L)
    sigma = np.ascontiguousarray(thermal_sigma(T, g.points))
    vals = kernels.grid_xi_sum(sigma, r, s, band.half_count, out_half_count, band.delta)
    if T == 0:
        # |w'| has kinks on grid nodes at w' = 0 and w' = w; the Euler-Maclaurin
        # jump terms restore O(delta^4) accuracy (exact for gamma constant)
        w, g0 = _kink_gammas(model, band.delta, out_half_count)
        vals = vals + band.delta**2 / 12 * (w / 2) * g0 / (2 * np.pi)
    return ComplexSpectrum(FrequencyGrid(band.delta, out_half_count), vals, hermitian=True)


def _kink_gammas(model, delta, half_count):
    """Output frequencies and ``gamma[0, w] + gamma[w, 0]`` on them."""
    w = FrequencyGrid(delta, half_count).points
    zero = np.zeros_like(w)
    return w, gamma_kernel(model, zero, w) + gamma_kernel(model, w, zero)


def force_spectrum_grid(model: SMatrixModel, T: TemperatureLike, band: FrequencyGrid,
                        out_half_count: int) -> ComplexSpectrum:
    """``C_FF`` by trapezoidal summation of ``4 c c' gamma / 2pi`` over the band grid."""
    T = as_temperature(T)
    L = band.half_count + out_half_count
    g, r, s = _grid_samples(model, T, band.delta, L)
    c = np.ascontiguousarray(field_c(T, g.points))
    vals = kernels.grid_cff_sum(c, r, s, band.half_count, out_half_count, band.delta)
    if T == 0:
        # c[w'] = w' theta(w') / 2 kinks at both ends of the support [0, w]
        w, g0 = _kink_gammas(model, band.delta, out_half_count)
        vals = vals + band.delta**2 / 12 * 2 * np.maximum(w, 0) / 2 * g0 / (2 * np.pi)
    return ComplexSpectrum(FrequencyGrid(band.delta, out_half_count), vals)
