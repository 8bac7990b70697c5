"""Subtracted dispersion relations between ``xi = Im chi`` and ``chi``, induced-mass
integrals, and fluctuation-dissipation consistency checks.

With ``n`` subtractions at ``w = 0`` and known Taylor coefficients
``c_1 .. c_{n-1}``::

    chi[w] = sum_j c_j w^j + (w^n / pi) int dk g(k) / (k - w - i0)
    g(k)   = (xi[k] - sum_{odd j} Im(c_j) k^j) / k^n

``g`` has definite parity, so the integral is folded onto ``k > 0``.  The
principal value is taken by subtracting the singularity: the difference
quotient ``(g(k) - g(w)) / (k - w)`` is summed with Simpson weights and the
analytic log term is added back.  Beyond the grid, ``g`` is continued by a
power law fitted over the last decade.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import hyp2f1

from ._backend import kernels
from .core import ComplexSpectrum, FrequencyGrid, as_temperature, same_grid
from .errors import DivergenceError, InvalidArgumentError
from .quadrature import gauss_half_line, gauss_jacobi_unit, simpson_weights


# ---------------------------------------------------------------------------
# power-law tails


@dataclass(frozen=True)
class PowerTail:
    """``g(k) ~ amplitude * k^exponent`` for ``k >= start``."""

    amplitude: float
    exponent: float
    start: float

    def __call__(self, k):
        return self.amplitude * np.asarray(k, dtype=float) ** self.exponent


def fit_power_tail(k, g, decade: float = 10.0) -> PowerTail:
    """Least-squares fit of ``log|g|`` against ``log k`` over ``[k_max / decade, k_max]``."""
    k = np.asarray(k, dtype=float)
    g = np.asarray(g, dtype=float)
    kmax = k[-1]
    sel = (k >= kmax / decade) & (k > 0)
    ks, gs = k[sel], g[sel]
    scale = float(np.max(np.abs(g))) if g.size else 0.0
    if ks.size < 2 or np.max(np.abs(gs)) <= 1e-14 * scale or scale == 0:
        return PowerTail(0.0, -np.inf, float(kmax))
    nz = gs != 0
    slope, icpt = np.polyfit(np.log(ks[nz]), np.log(np.abs(gs[nz])), 1)
    sign = np.sign(gs[-1]) if gs[-1] != 0 else 1.0
    amp = sign * np.abs(gs[-1]) / kmax**slope
    return PowerTail(float(amp), float(slope), float(kmax))


def _check_tail(tail: PowerTail, even: bool):
    limit = 1.0 if even else 0.0
    if tail.amplitude != 0 and tail.exponent >= limit:
        raise DivergenceError(
            f"dispersion integrand decays too slowly: fitted tail exponent {tail.exponent:.3g} "
            f"(needs < {limit:g}); add subtractions"
        )


def _inverse_moment(q, a):
    """``int_0^1 t^-q / (1 - a t) dt = 2F1(1, 1 - q; 2 - q; a) / (1 - q)`` for ``q < 1``."""
    return hyp2f1(1.0, 1.0 - q, 2.0 - q, a) / (1.0 - q)


def _tail_integral(tail: PowerTail, z, even: bool):
    """``int_K^inf g(k) [1/(k - z) -+ 1/(k + z)] dk`` for the fitted tail, ``|z| < K``.

    With ``t = K/k`` and ``a = z/K`` the even kernel reduces to
    ``a K^p int t^-p [1/(1 - a t) + 1/(1 + a t)]`` and the odd kernel to the same
    with ``t^(-p-1)`` and no prefactor ``a``.
    """
    z = np.asarray(z)
    if tail.amplitude == 0:
        return np.zeros(z.shape, dtype=complex if np.iscomplexobj(z) else float)
    K, p, A = tail.start, tail.exponent, tail.amplitude
    a = z / K
    if even:
        return A * K**p * a * (_inverse_moment(p, a) + _inverse_moment(p, -a))
    return A * K**p * (_inverse_moment(p + 1.0, a) + _inverse_moment(p + 1.0, -a))


# ---------------------------------------------------------------------------
# subtracted transform


@dataclass(frozen=True)
class SubtractedIntegrand:
    """Folded dispersion integrand ``g`` on ``k_i = i * delta``, ``i = 0..N``."""

    k: np.ndarray
    g: np.ndarray
    even: bool
    subtractions: int
    taylor_coeffs: tuple
    tail: PowerTail

    def polynomial(self, z):
        z = np.asarray(z)
        out = np.zeros(z.shape, dtype=complex)
        for j, c in enumerate(self.taylor_coeffs, start=1):
            out = out + c * z**j
        return out


def _taylor_tuple(n, taylor_coeffs):
    coeffs = tuple(complex(c) for c in (taylor_coeffs or ()))
    if len(coeffs) != max(n - 1, 0):
        raise InvalidArgumentError(
            f"{n} subtractions need {max(n - 1, 0)} Taylor coefficients (chi^(j)[0]/j!, j = 1..n-1), "
            f"got {len(coeffs)}"
        )
    for j, c in enumerate(coeffs, start=1):
        # chi[-w] = chi[w]^*: odd coefficients are imaginary, even ones real
        bad = c.real if j % 2 else c.imag
        if abs(bad) > 1e-12 * max(1.0, abs(c)):
            raise InvalidArgumentError(f"Taylor coefficient c_{j} = {c} breaks reality of chi")
    return coeffs


def subtracted_integrand(xi: ComplexSpectrum, subtractions: int,
                         taylor_coeffs: Sequence[complex] = ()) -> SubtractedIntegrand:
    n = int(subtractions)
    if n not in (0, 1, 2, 3):
        raise InvalidArgumentError("subtractions must be 0, 1, 2 or 3")
    coeffs = _taylor_tuple(n, taylor_coeffs)
    vals = xi.values
    scale = xi.max_abs() or 1.0
    if np.max(np.abs(vals.imag)) > 1e-12 * scale:
        raise InvalidArgumentError("xi samples must be real")
    odd_res = np.max(np.abs(vals.real + vals.real[::-1]))
    if odd_res > 1e-10 * scale:
        raise InvalidArgumentError(f"xi samples must be odd in w (residual {odd_res:.3g})")
    k = xi.grid.positive_points
    x = xi.positive_half().real.copy()
    for j, c in enumerate(coeffs, start=1):
        if j % 2:
            x -= c.imag * k**j
    g = np.empty_like(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        g[1:] = x[1:] / k[1:] ** n
    even = n % 2 == 1
    if n == 0 or not even:
        g[0] = 0.0
    else:
        g[0] = (4 * g[1] - g[2]) / 3
    tail = fit_power_tail(k, g)
    _check_tail(tail, even)
    return SubtractedIntegrand(k, g, even, n, coeffs, tail)


def _pv_on_grid(s: SubtractedIntegrand, targets: np.ndarray) -> np.ndarray:
    """``PV int_0^inf g(k) [1/(k - w) -+ 1/(k + w)] dk`` at ``w = k[targets]``, ``targets >= 1``."""
    k, g = s.k, s.g
    h = k[1] - k[0]
    weights = simpson_weights(k.size, h)
    gprime = np.gradient(g, h, edge_order=2)[targets]
    sign = -1.0 if s.even else 1.0
    body = kernels.pv_fold_sum(
        np.ascontiguousarray(g), np.ascontiguousarray(k), weights,
        np.ascontiguousarray(gprime), np.ascontiguousarray(targets, dtype=np.int64), sign,
    )
    w = k[targets]
    K = k[-1]
    # the subtracted g[w] integrates in closed form against both kernel terms
    with np.errstate(divide="ignore"):
        logs = np.log((K - w) / w) + sign * np.log((K + w) / w)
    logs[w >= K] = 0.0
    return body + g[targets] * logs + _tail_integral(s.tail, w, s.even)


def kk_transform(xi: ComplexSpectrum, subtractions: int,
                 taylor_coeffs: Sequence[complex] = ()) -> ComplexSpectrum:
    """Causal ``chi`` whose imaginary part is ``xi``, from ``n`` subtractions at ``w = 0``.

    Parameters
    ----------
    xi : ComplexSpectrum
        Real, odd samples of ``Im chi``.  The real part at the outermost
        sample is quadratically extrapolated from its neighbours.
    subtractions : int
        ``n`` in ``{0, 1, 2, 3}``.
    taylor_coeffs : sequence of complex
        ``chi^(j)[0] / j!`` for ``j = 1 .. n-1`` (e.g. ``(chi'[0], chi''[0]/2)`` for ``n = 3``).

    Raises
    ------
    DivergenceError
        If ``xi / w^n`` does not decay fast enough beyond the grid.
    """
    s = subtracted_integrand(xi, subtractions, taylor_coeffs)
    N = xi.grid.half_count
    if N < 4:
        raise InvalidArgumentError("kk_transform needs half_count >= 4")
    targets = np.arange(1, N)
    pv = _pv_on_grid(s, targets)
    w = s.k[targets]
    re = s.polynomial(w).real + w**s.subtractions * pv / np.pi
    # the log singularity of the tail sits on the last sample; extrapolate it
    re = np.append(re, 3 * re[-1] - 3 * re[-2] + re[-3])
    pos = np.empty(N + 1, dtype=complex)
    pos[0] = 0.0 if s.subtractions else complex(_static_value(s), 0.0)
    pos[1:] = re + 1j * xi.positive_half().real[1:]
    return ComplexSpectrum.from_positive_half(xi.grid, pos, "hermitian")


def _static_value(s: SubtractedIntegrand) -> float:
    # n = 0: chi[0] = (2/pi) int_0^inf g(k)/k dk with odd g, g(0) = 0
    k, g = s.k, s.g
    h = k[1] - k[0]
    q = np.empty_like(g)
    q[1:] = g[1:] / k[1:]
    q[0] = (4 * q[1] - q[2]) / 3
    weights = simpson_weights(k.size, h)
    return float(2.0 * (weights @ q + _tail_integral(s.tail, np.array([0.0]), False)[0] / 2) / np.pi)


def continue_to_laplace(xi: ComplexSpectrum, subtractions: int, p,
                        taylor_coeffs: Sequence[complex] = ()):
    """``chi{p} = chi[i p]`` for ``Re p > 0`` from the same subtracted integral (no pole on the path)."""
    s = subtracted_integrand(xi, subtractions, taylor_coeffs)
    p = np.atleast_1d(np.asarray(p, dtype=complex))
    if np.any(p.real <= 0):
        raise InvalidArgumentError("Laplace continuation needs Re(p) > 0")
    z = 1j * p
    k = s.k
    weights = simpson_weights(k.size, k[1] - k[0])
    sign = -1.0 if s.even else 1.0
    kern = 1.0 / (k[None, :] - z[:, None]) + sign / (k[None, :] + z[:, None])
    body = kern @ (weights * s.g)
    return s.polynomial(z) + z**s.subtractions * (body + _tail_integral(s.tail, z, s.even)) / np.pi


# ---------------------------------------------------------------------------
# residual checks


def _require_same_grid(a, b):
    if not same_grid(a, b):
        raise InvalidArgumentError("spectra are sampled on different grids")


def fdt_residual(chi: ComplexSpectrum, xi: ComplexSpectrum) -> float:
    """``max |Im chi - xi| / |Im chi|`` over the grid (points where ``Im chi`` vanishes
    are measured against ``1e-12 max |Im chi|``)."""
    _require_same_grid(chi, xi)
    im = chi.imag
    floor = 1e-12 * max(float(np.max(np.abs(im))), 1e-300)
    return float(np.max(np.abs(im - xi.real) / np.maximum(np.abs(im), floor)))


@dataclass(frozen=True)
class BalanceCheck:
    """``residual`` of the thermal identity, or of ``C_FF[w < 0] = 0`` when ``path == "vacuum"``."""

    residual: float
    path: str

    def __float__(self):
        return self.residual


def detailed_balance_residual(c_ff: ComplexSpectrum, xi: ComplexSpectrum, T) -> BalanceCheck:
    """``max |(1 - exp(-w/T)) C_FF[w] - 2 xi[w]| / max |2 xi|``.

    At ``T = 0`` the separate vacuum path reports ``max_{w<0} |C_FF| / max |C_FF|``.
    """
    _require_same_grid(c_ff, xi)
    T = as_temperature(T)
    w = c_ff.omega
    C = c_ff.real
    if T == 0:
        scale = max(float(np.max(np.abs(C))), 1e-300)
        neg = np.abs(C[w < 0])
        return BalanceCheck(float(neg.max()) / scale if neg.size else 0.0, "vacuum")
    lhs = -np.expm1(-w / T) * C
    scale = max(float(np.max(np.abs(2 * xi.real))), 1e-300)
    return BalanceCheck(float(np.max(np.abs(lhs - 2 * xi.real))) / scale, "thermal")


# ---------------------------------------------------------------------------
# induced masses


@dataclass(frozen=True)
class MassIntegral:
    value: float
    grid_part: float
    tail_part: float


def _mass_from_samples(k, integrand, scale_hint=None) -> MassIntegral:
    h = k[1] - k[0]
    weights = simpson_weights(k.size, h)
    grid_part = 2.0 * float(weights @ integrand) / np.pi
    tail = fit_power_tail(k, integrand)
    if tail.amplitude != 0 and tail.exponent >= -1:
        raise DivergenceError(
            f"induced-mass integrand decays like k^{tail.exponent:.3g}; the quasistatic mass is infinite"
        )
    tail_part = 0.0
    if tail.amplitude != 0:
        tail_part = 2.0 * tail.amplitude * tail.start ** (tail.exponent + 1) / (-(tail.exponent + 1)) / np.pi
    return MassIntegral(grid_part + tail_part, grid_part, tail_part)


def _vacuum_integrand_samples(xi: ComplexSpectrum):
    k = xi.grid.positive_points
    x = xi.positive_half().real
    q = np.empty_like(x)
    q[1:] = x[1:] / k[1:] ** 3
    q[0] = (4 * q[1] - q[2]) / 3
    return k, q


def induced_mass_vacuum(xi0, scale: float = 1.0, rtol: float = 1e-11) -> MassIntegral:
    """``mu_0 = 2 int_0^inf dk xi_0[k] / (pi k^3)``.

    ``xi0`` is a vectorized callable (integrated adaptively on doubling
    segments) or a :class:`ComplexSpectrum` (Simpson on the grid plus a fitted
    power-law tail).  Raises :class:`DivergenceError` when the integrand does
    not decay faster than ``1/k``.
    """
    if isinstance(xi0, ComplexSpectrum):
        k, q = _vacuum_integrand_samples(xi0)
        return _mass_from_samples(k, q)

    def f(k):
        return np.asarray(xi0(k), dtype=float) / k**3

    val, tail = gauss_half_line(f, scale, rtol=rtol)
    return MassIntegral(2.0 * val / np.pi, 2.0 * (val - tail) / np.pi, 2.0 * tail / np.pi)


@dataclass(frozen=True)
class ThermalMass:
    mu_T: float
    mu_0: float

    @property
    def half_curvature(self) -> float:
        """``(1/2) chi_T''[0] = mu_T - mu_0``."""
        return self.mu_T - self.mu_0


def induced_mass_thermal(xi_T, friction: float, xi0, scale: float = 1.0,
                         rtol: float = 1e-11) -> ThermalMass:
    """``mu_T = 2 int_0^inf dk (xi_T[k] - xi_T'[0] k) / (pi k^3)`` together with ``mu_0``.

    ``xi_T`` and ``xi0`` are both callables or both spectra on the same grid.
    """
    mu0 = induced_mass_vacuum(xi0, scale=scale, rtol=rtol).value
    if isinstance(xi_T, ComplexSpectrum):
        k = xi_T.grid.positive_points
        x = xi_T.positive_half().real - friction * k
        q = np.empty_like(x)
        q[1:] = x[1:] / k[1:] ** 3
        q[0] = (4 * q[1] - q[2]) / 3
        return ThermalMass(_mass_from_samples(k, q).value, mu0)

    def f(k):
        return (np.asarray(xi_T(k), dtype=float) - friction * k) / k**3

    val, _ = gauss_half_line(f, scale, rtol=rtol)
    return ThermalMass(2.0 * val / np.pi, mu0)


# ---------------------------------------------------------------------------
# Laplace form


def laplace_measure_term(k, measure, p, tail: PowerTail | None = None):
    """``(1/pi) int_0^inf w(k) 2p / (p^2 + k^2) dk`` for piecewise-linear ``w`` on ``k``
    plus an optional power-law tail ``w ~ A k^q`` (``q < 1``) beyond ``k[-1]``."""
    k = np.ascontiguousarray(k, dtype=float)
    w = np.ascontiguousarray(measure, dtype=float)
    p = np.atleast_1d(np.asarray(p, dtype=complex))
    body = kernels.measure_integral(k, w, np.ascontiguousarray(p))
    if tail is not None and tail.amplitude != 0:
        if tail.exponent >= 1:
            raise DivergenceError("spectral measure grows too fast for the Laplace integral")
        K, q, A = tail.start, tail.exponent, tail.amplitude
        # k = K/t: int_0^1 A K^q t^-q 2 p K / (p^2 t^2 + K^2) dt
        pp = p[None, :]

        def fn(t):
            t = t[:, None]
            return 2.0 * pp * K / (pp * pp * t * t + K * K)

        body = body + A * K**q * gauss_jacobi_unit(fn, -q)
    return body / np.pi


def laplace_susceptibility(k, xi_over_k, p, mu0: float, tail: PowerTail | None = None):
    """``chi{p}`` from ``-chi{p}/p = -mu_0 p + (1/pi) int (xi[k]/k) 2p/(p^2 + k^2) dk``."""
    p = np.atleast_1d(np.asarray(p, dtype=complex))
    return -p * (-mu0 * p + laplace_measure_term(k, xi_over_k, p, tail))


def spectrum_from_callable(func: Callable, grid: FrequencyGrid, parity: str = "odd") -> ComplexSpectrum:
    """Sample a real function on the non-negative grid points and extend it by parity."""
    return ComplexSpectrum.from_positive_half(grid, np.asarray(func(grid.positive_points)), parity)
