"""Quadrature helpers: semi-infinite integrals with divergence detection,
Richardson-extrapolated derivatives, and Bose-factor truncation."""
from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import integrate

from .errors import DivergenceError


def quad(f, a, b, rtol=1e-11, atol=0.0, points=None, limit=400, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(f, a, b, epsrel=rtol, epsabs=atol, points=points, limit=limit, **kw)
    return val


def integrate_to_infinity(f, a: float, b0: float, rtol: float = 1e-10, atol: float = 0.0,
                          max_doublings: int = 80, stall_ratio: float = 0.97):
    """``int_a^inf f`` by doubling segments ``[b, 2b]``.

    Once segment magnitudes shrink geometrically the remaining tail is
    extrapolated.  If they stop shrinking, the integral is declared divergent.

    Returns ``(value, tail_estimate)``.
    """
    total = quad(f, a, b0, rtol=rtol, atol=atol)
    b = b0
    prev = None
    stalls = 0
    for _ in range(max_doublings):
        seg = quad(f, b, 2 * b, rtol=rtol, atol=atol)
        total += seg
        b *= 2
        mag = abs(seg)
        if prev is not None and prev > 0:
            ratio = mag / prev
            if ratio >= stall_ratio:
                stalls += 1
                if stalls >= 4:
                    raise DivergenceError(
                        f"integral does not converge: tail segments stopped shrinking (ratio {ratio:.3g})"
                    )
            else:
                stalls = 0
                tail = mag * ratio / (1 - ratio)
                if tail <= max(atol, rtol * abs(total)):
                    return total + tail, tail
        elif mag == 0.0 and prev == 0.0:
            return total, 0.0
        prev = mag
    raise DivergenceError("integral did not converge within the doubling budget")


def second_derivative_at(f, x0: float, h: float) -> complex:
    """Central second difference at steps ``h`` and ``h/2`` with Richardson extrapolation."""
    f0 = f(x0)

    def d2(step):
        return (f(x0 + step) - 2 * f0 + f(x0 - step)) / step**2

    return (4 * d2(h / 2) - d2(h)) / 3


def first_derivative_at(f, x0: float, h: float) -> complex:
    def d1(step):
        return (f(x0 + step) - f(x0 - step)) / (2 * step)

    return (4 * d1(h / 2) - d1(h)) / 3


def bose_cutoff(tol: float = 1e-16, power: int = 3) -> float:
    """Smallest ``u`` beyond which ``u^power e^-u`` stays below ``tol`` times its peak."""
    peak = power**power * math.exp(-power) if power > 0 else 1.0
    u = max(float(power), 1.0)
    while u**power * math.exp(-u) > tol * peak:
        u *= 1.05
    return u


def bose_weight(u):
    """``u / (e^u - 1)`` with the limit 1 at ``u = 0``."""
    u = np.asarray(u, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = u / np.expm1(u)
    return np.where(u == 0, 1.0, out)


def simpson_weights(n: int, h: float) -> np.ndarray:
    """Composite Simpson weights for ``n`` equally spaced samples (3/8 rule closes odd panels)."""
    if n < 2:
        raise ValueError("need at least two samples")
    if n == 2:
        return np.array([h / 2, h / 2])
    if n == 4:
        return np.array([3, 9, 9, 3]) * h / 8
    w = np.zeros(n)
    m = n if n % 2 == 1 else n - 3
    w[:m:2] += 2
    w[1:m:2] += 4
    w[0] -= 1
    w[m - 1] -= 1
    w[:m] *= h / 3
    if m < n:
        w[m - 1:] += np.array([3, 9, 9, 3]) * h / 8
    return w


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(48)


def gauss_half_line(f, scale: float, rtol: float = 1e-10, max_segments: int = 120,
                    stall_ratio: float = 0.97):
    """``int_0^inf f`` for a vectorized ``f`` on segments ``[0, s], [s, 2s], [2s, 4s], ...``.

    Each segment uses 48-point Gauss-Legendre; all nodes of a batch of
    segments go to ``f`` in a single call.  Geometric decay of the segment
    values is extrapolated; stalled decay raises :class:`DivergenceError`.

    Returns ``(value, tail_estimate)``.
    """
    edges = scale * np.concatenate([[0.0], 2.0 ** np.arange(max_segments)])
    segs = []
    stalls = 0
    total = 0.0
    batch = 8
    for start in range(0, max_segments, batch):
        lo = edges[start:start + batch]
        hi = edges[start + 1:start + batch + 1]
        half = 0.5 * (hi - lo)[:, None]
        mid = 0.5 * (hi + lo)[:, None]
        x = mid + half * _GL_NODES[None, :]
        vals = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
        seg_vals = (vals * _GL_WEIGHTS[None, :] * half).sum(axis=1)
        for seg in seg_vals:
            total += seg
            segs.append(abs(seg))
            if len(segs) < 3 or segs[-2] == 0:
                if len(segs) >= 3 and segs[-1] == 0 and segs[-2] == 0:
                    return total, 0.0
                continue
            ratio = segs[-1] / segs[-2]
            if ratio >= stall_ratio:
                stalls += 1
                if stalls >= 4:
                    raise DivergenceError(
                        f"integral does not converge: segment values stopped shrinking (ratio {ratio:.3g})"
                    )
                continue
            stalls = 0
            tail = segs[-1] * ratio / (1 - ratio)
            if tail <= rtol * abs(total):
                return total + tail, tail
    raise DivergenceError("integral did not converge within the segment budget")


def gauss_jacobi_unit(func, exponent: float, n: int = 64):
    """``int_0^1 t^exponent func(t) dt`` for ``exponent > -1`` with smooth vectorized ``func``.

    ``func`` may return an array of shape ``(n, ...)`` for nodes of shape ``(n,)``.
    """
    from scipy.special import roots_jacobi

    if exponent <= -1:
        raise DivergenceError(f"t^{exponent} is not integrable at 0")
    x, w = roots_jacobi(n, 0.0, exponent)
    t = 0.5 * (1.0 + x)
    w = w * 0.5 ** (1.0 + exponent)
    vals = np.asarray(func(t))
    return np.tensordot(w, vals, axes=(0, 0))
