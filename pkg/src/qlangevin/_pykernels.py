"""Numpy implementations of the compiled kernels in ``_ckernels.pyx``.

Used when the extension is not built, and as the reference in tests.
"""
import numpy as np

_CHUNK = 256


def pv_fold_sum(g, k, weights, gprime, targets, sign):
    """``sum_j w_j (g_j - g_i) [1/(k_j - k_i) + sign/(k_j + k_i)]`` per target ``i``.

    The ``j == i`` term of the difference quotient is replaced by ``gprime``.
    """
    g = np.asarray(g, float)
    k = np.asarray(k, float)
    weights = np.asarray(weights, float)
    targets = np.asarray(targets, np.int64)
    out = np.empty(targets.size)
    for start in range(0, targets.size, _CHUNK):
        t = targets[start:start + _CHUNK]
        ki = k[t][:, None]
        gi = g[t][:, None]
        diff = k[None, :] - ki
        same = diff == 0
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(same, 0.0, (g[None, :] - gi) / np.where(same, 1.0, diff))
        rows, cols = np.nonzero(same)
        q[rows, cols] = np.asarray(gprime, float)[start:start + _CHUNK][rows]
        with np.errstate(divide="ignore", invalid="ignore"):
            folded = (g[None, :] - gi) / (k[None, :] + ki)
        q += sign * np.where(k[None, :] + ki == 0, 0.0, folded)
        out[start:start + _CHUNK] = q @ weights
    return out


def measure_integral(k, w, p):
    """Exact integral of the piecewise-linear ``w(k)`` against ``2p / (p^2 + k^2)``."""
    k = np.asarray(k, float)
    w = np.asarray(w, float)
    p = np.asarray(p, complex)
    slope = np.diff(w) / np.diff(k)
    icpt = w[:-1] - slope * k[:-1]
    out = np.empty(p.size, dtype=complex)
    for start in range(0, p.size, _CHUNK):
        pp = p[start:start + _CHUNK, None]
        at = np.arctan(k[None, :] / pp)
        lg = np.log(pp * pp + k[None, :] ** 2)
        terms = 2.0 * icpt * np.diff(at, axis=1) + slope * pp * np.diff(lg, axis=1)
        out[start:start + _CHUNK] = terms.sum(axis=1)
    return out


def _gamma(ra, sa, rb, sb):
    al = 1.0 - sa * sb + ra * rb
    be = sa * rb - ra * sb
    return al.real**2 + al.imag**2 + be.real**2 + be.imag**2


def _rows_per_chunk(width, budget=2_000_000):
    return max(1, budget // width)


def _pair_indices(L, n_in, i):
    j = np.arange(-n_in, n_in + 1)
    wgt = np.ones(j.size)
    wgt[0] = wgt[-1] = 0.5
    return L + j, L + i[:, None] - j[None, :], j, wgt


def grid_xi_sum(sigma, r, s, n_in, n_out, delta):
    sigma = np.asarray(sigma, float)
    L = (sigma.size - 1) // 2
    out = np.empty(2 * n_out + 1)
    all_i = np.arange(-n_out, n_out + 1)
    chunk = _rows_per_chunk(2 * n_in + 1)
    for start in range(0, all_i.size, chunk):
        i = all_i[start:start + chunk]
        a, b, j, wgt = _pair_indices(L, n_in, i)
        wi = (i * delta)[:, None]
        wj = (j * delta)[None, :]
        terms = ((wi - wj) * sigma[a][None, :] + wj * sigma[b]) * _gamma(r[a][None, :], s[a][None, :], r[b], s[b])
        out[start:start + chunk] = terms @ wgt
    return out * delta / (2 * np.pi)


def grid_cff_sum(c, r, s, n_in, n_out, delta):
    c = np.asarray(c, float)
    L = (c.size - 1) // 2
    out = np.empty(2 * n_out + 1)
    all_i = np.arange(-n_out, n_out + 1)
    chunk = _rows_per_chunk(2 * n_in + 1)
    for start in range(0, all_i.size, chunk):
        i = all_i[start:start + chunk]
        a, b, j, wgt = _pair_indices(L, n_in, i)
        terms = 4.0 * c[a][None, :] * c[b] * _gamma(r[a][None, :], s[a][None, :], r[b], s[b])
        out[start:start + chunk] = terms @ wgt
    return out * delta / (2 * np.pi)
