# cython: language_level=3
"""Compiled inner loops.  Same signatures and results as ``_pykernels``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef extern from "<complex.h>" nogil:
    double complex catan(double complex)
    double complex clog(double complex)


def pv_fold_sum(const double[::1] g, const double[::1] k, const double[::1] weights,
                const double[::1] gprime, const long[::1] targets, double sign):
    cdef Py_ssize_t n = g.shape[0], m = targets.shape[0]
    cdef Py_ssize_t a, j, i
    cdef double ki, gi, acc, comp, y, t
    out = np.empty(m)
    cdef double[::1] o = out
    with nogil:
        for a in range(m):
            i = targets[a]
            ki = k[i]
            gi = g[i]
            # Kahan summation: the terms nearly cancel pairwise around the pole
            acc = 0.0
            comp = 0.0
            for j in range(n):
                if j == i:
                    y = gprime[a]
                else:
                    y = (g[j] - gi) / (k[j] - ki)
                if k[j] + ki != 0.0:
                    y = y + sign * (g[j] - gi) / (k[j] + ki)
                y = weights[j] * y
                y = y - comp
                t = acc + y
                comp = (t - acc) - y
                acc = t
            o[a] = acc
    return out


def measure_integral(const double[::1] k, const double[::1] w, const double complex[::1] p):
    cdef Py_ssize_t n = k.shape[0], m = p.shape[0]
    cdef Py_ssize_t a, j
    cdef double complex pp, p2, acc, at0, at1, lg0, lg1
    cdef double slope, icpt
    out = np.empty(m, dtype=complex)
    cdef double complex[::1] o = out
    with nogil:
        for a in range(m):
            pp = p[a]
            p2 = pp * pp
            acc = 0.0
            at0 = catan(k[0] / pp)
            lg0 = clog(p2 + k[0] * k[0])
            for j in range(n - 1):
                at1 = catan(k[j + 1] / pp)
                lg1 = clog(p2 + k[j + 1] * k[j + 1])
                slope = (w[j + 1] - w[j]) / (k[j + 1] - k[j])
                icpt = w[j] - slope * k[j]
                acc = acc + 2.0 * icpt * (at1 - at0) + slope * pp * (lg1 - lg0)
                at0 = at1
                lg0 = lg1
            o[a] = acc
    return out


cdef inline double _gamma(double complex ra, double complex sa,
                          double complex rb, double complex sb) nogil:
    cdef double complex al = 1.0 - sa * sb + ra * rb
    cdef double complex be = sa * rb - ra * sb
    return al.real * al.real + al.imag * al.imag + be.real * be.real + be.imag * be.imag


def grid_xi_sum(const double[::1] sigma, const double complex[::1] r, const double complex[::1] s,
                Py_ssize_t n_in, Py_ssize_t n_out, double delta):
    cdef Py_ssize_t L = (sigma.shape[0] - 1) // 2
    cdef Py_ssize_t i, j, a, b
    cdef double wi, wj, wgt, acc
    out = np.empty(2 * n_out + 1)
    cdef double[::1] o = out
    with nogil:
        for i in range(-n_out, n_out + 1):
            wi = i * delta
            acc = 0.0
            for j in range(-n_in, n_in + 1):
                wj = j * delta
                a = L + j
                b = L + i - j
                wgt = 0.5 if (j == -n_in or j == n_in) else 1.0
                acc = acc + wgt * ((wi - wj) * sigma[a] + wj * sigma[b]) * _gamma(r[a], s[a], r[b], s[b])
            o[i + n_out] = acc * delta / (2.0 * 3.141592653589793)
    return out


def grid_cff_sum(const double[::1] c, const double complex[::1] r, const double complex[::1] s,
                 Py_ssize_t n_in, Py_ssize_t n_out, double delta):
    cdef Py_ssize_t L = (c.shape[0] - 1) // 2
    cdef Py_ssize_t i, j, a, b
    cdef double wgt, acc
    out = np.empty(2 * n_out + 1)
    cdef double[::1] o = out
    with nogil:
        for i in range(-n_out, n_out + 1):
            acc = 0.0
            for j in range(-n_in, n_in + 1):
                a = L + j
                b = L + i - j
                wgt = 0.5 if (j == -n_in or j == n_in) else 1.0
                acc = acc + wgt * 4.0 * c[a] * c[b] * _gamma(r[a], s[a], r[b], s[b])
            o[i + n_out] = acc * delta / (2.0 * 3.141592653589793)
    return out
