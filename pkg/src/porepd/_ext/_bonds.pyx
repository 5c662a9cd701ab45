# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled bond loops for the ordinary state-based PD force evaluation."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def bond_forces(const double[:, ::1] u,
                const cnp.int64_t[::1] bond_i,
                const cnp.int64_t[::1] bond_j,
                const double[:, ::1] xi,
                const double[::1] length,
                const double[::1] weight,
                const double[::1] factor,
                const unsigned char[::1] intact,
                const double[::1] volume,
                const double[::1] m,
                double kprime,
                double mu,
                double alpha,
                const double[::1] p):
    """Return (force density (n, 2), dilatation (n,), stretch (nb,), bad bond or -1).

    ``weight`` is the influence function w per bond, ``factor`` the volume share.
    """
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t nb = bond_i.shape[0]
    cdef Py_ssize_t b
    cdef cnp.int64_t i, j
    cdef double yx, yy, y, e, L, ww, tij, tji, f, c1
    cdef Py_ssize_t bad = -1

    force_arr = np.zeros((n, 2))
    theta_arr = np.zeros(n)
    stretch_arr = np.zeros(nb)
    cdef double[:, ::1] force = force_arr
    cdef double[::1] theta = theta_arr
    cdef double[::1] stretch = stretch_arr
    # per-node coefficients: t_ij = w (a_i L + g_i (e - c_i L))
    a_arr = np.empty(n)
    g_arr = np.empty(n)
    c_arr = np.empty(n)
    cdef double[::1] a = a_arr
    cdef double[::1] g = g_arr
    cdef double[::1] c = c_arr
    cdef Py_ssize_t k

    for b in range(nb):
        i = bond_i[b]
        j = bond_j[b]
        L = length[b]
        yx = xi[b, 0] + u[j, 0] - u[i, 0]
        yy = xi[b, 1] + u[j, 1] - u[i, 1]
        y = sqrt(yx * yx + yy * yy)
        e = y - L
        stretch[b] = e / L
        if not intact[b]:
            continue
        if y == 0.0:
            if bad < 0:
                bad = b
            continue
        ww = weight[b] * factor[b] * L * e
        theta[i] += 2.0 * ww * volume[j] / m[i]
        theta[j] += 2.0 * ww * volume[i] / m[j]

    if bad >= 0:
        return force_arr, theta_arr, stretch_arr, bad

    c1 = 2.0 * kprime - 8.0 * mu / 9.0
    for k in range(n):
        a[k] = (c1 * theta[k] - 2.0 * alpha * p[k]) / m[k]
        g[k] = 8.0 * mu / m[k]
        c[k] = theta[k] / 3.0
    for b in range(nb):
        if not intact[b]:
            continue
        i = bond_i[b]
        j = bond_j[b]
        L = length[b]
        # recomputing the deformed bond is cheaper than storing it per bond
        yx = xi[b, 0] + u[j, 0] - u[i, 0]
        yy = xi[b, 1] + u[j, 1] - u[i, 1]
        y = sqrt(yx * yx + yy * yy)
        e = y - L
        tij = a[i] * L + g[i] * (e - c[i] * L)
        tji = a[j] * L + g[j] * (e - c[j] * L)
        f = (tij + tji) * weight[b] * factor[b] / y
        force[i, 0] += f * yx * volume[j]
        force[i, 1] += f * yy * volume[j]
        force[j, 0] -= f * yx * volume[i]
        force[j, 1] -= f * yy * volume[i]

    return force_arr, theta_arr, stretch_arr, -1
