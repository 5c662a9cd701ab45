"""Pure numpy implementation of the bond loops (fallback for the compiled kernel)."""

import numpy as np


def bond_forces(u, bond_i, bond_j, xi, length, weight, factor, intact, volume, m,
                kprime, mu, alpha, p):
    n = u.shape[0]
    intact = intact.astype(bool)
    Y = xi + u[bond_j] - u[bond_i]
    y = np.sqrt(Y[:, 0] * Y[:, 0] + Y[:, 1] * Y[:, 1])
    stretch = (y - length) / length
    zero = np.nonzero(intact & (y == 0.0))[0]
    force = np.zeros((n, 2))
    theta = np.zeros(n)
    if zero.size:
        return force, theta, stretch, int(zero[0])

    live = np.nonzero(intact)[0]
    bi, bj = bond_i[live], bond_j[live]
    L = length[live]
    e = y[live] - L
    M = Y[live] / y[live, None]
    w = weight[live]
    f = factor[live]
    ww = w * f * L * e
    theta = (np.bincount(bi, weights=2.0 * ww * volume[bj], minlength=n) / m
             + np.bincount(bj, weights=2.0 * ww * volume[bi], minlength=n) / m)

    c1 = 2.0 * kprime - 8.0 * mu / 9.0
    gamma = 8.0 * mu / m
    ti, tj = theta[bi], theta[bj]
    tij = (c1 * ti - 2.0 * alpha * p[bi]) * w * L / m[bi] + gamma[bi] * w * (e - ti * L / 3.0)
    tji = (c1 * tj - 2.0 * alpha * p[bj]) * w * L / m[bj] + gamma[bj] * w * (e - tj * L / 3.0)
    fb = ((tij + tji) * f)[:, None] * M
    for k in range(2):
        force[:, k] = (np.bincount(bi, weights=fb[:, k] * volume[bj], minlength=n)
                       - np.bincount(bj, weights=fb[:, k] * volume[bi], minlength=n))
    return force, theta, stretch, -1
