"""Two-way transfer between the PD solid and the FE pressure field.

The non-local coupling operator maps nodal pressures to nodal forces (one
row per displacement DOF, one column per pressure node).  The same operator,
transposed, carries displacement increments into the mass balance.  PD and
FE nodes coincide, so field transfer is the identity on node indices.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .discretization import PDGrid
from .errors import PorePDError


def build_pd_coupling(grid: PDGrid, alpha: float, u=None) -> sp.csr_matrix:
    """Assemble Q^PD over intact bonds with w = 1.

    Bond (i, j) contributes ``2 alpha |xi| V_i V_j`` times ``M / m_i`` in
    column i and ``M / m_j`` in column j, with +M on the rows of node i and
    -M on the rows of node j.  ``M`` is the deformed unit bond direction for
    displacement ``u`` (undeformed when ``u`` is None).
    """
    n = grid.n_nodes
    live = np.nonzero(grid.intact)[0]
    if alpha == 0.0 or live.size == 0:
        return sp.csr_matrix((2 * n, n))
    bi, bj = grid.bond_i[live], grid.bond_j[live]
    Y = grid.xi[live].copy()
    if u is not None:
        u = np.asarray(u, dtype=float).reshape(n, 2)
        Y += u[bj] - u[bi]
    y = np.hypot(Y[:, 0], Y[:, 1])
    M = Y / y[:, None]
    V = grid.volume
    m = grid.weighted_volume
    c = 2.0 * alpha * grid.length[live] * V[bi] * V[bj] * grid.volume_factor[live]
    ci = c / m[bi]
    cj = c / m[bj]

    rows, cols, vals = [], [], []
    for comp in (0, 1):
        for node, sign in ((bi, 1.0), (bj, -1.0)):
            r = 2 * node + comp
            rows += [r, r]
            cols += [bi, bj]
            vals += [sign * ci * M[:, comp], sign * cj * M[:, comp]]
    Q = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(2 * n, n)).tocsr()
    Q.sum_duplicates()
    Q.sort_indices()
    return Q


def apply_pressure_force(Q: sp.spmatrix, p, volume) -> np.ndarray:
    """Pressure force density Q^PD p / V per node, shape (n, 2).

    The solid equation of motion subtracts this term.
    """
    p = np.asarray(p, dtype=float)
    if Q.shape[1] != p.shape[0] or Q.shape[0] != 2 * np.shape(volume)[0]:
        raise PorePDError(f"coupling operator {Q.shape} does not match pressure {p.shape}")
    return (Q @ p).reshape(-1, 2) / np.asarray(volume)[:, None]


def flow_coupling_increment(Q: sp.spmatrix, u_now, u_prev) -> np.ndarray:
    """Q^T (u^n - u^(n-1)) for the pressure right-hand side."""
    du = (np.asarray(u_now, dtype=float) - np.asarray(u_prev, dtype=float)).ravel()
    return Q.T @ du


def local_flow_coupling(Q_fe: sp.spmatrix) -> sp.csr_matrix:
    """FE coupling of the local formulation, oriented like Q^PD.

    ``Q_fe^T du`` approximates +alpha V d(eps_v); Q^PD^T du approximates
    -alpha V d(theta).  Negating aligns the two so either can be used in the
    same pressure update.
    """
    return (-Q_fe).tocsr()
