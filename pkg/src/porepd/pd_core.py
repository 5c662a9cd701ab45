"""Ordinary state-based peridynamics in plane strain.

Bond states, dilatation, force density scalar state with the pore-pressure
term, the energy-calibrated critical stretch and the damage field.  The
force loop itself lives in :mod:`porepd._ext`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import _ext
from .discretization import PDGrid
from .errors import ParameterError, SingularBondError

# closed-form horizon integrals of the volume-weight ratio for w = 1
BETA_COEFF = 0.2192
BETA_PRIME_COEFF = 2.0 / (5.0 * math.pi)


@dataclass(frozen=True)
class ElasticConstants:
    """Isotropic elastic and fracture constants of the solid skeleton.

    ``density`` is the inertial density used by the explicit solver.
    """

    E: float
    nu: float
    Gc: float
    density: float

    def __post_init__(self):
        if not (self.E > 0 and self.Gc > 0 and self.density > 0):
            raise ParameterError("E, Gc and density must be positive")
        if not (-1.0 < self.nu < 0.5):
            raise ParameterError(f"Poisson ratio must lie in (-1, 0.5), got {self.nu}")
        radicand = 4.0 * (self.kappa - 7.0 * self.mu / 9.0) * BETA_COEFF + 8.0 * self.mu * BETA_PRIME_COEFF
        if radicand <= 0:
            raise ParameterError(
                f"critical stretch undefined: kappa - 7 mu / 9 = {self.kappa - 7 * self.mu / 9:.6g} Pa "
                "makes the energy denominator non-positive"
            )

    @property
    def kappa(self) -> float:
        return self.E / (3.0 * (1.0 - 2.0 * self.nu))

    @property
    def mu(self) -> float:
        return self.E / (2.0 * (1.0 + self.nu))

    @property
    def lam(self) -> float:
        return self.kappa - 2.0 * self.mu / 3.0

    @property
    def kprime(self) -> float:
        return self.kappa + self.mu / 9.0

    def gamma(self, m):
        return 8.0 * self.mu / m


@dataclass(frozen=True)
class FractureConstants:
    beta: float
    beta_prime: float
    s_c: float


@dataclass(frozen=True)
class BondKinematics:
    extension: np.ndarray
    stretch: np.ndarray
    direction: np.ndarray
    deformed_length: np.ndarray


def bond_kinematics(xi, u_i, u_j) -> BondKinematics:
    """Extension, stretch and deformed unit direction of one or many bonds."""
    xi = np.asarray(xi, dtype=float)
    Y = xi + np.asarray(u_j, dtype=float) - np.asarray(u_i, dtype=float)
    x = np.linalg.norm(xi, axis=-1)
    y = np.linalg.norm(Y, axis=-1)
    if np.any(x <= 0):
        raise ParameterError("bond reference length must be positive")
    if np.any(y == 0.0):
        idx = int(np.argmax(np.atleast_1d(y) == 0.0))
        raise SingularBondError(idx, -1, -1)
    e = y - x
    return BondKinematics(e, e / x, Y / np.expand_dims(y, -1), y)


def _bond_arrays(grid: PDGrid, u):
    Y = grid.xi + u[grid.bond_j] - u[grid.bond_i]
    y = np.sqrt(Y[:, 0] * Y[:, 0] + Y[:, 1] * Y[:, 1])
    return Y, y


def dilatation(grid: PDGrid, u, node: Optional[int] = None):
    """theta = (2 / m) sum_j w |xi| e V_j over intact bonds."""
    u = np.asarray(u, dtype=float)
    _, y = _bond_arrays(grid, u)
    e = np.where(grid.intact, y - grid.length, 0.0)
    ww = 2.0 * grid.influence * grid.volume_factor * grid.length * e
    n = grid.n_nodes
    theta = (np.bincount(grid.bond_i, weights=ww * grid.volume[grid.bond_j], minlength=n)
             + np.bincount(grid.bond_j, weights=ww * grid.volume[grid.bond_i], minlength=n))
    theta /= grid.weighted_volume
    return float(theta[node]) if node is not None else theta


def force_density_scalar(extension, length, theta, pressure, m, constants: ElasticConstants,
                         alpha: float = 0.0, w=1.0):
    """Force density scalar state t for a bond seen from the node carrying theta, p, m."""
    gamma = constants.gamma(m)
    e_dev = extension - theta * length / 3.0
    return ((2.0 * constants.kprime - gamma * m / 9.0) * theta - 2.0 * alpha * pressure) * w * length / m \
        + gamma * w * e_dev


@dataclass
class ForceResult:
    force: np.ndarray      # force density per node (n, 2)
    theta: np.ndarray      # dilatation per node
    stretch: np.ndarray    # stretch per bond


def internal_force(grid: PDGrid, u, constants: ElasticConstants, pressure=None, alpha: float = 0.0,
                   kernel: Optional[Callable] = None) -> ForceResult:
    """Net PD force density sum_j (t_ij M_ij - t_ji M_ji) V_j over intact bonds.

    With ``pressure`` and ``alpha`` the pore-pressure part of the force state
    is included; otherwise the purely mechanical response is returned.
    """
    kernel = kernel or _ext.bond_forces
    u = np.ascontiguousarray(u, dtype=float).reshape(grid.n_nodes, 2)
    p = np.zeros(grid.n_nodes) if pressure is None else np.ascontiguousarray(pressure, dtype=float)
    force, theta, stretch, bad = kernel(
        u, grid.bond_i, grid.bond_j, np.ascontiguousarray(grid.xi), grid.length, grid.influence,
        grid.volume_factor, grid.intact.view(np.uint8), grid.volume, grid.weighted_volume,
        constants.kprime, constants.mu, float(alpha), p,
    )
    if bad >= 0:
        raise SingularBondError(bad, int(grid.bond_i[bad]), int(grid.bond_j[bad]))
    return ForceResult(np.asarray(force), np.asarray(theta), np.asarray(stretch))


def strain_energy_density(grid: PDGrid, u, constants: ElasticConstants) -> np.ndarray:
    """W = k' theta^2 / 2 + gamma / 2 sum_j w e_d^2 V_j per node."""
    u = np.asarray(u, dtype=float).reshape(grid.n_nodes, 2)
    theta = dilatation(grid, u)
    _, y = _bond_arrays(grid, u)
    live = grid.intact
    e = y - grid.length
    n = grid.n_nodes
    wf = grid.influence * grid.volume_factor
    edi = e - theta[grid.bond_i] * grid.length / 3.0
    edj = e - theta[grid.bond_j] * grid.length / 3.0
    sq = (np.bincount(grid.bond_i[live], weights=(wf * edi ** 2 * grid.volume[grid.bond_j])[live], minlength=n)
          + np.bincount(grid.bond_j[live], weights=(wf * edj ** 2 * grid.volume[grid.bond_i])[live], minlength=n))
    return 0.5 * constants.kprime * theta ** 2 + 0.5 * constants.gamma(grid.weighted_volume) * sq


def critical_stretch(constants: ElasticConstants, horizon: float) -> FractureConstants:
    """Critical bond stretch calibrated to Gc for w = 1."""
    if not horizon > 0:
        raise ParameterError("horizon must be positive")
    beta = BETA_COEFF * horizon
    beta_p = BETA_PRIME_COEFF * horizon
    soft = constants.kappa - 7.0 * constants.mu / 9.0
    denom = 4.0 * soft * beta + 8.0 * constants.mu * beta_p
    if denom <= 0:
        raise ParameterError(f"negative radicand in critical stretch (kappa - 7 mu / 9 = {soft:.6g})")
    return FractureConstants(beta, beta_p, math.sqrt(constants.Gc / denom))


def damage(grid: PDGrid) -> np.ndarray:
    """phi = 1 - sum(w rho V) / sum(w V) over each family."""
    n = grid.n_nodes
    wf = grid.influence * grid.volume_factor
    tot = (np.bincount(grid.bond_i, weights=wf * grid.volume[grid.bond_j], minlength=n)
           + np.bincount(grid.bond_j, weights=wf * grid.volume[grid.bond_i], minlength=n))
    keep = wf * grid.intact
    kept = (np.bincount(grid.bond_i, weights=keep * grid.volume[grid.bond_j], minlength=n)
            + np.bincount(grid.bond_j, weights=keep * grid.volume[grid.bond_i], minlength=n))
    with np.errstate(invalid="ignore", divide="ignore"):
        phi = np.where(tot > 0, 1.0 - kept / tot, 0.0)
    return np.clip(phi, 0.0, 1.0)


def update_failure(grid: PDGrid, stretch, s_c: float, allowed=None):
    """Break every intact, admissible bond with s >= s_c.

    ``allowed`` is a boolean mask over bonds (or None for all bonds).
    Returns (newly broken bond ids, updated damage per node).
    """
    cand = grid.intact & (np.asarray(stretch) >= s_c)
    if allowed is not None:
        cand &= allowed
    new = np.nonzero(cand)[0]
    if new.size:
        grid.intact[new] = False
    return new, damage(grid)


def centerline_predicate(grid: PDGrid, y_line: float) -> np.ndarray:
    """Mask of bonds whose endpoints lie strictly on opposite sides of y = y_line."""
    yi = grid.coords[grid.bond_i, 1] - y_line
    yj = grid.coords[grid.bond_j, 1] - y_line
    return yi * yj < 0.0
