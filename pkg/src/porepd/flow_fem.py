"""Galerkin FE Darcy flow on the quadrilateral mesh.

Elements are classified from the PD damage field into reservoir, transition
and fracture domains; effective properties are interpolated with linear
indicator functions and fracture permeability follows the cubic law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .discretization import FEMesh
from .errors import ConfigurationError, MeshError, ParameterError

RESERVOIR, TRANSITION, FRACTURE = 0, 1, 2


def storage_coefficient(alpha: float, porosity: float, K_solid: float, K_fluid: float) -> float:
    """s = (alpha - n)(1 - alpha) / K_s + n / K_w; K_s may be ``inf``."""
    if not (K_solid > 0 and K_fluid > 0):
        raise ParameterError("bulk moduli must be positive")
    if not (0.0 <= porosity <= alpha <= 1.0):
        raise ParameterError(f"need 0 <= n <= alpha <= 1, got n={porosity}, alpha={alpha}")
    solid = 0.0 if math.isinf(K_solid) else (alpha - porosity) * (1.0 - alpha) / K_solid
    return solid + porosity / K_fluid


@dataclass(frozen=True)
class FlowProperties:
    """Fluid and porous-medium constants.

    Fracture-domain values: alpha_f = n_f = 1, rho_f = rho_w, s_f = 1 / K_w.
    """

    alpha: float
    porosity: float
    permeability: float
    K_solid: float
    K_fluid: float
    viscosity: float
    rho_solid: float
    rho_fluid: float
    gravity: float = 0.0

    def __post_init__(self):
        if not (self.permeability > 0 and self.viscosity > 0):
            raise ParameterError("permeability and viscosity must be positive")
        storage_coefficient(self.alpha, self.porosity, self.K_solid, self.K_fluid)

    @property
    def storage(self) -> float:
        return storage_coefficient(self.alpha, self.porosity, self.K_solid, self.K_fluid)

    @property
    def fracture_storage(self) -> float:
        return 1.0 / self.K_fluid

    @property
    def mixture_density(self) -> float:
        return (1.0 - self.porosity) * self.rho_solid + self.porosity * self.rho_fluid


@dataclass
class DomainClassification:
    phibar: np.ndarray
    label: np.ndarray
    chi_r: np.ndarray
    chi_f: np.ndarray

    def effective(self, reservoir_value, fracture_value):
        """chi-weighted interpolant of a reservoir and a fracture property."""
        return self.chi_r * reservoir_value + self.chi_f * fracture_value


def classify_elements(phi, elements, c1: float = 0.4, c2: float = 0.8) -> DomainClassification:
    """Label elements from the mean damage of their four nodes."""
    if not (0.0 < c1 < c2 <= 1.0):
        raise ConfigurationError(f"classification thresholds need 0 < c1 < c2 <= 1, got c1={c1}, c2={c2}")
    phibar = np.asarray(phi)[elements].mean(axis=1)
    label = np.full(phibar.shape, TRANSITION, dtype=np.int8)
    label[phibar <= c1] = RESERVOIR
    label[phibar >= c2] = FRACTURE
    chi_f = np.clip((phibar - c1) / (c2 - c1), 0.0, 1.0)
    return DomainClassification(phibar, label, 1.0 - chi_f, chi_f)


@dataclass
class ElementProperties:
    storage: np.ndarray
    mobility: np.ndarray      # k / mu_w
    coupling: np.ndarray      # Biot coefficient entering Q_e (0 in fracture elements)
    density: np.ndarray
    porosity: np.ndarray
    permeability: np.ndarray


def effective_properties(cls: DomainClassification, props: FlowProperties, k_fracture) -> ElementProperties:
    k_f = np.broadcast_to(np.asarray(k_fracture, dtype=float), cls.phibar.shape)
    k = cls.effective(props.permeability, k_f)
    alpha = cls.effective(props.alpha, 1.0)
    alpha = np.where(cls.label == FRACTURE, 0.0, alpha)
    return ElementProperties(
        storage=cls.effective(props.storage, props.fracture_storage),
        mobility=k / props.viscosity,
        coupling=alpha,
        density=cls.effective(props.mixture_density, props.rho_fluid),
        porosity=cls.effective(props.porosity, 1.0),
        permeability=k,
    )


class CrackPath:
    """Straight horizontal crack path y = y_line for x in [x_min, x_max].

    ``below``/``above`` are the node rows immediately straddling the line.
    """

    def __init__(self, grid, y_line: float, x_min: float = -math.inf, x_max: float = math.inf):
        dx = grid.spacing
        rows = (y_line - grid.origin[1]) / dx
        lo = int(math.floor(rows))
        if abs(rows - round(rows)) < 1e-9 or lo < 0 or lo >= grid.ny:
            raise ConfigurationError("crack path must lie strictly between two interior node rows")
        self.y_line = y_line
        self.x_min, self.x_max = x_min, x_max
        cols = np.arange(grid.nx + 1)
        self.below = grid.node_index(cols, lo)
        self.above = grid.node_index(cols, lo + 1)
        self.x = grid.coords[self.below, 0]

    def opening(self, u) -> np.ndarray:
        """Normal displacement jump per column (above minus below)."""
        u = np.asarray(u).reshape(-1, 2)
        return u[self.above, 1] - u[self.below, 1]


def crack_aperture(mesh: FEMesh, u, path: CrackPath, labels=None):
    """Aperture a and cubic-law permeability a^2 / 12 per element.

    The jump is interpolated along the path at each element centre and
    clamped at zero; reservoir elements (when ``labels`` is given) get a = 0.
    """
    xc = mesh.centers()[:, 0]
    jump = np.interp(xc, path.x, path.opening(u))
    a = np.maximum(jump, 0.0)
    a[(xc < path.x_min) | (xc > path.x_max)] = 0.0
    if labels is not None:
        a[np.asarray(labels) == RESERVOIR] = 0.0
    return a, a * a / 12.0


def element_matrices(mesh: FEMesh, element: int, storage: float, mobility: float, alpha: float):
    """S_e (4x4), H_e (4x4) and Q_e (8x4) of one element by 2x2 Gauss quadrature."""
    unit = _unit_matrices(mesh, np.array([element]))
    if not np.all(mesh.detj[element] > 0):
        raise MeshError(f"degenerate Jacobian in element {element}")
    return storage * unit[0][0], mobility * unit[1][0], alpha * unit[2][0]


def _unit_matrices(mesh: FEMesh, elems=None):
    if elems is None:
        elems = np.arange(mesh.n_elements)
    N = mesh.shape                           # (gp, 4)
    dN = mesh.dshape[elems]                  # (ne, gp, 2, 4)
    wdet = mesh.detj[elems] * mesh.weights * mesh.thickness   # (ne, gp)
    S = np.einsum("eg,ga,gb->eab", wdet, N, N)
    H = np.einsum("eg,egia,egib->eab", wdet, dN, dN)
    # Q_e[2a + c, b] = int dN_a/dx_c N_b
    Q = np.einsum("eg,egca,gb->eacb", wdet, dN, N).reshape(len(elems), 8, 4)
    return S, H, Q


class FlowAssembler:
    """Global S, H and FE coupling Q from per-element coefficients.

    Unit element matrices and the CSR scatter maps are computed once; a
    rebuild only rescales and scatters.  Re-assembling with coefficients
    identical to the previous call returns the cached operators.
    """

    def __init__(self, mesh: FEMesh):
        self.mesh = mesh
        self.S_unit, self.H_unit, self.Q_unit = _unit_matrices(mesh)
        el = mesh.elements
        n = mesh.n_nodes
        rows = np.repeat(el, 4, axis=1).ravel()
        cols = np.tile(el, (1, 4)).ravel()
        self._pp = self._scatter_map(rows, cols, (n, n))
        dof = np.stack([2 * el, 2 * el + 1], axis=2).reshape(-1, 8)
        qrows = np.repeat(dof, 4, axis=1).ravel()
        qcols = np.tile(el, (1, 8)).ravel()
        self._qp = self._scatter_map(qrows, qcols, (2 * n, n))
        self._key = None
        self._cache = None
        self.rebuilds = 0

    @staticmethod
    def _scatter_map(rows, cols, shape):
        pattern = sp.coo_matrix((np.ones(rows.size), (rows, cols)), shape=shape).tocsr()
        pattern.sort_indices()
        # position of every (row, col) contribution inside pattern.data
        lin = rows.astype(np.int64) * shape[1] + cols
        keys = np.repeat(np.arange(shape[0]), np.diff(pattern.indptr)) * shape[1] + pattern.indices
        pos = np.searchsorted(keys, lin)
        return pattern.indptr.copy(), pattern.indices.copy(), pos, shape

    @staticmethod
    def _build(smap, values):
        indptr, indices, pos, shape = smap
        data = np.bincount(pos, weights=values, minlength=indices.size)
        return sp.csr_matrix((data, indices.copy(), indptr.copy()), shape=shape)

    def assemble(self, storage, mobility, coupling):
        ne = self.mesh.n_elements
        storage = np.broadcast_to(np.asarray(storage, dtype=float), (ne,))
        mobility = np.broadcast_to(np.asarray(mobility, dtype=float), (ne,))
        coupling = np.broadcast_to(np.asarray(coupling, dtype=float), (ne,))
        key = (storage.tobytes(), mobility.tobytes(), coupling.tobytes())
        if key == self._key:
            return self._cache
        S = self._build(self._pp, (storage[:, None, None] * self.S_unit).ravel())
        H = self._build(self._pp, (mobility[:, None, None] * self.H_unit).ravel())
        Q = self._build(self._qp, (coupling[:, None, None] * self.Q_unit).ravel())
        self._key, self._cache = key, (S, H, Q)
        self.rebuilds += 1
        return self._cache


def assemble_flow(mesh: FEMesh, element_props: ElementProperties, assembler: Optional[FlowAssembler] = None):
    """Assemble (S, H, Q) for the current element properties."""
    assembler = assembler or FlowAssembler(mesh)
    return assembler.assemble(element_props.storage, element_props.mobility, element_props.coupling)
