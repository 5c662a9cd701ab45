"""Shared regular discretization: PD node lattice, horizon families and the
coincident 4-node quadrilateral mesh used by the pressure field.

Nodes are numbered row-major, ``i = iy * (nx + 1) + ix``.  Bonds are stored
once per unordered pair ``(i, j)`` with ``xi = x_j - x_i``; per-node family
views are available through a CSR index (:attr:`PDGrid.family_ptr`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .errors import ConfigurationError, DiscretizationError, MeshError

_REL_TOL = 1e-9


@dataclass(frozen=True)
class Domain2D:
    width: float
    height: float
    spacing: float
    origin: Tuple[float, float] = (0.0, 0.0)
    thickness: float = 1.0

    def __post_init__(self):
        for name in ("width", "height", "spacing", "thickness"):
            if not getattr(self, name) > 0.0:
                raise ConfigurationError(f"domain {name} must be positive, got {getattr(self, name)!r}")

    def cells(self) -> Tuple[int, int]:
        """Number of lattice cells along x and y.

        Raises ConfigurationError when width or height is not an integer
        multiple of the spacing.
        """
        counts = []
        for name in ("width", "height"):
            ratio = getattr(self, name) / self.spacing
            n = int(round(ratio))
            if n < 1 or abs(ratio - n) > _REL_TOL * max(ratio, 1.0):
                raise ConfigurationError(
                    f"domain {name}={getattr(self, name)!r} is not an integer multiple of "
                    f"spacing={self.spacing!r} (ratio {ratio!r})"
                )
            counts.append(n)
        return counts[0], counts[1]


@dataclass(frozen=True)
class PrecrackSegment:
    start: Tuple[float, float]
    end: Tuple[float, float]

    def __post_init__(self):
        if tuple(self.start) == tuple(self.end):
            raise ConfigurationError("pre-crack endpoints must be distinct")


@dataclass
class FEMesh:
    """Bilinear quadrilateral mesh sharing node coordinates with the PD grid.

    ``shape`` holds the shape functions at the 2x2 Gauss points (4, 4),
    ``dshape`` the physical gradients (ne, 4 gp, 2, 4), ``detj`` the Jacobian
    determinants (ne, 4) and ``weights`` the Gauss weights (4,).
    """

    coords: np.ndarray
    elements: np.ndarray
    thickness: float
    shape: np.ndarray = field(repr=False)
    dshape: np.ndarray = field(repr=False)
    detj: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return self.coords.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    def centers(self) -> np.ndarray:
        return self.coords[self.elements].mean(axis=1)


class PDGrid:
    """Regular lattice of PD nodes.

    Bond arrays (after :func:`build_families`): ``bond_i``, ``bond_j``, ``xi``
    (nb, 2), ``length``, ``influence`` (w, always 1 here), ``volume_factor``
    (partial-volume share, 1 unless the correction flag is on) and ``intact``,
    the bond history variable.  ``weighted_volume`` is m per node.
    """

    def __init__(self, coords: np.ndarray, nx: int, ny: int, spacing: float, thickness: float,
                 origin: Tuple[float, float]):
        self.coords = coords
        self.nx = nx
        self.ny = ny
        self.spacing = spacing
        self.thickness = thickness
        self.origin = tuple(origin)
        self.volume = np.full(coords.shape[0], spacing * spacing * thickness)
        self.horizon: Optional[float] = None
        self.m_ratio: Optional[int] = None
        self.bond_i = np.empty(0, dtype=np.int64)
        self.bond_j = np.empty(0, dtype=np.int64)
        self.xi = np.empty((0, 2))
        self.length = np.empty(0)
        self.influence = np.empty(0)
        self.volume_factor = np.empty(0)
        self.intact = np.empty(0, dtype=bool)
        self.weighted_volume = np.empty(0)
        self.family_ptr = np.zeros(coords.shape[0] + 1, dtype=np.int64)
        self.family_bond = np.empty(0, dtype=np.int64)

    @property
    def n_nodes(self) -> int:
        return self.coords.shape[0]

    @property
    def n_bonds(self) -> int:
        return self.bond_i.shape[0]

    def node_index(self, ix, iy):
        return np.asarray(iy) * (self.nx + 1) + np.asarray(ix)

    def family(self, node: int):
        """Neighbour indices, xi vectors (pointing from ``node``) and bond ids."""
        bonds = self.family_bond[self.family_ptr[node]:self.family_ptr[node + 1]]
        own = self.bond_i[bonds] == node
        nbr = np.where(own, self.bond_j[bonds], self.bond_i[bonds])
        xi = np.where(own[:, None], self.xi[bonds], -self.xi[bonds])
        return nbr, xi, bonds

    def family_sizes(self) -> np.ndarray:
        return np.diff(self.family_ptr)

    def copy_history(self) -> np.ndarray:
        return self.intact.copy()


def _gauss_data(coords: np.ndarray, elements: np.ndarray):
    g = 1.0 / np.sqrt(3.0)
    pts = np.array([[-g, -g], [g, -g], [g, g], [-g, g]])
    weights = np.ones(4)
    xr = np.array([-1.0, 1.0, 1.0, -1.0])
    yr = np.array([-1.0, -1.0, 1.0, 1.0])
    shape = 0.25 * (1 + pts[:, 0:1] * xr) * (1 + pts[:, 1:2] * yr)  # (gp, 4)
    dref = np.empty((4, 2, 4))
    dref[:, 0, :] = 0.25 * xr * (1 + pts[:, 1:2] * yr)
    dref[:, 1, :] = 0.25 * yr * (1 + pts[:, 0:1] * xr)
    xe = coords[elements]  # (ne, 4, 2)
    jac = np.einsum("gak,eki->egai", dref, xe)  # (ne, gp, 2, 2): d x_i / d r_a
    detj = jac[..., 0, 0] * jac[..., 1, 1] - jac[..., 0, 1] * jac[..., 1, 0]
    bad = np.nonzero(~(detj > 0.0))
    if bad[0].size:
        raise MeshError(f"non-positive Jacobian determinant in element {int(bad[0][0])}")
    inv = np.empty_like(jac)
    inv[..., 0, 0] = jac[..., 1, 1] / detj
    inv[..., 1, 1] = jac[..., 0, 0] / detj
    inv[..., 0, 1] = -jac[..., 0, 1] / detj
    inv[..., 1, 0] = -jac[..., 1, 0] / detj
    dshape = np.einsum("egia,gak->egik", inv, dref)
    return shape, dshape, detj, weights


def build_grid(domain: Domain2D) -> Tuple[PDGrid, FEMesh]:
    """Lattice nodes and the coincident quad mesh; PD node i is FE node i."""
    nx, ny = domain.cells()
    ix, iy = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1))
    coords = np.column_stack([
        domain.origin[0] + ix.ravel() * domain.spacing,
        domain.origin[1] + iy.ravel() * domain.spacing,
    ])
    grid = PDGrid(coords, nx, ny, domain.spacing, domain.thickness, domain.origin)

    cx, cy = np.meshgrid(np.arange(nx), np.arange(ny))
    n0 = (cy * (nx + 1) + cx).ravel()
    elements = np.column_stack([n0, n0 + 1, n0 + nx + 2, n0 + nx + 1]).astype(np.int64)
    shape, dshape, detj, weights = _gauss_data(coords, elements)
    mesh = FEMesh(coords, elements, domain.thickness, shape, dshape, detj, weights)
    return grid, mesh


def _lattice_offsets(m_ratio: int):
    """Half-plane integer offsets (a, b) with 0 < a^2 + b^2 <= m_r^2 (within tolerance)."""
    r = m_ratio * (1.0 + _REL_TOL)
    out = []
    for b in range(0, m_ratio + 1):
        for a in range(-m_ratio, m_ratio + 1):
            if b == 0 and a <= 0:
                continue
            if np.hypot(a, b) <= r:
                out.append((a, b))
    return out


def build_families(grid: PDGrid, m_ratio: int, partial_volume: bool = False) -> PDGrid:
    """Populate horizon families with delta = m_r * dx and w = 1.

    With ``partial_volume`` the bond volume share is reduced linearly for
    neighbours whose cell straddles the horizon edge; off by default.
    """
    if int(m_ratio) != m_ratio or m_ratio < 1:
        raise ConfigurationError(f"m_ratio must be an integer >= 1, got {m_ratio!r}")
    m_ratio = int(m_ratio)
    dx = grid.spacing
    delta = m_ratio * dx
    nx, ny = grid.nx, grid.ny
    bi, bj = [], []
    for a, b in _lattice_offsets(m_ratio):
        ix = np.arange(max(0, -a), min(nx, nx - a) + 1)
        iy = np.arange(0, ny - b + 1)
        if ix.size == 0 or iy.size == 0:
            continue
        IX, IY = np.meshgrid(ix, iy)
        src = (IY * (nx + 1) + IX).ravel()
        bi.append(src)
        bj.append(src + b * (nx + 1) + a)
    if bi:
        bond_i = np.concatenate(bi).astype(np.int64)
        bond_j = np.concatenate(bj).astype(np.int64)
    else:
        bond_i = np.empty(0, dtype=np.int64)
        bond_j = np.empty(0, dtype=np.int64)
    # deterministic ordering: by first node, then second
    order = np.lexsort((bond_j, bond_i))
    bond_i, bond_j = bond_i[order], bond_j[order]

    xi = grid.coords[bond_j] - grid.coords[bond_i]
    length = np.sqrt(xi[:, 0] * xi[:, 0] + xi[:, 1] * xi[:, 1])   # same rounding as the force kernel
    factor = np.ones_like(length)
    if partial_volume:
        outer = length > delta - 0.5 * dx
        factor[outer] = np.clip((delta + 0.5 * dx - length[outer]) / dx, 0.0, 1.0)

    grid.horizon = delta
    grid.m_ratio = m_ratio
    grid.bond_i, grid.bond_j = bond_i, bond_j
    grid.xi, grid.length = xi, length
    grid.influence = np.ones_like(length)
    grid.volume_factor = factor
    grid.intact = np.ones(length.shape[0], dtype=bool)

    n = grid.n_nodes
    ends = np.concatenate([bond_i, bond_j])
    ids = np.concatenate([np.arange(bond_i.size), np.arange(bond_i.size)])
    order = np.argsort(ends, kind="stable")
    grid.family_bond = ids[order]
    grid.family_ptr = np.concatenate([[0], np.cumsum(np.bincount(ends, minlength=n))]).astype(np.int64)
    grid.weighted_volume = weighted_volume(grid)
    return grid


def weighted_volume(grid: PDGrid, node: Optional[int] = None):
    """m = sum_j w |xi|^2 V_j over the family (all bonds, broken or not)."""
    w = grid.influence * grid.length ** 2 * grid.volume_factor
    n = grid.n_nodes
    m = (np.bincount(grid.bond_i, weights=w * grid.volume[grid.bond_j], minlength=n)
         + np.bincount(grid.bond_j, weights=w * grid.volume[grid.bond_i], minlength=n))
    empty = np.nonzero(grid.family_sizes() == 0)[0] if grid.n_bonds else np.arange(n)
    if node is not None:
        if node in set(empty.tolist()):
            raise DiscretizationError(f"node {node} has an empty family")
        return float(m[node])
    if empty.size:
        raise DiscretizationError(f"{empty.size} node(s) have empty families, first is {int(empty[0])}")
    return m


def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def segments_cross(p, q, a, b) -> np.ndarray:
    """Strict crossing test between segments p-q (arrays of points) and a-b.

    Touching at an endpoint or collinear overlap does not count.
    """
    p = np.atleast_2d(np.asarray(p, dtype=float))
    q = np.atleast_2d(np.asarray(q, dtype=float))
    ax, ay = a
    bx, by = b
    seg = np.hypot(bx - ax, by - ay)
    blen = np.hypot(q[:, 0] - p[:, 0], q[:, 1] - p[:, 1])
    eps = 1e-12 * seg * np.maximum(blen, seg)
    o1 = _orient(ax, ay, bx, by, p[:, 0], p[:, 1])
    o2 = _orient(ax, ay, bx, by, q[:, 0], q[:, 1])
    o3 = _orient(p[:, 0], p[:, 1], q[:, 0], q[:, 1], ax, ay)
    o4 = _orient(p[:, 0], p[:, 1], q[:, 0], q[:, 1], bx, by)

    def sgn(o):
        return np.where(o > eps, 1, np.where(o < -eps, -1, 0))

    s1, s2, s3, s4 = sgn(o1), sgn(o2), sgn(o3), sgn(o4)
    return (s1 * s2 < 0) & (s3 * s4 < 0)


def apply_precrack(grid: PDGrid, segment: PrecrackSegment) -> int:
    """Permanently break every bond that strictly crosses ``segment``.

    Returns the number of bonds newly broken by this call.
    """
    p = grid.coords[grid.bond_i]
    q = grid.coords[grid.bond_j]
    hit = segments_cross(p, q, segment.start, segment.end) & grid.intact
    grid.intact[hit] = False
    return int(hit.sum())
