"""Staggered time integration.

Each step solves the pressure field implicitly (theta-scheme), then advances
the PD solid with the explicit central-difference update (forward difference
for velocity, backward for displacement), checks bond failure and refreshes
the flow operators when damage evolved.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import coupling as cpl
from . import flow_fem, pd_core
from .discretization import FEMesh, PDGrid
from .errors import DivergenceError, SolverError, StabilityError

logger = logging.getLogger(__name__)


def stable_dt(constants: pd_core.ElasticConstants, horizon: float) -> float:
    """delta / c' with c' = sqrt((lambda + 2 mu) / rho)."""
    c = math.sqrt((constants.lam + 2.0 * constants.mu) / constants.density)
    return horizon / c


def check_time_step(dt: float, dt_max: float) -> None:
    if not dt < dt_max:
        raise StabilityError(dt, dt_max)


def solve_linear(A, b, method: str = "direct", rtol: float = 1e-10, maxiter: Optional[int] = None):
    """Solve the SPD system A x = b to relative residual ``rtol``."""
    A = sp.csr_matrix(A)
    b = np.asarray(b, dtype=float)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(b)
    if method == "direct":
        try:
            lu = spla.splu(A.tocsc())
        except RuntimeError as exc:
            raise SolverError(f"singular system: {exc}") from exc
        x = lu.solve(b)
        res = np.linalg.norm(A @ x - b) / bnorm
        if res > rtol:
            x = x + lu.solve(b - A @ x)
            res = np.linalg.norm(A @ x - b) / bnorm
        if not res <= rtol:
            raise SolverError(f"direct solve residual {res:.3e} exceeds {rtol:.1e}")
        return x
    if method == "cg":
        history = []
        diag = A.diagonal()
        if np.any(diag <= 0):
            raise SolverError("matrix is not positive definite (non-positive diagonal)")
        M = sp.diags(1.0 / diag)
        maxiter = maxiter or 10 * A.shape[0]
        x, info = spla.cg(A, b, rtol=rtol, atol=0.0, maxiter=maxiter, M=M,
                          callback=lambda xk: history.append(np.linalg.norm(A @ xk - b) / bnorm))
        res = np.linalg.norm(A @ x - b) / bnorm
        if info != 0 or res > rtol:
            tail = ", ".join(f"{r:.2e}" for r in history[-5:])
            raise SolverError(f"CG did not converge in {maxiter} iterations; residual tail [{tail}]")
        return x
    raise ValueError(f"unknown linear solver method {method!r}")


class PressureSolver:
    """Theta-scheme pressure update with Dirichlet nodes eliminated.

    ``A = S + theta dt H`` is factorised once per operator set.
    """

    def __init__(self, S, H, dt: float, theta: float = 0.5, fixed=None, fixed_values=None,
                 rtol: float = 1e-10):
        self.dt, self.theta, self.rtol = dt, theta, rtol
        n = S.shape[0]
        self.fixed = np.zeros(n, dtype=bool)
        if fixed is not None:
            self.fixed[np.asarray(fixed)] = True
        self.values = np.zeros(n)
        if fixed_values is not None:
            self.values[self.fixed] = np.broadcast_to(fixed_values, (int(self.fixed.sum()),))
        self.free = np.nonzero(~self.fixed)[0]
        self.update_operators(S, H)

    def update_operators(self, S, H):
        A = (S + self.theta * self.dt * H).tocsr()
        self.B = (S - (1.0 - self.theta) * self.dt * H).tocsr()
        fr = self.free
        self.A_ff = A[fr][:, fr].tocsc()
        self.A_fd = A[fr][:, np.nonzero(self.fixed)[0]]
        msg = "pressure system is singular: no Dirichlet node constrains the constant-pressure mode"
        try:
            self._lu = spla.splu(self.A_ff)
        except RuntimeError as exc:
            raise SolverError(msg) from exc
        pivots = np.abs(self._lu.U.diagonal())
        if pivots.size and not (np.all(np.isfinite(pivots)) and pivots.min() > 1e-12 * pivots.max()):
            raise SolverError(msg)

    def step(self, p_now, q_w=None, coupling=None):
        """p^{n+1} from p^n, the outflow vector q_w and Q^T (u^n - u^(n-1))."""
        rhs = self.B @ p_now
        if q_w is not None:
            rhs -= self.dt * q_w
        if coupling is not None:
            rhs += coupling
        b = rhs[self.free]
        if self.A_fd.shape[1]:
            b = b - self.A_fd @ self.values[self.fixed]
        x = self._lu.solve(b)
        bnorm = np.linalg.norm(b)
        if bnorm > 0:
            r = b - self.A_ff @ x
            res = np.linalg.norm(r) / bnorm
            if res > self.rtol:
                x += self._lu.solve(r)
                res = np.linalg.norm(b - self.A_ff @ x) / bnorm
                if not res <= self.rtol:
                    raise SolverError(f"pressure solve residual {res:.3e} exceeds {self.rtol:.1e}")
        p = self.values.copy()
        p[self.free] = x
        return p


def pressure_step(S, H, Q_flow, p_now, u_now, u_prev, q_w, dt: float, theta: float = 0.5, fixed=None,
                  fixed_values=None):
    """One theta-scheme pressure update (builds and factorises its own system)."""
    coupling = None
    if Q_flow is not None:
        coupling = cpl.flow_coupling_increment(Q_flow, u_now, u_prev)
    solver = PressureSolver(sp.csr_matrix(S), sp.csr_matrix(H), dt, theta, fixed, fixed_values)
    q = None if q_w is None else np.asarray(q_w, dtype=float)
    return solver.step(np.asarray(p_now, dtype=float), q, coupling)


@dataclass
class CoupledState:
    u: np.ndarray
    v: np.ndarray
    a: np.ndarray
    p: np.ndarray
    u_prev: np.ndarray
    phi: np.ndarray
    step: int = 0
    dt: float = 0.0

    @property
    def time(self) -> float:
        return self.step * self.dt

    def snapshot(self) -> "CoupledState":
        return CoupledState(self.u.copy(), self.v.copy(), self.a.copy(), self.p.copy(),
                            self.u_prev.copy(), self.phi.copy(), self.step, self.dt)


def pd_explicit_step(state: CoupledState, net_force: Callable, density: float, dt: float, fixed=None):
    """Advance u, v by one step of the forward/backward difference pair.

    ``net_force(u)`` returns the total force density (internal + external -
    pressure) at the current displacement u^n, with the pressure already
    advanced to p^(n+1).  Then ``v^(n+1) = v^n + dt a^n`` and
    ``u^(n+1) = u^n + dt v^(n+1)``.  Evaluating the force before the update
    keeps the pressure in phase with the displacement it was computed from;
    a one-step lag acts as negative damping on the undrained stiffness.
    ``fixed`` is an (n, 2) boolean mask of constrained DOFs held at zero.
    """
    a = net_force(state.u) / density
    if fixed is not None:
        a[fixed] = 0.0
    bad = ~np.isfinite(a)
    if bad.any():
        raise DivergenceError(state.step + 1, int(np.nonzero(bad.any(axis=1))[0][0]))
    v = state.v + dt * a
    u = state.u + dt * v
    if fixed is not None:
        v[fixed] = 0.0
        u[fixed] = 0.0
    state.u_prev = state.u
    state.u, state.v, state.a = u, v, a
    return state


@dataclass
class Loading:
    """Solid body force density (n, 2), fluid injection (n,) and Dirichlet pressures."""

    body_force: np.ndarray
    injection: Optional[np.ndarray] = None
    pressure_nodes: Optional[np.ndarray] = None
    pressure_values: float = 0.0


class Simulation:
    """Staggered hydro-mechanical (or dry) PD/FE simulation on a shared lattice.

    Parameters
    ----------
    grid, mesh : PDGrid, FEMesh
        Shared discretisation with families built.
    solid : ElasticConstants
        Skeleton constants; ``density`` is the inertial density.
    flow : FlowProperties or None
        None runs the dry model (pressure fixed at zero, no flow solve).
    dt, theta : float
        Time step and theta-scheme parameter.
    loading : Loading
    fixed : (n, 2) bool array, optional
        Constrained displacement DOFs.
    critical_stretch : float, optional
        Bond failure threshold; ``None`` or ``inf`` disables failure.
    allowed_bonds : bool array, optional
        Bonds admitted to fail.
    crack_path : CrackPath, optional
        Path used to measure apertures.
    coupling_mode : {"nonlocal", "local"}
        Flow-side coupling operator: transposed Q^PD or the FE Q.
    refresh_direction : bool
        Rebuild Q^PD with deformed bond directions (True) or keep the
        undeformed ones.
    """

    def __init__(self, grid: PDGrid, mesh: FEMesh, solid: pd_core.ElasticConstants,
                 flow: Optional[flow_fem.FlowProperties], dt: float, theta: float = 0.5,
                 loading: Optional[Loading] = None, fixed=None, critical_stretch: Optional[float] = None,
                 allowed_bonds=None, crack_path: Optional[flow_fem.CrackPath] = None,
                 c1: float = 0.4, c2: float = 0.8, coupling_mode: str = "nonlocal",
                 refresh_direction: bool = True, check_stability: bool = True):
        self.grid, self.mesh = grid, mesh
        self.solid, self.flow = solid, flow
        self.dt, self.theta = dt, theta
        self.dt_max = stable_dt(solid, grid.horizon)
        if check_stability:
            check_time_step(dt, self.dt_max)
        n = grid.n_nodes
        self.loading = loading or Loading(np.zeros((n, 2)))
        self.fixed = np.zeros((n, 2), dtype=bool) if fixed is None else np.asarray(fixed, dtype=bool)
        self.s_c = math.inf if critical_stretch is None else float(critical_stretch)
        self.allowed = allowed_bonds
        self.crack_path = crack_path
        self.c1, self.c2 = c1, c2
        if coupling_mode not in ("nonlocal", "local"):
            raise ValueError(f"unknown coupling mode {coupling_mode!r}")
        self.coupling_mode = coupling_mode
        self.refresh_direction = refresh_direction
        self.alpha = flow.alpha if flow is not None else 0.0
        self.rebuilds = 0
        self.broken_history = []
        self.assembler = flow_fem.FlowAssembler(mesh) if flow is not None else None
        self.aperture = np.zeros(mesh.n_elements)
        self.classification = None
        self._stretch = None

        u0 = np.zeros((n, 2))
        phi = pd_core.damage(grid)
        self.state = CoupledState(u0, np.zeros((n, 2)), np.zeros((n, 2)), np.zeros(n), u0.copy(), phi, 0, dt)
        self.Q_pd = sp.csr_matrix((2 * n, n))
        self.pressure_solver = None
        if flow is not None:
            self._rebuild_flow()

    # -- operators -----------------------------------------------------
    def _rebuild_flow(self):
        st = self.state
        cls = flow_fem.classify_elements(st.phi, self.mesh.elements, self.c1, self.c2)
        if self.crack_path is not None:
            self.aperture, k_f = flow_fem.crack_aperture(self.mesh, st.u, self.crack_path, cls.label)
        else:
            self.aperture, k_f = np.zeros(self.mesh.n_elements), np.zeros(self.mesh.n_elements)
        props = flow_fem.effective_properties(cls, self.flow, k_f)
        self.classification = cls
        self.S, self.H, self.Q_fe = self.assembler.assemble(props.storage, props.mobility, props.coupling)
        self.Q_pd = cpl.build_pd_coupling(self.grid, self.alpha, st.u if self.refresh_direction else None)
        if self.coupling_mode == "nonlocal":
            self.Q_flow = self.Q_pd
        else:
            self.Q_flow = cpl.local_flow_coupling(self.Q_fe)
        ld = self.loading
        if self.pressure_solver is None:
            self.pressure_solver = PressureSolver(self.S, self.H, self.dt, self.theta, ld.pressure_nodes,
                                                  ld.pressure_values)
        else:
            self.pressure_solver.update_operators(self.S, self.H)
        self.rebuilds += 1

    def _net_force(self, u):
        res = pd_core.internal_force(self.grid, u, self.solid)
        self._stretch = res.stretch
        self._theta = res.theta
        f = res.force + self.loading.body_force
        if self.flow is not None and self.alpha != 0.0:
            f -= cpl.apply_pressure_force(self.Q_pd, self.state.p, self.grid.volume)
        return f

    # -- stepping ------------------------------------------------------
    def advance(self) -> CoupledState:
        st = self.state
        if self.flow is not None:
            coupling = cpl.flow_coupling_increment(self.Q_flow, st.u, st.u_prev)
            q_w = None if self.loading.injection is None else -self.loading.injection
            st.p = self.pressure_solver.step(st.p, q_w, coupling)
        pd_explicit_step(st, self._net_force, self.solid.density, self.dt, self.fixed)
        st.step += 1
        if math.isfinite(self.s_c):
            new, phi = pd_core.update_failure(self.grid, self._stretch, self.s_c, self.allowed)
            if new.size:
                st.phi = phi
                self.broken_history.append((st.step, int(new.size)))
                if self.flow is not None:
                    self._rebuild_flow()
        return st

    def run(self, n_steps: int, callback: Optional[Callable] = None):
        for _ in range(n_steps):
            self.advance()
            if callback is not None:
                callback(self)
        return self.state

    # -- diagnostics ---------------------------------------------------
    def critical_time_step(self, undrained: bool = True, tol: float = 1e-4) -> float:
        """2 / omega_max of the linearised solid about the current state.

        With ``undrained`` and a flow model, the instantaneous pressure
        stiffness Q^PD S^-1 Q^PD^T / V (Dirichlet pressure nodes removed) is
        added to the PD stiffness; the explicit step is stable only below
        this value, which can be well under ``stable_dt`` for stiff fluids.
        """
        grid, n = self.grid, self.grid.n_nodes
        free = np.nonzero(~self.fixed.ravel())[0]
        u0 = self.state.u
        f0 = pd_core.internal_force(grid, u0, self.solid).force.ravel()
        scale = 1e-6 * max(grid.spacing, float(np.abs(u0).max()))
        rho = self.solid.density
        with_fluid = undrained and self.flow is not None and self.alpha != 0.0
        if with_fluid:
            ps = self.pressure_solver
            Q = self.Q_pd[:, ps.free].tocsr()
            S_lu = spla.splu(self.S.tocsr()[ps.free][:, ps.free].tocsc())

        def matvec(x):
            full = np.zeros(2 * n)
            full[free] = np.ravel(x)
            f = pd_core.internal_force(grid, u0 + (scale * full).reshape(n, 2), self.solid).force.ravel()
            y = -(f - f0) / scale / rho
            if with_fluid:
                y += (Q @ S_lu.solve(Q.T @ full)).ravel() / (rho * np.repeat(grid.volume, 2))
            return y[free]

        op = spla.LinearOperator((free.size, free.size), matvec=matvec, dtype=float)
        v0 = np.random.default_rng(0).standard_normal(free.size)   # ones would be a rigid mode
        lam = spla.eigsh(op, k=1, which="LA", tol=tol, return_eigenvectors=False, v0=v0)[0]
        return 2.0 / math.sqrt(lam)

    def kinetic_energy(self) -> float:
        v = self.state.v
        return 0.5 * self.solid.density * float(np.sum(self.grid.volume * np.sum(v * v, axis=1)))

    def strain_energy(self) -> float:
        W = pd_core.strain_energy_density(self.grid, self.state.u, self.solid)
        return float(np.sum(W * self.grid.volume))
