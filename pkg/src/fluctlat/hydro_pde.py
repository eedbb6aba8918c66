"""Explicit finite-difference solver for the macroscopic reaction-diffusion
equation

    dt rho = 1/2 Lap rho - div(sigma(rho) grad H) + C(rho) e^G - A(rho) e^{-G}

on [-1,1] with Dirichlet boundary densities, plus weak-form and L^1
contraction diagnostics and the energy of a trajectory.

The drift divergence uses arithmetic-mean sigma on bonds so that the scheme
has an exact discrete divergence structure; the stored instantaneous
currents are nodal: Qdot = -1/2 D_h rho + sigma(rho) D_h H (centered D_h)
and Kdot = C e^G - A e^{-G}.
"""

from __future__ import annotations

import numpy as np

from .errors import CFLError, ConsistencyError, NumericalError
from .grids import (
    FieldGrid,
    GridSpec,
    TrajectoryGrid,
    centered_gradient,
    integrate_t,
    integrate_tx,
    integrate_x,
)
from .rates import CylinderRate, check_assumptions, macroscopic_coefficients

_RANGE_TOL = 1e-10


def _as_field(grid: GridSpec, f) -> FieldGrid:
    if f is None:
        return grid.zero_field()
    if isinstance(f, FieldGrid):
        if f.grid != grid:
            raise ConsistencyError("field grid does not match solver grid")
        return f
    return grid.sample(f)


def solve_hydro(
    gamma,
    rho_minus: float,
    rho_plus: float,
    rate: CylinderRate,
    G=None,
    H=None,
    nx: int = 64,
    nt: int | None = None,
    T: float = 1.0,
) -> TrajectoryGrid:
    """Explicit Euler march of the tilted hydrodynamic equation.

    gamma is the initial profile (callable of x); G and H may be None,
    callables of (x) or (t,x), or FieldGrids on the target grid.  The time
    step must satisfy dt <= dx^2 (with diffusion coefficient 1/2 this leaves
    a factor-2 stability margin for the reaction terms).
    """
    dx = 2.0 / nx
    if nt is None:
        nt = max(1, int(np.ceil(T / dx**2)))
    grid = GridSpec(nx=nx, nt=nt, T=T)
    dt = grid.dt
    if dt > dx * dx * (1 + 1e-12):
        raise CFLError(f"dt={dt:g} exceeds dx^2={dx * dx:g}; increase nt")

    coeffs = macroscopic_coefficients(rate)
    gf = _as_field(grid, G).values
    hf = _as_field(grid, H).values
    eg = np.exp(gf)
    emg = np.exp(-gf)

    x = grid.x
    rho0 = np.array([float(gamma(xi)) for xi in x])
    if abs(rho0[0] - rho_minus) > 1e-9 or abs(rho0[-1] - rho_plus) > 1e-9:
        raise ConsistencyError("initial profile does not match boundary densities")

    rho = np.empty((nt + 1, nx + 1))
    kdot = np.empty((nt + 1, nx + 1))
    rho[0] = rho0
    kdot[0] = coeffs.C(rho0) * eg[0] - coeffs.A(rho0) * emg[0]

    cur = rho0.copy()
    for n in range(nt):
        sig = coeffs.sigma(cur)
        sig_b = 0.5 * (sig[1:] + sig[:-1])
        flux_b = sig_b * np.diff(hf[n]) / dx  # sigma grad H on bonds
        lap = (cur[2:] - 2.0 * cur[1:-1] + cur[:-2]) / dx**2
        react = coeffs.C(cur) * eg[n] - coeffs.A(cur) * emg[n]
        new = cur.copy()
        new[1:-1] += dt * (0.5 * lap - np.diff(flux_b) / dx + react[1:-1])
        new[0] = rho_minus
        new[-1] = rho_plus
        if not np.all(np.isfinite(new)):
            raise NumericalError(f"non-finite density at step {n + 1} (t={dt * (n + 1):g})")
        lo, hi = new.min(), new.max()
        if lo < -_RANGE_TOL or hi > 1.0 + _RANGE_TOL:
            raise NumericalError(
                f"density left [0,1] at step {n + 1}: range [{lo:.3e}, {hi:.3e}]"
            )
        np.clip(new, 0.0, 1.0, out=new)
        cur = new
        rho[n + 1] = cur
        kdot[n + 1] = coeffs.C(cur) * eg[n + 1] - coeffs.A(cur) * emg[n + 1]

    qdot = -0.5 * centered_gradient(rho, dx) + coeffs.sigma(rho) * centered_gradient(hf, dx)
    return TrajectoryGrid(
        grid=grid, rho=rho, qdot=qdot, kdot=kdot, rho_minus=rho_minus, rho_plus=rho_plus
    )


def weak_residual(traj: TrajectoryGrid, G, H, phi: FieldGrid, t: float, rate: CylinderRate) -> float:
    """Difference of the two sides of the weak formulation at time t.

    For phi vanishing at x = +-1:
      <rho_t phi_t> - <rho_0 phi_0>
        = int_0^t <rho (dt + 1/2 Lap) phi> + <sigma(rho) grad H grad phi>
          + <(C e^G - A e^{-G}) phi>
          - 1/2 [rho_plus grad phi(s,1) - rho_minus grad phi(s,-1)] ds
    """
    grid = traj.grid
    if phi.grid != grid:
        raise ConsistencyError("test function grid mismatch")
    pv = phi.values
    if np.max(np.abs(pv[:, 0])) > 1e-12 or np.max(np.abs(pv[:, -1])) > 1e-12:
        raise ConsistencyError("test function must vanish at the space boundary")
    it = int(round(t / grid.dt))
    if abs(it * grid.dt - t) > 1e-9 or it < 0 or it > grid.nt:
        raise ConsistencyError("t must be a time grid point")
    if it == 0:
        return 0.0

    dx, dt = grid.dx, grid.dt
    coeffs = macroscopic_coefficients(rate)
    gf = _as_field(grid, G).values[: it + 1]
    hf = _as_field(grid, H).values[: it + 1]
    rho = traj.rho[: it + 1]
    pvt = pv[: it + 1]

    lhs = integrate_x(rho[it] * pvt[it], dx) - integrate_x(rho[0] * pvt[0], dx)

    dphi_t = centered_gradient(pv, grid.dt, axis=0)[: it + 1]
    lap_phi = np.zeros_like(pvt)
    lap_phi[:, 1:-1] = (pvt[:, 2:] - 2 * pvt[:, 1:-1] + pvt[:, :-2]) / dx**2
    gpx = centered_gradient(pvt, dx)
    ghx = centered_gradient(hf, dx)
    react = coeffs.C(rho) * np.exp(gf) - coeffs.A(rho) * np.exp(-gf)

    bulk = rho * (dphi_t + 0.5 * lap_phi) + coeffs.sigma(rho) * ghx * gpx + react * pvt
    rhs = float(integrate_t(integrate_x(bulk, dx), dt))
    rhs -= 0.5 * float(
        integrate_t(traj.rho_plus * gpx[:, -1] - traj.rho_minus * gpx[:, 0], dt)
    )
    return float(lhs - rhs)


def l1_contraction_check(traj1: TrajectoryGrid, traj2: TrajectoryGrid, rate: CylinderRate):
    """Trapezoidal L^1 distances between two densities at each time level.

    Returns (distances, nonincreasing) where nonincreasing allows a 1e-8
    per-step slack.  Requires a rate whose A is nondecreasing and C is
    nonincreasing (the monotonicity that makes the flow a contraction).
    """
    traj1.same_grid(traj2)
    report = check_assumptions(rate)
    if not report.L2_ok:
        raise ConsistencyError(
            f"rate fails the monotonicity hypothesis (witnesses: {report.witnesses})"
        )
    dist = integrate_x(np.abs(traj1.rho - traj2.rho), traj1.grid.dx)
    nonincreasing = bool(np.all(np.diff(dist) <= 1e-8))
    return dist, nonincreasing


def energy(traj: TrajectoryGrid) -> float:
    """1/2 int_0^T int_{-1}^1 (grad rho)^2 dx dt with centered gradients."""
    grad = centered_gradient(traj.rho, traj.grid.dx)
    return 0.5 * integrate_tx(grad**2, traj.grid.dt, traj.grid.dx)


def energy_variational_bound(traj: TrajectoryGrid, n_modes: int = 16) -> float:
    """Lower bound on `energy` by maximizing the linear-quadratic test-function
    form over a sine basis, slice by slice in time.

    1/2 int (grad rho)^2 = sup_phi { -int rho div phi - 1/2 int phi^2 } over
    phi vanishing at +-1; restricted to phi(t,x) = sum_k b_k(t) sin(k pi (x+1)/2)
    the slice optimum is a^T M^{-1} a / 2 with a_k = -int rho grad e_k... e_k
    here multiplies grad rho directly: a_k = int grad rho e_k via parts
    = -int rho grad e_k + boundary terms.
    """
    grid = traj.grid
    x = grid.x
    k = np.arange(1, n_modes + 1)
    ek = np.sin(np.outer(k, np.pi * (x + 1) / 2))  # (n_modes, nx+1), zero at ends
    dek = (k[:, None] * np.pi / 2) * np.cos(np.outer(k, np.pi * (x + 1) / 2))

    # a_k(t) = int grad rho * e_k dx = [rho e_k] - int rho grad e_k = -int rho grad e_k
    a = -np.trapezoid(traj.rho[:, None, :] * dek[None, :, :], dx=grid.dx, axis=-1)
    M = np.trapezoid(ek[:, None, :] * ek[None, :, :], dx=grid.dx, axis=-1)
    vals = 0.5 * np.einsum("ti,ij,tj->t", a, np.linalg.inv(M), a)
    return float(integrate_t(vals, grid.dt))
