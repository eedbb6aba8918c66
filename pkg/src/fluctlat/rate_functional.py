"""Large-deviation rate functionals for joint (density, current) trajectories.

Provides the per-point cost Phi of the non-conservative current, the explicit
decomposition I0 = I1 + I2, the variational functional J_{G,H} whose supremum
over drifts equals I0, drift recovery from the currents, the initial cost,
and convexity diagnostics.

Discretization contract
-----------------------
All exactness-sensitive spatial derivatives live on bonds (forward
differences), with arithmetic-mean sigma on bonds and midpoint quadrature
over bonds; the non-conservative pieces are nodal with trapezoidal
quadrature.  With this pairing the following hold to machine precision and
are relied on by the tests:
  * J(recovered drifts) = I1 + I2,
  * replacing H by H + F lowers J by exactly 1/2 int sigma |grad F|^2,
  * the pointwise Legendre identity kappa*G - C(e^G-1) - A(e^{-G}-1) = Phi.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InfeasibleError, NumericalError, SingularityError
from .grids import (
    FieldGrid,
    TrajectoryGrid,
    bond_average,
    bond_gradient,
    centered_gradient,
    integrate_bonds_x,
    integrate_t,
    integrate_tx,
    integrate_x,
)
from .hydro_pde import energy as _energy
from .rates import CylinderRate, macroscopic_coefficients


# ---------------------------------------------------------------------------
# Phi: per-point cost of the non-conservative current


def phi(C, A, kappa):
    """Cost of sustaining creation flux kappa against rates C (birth), A (death).

    For C,A > 0:  C + A - sqrt(kappa^2+4AC) + kappa*log[(sqrt(...)+kappa)/(2C)];
    degenerate C=0 or A=0 branches are the one-sided Poisson costs (+inf for
    flux of the impossible sign); C=A=0 forces kappa=0.  Scalar in, scalar
    out; arrays broadcast.
    """
    C = np.asarray(C, dtype=float)
    A = np.asarray(A, dtype=float)
    kappa = np.asarray(kappa, dtype=float)
    if np.any(C < 0) or np.any(A < 0):
        raise DomainError("C and A must be nonnegative")
    shape = np.broadcast_shapes(C.shape, A.shape, kappa.shape)
    C, A, kappa = (
        np.ascontiguousarray(np.broadcast_to(a, shape)).reshape(-1)
        for a in (C, A, kappa)
    )
    out = np.zeros(C.shape, dtype=float)

    both = (C > 0) & (A > 0)
    r = np.sqrt(kappa**2 + 4.0 * A * C)
    # log((r+kappa)/(2C)) is rewritten as log(2A/(r-kappa)) for kappa<0 to
    # avoid cancellation when 4AC << kappa^2
    m = both & (kappa >= 0)
    out[m] = C[m] + A[m] - r[m] + kappa[m] * np.log((r[m] + kappa[m]) / (2.0 * C[m]))
    m = both & (kappa < 0)
    out[m] = C[m] + A[m] - r[m] + kappa[m] * np.log(2.0 * A[m] / (r[m] - kappa[m]))

    c0 = (C == 0) & (A > 0)
    out[c0 & (kappa > 0)] = np.inf
    out[c0 & (kappa == 0)] = A[c0 & (kappa == 0)]
    m = c0 & (kappa < 0)
    out[m] = A[m] + kappa[m] - kappa[m] * np.log(-kappa[m] / A[m])

    a0 = (A == 0) & (C > 0)
    out[a0 & (kappa < 0)] = np.inf
    out[a0 & (kappa == 0)] = C[a0 & (kappa == 0)]
    m = a0 & (kappa > 0)
    out[m] = C[m] - kappa[m] + kappa[m] * np.log(kappa[m] / C[m])

    zz = (C == 0) & (A == 0)
    out[zz] = np.where(kappa[zz] == 0, 0.0, np.inf)

    out = np.maximum(out, 0.0)  # clip -1e-16 roundoff at the minimum
    if shape == ():
        return float(out[0])
    return out.reshape(shape)


def phi_legendre_oracle(C: float, A: float, kappa, bracket=(-60.0, 60.0)) -> float:
    """sup_lambda { kappa*lambda - C(e^lambda - 1) - A(e^-lambda - 1) } by
    golden-section search; independent cross-check of `phi` for C, A > 0.

    kappa may be an array (the search is vectorized elementwise).
    """
    C = np.asarray(C, dtype=float)
    A = np.asarray(A, dtype=float)
    kappa = np.asarray(kappa, dtype=float)
    if np.any(C <= 0) or np.any(A <= 0):
        raise DomainError("the Legendre oracle needs C, A > 0")
    shape = np.broadcast_shapes(C.shape, A.shape, kappa.shape)
    C, A, kappa = (np.broadcast_to(a, shape) for a in (C, A, kappa))

    def f(lam):
        return kappa * lam - C * np.expm1(lam) - A * np.expm1(-lam)

    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a = np.full(C.shape, float(bracket[0]))
    b = np.full(C.shape, float(bracket[1]))
    for _ in range(120):
        c = b - invphi * (b - a)
        d = a + invphi * (b - a)
        keep_left = f(c) > f(d)
        b = np.where(keep_left, d, b)
        a = np.where(keep_left, a, c)
        if np.max(b - a) < 1e-11:
            break
    else:
        raise NumericalError("golden-section search did not converge")
    val = np.asarray(f(0.5 * (a + b)))
    if shape == ():
        return float(val.reshape(-1)[0])
    return val.reshape(shape)


# ---------------------------------------------------------------------------
# bond-staggered building blocks


def canonical_bond_current(traj: TrajectoryGrid) -> np.ndarray:
    """qtilde on bonds: bond-averaged Qdot plus half the bond density gradient."""
    return bond_average(traj.qdot) + 0.5 * bond_gradient(traj.rho, traj.grid.dx)


def bond_conductivity(traj: TrajectoryGrid, rate: CylinderRate) -> np.ndarray:
    sig = macroscopic_coefficients(rate).sigma(traj.rho)
    return bond_average(sig)


def drift_energy(traj: TrajectoryGrid, F: FieldGrid, rate: CylinderRate) -> float:
    """1/2 int int sigma(rho) |grad F|^2 in the bond pairing."""
    bf = bond_gradient(F.values, traj.grid.dx)
    sig_b = bond_conductivity(traj, rate)
    return 0.5 * float(
        integrate_t(integrate_bonds_x(sig_b * bf**2, traj.grid.dx), traj.grid.dt)
    )


def nodal_from_bond_average(d: np.ndarray) -> np.ndarray:
    """Nodal field whose node-to-bond arithmetic average reproduces d exactly.

    Solves (v[i] + v[i+1])/2 = d[i] by forward recursion seeded with
    v[0] = d[0]; the leftover alternating component is harmless to every
    consumer, which reads v only through bond averages or weak pairings.
    """
    nb = d.shape[-1]
    v = np.empty(d.shape[:-1] + (nb + 1,))
    v[..., 0] = d[..., 0]
    for i in range(nb):
        v[..., i + 1] = 2.0 * d[..., i] - v[..., i]
    return v


# ---------------------------------------------------------------------------
# drift recovery and the explicit functional


def recover_drifts(traj: TrajectoryGrid, rate: CylinderRate):
    """Reconstruct the unique drifts (G, H) whose tilted hydrodynamics carries
    the given currents; H is normalized by H(t,-1)=0.

    e^G solves C e^G - A e^{-G} = Kdot pointwise (positive root); the bond
    gradient of H is (Qdot + 1/2 grad rho)/sigma and H is summed up from the
    left end, so that grad H reproduces the drift exactly on the grid.
    """
    grid = traj.grid
    rho = traj.rho
    if rho.min() <= 0.0 or rho.max() >= 1.0:
        raise SingularityError("density touches {0,1}; drifts are not recoverable")
    coeffs = macroscopic_coefficients(rate)
    Cv = coeffs.C(rho)
    Av = coeffs.A(rho)
    kap = traj.kdot

    G = np.zeros_like(rho)
    r = np.sqrt(kap**2 + 4.0 * Av * Cv)
    both = (Cv > 0) & (Av > 0)
    m = both & (kap >= 0)
    G[m] = np.log((r[m] + kap[m]) / (2.0 * Cv[m]))
    m = both & (kap < 0)
    G[m] = np.log(2.0 * Av[m] / (r[m] - kap[m]))

    c0 = (Cv == 0) & (Av > 0)
    if np.any(c0 & (kap > 0)):
        raise InfeasibleError("positive creation flux with zero creation rate")
    m = c0 & (kap < 0)
    G[m] = np.log(Av[m] / (-kap[m]))
    a0 = (Av == 0) & (Cv > 0)
    if np.any(a0 & (kap < 0)):
        raise InfeasibleError("negative creation flux with zero annihilation rate")
    m = a0 & (kap > 0)
    G[m] = np.log(kap[m] / Cv[m])
    if np.any((Cv == 0) & (Av == 0) & (kap != 0)):
        raise InfeasibleError("nonzero creation flux with no reaction channel")

    sig_b = bond_conductivity(traj, rate)
    qt = canonical_bond_current(traj)
    if np.any((sig_b == 0) & (qt != 0)):
        raise SingularityError("conservative current through a zero-conductivity bond")
    with np.errstate(divide="ignore", invalid="ignore"):
        gH = np.where(sig_b > 0, qt / np.where(sig_b > 0, sig_b, 1.0), 0.0)
    H = np.zeros_like(rho)
    np.cumsum(grid.dx * gH, axis=-1, out=H[:, 1:])
    return FieldGrid(grid, G), FieldGrid(grid, H)


@dataclass
class RateBreakdown:
    I0: float
    I1: float
    I2: float
    h_gamma: float
    total: float
    energy: float
    conservation_residual: float
    feasible: bool

    def as_dict(self) -> dict:
        return {
            "i0": self.I0,
            "i1": self.I1,
            "i2": self.I2,
            "h_gamma": self.h_gamma,
            "total": self.total,
            "energy": self.energy,
            "conservation_residual": self.conservation_residual,
            "feasible": self.feasible,
        }


def evaluate_I0_explicit(
    traj: TrajectoryGrid, rate: CylinderRate, gamma=None
) -> RateBreakdown:
    """Explicit dynamical cost I0 = I1 + I2 of a (rho, Q, K) trajectory.

    I1 = 1/2 int int (Qdot + 1/2 grad rho)^2 / sigma(rho)   (bond pairing)
    I2 = int int Phi(C(rho), A(rho), Kdot)                  (nodal pairing)

    A trajectory whose conservation residual exceeds 10*(dx^2+dt) is marked
    infeasible and gets total = +inf.  gamma, if given, adds the initial cost
    of rho(0, .) relative to it.
    """
    grid = traj.grid
    dx, dt = grid.dx, grid.dt
    coeffs = macroscopic_coefficients(rate)

    qt = canonical_bond_current(traj)
    sig_b = bond_conductivity(traj, rate)
    integrand = np.zeros_like(qt)
    pos = sig_b > 0
    integrand[pos] = qt[pos] ** 2 / (2.0 * sig_b[pos])
    if np.any(~pos & (qt != 0)):
        I1 = np.inf
    else:
        I1 = float(integrate_t(integrate_bonds_x(integrand, dx), dt))

    phivals = phi(coeffs.C(traj.rho), coeffs.A(traj.rho), traj.kdot)
    I2 = float(integrate_tx(phivals, dt, dx)) if np.all(np.isfinite(phivals)) else np.inf

    resid = conservation_residual(traj)
    feasible = resid <= 10.0 * (dx**2 + dt) and np.isfinite(I1) and np.isfinite(I2)
    I0 = I1 + I2
    hg = 0.0
    if gamma is not None:
        hg = initial_cost(traj.rho[0], gamma, x=grid.x)
    total = I0 + hg if feasible else np.inf
    return RateBreakdown(
        I0=I0,
        I1=I1,
        I2=I2,
        h_gamma=hg,
        total=total,
        energy=_energy(traj),
        conservation_residual=resid,
        feasible=bool(feasible),
    )


def _field_values(grid, f):
    if f is None:
        return np.zeros((grid.nt + 1, grid.nx + 1))
    if isinstance(f, FieldGrid):
        return f.values
    return grid.sample(f).values


def evaluate_J_GH(traj: TrajectoryGrid, G, H, rate: CylinderRate) -> float:
    """Variational functional J_{G,H}(rho,Q,K), in the integrated-by-parts form

      int int [ (Qdot + 1/2 grad rho) grad H - 1/2 sigma (grad H)^2 ]
      + int int [ Kdot G - C(e^G - 1) - A(e^{-G} - 1) ],

    with the bond pairing for the H part and nodal quadrature for the G part.
    Its supremum over (G,H) is I0, attained at the recovered drifts; see
    `evaluate_J_GH_raw` for the pre-integration-by-parts evaluation.
    """
    grid = traj.grid
    dx, dt = grid.dx, grid.dt
    gv = _field_values(grid, G)
    hv = _field_values(grid, H)

    bH = bond_gradient(hv, dx)
    sig_b = bond_conductivity(traj, rate)
    qt = canonical_bond_current(traj)
    j1 = float(integrate_t(integrate_bonds_x(qt * bH - 0.5 * sig_b * bH**2, dx), dt))

    coeffs = macroscopic_coefficients(rate)
    Cv = coeffs.C(traj.rho)
    Av = coeffs.A(traj.rho)
    j2_int = traj.kdot * gv - Cv * np.expm1(gv) - Av * np.expm1(-gv)
    j2 = float(integrate_tx(j2_int, dt, dx))
    return j1 + j2


def evaluate_J_GH_raw(traj: TrajectoryGrid, G, H, rate: CylinderRate) -> float:
    """J_{G,H} evaluated from the raw displays, with the time-boundary terms
    <Q_T grad H_T>, <K_T G_T>, the time-derivative terms, the density term
    -1/2 <rho Lap H> and the spatial boundary terms 1/2 rhobar_pm int grad H.

    Agrees with `evaluate_J_GH` up to O(dx^2 + dt) discretization error.
    """
    grid = traj.grid
    dx, dt = grid.dx, grid.dt
    gv = _field_values(grid, G)
    hv = _field_values(grid, H)
    coeffs = macroscopic_coefficients(rate)

    gradH = centered_gradient(hv, dx)
    lapH = np.empty_like(hv)
    lapH[:, 1:-1] = (hv[:, 2:] - 2 * hv[:, 1:-1] + hv[:, :-2]) / dx**2
    lapH[:, 0] = lapH[:, 1]
    lapH[:, -1] = lapH[:, -2]
    dt_gradH = centered_gradient(gradH, dt, axis=0)
    sig = coeffs.sigma(traj.rho)

    j1 = float(integrate_x(traj.Q[-1] * gradH[-1], dx))
    j1 -= float(integrate_t(integrate_x(traj.Q * dt_gradH, dx), dt))
    j1 -= 0.5 * float(integrate_t(integrate_x(traj.rho * lapH, dx), dt))
    j1 -= 0.5 * float(integrate_t(integrate_x(sig * gradH**2, dx), dt))
    j1 += 0.5 * traj.rho_plus * float(integrate_t(gradH[:, -1], dt))
    j1 -= 0.5 * traj.rho_minus * float(integrate_t(gradH[:, 0], dt))

    dtG = centered_gradient(gv, dt, axis=0)
    Cv = coeffs.C(traj.rho)
    Av = coeffs.A(traj.rho)
    j2 = float(integrate_x(traj.K[-1] * gv[-1], dx))
    j2 -= float(integrate_t(integrate_x(traj.K * dtG, dx), dt))
    j2 -= float(integrate_t(integrate_x(Cv * np.expm1(gv) + Av * np.expm1(-gv), dx), dt))
    return j1 + j2


def initial_cost(m, gamma, x=None) -> float:
    """Relative entropy rate of a Bernoulli profile m against the reference
    gamma: int m log(m/gamma) + (1-m) log((1-m)/(1-gamma)) dx, with 0 log 0 = 0.
    Profiles may be callables of x or arrays on the nodes x."""
    if x is None:
        x = np.linspace(-1.0, 1.0, 513)
    mv = np.asarray([float(m(xi)) for xi in x]) if callable(m) else np.asarray(m, dtype=float)
    gv = (
        np.asarray([float(gamma(xi)) for xi in x])
        if callable(gamma)
        else np.asarray(gamma, dtype=float)
    )
    if np.any(gv <= 0) or np.any(gv >= 1):
        raise DomainError("reference profile must stay inside (0,1)")
    if np.any(mv < 0) or np.any(mv > 1):
        raise DomainError("profile must take values in [0,1]")
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = np.where(mv > 0, mv * np.log(np.where(mv > 0, mv, 1.0) / gv), 0.0)
        t2 = np.where(
            mv < 1, (1 - mv) * np.log(np.where(mv < 1, 1 - mv, 1.0) / (1 - gv)), 0.0
        )
    return float(np.trapezoid(t1 + t2, x))


def default_test_basis(grid, n_modes: int = 5):
    """Time-independent sine fields vanishing at x = +-1."""
    out = []
    for k in range(1, n_modes + 1):
        vals = np.tile(np.sin(k * np.pi * (grid.x + 1) / 2), (grid.nt + 1, 1))
        out.append(FieldGrid(grid, vals))
    return out


def conservation_residual(traj: TrajectoryGrid, phi_basis=None) -> float:
    """max over test functions and times of
    |<rho_t phi> - <rho_0 phi> - <Q_t grad phi> - <K_t phi>|.

    Q is paired against the bond gradient of phi so that divergence-form
    current perturbations cancel exactly in this check.
    """
    grid = traj.grid
    if phi_basis is None:
        phi_basis = default_test_basis(grid)
    worst = 0.0
    for phi_f in phi_basis:
        pv = phi_f.values[0]
        if abs(pv[0]) > 1e-12 or abs(pv[-1]) > 1e-12:
            raise DomainError("test functions must vanish at x = +-1")
        bphi = (pv[1:] - pv[:-1]) / grid.dx
        lhs = integrate_x((traj.rho - traj.rho[0]) * pv, grid.dx)
        qterm = integrate_bonds_x(bond_average(traj.Q) * bphi, grid.dx)
        kterm = integrate_x(traj.K * pv, grid.dx)
        worst = max(worst, float(np.max(np.abs(lhs - qterm - kterm))))
    return worst


@dataclass
class ConvexityReport:
    lhs: float
    rhs: float
    satisfied: bool


def tilde_I0(traj: TrajectoryGrid, rate: CylinderRate) -> float:
    """The convexified cost I0 - int int (C(rho) + A(rho))."""
    bd = evaluate_I0_explicit(traj, rate)
    coeffs = macroscopic_coefficients(rate)
    shift = integrate_tx(
        coeffs.C(traj.rho) + coeffs.A(traj.rho), traj.grid.dt, traj.grid.dx
    )
    return bd.I0 - float(shift)


def convex_decomposition_check(
    trajA: TrajectoryGrid, trajB: TrajectoryGrid, rate: CylinderRate
) -> ConvexityReport:
    """Midpoint convexity of tilde I0 along the segment between two feasible
    trajectories (valid whenever C and A are concave)."""
    trajA.same_grid(trajB)
    for tr in (trajA, trajB):
        if not evaluate_I0_explicit(tr, rate).feasible:
            raise InfeasibleError("convexity check needs feasible trajectories")
    mid = TrajectoryGrid(
        grid=trajA.grid,
        rho=0.5 * (trajA.rho + trajB.rho),
        qdot=0.5 * (trajA.qdot + trajB.qdot),
        kdot=0.5 * (trajA.kdot + trajB.kdot),
        rho_minus=trajA.rho_minus,
        rho_plus=trajA.rho_plus,
    )
    lhs = tilde_I0(mid, rate)
    rhs = 0.5 * (tilde_I0(trajA, rate) + tilde_I0(trajB, rate))
    return ConvexityReport(lhs=lhs, rhs=rhs, satisfied=bool(lhs <= rhs + 1e-8))
