"""Space-time grids on [0,T] x [-1,1] and the trajectory/field containers.

All stored fields live on the nodes of a uniform (nt+1) x (nx+1) grid.
Spatial gradients are represented on bonds (midpoints between nodes) where
exact discrete summation by parts matters; nodal centered differences are
provided for everything else.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConsistencyError, ValidationError


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid: nx space intervals on [-1,1], nt time intervals on [0,T]."""

    nx: int
    nt: int
    T: float

    def __post_init__(self):
        if self.nx < 2 or self.nt < 1 or self.T <= 0:
            raise ValidationError(f"bad grid spec nx={self.nx} nt={self.nt} T={self.T}")

    @property
    def dx(self) -> float:
        return 2.0 / self.nx

    @property
    def dt(self) -> float:
        return self.T / self.nt

    @property
    def x(self) -> np.ndarray:
        return np.linspace(-1.0, 1.0, self.nx + 1)

    @property
    def t(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.nt + 1)

    def sample(self, fn) -> "FieldGrid":
        """Sample a callable f(t, x) (or f(x)) on the grid nodes."""
        tt, xx = np.meshgrid(self.t, self.x, indexing="ij")
        try:
            vals = np.broadcast_to(fn(tt, xx), tt.shape).astype(float)
        except TypeError:
            vals = np.broadcast_to(fn(xx), tt.shape).astype(float)
        return FieldGrid(self, np.array(vals))

    def zero_field(self) -> "FieldGrid":
        return FieldGrid(self, np.zeros((self.nt + 1, self.nx + 1)))


@dataclass
class FieldGrid:
    """A scalar space-time field (drifts, test functions) on grid nodes."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = (self.grid.nt + 1, self.grid.nx + 1)
        if self.values.shape != expected:
            raise ValidationError(
                f"field shape {self.values.shape} != grid shape {expected}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValidationError("field contains non-finite values")


@dataclass
class TrajectoryGrid:
    """Density + instantaneous and integrated currents on one grid.

    rho, qdot, kdot are nodal (nt+1, nx+1) arrays; Q, K are their trapezoidal
    time integrals with Q[0] = K[0] = 0.
    """

    grid: GridSpec
    rho: np.ndarray
    qdot: np.ndarray
    kdot: np.ndarray
    rho_minus: float
    rho_plus: float
    Q: np.ndarray = field(default=None)
    K: np.ndarray = field(default=None)

    def __post_init__(self):
        shape = (self.grid.nt + 1, self.grid.nx + 1)
        for name in ("rho", "qdot", "kdot"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != shape:
                raise ValidationError(f"{name} shape {arr.shape} != {shape}")
            setattr(self, name, arr)
        if np.any(self.rho < -1e-12) or np.any(self.rho > 1 + 1e-12):
            raise ValidationError("density outside [0,1]")
        if self.Q is None:
            self.Q = cumulative_time_integral(self.qdot, self.grid.dt)
        if self.K is None:
            self.K = cumulative_time_integral(self.kdot, self.grid.dt)

    def same_grid(self, other: "TrajectoryGrid") -> None:
        if (
            self.grid != other.grid
            or self.rho_minus != other.rho_minus
            or self.rho_plus != other.rho_plus
        ):
            raise ConsistencyError("trajectory grids/boundaries do not match")


# ---------------------------------------------------------------------------
# discrete operators


def bond_gradient(values: np.ndarray, dx: float) -> np.ndarray:
    """Forward difference living on bonds: out[..., j] = (v[j+1]-v[j])/dx."""
    return np.diff(values, axis=-1) / dx


def bond_average(values: np.ndarray) -> np.ndarray:
    """Arithmetic node-to-bond average."""
    return 0.5 * (values[..., 1:] + values[..., :-1])


def node_divergence(bond_values: np.ndarray, dx: float) -> np.ndarray:
    """Divergence of a bond field back onto nodes.

    Interior nodes get the exact mimetic (f[j+1/2]-f[j-1/2])/dx; the two end
    nodes copy the one-sided bond value difference (first order there, which
    only enters integrals through O(dx) boundary weights).
    """
    out = np.empty(bond_values.shape[:-1] + (bond_values.shape[-1] + 1,))
    out[..., 1:-1] = np.diff(bond_values, axis=-1) / dx
    out[..., 0] = out[..., 1]
    out[..., -1] = out[..., -2]
    return out


def centered_gradient(values: np.ndarray, h: float, axis: int = -1) -> np.ndarray:
    """Second-order gradient: centered inside, one-sided 3-point at the ends."""
    return np.gradient(values, h, axis=axis, edge_order=2)


def integrate_x(values: np.ndarray, dx: float) -> np.ndarray:
    """Trapezoidal integral over [-1,1] along the last axis."""
    return np.trapezoid(values, dx=dx, axis=-1)


def integrate_t(values: np.ndarray, dt: float) -> np.ndarray:
    """Trapezoidal integral over [0,T] along the first axis."""
    return np.trapezoid(values, dx=dt, axis=0)


def integrate_tx(values: np.ndarray, dt: float, dx: float) -> float:
    return float(integrate_t(integrate_x(values, dx), dt))


def cumulative_time_integral(values: np.ndarray, dt: float) -> np.ndarray:
    """Cumulative trapezoid along axis 0, starting at 0."""
    out = np.zeros_like(values)
    np.cumsum(0.5 * dt * (values[1:] + values[:-1]), axis=0, out=out[1:])
    return out


def integrate_bonds_x(bond_values: np.ndarray, dx: float) -> np.ndarray:
    """Integral over [-1,1] of a bond field (midpoint rule, exact pairing
    partner of `bond_gradient` under summation by parts)."""
    return dx * np.sum(bond_values, axis=-1)
