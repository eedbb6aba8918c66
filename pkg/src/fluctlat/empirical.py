"""Empirical measures of the microscopic process and their pairings with
test functions, plus the block-averaged local equilibrium statistic.

Conventions (state on sites -N..N, array index = x + N):
  density   <rho^N, phi>   = (1/N)   sum_{x=-N}^{N-1} eta(x) phi(x/N)
  current   <Q^N, phi>     = (1/N^2) sum_{x=-N}^{N-1} Q(x) phi(x/N)
  current   <Q^N, grad phi>= (1/N)   sum_{x=-N}^{N-1} Q(x) [phi((x+1)/N)-phi(x/N)]
  creation  <K^N, phi>     = (1/N)   sum_{x=-N}^{N} K(x) phi(x/N)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError
from .rates import mean_cylinder
from .simulator import LatticeState


def _test_values(fn, xs):
    return np.asarray([float(fn(x)) for x in xs])


def pair_site_measure(state: LatticeState, phi, which: str = "density") -> float:
    """<rho^N, phi> or <K^N, phi> (1/N-normalized sums over sites)."""
    N = state.N
    if which == "density":
        xs = np.arange(-N, N) / N
        vals = state.occupancy[:-1].astype(float)
    elif which == "K":
        xs = np.arange(-N, N + 1) / N
        vals = state.K.astype(float)
    else:
        raise ValidationError(f"unknown site measure {which!r}")
    return float(np.dot(vals, _test_values(phi, xs)) / N)


def pair_Q_measure(state: LatticeState, phi) -> float:
    """<Q^N, phi> with the 1/N^2 current normalization."""
    N = state.N
    xs = np.arange(-N, N) / N
    return float(np.dot(state.Q.astype(float), _test_values(phi, xs)) / N**2)


def pair_Q_gradient(state: LatticeState, phi) -> float:
    """<Q^N, discrete-gradient of phi>: (1/N) sum Q(x) [phi((x+1)/N) - phi(x/N)]."""
    N = state.N
    xs = np.arange(-N, N + 1) / N
    pv = _test_values(phi, xs)
    return float(np.dot(state.Q.astype(float), np.diff(pv)) / N)


def local_average(state: LatticeState, ell: int) -> np.ndarray:
    """Window density averages eta^ell(x) over boxes of half-width ell.

    The box is clipped at the lattice ends, so every entry is a mean of the
    occupancies actually present in {x-ell, ..., x+ell} intersected with
    {-N, ..., N}.
    """
    N = state.N
    if ell < 0:
        raise ValidationError("window half-width must be nonnegative")
    occ = state.occupancy.astype(float)
    csum = np.concatenate(([0.0], np.cumsum(occ)))
    idx = np.arange(2 * N + 1)
    lo = np.maximum(idx - ell, 0)
    hi = np.minimum(idx + ell, 2 * N)
    return (csum[hi + 1] - csum[lo]) / (hi - lo + 1)


@dataclass(frozen=True)
class CylinderObservable:
    """A local function psi of the occupancies on {-R, ..., R}, given as a
    lookup table over the 2^(2R+1) windows (eta(-R) is the most significant
    bit), together with its Bernoulli(alpha) means."""

    range: int
    table: np.ndarray

    def __post_init__(self):
        R = self.range
        if R < 0 or R > 3:
            raise ValidationError("observable range must be in 0..3")
        table = np.ascontiguousarray(np.asarray(self.table, dtype=np.float64))
        if table.shape != (1 << (2 * R + 1),):
            raise ValidationError(
                f"table must have 2^(2R+1)={1 << (2 * R + 1)} entries for R={R}"
            )
        object.__setattr__(self, "table", table)

    def bernoulli_mean(self, alpha) -> np.ndarray:
        """nu_alpha(psi) for scalar or array alpha in [0,1]."""
        return mean_cylinder(self.table, self.range, alpha)

    def site_values(self, occ: np.ndarray) -> np.ndarray:
        """psi(tau_x eta) for all x with the window inside the lattice."""
        R = self.range
        n = occ.shape[0]
        w = np.zeros(n - 2 * R, dtype=np.int64)
        for k in range(2 * R + 1):
            w = (w << 1) | occ[k : n - 2 * R + k].astype(np.int64)
        return self.table[w]


def local_equilibrium_statistic(
    snapshots,
    psi: CylinderObservable,
    phi,
    epsilon: float,
    T: float,
    margin: float = 0.0,
) -> float:
    """Time-averaged block-replacement error for the observable psi.

    For each snapshot eta_s computes
        (1/(2(N-R'))) sum_x phi(s, x/N) [psi(tau_x eta_s) - nu_{etabar(x)}(psi)]
    where etabar is the clipped window average over epsilon*N sites and the
    sum runs over x with |x| <= N - R', R' = max(R, ceil(margin*N)); the
    results are then trapezoid-averaged over the snapshot times divided by T.
    """
    if not snapshots:
        raise ValidationError("need at least one snapshot")
    if epsilon <= 0:
        raise DomainError("epsilon must be positive")
    N = snapshots[0].N
    ell = max(1, int(round(epsilon * N)))
    R = max(psi.range, int(np.ceil(margin * N)))
    if R >= N:
        raise DomainError("margin leaves no sites")
    xs = np.arange(-(N - R), N - R + 1) / N

    try:
        phi(0.0, 0.0)
        phi_st = phi
    except TypeError:
        phi_st = lambda s, x: phi(x)

    times = np.array([s.t for s in snapshots])
    vals = np.empty(times.size)
    for i, state in enumerate(snapshots):
        occ = state.occupancy
        site_psi = psi.site_values(occ)  # x = -(N-Rpsi) .. N-Rpsi
        off = R - psi.range
        site_psi = site_psi[off : site_psi.size - off] if off else site_psi
        avg = local_average(state, ell)[N - (N - R) : N + (N - R) + 1]
        repl = psi.bernoulli_mean(avg)
        pv = np.asarray([float(phi_st(state.t, x)) for x in xs])
        vals[i] = np.dot(pv, site_psi - repl) / (2 * (N - R))
    if times.size == 1:
        return float(vals[0])
    return float(np.trapezoid(vals, times) / T)


def conservation_residual_micro(state: LatticeState) -> np.ndarray:
    """Sitewise defect of the exact conservation law; all-zero for any state
    produced by the simulator.

    Interior: eta_t(x) - eta_0(x) - [Q(x-1) - Q(x) + K(x)].
    Ends:     x=-N uses -Q(-N) + R^-, x=+N uses Q(N-1) + R^+.
    """
    N = state.N
    d = state.occupancy.astype(np.int64) - state.initial_occupancy.astype(np.int64)
    flux = np.empty(2 * N + 1, dtype=np.int64)
    flux[0] = -state.Q[0] + state.R_minus
    flux[1:-1] = state.Q[:-1] - state.Q[1:]
    flux[-1] = state.Q[-1] + state.R_plus
    return d - (flux + state.K)
