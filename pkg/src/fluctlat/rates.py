"""Cylinder creation/annihilation rates and their macroscopic coefficients.

A rate of range M is a nonnegative table over the 2^(2M+1) local occupancy
windows (eta(-M), ..., eta(M)), indexed as a binary number with eta(-M) the
most significant bit.  Averaging the table against a Bernoulli(alpha) product
measure yields the creation/annihilation coefficients C(alpha), A(alpha).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, ValidationError

BUILTIN_RATES = ("constant", "neighbor-sum", "zero")


@dataclass(frozen=True)
class CylinderRate:
    """Creation/annihilation rate c(eta(-M),...,eta(M)) of range M."""

    range: int
    table: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "table", np.asarray(self.table, dtype=float))
        if self.range < 0:
            raise ValidationError(f"negative range {self.range}")
        expected = 2 ** (2 * self.range + 1)
        if self.table.shape != (expected,):
            raise ValidationError(
                f"rate table length {self.table.shape} != {expected} for M={self.range}"
            )
        if np.any(self.table < 0):
            bad = int(np.argmax(self.table < 0))
            raise ValidationError(f"negative rate table entry at window {bad}")

    @property
    def window(self) -> int:
        return 2 * self.range + 1

    def evaluate(self, bits: np.ndarray) -> float:
        """Rate for an explicit window (eta(-M),...,eta(M))."""
        idx = 0
        for b in bits:
            idx = (idx << 1) | int(b)
        return float(self.table[idx])


@dataclass(frozen=True)
class MacroscopicCoefficients:
    """Vectorized C(alpha), A(alpha), sigma(alpha) for one cylinder rate."""

    C: Callable[[np.ndarray], np.ndarray]
    A: Callable[[np.ndarray], np.ndarray]
    sigma: Callable[[np.ndarray], np.ndarray]


def build_cylinder_rate(name_or_table, M: int | None = None) -> CylinderRate:
    """Build a validated rate from a builtin name or a raw table."""
    if isinstance(name_or_table, str):
        name = name_or_table
        if name == "constant":
            return CylinderRate(0, np.array([1.0, 1.0]), "constant")
        if name == "zero":
            m = 0 if M is None else M
            return CylinderRate(m, np.zeros(2 ** (2 * m + 1)), "zero")
        if name == "neighbor-sum":
            # c(eta) = eta(-1) + eta(1); window index = 4*eta(-1)+2*eta(0)+eta(1)
            table = np.array([(w >> 2) + (w & 1) for w in range(8)], dtype=float)
            return CylinderRate(1, table, "neighbor-sum")
        raise ValidationError(f"unknown builtin rate {name!r}")
    table = np.asarray(name_or_table, dtype=float)
    if M is None:
        n = table.size
        M = int(round((np.log2(n) - 1) / 2)) if n > 0 else 0
    return CylinderRate(M, table, "custom")


def _window_bits(M: int) -> np.ndarray:
    """(2^(2M+1), 2M+1) matrix of window occupancies; column k is site -M+k."""
    L = 2 * M + 1
    w = np.arange(2**L)[:, None]
    shifts = np.arange(L - 1, -1, -1)[None, :]
    return (w >> shifts) & 1


def bernoulli_window_weights(M: int, alpha) -> np.ndarray:
    """Bernoulli(alpha) product weights over the 2^(2M+1) windows.

    alpha may be a scalar or an array; the window axis is appended last.
    """
    alpha = np.asarray(alpha, dtype=float)
    bits = _window_bits(M)  # (nw, L)
    pop = bits.sum(axis=1)  # (nw,)
    L = 2 * M + 1
    a = alpha[..., None]
    with np.errstate(invalid="ignore"):
        w = a**pop * (1.0 - a) ** (L - pop)
    return w


def mean_cylinder(table: np.ndarray, M: int, alpha) -> np.ndarray:
    """nu_alpha(psi) for a cylinder observable given by a window table."""
    table = np.asarray(table, dtype=float)
    if table.shape != (2 ** (2 * M + 1),):
        raise ValidationError("observable table length does not match range")
    w = bernoulli_window_weights(M, alpha)
    return w @ table


def macroscopic_rates(rate: CylinderRate, alpha) -> tuple[np.ndarray, np.ndarray]:
    """Exact Bernoulli(alpha) averages (C, A) of the creation/annihilation parts."""
    alpha_arr = np.asarray(alpha, dtype=float)
    if np.any(alpha_arr < 0) or np.any(alpha_arr > 1):
        raise DomainError(f"alpha outside [0,1]")
    bits = _window_bits(rate.range)
    eta0 = bits[:, rate.range]
    w = bernoulli_window_weights(rate.range, alpha_arr)
    C = w @ (rate.table * (1 - eta0))
    A = w @ (rate.table * eta0)
    if np.ndim(alpha) == 0:
        return float(C), float(A)
    return C, A


def macroscopic_coefficients(rate: CylinderRate) -> MacroscopicCoefficients:
    bits = _window_bits(rate.range)
    eta0 = bits[:, rate.range]
    c_tab = rate.table * (1 - eta0)
    a_tab = rate.table * eta0
    M = rate.range

    def C(alpha):
        return bernoulli_window_weights(M, np.asarray(alpha, dtype=float)) @ c_tab

    def A(alpha):
        return bernoulli_window_weights(M, np.asarray(alpha, dtype=float)) @ a_tab

    return MacroscopicCoefficients(C=C, A=A, sigma=conductivity)


def conductivity(alpha):
    """SSEP mobility alpha * (1 - alpha)."""
    alpha_arr = np.asarray(alpha, dtype=float)
    if np.any(alpha_arr < -1e-15) or np.any(alpha_arr > 1 + 1e-15):
        raise DomainError("alpha outside [0,1]")
    out = alpha_arr * (1.0 - alpha_arr)
    return float(out) if np.ndim(alpha) == 0 else out


def boundary_density(beta: float) -> float:
    """Reservoir density beta / (1 + beta)."""
    if beta < 0:
        raise DomainError(f"reservoir intensity {beta} < 0")
    return beta / (1.0 + beta)


@dataclass(frozen=True)
class AssumptionReport:
    L1_ok: bool
    L2_ok: bool
    witnesses: dict


def check_assumptions(
    rate: CylinderRate, grid_points: int = 257, tol: float = 1e-12
) -> AssumptionReport:
    """Numerically check the concavity (L1) and monotonicity (L2) hypotheses.

    C and A are polynomials of degree <= 2M+1, so a dense grid of second/first
    differences decides both properties up to `tol`.
    """
    if grid_points < 3:
        raise DomainError("need at least 3 grid points")
    alpha = np.linspace(0.0, 1.0, grid_points)
    C, A = macroscopic_rates(rate, alpha)
    witnesses = {}

    def concave_positive(vals, key):
        if np.all(np.abs(vals) <= tol):
            return True  # uniformly-zero branch
        d2 = vals[2:] - 2 * vals[1:-1] + vals[:-2]
        bad = np.nonzero(d2 > tol)[0]
        if bad.size:
            witnesses[key] = float(alpha[bad[0] + 1])
            return False
        interior = vals[1:-1]
        neg = np.nonzero(interior <= tol)[0]
        if neg.size:
            witnesses[key] = float(alpha[neg[0] + 1])
            return False
        return True

    def monotone(vals, sign, key):
        d1 = np.diff(vals) * sign
        bad = np.nonzero(d1 < -tol)[0]
        if bad.size:
            witnesses[key] = float(alpha[bad[0]])
            return False
        return True

    l1 = concave_positive(C, "L1_C") and concave_positive(A, "L1_A")
    l2 = monotone(A, +1.0, "L2_A") and monotone(C, -1.0, "L2_C")
    return AssumptionReport(L1_ok=l1, L2_ok=l2, witnesses=witnesses)
