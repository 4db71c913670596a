"""Closed-form solutions of triangular linear moment ODE systems.

A coefficient system pairs a nested lower-triangular matrix T with a shift
vector c so that the moment vector s(t) = (E[X_t], ..., E[X_t^n]) obeys
s'(t) = T s(t) + c.  Because T is triangular with the nesting property, the
transient solution

    s(t) = e^{T t} s(0) - T^{-1} (I - e^{T t}) c

is evaluated directly at the target time (no stepping), and the stationary
vector solves 0 = T s + c by forward substitution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import core
from .core import MatryoshkanMatrix
from .errors import InvalidInput, NonStationary, Overflow

__all__ = [
    "STATIONARY",
    "CoefficientSystem",
    "InitialMomentVector",
    "MomentVector",
    "ValidationReport",
    "steady_nth",
    "steady_recursive",
    "steady_vector",
    "transient_scalar",
    "transient_vector",
    "validate",
]

#: Distinguished time value carried by stationary moment vectors.
STATIONARY = "stationary"

_OVERFLOW_LIMIT = 1e300


@dataclass(frozen=True)
class CoefficientSystem:
    """The matrix/shift pair (T, c) of a closed moment ODE system.

    Row k of T may only touch columns 1..k: the derivative of the k-th
    moment depends on moments of order at most k.  Triangularity is enforced
    by the packed storage of the matrix itself.
    """

    theta: MatryoshkanMatrix
    theta0: np.ndarray

    def __post_init__(self):
        shift = np.asarray(self.theta0, dtype=np.float64).reshape(-1).copy()
        if shift.shape[0] != self.theta.order:
            raise InvalidInput(
                f"shift vector length {shift.shape[0]} != order {self.theta.order}"
            )
        shift.setflags(write=False)
        object.__setattr__(self, "theta0", shift)

    @property
    def order(self) -> int:
        return self.theta.order

    def leading(self, k: int) -> "CoefficientSystem":
        return CoefficientSystem(self.theta.leading(k), self.theta0[:k])


@dataclass(frozen=True)
class InitialMomentVector:
    """Initial state x0 together with its powers (x0^1, ..., x0^n)."""

    x0: float
    powers: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.powers, dtype=np.float64).reshape(-1).copy()
        p.setflags(write=False)
        object.__setattr__(self, "powers", p)

    @classmethod
    def from_state(cls, x0: float, order: int) -> "InitialMomentVector":
        if order < 1:
            raise InvalidInput(f"order must be >= 1, got {order}")
        x0 = float(x0)
        return cls(x0, np.power(x0, np.arange(1, order + 1, dtype=np.float64)))

    @property
    def order(self) -> int:
        return self.powers.shape[0]


@dataclass(frozen=True)
class MomentVector:
    """Moments E[X^k], k = 1..n, at one time point or at stationarity."""

    time: float | str
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).reshape(-1).copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def order(self) -> int:
        return self.values.shape[0]


_EPS = float(np.finfo(np.float64).eps)


def _abs_substitution(L: np.ndarray, diag: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Forward substitution on absolute values: a first-order bound on how
    rounding in solve_lower can grow through the triangle."""
    z = np.empty(rhs.shape[0])
    for i in range(rhs.shape[0]):
        z[i] = (rhs[i] + np.dot(np.abs(L[i, :i]), z[:i])) / abs(diag[i])
    return z


def _shift_response(
    theta: MatryoshkanMatrix, E: np.ndarray, shift: np.ndarray, t: float
) -> np.ndarray:
    """The shift response -T^{-1} (I - e^{T t}) c of the transient solution.

    Solved as T w = e^{T t} c - c, which differences at the scale of c.  The
    substitution can still lose the answer when the true response decays
    geometrically down the triangle while the band amplifies absolute error;
    a running error bound detects that, and the response is then rebuilt
    from the series form t phi1(T t) c, whose terms accumulate without
    cancellation.
    """
    u = E @ shift - shift
    w = core.solve_lower(theta, u)
    L = theta.dense()
    grow = np.abs(u) + np.abs(L) @ np.abs(w)
    z = _abs_substitution(L, theta.diagonal(), grow)
    if np.any(_EPS * z > 1e-12 * np.abs(w)):
        w = t * (core._phi1(L * t) @ shift)
    return w


def _check_horizon(t: float) -> float:
    t = float(t)
    if t < 0.0 or not math.isfinite(t):
        raise InvalidInput(f"time must be finite and >= 0, got {t}")
    return t


def _scalar_exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        raise Overflow(f"exp argument {x:.6g} exceeds the scalar range") from None


def transient_vector(
    system: CoefficientSystem, init: InitialMomentVector, t: float
) -> MomentVector:
    """All moments at time t from one matrix exponential evaluation."""
    t = _check_horizon(t)
    if init.order != system.order:
        raise InvalidInput(
            f"initial vector order {init.order} != system order {system.order}"
        )
    if t == 0.0:
        return MomentVector(0.0, init.powers)
    E = core.exp_scaled(system.theta, t).dense()
    w = _shift_response(system.theta, E, system.theta0, t)
    values = E @ init.powers + w
    if not np.all(np.isfinite(values)):
        raise Overflow("transient moments exceeded the double-precision range")
    return MomentVector(t, values)


def transient_scalar(
    system: CoefficientSystem, init: InitialMomentVector, t: float, n: int
) -> float:
    """The n-th moment at time t via the four-term trailing-row formula.

    For n = 1 the two matrix terms are empty blocks, defined as zero, and
    the formula degenerates to the scalar linear-ODE solution.
    """
    t = _check_horizon(t)
    if not 1 <= n <= system.order:
        raise InvalidInput(f"moment order {n} out of range 1..{system.order}")
    d = system.theta.diagonal()
    dn = d[n - 1]
    c_n = system.theta0[n - 1]
    e_nn = _scalar_exp(dn * t)
    if n == 1:
        if dn == 0.0:
            raise core.SingularMatrix(1)
        return init.x0 * e_nn - c_n * (1.0 - e_nn) / dn
    block = system.theta.leading(n - 1)
    row = system.theta.sub_row(n - 1)
    shift_head = system.theta0[: n - 1]
    En = core.exp_scaled(system.theta.leading(n), t).dense()
    E1 = En[: n - 1, : n - 1]

    # resolvent term: row (T_{n-1} - d_n I)^{-1} (e^{T t} - e^{d_n t} I) v.
    # That prefactor is exactly the trailing row of the order-n exponential,
    # already evaluated through its numerically safe path.
    v = init.powers[: n - 1] + shift_head / dn
    resolvent_term = float(np.dot(En[n - 1, : n - 1], v))

    initial_term = init.powers[n - 1] * e_nn
    shift_term = -c_n * (1.0 - e_nn) / dn

    # inverse term: (row / d_n) T_{n-1}^{-1} (I - e^{T t}) c_{n-1}; the inner
    # factor is the negated shift response of the leading block
    w_head = _shift_response(block, np.ascontiguousarray(E1), shift_head, t)
    inverse_term = -float(np.dot(row, w_head)) / dn

    return resolvent_term + initial_term + shift_term + inverse_term


def _require_stable(system: CoefficientSystem) -> None:
    d = system.theta.diagonal()
    bad = np.flatnonzero(d >= 0.0)
    if bad.size:
        k = int(bad[0]) + 1
        detail = "zero" if d[bad[0]] == 0.0 else "nonnegative"
        raise NonStationary(
            f"{detail} diagonal entry at position {k}: no stationary moments"
        )


def steady_vector(system: CoefficientSystem) -> MomentVector:
    """Stationary moments solving 0 = T s + c by forward substitution."""
    _require_stable(system)
    values = core.solve_lower(system.theta, -system.theta0)
    return MomentVector(STATIONARY, values)


def steady_nth(system: CoefficientSystem, n: int) -> float:
    """The n-th stationary moment from the trailing row and the leading block."""
    _require_stable(system)
    if not 1 <= n <= system.order:
        raise InvalidInput(f"moment order {n} out of range 1..{system.order}")
    d = system.theta.diagonal()
    if n == 1:
        return -system.theta0[0] / d[0]
    block = system.theta.leading(n - 1)
    row = system.theta.sub_row(n - 1)
    y = core.solve_lower(block, system.theta0[: n - 1])
    return (float(np.dot(row, y)) - system.theta0[n - 1]) / d[n - 1]


def steady_recursive(system: CoefficientSystem) -> MomentVector:
    """Stationary moments built bottom-up, one order at a time."""
    _require_stable(system)
    d = system.theta.diagonal()
    n = system.order
    values = np.empty(n)
    values[0] = -system.theta0[0] / d[0]
    for k in range(1, n):
        row = system.theta.sub_row(k)
        values[k] = -(float(np.dot(row, values[:k])) + system.theta0[k]) / d[k]
    return MomentVector(STATIONARY, values)


@dataclass(frozen=True)
class ValidationReport:
    """Diagnostics for a coefficient system; never raises."""

    order: int
    triangular: bool
    zero_diagonals: tuple[int, ...]
    positive_diagonals: tuple[int, ...]
    coincident_pairs: tuple[tuple[int, int], ...]
    stationary: bool
    singular: bool
    distinct: bool
    predicted_overflow_order: int | None
    _lines: tuple[str, ...] = field(default=(), repr=False)

    def describe(self) -> str:
        return "\n".join(self._lines)


def validate(system: CoefficientSystem) -> ValidationReport:
    """Report triangularity, diagonal sign/coincidence issues, and the
    smallest order whose stationary magnitude estimate exceeds 1e300."""
    theta = system.theta
    d = theta.diagonal()
    zero = tuple(int(i) + 1 for i in np.flatnonzero(d == 0.0))
    positive = tuple(int(i) + 1 for i in np.flatnonzero(d > 0.0))
    pairs = theta.coincident_pairs()
    singular = bool(zero)
    stationary = not zero and not positive
    overflow_order = None
    if stationary:
        # Guarded bottom-up recursion; the first magnitude past 1e300 wins.
        values = np.zeros(system.order)
        values[0] = -system.theta0[0] / d[0]
        if abs(values[0]) > _OVERFLOW_LIMIT:
            overflow_order = 1
        else:
            for k in range(1, system.order):
                row = theta.sub_row(k)
                with np.errstate(over="ignore", invalid="ignore"):
                    est = -(float(np.dot(row, values[:k])) + system.theta0[k]) / d[k]
                if not math.isfinite(est) or abs(est) > _OVERFLOW_LIMIT:
                    overflow_order = k + 1
                    break
                values[k] = est

    lines = [f"order: {system.order}", "triangular: yes"]
    if stationary:
        lines.append("stationary: yes")
    elif singular:
        lines.append("stationary: no; singular")
    else:
        lines.append("stationary: no; nonnegative diagonal")
    if zero:
        lines.append(f"zero diagonals: {list(zero)}")
    if positive:
        lines.append(f"positive diagonals: {list(positive)}")
    if pairs:
        lines.append(f"coincident diagonals: {[list(p) for p in pairs]}")
    if overflow_order is not None:
        lines.append(f"predicted overflow order: {overflow_order}")

    return ValidationReport(
        order=system.order,
        triangular=True,
        zero_diagonals=zero,
        positive_diagonals=positive,
        coincident_pairs=pairs,
        stationary=stationary,
        singular=singular,
        distinct=not pairs,
        predicted_overflow_order=overflow_order,
        _lines=tuple(lines),
    )
