"""Nested lower-triangular matrix algebra.

The matrices handled here belong to nested sequences: the leading k-by-k
block of the order-n member is itself the order-k member.  Packed row-major
storage makes the nesting literal (the order-k block is a prefix of the
buffer), and the inverse, integer powers, the scaled matrix exponential and
the eigendecomposition are all assembled one trailing row at a time.  Each
new row costs a vector-matrix product plus one triangular substitution, so
extending from order n-1 to n is O(n^2) and a full build is O(n^3).

All values are immutable after construction and all operations are pure
functions, so instances may be shared freely across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateSpectrum,
    InvalidDimension,
    Overflow,
    SingularMatrix,
)

__all__ = [
    "DISTINCT_RTOL",
    "EigenPair",
    "MatryoshkanMatrix",
    "add",
    "coincident_diagonal_pairs",
    "eigendecompose",
    "exp_scaled",
    "extend",
    "inverse",
    "multiply",
    "power",
    "solve_lower",
]

# Two diagonal entries a, b count as coincident when
# |a - b| <= DISTINCT_RTOL * max(1, |a|, |b|).  The resolvent solves lose all
# accuracy near coincidence, so we fail loudly instead of returning noise.
DISTINCT_RTOL = 1e-9

_EXP_ARG_MAX = math.log(np.finfo(np.float64).max)  # ~709.78

# An exponential row whose nearest diagonal gap satisfies gap * |t| below
# this threshold is evaluated through the phi1 form instead of the resolvent
# substitution: the divided differences (e^{d_j t} - e^{d_i t}) cancel in
# proportion to the gap, and with several clustered diagonals the lost digits
# compound row over row.
_EXP_ROW_SWITCH = 0.15
_PHI_SERIES_NORM = 0.5


def _packed_size(order: int) -> int:
    return order * (order + 1) // 2


class MatryoshkanMatrix:
    """Lower-triangular matrix stored as packed row-major rows.

    Row i (0-based) occupies ``packed[i*(i+1)//2 : i*(i+1)//2 + i + 1]``, so
    the first k*(k+1)//2 entries are exactly the order-k leading block.
    Entries above the diagonal are not stored and export as exact 0.0.
    """

    __slots__ = ("order", "_data", "_dense", "_diag", "_coincident")

    def __init__(self, order: int, packed):
        if order < 1:
            raise InvalidDimension(f"order must be >= 1, got {order}")
        data = np.asarray(packed, dtype=np.float64).reshape(-1).copy()
        if data.shape[0] != _packed_size(order):
            raise InvalidDimension(
                f"order {order} needs {_packed_size(order)} packed entries, "
                f"got {data.shape[0]}"
            )
        data.setflags(write=False)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "_data", data)
        object.__setattr__(self, "_dense", None)
        object.__setattr__(self, "_diag", None)
        object.__setattr__(self, "_coincident", None)

    def __setattr__(self, name, value):
        raise AttributeError("MatryoshkanMatrix is immutable")

    # -- constructors ----------------------------------------------------

    @classmethod
    def initial(cls, value: float) -> "MatryoshkanMatrix":
        """The order-1 base case of a nested sequence."""
        return cls(1, [float(value)])

    @classmethod
    def identity(cls, order: int) -> "MatryoshkanMatrix":
        dense = np.eye(order)
        return cls.from_dense(dense)

    @classmethod
    def zeros(cls, order: int) -> "MatryoshkanMatrix":
        return cls(order, np.zeros(_packed_size(order)))

    @classmethod
    def from_diagonal(cls, values) -> "MatryoshkanMatrix":
        d = np.asarray(values, dtype=np.float64).reshape(-1)
        return cls.from_dense(np.diag(d))

    @classmethod
    def from_dense(cls, array) -> "MatryoshkanMatrix":
        a = np.asarray(array, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidDimension(f"expected a square matrix, got shape {a.shape}")
        n = a.shape[0]
        if n >= 2 and np.any(a[np.triu_indices(n, k=1)] != 0.0):
            raise InvalidDimension("entries above the diagonal must be exactly zero")
        packed = np.concatenate([a[i, : i + 1] for i in range(n)])
        return cls(n, packed)

    # -- accessors -------------------------------------------------------

    @property
    def packed(self) -> np.ndarray:
        """Read-only packed storage (row-major lower triangle)."""
        return self._data

    def dense(self) -> np.ndarray:
        """Read-only dense export with exact zeros above the diagonal."""
        if self._dense is None:
            n = self.order
            out = np.zeros((n, n))
            pos = 0
            for i in range(n):
                out[i, : i + 1] = self._data[pos : pos + i + 1]
                pos += i + 1
            out.setflags(write=False)
            object.__setattr__(self, "_dense", out)
        return self._dense

    def diagonal(self) -> np.ndarray:
        """The diagonal entries, which are also the eigenvalues."""
        if self._diag is None:
            idx = np.arange(1, self.order + 1)
            d = self._data[idx * (idx + 1) // 2 - 1].copy()
            d.setflags(write=False)
            object.__setattr__(self, "_diag", d)
        return self._diag

    def sub_row(self, i: int) -> np.ndarray:
        """Entries of 0-based row i strictly left of the diagonal."""
        if not 0 <= i < self.order:
            raise InvalidDimension(f"row {i} out of range for order {self.order}")
        start = i * (i + 1) // 2
        return self._data[start : start + i].copy()

    def leading(self, k: int) -> "MatryoshkanMatrix":
        """The order-k leading block, a prefix of the packed storage."""
        if not 1 <= k <= self.order:
            raise InvalidDimension(f"leading block order {k} out of range")
        return MatryoshkanMatrix(k, self._data[: _packed_size(k)])

    @property
    def is_invertible(self) -> bool:
        return bool(np.all(self.diagonal() != 0.0))

    @property
    def has_distinct_spectrum(self) -> bool:
        return not self.coincident_pairs()

    def coincident_pairs(self) -> tuple[tuple[int, int], ...]:
        """1-based diagonal index pairs that coincide under DISTINCT_RTOL."""
        if self._coincident is None:
            d = self.diagonal()
            pairs = []
            for i in range(self.order):
                for j in range(i + 1, self.order):
                    tol = DISTINCT_RTOL * max(1.0, abs(d[i]), abs(d[j]))
                    if abs(d[i] - d[j]) <= tol:
                        pairs.append((i + 1, j + 1))
            object.__setattr__(self, "_coincident", tuple(pairs))
        return self._coincident

    def __repr__(self) -> str:
        return f"MatryoshkanMatrix(order={self.order})"


@dataclass(frozen=True)
class EigenPair:
    """Eigendecomposition M U = U diag(D) with U lower unitriangular."""

    U: MatryoshkanMatrix
    D: np.ndarray


# -- helpers --------------------------------------------------------------


def _require_same_order(x: MatryoshkanMatrix, y: MatryoshkanMatrix) -> None:
    if x.order != y.order:
        raise InvalidDimension(f"order mismatch: {x.order} vs {y.order}")


def _require_distinct(m: MatryoshkanMatrix) -> None:
    pairs = m.coincident_pairs()
    if pairs:
        raise DegenerateSpectrum(pairs)


def _solve_shifted_from_right(block: np.ndarray, shift: float, w: np.ndarray) -> np.ndarray:
    """Solve r (B - shift I) = w by substitution; B is lower triangular.

    Column j of the system only involves r[j:], so the components resolve
    from the last index backwards in O(k^2).
    """
    k = w.shape[0]
    r = np.empty(k)
    for j in range(k - 1, -1, -1):
        r[j] = (w[j] - np.dot(r[j + 1 :], block[j + 1 :, j])) / (block[j, j] - shift)
    return r


def _phi1(X: np.ndarray) -> np.ndarray:
    """phi1(X) = X^{-1} (e^X - I), evaluated by Taylor series plus doubling.

    Entire in X, so no resolvent is involved: scaling brings the norm under
    _PHI_SERIES_NORM, the series runs to machine precision, and the doubling
    phi1(2X) = phi1(X) (e^X + I) / 2 walks the scale back up.
    """
    k = X.shape[0]
    norm = float(np.max(np.abs(X).sum(axis=1))) if k else 0.0
    s = 0 if norm <= _PHI_SERIES_NORM else int(math.ceil(math.log2(norm / _PHI_SERIES_NORM)))
    Y = X / (2.0**s)
    eye = np.eye(k)
    P = eye.copy()
    term = eye.copy()
    for j in range(1, 18):
        term = term @ Y / (j + 1)
        P += term
    E = eye + Y @ P
    for _ in range(s):
        P = P @ (E + eye) / 2.0
        E = E @ E
    return P


def _exp_trailing_row(
    block: np.ndarray, diag: np.ndarray, row: np.ndarray, exp_block: np.ndarray,
    d_i: float, ed_i: float, t: float,
) -> np.ndarray:
    """Trailing row m (A - d I)^{-1} (e^{A t} - e^{d t} I) of the exponential.

    The resolvent commutes with the exponential of the block, so the default
    path multiplies first and substitutes after.  When some diagonal of the
    block sits within _EXP_ROW_SWITCH / |t| of d, that substitution cancels
    badly and the row is evaluated as e^{d t} t * m phi1((A - d I) t), which
    is the same expression with the divided differences summed stably.
    """
    i = row.shape[0]
    gap = float(np.min(np.abs(diag[:i] - d_i)))
    if gap * abs(t) >= _EXP_ROW_SWITCH:
        w = row @ exp_block - ed_i * row
        return _solve_shifted_from_right(block, d_i, w)
    shifted = (block - d_i * np.eye(i)) * t
    return (row @ _phi1(shifted)) * (t * ed_i)


def solve_lower(m: MatryoshkanMatrix, rhs, shift: float = 0.0) -> np.ndarray:
    """Solve (M - shift I) x = rhs by forward substitution."""
    b = np.asarray(rhs, dtype=np.float64).reshape(-1)
    if b.shape[0] != m.order:
        raise InvalidDimension(f"rhs length {b.shape[0]} != order {m.order}")
    L = m.dense()
    d = m.diagonal()
    x = np.empty(m.order)
    for i in range(m.order):
        piv = d[i] - shift
        if piv == 0.0:
            raise SingularMatrix(i + 1)
        x[i] = (b[i] - np.dot(L[i, :i], x[:i])) / piv
    return x


# -- operations -----------------------------------------------------------


def extend(
    base: MatryoshkanMatrix | None,
    row,
    diag: float,
) -> MatryoshkanMatrix:
    """Append one row to a nested matrix, growing its order by one.

    With ``base=None`` and an empty row this is the order-1 base case.
    """
    r = np.asarray(row, dtype=np.float64).reshape(-1)
    if base is None:
        if r.shape[0] != 0:
            raise InvalidDimension("base case takes an empty row")
        return MatryoshkanMatrix.initial(diag)
    if r.shape[0] != base.order:
        raise InvalidDimension(
            f"row length {r.shape[0]} != base order {base.order}"
        )
    packed = np.concatenate([base.packed, r, [float(diag)]])
    return MatryoshkanMatrix(base.order + 1, packed)


def add(x: MatryoshkanMatrix, y: MatryoshkanMatrix) -> MatryoshkanMatrix:
    """Entrywise sum; nesting and triangularity are preserved by storage."""
    _require_same_order(x, y)
    return MatryoshkanMatrix(x.order, x.packed + y.packed)


def multiply(x: MatryoshkanMatrix, y: MatryoshkanMatrix) -> MatryoshkanMatrix:
    """Triangular matrix product; the result is again lower triangular."""
    _require_same_order(x, y)
    prod = x.dense() @ y.dense()
    n = x.order
    packed = np.concatenate([prod[i, : i + 1] for i in range(n)])
    return MatryoshkanMatrix(n, packed)


def inverse(m: MatryoshkanMatrix) -> MatryoshkanMatrix:
    """Inverse built row by row from the leading-block inverse.

    The trailing row of the order-k inverse is -(1/d_k) m_k W_{k-1} with
    W_{k-1} the inverse already assembled, and 1/d_k on the diagonal.  No
    dense general-purpose inversion is involved.
    """
    d = m.diagonal()
    zero = np.flatnonzero(d == 0.0)
    if zero.size:
        raise SingularMatrix(int(zero[0]) + 1)
    n = m.order
    L = m.dense()
    W = np.zeros((n, n))
    W[0, 0] = 1.0 / d[0]
    for k in range(1, n):
        W[k, :k] = -(L[k, :k] @ W[:k, :k]) / d[k]
        W[k, k] = 1.0 / d[k]
    return MatryoshkanMatrix.from_dense(W)


def power(m: MatryoshkanMatrix, k: int) -> MatryoshkanMatrix:
    """Integer power via the resolvent identity on each trailing row.

    The trailing row of M^k is m_n (M_{n-1} - d_n I)^{-1} (M_{n-1}^k - d_n^k I);
    since the resolvent commutes with any polynomial in the block, the row
    is computed by one vector-matrix product and one substitution.  Requires
    a distinct spectrum for k >= 2; k = 0 and k = 1 are returned directly.
    """
    if k < 0:
        raise InvalidDimension(f"exponent must be >= 0, got {k}")
    if k == 0:
        return MatryoshkanMatrix.identity(m.order)
    if k == 1:
        return MatryoshkanMatrix(m.order, m.packed)
    _require_distinct(m)
    d = m.diagonal()
    dk = d.astype(np.float64) ** k
    n = m.order
    L = m.dense()
    P = np.zeros((n, n))
    P[0, 0] = dk[0]
    for i in range(1, n):
        row = L[i, :i]
        w = row @ P[:i, :i] - dk[i] * row
        P[i, :i] = _solve_shifted_from_right(L[:i, :i], d[i], w)
        P[i, i] = dk[i]
    if not np.all(np.isfinite(P)):
        raise Overflow(f"power {k} exceeded the double-precision range")
    return MatryoshkanMatrix.from_dense(P)


def exp_scaled(m: MatryoshkanMatrix, t: float) -> MatryoshkanMatrix:
    """Matrix exponential e^{M t} via the trailing-row block recursion.

    The trailing row of e^{M_n t} is
    m_n (M_{n-1} - d_n I)^{-1} (e^{M_{n-1} t} - e^{d_n t} I), and the diagonal
    is (e^{d_1 t}, ..., e^{d_n t}).  The resolvent is applied by triangular
    substitution, never by forming an explicit inverse.  Requires a distinct
    spectrum.

    Raises:
        DegenerateSpectrum: diagonal entries closer than DISTINCT_RTOL allows.
        Overflow: a scalar exponential left the double-precision range.
    """
    _require_distinct(m)
    d = m.diagonal()
    t = float(t)
    args = d * t
    if np.any(args > _EXP_ARG_MAX):
        raise Overflow(f"exp argument {args.max():.6g} exceeds the scalar range")
    ed = np.exp(args)
    n = m.order
    L = m.dense()
    E = np.zeros((n, n))
    E[0, 0] = ed[0]
    for i in range(1, n):
        E[i, :i] = _exp_trailing_row(
            L[:i, :i], d, L[i, :i], E[:i, :i], d[i], ed[i], t
        )
        E[i, i] = ed[i]
    if not np.all(np.isfinite(E)):
        raise Overflow("matrix exponential exceeded the double-precision range")
    return MatryoshkanMatrix.from_dense(E)


def eigendecompose(m: MatryoshkanMatrix) -> EigenPair:
    """Eigenvectors by the trailing-row recursion; eigenvalues are the diagonal.

    Balancing row n of M U = U D gives m_n U_{n-1} = u_n (D_{n-1} - d_n I)
    for the trailing row u_n, so u_n = m_n U_{n-1} (D_{n-1} - d_n I)^{-1}
    with a 1 on the diagonal; the shifted diagonal inverts entrywise.
    Requires a distinct spectrum.
    """
    _require_distinct(m)
    d = m.diagonal()
    n = m.order
    L = m.dense()
    U = np.zeros((n, n))
    U[0, 0] = 1.0
    for i in range(1, n):
        U[i, :i] = (L[i, :i] @ U[:i, :i]) / (d[:i] - d[i])
        U[i, i] = 1.0
    return EigenPair(U=MatryoshkanMatrix.from_dense(U), D=d.copy())
