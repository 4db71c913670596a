import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import matryoshkan as mk
from matryoshkan import core
from matryoshkan.errors import (
    DegenerateSpectrum,
    InvalidDimension,
    Overflow,
    SingularMatrix,
)

from conftest import random_matryoshkan, taylor_exp


def M(rows):
    return mk.MatryoshkanMatrix.from_dense(rows)


# -- construction and accessors ----------------------------------------------


def test_extend_base_case():
    m = mk.extend(None, [], 3.5)
    assert m.order == 1
    assert m.dense()[0, 0] == 3.5


def test_extend_two_by_two():
    m = mk.extend(mk.MatryoshkanMatrix.initial(2.0), [1.0], 4.0)
    assert np.array_equal(m.dense(), [[2.0, 0.0], [1.0, 4.0]])


def test_extend_reproduces_third_order_self_exciting_system():
    # appending the row (alpha^3, 3(beta lambda* + alpha^2)) and diagonal
    # -3(beta - alpha) to the order-2 system gives the order-3 system
    sys2, _ = mk.build_hawkes(mk.HawkesSpec(1, 1, 2), 2)
    sys3, _ = mk.build_hawkes(mk.HawkesSpec(1, 1, 2), 3)
    extended = mk.extend(sys2.theta, [1.0, 9.0], -3.0)
    assert np.array_equal(extended.packed, sys3.theta.packed)


def test_extend_rejects_wrong_row_length():
    with pytest.raises(InvalidDimension):
        mk.extend(mk.MatryoshkanMatrix.initial(1.0), [1.0, 2.0], 3.0)
    with pytest.raises(InvalidDimension):
        mk.extend(None, [1.0], 2.0)


def test_from_dense_rejects_upper_triangle():
    with pytest.raises(InvalidDimension):
        M([[1.0, 0.5], [0.0, 1.0]])


def test_accessors(rng):
    m = random_matryoshkan(rng, 6)
    d = m.dense()
    assert np.array_equal(m.diagonal(), np.diag(d))
    for i in range(6):
        assert np.array_equal(m.sub_row(i), d[i, :i])
    assert np.array_equal(m.leading(4).dense(), d[:4, :4])
    assert m.packed[: 4 * 5 // 2] is not None
    assert np.array_equal(m.leading(4).packed, m.packed[:10])


# -- add / multiply -----------------------------------------------------------


def test_add_identity():
    eye = mk.MatryoshkanMatrix.identity(2)
    zero = mk.MatryoshkanMatrix.zeros(2)
    assert np.array_equal(mk.add(eye, zero).dense(), np.eye(2))


def test_multiply_identity(rng):
    m = random_matryoshkan(rng, 7)
    eye = mk.MatryoshkanMatrix.identity(7)
    assert np.array_equal(mk.multiply(m, eye).packed, m.packed)


def test_multiply_hand_product():
    a = M([[2.0, 0.0], [1.0, 4.0]])
    b = M([[1.0, 0.0], [1.0, 1.0]])
    assert np.array_equal(mk.multiply(a, b).dense(), [[2.0, 0.0], [5.0, 4.0]])


def test_dimension_mismatch():
    with pytest.raises(InvalidDimension):
        mk.add(mk.MatryoshkanMatrix.identity(2), mk.MatryoshkanMatrix.identity(3))
    with pytest.raises(InvalidDimension):
        mk.multiply(mk.MatryoshkanMatrix.identity(2), mk.MatryoshkanMatrix.identity(3))


# -- inverse ------------------------------------------------------------------


def test_inverse_diagonal():
    inv = mk.inverse(mk.MatryoshkanMatrix.from_diagonal([2.0, 4.0]))
    assert np.array_equal(inv.dense(), np.diag([0.5, 0.25]))


def test_inverse_two_by_two():
    inv = mk.inverse(M([[2.0, 0.0], [1.0, 4.0]]))
    assert np.array_equal(inv.dense(), [[0.5, 0.0], [-0.125, 0.25]])


def test_inverse_residual_order_20(rng):
    # oracle: triangular multiply against the identity
    m = random_matryoshkan(rng, 20, diag_low=-10.0, diag_high=-1.0)
    residual = mk.multiply(m, mk.inverse(m)).dense() - np.eye(20)
    assert np.abs(residual).max() <= 1e-10


def test_inverse_reports_singular_index():
    m = M([[1.0, 0.0], [1.0, 0.0]])
    with pytest.raises(SingularMatrix) as err:
        mk.inverse(m)
    assert err.value.index == 2


# -- power --------------------------------------------------------------------


def test_power_trivial_exponents(rng):
    m = random_matryoshkan(rng, 5)
    assert np.array_equal(mk.power(m, 0).dense(), np.eye(5))
    assert np.array_equal(mk.power(m, 1).packed, m.packed)


def test_power_matches_repeated_multiplication(rng):
    # oracle: five-fold triangular multiply
    m = random_matryoshkan(rng, 8, diag_low=-8.0, diag_high=-0.5)
    direct = mk.power(m, 5).dense()
    acc = m
    for _ in range(4):
        acc = mk.multiply(acc, m)
    ref = acc.dense()
    scale = max(1.0, np.abs(ref).max())
    assert np.abs(direct - ref).max() <= 1e-12 * scale


def test_power_rejects_negative_and_degenerate():
    m = M([[1.0, 0.0], [1.0, 1.0]])
    with pytest.raises(InvalidDimension):
        mk.power(m, -1)
    with pytest.raises(DegenerateSpectrum):
        mk.power(m, 2)
    # trivial exponents bypass the spectrum requirement
    assert np.array_equal(mk.power(m, 1).packed, m.packed)


# -- exponential --------------------------------------------------------------


def test_exp_at_zero_is_identity(rng):
    m = random_matryoshkan(rng, 6)
    assert np.array_equal(mk.exp_scaled(m, 0.0).dense(), np.eye(6))


def test_exp_two_by_two_closed_form():
    e = mk.exp_scaled(M([[-1.0, 0.0], [1.0, -2.0]]), 1.0).dense()
    expected = np.array(
        [
            [math.exp(-1), 0.0],
            [math.exp(-1) - math.exp(-2), math.exp(-2)],
        ]
    )
    assert np.abs(e - expected).max() <= 1e-15
    assert e[1, 0] == pytest.approx(0.232544, abs=1e-6)


def test_exp_matches_taylor_series(rng):
    # oracle: 60-term truncated power series on the dense matrix
    m = random_matryoshkan(rng, 6, diag_low=-3.0, diag_high=-0.1)
    mine = mk.exp_scaled(m, 1.0).dense()
    ref = taylor_exp(m.dense(), 1.0)
    assert np.abs(mine - ref).max() <= 1e-10 * max(1.0, np.abs(ref).max())


def test_exp_diagonal_overflow():
    m = mk.MatryoshkanMatrix.from_diagonal([800.0, 1.0])
    with pytest.raises(Overflow):
        mk.exp_scaled(m, 1.0)


def test_exp_degenerate_spectrum():
    m = mk.MatryoshkanMatrix.from_diagonal([1.0, 1.0 + 1e-12])
    with pytest.raises(DegenerateSpectrum) as err:
        mk.exp_scaled(m, 1.0)
    assert (1, 2) in err.value.pairs


def test_semigroup_law(rng):
    m = random_matryoshkan(rng, 8, diag_low=-4.0, diag_high=-0.2)
    for s, t in [(0.1, 1.0), (1.0, 5.0), (0.1, 5.0), (1.0, 1.0)]:
        lhs = mk.multiply(mk.exp_scaled(m, s), mk.exp_scaled(m, t)).dense()
        rhs = mk.exp_scaled(m, s + t).dense()
        assert np.abs(lhs - rhs).max() <= 1e-8 * np.abs(rhs).max()


def test_derivative_law_second_order():
    # central difference of e^{Mt} converges at O(h^2): halving h from 1e-3
    # to 5e-4 shrinks the residual against M e^{Mt} by a factor near 4
    system, _ = mk.build_hawkes(mk.HawkesSpec(1, 1, 2), 5)
    m = system.theta
    t = 1.0
    ref = m.dense() @ mk.exp_scaled(m, t).dense()

    def residual(h):
        fd = (mk.exp_scaled(m, t + h).dense() - mk.exp_scaled(m, t - h).dense()) / (2 * h)
        return np.abs(fd - ref).max()

    ratio = residual(1e-3) / residual(5e-4)
    assert 3.5 <= ratio <= 4.5


# -- eigendecomposition --------------------------------------------------------


def test_eigendecompose_diagonal():
    pair = mk.eigendecompose(mk.MatryoshkanMatrix.from_diagonal([1.0, 2.0, 3.0]))
    assert np.array_equal(pair.U.dense(), np.eye(3))
    assert np.array_equal(pair.D, [1.0, 2.0, 3.0])


def test_eigendecompose_two_by_two_residual():
    m = M([[-1.0, 0.0], [1.0, -2.0]])
    pair = mk.eigendecompose(m)
    assert pair.U.dense()[1, 1] == 1.0
    residual = m.dense() @ pair.U.dense() - pair.U.dense() @ np.diag(pair.D)
    assert np.abs(residual).max() <= 1e-14


def test_eigendecompose_order_15_residual(rng):
    diag = -np.arange(1.0, 16.0)
    rng.shuffle(diag)
    packed = []
    for i in range(15):
        packed.append(np.concatenate([rng.uniform(-1, 1, i), [diag[i]]]))
    m = mk.MatryoshkanMatrix(15, np.concatenate(packed))
    pair = mk.eigendecompose(m)
    residual = m.dense() @ pair.U.dense() - pair.U.dense() @ np.diag(pair.D)
    assert np.abs(residual).max() <= 1e-11 * np.abs(m.dense()).max()


def test_eigendecompose_degenerate():
    with pytest.raises(DegenerateSpectrum):
        mk.eigendecompose(mk.MatryoshkanMatrix.from_diagonal([2.0, 2.0]))


# -- nesting and closure --------------------------------------------------------


def test_nesting_is_exact_for_all_operations(rng):
    m = random_matryoshkan(rng, 12, diag_low=-6.0, diag_high=-0.5)
    other = random_matryoshkan(rng, 12, diag_low=-3.0, diag_high=-0.1)
    for k in (3, 7, 11):
        assert np.array_equal(
            mk.add(m, other).leading(k).packed, mk.add(m.leading(k), other.leading(k)).packed
        )
        assert np.array_equal(
            mk.multiply(m, other).leading(k).packed,
            mk.multiply(m.leading(k), other.leading(k)).packed,
        )
        assert np.array_equal(
            mk.inverse(m).leading(k).packed, mk.inverse(m.leading(k)).packed
        )
        assert np.array_equal(
            mk.exp_scaled(m, 0.7).leading(k).packed,
            mk.exp_scaled(m.leading(k), 0.7).packed,
        )
        assert np.array_equal(
            mk.power(m, 4).leading(k).packed, mk.power(m.leading(k), 4).packed
        )


def test_power_matches_repeated_multiplication_through_8(rng):
    m = random_matryoshkan(rng, 10, diag_low=-10.0, diag_high=-1.0)
    acc = mk.MatryoshkanMatrix.identity(10)
    for k in range(9):
        ref = acc.dense()
        direct = mk.power(m, k).dense()
        scale = max(1.0, np.abs(ref).max())
        assert np.abs(direct - ref).max() <= 1e-11 * scale
        acc = mk.multiply(acc, m)


# -- solve_lower -----------------------------------------------------------------


def test_solve_lower_matches_dense(rng):
    m = random_matryoshkan(rng, 9)
    b = rng.uniform(-1, 1, 9)
    x = mk.solve_lower(m, b)
    assert np.abs(m.dense() @ x - b).max() <= 1e-12 * max(1.0, np.abs(b).max())


def test_solve_lower_zero_pivot():
    m = M([[1.0, 0.0], [1.0, 0.0]])
    with pytest.raises(SingularMatrix):
        mk.solve_lower(m, [1.0, 1.0])


def test_values_are_immutable_and_shareable(rng):
    m = random_matryoshkan(rng, 8)
    with pytest.raises((AttributeError, ValueError)):
        m.packed[0] = 1.0
    with pytest.raises(AttributeError):
        m.order = 3
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=4) as pool:
        results = list(pool.map(lambda _: mk.exp_scaled(m, 1.0).packed, range(8)))
    for r in results[1:]:
        assert np.array_equal(r, results[0])


# -- property tests ----------------------------------------------------------------


@st.composite
def small_matryoshkan(draw):
    order = draw(st.integers(min_value=1, max_value=6))
    diag = draw(
        st.lists(
            st.floats(min_value=-8.0, max_value=-0.5),
            min_size=order,
            max_size=order,
            unique_by=lambda x: round(x, 2),
        )
    )
    entries = draw(
        st.lists(
            st.floats(min_value=-2.0, max_value=2.0),
            min_size=order * (order - 1) // 2,
            max_size=order * (order - 1) // 2,
        )
    )
    packed = []
    pos = 0
    for i in range(order):
        packed.extend(entries[pos : pos + i])
        packed.append(diag[i])
        pos += i
    return mk.MatryoshkanMatrix(order, np.array(packed))


@settings(max_examples=40, deadline=None)
@given(small_matryoshkan(), small_matryoshkan())
def test_closure_of_sum_and_product(x, y):
    if x.order != y.order:
        return
    k = max(1, x.order - 1)
    for op in (mk.add, mk.multiply):
        result = op(x, y)
        dense = result.dense()
        n = result.order
        if n >= 2:
            assert np.all(dense[np.triu_indices(n, k=1)] == 0.0)
        assert np.array_equal(
            result.leading(k).packed, op(x.leading(k), y.leading(k)).packed
        )


@settings(max_examples=40, deadline=None)
@given(small_matryoshkan())
def test_inverse_property(m):
    if not m.has_distinct_spectrum:
        return
    residual = mk.multiply(m, mk.inverse(m)).dense() - np.eye(m.order)
    assert np.abs(residual).max() <= 1e-10
