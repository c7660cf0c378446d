import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from certdecomp.linalg import DimensionError, NonFiniteError, matvec, norms, transpose_matvec


def test_matvec_examples():
    A = [[1, 2], [3, 4]]
    assert np.array_equal(matvec(A, [1, 0]), [1, 3])
    assert np.array_equal(matvec([[0, 0]], [5, 7]), [0])
    assert np.array_equal(matvec(A, [1, 1]), [3, 7])


def test_transpose_matvec_examples():
    assert np.array_equal(transpose_matvec([[1, 2], [3, 4]], [1, 0]), [1, 2])
    assert np.array_equal(transpose_matvec(np.eye(2), [2.5, -1.0]), [2.5, -1.0])
    assert np.array_equal(transpose_matvec([[2], [3]], [1, 1]), [5])


def test_norms_examples():
    assert norms([3, -4]) == {"l1": 7.0, "linf": 4.0}
    assert norms([0, 0, 0]) == {"l1": 0.0, "linf": 0.0}
    assert norms([-2]) == {"l1": 2.0, "linf": 2.0}


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        matvec([[1, 2]], [1, 2, 3])
    with pytest.raises(DimensionError):
        transpose_matvec([[1, 2]], [1, 2])


def test_non_finite_rejected():
    with pytest.raises(NonFiniteError):
        matvec([[np.nan]], [1.0])


finite = st.floats(-1e3, 1e3, allow_nan=False)


@st.composite
def triples(draw):
    m = draw(st.integers(1, 5))
    n = draw(st.integers(1, 5))
    A = draw(arrays(float, (m, n), elements=finite))
    x = draw(arrays(float, n, elements=finite))
    y = draw(arrays(float, m, elements=finite))
    return A, x, y


@settings(max_examples=100, deadline=None)
@given(triples())
def test_adjoint_identity(t):
    A, x, y = t
    lhs = y @ matvec(A, x)
    rhs = transpose_matvec(A, y) @ x
    scale = np.abs(A).sum() * max(np.abs(x).max(), 1) * max(np.abs(y).max(), 1)
    assert abs(lhs - rhs) <= 1e-12 * (1 + scale)


@settings(max_examples=100, deadline=None)
@given(triples())
def test_linf_operator_bound(t):
    A, x, _ = t
    bound = np.abs(A).sum(axis=1).max() * norms(x)["linf"]
    assert norms(matvec(A, x))["linf"] <= bound * (1 + 1e-12) + 1e-12
