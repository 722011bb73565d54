import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cbpopt import SingularSystem, UnitSystem, has_invertible_structure, solve_unit


def random_structured(rng: np.random.Generator, n: int) -> np.ndarray:
    """Random matrix satisfying the structural invertibility conditions."""
    U = np.zeros((n, n))
    for i in range(n):
        if i >= 1:
            U[i, i - 1] = rng.uniform(0.05, 1.0)
        for j in range(i + 1, n):
            U[i, j] = rng.uniform(0.0, 1.0)
        total = U[i].sum()
        cap = rng.uniform(0.1, 0.95) if i == 0 else rng.uniform(0.1, 1.0)
        if total > 0:
            U[i] *= cap / total
    return U


class TestStructureCheck:
    def test_accepts_structured(self):
        assert has_invertible_structure(np.array([[0.0, 0.5], [0.9, 0.0]]))

    def test_rejects_first_row_sum_one(self):
        assert not has_invertible_structure(np.array([[0.0, 1.0], [0.9, 0.0]]))

    def test_rejects_zero_subdiagonal(self):
        assert not has_invertible_structure(np.array([[0.0, 0.5], [0.0, 0.0]]))

    def test_rejects_nonzero_diagonal(self):
        assert not has_invertible_structure(np.array([[0.1, 0.5], [0.9, 0.0]]))

    def test_rejects_entry_below_subdiagonal(self):
        U = np.zeros((3, 3))
        U[1, 0] = 0.5
        U[2, 1] = 0.5
        U[2, 0] = 0.1
        assert not has_invertible_structure(U)

    def test_rejects_negative_entries(self):
        assert not has_invertible_structure(np.array([[0.0, -0.5], [0.9, 0.0]]))


class TestSolveUnit:
    def test_scalar(self):
        x = solve_unit(UnitSystem(np.array([[1 / 3]]), np.array([1 / 3])))
        assert x[0] == pytest.approx(0.5, abs=1e-14)

    def test_identity(self):
        c = np.array([0.3, 0.7, 0.1])
        x = solve_unit(UnitSystem(np.zeros((3, 3)), c))
        assert np.array_equal(x, c)

    def test_two_by_two(self):
        system = UnitSystem(np.array([[0.0, 0.5], [0.9, 0.0]]), np.array([0.5, 0.1]))
        x = solve_unit(system)
        assert np.allclose(x, [1.0, 1.0], atol=1e-12)

    def test_empty(self):
        assert solve_unit(UnitSystem(np.zeros((0, 0)), np.zeros(0))).shape == (0,)

    def test_singular_detected(self):
        # Permutation cycle: I - U has a zero eigenvalue.
        with pytest.raises(SingularSystem):
            solve_unit(UnitSystem(np.array([[0.0, 1.0], [1.0, 0.0]]), np.array([0.0, 0.0])))

    def test_rejects_negative_inputs(self):
        with pytest.raises(ValueError):
            UnitSystem(np.array([[-0.1]]), np.array([0.0]))
        with pytest.raises(ValueError):
            UnitSystem(np.array([[0.1]]), np.array([-1.0]))

    @given(st.integers(min_value=1, max_value=8), st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=80, deadline=None)
    def test_structured_never_singular(self, n, seed):
        rng = np.random.default_rng(seed)
        U = random_structured(rng, n)
        assert has_invertible_structure(U)
        c = rng.uniform(0.0, 1.0, size=n)
        x = solve_unit(UnitSystem(U, c))
        residual = np.abs(x - U @ x - c).max()
        assert residual <= 1e-10 * (1.0 + c.max())
        assert np.allclose(x, np.linalg.solve(np.eye(n) - U, c), atol=1e-9)

    @given(st.integers(min_value=1, max_value=8), st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=60, deadline=None)
    def test_substochastic_solutions_are_probabilities(self, n, seed):
        rng = np.random.default_rng(seed)
        U = random_structured(rng, n)
        slack = 1.0 - U.sum(axis=1)
        c = np.array([rng.uniform(0.0, s) for s in slack])
        x = solve_unit(UnitSystem(U, c))
        assert np.all(x >= -1e-12)
        assert np.all(x <= 1.0 + 1e-12)
