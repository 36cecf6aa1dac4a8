import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from groupbound.errors import DimensionMismatch, InvalidArgument
from groupbound.lp import LinearProgram, LpStatus, solve_lp

from oracles import vertex_enumeration


def test_single_equality():
    sol = solve_lp(LinearProgram([1.0], [[1.0]], [1.0]))
    assert sol.status is LpStatus.OPTIMAL
    assert sol.value == pytest.approx(1.0)
    np.testing.assert_allclose(sol.x, [1.0])


def test_objective_equals_constraint():
    sol = solve_lp(LinearProgram([1.0, 1.0], [[1.0, 1.0]], [2.0]))
    assert sol.status is LpStatus.OPTIMAL
    assert sol.value == pytest.approx(2.0)


def test_unbounded_ray(backend):
    sol = solve_lp(LinearProgram([-1.0, 0.0], [[1.0, -1.0]], [0.0]), backend=backend)
    assert sol.status is LpStatus.UNBOUNDED
    assert sol.x is None


def test_infeasible():
    sol = solve_lp(LinearProgram([1.0, 1.0], [[1.0, 1.0]], [-1.0]))
    assert sol.status is LpStatus.INFEASIBLE
    # inconsistent equalities
    sol = solve_lp(LinearProgram([0.0, 0.0], [[1.0, 1.0], [1.0, 1.0]], [1.0, 2.0]))
    assert sol.status is LpStatus.INFEASIBLE


def test_redundant_rows_are_dropped():
    A = [[1.0, 2.0, 1.0], [2.0, 4.0, 2.0]]
    sol = solve_lp(LinearProgram([1.0, 1.0, 3.0], A, [4.0, 8.0]))
    assert sol.status is LpStatus.OPTIMAL
    assert sol.value == pytest.approx(2.0)


def test_bounds():
    # min -x1 - x2 with x1 + x2 + s = 3, 0.5 <= x1 <= 1, x2 <= 1.5
    prob = LinearProgram([-1.0, -1.0, 0.0], [[1.0, 1.0, 1.0]], [3.0],
                         lower=[0.5, 0.0, 0.0], upper=[1.0, 1.5, np.inf])
    sol = solve_lp(prob)
    assert sol.value == pytest.approx(-2.5)
    np.testing.assert_allclose(sol.x[:2], [1.0, 1.5])
    assert solve_lp(LinearProgram([1.0], [[1.0]], [1.0], upper=[0.5])).status is LpStatus.INFEASIBLE
    assert solve_lp(LinearProgram([1.0], np.zeros((0, 1)), [], lower=[2.0], upper=[1.0])).status is LpStatus.INFEASIBLE


def test_no_rows():
    sol = solve_lp(LinearProgram([2.0, 1.0], np.zeros((0, 2)), np.zeros(0)))
    assert sol.value == 0.0
    assert solve_lp(LinearProgram([-1.0], np.zeros((0, 1)), np.zeros(0))).status is LpStatus.UNBOUNDED


def test_validation():
    with pytest.raises(DimensionMismatch):
        LinearProgram([1.0, 2.0], [[1.0]], [1.0])
    with pytest.raises(DimensionMismatch):
        LinearProgram([1.0], [[1.0]], [1.0, 2.0])
    with pytest.raises(DimensionMismatch):
        LinearProgram([1.0], [[1.0]], [1.0], lower=[0.0, 0.0])
    with pytest.raises(InvalidArgument):
        LinearProgram([np.nan], [[1.0]], [1.0])
    with pytest.raises(ValueError):
        solve_lp(LinearProgram([1.0], [[1.0]], [1.0]), pivot_rule="steepest")


def test_input_not_mutated():
    A = np.array([[1.0, 2.0], [-1.0, 1.0]])
    b = np.array([-1.0, -2.0])
    A0, b0 = A.copy(), b.copy()
    solve_lp(LinearProgram([1.0, 1.0], A, b))
    np.testing.assert_array_equal(A, A0)
    np.testing.assert_array_equal(b, b0)


def _random_bounded_lp(rng, d, r):
    # The last row caps sum(x), so every feasible LP here has a finite minimum.
    A = rng.standard_normal((r, d))
    x0 = rng.exponential(size=d) * (rng.random(d) < 0.6)
    b = A @ x0
    A = np.vstack([A, np.ones(d)])
    b = np.append(b, x0.sum() + rng.exponential())
    A = np.hstack([A, np.zeros((r + 1, 1))])
    A[-1, -1] = 1.0
    c = rng.standard_normal(d + 1)
    return c, A, b


@pytest.mark.parametrize("rule", ["dantzig", "bland"])
def test_matches_vertex_enumeration(backend, rule):
    rng = np.random.default_rng(7)
    for _ in range(150):
        d = int(rng.integers(2, 6))
        r = int(rng.integers(1, 4))
        c, A, b = _random_bounded_lp(rng, d, r)
        expected, _ = vertex_enumeration(c, A, b)
        sol = solve_lp(LinearProgram(c, A, b), pivot_rule=rule, backend=backend)
        assert sol.status is LpStatus.OPTIMAL
        assert sol.value == pytest.approx(expected, abs=1e-8)
        assert np.abs(A @ sol.x - b).max() <= 1e-9 * (1 + np.abs(b).max())
        assert sol.x.min() >= -1e-9


def test_optimum_below_sampled_feasible_points(rng):
    for _ in range(50):
        c, A, b = _random_bounded_lp(rng, 4, 2)
        sol = solve_lp(LinearProgram(c, A, b))
        _, x = vertex_enumeration(np.zeros_like(c), A, b)
        # convex combinations of the optimum and another vertex stay feasible
        for t in np.linspace(0, 1, 5):
            y = t * x + (1 - t) * sol.x
            assert c @ y >= sol.value - 1e-9


def test_degenerate_problem_terminates(backend):
    # Many tied ratios at zero; exercises the anti-cycling switch.
    d = 12
    A = np.vstack([np.eye(d)[:6] - np.eye(d, k=1)[:6], np.ones(d)])
    b = np.zeros(7)
    b[-1] = 1.0
    c = -np.arange(d, dtype=float)
    for rule in ("dantzig", "bland"):
        sol = solve_lp(LinearProgram(c, A, b), pivot_rule=rule, backend=backend)
        assert sol.status is LpStatus.OPTIMAL
        assert sol.value == pytest.approx(-(d - 1))


def test_backends_bitwise_identical():
    rng = np.random.default_rng(3)
    for _ in range(30):
        c, A, b = _random_bounded_lp(rng, 5, 3)
        a = solve_lp(LinearProgram(c, A, b), backend="python")
        try:
            k = solve_lp(LinearProgram(c, A, b), backend="cython")
        except ImportError:
            pytest.skip("compiled extension not built")
        assert a.value == k.value
        np.testing.assert_array_equal(a.x, k.x)
        assert a.iterations == k.iterations


def test_deterministic(backend, rng):
    c, A, b = _random_bounded_lp(rng, 5, 3)
    s1 = solve_lp(LinearProgram(c, A, b), backend=backend)
    s2 = solve_lp(LinearProgram(c, A, b), backend=backend)
    assert s1.value == s2.value
    np.testing.assert_array_equal(s1.x, s2.x)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_scaling_objective_scales_value(seed):
    rng = np.random.default_rng(seed)
    c, A, b = _random_bounded_lp(rng, 4, 2)
    base = solve_lp(LinearProgram(c, A, b))
    scaled = solve_lp(LinearProgram(3.0 * c, A, b))
    assert scaled.value == pytest.approx(3.0 * base.value, rel=1e-9, abs=1e-9)
