"""Derivative-process tests.

Oracles: for mu' = -1 the derivative is e^{-t}; along the cubic solution
x(s) = (1+2s)^{-1/2} the linearized equation integrates in closed form to
D(1) = 3^{-3/2}; and because the variational recursion differentiates the
discrete Euler map exactly, finite differences must agree to O(eps).
"""

from __future__ import annotations

import io
import math

import numpy as np
import pytest

from sdemodulus import (
    FULL,
    TimeGrid,
    VariationalPath,
    catalog_model,
    derive_seed,
    euler_solve,
    finite_difference_check,
    finite_difference_profile,
    growth_bound_check,
    pathwise_distance_bound,
    sample_path,
    variational_solve,
    variational_to_csv,
    zero_path,
)


def test_zero_model_constant_direction():
    m = catalog_model("zero")
    sol = euler_solve(m, np.array([0.5]), sample_path(1, TimeGrid(1.0, 32), 1))
    var = variational_solve(m, sol, np.array([2.0]))
    assert np.all(var.dirs == 2.0)


def test_linear_decay_closed_form():
    m = catalog_model("linear1d")
    sol = euler_solve(m, np.array([1.0]), zero_path(TimeGrid(1.0, 10_000), 1))
    var = variational_solve(m, sol, np.array([1.0]))
    assert abs(var.dirs[-1, 0] - math.exp(-1.0)) <= 1e-3


def test_cubic_linearization_closed_form():
    """D(1) = exp(-3 int_0^1 (1+2s)^{-1} ds) = 3^{-3/2} along the cubic flow."""
    m = catalog_model("cubic_deterministic")
    sol = euler_solve(m, np.array([1.0]), zero_path(TimeGrid(1.0, 10_000), 1))
    var = variational_solve(m, sol, np.array([1.0]))
    assert abs(var.dirs[-1, 0] - 3.0 ** -1.5) <= 1e-3


def test_linearity_in_direction():
    """D(a h1 + b h2) = a D(h1) + b D(h2) to machine precision."""
    m = catalog_model("oscillatory1d")
    sol = euler_solve(m, np.array([0.7]), sample_path(5, TimeGrid(1.0, 256), 1))
    h1, h2 = np.array([1.0]), np.array([-0.5])
    a, b = 2.0, 3.0
    combined = variational_solve(m, sol, a * h1 + b * h2)
    split = a * variational_solve(m, sol, h1).dirs + b * variational_solve(m, sol, h2).dirs
    assert np.allclose(combined.dirs, split, rtol=1e-12, atol=1e-14)


def test_full_flow_matches_columns():
    """Full d x d mode equals the per-basis-vector solves, column by column."""
    m = catalog_model("bounded_tanh", d=2)
    sol = euler_solve(m, np.array([0.3, -0.4]), sample_path(8, TimeGrid(1.0, 64), 2))
    full = variational_solve(m, sol, FULL)
    assert full.dirs.shape == (65, 2, 2)
    for j in range(2):
        single = variational_solve(m, sol, np.eye(2)[j])
        assert np.allclose(full.dirs[:, :, j], single.dirs, rtol=1e-13)


# -- finite differences ------------------------------------------------------------


def test_fd_zero_model_exact():
    m = catalog_model("zero")
    p = sample_path(2, TimeGrid(1.0, 64), 1)
    chk = finite_difference_check(m, np.array([0.2]), np.array([1.0]), p, eps=1e-6)
    assert chk.max_discrepancy <= 1e-9


def test_fd_linear_model_exact():
    """Linear flow: the difference quotient is exact for any eps."""
    m = catalog_model("linear1d")
    p = sample_path(3, TimeGrid(1.0, 128), 1)
    chk = finite_difference_check(m, np.array([1.0]), np.array([1.0]), p, eps=1e-2)
    assert chk.max_discrepancy <= 1e-10


def test_fd_first_order_in_eps():
    """O(eps) Taylor remainder: halving eps roughly halves the discrepancy."""
    m = catalog_model("oscillatory1d")
    p = sample_path(4, TimeGrid(1.0, 1024), 1)
    d1, d2 = finite_difference_profile(
        m, np.array([0.3]), np.array([1.0]), p, [1e-4, 5e-5]
    )
    assert d1 <= 1e-3
    assert 1.5 <= d1 / d2 <= 2.5


def test_fd_eps_validation():
    m = catalog_model("zero")
    p = sample_path(0, TimeGrid(1.0, 8), 1)
    with pytest.raises(ValueError):
        finite_difference_profile(m, np.array([0.0]), np.array([1.0]), p, [0.0])


# -- growth bound -------------------------------------------------------------------


def test_growth_bound_zero_model():
    m = catalog_model("zero")
    sol = euler_solve(m, np.array([0.1]), sample_path(6, TimeGrid(1.0, 64), 1))
    var = variational_solve(m, sol, np.array([1.0]))
    chk = growth_bound_check(m, sol, var)
    assert chk.ok


def test_growth_bound_linear_positive_margin():
    m = catalog_model("linear1d")
    sol = euler_solve(m, np.array([1.0]), sample_path(7, TimeGrid(1.0, 128), 1))
    var = variational_solve(m, sol, np.array([1.0]))
    chk = growth_bound_check(m, sol, var)
    assert chk.ok
    assert chk.margin > 0.0


def test_growth_bound_detects_scaled_dirs():
    m = catalog_model("linear1d")
    sol = euler_solve(m, np.array([1.0]), sample_path(7, TimeGrid(1.0, 64), 1))
    var = variational_solve(m, sol, np.array([1.0]))
    forged = VariationalPath(var.grid, var.dirs * 1e10, var.direction)
    chk = growth_bound_check(m, sol, forged)
    assert not chk.ok


def test_growth_bound_full_mode():
    m = catalog_model("ou_nd", d=2)
    sol = euler_solve(m, np.array([0.5, -0.5]), sample_path(9, TimeGrid(1.0, 64), 2))
    chk = growth_bound_check(m, sol, variational_solve(m, sol, FULL))
    assert chk.ok


def test_growth_bound_random_sweep():
    """Zero failures over random catalog draws."""
    rng = np.random.default_rng(31)
    grid = TimeGrid(1.0, 128)
    for name in ("zero", "linear1d", "ou_nd", "oscillatory1d", "bounded_tanh"):
        m = catalog_model(name)
        for i in range(40):
            path = sample_path(derive_seed(7000, i), grid, m.m)
            x = rng.uniform(-2.0, 2.0, m.d)
            h = rng.standard_normal(m.d)
            sol = euler_solve(m, x, path)
            chk = growth_bound_check(m, sol, variational_solve(m, sol, h))
            assert chk.ok, f"{name}: margin {chk.margin}"


# -- pathwise distance bound ---------------------------------------------------------


def test_pathwise_equal_points():
    m = catalog_model("oscillatory1d")
    p = sample_path(10, TimeGrid(1.0, 64), 1)
    res = pathwise_distance_bound(m, np.array([0.4]), np.array([0.4]), p)
    assert res.ok
    assert res.lhs == 0.0


def test_pathwise_zero_model_exact_sides():
    """mu = 0: lhs = |x-y| exactly; rhs = |x-y| e^{kappa T} >= lhs."""
    m = catalog_model("zero")
    p = sample_path(11, TimeGrid(1.0, 64), 1)
    x, y = np.array([1.0]), np.array([0.25])
    res = pathwise_distance_bound(m, x, y, p)
    assert res.ok
    assert res.lhs == pytest.approx(0.75, rel=1e-12)
    assert res.rhs == pytest.approx(0.75, rel=1e-12)


def test_pathwise_linear_hand_value():
    """Difference of linear solutions decays: sup is at t=0."""
    m = catalog_model("linear1d")
    p = sample_path(12, TimeGrid(1.0, 128), 1)
    res = pathwise_distance_bound(m, np.array([1.0]), np.array([0.9]), p)
    assert res.ok
    assert res.lhs == pytest.approx(0.1, rel=1e-12)


def test_pathwise_random_sweep():
    rng = np.random.default_rng(41)
    grid = TimeGrid(1.0, 128)
    for name in ("linear1d", "oscillatory1d", "bounded_tanh"):
        m = catalog_model(name)
        for i in range(30):
            path = sample_path(derive_seed(8000, i), grid, m.m)
            x = rng.uniform(-2.0, 2.0, m.d)
            y = rng.uniform(-2.0, 2.0, m.d)
            res = pathwise_distance_bound(m, x, y, path, u_grid=33)
            assert res.ok, f"{name}: lhs {res.lhs} rhs {res.rhs}"


def test_pathwise_u_grid_validation():
    m = catalog_model("zero")
    p = sample_path(0, TimeGrid(1.0, 8), 1)
    with pytest.raises(ValueError):
        pathwise_distance_bound(m, np.array([0.0]), np.array([1.0]), p, u_grid=1)


# -- export ---------------------------------------------------------------------------


def test_variational_to_csv():
    m = catalog_model("linear1d")
    sol = euler_solve(m, np.array([1.0]), zero_path(TimeGrid(1.0, 4), 1))
    var = variational_solve(m, sol, np.array([1.0]))
    buf = io.StringIO()
    variational_to_csv(var, buf)
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "t,D_1"
    assert len(lines) == 6
    assert float(lines[1].split(",")[1]) == 1.0
