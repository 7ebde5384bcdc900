"""
This code contains test functions for the decoders and the weighted pseudo-inverse in manifold.py
"""

import numpy as np
import pytest

from esrom.errors import ContractError, SingularTangentSpaceError
from esrom.numerics.grid import Grid
from esrom.numerics.manifold import (LinearManifold, QuadraticManifold, RationalQuadraticManifold, TangentSolver,
                                     TseManifold, pinv_apply, pinv_plus_apply, symmetric_features,
                                     weighted_orthonormal_basis)


def _one_dim_rational():
    # phi(a) = a / (a^2 + 1)
    return RationalQuadraticManifold(np.zeros((1, 1, 1)), np.ones((1, 1)), np.zeros(1), np.ones((1, 1, 1)))


def _random_rational(rng, n_dof, r):
    return RationalQuadraticManifold(rng.standard_normal((n_dof, r, r)), rng.standard_normal((n_dof, r)),
                                     rng.standard_normal(n_dof), 0.5 * rng.standard_normal((n_dof, r, r)))


def _finite_difference_jacobian(manifold, q, step=1e-6):
    columns = []
    for k in range(q.size):
        shift = np.zeros_like(q)
        shift[k] = step
        columns.append((manifold.decode(q + shift) - manifold.decode(q - shift)) / (2.0 * step))
    return np.column_stack(columns)


def test_rational_by_hand():

    print("\nRunning test_rational_by_hand")

    manifold = _one_dim_rational()
    assert manifold.decode([1.0])[0] == pytest.approx(0.5)
    assert manifold.decode([0.0])[0] == 0.0
    assert manifold.jacobian([0.0])[0, 0] == pytest.approx(1.0)
    assert manifold.jacobian([1.0])[0, 0] == pytest.approx(0.0, abs=1e-15)


def test_rational_denominators(rng):

    print("\nRunning test_rational_denominators")

    manifold = _random_rational(rng, 12, 3)
    for _ in range(20):
        a = 10.0 * rng.standard_normal(3)
        assert np.all(manifold.denominators(a) >= 1.0)
    assert np.allclose(manifold.decode(np.zeros(3)), manifold.offset)
    assert np.allclose(manifold.quadratic, np.swapaxes(manifold.quadratic, 1, 2))
    assert np.all(np.linalg.eigvalsh(manifold.gram) >= -1e-12)


def test_linear_decode(rng):

    print("\nRunning test_linear_decode")

    basis = rng.standard_normal((10, 3))
    a = rng.standard_normal(3)
    manifold = LinearManifold(basis)
    assert np.allclose(manifold.decode(a), basis @ a)
    assert np.array_equal(manifold.jacobian(a), basis)
    with pytest.raises(ContractError):
        manifold.decode(np.ones(4))


def test_quadratic_decode(rng):

    print("\nRunning test_quadratic_decode")

    basis = rng.standard_normal((6, 2))
    quadratic = rng.standard_normal((6, 3))
    a = np.array([2.0, -1.0])
    manifold = QuadraticManifold(basis, quadratic)
    assert np.allclose(symmetric_features(a), [4.0, -2.0, 1.0])
    assert np.allclose(manifold.decode(a), basis @ a + quadratic @ [4.0, -2.0, 1.0])
    assert np.allclose(manifold.decode_many(np.vstack([a, 2.0 * a])),
                       np.column_stack([manifold.decode(a), manifold.decode(2.0 * a)]))


def test_jacobians_match_finite_differences(rng):

    print("\nRunning test_jacobians_match_finite_differences")

    manifolds = [
        LinearManifold(rng.standard_normal((15, 4))),
        QuadraticManifold(rng.standard_normal((15, 4)), rng.standard_normal((15, 10))),
        _random_rational(rng, 15, 4),
    ]
    for manifold in manifolds:
        for _ in range(3):
            a = rng.standard_normal(4)
            exact = manifold.jacobian(a)
            approx = _finite_difference_jacobian(manifold, a)
            assert np.allclose(exact, approx, rtol=1e-6, atol=1e-6 * np.max(np.abs(exact)))


def test_tse_burgers(rng, burgers):

    print("\nRunning test_tse_burgers")

    grid = Grid(15, (0.0, 1.0))
    base = _random_rational(rng, 15, 3)
    tse = TseManifold(base, burgers, grid)
    a = rng.standard_normal(3)
    phi = base.decode(a)

    assert tse.dim == 4
    assert np.array_equal(tse.tse_decode(a, 0.0), phi)
    assert np.allclose(tse.tse_decode(a, 0.3), 1.3 * phi, rtol=1e-15)
    assert np.array_equal(tse.tse_jacobian(a, 0.0)[:, :3], base.jacobian(a))
    assert np.array_equal(tse.tse_jacobian(a, 0.0)[:, 3], phi)


def test_tse_shallow_water(rng, shallow_water):

    print("\nRunning test_tse_shallow_water")

    grid = Grid(10, (0.0, 1.0), n_vars=2)
    offset = np.concatenate([np.full(10, 2.0), np.zeros(10)])
    base = LinearManifold(0.05 * rng.standard_normal((20, 3)), shift=offset)
    tse = TseManifold(base, shallow_water, grid)
    a = rng.standard_normal(3)
    phi = base.decode(a)
    eta = grid.flatten(shallow_water.entropy_variables(grid.blocks(phi)))

    assert np.allclose(tse.tse_decode(a, 0.01) - phi, 0.01 * eta, rtol=0.0, atol=1e-15)
    assert np.array_equal(tse.tse_jacobian(a, 0.2)[:, 3], eta)

    q = np.append(a, 0.01)
    exact = tse.jacobian(q)
    approx = _finite_difference_jacobian(tse, q)
    assert np.allclose(exact, approx, rtol=1e-6, atol=1e-6 * np.max(np.abs(exact)))


def test_pinv_orthonormal(rng):

    print("\nRunning test_pinv_orthonormal")

    widths = rng.uniform(0.05, 0.15, 20)
    grid = Grid(20, (0.0, float(widths.sum())), cell_widths=widths)
    basis = weighted_orthonormal_basis(rng.standard_normal((20, 4)), grid)
    assert LinearManifold(basis).is_orthonormal(grid)

    y = rng.standard_normal(20)
    assert np.allclose(pinv_apply(basis, grid, y), basis.T @ grid.mass_weight(y), atol=1e-12)
    assert np.allclose(pinv_plus_apply(basis, grid, y), basis.T @ y, atol=1e-12)


def test_pinv_identities(rng):

    print("\nRunning test_pinv_identities")

    widths = rng.uniform(0.5, 1.5, 30)
    grid = Grid(30, (0.0, float(widths.sum())), cell_widths=widths)
    jacobian = rng.standard_normal((30, 5))
    solver = TangentSolver(jacobian, grid)

    dagger = np.column_stack([solver.dagger(column) for column in jacobian.T])
    assert np.allclose(dagger, np.eye(5), atol=1e-10)

    projector = np.column_stack([solver.project(e) for e in np.eye(30)])
    assert np.allclose(projector @ projector, projector, atol=1e-10)
    weighted = grid.mass_weight(projector)
    assert np.allclose(weighted, weighted.T, atol=1e-10)

    # J^+ y = J^dagger (Omega_h^-1 y)
    y = rng.standard_normal(30)
    assert np.allclose(solver.plus(y), solver.dagger(grid.inverse_mass_weight(y)), atol=1e-12)


def test_singular_tangent_space(rng):

    print("\nRunning test_singular_tangent_space")

    grid = Grid(12, (0.0, 1.0))
    column = rng.standard_normal(12)
    jacobian = np.column_stack([column, rng.standard_normal(12), 2.0 * column])
    with pytest.raises(SingularTangentSpaceError) as e:
        TangentSolver(jacobian, grid)
    assert e.value.reason == "singular_tangent_space"

    with pytest.raises(SingularTangentSpaceError):
        TangentSolver(np.full((12, 2), np.nan), grid)


def test_ill_conditioned_falls_back_to_svd(rng):

    print("\nRunning test_ill_conditioned_falls_back_to_svd")

    grid = Grid(12, (0.0, 1.0))
    column = rng.standard_normal(12)
    other = rng.standard_normal(12)
    jacobian = np.column_stack([column, column + 1e-13 * other])
    solver = TangentSolver(jacobian, grid)
    assert solver.condition > 1e12
    assert np.allclose(solver.dagger(jacobian @ np.array([1.0, 2.0])), [1.0, 2.0], rtol=1e-2)
