"""
This code contains test functions for the reduced order models in rom.py
"""

import numpy as np
import pytest

from conftest import random_sw_states
from esrom.errors import ContractError
from esrom.numerics.fitting import FitConfig, fit_manifold, pod_basis
from esrom.numerics.fom import fom_rhs, run_fom
from esrom.numerics.grid import Grid
from esrom.numerics.initial_conditions import burgers_sine, euler_sod_periodic, sw_perturbation
from esrom.numerics.manifold import LinearManifold, QuadraticManifold, TseManifold, weighted_orthonormal_basis
from esrom.numerics.physics import DissipationSpec
from esrom.numerics.rom import (ROM_TRACE_COLUMNS, RomConfig, RomState, entropy_project,
                                entropy_projection_residual, initial_coords, rom_entropy_rate_split,
                                rom_rhs_entropy_stable, rom_rhs_generic, run_rom)


def _sw_snapshots(shallow_water, n_cells=32):
    grid = Grid(n_cells, (-1.0, 1.0), n_vars=2)
    snapshots, trace = run_fom(lambda x: sw_perturbation(x, sharpness=10.0), shallow_water, grid, 0.004, 0.2, 5,
                               DissipationSpec("none"))
    return grid, snapshots, trace


def _sw_shifted_manifold(rng, grid, r=3):
    shift = np.concatenate([np.full(grid.n_cells, 2.0), np.zeros(grid.n_cells)])
    return LinearManifold(0.05 * rng.standard_normal((grid.n_dof, r)), shift=shift)


def _curved_burgers_manifold(grid):
    # phi(a) = a_0 + a_1 sin(2 pi x) + 0.3 a_1^2 cos(4 pi x)
    x = grid.cell_centers
    basis = np.column_stack([np.ones(grid.n_cells), np.sin(2.0 * np.pi * x)])
    quadratic = np.zeros((grid.n_cells, 3))
    quadratic[:, 2] = 0.3 * np.cos(4.0 * np.pi * x)
    return QuadraticManifold(basis, quadratic)


def test_identity_decoder_matches_fom(rng, shallow_water):

    print("\nRunning test_identity_decoder_matches_fom")

    grid = Grid(10, (0.0, 1.0), n_vars=2)
    u_h = grid.flatten(random_sw_states(rng, 10))
    identity = LinearManifold(np.eye(grid.n_dof))
    spec = DissipationSpec("roe1")
    expected = fom_rhs(u_h, shallow_water, grid, spec)
    scale = np.max(np.abs(expected))

    generic = rom_rhs_generic(RomState(u_h), identity, shallow_water, grid, spec)
    assert np.allclose(generic, expected, rtol=1e-12, atol=1e-12 * scale)

    u_tilde, _ = entropy_project(RomState(u_h), identity, shallow_water, grid)
    assert np.allclose(u_tilde, u_h, rtol=1e-12, atol=1e-12)
    stable = rom_rhs_entropy_stable(RomState(u_h), identity, shallow_water, grid, spec)
    assert np.allclose(stable, expected, rtol=1e-9, atol=1e-9 * scale)


def test_linear_galerkin(rng, shallow_water):

    print("\nRunning test_linear_galerkin")

    grid = Grid(16, (0.0, 1.0), n_vars=2)
    shifted = _sw_shifted_manifold(rng, grid)
    basis = weighted_orthonormal_basis(shifted.basis, grid)
    manifold = LinearManifold(basis, shift=shifted.shift)
    a = 0.05 * rng.standard_normal(3)
    spec = DissipationSpec("roe1")

    expected = basis.T @ grid.mass_weight(fom_rhs(manifold.decode(a), shallow_water, grid, spec))
    rhs = rom_rhs_generic(RomState(a), manifold, shallow_water, grid, spec)
    assert np.allclose(rhs, expected, rtol=1e-12, atol=1e-12 * np.max(np.abs(expected)))


def test_constant_state_rhs(shallow_water):

    print("\nRunning test_constant_state_rhs")

    grid = Grid(12, (0.0, 1.0), n_vars=2)
    basis = np.zeros((grid.n_dof, 2))
    basis[:12, 0] = 1.0
    basis[12:, 1] = 1.0
    manifold = LinearManifold(basis)
    state = RomState(np.array([1.5, 0.3]))
    for variant_rhs in (rom_rhs_generic, rom_rhs_entropy_stable):
        rhs = variant_rhs(state, manifold, shallow_water, grid, DissipationSpec("roe1"))
        assert np.allclose(rhs, 0.0, atol=1e-13)


def test_tse_projection_is_exact_at_zero_alpha(burgers):

    print("\nRunning test_tse_projection_is_exact_at_zero_alpha")

    grid = Grid(20, (0.0, 1.0))
    base = _curved_burgers_manifold(grid)
    tse = TseManifold(base, burgers, grid)
    state = RomState(np.array([1.0, 0.4]), 0.0)
    u_r = tse.decode(state.coords)
    assert np.array_equal(u_r, base.decode(state.a))

    u_tilde, eta_tilde = entropy_project(state, base, burgers, grid)
    assert np.allclose(eta_tilde, u_r, rtol=0.0, atol=1e-12)
    assert np.allclose(u_tilde, u_r, rtol=0.0, atol=1e-12)
    residual, bound = entropy_projection_residual(state, base, burgers, grid)
    assert residual <= 1e-12 and bound <= 1e-12

    # without enrichment the curved manifold does not contain its entropy variables
    residual, _ = entropy_projection_residual(RomState(state.a), base, burgers, grid)
    assert residual > 1e-6


def test_entropy_rate_chain(rng, shallow_water):

    print("\nRunning test_entropy_rate_chain")

    grid = Grid(16, (0.0, 1.0), n_vars=2)
    base = _sw_shifted_manifold(rng, grid)
    tse = TseManifold(base, shallow_water, grid)
    for kind in ("none", "roe1", "tecno2_minmod"):
        spec = DissipationSpec(kind)
        for _ in range(3):
            state = RomState(rng.standard_normal(3), 0.01 * rng.standard_normal())
            q = state.coords
            u_r = tse.decode(q)
            eta_r = grid.flatten(shallow_water.entropy_variables(grid.blocks(u_r)))
            s_r = float(np.dot(grid.cell_widths, shallow_water.entropy(grid.blocks(u_r))))

            dq = rom_rhs_entropy_stable(state, base, shallow_water, grid, spec)
            rate = float(eta_r @ grid.mass_weight(tse.jacobian(q) @ dq))
            rate_cons, rate_diss = rom_entropy_rate_split(state, base, shallow_water, grid, spec, "entropy_stable")

            tol = 1e-10 * (1.0 + abs(s_r))
            assert abs(rate_cons) <= tol
            assert rate_diss <= tol
            assert abs(rate - (rate_cons + rate_diss)) <= tol
            if kind == "none":
                assert abs(rate) <= tol


def test_initial_coords(rng):

    print("\nRunning test_initial_coords")

    basis, _ = np.linalg.qr(rng.standard_normal((10, 3)))
    data = basis @ rng.standard_normal((3, 4))
    state = initial_coords(data, basis, False)
    assert state.alpha is None
    assert np.allclose(LinearManifold(basis).decode(state.a), data[:, 0], rtol=0.0, atol=1e-12)

    state = initial_coords(data, basis, True)
    assert state.alpha == 0.0
    assert state.coords.size == 4
    assert np.array_equal(RomState.from_coords(state.coords, True).a, state.a)

    # coordinates measured from a reference state
    shift = 1.0 + rng.standard_normal(10)
    state = initial_coords(data + shift[:, np.newaxis], basis, False, shift)
    assert np.allclose(state.a, basis.T @ data[:, 0], rtol=0.0, atol=1e-12)
    assert np.allclose(LinearManifold(basis, shift=shift).decode(state.a), data[:, 0] + shift, rtol=0.0, atol=1e-12)


def test_rom_config_validation(shallow_water):

    print("\nRunning test_rom_config_validation")

    grid = Grid(8, (0.0, 1.0), n_vars=2)
    manifold = LinearManifold(np.eye(16)[:, :2])
    config = RomConfig(variant="galerkin", tse=False, dt=0.01, t_end=0.1, spec=DissipationSpec("none"),
                       manifold=manifold, model=shallow_water, grid=grid)
    with pytest.raises(ContractError):
        config.validate()
    config.variant = "generic"
    config.spec = DissipationSpec("llf")
    with pytest.raises(ContractError):
        config.validate()
    config.spec = DissipationSpec("roe1")
    config.t_end = 0.105
    with pytest.raises(ContractError):
        config.validate()


def test_run_rom_entropy_conservation(shallow_water):

    print("\nRunning test_run_rom_entropy_conservation")

    grid, snapshots, _ = _sw_snapshots(shallow_water)
    assert snapshots.n_s == 11
    basis, _ = pod_basis(snapshots, 6)
    config = RomConfig(variant="entropy_stable", tse=False, dt=0.004, t_end=0.2, spec=DissipationSpec("none"),
                       manifold=LinearManifold(basis), model=shallow_water, grid=grid, trace_stride=5)
    trace = run_rom(config, initial_coords(snapshots, basis, False))

    assert trace.ok
    assert trace.status_dict() == {"status": "ok", "fail_time": None, "fail_reason": None}
    assert list(trace.records.columns) == ROM_TRACE_COLUMNS
    assert len(trace.records) == 51
    assert trace.coords.shape == (11, 6)
    assert np.allclose(trace.coord_times, snapshots.times)
    assert list(trace.coords_frame().columns) == ["t", "a0", "a1", "a2", "a3", "a4", "a5"]

    s_r = trace.records["S_r"].values
    assert np.max(np.abs(s_r - s_r[0])) <= 1e-6 * abs(s_r[0])
    assert np.all(np.abs(trace.records["rate_cons"].values) <= 1e-10 * (1.0 + np.abs(s_r)))
    assert np.all(trace.records["eps_Pi"].values >= 0.0)
    assert trace.records["alpha"].isna().all()

    # identical config, identical trace
    again = run_rom(config, initial_coords(snapshots, basis, False))
    assert again.records.equals(trace.records)


def test_run_rom_identity_decoder_tracks_fom(shallow_water):

    print("\nRunning test_run_rom_identity_decoder_tracks_fom")

    grid, snapshots, _ = _sw_snapshots(shallow_water, n_cells=16)
    identity = np.eye(grid.n_dof)
    config = RomConfig(variant="generic", tse=False, dt=0.004, t_end=0.2, spec=DissipationSpec("none"),
                       manifold=LinearManifold(identity), model=shallow_water, grid=grid, trace_stride=5)
    trace = run_rom(config, initial_coords(snapshots, identity, False))
    assert trace.ok
    assert np.allclose(trace.coords.T, snapshots.data, rtol=1e-10, atol=1e-10)


def test_run_rom_tse_records_alpha(shallow_water):

    print("\nRunning test_run_rom_tse_records_alpha")

    grid, snapshots, _ = _sw_snapshots(shallow_water)
    basis, _ = pod_basis(snapshots, 4)
    config = RomConfig(variant="entropy_stable", tse=True, dt=0.004, t_end=0.02, spec=DissipationSpec("none"),
                       manifold=LinearManifold(basis), model=shallow_water, grid=grid)
    trace = run_rom(config, initial_coords(snapshots, basis, False))
    assert trace.ok
    assert trace.coords.shape == (6, 5)
    alpha = trace.records["alpha"].values
    assert alpha[0] == 0.0
    assert np.all(np.isfinite(alpha))


def test_run_rom_records_failure(burgers):

    print("\nRunning test_run_rom_records_failure")

    # a linear Burgers manifold already contains eta = u, so enrichment makes the tangent space singular
    grid = Grid(16, (0.0, 1.0))
    x = grid.cell_centers
    basis = np.column_stack([np.ones(16), np.sin(2.0 * np.pi * x)]) / 4.0
    config = RomConfig(variant="entropy_stable", tse=True, dt=0.01, t_end=0.1, spec=DissipationSpec("llf"),
                       manifold=LinearManifold(basis), model=burgers, grid=grid)
    trace = run_rom(config, RomState(np.array([4.0, 1.0]), 0.0))
    assert not trace.ok
    assert trace.status == "failed"
    assert trace.fail_time == 0.0
    assert trace.fail_reason == "singular_tangent_space"
    assert len(trace.records) == 0


def _reference_linear_es_rom(basis, a0, model, grid, dt, n_steps, wavespeed):
    """
    Entropy projected linear Galerkin ROM written directly from the model fluxes:
    eta_tilde = V M^-1 V^T Omega eta(V a), u_tilde = u(eta_tilde),
    M da/dt = V^T (-Delta_v f*(u_tilde) + Delta_v (c/2) Delta_i eta_tilde)
    """

    mass = basis.T @ (grid.mass[:, np.newaxis] * basis)

    def terms(a):
        eta = grid.flatten(model.entropy_variables(grid.blocks(basis @ a)))
        eta_tilde = grid.blocks(basis @ np.linalg.solve(mass, basis.T @ (grid.mass * eta)))
        u_tilde = model.entropy_variables_inverse(eta_tilde)
        right = np.roll(u_tilde, -1, axis=1)
        fstar = model.ec_flux(u_tilde, right)
        diss = wavespeed(u_tilde, right) * (np.roll(eta_tilde, -1, axis=1) - eta_tilde)
        flux_div = grid.flatten(fstar - np.roll(fstar, 1, axis=1))
        diss_div = grid.flatten(diss - np.roll(diss, 1, axis=1))
        eta_flat = grid.flatten(eta_tilde)
        rhs = np.linalg.solve(mass, basis.T @ (diss_div - flux_div))
        return rhs, -float(eta_flat @ flux_div), float(eta_flat @ diss_div)

    a = np.asarray(a0, dtype=float).copy()
    coords, rates = [a.copy()], []
    for k in range(n_steps + 1):
        k1, rate_cons, rate_diss = terms(a)
        rates.append((rate_cons, rate_diss))
        if k == n_steps:
            break
        k2 = terms(a + 0.5 * dt * k1)[0]
        k3 = terms(a + 0.5 * dt * k2)[0]
        k4 = terms(a + dt * k3)[0]
        a = a + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        coords.append(a.copy())
    return np.array(coords), np.array(rates)


def test_augmented_linear_rom_matches_reference(burgers, shallow_water):

    print("\nRunning test_augmented_linear_rom_matches_reference")

    burgers_grid = Grid(32, (0.0, 1.0))
    burgers_snapshots, _ = run_fom(lambda x: burgers_sine(x, offset=1.0, amplitude=0.5), burgers, burgers_grid,
                                   0.005, 0.1, 2, DissipationSpec("llf"))
    sw_grid, sw_snapshots, _ = _sw_snapshots(shallow_water)

    cases = [
        (burgers, burgers_grid, burgers_snapshots, 4, 0.005, 0.1, DissipationSpec("llf"),
         lambda u_l, u_r: 0.5 * np.maximum(np.abs(u_l), np.abs(u_r))),
        (shallow_water, sw_grid, sw_snapshots, 6, 0.004, 0.1, DissipationSpec("none"),
         lambda u_l, u_r: 0.0),
    ]
    for model, grid, snapshots, r, dt, t_end, spec, wavespeed in cases:
        basis = fit_manifold(snapshots, "linear", FitConfig(r=r), model=model, augment=True)["basis"]
        initial = initial_coords(snapshots, basis, False)
        config = RomConfig(variant="entropy_stable", tse=False, dt=dt, t_end=t_end, spec=spec,
                           manifold=LinearManifold(basis), model=model, grid=grid, trace_stride=1)
        trace = run_rom(config, initial)
        assert trace.ok

        n_steps = len(trace.records) - 1
        coords, rates = _reference_linear_es_rom(basis, initial.a, model, grid, dt, n_steps, wavespeed)
        scale = np.max(np.abs(coords))
        assert trace.coords.shape == coords.shape
        assert np.allclose(trace.coords, coords, rtol=1e-10, atol=1e-10 * scale)

        rate_scale = 1.0 + np.max(np.abs(rates))
        assert np.allclose(trace.records["rate_cons"].values, rates[:, 0], rtol=0.0, atol=1e-9 * rate_scale)
        assert np.allclose(trace.records["rate_diss"].values, rates[:, 1], rtol=0.0, atol=1e-9 * rate_scale)
        assert np.all(rates[:, 1] <= 1e-12 * rate_scale)


def _sod_density_manifold(grid, gamma):
    # density-only modes around the Sod state: the span never reaches momentum or energy
    x = grid.cell_centers
    basis = np.zeros((grid.n_dof, 2))
    basis[:grid.n_cells, 0] = np.sin(2.0 * np.pi * x)
    basis[:grid.n_cells, 1] = np.cos(2.0 * np.pi * x)
    return LinearManifold(basis, shift=grid.flatten(euler_sod_periodic(x, gamma=gamma)))


def test_euler_entropy_projection_needs_enrichment(euler):

    print("\nRunning test_euler_entropy_projection_needs_enrichment")

    grid = Grid(16, (0.0, 1.0), n_vars=3)
    manifold = _sod_density_manifold(grid, euler.gamma)
    config = RomConfig(variant="entropy_stable", tse=False, dt=0.001, t_end=0.01, spec=DissipationSpec("roe1"),
                       manifold=manifold, model=euler, grid=grid, trace_stride=1)

    # the projected energy entropy variable vanishes, which no admissible state has
    trace = run_rom(config, RomState(np.zeros(2)))
    assert not trace.ok
    assert trace.fail_reason == "inadmissible_projection"
    assert trace.fail_time == 0.0
    assert len(trace.records) == 0

    config.tse = True
    trace = run_rom(config, RomState(np.zeros(2)))
    assert trace.ok
    assert len(trace.records) == 11
    records = trace.records
    s_r = np.abs(records["S_r"].values)
    assert np.all(records["rate_diss"].values <= 1e-10 * (1.0 + s_r))
    assert np.all(np.abs(records["rate_cons"].values) <= 1e-9 * (1.0 + s_r))
    assert records["eps_Pi"].values[0] <= 1e-12
    assert np.max(records["eps_Pi"].values) <= 5e-2
    alpha = records["alpha"].values
    assert alpha[0] == 0.0
    assert np.all(np.isfinite(alpha))
