"""
This code contains the error metrics comparing ROM runs with the FOM and manifolds with their data, and the
assembly of comparison reports on the snapshot time grid
"""

import logging

import numpy as np
import pandas as pd

from esrom.errors import ContractError, InadmissibleProjectionError, NumericsError
from esrom.numerics.fitting import reconstruction_error
from esrom.numerics.manifold import TangentSolver, TseManifold, weighted_orthonormal_basis
from esrom.numerics.rom import RomState, entropy_projection_residual

logger = logging.getLogger("esrom")

PROFILE_COLUMNS = ["t_p", "snapshot_index", "cell", "x", "var", "eta_r", "eta_tilde_tse", "eta_tilde_plain",
                   "plain_admissible"]


def _decode(state, manifold):
    if isinstance(state, RomState):
        if state.alpha is not None and not isinstance(manifold, TseManifold):
            raise ContractError("State carries alpha but the manifold is not tangent space enriched")
        return manifold.decode(state.coords)
    return manifold.decode(state)


def eps_u(u_fom, state, manifold, grid):
    """|u_h(t) - decode(state)|_Omega"""
    u_fom = np.asarray(u_fom, dtype=float)
    if u_fom.shape != (grid.n_dof,):
        raise ContractError("FOM state must have length %i" % grid.n_dof)
    return grid.norm(u_fom - _decode(state, manifold))


def eps_proj(u_fom, basis, grid, tol=1e-10):
    """|(I - Phi Phi^T Omega_h) u_h|_Omega for an Omega_h-orthonormal Phi"""
    basis = np.asarray(basis, dtype=float)
    if basis.ndim == 1:
        basis = basis[:, np.newaxis]
    r = basis.shape[1]
    if r and np.max(np.abs(basis.T @ grid.mass_weight(basis) - np.eye(r))) > tol:
        raise ContractError("Basis is not Omega_h-orthonormal")
    u_fom = np.asarray(u_fom, dtype=float)
    return grid.norm(u_fom - basis @ (basis.T @ grid.mass_weight(u_fom)))


def eps_entropy(s_fom, s_rom):
    return abs(s_fom - s_rom)


def eps_entropy0(s_rom_0, s_rom_t):
    return abs(s_rom_0 - s_rom_t)


def eps_xt_max(manifold, X, coords):
    return reconstruction_error(manifold, X, coords)[1]


def _time_index(times, t):
    j = int(np.argmin(np.abs(times - t)))
    scale = max(1.0, float(np.max(np.abs(times))))
    return j if abs(times[j] - t) <= 1e-9 * scale else None


def build_comparison_report(snapshots, fom_trace, runs, model, grid, linear_basis):
    """
    Evaluate every run on the snapshot time grid.

    :param snapshots: SnapshotSet of the FOM
    :param fom_trace: FOM entropy trace DataFrame (t, S_h, ...)
    :param runs: dict name -> {"trace": RomTrace, "manifold": base manifold, "tse": bool, optional "fit": dict}
    :param linear_basis: POD basis of the linear reference, Omega_h-orthonormalized here for eps_proj
    :returns: (pandas.DataFrame report, summary dict)
    """

    times = snapshots.times
    n_s = snapshots.n_s
    report = pd.DataFrame({"t": times})
    s_fom = np.array([fom_trace["S_h"].values[np.argmin(np.abs(fom_trace["t"].values - t))] for t in times])

    weighted = weighted_orthonormal_basis(linear_basis, grid)
    eps_u_columns, entropy_columns, extra_columns = {}, {}, {}
    summary = {"runs": {}, "manifolds": {}}
    for name in sorted(runs):
        run = runs[name]
        trace = run["trace"]
        manifold = run["manifold"]
        if run["tse"]:
            manifold = TseManifold(manifold, model, grid)

        errors = np.full(n_s, np.nan)
        residuals = np.full(n_s, np.nan)
        for q, t in zip(trace.coords, trace.coord_times):
            j = _time_index(times, t)
            if j is None:
                continue
            state = RomState.from_coords(q, run["tse"])
            errors[j] = eps_u(snapshots.data[:, j], state, manifold, grid)
            try:
                residuals[j] = entropy_projection_residual(state, manifold, model, grid)[0]
            except NumericsError:
                pass

        s_rom = np.full(n_s, np.nan)
        eps_pi = np.full(n_s, np.nan)
        records = trace.records
        for j, t in enumerate(times):
            k = _time_index(records["t"].values, t) if len(records) else None
            if k is not None:
                s_rom[j] = records["S_r"].values[k]
                eps_pi[j] = records["eps_Pi"].values[k]
        s_rom0 = records["S_r"].values[0] if len(records) else np.nan

        eps_u_columns["eps_u_" + name] = errors
        entropy_columns["eps_S_" + name] = np.abs(s_fom - s_rom)
        entropy_columns["eps_S0_" + name] = np.abs(s_rom0 - s_rom)
        extra_columns["eps_Pi_" + name] = eps_pi
        extra_columns["eta_resid_" + name] = residuals

        summary["runs"][name] = {
            "status": trace.status,
            "fail_time": trace.fail_time,
            "fail_reason": trace.fail_reason,
            "t_online": trace.t_online,
            "eps_u_max": _nanmax(errors),
            "eps_S0_max": _nanmax(entropy_columns["eps_S0_" + name]),
            "eps_Pi_max": _nanmax(records["eps_Pi"].values) if len(records) else None,
            "alpha_max": _nanmax(np.abs(records["alpha"].values)) if len(records) else None,
        }
        if run.get("fit") is not None:
            summary["manifolds"][run["fit"]["name"]] = {"eps_xt_max": run["fit"]["eps_xt_max"],
                                                        "t_fit": run["fit"]["t_fit"]}

    for column, values in eps_u_columns.items():
        report[column] = values
    report["eps_proj"] = [eps_proj(snapshots.data[:, j], weighted, grid) for j in range(n_s)]
    for column, values in entropy_columns.items():
        report[column] = values
    for column, values in extra_columns.items():
        report[column] = values
    return report, summary


def _nanmax(values):
    values = np.asarray(values, dtype=float)
    if values.size == 0 or np.all(np.isnan(values)):
        return None
    return float(np.nanmax(values))


def projection_profiles(snapshots, basis, manifold, model, grid, profile_times, shift=None):
    """
    Entropy variables of the decoded snapshot coordinates a_p = Phi^T (X_p - u_bar) and their projections onto
    the tangent space with and without enrichment, at the stored snapshot nearest to each requested time.
    """

    lifted = TseManifold(manifold, model, grid)
    rows = []
    for t_p in profile_times:
        j = snapshots.nearest_index(t_p)
        x_p = snapshots.data[:, j] if shift is None else snapshots.data[:, j] - np.asarray(shift, dtype=float)
        a_p = np.asarray(basis, dtype=float).T @ x_p
        u_r = manifold.decode(a_p)
        eta_r = grid.flatten(model.entropy_variables(grid.blocks(u_r)))
        eta_tse = TangentSolver(lifted.jacobian(np.append(a_p, 0.0)), grid).project(eta_r)
        eta_plain = TangentSolver(manifold.jacobian(a_p), grid).project(eta_r)
        admissible = np.ones(grid.n_cells, dtype=bool)
        try:
            model.entropy_variables_inverse(grid.blocks(eta_plain))
        except InadmissibleProjectionError as e:
            admissible[e.cells] = False
        blocks = [grid.blocks(v) for v in (eta_r, eta_tse, eta_plain)]
        for var in range(grid.n_vars):
            for cell in range(grid.n_cells):
                rows.append((float(snapshots.times[j]), j, cell, float(grid.cell_centers[cell]), var,
                             blocks[0][var, cell], blocks[1][var, cell], blocks[2][var, cell],
                             bool(admissible[cell])))
        logger.info("Projection profile at t=%.4g: %i inadmissible cell(s) without enrichment" %
                    (snapshots.times[j], int((~admissible).sum())))
    return pd.DataFrame(rows, columns=PROFILE_COLUMNS)
