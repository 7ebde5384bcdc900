"""
This code contains the entropy stable full order finite volume solver: flux differencing semi-discretization,
classical RK4 time stepping, snapshot capture and the semi-discrete entropy budget
"""

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from esrom.errors import AdmissibilityError, ContractError

logger = logging.getLogger("esrom")

ENTROPY_TRACE_COLUMNS = ["t", "S_h", "rate_cons", "rate_diss"]


@dataclass
class FomState:
    u_h: np.ndarray
    t: float = 0.0


class SnapshotSet:

    def __init__(self, data, times, grid, model_name="", model_params=None, augmented=False):
        """
        :param data: N_h x n_s matrix, column j is the state at times[j]
        :param times: length n_s vector
        :param grid: Grid the snapshots live on
        :param augmented: True for [X, eta(X)] matrices, whose times repeat
        """

        data = np.asarray(data, dtype=float)
        times = np.asarray(times, dtype=float)
        if data.ndim != 2 or data.shape[0] != grid.n_dof:
            raise ContractError("Snapshot matrix must be %i x n_s, got shape %s" % (grid.n_dof, data.shape))
        if times.shape != (data.shape[1],):
            raise ContractError("Expected %i snapshot times, got %i" % (data.shape[1], times.size))
        if data.shape[1] < 2:
            raise ContractError("A snapshot set needs at least two snapshots")
        if not augmented and np.any(np.diff(times) <= 0.0):
            raise ContractError("Snapshot times must be strictly increasing")
        self.data = data
        self.times = times
        self.grid = grid
        self.model_name = model_name
        self.model_params = dict(model_params or {})
        self.augmented = augmented

    @property
    def n_s(self):
        return self.data.shape[1]

    @property
    def n_dof(self):
        return self.data.shape[0]

    def column(self, j):
        return self.data[:, j].copy()

    def nearest_index(self, t):
        return int(np.argmin(np.abs(self.times - t)))


def _state_blocks(u_h, model, grid):
    if grid.n_vars != model.n_vars:
        raise ContractError("Grid carries %i variables but %s has %i" % (grid.n_vars, model.name, model.n_vars))
    return grid.blocks(u_h)


def interface_fluxes(u_h, model, grid):
    """Entropy conservative fluxes f*_{i+1/2} at all interfaces, slot i = interface i+1/2"""
    ub = model.check_admissible(_state_blocks(u_h, model, grid))
    return grid.flatten(model.ec_flux(ub, np.roll(ub, -1, axis=1)))


def dissipation_fluxes(u_h, model, grid, spec, eta_h=None):
    """D_{i+1/2} Delta_i eta at all interfaces; eta_h defaults to eta(u_h)"""
    ub = _state_blocks(u_h, model, grid)
    eta_b = model.entropy_variables(ub) if eta_h is None else grid.blocks(eta_h)
    return grid.flatten(model.interface_dissipation(ub, eta_b, spec))


def _fom_terms(u_h, model, grid, spec):
    ub = model.check_admissible(_state_blocks(u_h, model, grid))
    eta_b = model.entropy_variables(ub)
    fstar = grid.flatten(model.ec_flux(ub, np.roll(ub, -1, axis=1)))
    diss = grid.flatten(model.interface_dissipation(ub, eta_b, spec))
    return grid.flatten(eta_b), fstar, diss


def fom_rhs(u_h, model, grid, spec):
    """du_h/dt = Omega_h^-1 (-Delta_v f*_h + Delta_v D_h Delta_i eta_h)"""
    _, fstar, diss = _fom_terms(u_h, model, grid, spec)
    return grid.inverse_mass_weight(grid.apply_delta_v(diss - fstar))


def fom_entropy_rate_split(u_h, model, grid, spec):
    eta_h, fstar, diss = _fom_terms(u_h, model, grid, spec)
    rate_cons = -float(np.dot(eta_h, grid.apply_delta_v(fstar)))
    rate_diss = float(np.dot(eta_h, grid.apply_delta_v(diss)))
    return rate_cons, rate_diss


def total_entropy(u_h, model, grid):
    """S_h = sum_i dx_i s(u_i)"""
    return float(np.dot(grid.cell_widths, model.entropy(_state_blocks(u_h, model, grid))))


def rk4_step(state, dt, rhs, k1=None):
    """
    One classical RK4 step of the autonomous system dy/dt = rhs(y).

    :param state: array or FomState
    :param k1: optional rhs(state) already evaluated by the caller
    """

    if not dt > 0.0:
        raise ContractError("Time step must be positive, got %g" % dt)
    if isinstance(state, FomState):
        return FomState(rk4_step(state.u_h, dt, rhs, k1=k1), state.t + dt)
    y = np.asarray(state, dtype=float)
    if k1 is None:
        k1 = rhs(y)
    k2 = rhs(y + 0.5 * dt * k1)
    k3 = rhs(y + 0.5 * dt * k2)
    k4 = rhs(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step_count(dt, t_end):
    if not (dt > 0.0 and t_end > 0.0):
        raise ContractError("dt and t_end must be positive, got dt=%g, t_end=%g" % (dt, t_end))
    n_steps = int(round(t_end / dt))
    if n_steps < 1 or abs(n_steps * dt - t_end) > 1e-9 * t_end:
        raise ContractError("t_end=%g is not an integer multiple of dt=%g" % (t_end, dt))
    return n_steps


def run_fom(ic, model, grid, dt, t_end, snapshot_stride, spec):
    """
    Integrate the full order model from the initial condition and collect snapshots.

    :param ic: function of the cell centers returning an (n, N) array (or a length N_h vector)
    :returns: (SnapshotSet, pandas.DataFrame entropy trace with one row per time step)
    """

    if int(snapshot_stride) < 1:
        raise ContractError("Snapshot stride must be at least 1, got %s" % snapshot_stride)
    stride = int(snapshot_stride)
    n_steps = step_count(dt, t_end)
    spec.validate_for(model)

    u_h = np.asarray(ic(grid.cell_centers), dtype=float).reshape(-1)
    _state_blocks(u_h, model, grid)

    def rhs(y):
        return fom_rhs(y, model, grid, spec)

    snapshots = []
    snapshot_times = []
    trace = np.empty((n_steps + 1, 4))
    report_every = max(1, n_steps // 10)
    logger.info("Running %s FOM with N=%i, dt=%g, %i steps, dissipation %s" % (model.name, grid.n_cells, dt,
                                                                               n_steps, spec.kind))
    t = 0.0
    try:
        for k in range(n_steps + 1):
            t = k * dt
            eta_h, fstar, diss = _fom_terms(u_h, model, grid, spec)
            s_h = total_entropy(u_h, model, grid)
            trace[k] = (t, s_h, -float(np.dot(eta_h, grid.apply_delta_v(fstar))),
                        float(np.dot(eta_h, grid.apply_delta_v(diss))))
            if k % stride == 0:
                snapshots.append(u_h.copy())
                snapshot_times.append(t)
            if k % report_every == 0:
                logger.debug("FOM step %i/%i t=%.5f S_h=%.12g" % (k, n_steps, t, s_h))
            if k == n_steps:
                break
            k1 = grid.inverse_mass_weight(grid.apply_delta_v(diss - fstar))
            u_h = rk4_step(u_h, dt, rhs, k1=k1)
    except AdmissibilityError as e:
        e.time = t
        logger.error("FOM left the admissible set: %s" % e)
        raise

    snapshot_set = SnapshotSet(np.column_stack(snapshots), np.asarray(snapshot_times), grid,
                               model_name=model.name, model_params=model.params)
    return snapshot_set, pd.DataFrame(trace, columns=ENTROPY_TRACE_COLUMNS)
