"""
This code contains the manifold Galerkin reduced order models: the generic ROM, the entropy projected entropy
stable ROM, optional tangent space enrichment, RK4 integration and trace recording
"""

import logging
import time
from dataclasses import dataclass

import numpy as np
import pandas as pd

from esrom.errors import ContractError, NumericsError
from esrom.numerics.fom import rk4_step, step_count, total_entropy
from esrom.numerics.manifold import TangentSolver, TseManifold
from esrom.numerics.physics import DissipationSpec

logger = logging.getLogger("esrom")

ROM_TRACE_COLUMNS = ["t", "S_r", "rate_cons", "rate_diss", "eps_Pi", "alpha"]
VARIANTS = ("generic", "entropy_stable")


@dataclass
class RomState:
    a: np.ndarray
    alpha: float = None

    @property
    def coords(self):
        a = np.asarray(self.a, dtype=float).reshape(-1)
        return a if self.alpha is None else np.append(a, self.alpha)

    @classmethod
    def from_coords(cls, coords, tse):
        coords = np.asarray(coords, dtype=float).reshape(-1)
        if tse:
            return cls(coords[:-1].copy(), float(coords[-1]))
        return cls(coords.copy())


@dataclass
class RomConfig:
    variant: str
    tse: bool
    dt: float
    t_end: float
    spec: DissipationSpec
    manifold: object
    model: object
    grid: object
    trace_stride: int = 1

    def validate(self):
        if self.variant not in VARIANTS:
            raise ContractError("Unknown ROM variant \"%s\", expected one of %s" % (self.variant, VARIANTS))
        if int(self.trace_stride) < 1:
            raise ContractError("Trace stride must be at least 1")
        if self.manifold.n_dof != self.grid.n_dof:
            raise ContractError("Manifold has %i DOFs but the grid has %i" % (self.manifold.n_dof, self.grid.n_dof))
        self.spec.validate_for(self.model)
        step_count(self.dt, self.t_end)
        return self


class RomTrace:
    """Per-step scalar diagnostics plus strided coordinates and the run outcome"""

    def __init__(self, records, coords, coord_times, status="ok", fail_time=None, fail_reason=None, t_online=0.0):
        self.records = records
        self.coords = coords
        self.coord_times = coord_times
        self.status = status
        self.fail_time = fail_time
        self.fail_reason = fail_reason
        self.t_online = t_online

    @property
    def ok(self):
        return self.status == "ok"

    def status_dict(self):
        return {"status": self.status, "fail_time": self.fail_time, "fail_reason": self.fail_reason}

    def coords_frame(self):
        names = ["a%i" % i for i in range(self.coords.shape[1])]
        frame = pd.DataFrame(self.coords, columns=names)
        frame.insert(0, "t", self.coord_times)
        return frame


def _lifted(state, manifold, model, grid):
    if state.alpha is not None and not isinstance(manifold, TseManifold):
        return TseManifold(manifold, model, grid)
    if state.alpha is None and isinstance(manifold, TseManifold):
        raise ContractError("Tangent space enriched manifold needs a state with alpha")
    return manifold


class _RomTerms:
    """Everything one right-hand side evaluation needs, computed once per state"""

    def __init__(self, state, manifold, model, grid, spec, variant):
        manifold = _lifted(state, manifold, model, grid)
        coords = state.coords
        self.grid = grid
        self.u_r = manifold.decode(coords)
        u_blocks = model.check_admissible(grid.blocks(self.u_r))
        self.eta_r = grid.flatten(model.entropy_variables(u_blocks))
        self.solver = TangentSolver(manifold.jacobian(coords), grid)
        self.eta_tilde = self.solver.project(self.eta_r)

        if variant == "entropy_stable":
            self.u_eval = grid.flatten(model.entropy_variables_inverse(grid.blocks(self.eta_tilde)))
            eta_eval = self.eta_tilde
        else:
            self.u_eval = self.u_r
            eta_eval = self.eta_r
        ub = grid.blocks(self.u_eval)
        self.fstar = grid.flatten(model.ec_flux(ub, np.roll(ub, -1, axis=1)))
        self.diss = grid.flatten(model.interface_dissipation(ub, grid.blocks(eta_eval), spec))
        self.entropy = total_entropy(self.u_r, model, grid)

    def rhs(self):
        return self.solver.plus(self.grid.apply_delta_v(self.diss - self.fstar))

    def rates(self):
        rate_cons = -float(np.dot(self.eta_tilde, self.grid.apply_delta_v(self.fstar)))
        rate_diss = float(np.dot(self.eta_tilde, self.grid.apply_delta_v(self.diss)))
        return rate_cons, rate_diss

    def projection_error(self):
        return self.grid.norm(self.u_r - self.u_eval) / self.grid.norm(self.u_r)


def entropy_project(state, manifold, model, grid):
    """
    :returns: (u_tilde, eta_tilde) with eta_tilde = J J^dagger eta(u_r) and u_tilde = u(eta_tilde)
    """

    manifold = _lifted(state, manifold, model, grid)
    coords = state.coords
    u_r = manifold.decode(coords)
    eta_r = grid.flatten(model.entropy_variables(grid.blocks(u_r)))
    eta_tilde = TangentSolver(manifold.jacobian(coords), grid).project(eta_r)
    u_tilde = grid.flatten(model.entropy_variables_inverse(grid.blocks(eta_tilde)))
    return u_tilde, eta_tilde


def rom_rhs_generic(state, manifold, model, grid, spec):
    """da/dt = J^+ (-Delta_v f*(u_r) + Delta_v D(u_r) Delta_i eta_r)"""
    return _RomTerms(state, manifold, model, grid, spec, "generic").rhs()


def rom_rhs_entropy_stable(state, manifold, model, grid, spec):
    """The generic right-hand side evaluated at the entropy projected state, with J at the unprojected state"""
    return _RomTerms(state, manifold, model, grid, spec, "entropy_stable").rhs()


def rom_entropy_rate_split(state, manifold, model, grid, spec, variant):
    """
    Conservative and dissipative parts of dS_r/dt, both taken against the projected entropy variables
    eta_tilde = J J^dagger eta_r so that they sum to eta_r^T Omega_h J da/dt for either variant.
    """

    return _RomTerms(state, manifold, model, grid, spec, variant).rates()


def entropy_projection_residual(state, manifold, model, grid):
    """
    Size of the part of eta_r outside the tangent space and the entropy error bound it implies.

    :returns: (|(I - J J^dagger) eta_r|_Omega, max_i |(d eta / d u)^-1 (u_i)|_2 times that residual)
    """

    manifold = _lifted(state, manifold, model, grid)
    coords = state.coords
    u_r = manifold.decode(coords)
    u_blocks = grid.blocks(u_r)
    eta_r = grid.flatten(model.entropy_variables(u_blocks))
    residual = grid.norm(eta_r - TangentSolver(manifold.jacobian(coords), grid).project(eta_r))
    inverse_hessian = np.moveaxis(model.entropy_hessian_inverse(u_blocks), (0, 1), (-2, -1))
    hessian_norm = float(np.max(np.linalg.norm(inverse_hessian, ord=2, axis=(-2, -1))))
    return residual, hessian_norm * residual


def initial_coords(X, basis, tse, shift=None):
    """a_0 = Phi^T (x_0 - u_bar), alpha_0 = 0 when tse"""
    data = X.data if hasattr(X, "data") else np.asarray(X, dtype=float)
    if data.ndim != 2 or data.shape[1] == 0:
        raise ContractError("Need a non-empty snapshot matrix")
    x0 = data[:, 0] if shift is None else data[:, 0] - np.asarray(shift, dtype=float)
    a0 = np.asarray(basis, dtype=float).T @ x0
    return RomState(a0, 0.0 if tse else None)


def run_rom(config, initial):
    """
    Integrate the ROM with RK4 and record the trace. Numerical failures end the run and are recorded in the trace
    instead of being raised.
    """

    config.validate()
    if config.tse and initial.alpha is None:
        initial = RomState(initial.a, 0.0)
    manifold = config.manifold
    if config.tse and not isinstance(manifold, TseManifold):
        manifold = TseManifold(manifold, config.model, config.grid)
    n_steps = step_count(config.dt, config.t_end)
    stride = int(config.trace_stride)
    entropy_stable = config.variant == "entropy_stable"

    def terms(q):
        return _RomTerms(RomState.from_coords(q, config.tse), manifold, config.model, config.grid, config.spec,
                         config.variant)

    def rhs(q):
        return terms(q).rhs()

    logger.info("Running %s ROM (tse=%s) on a %s manifold of dimension %i, %i steps" %
                (config.variant, config.tse, config.manifold.kind, config.manifold.dim, n_steps))
    records = []
    coords_out = []
    coord_times = []
    status, fail_time, fail_reason = "ok", None, None
    q = initial.coords
    start = time.perf_counter()
    for k in range(n_steps + 1):
        t = k * config.dt
        try:
            if not np.all(np.isfinite(q)):
                raise NumericsError("Non-finite reduced coordinates")
            current = terms(q)
            rate_cons, rate_diss = current.rates()
            records.append((t, current.entropy, rate_cons, rate_diss,
                            current.projection_error() if entropy_stable else np.nan,
                            q[-1] if config.tse else np.nan))
            if k % stride == 0:
                coords_out.append(q.copy())
                coord_times.append(t)
            if k == n_steps:
                break
            q = rk4_step(q, config.dt, rhs, k1=current.rhs())
        except NumericsError as e:
            status, fail_time = "failed", t
            fail_reason = "non_finite" if type(e) is NumericsError else e.reason
            logger.error("ROM failed at t=%.6g: %s (%s)" % (t, fail_reason, e))
            break
    t_online = time.perf_counter() - start

    dim = manifold.dim
    return RomTrace(pd.DataFrame(records, columns=ROM_TRACE_COLUMNS),
                    np.asarray(coords_out).reshape(-1, dim), np.asarray(coord_times),
                    status=status, fail_time=fail_time, fail_reason=fail_reason, t_online=t_online)
