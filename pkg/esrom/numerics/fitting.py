"""
This code contains the manifold fitting routines: POD basis, snapshot augmentation, ridge regularized quadratic
manifolds and row-wise Levenberg-Marquardt fits of rational quadratic manifolds
"""

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
import pandas as pd
import scipy.linalg
import sklearn.utils.extmath as sklmath

from esrom.errors import ContractError, FitError
from esrom.numerics.fom import SnapshotSet
from esrom.numerics.manifold import (LinearManifold, QuadraticManifold, RationalQuadraticManifold,
                                     symmetric_features)

logger = logging.getLogger("esrom")

FIT_REPORT_COLUMNS = ["row", "iters", "final_residual", "fallback_used"]
MANIFOLD_KINDS = ("linear", "quadratic", "rational")
INITIAL_GUESSES = ("nested", "ones")
# reference state u_bar that fitted coordinates are measured from: zero, the temporal mean or the first snapshot
SHIFTS = ("zero", "mean", "initial")

# Scale of the lower triangular start for the denominator factor in normalized coordinates. Small enough that the
# nested start reproduces the quadratic row, nonzero so the denominator has a gradient.
INITIAL_CHOLESKY_SCALE = 1e-4
MAX_DAMPING = 1e16
MIN_DAMPING = 1e-12


@dataclass
class FitConfig:
    r: int
    lam: float = 0.5
    max_iters: int = 200
    gradient_tol: float = 1e-10
    step_tol: float = 1e-12
    initial_damping: float = 1e-3
    parallel_rows: int = 0
    warm_start: bool = True
    initial_guess: str = "nested"
    shift: str = "zero"

    def validate(self, n_dof=None, n_s=None):
        if int(self.r) < 1:
            raise ContractError("Reduced dimension r must be at least 1, got %s" % self.r)
        if n_dof is not None and n_s is not None and self.r > min(n_dof, n_s):
            raise ContractError("Reduced dimension r=%i exceeds min(N_h, n_s) = %i" % (self.r, min(n_dof, n_s)))
        if self.lam < 0.0:
            raise ContractError("Regularization lambda must be non-negative, got %g" % self.lam)
        if min(self.gradient_tol, self.step_tol, self.initial_damping) <= 0.0 or self.max_iters < 1:
            raise ContractError("Levenberg-Marquardt tolerances, damping and iteration count must be positive")
        if self.parallel_rows < 0:
            raise ContractError("parallel_rows must be >= 0, got %s" % self.parallel_rows)
        if self.initial_guess not in INITIAL_GUESSES:
            raise ContractError("Unknown initial guess \"%s\", expected one of %s" % (self.initial_guess,
                                                                                      INITIAL_GUESSES))
        if self.shift not in SHIFTS:
            raise ContractError("Unknown shift \"%s\", expected one of %s" % (self.shift, SHIFTS))
        return self


def _data(X):
    return X.data if isinstance(X, SnapshotSet) else np.asarray(X, dtype=float)


def pod_basis(X, r):
    """
    Leading r left singular vectors of the snapshot matrix (Euclidean SVD).

    :returns: (basis N_h x r, all singular values)
    """

    data = _data(X)
    if not 1 <= int(r) <= min(data.shape):
        raise ContractError("Cannot extract %s POD modes from a %i x %i snapshot matrix" % (r, *data.shape))
    u, s, vt = scipy.linalg.svd(data, full_matrices=False)
    # deterministic signs independent of the LAPACK driver
    u, vt = sklmath.svd_flip(u, vt)
    return u[:, :int(r)].copy(), s


def snapshot_shift(X, kind):
    data = _data(X)
    if kind == "zero":
        return np.zeros(data.shape[0])
    if kind == "mean":
        return data.mean(axis=1)
    if kind == "initial":
        return data[:, 0].copy()
    raise ContractError("Unknown shift \"%s\", expected one of %s" % (kind, SHIFTS))


def coordinates(X, basis, shift=None):
    """A = (Phi^T (X - u_bar))^T, one row of generalized coordinates per snapshot"""
    data = _data(X)
    basis = np.asarray(basis, dtype=float)
    if basis.shape[0] != data.shape[0]:
        raise ContractError("Basis has %i rows but snapshots have %i" % (basis.shape[0], data.shape[0]))
    if shift is not None:
        data = data - np.asarray(shift, dtype=float)[:, np.newaxis]
    return (basis.T @ data).T


def augment_snapshots(X, model):
    """[X, eta(X)] for the entropy variable augmented linear basis"""
    grid = X.grid
    eta = np.column_stack([grid.flatten(model.entropy_variables(grid.blocks(X.data[:, j])))
                           for j in range(X.n_s)])
    return SnapshotSet(np.hstack([X.data, eta]), np.concatenate([X.times, X.times]), grid,
                       model_name=X.model_name, model_params=X.model_params, augmented=True)


def fit_quadratic(X, basis, config, shift=None):
    """
    Ridge regression of the residual X - u_bar - Phi A^T on the symmetric quadratic features of A:
    W = argmin |R - W K(A)^T|_F^2 + lam |W|_F^2, the same normal equations for every row.

    :param shift: u_bar; taken from config.shift when omitted
    """

    data = _data(X)
    shift = snapshot_shift(data, config.shift) if shift is None else np.asarray(shift, dtype=float)
    coords = coordinates(data, basis, shift)
    features = symmetric_features(coords)
    residual = data - shift[:, np.newaxis] - basis @ coords.T
    if config.lam > 0.0:
        gram = features.T @ features + config.lam * np.eye(features.shape[1])
        quadratic = scipy.linalg.solve(gram, features.T @ residual.T, assume_a="pos").T
    else:
        quadratic = scipy.linalg.lstsq(features, residual.T)[0].T
    return QuadraticManifold(basis, quadratic, shift=shift)


class _RowModel:
    """Rational quadratic model of one DOF row in normalized coordinates, with analytic Jacobian"""

    def __init__(self, coords):
        self.coords = coords
        self.features = symmetric_features(coords)
        r = coords.shape[1]
        self.r = r
        self.n_quad = self.features.shape[1]
        self.tril = np.tril_indices(r)
        self.n_params = 2 * self.n_quad + r + 1

    def split(self, theta):
        q, r = self.n_quad, self.r
        return theta[:q], theta[q:q + r], theta[q + r], theta[q + r + 1:]

    def cholesky(self, lower):
        mat = np.zeros((self.r, self.r))
        mat[self.tril] = lower
        return mat

    def evaluate(self, theta, with_jacobian=False):
        quad, lin, offset, lower = self.split(theta)
        numerator = self.features @ quad + self.coords @ lin + offset
        z = self.coords @ self.cholesky(lower)
        denominator = 1.0 + np.sum(z * z, axis=1)
        value = numerator / denominator
        if not with_jacobian:
            return value
        inv = 1.0 / denominator
        rows, cols = self.tril
        dlower = (-2.0 * value * inv)[:, np.newaxis] * z[:, cols] * self.coords[:, rows]
        jac = np.hstack([self.features * inv[:, np.newaxis], self.coords * inv[:, np.newaxis],
                         inv[:, np.newaxis], dlower])
        return value, jac


def _levenberg_marquardt(row_model, y, theta, config):
    """
    Minimize |y - m(theta)|^2 with multiplicative damping updates; only steps that decrease the residual are
    accepted, so the returned residual never exceeds the starting one.

    :returns: (theta, iterations, residual norm)
    """

    residual = y - row_model.evaluate(theta)
    cost = float(residual @ residual)
    damping = config.initial_damping
    identity = np.eye(row_model.n_params)
    iters = 0
    for iters in range(1, config.max_iters + 1):
        value, jac = row_model.evaluate(theta, with_jacobian=True)
        residual = y - value
        grad = jac.T @ residual
        if np.max(np.abs(grad)) <= config.gradient_tol:
            break
        normal = jac.T @ jac
        accepted = False
        while damping <= MAX_DAMPING:
            try:
                step = scipy.linalg.cho_solve(scipy.linalg.cho_factor(normal + damping * identity), grad)
            except np.linalg.LinAlgError:
                damping *= 10.0
                continue
            trial = theta + step
            trial_residual = y - row_model.evaluate(trial)
            trial_cost = float(trial_residual @ trial_residual)
            if np.isfinite(trial_cost) and trial_cost < cost:
                theta, cost = trial, trial_cost
                damping = max(damping / 10.0, MIN_DAMPING)
                accepted = True
                break
            damping *= 10.0
        if not accepted:
            break
        if np.linalg.norm(step) <= config.step_tol * (np.linalg.norm(theta) + config.step_tol):
            break
    return theta, iters, float(np.sqrt(cost))


def _ones_start(row_model, y):
    theta = np.ones(row_model.n_params)
    theta[row_model.n_quad + row_model.r] = float(np.mean(y))
    return theta


def _nested_start(row_model, quad, lin, offset):
    lower = np.full(row_model.n_quad, INITIAL_CHOLESKY_SCALE)
    return np.concatenate([quad, lin, [offset], lower])


def _fit_row(args):
    """Fit one row; runs in worker processes in parallel mode"""
    row, y, coords, nested, warm, config = args
    row_model = _RowModel(coords)
    starts = []
    if config.initial_guess == "ones":
        starts.append(_ones_start(row_model, y))
    else:
        starts.append(_nested_start(row_model, *nested))
    if warm is not None:
        starts.append(warm)

    best = None
    for theta in starts:
        residual = y - row_model.evaluate(theta)
        cost = float(residual @ residual)
        if np.isfinite(cost) and (best is None or cost < best[1]):
            best = (theta, cost)

    fallback = best is None
    if not fallback:
        try:
            theta, iters, final_residual = _levenberg_marquardt(row_model, y, best[0], config)
            fallback = not (np.all(np.isfinite(theta)) and np.isfinite(final_residual))
        except (np.linalg.LinAlgError, FloatingPointError, ValueError):
            fallback = True
    if fallback:
        theta = np.concatenate([nested[0], nested[1], [nested[2]], np.zeros(row_model.n_quad)])
        residual = y - row_model.evaluate(theta)
        iters, final_residual = 0, float(np.linalg.norm(residual))
    return row, theta, iters, final_residual, fallback


def fit_rational_quadratic(X, basis, config, quadratic=None, n_cells=None):
    """
    Fit a rational quadratic manifold row by row with Levenberg-Marquardt over (H, h, u, L).

    Coordinates are normalized column-wise for the optimization and the coefficients are mapped back afterwards.
    Each row starts from the nested quadratic model (or from all ones) and, in sequential mode, from the finished
    previous row of the same variable when that is better.

    :param quadratic: QuadraticManifold on the same basis used for the nested start and fallback; fitted if omitted.
        Its shift is the reference the coordinates are measured from and the start value of u_ref.
    :param n_cells: cells per variable block, used to keep warm starts inside one variable
    :returns: (RationalQuadraticManifold, pandas.DataFrame fit report)
    """

    data = _data(X)
    basis = np.asarray(basis, dtype=float)
    n_dof, n_s = data.shape
    r = basis.shape[1]
    config.validate(n_dof, n_s)
    if n_cells is None:
        n_cells = X.grid.n_cells if isinstance(X, SnapshotSet) else n_dof
    if quadratic is None:
        quadratic = fit_quadratic(data, basis, config)

    coords = coordinates(data, basis, quadratic.shift)
    scale = np.max(np.abs(coords), axis=0)
    scale[scale == 0.0] = 1.0
    normalized = coords / scale
    rows_q, cols_q = np.triu_indices(r)
    feature_scale = scale[rows_q] * scale[cols_q]

    nested = [(quadratic.quadratic[i] * feature_scale, quadratic.basis[i] * scale, float(quadratic.shift[i]))
              for i in range(n_dof)]

    start = time.perf_counter()
    logger.info("Rational fit starts from the %s guess with a %s shift" % (config.initial_guess, config.shift))
    results = [None] * n_dof
    if config.parallel_rows > 0:
        logger.info("Fitting %i rows with %i worker processes (no warm start)" % (n_dof, config.parallel_rows))
        tasks = [(i, data[i], normalized, nested[i], None, config) for i in range(n_dof)]
        with ProcessPoolExecutor(max_workers=config.parallel_rows) as pool:
            for result in pool.map(_fit_row, tasks, chunksize=max(1, n_dof // (4 * config.parallel_rows))):
                results[result[0]] = result
    else:
        previous = None
        for i in range(n_dof):
            warm = previous if (config.warm_start and i % n_cells != 0) else None
            results[i] = _fit_row((i, data[i], normalized, nested[i], warm, config))
            previous = None if results[i][4] else results[i][1]
            if i % max(1, n_dof // 10) == 0:
                logger.debug("Fitted row %i/%i: %i iterations, residual %.3e" % (i, n_dof, results[i][2],
                                                                                 results[i][3]))

    row_model = _RowModel(normalized)
    quad_coeffs = np.zeros((n_dof, r, r))
    linear = np.zeros((n_dof, r))
    offset = np.zeros(n_dof)
    cholesky = np.zeros((n_dof, r, r))
    report = []
    for i, theta, iters, final_residual, fallback in results:
        quad, lin, off, lower = row_model.split(theta)
        quad = quad / feature_scale
        quad_coeffs[i, rows_q, cols_q] = np.where(rows_q == cols_q, quad, 0.5 * quad)
        quad_coeffs[i, cols_q, rows_q] = quad_coeffs[i, rows_q, cols_q]
        linear[i] = lin / scale
        offset[i] = off
        cholesky[i] = row_model.cholesky(lower) / scale[:, np.newaxis]
        report.append((i, iters, final_residual, bool(fallback)))
        if fallback:
            logger.warning("Rational fit of row %i diverged, using the quadratic numerator without denominator" % i)

    report = pd.DataFrame(report, columns=FIT_REPORT_COLUMNS)
    if report["fallback_used"].all():
        raise FitError("Rational fit diverged on every row")
    logger.info("Rational quadratic fit of %i rows finished in %.1f s, %i fallback row(s)" %
                (n_dof, time.perf_counter() - start, int(report["fallback_used"].sum())))
    return RationalQuadraticManifold(quad_coeffs, linear, offset, cholesky), report


def reconstruction_error(manifold, X, coords):
    """
    :returns: (phi(A) - X as N_h x n_s matrix, max absolute entry)
    """

    data = _data(X)
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    if coords.shape[0] != data.shape[1]:
        raise ContractError("Coordinate matrix has %i rows but there are %i snapshots" % (coords.shape[0],
                                                                                          data.shape[1]))
    if manifold.n_dof != data.shape[0]:
        raise ContractError("Manifold has %i DOFs, snapshots have %i" % (manifold.n_dof, data.shape[0]))
    eps_xt = manifold.decode_many(coords) - data
    return eps_xt, float(np.max(np.abs(eps_xt)))


def fit_manifold(X, kind, config, model=None, augment=False):
    """
    POD basis plus the selected manifold fit.

    :param augment: build the POD basis from [X, eta(X)] (needs model)
    :returns: dict with manifold, basis, shift, singular_values, coordinates, fit report (or None), eps_xt_max,
        t_fit
    """

    if kind not in MANIFOLD_KINDS:
        raise ContractError("Unknown manifold kind \"%s\", expected one of %s" % (kind, MANIFOLD_KINDS))
    basis_source = X
    if augment:
        if model is None:
            raise ContractError("Snapshot augmentation needs the conservation law model")
        basis_source = augment_snapshots(X, model)
    config.validate(basis_source.n_dof, basis_source.n_s)

    start = time.perf_counter()
    basis, singular_values = pod_basis(basis_source, config.r)
    shift = snapshot_shift(X, config.shift)
    report = None
    if kind == "linear":
        manifold = LinearManifold(basis, shift=shift)
    elif kind == "quadratic":
        manifold = fit_quadratic(X, basis, config, shift=shift)
    else:
        manifold, report = fit_rational_quadratic(X, basis, config, quadratic=fit_quadratic(X, basis, config, shift))
    t_fit = time.perf_counter() - start

    coords = coordinates(X, basis, shift)
    _, eps_max = reconstruction_error(manifold, X, coords)
    logger.info("Fitted %s manifold with r=%i in %.2f s, eps_xt_max = %.4g" % (kind, config.r, t_fit, eps_max))
    return {
        "manifold": manifold,
        "basis": basis,
        "shift": shift,
        "singular_values": singular_values,
        "coordinates": coords,
        "fit_report": report,
        "eps_xt_max": eps_max,
        "t_fit": t_fit,
    }
