"""
This code contains the decoders phi(a) with Jacobians J(a) used by the reduced order models: linear, quadratic and
rational quadratic manifolds, the tangent space enrichment wrapper and the Omega_h weighted pseudo-inverse
"""

import logging

import numpy as np
import scipy.linalg

from esrom.errors import ContractError, SingularTangentSpaceError

logger = logging.getLogger("esrom")

# R-factor condition estimate above which the QR solve is replaced by an SVD solve
QR_CONDITION_LIMIT = 1e12


def symmetric_features(a):
    """Half-vectorized symmetric Kronecker product [a_i a_j for i <= j] along the last axis"""
    a = np.asarray(a, dtype=float)
    rows, cols = np.triu_indices(a.shape[-1])
    return a[..., rows] * a[..., cols]


def symmetric_features_jacobian(a):
    """d k(a) / d a as a (r(r+1)/2, r) matrix"""
    a = np.asarray(a, dtype=float)
    r = a.size
    rows, cols = np.triu_indices(r)
    jac = np.zeros((rows.size, r))
    feature = np.arange(rows.size)
    np.add.at(jac, (feature, rows), a[cols])
    np.add.at(jac, (feature, cols), a[rows])
    return jac


class Manifold:
    """Decoder phi: R^dim -> R^{N_h}"""

    kind = ""

    @property
    def n_dof(self):
        raise NotImplementedError

    @property
    def dim(self):
        raise NotImplementedError

    def _coords(self, a):
        a = np.asarray(a, dtype=float).reshape(-1)
        if a.size != self.dim:
            raise ContractError("%s manifold expects %i coordinates, got %i" % (self.kind, self.dim, a.size))
        return a

    def decode(self, a):
        raise NotImplementedError

    def jacobian(self, a):
        raise NotImplementedError

    def decode_many(self, coords):
        """Decode each row of an (m, dim) coordinate matrix, returning N_h x m"""
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        return np.column_stack([self.decode(row) for row in coords])


class LinearManifold(Manifold):

    kind = "linear"

    def __init__(self, basis, shift=None):
        basis = np.asarray(basis, dtype=float)
        if basis.ndim != 2:
            raise ContractError("Basis must be a matrix, got shape %s" % (basis.shape,))
        self.basis = basis
        self.shift = np.zeros(basis.shape[0]) if shift is None else np.asarray(shift, dtype=float)
        if self.shift.shape != (basis.shape[0],):
            raise ContractError("Shift must have length %i" % basis.shape[0])

    @property
    def n_dof(self):
        return self.basis.shape[0]

    @property
    def dim(self):
        return self.basis.shape[1]

    def decode(self, a):
        return self.shift + self.basis @ self._coords(a)

    def decode_many(self, coords):
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        return self.shift[:, np.newaxis] + self.basis @ coords.T

    def jacobian(self, a):
        self._coords(a)
        return self.basis.copy()

    def is_orthonormal(self, grid, tol=1e-10):
        gram = self.basis.T @ grid.mass_weight(self.basis)
        return bool(np.max(np.abs(gram - np.eye(self.dim)), initial=0.0) <= tol)


class QuadraticManifold(Manifold):
    """phi(a) = shift + Phi a + W k(a) with k the symmetric quadratic features of a"""

    kind = "quadratic"

    def __init__(self, basis, quadratic, shift=None):
        self.basis = np.asarray(basis, dtype=float)
        self.quadratic = np.asarray(quadratic, dtype=float)
        n_dof, r = self.basis.shape
        if self.quadratic.shape != (n_dof, r * (r + 1) // 2):
            raise ContractError("Quadratic coefficients must be %i x %i, got %s" %
                                (n_dof, r * (r + 1) // 2, self.quadratic.shape))
        self.shift = np.zeros(n_dof) if shift is None else np.asarray(shift, dtype=float)

    @property
    def n_dof(self):
        return self.basis.shape[0]

    @property
    def dim(self):
        return self.basis.shape[1]

    def decode(self, a):
        a = self._coords(a)
        return self.shift + self.basis @ a + self.quadratic @ symmetric_features(a)

    def decode_many(self, coords):
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        return self.shift[:, np.newaxis] + self.basis @ coords.T + self.quadratic @ symmetric_features(coords).T

    def jacobian(self, a):
        a = self._coords(a)
        return self.basis + self.quadratic @ symmetric_features_jacobian(a)


class RationalQuadraticManifold(Manifold):
    """
    Row i: phi_i(a) = (a^T H2_i a + H1_i a + u_ref_i) / (a^T L_i L_i^T a + 1).

    The Cholesky factors L_i are stored rather than G_i = L_i L_i^T, and the denominator is evaluated as
    1 + |L_i^T a|^2, so it is at least one for every real a.
    """

    kind = "rational"

    def __init__(self, quadratic, linear, offset, cholesky):
        quadratic = np.asarray(quadratic, dtype=float)
        self.linear = np.asarray(linear, dtype=float)
        self.offset = np.asarray(offset, dtype=float)
        cholesky = np.asarray(cholesky, dtype=float)
        n_dof, r = self.linear.shape
        if quadratic.shape != (n_dof, r, r) or cholesky.shape != (n_dof, r, r) or self.offset.shape != (n_dof,):
            raise ContractError("Inconsistent rational manifold coefficient shapes")
        self.quadratic = 0.5 * (quadratic + np.swapaxes(quadratic, 1, 2))
        self.cholesky = np.tril(cholesky)

    @property
    def n_dof(self):
        return self.linear.shape[0]

    @property
    def dim(self):
        return self.linear.shape[1]

    @property
    def gram(self):
        return self.cholesky @ np.swapaxes(self.cholesky, 1, 2)

    def _parts(self, a):
        numerator = np.einsum("ijk,j,k->i", self.quadratic, a, a) + self.linear @ a + self.offset
        z = np.einsum("ijk,j->ik", self.cholesky, a)
        return numerator, z, 1.0 + np.sum(z * z, axis=1)

    def denominators(self, a):
        return self._parts(self._coords(a))[2]

    def decode(self, a):
        numerator, _, denominator = self._parts(self._coords(a))
        return numerator / denominator

    def jacobian(self, a):
        a = self._coords(a)
        numerator, z, denominator = self._parts(a)
        gram_a = np.einsum("ijk,ik->ij", self.cholesky, z)
        dnum = 2.0 * np.einsum("ijk,k->ij", self.quadratic, a) + self.linear
        return dnum / denominator[:, np.newaxis] - \
            (2.0 * numerator / (denominator * denominator))[:, np.newaxis] * gram_a


class TseManifold(Manifold):
    """
    Tangent space enrichment: phi_hat(a, alpha) = phi(a) + eta(phi(a)) alpha.

    Coordinates are the base coordinates with alpha appended as the last entry.
    """

    def __init__(self, base, model, grid):
        if base.n_dof != grid.n_dof:
            raise ContractError("Manifold has %i DOFs but the grid has %i" % (base.n_dof, grid.n_dof))
        self.base = base
        self.model = model
        self.grid = grid
        self.kind = "tse_" + base.kind

    @property
    def n_dof(self):
        return self.base.n_dof

    @property
    def dim(self):
        return self.base.dim + 1

    def _split(self, q):
        q = self._coords(q)
        return q[:-1], float(q[-1])

    def _eta(self, phi):
        return self.grid.flatten(self.model.entropy_variables(self.grid.blocks(phi)))

    def tse_decode(self, a, alpha):
        phi = self.base.decode(a)
        eta = self._eta(phi)
        if alpha == 0.0:
            return phi
        return phi + alpha * eta

    def tse_jacobian(self, a, alpha):
        jac = self.base.jacobian(a)
        phi = self.base.decode(a)
        eta = self._eta(phi)
        if alpha != 0.0:
            hessian = self.model.entropy_hessian(self.grid.blocks(phi))
            jac_blocks = self.grid.blocks(jac)
            jac = jac + alpha * self.grid.flatten(np.einsum("klc,lcr->kcr", hessian, jac_blocks))
        return np.column_stack([jac, eta])

    def decode(self, q):
        a, alpha = self._split(q)
        return self.tse_decode(a, alpha)

    def jacobian(self, q):
        a, alpha = self._split(q)
        return self.tse_jacobian(a, alpha)


def weighted_orthonormal_basis(basis, grid):
    """Omega_h-orthonormal basis spanning the same space as the columns of basis"""
    basis = np.asarray(basis, dtype=float)
    if basis.shape[1] == 0:
        return basis.copy()
    q, _ = scipy.linalg.qr(grid.sqrt_mass_weight(basis), mode="economic")
    return q / np.sqrt(grid.mass)[:, np.newaxis]


class TangentSolver:
    """
    Factorization of Omega_h^{1/2} J reused for J^dagger y = (J^T Omega_h J)^-1 J^T Omega_h y and
    J^+ y = (J^T Omega_h J)^-1 J^T y.
    """

    def __init__(self, jacobian, grid):
        jacobian = np.asarray(jacobian, dtype=float)
        if jacobian.ndim != 2 or jacobian.shape[0] != grid.n_dof:
            raise ContractError("Jacobian must have %i rows, got shape %s" % (grid.n_dof, jacobian.shape))
        if jacobian.shape[1] > jacobian.shape[0]:
            raise ContractError("Jacobian has more columns (%i) than rows (%i)" % jacobian.shape[::-1])
        self.jacobian = jacobian
        self.grid = grid
        self._sqrt_mass = np.sqrt(grid.mass)
        weighted = jacobian * self._sqrt_mass[:, np.newaxis]
        if not np.all(np.isfinite(weighted)):
            raise SingularTangentSpaceError("Non-finite manifold Jacobian", condition=np.inf)

        self._q, self._r = scipy.linalg.qr(weighted, mode="economic")
        with np.errstate(divide="ignore"):
            self.condition = float(np.linalg.cond(self._r)) if jacobian.shape[1] else 1.0
        self._svd = None
        if not np.isfinite(self.condition) or self.condition > QR_CONDITION_LIMIT:
            u, s, vt = scipy.linalg.svd(weighted, full_matrices=False)
            tol = s[0] * max(weighted.shape) * np.finfo(float).eps if s.size else 0.0
            if s.size and (s[0] == 0.0 or s[-1] <= tol):
                condition = np.inf if s[-1] == 0.0 else float(s[0] / s[-1])
                raise SingularTangentSpaceError("Rank deficient manifold Jacobian (condition estimate %.3g)" %
                                                condition, condition=condition)
            self.condition = float(s[0] / s[-1])
            logger.debug("Tangent solve falls back to SVD, condition estimate %.3g" % self.condition)
            self._svd = (u, s, vt)

    def _solve(self, weighted_rhs):
        if self._svd is not None:
            u, s, vt = self._svd
            return vt.T @ ((u.T @ weighted_rhs) / s)
        return scipy.linalg.solve_triangular(self._r, self._q.T @ weighted_rhs)

    def dagger(self, y):
        return self._solve(self._sqrt_mass * np.asarray(y, dtype=float))

    def plus(self, y):
        return self._solve(np.asarray(y, dtype=float) / self._sqrt_mass)

    def project(self, y):
        """Omega_h-orthogonal projection J J^dagger y onto the tangent space"""
        return self.jacobian @ self.dagger(y)


def pinv_apply(jacobian, grid, y):
    return TangentSolver(jacobian, grid).dagger(y)


def pinv_plus_apply(jacobian, grid, y):
    return TangentSolver(jacobian, grid).plus(y)
