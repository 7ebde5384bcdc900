"""
This code contains the conservation law models (Burgers, shallow water, Euler) with their entropy machinery,
entropy conservative two-point fluxes and entropy dissipation operators.

All state arrays carry the conserved variables on the leading axis, so a single cell is a length-n vector and a
whole grid is an (n, N) array. Every method is vectorized over the trailing axes.
"""

import logging
from dataclasses import dataclass

import numpy as np

from esrom.errors import AdmissibilityError, ContractError, InadmissibleProjectionError

logger = logging.getLogger("esrom")

DISSIPATION_KINDS = ("none", "llf", "roe1", "tecno2_minmod")


@dataclass(frozen=True)
class DissipationSpec:
    kind: str = "none"

    def __post_init__(self):
        if self.kind not in DISSIPATION_KINDS:
            raise ContractError("Unknown dissipation kind \"%s\", expected one of %s" % (self.kind,
                                                                                         DISSIPATION_KINDS))

    def validate_for(self, model):
        if self.kind == "llf" and model.n_vars != 1:
            raise ContractError("llf dissipation is only available for scalar models, not %s" % model.name)
        if self.kind in ("roe1", "tecno2_minmod") and not model.has_eigenstructure:
            raise ContractError("%s dissipation needs an eigenstructure, which %s does not provide" %
                                (self.kind, model.name))
        return self


def minmod(a, b):
    """sign(a) * min(|a|, |b|) where the signs agree, zero otherwise"""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    same = np.sign(a) == np.sign(b)
    out = np.where(same, np.sign(a) * np.minimum(np.abs(a), np.abs(b)), 0.0)
    return out if out.ndim else float(out)


def log_mean(a_l, a_r):
    """
    Logarithmic mean (a_l - a_r) / (ln a_l - ln a_r), stable for nearly equal arguments.

    With zeta = a_l / a_r, f = (zeta - 1) / (zeta + 1) and u = f^2 the mean is (a_l + a_r) / (2 F) where
    F = ln(zeta) / (2 f); for u < 1e-2 F is replaced by its series 1 + u/3 + u^2/5 + ... truncated after u^6/13.
    """

    a_l = np.asarray(a_l, dtype=float)
    a_r = np.asarray(a_r, dtype=float)
    if np.any(~(a_l > 0.0)) or np.any(~(a_r > 0.0)):
        raise ContractError("Logarithmic mean needs strictly positive arguments")
    zeta = a_l / a_r
    f = (zeta - 1.0) / (zeta + 1.0)
    u = f * f
    small = u < 1e-2
    series = 1.0 + u * (1.0 / 3.0 + u * (1.0 / 5.0 + u * (1.0 / 7.0 + u * (1.0 / 9.0 + u * (1.0 / 11.0 + u / 13.0)))))
    f_safe = np.where(small, 1.0, f)
    exact = np.log(np.where(small, np.e, zeta)) / (2.0 * f_safe)
    big_f = np.where(small, series, exact)
    out = (a_l + a_r) / (2.0 * big_f)
    return out if out.ndim else float(out)


def _matvec(mat, vec):
    # (n, n, ...) x (n, ...) -> (n, ...)
    return np.einsum("ij...,j...->i...", mat, vec)


def _rmatvec(mat, vec):
    # transpose(mat) x vec
    return np.einsum("ji...,j...->i...", mat, vec)


class ConservationLaw:
    """Base class for 1-D systems of conservation laws u_t + f(u)_x = 0 with a convex entropy"""

    name = ""
    n_vars = 0
    has_eigenstructure = False

    @property
    def params(self):
        return {}

    def _as_state(self, u):
        u = np.asarray(u, dtype=float)
        if u.shape[:1] != (self.n_vars,):
            raise ContractError("%s states need %i variables on the leading axis, got shape %s" %
                                (self.name, self.n_vars, u.shape))
        return u

    def admissible(self, u):
        """Boolean mask over the trailing axes"""
        u = self._as_state(u)
        return np.all(np.isfinite(u), axis=0)

    def check_admissible(self, u):
        u = self._as_state(u)
        mask = np.asarray(self.admissible(u))
        if not np.all(mask):
            cells = np.flatnonzero(~mask.reshape(-1))
            values = u.reshape(self.n_vars, -1)[:, cells[:5]]
            raise AdmissibilityError("Inadmissible %s state in %i cell(s), first at %s: %s" %
                                     (self.name, cells.size, cells[0], values[:, 0].tolist()),
                                     cells=cells.tolist(), values=values)
        return u

    def flux(self, u):
        raise NotImplementedError

    def entropy(self, u):
        raise NotImplementedError

    def entropy_variables(self, u):
        raise NotImplementedError

    def entropy_variables_inverse(self, eta):
        raise NotImplementedError

    def flux_potential(self, u):
        raise NotImplementedError

    def ec_flux(self, u_l, u_r):
        raise NotImplementedError

    def max_wavespeed(self, u):
        raise NotImplementedError

    def entropy_hessian(self, u):
        """d eta / d u as (n, n, ...) blocks"""
        raise NotImplementedError

    def entropy_hessian_inverse(self, u):
        """d u / d eta as (n, n, ...) blocks"""
        raise NotImplementedError

    def scaled_eigenvectors(self, u):
        """Eigenvectors R of df/du scaled so that R R^T = du/deta, and the eigenvalues"""
        raise NotImplementedError

    def dissipation_apply(self, u_l, u_r, delta_eta, spec):
        """
        Apply the interface dissipation matrix D_{i+1/2} to an entropy variable jump.

        D carries the factor 1/2 of the Rusanov convention f* - 1/2 D Delta eta: llf is 1/2 max(|u_l|, |u_r|) and
        roe1 is 1/2 R|Lambda|R^T.

        For tecno2_minmod the jump passed here is taken as already reconstructed, so the pair operator reduces
        to 1/2 R|Lambda|R^T; the reconstruction itself lives in interface_dissipation which sees the neighbours.
        """

        spec.validate_for(self)
        u_l = self.check_admissible(u_l)
        u_r = self.check_admissible(u_r)
        delta_eta = np.asarray(delta_eta, dtype=float)
        if spec.kind == "none":
            return np.zeros(np.broadcast(u_l, delta_eta).shape)
        if spec.kind == "llf":
            return 0.5 * np.maximum(np.abs(u_l), np.abs(u_r)) * delta_eta
        rmat, lam = self.scaled_eigenvectors(0.5 * (u_l + u_r))
        return _matvec(rmat, 0.5 * np.abs(lam) * _rmatvec(rmat, delta_eta))

    def interface_dissipation(self, u, eta, spec):
        """
        Dissipative interface terms D_{i+1/2} (Delta_i eta) for all interfaces of a periodic (n, N) state.

        Slot i holds interface i+1/2 between cells i and i+1.
        """

        if spec.kind == "none":
            return np.zeros_like(np.asarray(u, dtype=float))
        spec.validate_for(self)
        u_r = np.roll(u, -1, axis=-1)
        jump = np.roll(eta, -1, axis=-1) - eta
        if spec.kind in ("llf", "roe1"):
            return self.dissipation_apply(u, u_r, jump, spec)

        # tecno2_minmod: minmod reconstruction of the scaled entropy variables w = R^T eta, using the
        # eigenvectors of interface i+1/2 for the whole stencil so the reconstructed jump keeps the sign of w
        rmat, lam = self.scaled_eigenvectors(0.5 * (self.check_admissible(u) + self.check_admissible(u_r)))
        jump_left = eta - np.roll(eta, 1, axis=-1)
        jump_right = np.roll(jump, -1, axis=-1)
        w = _rmatvec(rmat, jump)
        w_left = _rmatvec(rmat, jump_left)
        w_right = _rmatvec(rmat, jump_right)
        slope_l = minmod(w, w_left)
        slope_r = minmod(w_right, w)
        reconstructed = w - 0.5 * (slope_l + slope_r)
        return _matvec(rmat, 0.5 * np.abs(lam) * reconstructed)

    def __repr__(self):
        params = ", ".join("%s=%g" % kv for kv in self.params.items())
        return "%s(%s)" % (type(self).__name__, params)


class Burgers(ConservationLaw):
    """Inviscid Burgers equation with the square entropy s = u^2 / 2"""

    name = "burgers"
    n_vars = 1

    def flux(self, u):
        u = self.check_admissible(u)
        return 0.5 * u * u

    def entropy(self, u):
        u = self.check_admissible(u)
        return 0.5 * u[0] * u[0]

    def entropy_variables(self, u):
        return self.check_admissible(u).copy()

    def entropy_variables_inverse(self, eta):
        eta = self._as_state(eta)
        if not np.all(np.isfinite(eta)):
            cells = np.flatnonzero(~np.isfinite(eta.reshape(-1)))
            raise InadmissibleProjectionError("Non-finite Burgers entropy variables", cells=cells.tolist())
        return eta.copy()

    def flux_potential(self, u):
        u = self.check_admissible(u)
        return u[0] ** 3 / 6.0

    def ec_flux(self, u_l, u_r):
        u_l = self.check_admissible(u_l)
        u_r = self.check_admissible(u_r)
        return (u_l * u_l + u_l * u_r + u_r * u_r) / 6.0

    def max_wavespeed(self, u):
        return np.abs(self.check_admissible(u)[0])

    def entropy_hessian(self, u):
        u = self.check_admissible(u)
        return np.ones((1, 1) + u.shape[1:])

    def entropy_hessian_inverse(self, u):
        return self.entropy_hessian(u)


class ShallowWater(ConservationLaw):
    """Shallow water equations in (h, hu) with the total energy entropy"""

    name = "shallow_water"
    n_vars = 2
    has_eigenstructure = True

    def __init__(self, gravity=3.0):
        if not gravity > 0.0:
            raise ContractError("Gravity must be positive, got %g" % gravity)
        self.gravity = float(gravity)

    @property
    def params(self):
        return {"gravity": self.gravity}

    def admissible(self, u):
        u = self._as_state(u)
        return np.all(np.isfinite(u), axis=0) & (u[0] > 0.0)

    def flux(self, u):
        h, hu = self.check_admissible(u)
        return np.stack([hu, hu * hu / h + 0.5 * self.gravity * h * h])

    def entropy(self, u):
        h, hu = self.check_admissible(u)
        return 0.5 * (hu * hu / h + self.gravity * h * h)

    def entropy_variables(self, u):
        h, hu = self.check_admissible(u)
        vel = hu / h
        return np.stack([self.gravity * h - 0.5 * vel * vel, vel])

    def entropy_variables_inverse(self, eta):
        eta = self._as_state(eta)
        two_gh = 2.0 * eta[0] + eta[1] * eta[1]
        bad = ~(np.isfinite(two_gh) & (two_gh > 0.0))
        if np.any(bad):
            cells = np.flatnonzero(bad.reshape(-1))
            raise InadmissibleProjectionError("Shallow water entropy variables with 2*eta_1 + eta_2^2 <= 0 in %i "
                                              "cell(s), first at %s" % (cells.size, cells[0]),
                                              cells=cells.tolist(), values=eta.reshape(2, -1)[:, cells[:5]])
        h = two_gh / (2.0 * self.gravity)
        return np.stack([h, h * eta[1]])

    def flux_potential(self, u):
        h, hu = self.check_admissible(u)
        return 0.5 * self.gravity * h * hu

    def ec_flux(self, u_l, u_r):
        h_l, hu_l = self.check_admissible(u_l)
        h_r, hu_r = self.check_admissible(u_r)
        h_avg = 0.5 * (h_l + h_r)
        v_avg = 0.5 * (hu_l / h_l + hu_r / h_r)
        h2_avg = 0.5 * (h_l * h_l + h_r * h_r)
        return np.stack([h_avg * v_avg, h_avg * v_avg * v_avg + 0.5 * self.gravity * h2_avg])

    def max_wavespeed(self, u):
        h, hu = self.check_admissible(u)
        return np.abs(hu / h) + np.sqrt(self.gravity * h)

    def entropy_hessian(self, u):
        h, hu = self.check_admissible(u)
        vel = hu / h
        return np.array([[self.gravity + vel * vel / h, -vel / h],
                         [-vel / h, 1.0 / h]])

    def entropy_hessian_inverse(self, u):
        h, hu = self.check_admissible(u)
        vel = hu / h
        one = np.ones_like(h)
        return np.array([[one, vel],
                         [vel, vel * vel + self.gravity * h]]) / self.gravity

    def scaled_eigenvectors(self, u):
        h, hu = self.check_admissible(u)
        vel = hu / h
        c = np.sqrt(self.gravity * h)
        one = np.ones_like(h)
        rmat = np.array([[one, one],
                         [vel - c, vel + c]]) / np.sqrt(2.0 * self.gravity)
        return rmat, np.stack([vel - c, vel + c])


class Euler(ConservationLaw):
    """Compressible Euler equations in (rho, rho u, E) with the entropy -rho sigma / (gamma - 1)"""

    name = "euler"
    n_vars = 3
    has_eigenstructure = True

    def __init__(self, gamma=1.4):
        if not gamma > 1.0:
            raise ContractError("gamma must exceed 1, got %g" % gamma)
        self.gamma = float(gamma)

    @property
    def params(self):
        return {"gamma": self.gamma}

    def pressure(self, u):
        rho, mom, energy = self._as_state(u)
        return (self.gamma - 1.0) * (energy - 0.5 * mom * mom / rho)

    def admissible(self, u):
        u = self._as_state(u)
        with np.errstate(divide="ignore", invalid="ignore"):
            ok = np.all(np.isfinite(u), axis=0) & (u[0] > 0.0)
            return ok & (np.where(ok, self.pressure(np.where(ok, u, 1.0)), -1.0) > 0.0)

    def _primitive(self, u):
        rho, mom, energy = self.check_admissible(u)
        vel = mom / rho
        return rho, vel, self.pressure(u)

    def flux(self, u):
        rho, vel, p = self._primitive(u)
        energy = np.asarray(u, dtype=float)[2]
        return np.stack([rho * vel, rho * vel * vel + p, (energy + p) * vel])

    def physical_entropy(self, u):
        rho, _, p = self._primitive(u)
        return np.log(p) - self.gamma * np.log(rho)

    def entropy(self, u):
        rho = np.asarray(u, dtype=float)[0]
        return -rho * self.physical_entropy(u) / (self.gamma - 1.0)

    def entropy_variables(self, u):
        rho, vel, p = self._primitive(u)
        sigma = np.log(p) - self.gamma * np.log(rho)
        beta = rho / p
        return np.stack([(self.gamma - sigma) / (self.gamma - 1.0) - 0.5 * beta * vel * vel,
                         beta * vel,
                         -beta])

    def entropy_variables_inverse(self, eta):
        eta = self._as_state(eta)
        gamma = self.gamma
        with np.errstate(all="ignore"):
            beta = -eta[2]
            valid = np.all(np.isfinite(eta), axis=0) & (beta > 0.0)
            beta_safe = np.where(valid, beta, 1.0)
            vel = np.where(valid, eta[1], 0.0) / beta_safe
            exponent = gamma / (1.0 - gamma) + np.where(valid, eta[0], 0.0) + 0.5 * vel * vel * beta_safe
            rho = np.exp(exponent) * beta_safe ** (1.0 / (1.0 - gamma))
            p = rho / beta_safe
            valid &= np.isfinite(rho) & (rho > 0.0) & np.isfinite(p) & (p > 0.0)
        if not np.all(valid):
            cells = np.flatnonzero(~valid.reshape(-1))
            raise InadmissibleProjectionError("Euler entropy variables without admissible state in %i cell(s), "
                                              "first at %s (eta_3 = %g)" %
                                              (cells.size, cells[0], eta.reshape(3, -1)[2, cells[0]]),
                                              cells=cells.tolist(), values=eta.reshape(3, -1)[:, cells[:5]])
        return np.stack([rho, rho * vel, p / (gamma - 1.0) + 0.5 * rho * vel * vel])

    def flux_potential(self, u):
        return self.check_admissible(u)[1].copy()

    def ec_flux(self, u_l, u_r):
        """Ismail-Roe entropy conservative flux in the parameter vector z = sqrt(rho / p) (1, u, p)"""
        rho_l, vel_l, p_l = self._primitive(u_l)
        rho_r, vel_r, p_r = self._primitive(u_r)
        z1_l, z1_r = np.sqrt(rho_l / p_l), np.sqrt(rho_r / p_r)
        z2_l, z2_r = z1_l * vel_l, z1_r * vel_r
        z3_l, z3_r = np.sqrt(rho_l * p_l), np.sqrt(rho_r * p_r)

        z1_avg = 0.5 * (z1_l + z1_r)
        z2_avg = 0.5 * (z2_l + z2_r)
        z3_avg = 0.5 * (z3_l + z3_r)
        z1_ln = log_mean(z1_l, z1_r)
        z3_ln = log_mean(z3_l, z3_r)

        vel_hat = z2_avg / z1_avg
        f_rho = z2_avg * z3_ln
        f_mom = z3_avg / z1_avg + vel_hat * f_rho
        f_energy = 0.5 * vel_hat * ((self.gamma + 1.0) / (self.gamma - 1.0) * z3_ln / z1_ln + f_mom)
        return np.stack([f_rho, f_mom, f_energy])

    def max_wavespeed(self, u):
        rho, vel, p = self._primitive(u)
        return np.abs(vel) + np.sqrt(self.gamma * p / rho)

    def entropy_hessian_inverse(self, u):
        rho, vel, p = self._primitive(u)
        energy = np.asarray(u, dtype=float)[2]
        enthalpy = (energy + p) / rho
        sound2 = self.gamma * p / rho
        return np.array([[rho, rho * vel, energy],
                         [rho * vel, rho * vel * vel + p, rho * vel * enthalpy],
                         [energy, rho * vel * enthalpy, rho * enthalpy * enthalpy - sound2 * p / (self.gamma - 1.0)]])

    def entropy_hessian(self, u):
        # inverse of the closed-form du/deta, batched over cells
        dudeta = self.entropy_hessian_inverse(u)
        stacked = np.moveaxis(dudeta, (0, 1), (-2, -1))
        return np.moveaxis(np.linalg.inv(stacked), (-2, -1), (0, 1))

    def scaled_eigenvectors(self, u):
        rho, vel, p = self._primitive(u)
        energy = np.asarray(u, dtype=float)[2]
        enthalpy = (energy + p) / rho
        c = np.sqrt(self.gamma * p / rho)
        one = np.ones_like(rho)
        rmat = np.array([[one, one, one],
                         [vel - c, vel, vel + c],
                         [enthalpy - vel * c, 0.5 * vel * vel, enthalpy + vel * c]])
        scale = np.sqrt(np.array([rho / (2.0 * self.gamma), (self.gamma - 1.0) * rho / self.gamma,
                                  rho / (2.0 * self.gamma)]))
        return rmat * scale[np.newaxis], np.stack([vel - c, vel, vel + c])


MODELS = {
    "burgers": Burgers,
    "shallow_water": ShallowWater,
    "euler": Euler,
}


def build_model(name, gravity=3.0, gamma=1.4):
    if name == "burgers":
        return Burgers()
    if name == "shallow_water":
        return ShallowWater(gravity=gravity)
    if name == "euler":
        return Euler(gamma=gamma)
    raise ContractError("Unknown model \"%s\", expected one of %s" % (name, tuple(MODELS)))
