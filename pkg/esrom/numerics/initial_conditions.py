"""
This code contains the named initial conditions of the bundled experiments, sampled at cell centers
"""

import numpy as np

from esrom.errors import ContractError


def burgers_sine(x, offset=1.0, amplitude=1.0, wavenumber=1.0):
    return np.stack([amplitude * np.sin(2.0 * np.pi * wavenumber * x) + offset])


def sw_dambreak(x, h_inside=1.5, h_outside=1.0, half_width=0.2):
    h = np.where(np.abs(x) < half_width, h_inside, h_outside)
    return np.stack([h, np.zeros_like(x)])


def sw_perturbation(x, base=1.0, amplitude=0.1, sharpness=100.0):
    h = base + amplitude * np.exp(-sharpness * x * x)
    return np.stack([h, np.zeros_like(x)])


def euler_sod_periodic(x, left=0.25, right=0.75, rho_inside=1.0, p_inside=1.0, rho_outside=0.125,
                       p_outside=0.1, gamma=1.4):
    inside = (x > left) & (x < right)
    rho = np.where(inside, rho_inside, rho_outside)
    p = np.where(inside, p_inside, p_outside)
    return np.stack([rho, np.zeros_like(x), p / (gamma - 1.0)])


# name -> (function, model it belongs to)
INITIAL_CONDITIONS = {
    "burgers_sine": (burgers_sine, "burgers"),
    "sw_dambreak": (sw_dambreak, "shallow_water"),
    "sw_perturbation": (sw_perturbation, "shallow_water"),
    "euler_sod_periodic": (euler_sod_periodic, "euler"),
}


def ic_parameters(name):
    func, _ = INITIAL_CONDITIONS[name]
    code = func.__code__
    return code.co_varnames[1:code.co_argcount]


def build_initial_condition(name, model, params=None):
    """
    Look up a named initial condition and bind its parameters.

    :returns: function mapping cell centers to an (n, N) array of conserved variables
    """

    if name not in INITIAL_CONDITIONS:
        raise ContractError("Unknown initial condition \"%s\", expected one of %s" % (name, tuple(INITIAL_CONDITIONS)))
    func, model_name = INITIAL_CONDITIONS[name]
    if model.name != model_name:
        raise ContractError("Initial condition %s is defined for %s, not %s" % (name, model_name, model.name))
    params = dict(params or {})
    unknown = set(params) - set(ic_parameters(name))
    if unknown:
        raise ContractError("Unknown parameters for initial condition %s: %s" % (name, sorted(unknown)))
    if name == "euler_sod_periodic":
        params.setdefault("gamma", model.gamma)

    def ic(x):
        return func(np.asarray(x, dtype=float), **params)

    ic.__name__ = name
    return ic
