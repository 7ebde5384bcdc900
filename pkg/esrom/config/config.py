"""
This code contains the Config class that reads in a run config plus the experiment config it names, validates every
key and returns the flattened properties
"""

import hashlib
import json
import logging
import os

from esrom.errors import ConfigError
from esrom.numerics.initial_conditions import INITIAL_CONDITIONS, ic_parameters
from esrom.numerics.physics import MODELS

logger = logging.getLogger("esrom")

NUMBER = (int, float)

# section -> key -> (allowed types, default); a default of REQUIRED means the key must be present
REQUIRED = object()

RUN_SECTIONS = {
    "general_config": {
        "experiment": (str, REQUIRED),
        "output_dir": (str, "output"),
        "luigi_local_scheduler": (bool, True),
        "luigi_workers": (int, 1),
    },
    "fit_config": {
        "manifold_kind": (str, REQUIRED),
        "r": (int, REQUIRED),
        "lambda": (NUMBER, 0.5),
        "augment": (bool, False),
        "lm_max_iters": (int, 200),
        "lm_gradient_tol": (NUMBER, 1e-10),
        "lm_step_tol": (NUMBER, 1e-12),
        "lm_initial_damping": (NUMBER, 1e-3),
        "parallel_rows": (int, 0),
        "warm_start": (bool, True),
        "initial_guess": (str, "nested"),
        "shift": (str, "zero"),
    },
    "rom_config": {
        "variant": (str, REQUIRED),
        "tse": (bool, False),
        "dissipation": ((str, type(None)), None),
        "trace_stride": ((int, type(None)), None),
        "run_name": ((str, type(None)), None),
    },
}

EXPERIMENT_SECTIONS = {
    "model_config": {
        "model": (str, REQUIRED),
        "gravity": (NUMBER, 3.0),
        "gamma": (NUMBER, 1.4),
    },
    "grid_config": {
        "n_cells": (int, REQUIRED),
        "domain": (list, REQUIRED),
    },
    "time_config": {
        "dt": (NUMBER, REQUIRED),
        "t_end": (NUMBER, REQUIRED),
        "snapshot_stride": (int, REQUIRED),
    },
    "ic_config": {
        "ic": (str, REQUIRED),
        "ic_params": (dict, {}),
    },
    "fom_config": {
        "dissipation": (str, REQUIRED),
    },
    "report_config": {
        "profile_times": (list, []),
    },
}

OPTIONAL_SECTIONS = ("report_config",)

CHOICES = {
    "manifold_kind": ("linear", "quadratic", "rational"),
    "initial_guess": ("nested", "ones"),
    "shift": ("zero", "mean", "initial"),
    "variant": ("generic", "entropy_stable"),
    "model": ("burgers", "shallow_water", "euler"),
    "ic": ("burgers_sine", "sw_dambreak", "sw_perturbation", "euler_sod_periodic"),
    "dissipation": ("none", "llf", "roe1", "tecno2_minmod"),
}

# fit settings that change the fitted manifold, per kind
FIT_SETTINGS = {
    "linear": ("shift",),
    "quadratic": ("lambda", "shift"),
    "rational": ("lambda", "lm_max_iters", "lm_gradient_tol", "lm_step_tol", "lm_initial_damping", "warm_start",
                 "initial_guess", "shift"),
}


def fit_settings_hash(config):
    settings = {}
    for key in FIT_SETTINGS[config["manifold_kind"]]:
        value = config[key]
        if key == "warm_start":
            # worker processes fit rows independently
            value = value and config["parallel_rows"] == 0
        # 1 and 1.0 are the same setting
        settings[key] = float(value) if isinstance(value, NUMBER) and not isinstance(value, bool) else value
    return hashlib.sha1(json.dumps(settings, sort_keys=True).encode("utf-8")).hexdigest()[:8]


def _read_json(path):
    try:
        with open(path, "r") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError("Config file %s is not valid JSON: %s" % (path, e))
    except OSError as e:
        raise ConfigError("Unable to read config file %s: %s" % (path, e))


def _load_sections(path, config, schema):
    if not isinstance(config, dict):
        raise ConfigError("Config file %s must hold a JSON object" % path)
    unknown = set(config) - set(schema)
    if unknown:
        raise ConfigError("Unknown section(s) in %s: %s" % (path, sorted(unknown)))
    values = {}
    for section, keys in schema.items():
        if section not in config:
            if section in OPTIONAL_SECTIONS:
                config_section = {}
            else:
                raise ConfigError("Missing section \"%s\" in %s" % (section, path))
        else:
            config_section = config[section]
        if not isinstance(config_section, dict):
            raise ConfigError("Section \"%s\" in %s must be an object" % (section, path))
        unknown = set(config_section) - set(keys)
        if unknown:
            raise ConfigError("Unknown key(s) in section \"%s\" of %s: %s" % (section, path, sorted(unknown)))
        for key, (types, default) in keys.items():
            # both dissipation keys get a section prefix in the flattened dictionary
            name = section.split("_")[0] + "_" + key if key == "dissipation" else key
            if key not in config_section:
                if default is REQUIRED:
                    raise ConfigError("Missing key \"%s\" in section \"%s\" of %s" % (key, section, path))
                values[name] = default
                continue
            value = config_section[key]
            # bool is an int subclass, reject it for numeric keys
            if not isinstance(value, types) or (isinstance(value, bool) and bool not in _as_tuple(types)):
                raise ConfigError("Key \"%s\" in section \"%s\" of %s has invalid value %r" %
                                  (key, section, path, value))
            if key in CHOICES and value is not None and value not in CHOICES[key]:
                raise ConfigError("Key \"%s\" in %s must be one of %s, got \"%s\"" % (key, path, CHOICES[key], value))
            values[name] = value
    return values


def _as_tuple(types):
    return types if isinstance(types, tuple) else (types,)


class Config:

    def __init__(self, config_path):
        """
        :param config_path: Path to run config file; its general_config.experiment names the experiment config
            under the experiments directory next to it
        """

        self.config_path = config_path
        self.dictionary = {}

        # Read run config and the experiment it points to
        config = _read_json(config_path)
        self.dictionary.update(_load_sections(config_path, config, RUN_SECTIONS))

        config_dir = os.path.dirname(os.path.abspath(config_path))
        experiment_path = os.path.join(config_dir, "experiments", self.dictionary["experiment"] + ".json")
        self.dictionary["experiment_config_path"] = experiment_path
        self.dictionary.update(_load_sections(experiment_path, _read_json(experiment_path), EXPERIMENT_SECTIONS))

        self._validate_values()

        # Names used for output directories
        d = self.dictionary
        d["fit_name"] = "%s_r%i%s_%s" % (d["manifold_kind"], d["r"], "_aug" if d["augment"] else "",
                                         fit_settings_hash(d))
        d["rom_name"] = d["run_name"] if d["run_name"] is not None else \
            "%s_%s%s" % (d["fit_name"], d["variant"], "_tse" if d["tse"] else "")
        if d["rom_dissipation"] is None:
            d["rom_dissipation"] = d["fom_dissipation"]
        if d["trace_stride"] is None:
            d["trace_stride"] = d["snapshot_stride"]

    def _validate_values(self):
        d = self.dictionary
        domain = d["domain"]
        if len(domain) != 2 or not all(isinstance(v, NUMBER) and not isinstance(v, bool) for v in domain) \
                or not domain[1] > domain[0]:
            raise ConfigError("grid_config.domain must be [a, b] with b > a, got %s" % domain)
        checks = [
            (d["n_cells"] >= 1, "grid_config.n_cells must be positive"),
            (d["dt"] > 0 and d["t_end"] > 0, "time_config.dt and t_end must be positive"),
            (d["snapshot_stride"] >= 1, "time_config.snapshot_stride must be at least 1"),
            (d["r"] >= 1, "fit_config.r must be at least 1"),
            (d["lambda"] >= 0, "fit_config.lambda must be non-negative"),
            (d["lm_max_iters"] >= 1, "fit_config.lm_max_iters must be positive"),
            (min(d["lm_gradient_tol"], d["lm_step_tol"], d["lm_initial_damping"]) > 0,
             "fit_config LM tolerances and damping must be positive"),
            (d["parallel_rows"] >= 0, "fit_config.parallel_rows must be non-negative"),
            (d["luigi_workers"] >= 1, "general_config.luigi_workers must be positive"),
            (d["gravity"] > 0, "model_config.gravity must be positive"),
            (d["gamma"] > 1, "model_config.gamma must exceed 1"),
            (d["trace_stride"] is None or d["trace_stride"] >= 1, "rom_config.trace_stride must be positive"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        if not all(isinstance(t, NUMBER) and not isinstance(t, bool) for t in d["profile_times"]):
            raise ConfigError("report_config.profile_times must be a list of numbers")
        n_steps = round(d["t_end"] / d["dt"])
        if n_steps < 1 or abs(n_steps * d["dt"] - d["t_end"]) > 1e-9 * d["t_end"]:
            raise ConfigError("time_config.t_end=%g is not an integer multiple of dt=%g" % (d["t_end"], d["dt"]))
        n_s = n_steps // d["snapshot_stride"] + 1
        n_dof = MODELS[d["model"]].n_vars * d["n_cells"]
        if d["r"] > min(n_s, n_dof):
            raise ConfigError("fit_config.r=%i exceeds min(N_h, n_s) = %i" % (d["r"], min(n_s, n_dof)))

        ic_model = INITIAL_CONDITIONS[d["ic"]][1]
        if ic_model != d["model"]:
            raise ConfigError("Initial condition %s belongs to model %s, not %s" % (d["ic"], ic_model, d["model"]))
        unknown = set(d["ic_params"]) - set(ic_parameters(d["ic"]))
        if unknown:
            raise ConfigError("Unknown ic_params for %s: %s" % (d["ic"], sorted(unknown)))
        for key in ("fom_dissipation", "rom_dissipation"):
            if d[key] == "llf" and d["model"] != "burgers":
                raise ConfigError("llf dissipation is only available for the scalar model, not %s" % d["model"])
            if d[key] in ("roe1", "tecno2_minmod") and d["model"] == "burgers":
                raise ConfigError("%s dissipation needs a system with an eigenstructure" % d[key])

    def get_dictionary(self):
        return self.dictionary
