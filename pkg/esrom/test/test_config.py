"""
This code contains test functions for config.py
"""

import glob
import json
import os

import pytest

from esrom.config.config import Config
from esrom.errors import ConfigError
from esrom.numerics.fitting import FitConfig
from esrom.numerics.fom import step_count

CONFIG_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "config")


def _write_configs(tmp_path, run_overrides=None, experiment_overrides=None):
    run = {
        "general_config": {"experiment": "small"},
        "fit_config": {"manifold_kind": "rational", "r": 3},
        "rom_config": {"variant": "entropy_stable", "tse": True}
    }
    experiment = {
        "model_config": {"model": "shallow_water"},
        "grid_config": {"n_cells": 16, "domain": [-1.0, 1.0]},
        "time_config": {"dt": 0.01, "t_end": 0.1, "snapshot_stride": 2},
        "ic_config": {"ic": "sw_perturbation"},
        "fom_config": {"dissipation": "roe1"}
    }
    for config, overrides in ((run, run_overrides), (experiment, experiment_overrides)):
        for section, values in (overrides or {}).items():
            if values is None:
                config.pop(section)
            else:
                config.setdefault(section, {}).update(values)

    os.makedirs(str(tmp_path / "experiments"), exist_ok=True)
    with open(str(tmp_path / "experiments" / "small.json"), "w") as f:
        json.dump(experiment, f)
    path = str(tmp_path / "run.json")
    with open(path, "w") as f:
        json.dump(run, f)
    return path


def test_bundled_configs():

    print("\nRunning test_bundled_configs")

    paths = sorted(glob.glob(os.path.join(CONFIG_DIR, "*.json")))
    assert len(paths) > 0
    for path in paths:
        config = Config(path).get_dictionary()
        assert os.path.exists(config["experiment_config_path"])


def test_experiment_snapshot_counts():

    print("\nRunning test_experiment_snapshot_counts")

    expected = {"burgers_linear.json": (201, 300), "sw_dambreak_rational.json": (401, 600),
                "euler_sod_rational_es.json": (1001, 750)}
    for name, (n_s, n_dof) in expected.items():
        config = Config(os.path.join(CONFIG_DIR, name)).get_dictionary()
        assert step_count(config["dt"], config["t_end"]) // config["snapshot_stride"] + 1 == n_s
        n_vars = {"burgers": 1, "shallow_water": 2, "euler": 3}[config["model"]]
        assert n_vars * config["n_cells"] == n_dof


def test_equal_accuracy_configs():

    print("\nRunning test_equal_accuracy_configs")

    for name, kind, r in (("burgers_linear_r160.json", "linear", 160),
                          ("burgers_quadratic_r150.json", "quadratic", 150)):
        config = Config(os.path.join(CONFIG_DIR, name)).get_dictionary()
        assert (config["manifold_kind"], config["r"], config["experiment"]) == (kind, r, "burgers")
        n_s = step_count(config["dt"], config["t_end"]) // config["snapshot_stride"] + 1
        FitConfig(r=config["r"]).validate(config["n_cells"], n_s)


def test_full_scale_dissipation():

    print("\nRunning test_full_scale_dissipation")

    # second order dissipation for the full-scale systems, first order on the desk grids
    for name, dissipation in (("sw_dambreak_rational_es.json", "tecno2_minmod"),
                              ("euler_sod_rational_es.json", "tecno2_minmod"),
                              ("sw_dambreak_desk_rational_es.json", "roe1"),
                              ("euler_sod_desk_rational_es.json", "roe1")):
        config = Config(os.path.join(CONFIG_DIR, name)).get_dictionary()
        assert config["fom_dissipation"] == dissipation
        assert config["rom_dissipation"] == dissipation


def test_defaults_and_derived_keys(tmp_path):

    print("\nRunning test_defaults_and_derived_keys")

    config = Config(_write_configs(tmp_path)).get_dictionary()
    assert config["lambda"] == 0.5
    assert config["gravity"] == 3.0
    assert config["fom_dissipation"] == "roe1"
    assert config["rom_dissipation"] == "roe1"
    assert config["trace_stride"] == 2
    assert config["profile_times"] == []
    assert config["fit_name"].startswith("rational_r3_")
    assert config["rom_name"] == config["fit_name"] + "_entropy_stable_tse"

    config = Config(_write_configs(tmp_path, run_overrides={
        "fit_config": {"augment": True, "manifold_kind": "linear"},
        "rom_config": {"dissipation": "tecno2_minmod", "run_name": "chan", "tse": False}})).get_dictionary()
    assert config["fit_name"].startswith("linear_r3_aug_")
    assert config["rom_name"] == "chan"
    assert config["rom_dissipation"] == "tecno2_minmod"


def test_fit_names_follow_fit_settings(tmp_path):

    print("\nRunning test_fit_names_follow_fit_settings")

    def fit_name(fit_config):
        return Config(_write_configs(tmp_path, run_overrides={"fit_config": fit_config})).get_dictionary()["fit_name"]

    base = fit_name({})
    assert fit_name({"lambda": 0.5}) == base
    assert fit_name({"lm_max_iters": 200, "lambda": 0.5}) == base
    assert fit_name({"lambda": 1}) == fit_name({"lambda": 1.0})
    assert fit_name({"parallel_rows": 4}) == fit_name({"warm_start": False})

    changed = [fit_name(values) for values in ({"lambda": 1.0}, {"lm_max_iters": 50}, {"lm_step_tol": 1e-8},
                                               {"initial_guess": "ones"}, {"warm_start": False},
                                               {"shift": "mean"})]
    assert len(set(changed + [base])) == len(changed) + 1
    assert all(name.startswith("rational_r3_") for name in changed)

    # lambda and the LM settings do not enter a linear fit
    linear = fit_name({"manifold_kind": "linear"})
    assert fit_name({"manifold_kind": "linear", "lambda": 2.0}) == linear


@pytest.mark.parametrize("run_overrides, experiment_overrides", [
    ({"fit_config": {"manifold_kind": "cubic"}}, None),
    ({"fit_config": {"r": 7}}, None),
    ({"fit_config": {"r": 2.5}}, None),
    ({"fit_config": {"lambda": -1.0}}, None),
    ({"fit_config": {"shift": "median"}}, None),
    ({"rom_config": {"variant": "lspg"}}, None),
    ({"rom_config": {"tse": "yes"}}, None),
    ({"rom_config": {"dissipation": "llf"}}, None),
    ({"rom_config": None}, None),
    ({"general_config": {"colour": "blue"}}, None),
    (None, {"model_config": {"model": "mhd"}}),
    (None, {"model_config": {"gravity": 0.0}}),
    (None, {"grid_config": {"domain": [1.0, 0.0]}}),
    (None, {"time_config": {"t_end": 0.105}}),
    (None, {"ic_config": {"ic": "burgers_sine"}}),
    (None, {"ic_config": {"ic_params": {"width": 2.0}}}),
    (None, {"fom_config": {"dissipation": "upwind"}}),
    (None, {"fom_config": None}),
])
def test_invalid_configs(tmp_path, run_overrides, experiment_overrides):

    print("\nRunning test_invalid_configs")

    path = _write_configs(tmp_path, run_overrides, experiment_overrides)
    with pytest.raises(ConfigError):
        Config(path)


def test_unreadable_configs(tmp_path):

    print("\nRunning test_unreadable_configs")

    with pytest.raises(ConfigError):
        Config(str(tmp_path / "missing.json"))

    path = str(tmp_path / "broken.json")
    with open(path, "w") as f:
        f.write("{\"general_config\": ")
    with pytest.raises(ConfigError):
        Config(path)

    path = _write_configs(tmp_path, run_overrides={"general_config": {"experiment": "unknown"}})
    with pytest.raises(ConfigError):
        Config(path)
