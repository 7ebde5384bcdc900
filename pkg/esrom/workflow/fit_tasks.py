"""
This code contains the task that fits the POD basis and the configured manifold to the FOM snapshots
"""

import logging

import luigi
import numpy as np
import pandas as pd

from esrom.numerics.file_formats import read_snapshots, write_csv, write_json, write_manifold
from esrom.numerics.fitting import FitConfig, fit_manifold
from esrom.numerics.manifold import LinearManifold
from esrom.workflow.esrom_task import EsromTask
from esrom.workflow.fom_tasks import FOMSolve
from esrom.workflow.output_targets import ExperimentTarget

logger = logging.getLogger("esrom")


def load_snapshots(wm, model):
    """Read the experiment's snapshot file and check it was produced on the configured grid"""
    snapshots = read_snapshots(wm.snapshots_path, model.name, model.params)
    if snapshots.grid != wm.build_grid(model):
        raise OSError("Snapshot file %s was written on %r, the experiment config describes %r" %
                      (wm.snapshots_path, snapshots.grid, wm.build_grid(model)))
    return snapshots


def fit_config(config, parallel_rows=-1):
    return FitConfig(r=config["r"],
                     lam=config["lambda"],
                     max_iters=config["lm_max_iters"],
                     gradient_tol=config["lm_gradient_tol"],
                     step_tol=config["lm_step_tol"],
                     initial_damping=config["lm_initial_damping"],
                     parallel_rows=config["parallel_rows"] if parallel_rows < 0 else parallel_rows,
                     warm_start=config["warm_start"],
                     initial_guess=config["initial_guess"],
                     shift=config["shift"])


class ManifoldFit(EsromTask):
    """
    Builds the POD basis and fits a linear, quadratic or rational quadratic manifold on top of it
    :returns: Manifold and basis files, singular values, per row fit report and fit summary
    """

    fit_name = luigi.Parameter()

    def product(self):
        return "fit/" + self.fit_name

    def requires(self):

        logger.debug(self.task_family + " requires")
        return FOMSolve(**self.task_kwargs())

    def output(self):

        logger.debug(self.task_family + " output")
        wm = self.workflow_manager()
        return ExperimentTarget(experiment=wm.experiment, task_family=self.task_family, product=self.product())

    def work(self):

        wm = self.workflow_manager()
        config = wm.config
        model = wm.build_model()
        snapshots = load_snapshots(wm, model)

        result = fit_manifold(snapshots, config["manifold_kind"], fit_config(config, self.parallel_rows),
                              model=model, augment=config["augment"])

        sigma = result["singular_values"]
        singular_values = pd.DataFrame({
            "index": np.arange(1, sigma.size + 1),
            "sigma": sigma,
            "sigma_normalized": sigma / sigma[0] if sigma[0] > 0 else np.zeros_like(sigma)
        })

        output = {
            "manifold_path": wm.manifold_path,
            "basis_path": wm.basis_path,
            "singular_values_path": wm.singular_values_path,
            "fit_summary_path": wm.fit_summary_path
        }
        write_manifold(self.tmp_path(wm.manifold_path), result["manifold"])
        write_manifold(self.tmp_path(wm.basis_path), LinearManifold(result["basis"], shift=result["shift"]))
        write_csv(singular_values, self.tmp_path(wm.singular_values_path))
        n_fallback = 0
        if result["fit_report"] is not None:
            write_csv(result["fit_report"], self.tmp_path(wm.fit_report_path))
            output["fit_report_path"] = wm.fit_report_path
            n_fallback = int(result["fit_report"]["fallback_used"].sum())

        summary = {
            "fit_name": config["fit_name"],
            "manifold_kind": config["manifold_kind"],
            "r": config["r"],
            "lambda": config["lambda"],
            "augment": config["augment"],
            "shift": config["shift"],
            "initial_guess": config["initial_guess"],
            "n_s": snapshots.n_s,
            "eps_xt_max": result["eps_xt_max"],
            "t_fit": result["t_fit"],
            "fallback_rows": n_fallback
        }
        write_json(summary, self.tmp_path(wm.fit_summary_path))

        for path in output.values():
            wm.copy(self.tmp_path(path), path)

        self.log_success(wm, output, eps_xt_max=result["eps_xt_max"], t_fit=result["t_fit"],
                         fallback_rows=n_fallback)
