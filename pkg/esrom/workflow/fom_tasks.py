"""
This code contains the task that integrates the full order model of an experiment and stores its snapshots
"""

import logging

from esrom.numerics.file_formats import write_csv, write_snapshots
from esrom.numerics.fom import run_fom
from esrom.workflow.esrom_task import EsromTask
from esrom.workflow.output_targets import ExperimentTarget

logger = logging.getLogger("esrom")


class FOMSolve(EsromTask):
    """
    Runs the entropy stable finite volume scheme with RK4 and keeps every snapshot_stride-th state
    :returns: Snapshot file and per step entropy trace
    """

    def product(self):
        return "fom"

    def requires(self):

        logger.debug(self.task_family + " requires")
        return []

    def output(self):

        logger.debug(self.task_family + " output")
        wm = self.workflow_manager()
        return ExperimentTarget(experiment=wm.experiment, task_family=self.task_family, product=self.product())

    def work(self):

        wm = self.workflow_manager()
        config = wm.config
        model = wm.build_model()
        grid = wm.build_grid(model)
        ic = wm.build_initial_condition(model)

        snapshots, trace = run_fom(ic, model, grid, config["dt"], config["t_end"], config["snapshot_stride"],
                                   wm.dissipation_spec("fom"))

        tmp_snapshots_path = self.tmp_path(wm.snapshots_path)
        tmp_trace_path = self.tmp_path(wm.entropy_trace_path)
        write_snapshots(tmp_snapshots_path, snapshots)
        write_csv(trace, tmp_trace_path)
        wm.copy(tmp_snapshots_path, wm.snapshots_path)
        wm.copy(tmp_trace_path, wm.entropy_trace_path)

        s_h = trace["S_h"].values
        logger.info("FOM stored %i snapshots, S_h went from %.12g to %.12g" % (snapshots.n_s, s_h[0], s_h[-1]))
        self.log_success(wm, {
            "snapshots_path": wm.snapshots_path,
            "entropy_trace_path": wm.entropy_trace_path
        }, n_s=snapshots.n_s, n_dof=snapshots.n_dof, initial_entropy=float(s_h[0]), final_entropy=float(s_h[-1]),
            max_entropy_increase=float(max(0.0, (s_h - s_h[0]).max())))
