"""
This code contains the WorkflowManager class that handles filesystem paths and builds the numerical objects an
experiment config describes
"""

import hashlib
import logging
import os
import shutil

from esrom.config.config import Config
from esrom.numerics.grid import Grid
from esrom.numerics.initial_conditions import build_initial_condition
from esrom.numerics.physics import DissipationSpec, build_model
from esrom.workflow.experiment import Experiment

logger = logging.getLogger("esrom")


class WorkflowManager:

    def __init__(self, config_path, out_dir=None):
        """
        :param config_path: Path to run config file
        :param out_dir: Optional override of general_config.output_dir
        """

        self.config_path = config_path
        self.config = Config(config_path).get_dictionary()
        if out_dir:
            self.config["output_dir"] = out_dir

        # Create base directories and add to list to create directories later
        dirs = []
        self.output_dir = os.path.abspath(self.config["output_dir"])
        self.experiment_dir = os.path.join(self.output_dir, self.config["experiment"])
        self.fom_dir = os.path.join(self.experiment_dir, "fom")
        self.fit_dir = os.path.join(self.experiment_dir, "fit", self.config["fit_name"])
        self.rom_dir = os.path.join(self.experiment_dir, "rom", self.config["rom_name"])
        self.report_dir = os.path.join(self.experiment_dir, "report")
        self.logs_dir = os.path.join(self.experiment_dir, "logs")
        self.tmp_dir = os.path.join(self.experiment_dir, "tmp")
        self.error_dir = os.path.join(self.experiment_dir, "error")

        dirs.extend([self.output_dir, self.experiment_dir, self.fom_dir, self.fit_dir, self.rom_dir, self.report_dir,
                     self.logs_dir, self.tmp_dir, self.error_dir])

        # Make directories if they don't exist
        for d in dirs:
            self.makedirs(d)

        # Product paths
        self.snapshots_path = os.path.join(self.fom_dir, "snapshots.bin")
        self.entropy_trace_path = os.path.join(self.fom_dir, "entropy_trace.csv")
        self.manifold_path = os.path.join(self.fit_dir, "manifold.bin")
        self.basis_path = os.path.join(self.fit_dir, "basis.bin")
        self.singular_values_path = os.path.join(self.fit_dir, "singular_values.csv")
        self.fit_report_path = os.path.join(self.fit_dir, "fit_report.csv")
        self.fit_summary_path = os.path.join(self.fit_dir, "fit_summary.json")
        self.rom_trace_path = os.path.join(self.rom_dir, "rom_trace.csv")
        self.rom_status_path = os.path.join(self.rom_dir, "rom_status.json")
        self.rom_coords_path = os.path.join(self.rom_dir, "rom_coords.csv")
        self.workflow_log_path = os.path.join(self.logs_dir, "workflow.log")

        self.experiment = Experiment(os.path.join(self.experiment_dir, "processing_log.json"),
                                     self.config["experiment"])

    def report_paths(self, rom_names):
        """Products of one comparison report, in a directory named after the compared runs"""
        name = "+".join(sorted(rom_names))
        if len(name) > 120:
            name = "runs_" + hashlib.sha1(name.encode("utf-8")).hexdigest()[:12]
        report_dir = os.path.join(self.report_dir, name)
        return {
            "comparison_report_path": os.path.join(report_dir, "comparison_report.csv"),
            "comparison_summary_path": os.path.join(report_dir, "comparison_summary.json"),
            "projection_profiles_path": os.path.join(report_dir, "projection_profiles.csv")
        }

    def build_model(self):
        return build_model(self.config["model"], gravity=self.config["gravity"], gamma=self.config["gamma"])

    def build_grid(self, model=None):
        model = self.build_model() if model is None else model
        return Grid(self.config["n_cells"], self.config["domain"], n_vars=model.n_vars)

    def build_initial_condition(self, model):
        return build_initial_condition(self.config["ic"], model, self.config["ic_params"])

    def dissipation_spec(self, stage="fom"):
        return DissipationSpec(self.config[stage + "_dissipation"])

    def makedirs(self, d):
        if not os.path.exists(d):
            try:
                os.makedirs(d)
            except FileExistsError:
                pass

    def copy(self, src, dst):
        self.makedirs(os.path.dirname(dst))
        shutil.copy2(src, dst)

    def move(self, src, dst):
        self.makedirs(os.path.dirname(dst))
        shutil.move(src, dst)
