"""
This code contains the task that compares finished ROM runs of one experiment with the FOM
"""

import logging

import luigi
import pandas as pd

from esrom.errors import ConfigError
from esrom.numerics.diagnostics import build_comparison_report, projection_profiles
from esrom.numerics.file_formats import read_json, read_manifold, write_csv, write_json
from esrom.numerics.fitting import pod_basis
from esrom.numerics.rom import RomTrace
from esrom.workflow.esrom_task import EsromTask
from esrom.workflow.fit_tasks import load_snapshots
from esrom.workflow.output_targets import ExperimentTarget

logger = logging.getLogger("esrom")


def load_rom_trace(wm):
    status = read_json(wm.rom_status_path)
    records = pd.read_csv(wm.rom_trace_path)
    coords = pd.read_csv(wm.rom_coords_path)
    return RomTrace(records, coords.drop(columns="t").values, coords["t"].values, status=status["status"],
                    fail_time=status["fail_time"], fail_reason=status["fail_reason"], t_online=status["t_online"])


class ComparisonReport(EsromTask):
    """
    Evaluates error and entropy metrics of every listed run on the snapshot time grid. Only reads existing
    artifacts, so it has no requirements; a missing trace is an IO error.
    :returns: Comparison report CSV, summary JSON and, when profile times are configured, projection profiles
    """

    config_paths = luigi.ListParameter()

    def rom_names(self):
        return sorted(self.workflow_manager(path).config["rom_name"] for path in self.config_paths)

    def product(self):
        return "report/" + ",".join(self.rom_names())

    def requires(self):

        logger.debug(self.task_family + " requires")
        return []

    def output(self):

        logger.debug(self.task_family + " output")
        wm = self.workflow_manager()
        return ExperimentTarget(experiment=wm.experiment, task_family=self.task_family, product=self.product())

    def work(self):

        wms = [self.workflow_manager(path) for path in self.config_paths]
        experiments = sorted(set(w.config["experiment"] for w in wms))
        if experiments != [self.experiment]:
            raise ConfigError("A comparison report covers one experiment, the configs name %s" % experiments)
        rom_names = [w.config["rom_name"] for w in wms]
        if len(set(rom_names)) != len(rom_names):
            raise ConfigError("Duplicate run names in the comparison: %s" % rom_names)

        wm = wms[0]
        config = wm.config
        model = wm.build_model()
        grid = wm.build_grid(model)
        snapshots = load_snapshots(wm, model)
        fom_trace = pd.read_csv(wm.entropy_trace_path)
        linear_basis, _ = pod_basis(snapshots, config["r"])

        runs = {}
        for w in wms:
            fit_summary = read_json(w.fit_summary_path)
            runs[w.config["rom_name"]] = {
                "trace": load_rom_trace(w),
                "manifold": read_manifold(w.manifold_path),
                "tse": w.config["tse"],
                "fit": {"name": w.config["fit_name"], "eps_xt_max": fit_summary["eps_xt_max"],
                        "t_fit": fit_summary["t_fit"]}
            }

        report, summary = build_comparison_report(snapshots, fom_trace, runs, model, grid, linear_basis)
        summary["experiment"] = self.experiment
        summary["config_paths"] = list(self.config_paths)

        paths = wm.report_paths(rom_names)
        output = {
            "comparison_report_path": paths["comparison_report_path"],
            "comparison_summary_path": paths["comparison_summary_path"]
        }
        write_csv(report, self.tmp_path(output["comparison_report_path"]))
        write_json(summary, self.tmp_path(output["comparison_summary_path"]))

        if config["profile_times"]:
            frame = read_manifold(wm.basis_path)
            profiles = projection_profiles(snapshots, frame.basis, runs[rom_names[0]]["manifold"], model, grid,
                                           config["profile_times"], frame.shift)
            output["projection_profiles_path"] = paths["projection_profiles_path"]
            write_csv(profiles, self.tmp_path(output["projection_profiles_path"]))

        for path in output.values():
            wm.copy(self.tmp_path(path), path)

        failed = [name for name, run in summary["runs"].items() if run["status"] != "ok"]
        if failed:
            logger.warning("Report includes failed run(s): %s" % ", ".join(failed))
        self.log_success(wm, output, runs=sorted(rom_names))
