"""
This code contains the task that runs a reduced order model on a fitted manifold
"""

import logging

import luigi

from esrom.errors import RomFailedError
from esrom.numerics.file_formats import read_manifold, write_csv, write_json
from esrom.numerics.rom import RomConfig, initial_coords, run_rom
from esrom.workflow.esrom_task import EsromTask
from esrom.workflow.fit_tasks import ManifoldFit, load_snapshots
from esrom.workflow.output_targets import ExperimentTarget

logger = logging.getLogger("esrom")


class ROMSolve(EsromTask):
    """
    Integrates the generic or entropy stable manifold ROM from the projected first snapshot
    :returns: ROM trace, run status and strided reduced coordinates
    """

    rom_name = luigi.Parameter()

    def product(self):
        return "rom/" + self.rom_name

    def requires(self):

        logger.debug(self.task_family + " requires")
        wm = self.workflow_manager()
        return ManifoldFit(fit_name=wm.config["fit_name"], **self.task_kwargs())

    def output(self):

        logger.debug(self.task_family + " output")
        wm = self.workflow_manager()
        return ExperimentTarget(experiment=wm.experiment, task_family=self.task_family, product=self.product())

    def work(self):

        wm = self.workflow_manager()
        config = wm.config
        model = wm.build_model()
        grid = wm.build_grid(model)
        snapshots = load_snapshots(wm, model)
        manifold = read_manifold(wm.manifold_path)
        frame = read_manifold(wm.basis_path)

        rom_config = RomConfig(variant=config["variant"],
                               tse=config["tse"],
                               dt=config["dt"],
                               t_end=config["t_end"],
                               spec=wm.dissipation_spec("rom"),
                               manifold=manifold,
                               model=model,
                               grid=grid,
                               trace_stride=config["trace_stride"])
        trace = run_rom(rom_config, initial_coords(snapshots, frame.basis, config["tse"], frame.shift))

        status = trace.status_dict()
        status.update({
            "rom_name": config["rom_name"],
            "fit_name": config["fit_name"],
            "variant": config["variant"],
            "tse": config["tse"],
            "t_online": trace.t_online
        })

        # Failed runs keep their trace up to the failure
        output = {
            "rom_trace_path": wm.rom_trace_path,
            "rom_status_path": wm.rom_status_path,
            "rom_coords_path": wm.rom_coords_path
        }
        write_csv(trace.records, self.tmp_path(wm.rom_trace_path))
        write_json(status, self.tmp_path(wm.rom_status_path))
        write_csv(trace.coords_frame(), self.tmp_path(wm.rom_coords_path))
        for path in output.values():
            wm.copy(self.tmp_path(path), path)

        if not trace.ok:
            raise RomFailedError("ROM %s failed at t=%g: %s" % (config["rom_name"], trace.fail_time,
                                                                trace.fail_reason),
                                 fail_reason=trace.fail_reason, fail_time=trace.fail_time)

        s_r = trace.records["S_r"].values
        self.log_success(wm, output, t_online=trace.t_online, initial_entropy=float(s_r[0]),
                         final_entropy=float(s_r[-1]))
