"""
This code contains the base luigi task every pipeline stage derives from. Tasks run locally and write into a per
task tmp dir before their products are copied into the experiment tree.
"""

import datetime
import logging
import os
import time

import luigi

from esrom.workflow.workflow_manager import WorkflowManager

logger = logging.getLogger("esrom")


class EsromTask(luigi.Task):

    # Luigi parameters that can be passed in to the task. Tasks are identified by the experiment and product they
    # build, so two run configs that share a product share the task.
    config_path = luigi.Parameter(significant=False)
    experiment = luigi.Parameter()
    level = luigi.Parameter(default="INFO")
    out_dir = luigi.Parameter(default="")
    parallel_rows = luigi.IntParameter(default=-1, significant=False)

    task_namespace = "esrom"

    # Set in run()
    task_instance_id = ""
    tmp_dir = ""
    start_time = 0.0

    def workflow_manager(self, config_path=None):
        return WorkflowManager(config_path=config_path or self.config_path, out_dir=self.out_dir or None)

    def task_kwargs(self):
        return {
            "config_path": self.config_path,
            "experiment": self.experiment,
            "level": self.level,
            "out_dir": self.out_dir,
            "parallel_rows": self.parallel_rows
        }

    def _set_task_instance_id(self, product):
        timestamp = datetime.datetime.now().strftime("%Y%m%dt%H%M%S%f")
        instance_id = "_".join([self.experiment, product, self.task_family, timestamp])
        for b, a in [(' ', ''), ('(', '_'), (')', '_'), (',', '_'), ('/', '_')]:
            instance_id = instance_id.replace(b, a)
        self.task_instance_id = instance_id

    def product(self):
        """Override with the product key this task records in the processing log."""
        raise NotImplementedError

    def run(self):

        wm = self.workflow_manager()
        self._set_task_instance_id(self.product())
        self.tmp_dir = os.path.join(wm.tmp_dir, self.task_instance_id)
        wm.makedirs(self.tmp_dir)
        logger.debug("Created tmp dir: %s", self.tmp_dir)

        self.start_time = time.time()
        logger.info("Starting %s for %s/%s" % (self.task_family, self.experiment, self.product()))
        self.work()
        logger.info("Finished %s for %s/%s in %.2f s" % (self.task_family, self.experiment, self.product(),
                                                         time.time() - self.start_time))

    def work(self):
        """Override this method, rather than ``run()``,  for your actual work."""
        pass

    def tmp_path(self, path):
        return os.path.join(self.tmp_dir, os.path.basename(path))

    def log_success(self, wm, output, **metrics):
        log_entry = {
            "task": self.task_family,
            "product": self.product(),
            "config_path": os.path.abspath(self.config_path),
            "runtime_seconds": time.time() - self.start_time,
            "log_timestamp": datetime.datetime.now(tz=datetime.timezone.utc),
            "completion_status": "SUCCESS",
            "output": output
        }
        log_entry.update(metrics)
        wm.experiment.insert_log_entry(log_entry)
