"""
This code overrides the luigi.Target class and returns true if a task's product was processed for an experiment
"""

import logging
import os

import luigi

logger = logging.getLogger("esrom")


class ExperimentTarget(luigi.Target):
    """This class specifies success criteria to determine if an experiment product was processed correctly"""
    def __init__(self, experiment, task_family, product):
        self._experiment = experiment
        self._task_family = task_family
        self._product = product

    def exists(self):
        if self._experiment is None:
            return False
        log = self._experiment.find_log_entry(self._task_family, self._product)
        if log is None:
            logger.debug("Checking output for %s - No successful run of %s" % (self._task_family, self._product))
            return False
        # Check that outputs exist on filesystem
        for val in log["output"].values():
            if type(val) is list:
                for v in val:
                    if not os.path.exists(v):
                        return False
            elif not os.path.exists(val):
                return False
        return True
