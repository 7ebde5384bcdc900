"""
This code contains the Experiment class that keeps the processing log of one experiment output directory
"""

import datetime
import fcntl
import json
import logging
import os

logger = logging.getLogger("esrom")


def _to_json(value):
    if isinstance(value, datetime.datetime):
        return value.isoformat(timespec="microseconds")
    if hasattr(value, "item"):
        return value.item()
    raise TypeError("Object of type %s is not JSON serializable" % type(value).__name__)


class Experiment:

    def __init__(self, log_path, name):
        """
        :param log_path: Path to the processing_log.json file of the experiment
        :param name: The experiment name from general_config.experiment
        """

        self.log_path = log_path
        self.name = name
        self.lock_path = log_path + ".lock"

    @property
    def processing_log(self):
        if not os.path.exists(self.log_path):
            return []
        with open(self.log_path, "r") as f:
            return json.load(f)

    def insert_log_entry(self, entry):
        entry = dict(entry)
        entry["experiment"] = self.name
        if "log_timestamp" not in entry:
            entry["log_timestamp"] = datetime.datetime.now(tz=datetime.timezone.utc)

        # Tasks of one experiment may run in separate worker processes
        with open(self.lock_path, "w") as lock:
            fcntl.flock(lock, fcntl.LOCK_EX)
            try:
                log = self.processing_log
                log.append(entry)
                tmp_path = self.log_path + ".tmp"
                with open(tmp_path, "w") as f:
                    json.dump(log, f, indent=4, default=_to_json)
                os.replace(tmp_path, self.log_path)
            finally:
                fcntl.flock(lock, fcntl.LOCK_UN)
        logger.debug("Added %s log entry for %s (%s)" % (entry.get("completion_status"), entry.get("task"),
                                                         entry.get("product")))

    def find_log_entry(self, task_family, product, completion_status="SUCCESS"):
        """Newest log entry for the task and product with the given status, or None"""
        for log in reversed(self.processing_log):
            if log["task"] == task_family and log.get("product") == product and \
                    log["completion_status"] == completion_status:
                return log
        return None
