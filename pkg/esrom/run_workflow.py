"""
This code contains the main call to initiate an esrom workflow
"""

import argparse
import datetime
import logging.config
import os
import shutil
import sys

from argparse import RawTextHelpFormatter

import luigi

from esrom.errors import AdmissibilityError, ConfigError, ContractError, NumericsError
from esrom.workflow.esrom_task import EsromTask
from esrom.workflow.fit_tasks import ManifoldFit
from esrom.workflow.fom_tasks import FOMSolve
from esrom.workflow.report_tasks import ComparisonReport
from esrom.workflow.rom_tasks import ROMSolve
from esrom.workflow.workflow_manager import WorkflowManager

logging_conf = os.path.join(os.path.dirname(__file__), "logging.conf")
logging.config.fileConfig(fname=logging_conf, disable_existing_loggers=False)
logger = logging.getLogger("esrom")

PRODUCT_CHOICES = ["fom", "fit", "rom", "report"]

# Exit codes; 40 is luigi's unhandled_exception code
EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICS = 2
EXIT_IO = 3
EXIT_UNHANDLED = 40


def exit_code_for(e):
    if isinstance(e, (ConfigError, ContractError)):
        return EXIT_CONFIG
    if isinstance(e, NumericsError):
        return EXIT_NUMERICS
    if isinstance(e, OSError):
        return EXIT_IO
    return EXIT_UNHANDLED


def parse_args(argv=None):
    parser = argparse.ArgumentParser(
        description="Description: This is the top-level run script for executing the esrom workflow: full order "
                    "model, manifold fit, reduced order model and comparison report.\n"
                    "Operating Environment: Python 3.x. See setup.py file for specific dependencies.\n"
                    "Outputs: See list of product choices.",
        formatter_class=RawTextHelpFormatter)
    parser.add_argument("-c", "--config_path", action="append",
                        help="Path to run config file; repeat it to build or compare several runs")
    parser.add_argument("-p", "--products", default="report",
                        help=("Comma delimited list of products to create (no spaces). "
                              "Choose from " + ", ".join(PRODUCT_CHOICES) + " (default: report)"))
    parser.add_argument("-o", "--out", default="",
                        help="Output directory, overrides general_config.output_dir")
    parser.add_argument("--parallel_rows", "--parallel-rows", type=int, default=-1,
                        help="Number of worker processes for the rational fit, 0 for the sequential warm started "
                             "fit (default: value from config)")
    parser.add_argument("-l", "--level", default="INFO",
                        help="The log level (default: INFO)")
    parser.add_argument("-w", "--workers",
                        help="Number of luigi workers")
    parser.add_argument("--dry_run", action="store_true",
                        help="Validate the configs and list the tasks luigi would run, but take no action")
    args = parser.parse_args(argv)

    if not args.config_path:
        print("ERROR: You must specify a configuration file with the --config_path argument.")
        sys.exit(EXIT_CONFIG)

    args.config_path = [os.path.abspath(p) for p in args.config_path]

    # Upper case the log level
    args.level = args.level.upper()

    product_list = args.products.split(",")
    for prod in product_list:
        if prod not in PRODUCT_CHOICES:
            print("ERROR: Product \"%s\" is not a valid product choice." % prod)
            sys.exit(EXIT_CONFIG)
    args.products = product_list

    return args


def get_tasks_from_product_args(args, wms):
    """
    :returns: (pipeline tasks, report tasks). Reports only read artifacts, so they are built after the pipeline.
    """

    tasks = []
    for config_path, wm in zip(args.config_path, wms):
        kwargs = {
            "config_path": config_path,
            "experiment": wm.config["experiment"],
            "level": args.level,
            "out_dir": args.out,
            "parallel_rows": args.parallel_rows
        }
        prod_task_map = {
            "fom": lambda: FOMSolve(**kwargs),
            "fit": lambda: ManifoldFit(fit_name=wm.config["fit_name"], **kwargs),
            "rom": lambda: ROMSolve(rom_name=wm.config["rom_name"], **kwargs)
        }
        for prod in args.products:
            if prod in prod_task_map:
                tasks.append(prod_task_map[prod]())

    report_tasks = []
    if "report" in args.products:
        # One report per experiment over all of its runs
        by_experiment = {}
        for config_path, wm in zip(args.config_path, wms):
            by_experiment.setdefault(wm.config["experiment"], []).append(config_path)
        for experiment, paths in by_experiment.items():
            report_tasks.append(ComparisonReport(config_path=paths[0], config_paths=paths, experiment=experiment,
                                                 level=args.level, out_dir=args.out,
                                                 parallel_rows=args.parallel_rows))
    return tasks, report_tasks


@EsromTask.event_handler(luigi.Event.SUCCESS)
def task_success(task):
    logger.info("SUCCESS: %s" % task)

    # If not in DEBUG mode, clean up tmp dir
    if task.level != "DEBUG" and task.tmp_dir and os.path.exists(task.tmp_dir):
        logger.debug("Deleting tmp folder %s" % task.tmp_dir)
        shutil.rmtree(task.tmp_dir)


@EsromTask.event_handler(luigi.Event.FAILURE)
def task_failure(task, e):
    logger.error("TASK FAILURE: %s" % task)
    wm = task.workflow_manager()

    # Move tmp folder to errors folder
    if task.tmp_dir and os.path.exists(task.tmp_dir):
        error_task_dir = os.path.join(wm.error_dir, os.path.basename(task.tmp_dir))
        logger.error("Moving tmp folder %s to %s" % (task.tmp_dir, error_task_dir))
        wm.move(task.tmp_dir, error_task_dir)

    if isinstance(e, AdmissibilityError):
        logger.error("Inadmissible state in cell(s) %s at t=%s" % (list(e.cells)[:10], e.time))

    # Update processing_log with failure message
    log_entry = {
        "task": task.task_family,
        "product": task.product(),
        "config_path": os.path.abspath(task.config_path),
        "log_timestamp": datetime.datetime.now(tz=datetime.timezone.utc),
        "completion_status": "FAILURE",
        "error_message": str(e),
        "error_type": type(e).__name__,
        "error_reason": getattr(e, "reason", None),
        "exit_code": exit_code_for(e)
    }
    wm.experiment.insert_log_entry(log_entry)


def set_up_logging(log_path, level):
    # Add file handler logging to the experiment logs directory
    handler = logging.FileHandler(log_path)
    handler.setLevel(level)
    formatter = logging.Formatter("%(asctime)s %(levelname)s [%(module)s]: %(message)s")
    handler.setFormatter(formatter)
    logger.addHandler(handler)
    logger.setLevel(level)
    return handler


def failure_exit_code(wms, since):
    """Exit code of the first failure recorded in the processing logs after the given time"""
    failures = []
    seen = set()
    for wm in wms:
        if wm.experiment.log_path in seen:
            continue
        seen.add(wm.experiment.log_path)
        for log in wm.experiment.processing_log:
            if log["completion_status"] == "FAILURE" and log["log_timestamp"] >= since:
                failures.append((log["log_timestamp"], log.get("exit_code", EXIT_UNHANDLED)))
    return min(failures)[1] if failures else None


def main(argv=None):
    """
    Parse command line arguments and initiate tasks
    """
    args = parse_args(argv)

    try:
        wms = [WorkflowManager(config_path=p, out_dir=args.out or None) for p in args.config_path]
    except (ConfigError, OSError) as e:
        print("ERROR: %s" % e)
        return exit_code_for(e)

    # Set up logging
    handler = set_up_logging(wms[0].workflow_log_path, args.level)
    try:
        logger.info("Running workflow with cmd: %s" % str(" ".join(sys.argv if argv is None else argv)))

        tasks, report_tasks = get_tasks_from_product_args(args, wms)

        # Set up luigi tasks and execute
        if args.workers:
            workers = int(args.workers)
        else:
            workers = wms[0].config["luigi_workers"]

        # If it's a dry run just print the tasks and exit
        if args.dry_run:
            tasks_str = "\n".join([str(t) for t in tasks + report_tasks])
            logger.info(f"Dry run flag set. Below are the {len(tasks + report_tasks)} tasks that Luigi would "
                        f"run:\n{tasks_str}")
            return EXIT_OK

        # Build luigi logging.conf path
        luigi_logging_conf = os.path.join(os.path.dirname(__file__), "workflow", "luigi", "logging.conf")

        since = datetime.datetime.now(tz=datetime.timezone.utc).isoformat(timespec="microseconds")
        success = True
        for stage in (tasks, report_tasks):
            if stage:
                success = luigi.build(stage, workers=workers, local_scheduler=wms[0].config["luigi_local_scheduler"],
                                      logging_conf_file=luigi_logging_conf) and success

        code = failure_exit_code(wms, since)
        if code is not None:
            logger.error("Workflow finished with failures, exit code %i" % code)
            return code
        return EXIT_OK if success else EXIT_UNHANDLED
    finally:
        logger.removeHandler(handler)
        handler.close()


if __name__ == '__main__':
    sys.exit(main())
