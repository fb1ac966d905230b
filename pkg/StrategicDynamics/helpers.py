"""
This module provides helper classes and functions for StrategicDynamics,
including the exception hierarchy, logging configuration and deterministic
report serialization.
"""
# StrategicDynamics/helpers.py

import json
import os
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Any, Callable, Mapping, Optional, Sequence

import numpy as np
import pandas as pd
from loguru import logger  # For logging
from rich import print as rprint  # For rich console output
from tqdm import tqdm

FLOAT_FORMAT = "%.12g"

# --- Exceptions ---
class StrategicDynamicsError(Exception):
    """Base class of every error raised by the engine."""

    exit_code = 1


class ConfigError(StrategicDynamicsError):
    exit_code = 2


class ConfigParseError(ConfigError):
    """A config line that is not a ``key = value`` pair."""

    def __init__(self, path: str, line: int, column: int, message: str):
        self.path = path
        self.line = line
        self.column = column
        super().__init__(f"{path}:{line}:{column}: {message}")


class UnknownKeyError(ConfigError):
    def __init__(self, key: str, path: Optional[str] = None):
        self.key = key
        where = f" in {path}" if path else ""
        super().__init__(f"Unknown configuration key '{key}'{where}.")


class InvalidParametersError(ConfigError):
    """A game parameter or run setting violates one of its invariants."""


class InvalidArgumentError(StrategicDynamicsError, ValueError):
    exit_code = 2


class UnsupportedScenarioError(StrategicDynamicsError):
    exit_code = 2


class StepInstabilityError(StrategicDynamicsError):
    """The integrator left the unit cube by more than the clamping tolerance."""

    exit_code = 3

    def __init__(self, time: float, state):
        self.time = time
        self.state = np.asarray(state, dtype=float)
        super().__init__(
            f"State {self.state.tolist()} left the unit cube at t={time:.6g}; "
            "reduce the step size dt."
        )


class ReportIOError(StrategicDynamicsError):
    exit_code = 4

    def __init__(self, path: str, error: OSError):
        self.path = path
        super().__init__(f"Could not write report to '{path}': {error}")


# --- Logging Configuration ---
LOGURU_HANDLERS = {}

def configure_logging(run_name: str, log_level: str = "INFO", log_dir: str = "logs"):
    """
    Add a rotating log file sink for a run, replacing an earlier sink of the same run.

    :param run_name: The name of the current run, used for the log file name.
    :type run_name: str
    :param log_level: The minimum level written to the file.
    :type log_level: str
    :param log_dir: Folder where log files are kept.
    :type log_dir: str
    :return: The loguru handler id, or None when file logging is unavailable.
    :rtype: int
    """
    if run_name in LOGURU_HANDLERS:
        try:
            logger.remove(LOGURU_HANDLERS.pop(run_name))
        except ValueError:
            pass

    if not os.path.exists(log_dir):
        try:
            os.makedirs(log_dir)
        except OSError as e:
            rprint(f"[red]Error creating log directory {log_dir}: {e}. Logging to console only.[red]")
            return None

    log_file_path = os.path.join(log_dir, f"{run_name}_strategic_dynamics.log")
    handler_config = {
        "sink": log_file_path, "level": log_level.upper(), "rotation": "10 MB",
        "retention": "7 days", "compression": "zip", "enqueue": True,
        "format": "{time:YYYY-MM-DD HH:mm:ss.SSS} | {level: <8} | {name}:{function}:{line} - {message}"
    }
    try:
        handler_id = logger.add(**handler_config)
    except Exception as e:
        rprint(f"[red]Failed to configure file logging for run '{run_name}': {e}[red]")
        return None
    LOGURU_HANDLERS[run_name] = handler_id
    logger.debug(f"Logging configured for run '{run_name}' in {log_file_path}.")
    return handler_id


def close_logger():
    """Remove every file sink added through :func:`configure_logging`."""
    for run_name in list(LOGURU_HANDLERS):
        try:
            logger.remove(LOGURU_HANDLERS.pop(run_name))
        except ValueError:
            pass


# --- Serialization ---
def format_float(value: float) -> str:
    return FLOAT_FORMAT % value


def round_floats(obj: Any) -> Any:
    """
    Recursively convert a report payload into JSON-ready values with 12 significant digits.

    :param obj: Nested dicts, lists, tuples, numpy arrays and scalars.
    :return: The same structure with floats passed through ``%.12g``.
    """
    if isinstance(obj, Mapping):
        return {str(k): round_floats(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return round_floats(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return [round_floats(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if not np.isfinite(value):
            return None
        return float(format_float(value))
    return obj


def report_to_json(payload: Any) -> str:
    return json.dumps(round_floats(payload), indent=2, ensure_ascii=False) + "\n"


def frame_to_csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def emit_report(report: Any, fmt: str = "json", path: Optional[str] = None) -> str:
    """
    Serialize a report deterministically and optionally write it to a file.

    Reports expose ``to_frame()`` for CSV and ``to_dict()`` for JSON; lists of
    reports are serialized element-wise and plain dicts and DataFrames are
    accepted as they are.

    :param report: A Trajectory, BasinReport, SweepResult, CycleCensus, DominanceReport or list of FixedPointReport.
    :param fmt: Either ``csv`` or ``json``.
    :type fmt: str
    :param path: Output file; when None the text is only returned.
    :type path: str
    :return: The serialized text.
    :rtype: str
    """
    fmt = fmt.lower()
    if fmt == "csv":
        text = frame_to_csv(_as_frame(report))
    elif fmt == "json":
        text = report_to_json(_as_payload(report))
    else:
        raise InvalidArgumentError(f"Unsupported output format '{fmt}', use csv or json.")

    if path is not None:
        folder = os.path.dirname(path)
        try:
            if folder and not os.path.exists(folder):
                os.makedirs(folder)
            with open(path, "w", encoding="utf-8", newline="") as f:
                f.write(text)
        except OSError as e:
            logger.error(f"Writing {fmt} report to {path} failed: {e}")
            raise ReportIOError(path, e) from e
        logger.info(f"Wrote {fmt} report to {path}.")
    return text


def _as_frame(report: Any) -> pd.DataFrame:
    if isinstance(report, pd.DataFrame):
        return report
    if hasattr(report, "to_frame"):
        return report.to_frame()
    if isinstance(report, (list, tuple)):
        return pd.DataFrame([_flat_row(item) for item in report])
    if isinstance(report, Mapping):
        return pd.DataFrame([_flat_row(report)])
    raise InvalidArgumentError(f"Cannot write a {type(report).__name__} as CSV.")


def _as_payload(report: Any) -> Any:
    if isinstance(report, pd.DataFrame):
        return {col: report[col].tolist() for col in report.columns}
    if hasattr(report, "to_dict"):
        return report.to_dict()
    if isinstance(report, (list, tuple)):
        return [_as_payload(item) for item in report]
    return report


def _flat_row(item: Any) -> dict:
    payload = item.to_dict() if hasattr(item, "to_dict") else dict(item)
    row = {}
    for key, value in payload.items():
        if isinstance(value, Mapping):
            for sub_key, sub_value in value.items():
                row[f"{key}.{sub_key}"] = sub_value
        elif isinstance(value, (list, tuple, np.ndarray)):
            row[key] = json.dumps(round_floats(value))
        else:
            row[key] = value
    return row


def parse_float_list(text: str, name: str) -> list:
    """Parse a comma-separated list of floats given on the command line."""
    values = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            values.append(float(chunk))
        except ValueError:
            raise InvalidArgumentError(f"'{chunk}' in {name} is not a number.")
    if not values:
        raise InvalidArgumentError(f"{name} must list at least one value.")
    return values


def resolve_threads(threads: Any) -> int:
    """Turn ``auto`` or a positive integer into a worker count."""
    if threads is None:
        return 1
    if isinstance(threads, str):
        if threads.strip().lower() == "auto":
            return os.cpu_count() or 1
        try:
            threads = int(threads)
        except ValueError:
            raise InvalidArgumentError(f"threads must be a positive integer or 'auto', got '{threads}'.")
    if threads < 1:
        raise InvalidArgumentError(f"threads must be at least 1, got {threads}.")
    return int(threads)


# --- Parallel evaluation ---
def run_chunks(worker: Callable[[Any], Any], chunks: Sequence[Any], threads: int = 1,
               desc: Optional[str] = None) -> list:
    """
    Evaluate ``worker`` on every chunk, optionally on a thread pool.

    Results come back in chunk order whatever the completion order, so
    reductions over them do not depend on scheduling.

    :param worker: Function applied to each chunk.
    :param chunks: The work items.
    :param threads: Number of worker threads; 1 runs inline.
    :type threads: int
    :param desc: Label of the tqdm progress bar; None hides it.
    :type desc: str
    :return: One result per chunk, in input order.
    :rtype: list
    """
    results = [None] * len(chunks)
    progress = tqdm(total=len(chunks), desc=desc, disable=desc is None, leave=False)
    try:
        if threads <= 1 or len(chunks) <= 1:
            for index, chunk in enumerate(chunks):
                results[index] = worker(chunk)
                progress.update(1)
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                futures = {pool.submit(worker, chunk): index for index, chunk in enumerate(chunks)}
                for future in as_completed(futures):
                    results[futures[future]] = future.result()
                    progress.update(1)
    finally:
        progress.close()
    return results
