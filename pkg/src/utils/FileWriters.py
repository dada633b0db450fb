"""
Module: FileWriters
This module writes the simulator's output files: the ledger, per-epoch
metrics, run reports, registry dumps, attack frontiers and calibration
fixtures.
"""

import json
import logging
import os
from typing import Iterable, List, Sequence

from src.Constants import *
from src.models.AdversaryPlan import AttackReport, CollusionPoint
from src.models.ApplicationState import ApplicationState
from src.models.Event import Event
from src.protocol.Ledger import write_jsonl


def write_ledger_file(folder: str, events: Sequence[Event]) -> str:
    _create_folder(folder)
    output_file_name = f"{folder}/{LEDGER_FILE}"
    try:
        write_jsonl(events, output_file_name)
    except Exception as e:
        logging.error("Failed to write ledger file %s: %s", output_file_name, e)
        raise
    return output_file_name


def write_csv_file(folder: str, file_name: str, fieldnames: List[str], rows: Iterable[dict]) -> str:
    """Write dict rows with a fixed header; floats are printed with repr so runs compare byte for byte."""
    _create_folder(folder)
    output_file_name = f"{folder}/{file_name}"
    try:
        with open(output_file_name, "w") as file:
            file.write(DELIMITER.join(fieldnames) + '\n')
            for row in rows:
                file.write(DELIMITER.join(_cell(row[h]) for h in fieldnames) + '\n')
    except Exception as e:
        logging.error("Failed to write CSV file %s: %s", output_file_name, e)
        raise
    return output_file_name


def write_metrics_file(folder: str, fieldnames: List[str], rows: Iterable[dict]) -> str:
    return write_csv_file(folder, METRICS_FILE, fieldnames, rows)


def write_json_file(folder: str, file_name: str, content: dict) -> str:
    _create_folder(folder)
    output_file_name = f"{folder}/{file_name}"
    try:
        with open(output_file_name, "w") as file:
            json.dump(content, file, indent=2, sort_keys=True)
            file.write('\n')
    except Exception as e:
        logging.error("Failed to write JSON file %s: %s", output_file_name, e)
        raise
    return output_file_name


def write_report_file(folder: str, report: dict) -> str:
    return write_json_file(folder, REPORT_FILE, report)


def write_registry_file(folder: str, state: ApplicationState) -> str:
    """Identity records sorted by public key, plus the verifier records."""
    registry = state.registry
    content = {
        'identities': [registry.identities[pk].to_dict() for pk in sorted(registry.identities)],
        'verifiers': [registry.verifiers[pk].to_dict() for pk in sorted(registry.verifiers)],
        'retired': sorted(registry.retired),
    }
    return write_json_file(folder, REGISTRY_FILE, content)


def write_frontier_file(folder: str, points: Iterable[CollusionPoint]) -> str:
    return write_csv_file(folder, FRONTIER_FILE, CollusionPoint.fieldnames(), (p.to_dict() for p in points))


def write_attack_report(folder: str, k: int, report: AttackReport) -> str:
    return write_json_file(folder, f"attack-k{k}.json", report.to_dict())


def write_calibration_file(folder: str, content: dict) -> str:
    return write_json_file(folder, CALIBRATION_FILE, content)


##################################
# MARK: Private Functions
##################################

def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _create_folder(folder: str) -> None:
    """
    Create the folder if it does not already exist.

    :param folder: Directory path to create.
    """
    try:
        if not os.path.exists(folder):
            os.makedirs(folder)
    except Exception as e:
        logging.error("Failed to create folder %s: %s", folder, e)
        raise
