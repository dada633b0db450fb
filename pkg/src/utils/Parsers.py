"""
Module: Parsers
This module parses the command line of the simulator and loads scenario
configuration files (YAML or JSON) and ledger files.
"""

import argparse
import json
import logging
from typing import List, Optional, Tuple

import yaml

from src.Constants import *
from src.models.Event import Event
from src.models.ScenarioConfig import ScenarioConfig
from src.protocol.Ledger import read_jsonl
from src.utils.Errors import ConfigInvalid

CONFIG_KEY = "config"


def parse_arguments(args: List[str]) -> argparse.Namespace:
    """
    Parse the simulator command line.

    Commands:
      - run -c <config> [--seed S] [--epochs E] [--out DIR]
      - attack -c <config> [--sweep K1..K2] [--trials T] [--out DIR]
      - verify --ledger <ledger.jsonl>
      - calibrate [-c <config>] [--pairs N] [--out DIR]

    Argument errors exit with status 2.
    """
    parser = argparse.ArgumentParser(prog="python -m src.scripts.UniqueIdSim",
                                     description="Proof-of-unique-human protocol simulator")
    parser.add_argument("--log-level", default="WARNING",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"])
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="run one scenario")
    run.add_argument(CONFIG_FLAG, "--config", required=True)
    run.add_argument("--seed", type=int)
    run.add_argument("--epochs", type=int)
    run.add_argument("--out", default=DEFAULT_OUTPUT_FOLDER)

    attack = commands.add_parser("attack", help="sweep coalition sizes for the scenario's adversary plan")
    attack.add_argument(CONFIG_FLAG, "--config", required=True)
    attack.add_argument("--sweep", type=parse_sweep)
    attack.add_argument("--trials", type=int)
    attack.add_argument("--seed", type=int)
    attack.add_argument("--out", default=DEFAULT_OUTPUT_FOLDER)

    verify = commands.add_parser("verify", help="check a ledger's hash chain and replay it")
    verify.add_argument("--ledger", required=True)

    calibrate = commands.add_parser("calibrate", help="calibrate the biometric matcher")
    calibrate.add_argument(CONFIG_FLAG, "--config")
    calibrate.add_argument("--seed", type=int)
    calibrate.add_argument("--pairs", type=int)
    calibrate.add_argument("--out", default=DEFAULT_OUTPUT_FOLDER)

    return parser.parse_args(args)


def parse_sweep(value: str) -> Tuple[int, int]:
    """Parse "k_min..k_max" into an inclusive range."""
    try:
        low, high = (int(part) for part in value.split(".."))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected K_MIN..K_MAX, got {value}")
    if low < 0 or high < low:
        raise argparse.ArgumentTypeError(f"empty or negative sweep {value}")
    return (low, high)


def load_config_file(path: str) -> dict:
    """
    Load a scenario file: .json through json, anything else through yaml.safe_load.

    :raises ConfigInvalid: the file is unreadable, malformed or not a mapping.
    """
    try:
        with open(path, 'r') as file:
            if path.endswith(".json"):
                data = json.load(file)
            else:
                data = yaml.safe_load(file)
    except (OSError, json.JSONDecodeError, yaml.YAMLError) as e:
        logging.error("Failed to load config file %s: %s", path, e)
        raise ConfigInvalid(CONFIG_KEY, f"cannot load {path}: {e}")
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigInvalid(CONFIG_KEY, f"{path} does not hold a mapping")
    return data


def load_scenario(path: Optional[str], seed: Optional[int] = None, epochs: Optional[int] = None) -> ScenarioConfig:
    """Load and validate a scenario; flag values override the file."""
    data = load_config_file(path) if path else {}
    try:
        scenario = ScenarioConfig.from_dict(data)
    except (TypeError, ValueError, KeyError, AttributeError) as e:
        raise ConfigInvalid(CONFIG_KEY, f"malformed value: {e}")
    if epochs is not None and epochs < 0:
        raise ConfigInvalid(EPOCHS, "must be non-negative")
    return scenario.with_overrides(seed=seed, epochs=epochs)


def parse_ledger_file(path: str) -> Tuple[List[Event], Optional[int]]:
    """
    :return: The parsed events and the height of the first malformed line, if any.
    """
    try:
        return read_jsonl(path)
    except OSError as e:
        logging.error("Error reading ledger file %s: %s", path, e)
        raise
