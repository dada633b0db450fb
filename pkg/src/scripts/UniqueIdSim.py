"""
Module: UniqueIdSim
Command line front end.

    python -m src.scripts.UniqueIdSim run -c data/uniqueid_config/default.yaml --out output/default
    python -m src.scripts.UniqueIdSim attack -c data/uniqueid_config/attack.json --sweep 3..10 --trials 10000
    python -m src.scripts.UniqueIdSim verify --ledger output/default/ledger.jsonl
    python -m src.scripts.UniqueIdSim calibrate --pairs 100000

Diagnostics go to stderr; each command prints one JSON object on stdout.
Exit codes: 0 ok, 1 domain failure, 2 usage or configuration error.
"""

import json
import logging
import sys
from dataclasses import replace
from typing import List

from src.Constants import *
from src.protocol.Ledger import verify_chain
from src.protocol.Replay import replay
from src.simulation.Attack import frontier_points, sweep
from src.simulation.Scenario import run_scenario
from src.utils.CalibrationCache import build_policy, cached_calibration
from src.utils.Errors import ConfigError, RejectedEvent, UniqueIdError
from src.utils.FileWriters import write_attack_report, write_calibration_file, write_frontier_file
from src.utils.Parsers import load_scenario, parse_arguments, parse_ledger_file


def cmd_run(arguments) -> int:
    scenario = load_scenario(arguments.config, arguments.seed, arguments.epochs)
    run = run_scenario(scenario, arguments.out)
    _emit({'out': arguments.out, 'height': run.report['height'], 'state_hash': run.report['state_hash'],
           'verified': None if run.report['final'] is None else run.report['final']['verified']})
    return EXIT_OK


def cmd_attack(arguments) -> int:
    scenario = load_scenario(arguments.config, arguments.seed)
    plan = scenario.adversary
    if plan is None:
        logging.error("%s has no adversary plan", arguments.config)
        return EXIT_USAGE
    trials = plan.attempts if arguments.trials is None else arguments.trials
    if trials < 1:
        logging.error("--trials must be at least 1, got %d", trials)
        return EXIT_USAGE
    k_range = arguments.sweep or (plan.collusion_size, plan.collusion_size)
    reports = sweep(plan, scenario, k_range, trials)
    points = frontier_points(reports, scenario, plan)
    write_frontier_file(arguments.out, points)
    for report in reports:
        write_attack_report(arguments.out, report.collusion_size, report)
    _emit({'out': arguments.out, 'frontier': [p.to_dict() for p in points]})
    return EXIT_OK


def cmd_verify(arguments) -> int:
    try:
        events, malformed = parse_ledger_file(arguments.ledger)
    except OSError:
        return EXIT_USAGE
    broken = verify_chain(events)
    invalid = min(h for h in (broken, malformed) if h is not None) if broken or malformed else None
    if invalid is not None:
        logging.error("Ledger %s is invalid from height %d", arguments.ledger, invalid)
        _emit({'ok': False, 'height': invalid})
        return EXIT_FAILURE
    try:
        state = replay(events)
    except RejectedEvent as e:
        logging.error("Replay of %s failed: %s", arguments.ledger, e)
        _emit({'ok': False, 'height': e.height})
        return EXIT_FAILURE
    _emit({'ok': True, 'height': state.height, 'state_hash': state.state_hash()})
    return EXIT_OK


def cmd_calibrate(arguments) -> int:
    scenario = load_scenario(arguments.config, arguments.seed)
    biometric = scenario.biometric
    if arguments.pairs is not None:
        biometric = replace(biometric, calibration_pairs=arguments.pairs)
    policy, _ = build_policy(replace(biometric, tau=0.0), scenario.seed)
    result = cached_calibration(policy.template_dim, policy.genuine_noise_sigma, biometric.calibration_pairs,
                                scenario.seed)
    content = {**result.to_dict(), 'seed': scenario.seed}
    write_calibration_file(arguments.out, content)
    _emit(content)
    return EXIT_OK


COMMANDS = {
    'run': cmd_run,
    'attack': cmd_attack,
    'verify': cmd_verify,
    'calibrate': cmd_calibrate,
}


def main(args: List[str]) -> int:
    arguments = parse_arguments(args)
    logging.basicConfig(format='[%(levelname)s] [%(module)s] %(message)s', stream=sys.stderr,
                        level=arguments.log_level, force=True)
    try:
        return COMMANDS[arguments.command](arguments)
    except ConfigError as e:
        logging.error("Configuration error: %s", e)
        return EXIT_USAGE
    except UniqueIdError as e:
        logging.error("%s failed: %s", arguments.command, e)
        return EXIT_FAILURE


##################################
# MARK: Private functions
##################################

def _emit(summary: dict) -> None:
    sys.stdout.write(json.dumps(summary, sort_keys=True) + "\n")


if __name__ == '__main__':
    sys.exit(main(sys.argv[1:]))
