"""
Module: Scenario
One end-to-end scenario run: calibrate the matcher, simulate every epoch
(with the scenario's adversary campaign, if it has one) and write the
ledger, metrics, report and registry files.
"""

import logging
from dataclasses import dataclass
from typing import Optional

from src.models.AdversaryPlan import AttackReport
from src.models.ScenarioConfig import ScenarioConfig
from src.protocol import Tokens
from src.simulation.Attack import Campaign, check_budget
from src.simulation.Metrics import MetricsRow
from src.simulation.Simulator import SimulationResult, Simulator
from src.utils.CalibrationCache import build_policy
from src.utils.FileWriters import write_ledger_file, write_metrics_file, write_registry_file, write_report_file


@dataclass
class ScenarioRun:
    result: SimulationResult
    report: dict
    attack: Optional[AttackReport] = None


def run_scenario(scenario: ScenarioConfig, out: Optional[str] = None) -> ScenarioRun:
    """
    Run a scenario and, when out is given, write ledger.jsonl, metrics.csv,
    report.json and registry.json into it.

    :raises ConfigInvalid: the scenario cannot be run as configured.
    :raises CalibrationFailed: the calibrated matcher misses max-eer.
    :raises BudgetExceeded: the adversary plan cannot be paid for.
    """
    policy, calibration = build_policy(scenario.biometric, scenario.seed)
    campaign = None
    if scenario.adversary is not None and scenario.adversary.attempts > 0:
        check_budget(scenario.adversary, scenario)
        campaign = Campaign(scenario.adversary, scenario.seed)
    sim = Simulator(scenario, policy, campaign)
    result = sim.run()
    attack = campaign.report(sim) if campaign is not None else None
    state = result.engine.state
    report = {
        'seed': scenario.seed,
        'epochs': scenario.epochs,
        'setup': scenario.setup,
        'height': state.height,
        'state_hash': result.state_hash,
        'turned_away': result.turned_away,
        'match_policy': policy.to_dict(),
        'calibration': None if calibration is None else calibration.to_dict(),
        'params': state.params.to_dict(),
        'supply': Tokens.supply_stats(state, tuple(scenario.allocation_pks())).to_dict(),
        'final': result.metrics[-1].to_dict() if result.metrics else None,
        'attack': None if attack is None else attack.to_dict(),
    }
    if out is not None:
        write_ledger_file(out, result.ledger.events)
        write_metrics_file(out, MetricsRow.fieldnames(), (row.to_dict() for row in result.metrics))
        write_report_file(out, report)
        write_registry_file(out, state)
        logging.info("Wrote %d events and %d metric rows to %s", state.height, len(result.metrics), out)
    return ScenarioRun(result=result, report=report, attack=attack)
