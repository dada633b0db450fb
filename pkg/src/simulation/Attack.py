"""
Module: Attack
Runs an AdversaryPlan against the full simulator. A Campaign plugs into the
epoch loop: it corrupts its coalition at genesis, pushes its own claims
through the entry gates, answers rejections and A-judge calls for its
identities, and finally accounts for what the attack achieved and cost.
"""

import logging
import math
import os
from typing import List, Optional, Set, Tuple

import numpy as np
from pathos.helpers import cpu_count
from pathos.multiprocessing import ProcessPool as Pool

from src.Constants import *
from src.models.AdversaryPlan import AdversaryPlan, AttackReport, CollusionPoint, DetectionSummary, Strategy
from src.models.BiometricTemplate import MatchPolicy
from src.models.IdentityRecord import EntryGate, IdentityRecord, IdentityStatus, Invitation, PersonId, Stake, \
    VerifierSponsor
from src.models.ScenarioConfig import ScenarioConfig
from src.models.TokenAccount import LOCK_FORFEITED, LOCK_SLASHED
from src.protocol import Audit, Registry, Trust
from src.protocol.Adversary import (corrupt_verifier_behavior, expected_cost, probability_with_grinding,
                                    select_corrupt_verifiers)
from src.simulation.Population import Person
from src.simulation.Simulator import SimulationResult, Simulator
from src.utils.CalibrationCache import build_policy
from src.utils.Errors import AdversaryError, AuditError, BudgetExceeded, GateUnsatisfied, NoEligibleVerifiersInCity

# generator streams, kept apart from the scenario generator
SELECTION_STREAM = 1
ATTEMPT_STREAM = 2

DETECTION_REASONS = (REASON_FAILED_FAKE, REASON_MISSED_DEADLINE)


class Campaign:
    """
    The adversary's side of one simulation. Every attempt draws from its own
    generator, seeded by (scenario seed, attempt index), so attempt i behaves
    the same whatever the coalition size.
    """

    def __init__(self, plan: AdversaryPlan, seed: int) -> None:
        plan.validate()
        self.plan = plan
        self.seed = seed
        self.city: Optional[str] = None
        self.coalition: List[PersonId] = []
        self.targets: Set[PersonId] = set()
        self.launched = 0
        self.blocked = 0
        self.stake_spent = 0
        self.n_eligible = 0
        self._coalition_set: Set[PersonId] = set()
        self._originals: Tuple[int, List[PersonId]] = (-1, [])

    @property
    def bribes(self) -> float:
        return len(self.coalition) * self.plan.bribe_cost_per_verifier

    def controls(self, pk: PersonId) -> bool:
        return pk in self.targets or pk in self._coalition_set

    def setup(self, sim: Simulator) -> None:
        state = sim.state
        rng = np.random.default_rng([self.seed, SELECTION_STREAM])
        self.coalition = select_corrupt_verifiers(state, self.plan, rng, 0)
        self._coalition_set = set(self.coalition)
        for verifier in self.coalition:
            corrupt_verifier_behavior(sim.engine, verifier, self.targets)
        self.city = self.plan.corrupt_city or (state.registry.verifiers[self.coalition[0]].city if self.coalition
                                               else min(state.params.city_thresholds))
        self.n_eligible = len(Trust.eligible_verifiers(state, self.city, 0))
        logging.info("%s campaign: %d of %d verifiers corrupted in %s, %d attempts", self.plan.strategy.value,
                     len(self.coalition), self.n_eligible, self.city, self.plan.attempts)

    def act(self, sim: Simulator, epoch: int) -> None:
        for _ in range(min(self.plan.attempts_per_epoch, self.plan.attempts - self.launched)):
            self._launch(sim, epoch)

    def wants_reassignment(self, sim: Simulator, pk: PersonId) -> bool:
        return self.plan.grind

    def shows_up(self, sim: Simulator, pk: PersonId) -> bool:
        return self.plan.audit_response == RESPONSE_APPEAR

    def on_verified(self, sim: Simulator, record: IdentityRecord, epoch: int) -> None:
        """Under AuditEvasion an honest verifier calls the fresh identity with audit_probability."""
        if record.pk not in self.targets or self.plan.strategy != Strategy.AUDIT_EVASION:
            return
        if sim.rng.random() >= self.plan.audit_probability:
            return
        for verifier in Trust.eligible_verifiers(sim.state, record.city, epoch):
            if self.controls(verifier) or Audit.quota_remaining(sim.state, verifier, epoch) < 1:
                continue
            try:
                Audit.call_ajudge(sim.engine, verifier, record.pk, epoch)
            except AuditError as e:
                logging.debug("Audit of %s by %s skipped: %s", record.pk[:16], verifier[:16], e)
                continue
            return

    def audit(self, sim: Simulator, epoch: int) -> None:
        """Corrupted verifiers betray an identity certified by others and collect the slashed stakes."""
        rate = sim.behaviour.betrayal_rate
        if rate <= 0.0:
            return
        state = sim.state
        for verifier in self.coalition:
            if sim.rng.random() >= rate:
                continue
            victims = [pk for pk in sorted(self.targets & state.registry.verified)
                       if pk not in state.audit.open_targets
                       and verifier not in state.registry.identities[pk].certifiers]
            if not victims:
                return
            try:
                Audit.call_ajudge(sim.engine, verifier, victims[0], epoch)
            except AuditError as e:
                logging.debug("Betrayal by %s skipped: %s", verifier[:16], e)

    def report(self, sim: Simulator) -> AttackReport:
        """
        Aggregate the campaign. A success is a target that reached Verified;
        detected counts the successes later revoked by an A-judge call.
        Forfeited entry stakes and slashed verifier stakes are read from the
        token locks, so they reconcile with the conservation ledger.
        """
        state = sim.state
        revoked_at = {event.payload['pk']: event.epoch for event in sim.engine.ledger.events
                      if event.kind == IDENTITY_REVOKED and event.payload['pk'] in self.targets}
        entered = flagged = successes = detected = surviving = 0
        delays = []
        for pk in sorted(self.targets):
            record = state.registry.identities.get(pk)
            if record is None:
                continue
            entered += 1
            if record.dedup_flags:
                flagged += 1
            if record.verified_epoch is None:
                continue
            successes += 1
            if record.status == IdentityStatus.VERIFIED:
                surviving += 1
            elif record.status == IdentityStatus.REVOKED and record.revoked_reason in DETECTION_REASONS:
                detected += 1
                delays.append(revoked_at[pk] - record.verified_epoch)
        locks = state.tokens.locks.values()
        forfeited = sum(lock.amount for lock in locks if lock.owner in self.targets and lock.status == LOCK_FORFEITED)
        slashed = sum(lock.amount for lock in locks
                      if lock.owner in self._coalition_set and lock.status == LOCK_SLASHED)
        return AttackReport(
            strategy=self.plan.strategy.value,
            collusion_size=len(self.coalition),
            attempts=self.launched,
            entered=entered,
            blocked=self.blocked,
            flagged=flagged,
            successes=successes,
            detected=detected,
            bribes=self.bribes,
            forfeited=forfeited,
            slashed=slashed,
            time_to_detection=_detection_summary(delays),
            analytic_success_prob=self._analytic(sim),
            surviving=surviving,
        )

    ##################################
    # MARK: Private functions
    ##################################

    def _launch(self, sim: Simulator, epoch: int) -> None:
        index = self.launched
        self.launched += 1
        rng = np.random.default_rng([self.seed, ATTEMPT_STREAM, index])
        if self.plan.strategy == Strategy.DUPLICATE_ENROLLMENT:
            original = self._pick_original(sim, rng, epoch)
            if original is None:
                self.blocked += 1
                return
            person = sim.population.spawn_duplicate(rng, original)
        else:
            person = sim.population.spawn_fake(rng, self.city)
        self.targets.add(person.pk)
        gate = self._open_gate(sim, person, index, epoch)
        if gate is not None:
            try:
                sim.claim(person, gate, epoch)
                return
            except (GateUnsatisfied, NoEligibleVerifiersInCity) as e:
                logging.debug("Attempt %d blocked: %s", index, e)
        self.blocked += 1
        self.targets.discard(person.pk)
        sim.population.discard(person.pk)

    def _pick_original(self, sim: Simulator, rng: np.random.Generator, epoch: int) -> Optional[Person]:
        cached_epoch, originals = self._originals
        if cached_epoch != epoch:
            people = sim.population.people
            originals = [pk for pk in sorted(sim.state.registry.verified)
                         if pk in people and not people[pk].adversarial and people[pk].city == self.city]
            self._originals = (epoch, originals)
        if not originals:
            return None
        return sim.population[originals[int(rng.integers(len(originals)))]]

    def _open_gate(self, sim: Simulator, person: Person, index: int, epoch: int) -> Optional[EntryGate]:
        kind = GATE_STAKE if self.plan.strategy == Strategy.STAKE_GRINDING else self.plan.gate
        if kind == GATE_SPONSOR:
            sponsor = self._coalition_sponsor(sim, index, epoch)
            if sponsor is not None:
                return VerifierSponsor(sponsor)
        elif kind == GATE_INVITATION:
            inviter = self._coalition_inviter(sim)
            if inviter is not None:
                return Invitation(inviter)
        return self._buy_stake(sim, person, epoch)

    def _coalition_sponsor(self, sim: Simulator, index: int, epoch: int) -> Optional[PersonId]:
        state, params = sim.state, sim.state.params
        window = epoch // params.sponsor_window_epochs
        n = len(self.coalition)
        for j in range(n):
            verifier = self.coalition[(index + j) % n]
            record = state.registry.verifiers[verifier]
            if record.sponsor_quota_remaining(params.sponsor_quota, window) > 0 and \
                    Trust.is_eligible_verifier(state, verifier, epoch):
                return verifier
        return None

    def _coalition_inviter(self, sim: Simulator) -> Optional[PersonId]:
        registry = sim.state.registry
        for pk in sorted((self._coalition_set | self.targets) & registry.verified):
            if registry.identities[pk].invitations_remaining > 0:
                return pk
        return None

    def _buy_stake(self, sim: Simulator, person: Person, epoch: int) -> Optional[EntryGate]:
        amount = Registry.required_entry_stake(sim.state, person.city)
        if self.bribes + self.stake_spent + amount > self.plan.budget:
            return None
        if not sim.buy_tokens(person.pk, amount, epoch):
            return None
        self.stake_spent += amount
        return Stake(amount)

    def _analytic(self, sim: Simulator) -> Optional[float]:
        if self.plan.strategy not in (Strategy.FAKE_IDENTITY_FACTORY, Strategy.STAKE_GRINDING):
            return None
        params = sim.state.params
        k = len(self.coalition)
        if k > self.n_eligible or params.certs_required > self.n_eligible:
            return None
        max_reassignments = params.max_reassignments if self.plan.grind else 0
        return probability_with_grinding(self.n_eligible, k, params.certs_required, max_reassignments)


def campaign_epochs(plan: AdversaryPlan, scenario: ScenarioConfig) -> int:
    """Epochs for every attempt to launch, finish verification and sit out one audit deadline."""
    params = scenario.protocol
    launch = math.ceil(plan.attempts / plan.attempts_per_epoch)
    tail = params.certs_required * (params.max_reassignments + 1) + params.ajudge_deadline_epochs + 2
    return max(scenario.epochs, launch + tail)


def check_budget(plan: AdversaryPlan, scenario: ScenarioConfig) -> None:
    """
    :raises BudgetExceeded: bribes (plus base stakes for stake-gated attempts) exceed the budget.
    """
    required = plan.collusion_size * plan.bribe_cost_per_verifier
    if plan.strategy == Strategy.STAKE_GRINDING or plan.gate == GATE_STAKE:
        required += plan.attempts * scenario.protocol.monetary.base_stake
    if required > plan.budget:
        raise BudgetExceeded(required, plan.budget)


def execute_attack(plan: AdversaryPlan, scenario: ScenarioConfig,
                   policy: Optional[MatchPolicy] = None) -> Tuple[AttackReport, SimulationResult]:
    """run_attack, also handing back the simulation it ran."""
    plan.validate()
    if plan.attempts < 1:
        raise AdversaryError("a campaign needs at least one attempt")
    check_budget(plan, scenario)
    if policy is None:
        policy, _ = build_policy(scenario.biometric, scenario.seed)
    scenario = scenario.with_adversary(plan).with_overrides(epochs=campaign_epochs(plan, scenario))
    campaign = Campaign(plan, scenario.seed)
    sim = Simulator(scenario, policy, campaign)
    result = sim.run()
    return campaign.report(sim), result


def run_attack(plan: AdversaryPlan, scenario: ScenarioConfig, policy: Optional[MatchPolicy] = None) -> AttackReport:
    """
    Execute plan against a full simulation of scenario.

    :raises BudgetExceeded: the plan cannot be paid for.
    :raises AdversaryError: the plan has no attempts.
    """
    report, _ = execute_attack(plan, scenario, policy)
    return report


def sweep(plan: AdversaryPlan, scenario: ScenarioConfig, k_range: Tuple[int, int],
          trials: int) -> List[AttackReport]:
    """
    One run_attack of trials attempts per coalition size in k_range
    (inclusive). Runs share the scenario seed, so the same attempt meets the
    same assignments at every k; the result does not depend on how many
    worker processes run them.
    """
    if trials < 1:
        raise AdversaryError("a sweep needs at least one trial")
    k_min, k_max = k_range
    if k_min < 0 or k_max < k_min:
        raise AdversaryError(f"invalid sweep range {k_min}..{k_max}")
    policy, _ = build_policy(scenario.biometric, scenario.seed)
    jobs = [(plan.with_count(k).with_attempts(trials), scenario, policy) for k in range(k_min, k_max + 1)]
    workers = min(len(jobs), _worker_count())
    if workers <= 1:
        reports = [_run_job(job) for job in jobs]
    else:
        pool = Pool(workers)
        try:
            reports = pool.map(_run_job, jobs)
        finally:
            pool.close()
            pool.join()
            pool.clear()
    for report in reports:
        logging.info("k=%d: %d/%d successes (analytic %s)", report.collusion_size, report.successes,
                     report.attempts, report.analytic_success_prob)
    return reports


def frontier_points(reports: List[AttackReport], scenario: ScenarioConfig, plan: AdversaryPlan) -> List[CollusionPoint]:
    params = scenario.protocol
    return [CollusionPoint(k=r.collusion_size, success_prob=r.success_prob,
                           expected_cost=expected_cost(r.collusion_size, r.success_prob, params.certs_required,
                                                       plan.bribe_cost_per_verifier, params.monetary.verifier_stake,
                                                       plan.audit_probability))
            for r in reports]


##################################
# MARK: Private functions
##################################

def _run_job(job: Tuple[AdversaryPlan, ScenarioConfig, MatchPolicy]) -> AttackReport:
    plan, scenario, policy = job
    return run_attack(plan, scenario, policy)


def _worker_count() -> int:
    try:
        threads = int(os.environ.get(ENV_SIM_THREADS, "0"))
    except ValueError:
        logging.warning("Ignoring %s=%s", ENV_SIM_THREADS, os.environ.get(ENV_SIM_THREADS))
        threads = 0
    return threads if threads > 0 else cpu_count()


def _detection_summary(delays: List[int]) -> DetectionSummary:
    if not delays:
        return DetectionSummary(count=0, mean_epochs=None, median_epochs=None, max_epochs=None)
    values = np.asarray(delays, dtype=float)
    return DetectionSummary(count=len(delays), mean_epochs=float(values.mean()),
                            median_epochs=float(np.median(values)), max_epochs=int(values.max()))
