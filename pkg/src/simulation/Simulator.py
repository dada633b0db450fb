"""
Module: Simulator
Epoch loop driving every protocol module in a fixed phase order:

    parameter changes -> beacon -> arrivals -> verification -> renewals,
    mortality and expiry -> audits -> governance -> economics -> metrics

All randomness comes from one generator seeded by the scenario; every
collection of actors is visited in ascending public-key order, so a scenario
and seed always produce the same ledger byte for byte.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from src.Constants import *
from src.models.BiometricTemplate import MatchPolicy
from src.models.Community import Community, ProposalStatus, Vote
from src.models.IdentityRecord import EntryGate, IdentityRecord, IdentityStatus, Invitation, PersonId, Stake, \
    VerifierSponsor
from src.models.ScenarioConfig import CityConfig, ScenarioConfig
from src.protocol import Audit, Governance, Registry, Tokens, Trust
from src.protocol.Engine import ProtocolEngine
from src.protocol.Replay import replay
from src.simulation.Metrics import MetricsRow, collect_metrics
from src.simulation.Population import Person, Population
from src.utils.Errors import (AuditError, ConfigInvalid, GateUnsatisfied, GovernanceError,
                              InsufficientBalance, InsufficientGenesisVerifiers, NoEligibleVerifiersInCity,
                              NoVotesCast, ReplayDivergence, TokenError, TrustError)

STAKE_PURCHASE = "stake-purchase"
GATE_FALLBACK_ORDER = (GATE_INVITATION, GATE_SPONSOR, GATE_STAKE)


@dataclass
class SimulationResult:
    engine: ProtocolEngine
    population: Population
    metrics: List[MetricsRow] = field(default_factory=list)
    turned_away: int = 0
    state_hash: Optional[str] = None

    @property
    def ledger(self):
        return self.engine.ledger


class Simulator:
    """
    One scenario run. A campaign (see Attack) may be attached; it is asked
    to act during arrivals and audits and decides how the adversary's own
    identities behave.
    """

    def __init__(self, scenario: ScenarioConfig, policy: MatchPolicy, campaign=None) -> None:
        self.scenario = scenario
        self.behaviour = scenario.behaviour
        self.rng = np.random.default_rng(scenario.seed)
        self.engine = ProtocolEngine(policy)
        self.population = Population(scenario.seed, policy)
        self.campaign = campaign
        self.metrics: List[MetricsRow] = []
        self.turned_away = 0
        self.arrivals: Dict[str, int] = {city.city_id: 0 for city in scenario.cities}
        self._inviters: Dict[str, List[PersonId]] = {}
        self._candidates: Dict[int, List[PersonId]] = {}

    @property
    def state(self):
        return self.engine.state

    def run(self, epochs: Optional[int] = None) -> SimulationResult:
        epochs = self.scenario.epochs if epochs is None else epochs
        self.genesis()
        for epoch in range(1, epochs + 1):
            self.step(epoch)
        result = SimulationResult(engine=self.engine, population=self.population, metrics=self.metrics,
                                  turned_away=self.turned_away, state_hash=self.state.state_hash())
        if self.scenario.verify_replay:
            replayed = replay(self.engine.ledger.events).state_hash()
            if replayed != result.state_hash:
                raise ReplayDivergence(result.state_hash, replayed)
        return result

    def genesis(self) -> None:
        """
        Genesis block: configuration, ICO allocation, then per city the genesis
        verifiers, their supporters, the round-robin delegations and the
        verifier stakes bought from the funding account.

        :raises InsufficientGenesisVerifiers: a city cannot supply certs_required verifiers.
        """
        scenario, params = self.scenario, self.scenario.protocol
        for city in scenario.cities:
            if city.genesis_verifiers < params.certs_required:
                raise InsufficientGenesisVerifiers(city.city_id, city.genesis_verifiers, params.certs_required)
        Registry.configure_genesis(self.engine, scenario.seed, scenario.setup, params)
        Tokens.genesis_allocate(self.engine, scenario.allocation_pks())
        for city in scenario.cities:
            self._seed_city(city)
        if self.campaign is not None:
            self.campaign.setup(self)
        logging.info("Genesis (%s): %d identities, %d verifiers, ledger height %d", scenario.setup,
                     len(self.state.registry.identities), len(self.state.registry.verifiers), self.state.height)

    def step(self, epoch: int) -> MetricsRow:
        Governance.apply_pending_changes(self.engine, epoch)
        Registry.advance_beacon(self.engine, epoch)
        self._arrivals_phase(epoch)
        self._verification_phase(epoch)
        self._lifecycle_phase(epoch)
        self._audit_phase(epoch)
        self._governance_phase(epoch)
        self._economics_phase(epoch)
        row = collect_metrics(self.state, epoch, self.turned_away, self._ico_accounts())
        self.metrics.append(row)
        logging.debug("Epoch %d: height %d, %d verified, %d pending", epoch, row.height, row.verified,
                      row.pending_entry + row.pending_verification)
        return row

    def present(self, pk: PersonId):
        return self.population.present(pk, self.rng)

    def claim(self, person: Person, gate: EntryGate, epoch: int) -> IdentityRecord:
        return Registry.claim_identity(self.engine, person.pk, person.template, person.city, gate, epoch)

    def buy_tokens(self, pk: PersonId, amount: int, epoch: int) -> bool:
        """Top pk's balance up to amount from the funding account; False when the market is dry."""
        missing = amount - self.state.tokens.balance_of(pk)
        if missing <= 0:
            return True
        try:
            Tokens.transfer(self.engine, self.engine.params.funding_account, pk, missing, STAKE_PURCHASE, epoch)
        except InsufficientBalance:
            return False
        return True

    ##################################
    # MARK: Genesis
    ##################################

    def _seed_city(self, city: CityConfig) -> None:
        engine, params = self.engine, self.engine.params
        n = city.genesis_verifiers
        threshold = params.threshold_for(city.city_id)
        verifiers = [self.population.spawn(self.rng, city.city_id) for _ in range(n)]
        for person in verifiers:
            Registry.register_genesis_identity(engine, person.pk, person.template, city.city_id,
                                               Registry.ROLE_VERIFIER)
        # a lone verifier cannot receive a delegation from a peer
        per_verifier = threshold - 1 if n > 1 else threshold
        supporters = []
        for person in verifiers:
            for _ in range(per_verifier):
                supporter = self.population.spawn(self.rng, city.city_id)
                Registry.register_genesis_identity(engine, supporter.pk, supporter.template, city.city_id,
                                                   Registry.ROLE_SUPPORTER)
                supporters.append((supporter.pk, person.pk))
        if n > 1:
            for i, person in enumerate(verifiers):
                Trust.delegate(engine, person.pk, verifiers[(i + 1) % n].pk, 0)
        for supporter_pk, verifier_pk in supporters:
            Trust.delegate(engine, supporter_pk, verifier_pk, 0)
        stake = params.monetary.verifier_stake
        for person in verifiers:
            if not self.buy_tokens(person.pk, stake, 0):
                raise ConfigInvalid(FUNDING_ACCOUNT, "funding account cannot pay the genesis verifier stakes")
            Registry.register_verifier(engine, person.pk, 0)
            Tokens.lock_stake(engine, person.pk, stake, LOCK_VERIFIER, 0)

    ##################################
    # MARK: Arrivals
    ##################################

    def _arrivals_phase(self, epoch: int) -> None:
        self._inviters = {}
        turned_away = self.turned_away
        for city in self.scenario.cities:
            count = int(np.floor(city.arrival_rate + self.rng.random()))
            if city.max_arrivals is not None:
                count = max(0, min(count, city.max_arrivals - self.arrivals[city.city_id]))
            self.arrivals[city.city_id] += count
            for _ in range(count):
                self._arrive(city.city_id, epoch)
        if self.turned_away > turned_away:
            logging.warning("Epoch %d: %d arrivals turned away at the entry gates", epoch,
                            self.turned_away - turned_away)
        if self.campaign is not None:
            self.campaign.act(self, epoch)

    def _arrive(self, city: str, epoch: int) -> None:
        person = self.population.spawn(self.rng, city)
        for kind in self._gate_order():
            gate = self._open_gate(kind, person, epoch)
            if gate is None:
                continue
            try:
                self.claim(person, gate, epoch)
                return
            except GateUnsatisfied as e:
                logging.debug("Gate %s refused %s: %s", kind, person.pk[:16], e.reason)
            except NoEligibleVerifiersInCity:
                break
        self.population.discard(person.pk)
        self.turned_away += 1

    def _gate_order(self) -> List[str]:
        weights = self.behaviour.entry_gates
        kinds = [kind for kind in GATE_FALLBACK_ORDER if weights.get(kind, 0.0) > 0.0]
        if not kinds:
            return []
        p = np.array([weights[kind] for kind in kinds])
        first = kinds[int(self.rng.choice(len(kinds), p=p / p.sum()))]
        return [first] + [kind for kind in kinds if kind != first]

    def _open_gate(self, kind: str, person: Person, epoch: int) -> Optional[EntryGate]:
        if kind == GATE_INVITATION:
            inviter = self._pick_inviter(person.city)
            return None if inviter is None else Invitation(inviter)
        if kind == GATE_SPONSOR:
            sponsor = self._pick_sponsor(person.city, epoch)
            return None if sponsor is None else VerifierSponsor(sponsor)
        amount = Registry.required_entry_stake(self.state, person.city)
        return Stake(amount) if self.buy_tokens(person.pk, amount, epoch) else None

    def _pick_inviter(self, city: str) -> Optional[PersonId]:
        registry = self.state.registry
        pool = self._inviters.get(city)
        if pool is None:
            pool = sorted(pk for pk in registry.verified
                          if registry.identities[pk].city == city and registry.identities[pk].invitations_remaining > 0
                          and not self._adversarial(pk))
            self._inviters[city] = pool
        while pool:
            i = int(self.rng.integers(len(pool)))
            record = registry.identities[pool[i]]
            if record.status == IdentityStatus.VERIFIED and record.invitations_remaining > 0:
                return record.pk
            pool.pop(i)
        return None

    def _pick_sponsor(self, city: str, epoch: int) -> Optional[PersonId]:
        params = self.engine.params
        window = epoch // params.sponsor_window_epochs
        registry = self.state.registry
        pool = [v for v in Trust.eligible_verifiers(self.state, city, epoch)
                if registry.verifiers[v].sponsor_quota_remaining(params.sponsor_quota, window) > 0
                and not self._adversarial(v)]
        if not pool:
            return None
        return pool[int(self.rng.integers(len(pool)))]

    ##################################
    # MARK: Verification
    ##################################

    def _verification_phase(self, epoch: int) -> None:
        for pk in sorted(self.state.registry.pending):
            self._verification_step(pk, epoch)

    def _verification_step(self, pk: PersonId, epoch: int) -> None:
        """At most one certificate visit per pending identity and epoch."""
        record = self.state.registry.identities.get(pk)
        if record is None or record.status != IdentityStatus.PENDING_VERIFICATION:
            return
        if record.rejection_pending:
            self._answer_rejection(record, epoch)
            return
        if record.current_assignee is None:
            try:
                Registry.assign_next_verifier(self.engine, pk, epoch)
            except NoEligibleVerifiersInCity:
                return
        Registry.submit_certificate(self.engine, record.current_assignee, pk, self.present(pk), epoch)
        if record.status == IdentityStatus.VERIFIED:
            self._on_verified(record, epoch)
        elif record.rejection_pending:
            self._answer_rejection(record, epoch)

    def _answer_rejection(self, record: IdentityRecord, epoch: int) -> None:
        retry = self.campaign.wants_reassignment(self, record.pk) if self._adversarial(record.pk) else True
        if retry and record.reassignments_used < self.engine.params.max_reassignments:
            try:
                Registry.request_reassignment(self.engine, record.pk, epoch)
            except NoEligibleVerifiersInCity as e:
                logging.debug("Reassignment of %s deferred: %s", record.pk[:16], e)
            return
        Registry.abandon_verification(self.engine, record.pk, epoch)

    def _on_verified(self, record: IdentityRecord, epoch: int) -> None:
        if self._adversarial(record.pk):
            self.campaign.on_verified(self, record, epoch)
            return
        if self.rng.random() >= self.behaviour.delegation_rate:
            return
        gate = record.entry_gate
        target = gate.inviter or gate.sponsor
        if target is None:
            eligible = Trust.eligible_verifiers(self.state, record.city, epoch)
            if not eligible:
                return
            target = eligible[int(self.rng.integers(len(eligible)))]
        try:
            Trust.delegate(self.engine, record.pk, target, epoch)
        except TrustError as e:
            logging.debug("Delegation of %s skipped: %s", record.pk[:16], e)

    ##################################
    # MARK: Renewal, mortality, expiry
    ##################################

    def _lifecycle_phase(self, epoch: int) -> None:
        registry = self.state.registry
        lead = self.behaviour.renewal_lead_epochs
        for pk in sorted(registry.verified):
            record = registry.identities[pk]
            if not record.expiry_epoch - lead <= epoch <= record.expiry_epoch:
                continue
            person = self.population.people.get(pk)
            if person is None or not person.alive:
                continue
            if self.rng.random() >= self.behaviour.renewal_participation:
                continue
            try:
                verifier = Registry.renewal_verifier(self.state, pk, epoch)
            except NoEligibleVerifiersInCity:
                continue
            Registry.renew_identity(self.engine, pk, self.present(pk), verifier, epoch)
        if self.behaviour.mortality_rate > 0.0:
            living = [pk for pk in sorted(registry.verified)
                      if pk in self.population and self.population[pk].alive]
            for pk, draw in zip(living, self.rng.random(len(living))):
                if draw < self.behaviour.mortality_rate:
                    self.population[pk].alive = False
        Registry.expire_identities(self.engine, epoch)

    ##################################
    # MARK: Audits
    ##################################

    def _audit_phase(self, epoch: int) -> None:
        engine, state = self.engine, self.state
        Audit.expire_audit_calls(engine, epoch)
        for pk in sorted(state.registry.pending):
            if state.registry.identities[pk].status == IdentityStatus.PENDING_ENTRY:
                try:
                    Audit.adjudicate_duplicate_claim(engine, pk, epoch, self.present(pk))
                except NoEligibleVerifiersInCity as e:
                    logging.warning("Duplicate adjudication of %s deferred: %s", pk[:16], e)
        for call_id in sorted(i for i, call in state.audit.calls.items() if call.open and call.called_epoch < epoch):
            call = state.audit.calls[call_id]
            if not self._shows_up(call.target):
                continue
            try:
                Audit.adjudicate(engine, call_id, epoch, self.present(call.target))
            except (AuditError, NoEligibleVerifiersInCity) as e:
                logging.warning("A-judge call %d not adjudicated: %s", call_id, e)
        Audit.random_check(engine, epoch, self.rng, self.behaviour.random_check_rate)
        if self.behaviour.honest_recheck_rate > 0.0:
            self._honest_rechecks(epoch)
        if self.campaign is not None:
            self.campaign.audit(self, epoch)

    def _honest_rechecks(self, epoch: int) -> None:
        state = self.state
        targets = sorted(state.registry.verified)
        for city in sorted(state.params.city_thresholds):
            for verifier in list(Trust.eligible_verifiers(state, city, epoch)):
                if self._adversarial(verifier) or self.rng.random() >= self.behaviour.honest_recheck_rate:
                    continue
                target = targets[int(self.rng.integers(len(targets)))]
                if target == verifier or target not in state.registry.verified:
                    continue
                try:
                    Audit.call_ajudge(self.engine, verifier, target, epoch)
                except AuditError as e:
                    logging.debug("Re-check by %s skipped: %s", verifier[:16], e)

    def _shows_up(self, pk: PersonId) -> bool:
        person = self.population.people.get(pk)
        if person is None or not person.alive:
            return False
        if person.adversarial:
            return self.campaign.shows_up(self, pk)
        return bool(self.rng.random() < self.behaviour.ajudge_show_rate)

    ##################################
    # MARK: Governance
    ##################################

    def _governance_phase(self, epoch: int) -> None:
        engine, governance, params = self.engine, self.state.governance, self.engine.params
        term_over = governance.term == 0 or epoch - governance.formed_epoch >= params.governance_term_epochs
        if term_over and len(self.state.registry.verified) >= params.community_size[0]:
            Governance.form_communities(engine, epoch)
            self._candidates = {}
        if governance.term == 0:
            return
        for layer in Governance.LAYERS:
            if layer > 1 and not self._layer_current(layer):
                below = governance.layer_groups(layer - 1)
                if not below or any(g.representative is None for g in below):
                    break
                Governance.form_layer(engine, layer, epoch)
            self._run_elections(layer, epoch)
        self._run_proposals(epoch)

    def _layer_current(self, layer: int) -> bool:
        governance = self.state.governance
        if layer not in governance.layers:
            return False
        members = sorted(pk for g in governance.layer_groups(layer) for pk in g.members)
        return members == governance.layer_representatives(layer - 1)

    def _run_elections(self, layer: int, epoch: int) -> None:
        for group in self.state.governance.layer_groups(layer):
            if group.representative is None:
                if not group.ballots:
                    Governance.cast_ballots(self.engine, group.community_id, self._draw_ballots(group), epoch)
                try:
                    Governance.elect_representative(self.engine, group.community_id, epoch)
                except NoVotesCast as e:
                    logging.warning("Group %d elected nobody: %s", group.community_id, e)
            elif self.behaviour.ballot_switch_rate > 0.0:
                self._switch_ballots(group, epoch)
                Governance.invalidate_representative(self.engine, group.community_id, epoch)

    def _group_candidates(self, group: Community) -> List[PersonId]:
        candidates = self._candidates.get(group.community_id)
        if candidates is None:
            size = min(self.behaviour.candidates_per_community, len(group.members))
            picks = self.rng.choice(len(group.members), size=size, replace=False)
            candidates = sorted(group.members[int(i)] for i in picks)
            self._candidates[group.community_id] = candidates
        return candidates

    def _voters(self, group: Community) -> List[PersonId]:
        return [pk for pk in group.members if pk in self.state.registry.verified]

    def _draw_ballots(self, group: Community) -> Dict[PersonId, PersonId]:
        candidates = self._group_candidates(group)
        ballots = {}
        for voter in self._voters(group):
            if self.rng.random() < self.behaviour.governance_participation:
                ballots[voter] = candidates[int(self.rng.integers(len(candidates)))]
        return ballots

    def _switch_ballots(self, group: Community, epoch: int) -> None:
        candidates = self._group_candidates(group)
        if len(candidates) < 2:
            return
        for voter in sorted(group.ballots):
            if voter not in self.state.registry.verified:
                continue
            if self.rng.random() < self.behaviour.ballot_switch_rate:
                others = [c for c in candidates if c != group.ballots[voter]]
                Governance.change_ballot(self.engine, group.community_id, voter,
                                         others[int(self.rng.integers(len(others)))], epoch)

    def _run_proposals(self, epoch: int) -> None:
        engine, governance = self.engine, self.state.governance
        for scheduled in self.behaviour.proposals:
            if scheduled.epoch != epoch:
                continue
            proposers = governance.layer_representatives(3)
            if not proposers:
                logging.warning("Epoch %d: no layer-3 representative to propose %s", epoch, scheduled.parameter)
                continue
            try:
                Governance.open_proposal(engine, proposers[0], scheduled.parameter, scheduled.value,
                                         scheduled.importance, epoch)
            except GovernanceError as e:
                logging.warning("Proposal on %s not opened: %s", scheduled.parameter, e)
        for proposal_id in sorted(governance.proposals):
            proposal = governance.proposals[proposal_id]
            if proposal.status != ProposalStatus.OPEN:
                continue
            if epoch < proposal.close_epoch:
                for layer in Governance.LAYERS:
                    cast = proposal.votes.get(layer, {})
                    votes = {}
                    for rep in governance.layer_representatives(layer):
                        if rep in cast or self.rng.random() >= self.behaviour.governance_participation:
                            continue
                        approve = self.rng.random() < self.behaviour.proposal_approval_rate
                        votes[rep] = Vote.APPROVE if approve else Vote.REJECT
                    Governance.cast_proposal_votes(engine, proposal_id, layer, votes, epoch)
            else:
                try:
                    Governance.tally(engine, proposal_id, epoch)
                except GovernanceError as e:
                    logging.warning("Proposal %d not tallied: %s", proposal_id, e)

    ##################################
    # MARK: Economics
    ##################################

    def _economics_phase(self, epoch: int) -> None:
        """Register identities whose trust weight crossed the threshold and (re-)lock verifier stakes."""
        state, params = self.state, self.engine.params
        registry = state.registry
        for pk in sorted(state.trust.weight):
            record = registry.identities.get(pk)
            if record is None or record.status != IdentityStatus.VERIFIED or pk in registry.verifiers:
                continue
            if state.trust.weight_of(pk) >= params.threshold_for(record.city):
                Registry.register_verifier(self.engine, pk, epoch)
        for pk in sorted(registry.verifiers):
            if pk not in registry.verified or Tokens.verifier_lock(state, pk) is not None:
                continue
            if state.trust.is_suspended(pk, epoch):
                continue
            stake = params.monetary.verifier_stake
            if not self.buy_tokens(pk, stake, epoch):
                continue
            try:
                Tokens.lock_stake(self.engine, pk, stake, LOCK_VERIFIER, epoch)
            except TokenError as e:
                logging.debug("Verifier %s could not stake: %s", pk[:16], e)

    ##################################
    # MARK: Private functions
    ##################################

    def _adversarial(self, pk: PersonId) -> bool:
        person = self.population.people.get(pk)
        if person is not None and person.adversarial:
            return True
        return self.campaign is not None and self.campaign.controls(pk)

    def _ico_accounts(self):
        return tuple(self.scenario.allocation_pks())
