"""
Module: Audit
A-judge re-checks. Eligible verifiers and layer-3 representatives spend a
per-window quota to call an identity; the system also calls at random. Every
eligible verifier of the target's city then samples the target. A failed
check revokes the identity and slashes each of its certifiers to the caller;
a no-show past the deadline only revokes.

Duplicate adjudication for claims flagged by the dedup index runs through
the same all-verifier vote.
"""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING, Dict, List, Optional

import numpy as np

from src.Constants import *
from src.models.ApplicationState import ApplicationState
from src.models.AuditCall import AJudgeVerdict, AuditCall, Settlement
from src.models.BiometricTemplate import BiometricTemplate
from src.models.Event import Event
from src.models.IdentityRecord import IdentityStatus, PersonId
from src.protocol import Registry, Tokens, Trust
from src.utils.Errors import (AuditError, DeadlinePassed, NoEligibleVerifiersInCity, NotAuthorized, NotPending,
                              QuotaExhausted, RejectedEvent, TargetNotVerified, TargetUnderAudit)

if TYPE_CHECKING:
    from src.protocol.Engine import ProtocolEngine


def quota_window(state: ApplicationState, epoch: int) -> int:
    return epoch // state.params.quota_window_epochs


def quota_remaining(state: ApplicationState, pk: PersonId, epoch: int) -> int:
    return max(0, state.params.recheck_quota - state.audit.quota_used(pk, quota_window(state, epoch)))


def may_call(state: ApplicationState, pk: PersonId, epoch: int) -> bool:
    """Eligible verifiers and layer-3 representatives hold re-check quotas."""
    return Trust.is_eligible_verifier(state, pk, epoch) or pk in state.governance.layer_representatives(3)


def call_ajudge(engine: ProtocolEngine, caller_pk: PersonId, target_pk: PersonId, epoch: int) -> AuditCall:
    """
    Open an A-judge call against a verified identity.

    :raises NotAuthorized: caller is neither an eligible verifier nor a layer-3 representative.
    :raises QuotaExhausted: caller used its re-checks for the current window.
    :raises TargetNotVerified: target is not a verified identity.
    :raises TargetUnderAudit: target already faces an open call.
    """
    state = engine.state
    problem = _call_problem(state, caller_pk, target_pk, epoch, system=False)
    if problem is not None:
        raise problem
    event = engine.emit(AJUDGE_CALLED, {
        'caller': caller_pk,
        'target': target_pk,
        'deadline': epoch + state.params.ajudge_deadline_epochs,
        'system': False,
    }, epoch)
    return state.audit.calls[event.height]


def random_check(engine: ProtocolEngine, epoch: int, rng: np.random.Generator, rate: float) -> Optional[AuditCall]:
    """With probability rate, the system calls one uniformly chosen verified identity. Consumes no quota."""
    if rng.random() >= rate:
        return None
    state = engine.state
    candidates = sorted(pk for pk in state.registry.verified if pk not in state.audit.open_targets)
    if not candidates:
        return None
    target = candidates[int(rng.integers(len(candidates)))]
    event = engine.emit(AJUDGE_CALLED, {
        'caller': state.params.system_account,
        'target': target,
        'deadline': epoch + state.params.ajudge_deadline_epochs,
        'system': True,
    }, epoch)
    return state.audit.calls[event.height]


def ajudge_participants(state: ApplicationState, target_pk: PersonId, epoch: int) -> List[PersonId]:
    city = state.registry.identities[target_pk].city
    return [v for v in Trust.eligible_verifiers(state, city, epoch) if v != target_pk]


def verdict_from_votes(votes: Dict[PersonId, bool], mode: str) -> AJudgeVerdict:
    genuine = sum(1 for vote in votes.values() if vote)
    if mode == AJUDGE_UNANIMITY:
        passed = genuine == len(votes)
    else:
        passed = 2 * genuine > len(votes)
    return AJudgeVerdict.PASSED_GENUINE if passed else AJudgeVerdict.FAILED_FAKE


def adjudicate(engine: ProtocolEngine, call_id: int, epoch: int,
               presented_template: Optional[BiometricTemplate]) -> Settlement:
    """
    Every eligible verifier of the target's city compares the presented
    template with the stored one. PassedGenuine mints the A-judge reward to
    the target; FailedFake is settled at once.

    :raises DeadlinePassed: the call's deadline already passed.
    :raises NoEligibleVerifiersInCity: nobody could sit in judgement.
    """
    state = engine.state
    call = _open_call(state, call_id)
    if epoch > call.deadline_epoch:
        raise DeadlinePassed(f"call {call_id} expired at epoch {call.deadline_epoch}")
    record = engine.record(call.target)
    if record.status != IdentityStatus.VERIFIED:
        raise TargetNotVerified(f"{call.target[:16]}... is {record.status.value}")
    participants = ajudge_participants(state, call.target, epoch)
    if not participants:
        raise NoEligibleVerifiersInCity(record.city)
    stored = engine.templates.get(record.template_digest)
    votes = {v: bool(engine.behaviour_of(v).adjudicate(engine, v, call.target, presented_template, stored))
             for v in participants}
    outcome = verdict_from_votes(votes, state.params.ajudge_mode)
    engine.emit(AJUDGE_ADJUDICATED, {
        'call_id': call_id,
        'votes': [[v, vote] for v, vote in sorted(votes.items())],
        'outcome': outcome.value,
    }, epoch)
    if outcome == AJudgeVerdict.FAILED_FAKE:
        return settle_failed_audit(engine, call_id, epoch)
    reward = state.params.monetary.ajudge_reward
    Tokens.mint_reward(engine, call.target, reward, epoch)
    return Settlement(call_id=call_id, outcome=outcome, revoked=None, reward=reward)


def settle_failed_audit(engine: ProtocolEngine, call_id: int, epoch: int) -> Settlement:
    """
    Revoke the target. For a FailedFake, every certifier's verifier stake is
    slashed to the caller and the certifier is suspended; a missed deadline
    slashes nobody.
    """
    state = engine.state
    call = state.audit.calls[call_id]
    if call.outcome not in (AJudgeVerdict.FAILED_FAKE, AJudgeVerdict.MISSED_DEADLINE):
        raise AuditError(f"call {call_id} has nothing to settle")
    record = engine.record(call.target)
    settlement = Settlement(call_id=call_id, outcome=call.outcome, revoked=call.target)
    if call.outcome == AJudgeVerdict.FAILED_FAKE:
        until = epoch + state.params.suspension_epochs
        for verifier in sorted(set(record.certifiers)):
            if Tokens.verifier_lock(state, verifier) is not None:
                amount = Tokens.slash_to(engine, verifier, call.caller, epoch)
                settlement.transfers.append((verifier, call.caller, amount))
            if verifier in state.registry.verifiers:
                Trust.suspend(engine, verifier, until, epoch)
                settlement.suspended.append(verifier)
        reason = REASON_FAILED_FAKE
    else:
        reason = REASON_MISSED_DEADLINE
    if record.status != IdentityStatus.REVOKED:
        Registry.revoke_identity(engine, call.target, reason, epoch)
    logging.info("A-judge call %d settled: %s, %d tokens slashed",
                 call_id, call.outcome.value, settlement.tokens_slashed)
    return settlement


def expire_audit_calls(engine: ProtocolEngine, epoch: int) -> List[Settlement]:
    """Close every open call whose deadline passed as MissedDeadline."""
    overdue = sorted(call_id for call_id, call in engine.state.audit.calls.items()
                     if call.open and call.deadline_epoch < epoch)
    settlements = []
    for call_id in overdue:
        engine.emit(AJUDGE_MISSED, {'call_id': call_id}, epoch)
        settlements.append(settle_failed_audit(engine, call_id, epoch))
    return settlements


def adjudicate_duplicate_claim(engine: ProtocolEngine, pk: PersonId, epoch: int,
                               presented_template: Optional[BiometricTemplate]) -> bool:
    """
    All eligible verifiers of the claimant's city compare the claimant with
    every identity the dedup index flagged. A strict majority of "same person"
    votes revokes the claim as a duplicate; otherwise the claim proceeds to
    its first verifier assignment.

    :return: True when the duplicate was confirmed.
    """
    state = engine.state
    record = engine.record(pk)
    if record.status != IdentityStatus.PENDING_ENTRY:
        raise NotPending(f"{pk[:16]}... is not awaiting duplicate adjudication")
    participants = Trust.eligible_verifiers(state, record.city, epoch)
    if not participants:
        raise NoEligibleVerifiersInCity(record.city)
    flagged = [engine.templates.get(state.registry.identities[other].template_digest)
               for other in record.dedup_flags]
    votes = {}
    for v in participants:
        behaviour = engine.behaviour_of(v)
        votes[v] = any(behaviour.judge_duplicate(engine, v, pk, presented_template, template)
                       for template in flagged)
    duplicate = 2 * sum(votes.values()) > len(votes)
    engine.emit(DEDUP_ADJUDICATED, {
        'pk': pk,
        'votes': [[v, vote] for v, vote in sorted(votes.items())],
        'duplicate': duplicate,
    }, epoch)
    if duplicate:
        Registry.revoke_identity(engine, pk, REASON_DUPLICATE, epoch)
    else:
        try:
            Registry.assign_next_verifier(engine, pk, epoch)
        except NoEligibleVerifiersInCity as e:
            logging.warning("Cleared claim %s waits for a verifier: %s", pk[:16], e)
    return duplicate


##################################
# MARK: Event handlers
##################################

def _on_called(state: ApplicationState, event: Event) -> None:
    payload = event.payload
    caller, target, system = payload['caller'], payload['target'], payload['system']
    problem = _call_problem(state, caller, target, event.epoch, system)
    if problem is not None:
        raise RejectedEvent(event.height, str(problem))
    if payload['deadline'] != event.epoch + state.params.ajudge_deadline_epochs:
        raise RejectedEvent(event.height, "deadline does not follow the parameters")
    if not system:
        window = quota_window(state, event.epoch)
        state.audit.quota[caller] = (window, state.audit.quota_used(caller, window) + 1)
    state.audit.calls[event.height] = AuditCall(
        call_id=event.height,
        caller=caller,
        target=target,
        called_epoch=event.epoch,
        deadline_epoch=payload['deadline'],
        system=system,
    )
    state.audit.open_targets[target] = event.height
    state.audit.opened += 1


def _on_adjudicated(state: ApplicationState, event: Event) -> None:
    payload = event.payload
    call = state.audit.calls.get(payload['call_id'])
    if call is None or not call.open or event.epoch > call.deadline_epoch:
        raise RejectedEvent(event.height, "adjudication of a closed or overdue call")
    votes = {v: bool(vote) for v, vote in payload['votes']}
    if sorted(votes) != ajudge_participants(state, call.target, event.epoch) or not votes:
        raise RejectedEvent(event.height, "participants differ from the eligible city verifiers")
    outcome = AJudgeVerdict(payload['outcome'])
    if outcome != verdict_from_votes(votes, state.params.ajudge_mode):
        raise RejectedEvent(event.height, "outcome does not follow from the votes")
    call.votes = votes
    call.outcome = outcome
    del state.audit.open_targets[call.target]
    if outcome == AJudgeVerdict.PASSED_GENUINE:
        state.audit.passed += 1
    else:
        state.audit.failed += 1


def _on_missed(state: ApplicationState, event: Event) -> None:
    call = state.audit.calls.get(event.payload['call_id'])
    if call is None or not call.open or event.epoch <= call.deadline_epoch:
        raise RejectedEvent(event.height, "deadline has not passed for this call")
    call.outcome = AJudgeVerdict.MISSED_DEADLINE
    del state.audit.open_targets[call.target]
    state.audit.missed += 1


def _on_dedup(state: ApplicationState, event: Event) -> None:
    payload = event.payload
    record = state.registry.identities.get(payload['pk'])
    if record is None or record.status != IdentityStatus.PENDING_ENTRY:
        raise RejectedEvent(event.height, "no claim awaiting duplicate adjudication")
    votes = {v: bool(vote) for v, vote in payload['votes']}
    if sorted(votes) != Trust.eligible_verifiers(state, record.city, event.epoch) or not votes:
        raise RejectedEvent(event.height, "participants differ from the eligible city verifiers")
    duplicate = 2 * sum(votes.values()) > len(votes)
    if payload['duplicate'] != duplicate:
        raise RejectedEvent(event.height, "duplicate decision does not follow from the votes")
    if duplicate:
        state.audit.duplicates_confirmed += 1
    else:
        state.audit.duplicates_cleared += 1
        state.registry.set_status(record, IdentityStatus.PENDING_VERIFICATION)


HANDLERS = {
    AJUDGE_CALLED: _on_called,
    AJUDGE_ADJUDICATED: _on_adjudicated,
    AJUDGE_MISSED: _on_missed,
    DEDUP_ADJUDICATED: _on_dedup,
}


##################################
# MARK: Private functions
##################################

def _call_problem(state: ApplicationState, caller: PersonId, target: PersonId, epoch: int,
                  system: bool) -> Optional[Exception]:
    if system:
        if caller != state.params.system_account:
            return NotAuthorized("system calls must come from the system account")
    else:
        if caller == target or not may_call(state, caller, epoch):
            return NotAuthorized(f"{caller[:16]}... may not call the A-judge")
        if quota_remaining(state, caller, epoch) < 1:
            return QuotaExhausted(f"{caller[:16]}... used its {state.params.recheck_quota} re-checks")
    record = state.registry.identities.get(target)
    if record is None or record.status != IdentityStatus.VERIFIED:
        return TargetNotVerified(f"{target[:16]}... is not a verified identity")
    if target in state.audit.open_targets:
        return TargetUnderAudit(f"{target[:16]}... already faces call {state.audit.open_targets[target]}")
    return None


def _open_call(state: ApplicationState, call_id: int) -> AuditCall:
    call = state.audit.calls.get(call_id)
    if call is None or not call.open:
        raise AuditError(f"call {call_id} is not open")
    return call
