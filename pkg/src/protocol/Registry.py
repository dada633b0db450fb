"""
Module: Registry
Identity lifecycle: entry gates, claims, beacon-driven verifier assignment,
certificates, reassignment after rejection, revocation, trust-circle recovery,
renewal and expiry. Also carries the genesis configuration and the beacon.

Assignment rule: with E the eligible verifiers of the user's city that have
not certified the user yet, sorted by public key, the next verifier is

    E[int(SHA-256(R || pk || seq as 8 big-endian bytes)[:8]) mod |E|]

where R is the current beacon value and seq the user's assignment counter.
"""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING, List, Optional, Sequence

from src.Constants import *
from src.models.ApplicationState import ApplicationState
from src.models.BiometricTemplate import BiometricTemplate
from src.models.Event import Event
from src.models.IdentityRecord import (GENESIS_GATE, RECOVERY_GATE, Certificate, EntryGate, IdentityRecord,
                                       IdentityStatus, PersonId, VerifierRecord)
from src.models.RandomnessBeacon import RandomnessBeacon
from src.models.ScenarioConfig import ProtocolParams
from src.protocol import Tokens, Trust
from src.protocol.Biometric import dedup_check
from src.utils.Canonical import from_hex, is_hex_digest, sha256
from src.utils.Errors import (AlreadyExpired, DuplicatePk, GateUnsatisfied, IdentityNotVerified,
                              InsufficientApprovals, NoEligibleVerifiersInCity, NoRejectionPending, NotPending,
                              NotRecoverable, PkInUse, ReassignmentLimitReached, RejectedEvent, SelfInTrustCircle,
                              TooFewMembers, UnverifiedMember, WrongVerifier)

if TYPE_CHECKING:
    from src.protocol.Engine import ProtocolEngine

RENEWAL_TAG = b"renewal"
ROLE_VERIFIER = "verifier"
ROLE_SUPPORTER = "supporter"
PENDING = (IdentityStatus.PENDING_ENTRY, IdentityStatus.PENDING_VERIFICATION)


def assignment_index(beacon_value: bytes, pk: PersonId, seq: int, n: int, tag: bytes = b"") -> int:
    """Index into a sorted candidate list of size n for one assignment draw."""
    digest = sha256(tag + beacon_value + from_hex(pk) + seq.to_bytes(8, "big"))
    return int.from_bytes(digest[:8], "big") % n


def assignment_candidates(state: ApplicationState, record: IdentityRecord, epoch: int) -> List[PersonId]:
    certifiers = set(record.certifiers)
    return [v for v in Trust.eligible_verifiers(state, record.city, epoch)
            if v not in certifiers and v != record.pk]


def beacon_next(beacon: RandomnessBeacon) -> RandomnessBeacon:
    return beacon.next()


##################################
# MARK: Genesis and beacon
##################################

def configure_genesis(engine: ProtocolEngine, seed: int, setup: str, params: ProtocolParams) -> None:
    engine.emit(GENESIS_CONFIGURED, {
        'seed': seed,
        'setup': setup,
        'params': params.to_dict(),
        'beacon': RandomnessBeacon.genesis(seed).to_dict(),
    }, 0)


def register_genesis_identity(engine: ProtocolEngine, pk: PersonId, template: BiometricTemplate,
                              city: str, role: str) -> IdentityRecord:
    if engine.state.registry.known(pk):
        raise DuplicatePk(pk)
    digest = engine.store_template(template)
    engine.emit(GENESIS_IDENTITY_REGISTERED, {'pk': pk, 'template_digest': digest, 'city': city, 'role': role}, 0)
    return engine.record(pk)


def register_verifier(engine: ProtocolEngine, pk: PersonId, epoch: int) -> VerifierRecord:
    """Register a verified identity whose received trust weight reaches its city's threshold."""
    record = engine.record(pk)
    if record.status != IdentityStatus.VERIFIED:
        raise IdentityNotVerified(f"{pk[:16]}... is not verified")
    if pk in engine.state.registry.verifiers:
        return engine.state.registry.verifiers[pk]
    threshold = engine.params.threshold_for(record.city)
    if engine.state.trust.weight_of(pk) < threshold:
        raise GateUnsatisfied(f"trust weight below the threshold of {threshold}")
    engine.emit(VERIFIER_REGISTERED, {'pk': pk, 'city': record.city}, epoch)
    return engine.state.registry.verifiers[pk]


def advance_beacon(engine: ProtocolEngine, epoch: int) -> RandomnessBeacon:
    following = beacon_next(engine.state.beacon)
    engine.emit(BEACON_ADVANCED, following.to_dict(), epoch)
    return engine.state.beacon


##################################
# MARK: Claims and verification
##################################

def claim_identity(engine: ProtocolEngine, pk: PersonId, template: BiometricTemplate, city: str,
                   entry_gate: EntryGate, epoch: int) -> IdentityRecord:
    """
    Claim a new identity behind an entry gate. A claim whose template collides
    with a verified identity waits in PendingEntry for duplicate adjudication;
    any other claim is assigned its first verifier straight away.

    :raises DuplicatePk: pk was already claimed.
    :raises GateUnsatisfied: the gate's conditions do not hold.
    :raises NoEligibleVerifiersInCity: nobody in the city could verify the claim.
    """
    state = engine.state
    if state.registry.known(pk):
        raise DuplicatePk(pk)
    if city not in state.params.city_thresholds or not Trust.eligible_verifiers(state, city, epoch):
        raise NoEligibleVerifiersInCity(city)
    if entry_gate.kind == GATE_STAKE:
        required = required_entry_stake(state, city)
        amount = required if entry_gate.amount is None else entry_gate.amount
        if amount < required:
            raise GateUnsatisfied(f"stake {amount} below the required {required}")
        balance = state.tokens.balance_of(pk)
        if balance < amount:
            raise GateUnsatisfied(f"balance {balance} cannot cover stake {amount}")
        entry_gate = EntryGate(kind=GATE_STAKE, amount=amount)
    problem = _gate_problem(state, entry_gate, city, epoch)
    if problem:
        raise GateUnsatisfied(problem)
    flagged = []
    if engine.dedup_index is not None:
        flagged = [owner for owner, _ in dedup_check(template, engine.dedup_index, engine.require_policy())]
    digest = engine.store_template(template)
    engine.emit(IDENTITY_CLAIMED, {
        'pk': pk,
        'template_digest': digest,
        'city': city,
        'gate': entry_gate.to_dict(),
        'certs_required': state.params.certs_required,
        'flagged': sorted(flagged),
    }, epoch)
    if entry_gate.kind == GATE_STAKE:
        Tokens.lock_stake(engine, pk, entry_gate.amount, LOCK_ENTRY_GATE, epoch)
    if not flagged:
        assign_next_verifier(engine, pk, epoch)
    return engine.record(pk)


def required_entry_stake(state: ApplicationState, city: str) -> int:
    """Entry stake grows with the number of stake-gated claims already pending in the city."""
    return state.params.monetary.base_stake * (1 + state.registry.pending_stake_claims.get(city, 0))


def assign_next_verifier(engine: ProtocolEngine, pk: PersonId, epoch: int,
                         beacon: Optional[RandomnessBeacon] = None, *,
                         reassignment: bool = False, free: bool = False) -> PersonId:
    """
    Draw the next verifier for a pending user from the public beacon.

    :raises NotPending: the user is not awaiting verification or holds an outstanding assignment.
    :raises NoEligibleVerifiersInCity: no eligible non-certifier remains.
    """
    state = engine.state
    if beacon is not None and beacon != state.beacon:
        raise ValueError("assignments always use the current beacon round")
    record = engine.record(pk)
    if record.status != IdentityStatus.PENDING_VERIFICATION:
        raise NotPending(f"{pk[:16]}... is {record.status.value}")
    if record.current_assignee is not None:
        raise NotPending(f"{pk[:16]}... already has an outstanding assignment")
    candidates = assignment_candidates(state, record, epoch)
    if not candidates:
        raise NoEligibleVerifiersInCity(record.city)
    verifier = candidates[assignment_index(state.beacon.value, pk, record.assignment_seq, len(candidates))]
    engine.emit(VERIFIER_ASSIGNED, {
        'user': pk,
        'verifier': verifier,
        'seq': record.assignment_seq,
        'beacon_round': state.beacon.round,
        'reassignment': reassignment,
        'free': free,
    }, epoch)
    return verifier


def submit_certificate(engine: ProtocolEngine, verifier_pk: PersonId, user_pk: PersonId,
                       presented_template: BiometricTemplate, epoch: int) -> IdentityRecord:
    """
    The assigned verifier compares the presented template with the claimed one
    and certifies or rejects. The certificate that completes the pinned
    requirement verifies the identity, mints x and returns any entry stake.

    :raises NotPending: the user is not awaiting verification.
    :raises WrongVerifier: verifier_pk is not the current assignee.
    """
    record = engine.record(user_pk)
    if record.status != IdentityStatus.PENDING_VERIFICATION:
        raise NotPending(f"{user_pk[:16]}... is {record.status.value}")
    if record.current_assignee != verifier_pk:
        raise WrongVerifier(f"{verifier_pk[:16]}... is not assigned to {user_pk[:16]}...")
    claimed = engine.templates.get(record.template_digest)
    accepted = engine.behaviour_of(verifier_pk).certify(engine, verifier_pk, user_pk, presented_template, claimed)
    if not accepted:
        engine.emit(CERTIFICATE_REJECTED, {'user': user_pk, 'verifier': verifier_pk}, epoch)
        return record
    engine.emit(CERTIFICATE_ISSUED, {'user': user_pk, 'verifier': verifier_pk}, epoch)
    if len(record.certificates) >= record.certs_required:
        _complete_verification(engine, record, epoch)
    else:
        try:
            assign_next_verifier(engine, user_pk, epoch)
        except NoEligibleVerifiersInCity as e:
            logging.warning("Certificate %d of %s issued but %s", len(record.certificates), user_pk[:16], e)
    return record


def request_reassignment(engine: ProtocolEngine, user_pk: PersonId, epoch: int,
                         beacon: Optional[RandomnessBeacon] = None) -> PersonId:
    """
    :raises NoRejectionPending: the last assignment did not end in a rejection.
    :raises ReassignmentLimitReached: the user used up max_reassignments.
    """
    record = engine.record(user_pk)
    if record.status != IdentityStatus.PENDING_VERIFICATION:
        raise NotPending(f"{user_pk[:16]}... is {record.status.value}")
    if not record.rejection_pending:
        raise NoRejectionPending(f"{user_pk[:16]}... has no rejection to answer")
    if record.reassignments_used >= engine.params.max_reassignments:
        raise ReassignmentLimitReached(f"{user_pk[:16]}... used {record.reassignments_used} reassignments")
    return assign_next_verifier(engine, user_pk, epoch, beacon, reassignment=True)


def revoke_identity(engine: ProtocolEngine, pk: PersonId, reason: str, epoch: int) -> IdentityRecord:
    """
    Revoke an identity. An entry stake still locked by a pending claim is
    forfeited; a verifier stake goes back to its owner.
    """
    record = engine.record(pk)
    if record.status == IdentityStatus.REVOKED:
        return record
    if record.stake_lock_id is not None and engine.state.tokens.locks[record.stake_lock_id].active:
        Tokens.forfeit_stake(engine, record.stake_lock_id, epoch)
    lock = Tokens.verifier_lock(engine.state, pk)
    if lock is not None:
        Tokens.release_stake(engine, lock.lock_id, epoch)
    engine.emit(IDENTITY_REVOKED, {'pk': pk, 'reason': reason}, epoch)
    return record


def abandon_verification(engine: ProtocolEngine, pk: PersonId, epoch: int) -> IdentityRecord:
    """Terminal failure after rejection with no reassignment left (or none wanted)."""
    return revoke_identity(engine, pk, REASON_VERIFICATION_FAILED, epoch)


##################################
# MARK: Recovery, renewal, expiry
##################################

def declare_trust_circle(engine: ProtocolEngine, user_pk: PersonId, members: Sequence[PersonId],
                         epoch: int) -> List[PersonId]:
    record = engine.record(user_pk)
    if record.status != IdentityStatus.VERIFIED:
        raise IdentityNotVerified(f"{user_pk[:16]}... is not verified")
    if user_pk in members:
        raise SelfInTrustCircle("an identity cannot vouch for its own recovery")
    unique = sorted(set(members))
    if len(unique) < engine.params.trust_circle_min:
        raise TooFewMembers(f"{len(unique)} members, {engine.params.trust_circle_min} required")
    for member in unique:
        other = engine.state.registry.identities.get(member)
        if other is None or other.status != IdentityStatus.VERIFIED:
            raise UnverifiedMember(f"{member[:16]}... is not verified")
    engine.emit(TRUST_CIRCLE_DECLARED, {'pk': user_pk, 'members': unique}, epoch)
    return unique


def recovery_quorum(params: ProtocolParams, circle_size: int) -> int:
    """Smallest approval count strictly above the quorum share of the circle."""
    return (params.recovery_quorum_bps * circle_size) // BPS + 1


def recover_identity(engine: ProtocolEngine, user_pk: PersonId, new_pk: PersonId,
                     approvals: Sequence[PersonId], epoch: int) -> IdentityRecord:
    """
    Re-key an identity once enough of its trust circle approves. The record
    returns to PendingVerification under new_pk and the old key is retired.

    :raises InsufficientApprovals: too few distinct circle members approved.
    :raises PkInUse: new_pk was already claimed.
    """
    state = engine.state
    record = engine.record(user_pk)
    if record.status not in (IdentityStatus.VERIFIED, IdentityStatus.EXPIRED):
        raise NotRecoverable(f"{user_pk[:16]}... is {record.status.value}")
    if not record.trust_circle:
        raise NotRecoverable(f"{user_pk[:16]}... never declared a trust circle")
    if user_pk in state.audit.open_targets:
        raise NotRecoverable(f"{user_pk[:16]}... is under an open A-judge call")
    if state.registry.known(new_pk):
        raise PkInUse(new_pk)
    valid = sorted(set(approvals) & set(record.trust_circle))
    required = recovery_quorum(state.params, len(record.trust_circle))
    if len(valid) < required:
        raise InsufficientApprovals(len(valid), required)
    lock = Tokens.verifier_lock(state, user_pk)
    if lock is not None:
        Tokens.release_stake(engine, lock.lock_id, epoch)
    engine.emit(IDENTITY_RECOVERED, {'old_pk': user_pk, 'new_pk': new_pk, 'approvals': valid}, epoch)
    try:
        assign_next_verifier(engine, new_pk, epoch)
    except NoEligibleVerifiersInCity as e:
        logging.warning("Recovered identity %s waits for a verifier: %s", new_pk[:16], e)
    return engine.record(new_pk)


def renewal_verifier(state: ApplicationState, pk: PersonId, epoch: int) -> PersonId:
    """The single verifier drawn from the beacon for pk's next renewal attempt."""
    record = state.registry.identities[pk]
    candidates = [v for v in Trust.eligible_verifiers(state, record.city, epoch) if v != pk]
    if not candidates:
        raise NoEligibleVerifiersInCity(record.city)
    index = assignment_index(state.beacon.value, pk, record.renewal_count, len(candidates), RENEWAL_TAG)
    return candidates[index]


def renew_identity(engine: ProtocolEngine, user_pk: PersonId, presented_template: BiometricTemplate,
                   verifier_pk: PersonId, epoch: int) -> IdentityRecord:
    """
    Single-verifier liveness check before expiry. Success sets the expiry to
    epoch + identity_ttl_epochs; a rejection only consumes the draw.

    :raises AlreadyExpired: the identity expired before the attempt.
    :raises WrongVerifier: verifier_pk is not the drawn renewal verifier.
    """
    record = engine.record(user_pk)
    if record.status == IdentityStatus.EXPIRED or (
            record.status == IdentityStatus.VERIFIED and epoch > record.expiry_epoch):
        raise AlreadyExpired(f"{user_pk[:16]}... expired at epoch {record.expiry_epoch}")
    if record.status != IdentityStatus.VERIFIED:
        raise IdentityNotVerified(f"{user_pk[:16]}... is {record.status.value}")
    if verifier_pk != renewal_verifier(engine.state, user_pk, epoch):
        raise WrongVerifier(f"{verifier_pk[:16]}... was not drawn for this renewal")
    stored = engine.templates.get(record.template_digest)
    if engine.behaviour_of(verifier_pk).certify(engine, verifier_pk, user_pk, presented_template, stored):
        engine.emit(RENEWAL_CERTIFIED, {
            'pk': user_pk,
            'verifier': verifier_pk,
            'expiry_epoch': epoch + engine.params.identity_ttl_epochs,
        }, epoch)
    else:
        engine.emit(RENEWAL_REJECTED, {'pk': user_pk, 'verifier': verifier_pk}, epoch)
    return record


def expire_identities(engine: ProtocolEngine, epoch: int) -> List[PersonId]:
    """Expire every verified identity whose expiry epoch has passed."""
    identities = engine.state.registry.identities
    due = sorted(pk for pk in engine.state.registry.verified
                 if identities[pk].expiry_epoch is not None and identities[pk].expiry_epoch < epoch)
    for pk in due:
        engine.emit(IDENTITY_EXPIRED, {'pk': pk}, epoch)
    return due


##################################
# MARK: Event handlers
##################################

def _on_genesis_configured(state: ApplicationState, event: Event) -> None:
    payload = event.payload
    if state.configured or event.height != 1 or event.epoch != 0:
        raise RejectedEvent(event.height, "genesis configuration must be the first event")
    seed = payload['seed']
    expected = RandomnessBeacon.genesis(seed)
    if payload['beacon'] != expected.to_dict():
        raise RejectedEvent(event.height, "genesis beacon does not follow from the seed")
    params = ProtocolParams.from_dict(payload['params'])
    state.seed = seed
    state.setup = payload['setup']
    state.params = params
    state.beacon = expected


def _on_beacon_advanced(state: ApplicationState, event: Event) -> None:
    expected = beacon_next(state.beacon)
    if event.payload != expected.to_dict():
        raise RejectedEvent(event.height, f"beacon round {event.payload.get('round')} does not chain")
    state.beacon = expected


def _on_genesis_identity(state: ApplicationState, event: Event) -> None:
    payload = event.payload
    pk, city = payload['pk'], payload['city']
    if event.epoch != 0:
        raise RejectedEvent(event.height, "genesis identities are registered in epoch 0")
    _check_new_claim(state, event, pk, payload['template_digest'], city)
    if payload['role'] not in (ROLE_VERIFIER, ROLE_SUPPORTER):
        raise RejectedEvent(event.height, f"unknown genesis role {payload['role']}")
    record = IdentityRecord(
        pk=pk,
        template_digest=payload['template_digest'],
        city=city,
        status=IdentityStatus.VERIFIED,
        entry_gate=GENESIS_GATE,
        certs_required=0,
        claimed_epoch=0,
        verified_epoch=0,
        expiry_epoch=state.params.identity_ttl_epochs,
        invitations_remaining=state.params.invitations_per_user,
        genesis=True,
    )
    state.registry.add(record)


def _on_verifier_registered(state: ApplicationState, event: Event) -> None:
    pk, city = event.payload['pk'], event.payload['city']
    record = state.registry.identities.get(pk)
    if record is None or record.status != IdentityStatus.VERIFIED or record.city != city:
        raise RejectedEvent(event.height, "verifier must be a verified identity of the city")
    if pk in state.registry.verifiers:
        raise RejectedEvent(event.height, "verifier already registered")
    if state.trust.weight_of(pk) < state.params.threshold_for(city):
        raise RejectedEvent(event.height, "trust weight below threshold")
    state.registry.verifiers[pk] = VerifierRecord(pk=pk, city=city, registered_epoch=event.epoch)
    state.invalidate_eligibility()


def _on_claimed(state: ApplicationState, event: Event) -> None:
    payload = event.payload
    pk, city = payload['pk'], payload['city']
    _check_new_claim(state, event, pk, payload['template_digest'], city)
    gate = EntryGate.from_dict(payload['gate'])
    if gate.kind not in (GATE_INVITATION, GATE_STAKE, GATE_SPONSOR):
        raise RejectedEvent(event.height, f"claims cannot use gate {gate.kind}")
    problem = _gate_problem(state, gate, city, event.epoch)
    if problem:
        raise RejectedEvent(event.height, problem)
    if payload['certs_required'] != state.params.certs_required:
        raise RejectedEvent(event.height, "pinned certificate requirement differs from the parameters")
    flagged = payload['flagged']
    if any(other not in state.registry.identities for other in flagged):
        raise RejectedEvent(event.height, "flagged collision with an unknown identity")
    if gate.kind == GATE_INVITATION:
        state.registry.identities[gate.inviter].invitations_remaining -= 1
    elif gate.kind == GATE_SPONSOR:
        sponsor = state.registry.verifiers[gate.sponsor]
        window = event.epoch // state.params.sponsor_window_epochs
        if sponsor.sponsor_window != window:
            sponsor.sponsor_window, sponsor.sponsor_used = window, 0
        sponsor.sponsor_used += 1
    else:
        state.registry.pending_stake_claims[city] = state.registry.pending_stake_claims.get(city, 0) + 1
    record = IdentityRecord(
        pk=pk,
        template_digest=payload['template_digest'],
        city=city,
        status=IdentityStatus.PENDING_ENTRY if flagged else IdentityStatus.PENDING_VERIFICATION,
        entry_gate=gate,
        certs_required=payload['certs_required'],
        claimed_epoch=event.epoch,
        dedup_flags=list(flagged),
    )
    state.registry.add(record)
    state.registry.claims_total += 1


def _on_assigned(state: ApplicationState, event: Event) -> None:
    payload = event.payload
    record = _pending_record(state, event, payload['user'])
    if record.current_assignee is not None:
        raise RejectedEvent(event.height, "assignment already outstanding")
    if payload['seq'] != record.assignment_seq or payload['beacon_round'] != state.beacon.round:
        raise RejectedEvent(event.height, "assignment sequence or beacon round mismatch")
    reassignment, free = payload['reassignment'], payload['free']
    if reassignment and not free:
        if not record.rejection_pending or record.reassignments_used >= state.params.max_reassignments:
            raise RejectedEvent(event.height, "reassignment not allowed")
    elif record.rejection_pending and not free:
        raise RejectedEvent(event.height, "a rejection must be answered by a reassignment")
    candidates = assignment_candidates(state, record, event.epoch)
    if not candidates:
        raise RejectedEvent(event.height, "no eligible verifier to assign")
    expected = candidates[assignment_index(state.beacon.value, record.pk, record.assignment_seq, len(candidates))]
    if payload['verifier'] != expected:
        raise RejectedEvent(event.height, "assigned verifier does not match the beacon draw")
    record.current_assignee = expected
    record.assignment_seq += 1
    if reassignment and not free:
        record.reassignments_used += 1
    record.rejection_pending = False


def _on_voided(state: ApplicationState, event: Event) -> None:
    record = _pending_record(state, event, event.payload['user'])
    if record.current_assignee != event.payload['verifier']:
        raise RejectedEvent(event.height, "voided verifier is not the assignee")
    record.current_assignee = None


def _on_certificate(state: ApplicationState, event: Event) -> None:
    payload = event.payload
    record = _pending_record(state, event, payload['user'])
    if record.current_assignee != payload['verifier']:
        raise RejectedEvent(event.height, "certificate from a verifier that is not assigned")
    record.current_assignee = None
    if event.kind == CERTIFICATE_ISSUED:
        record.certificates.append(Certificate(verifier=payload['verifier'], epoch=event.epoch))
    else:
        record.rejections.append(Certificate(verifier=payload['verifier'], epoch=event.epoch))
        record.rejection_pending = True


def _on_verified(state: ApplicationState, event: Event) -> None:
    record = _pending_record(state, event, event.payload['pk'])
    if len(record.certificates) < record.certs_required:
        raise RejectedEvent(event.height, "not enough certificates")
    expiry = event.epoch + state.params.identity_ttl_epochs
    if event.payload['expiry_epoch'] != expiry:
        raise RejectedEvent(event.height, f"expiry must be {expiry}")
    _leave_pending(state, record)
    state.registry.set_status(record, IdentityStatus.VERIFIED)
    record.verified_epoch = event.epoch
    record.expiry_epoch = expiry
    record.invitations_remaining = state.params.invitations_per_user


def _on_revoked(state: ApplicationState, event: Event) -> None:
    pk = event.payload['pk']
    record = state.registry.identities.get(pk)
    if record is None or record.status == IdentityStatus.REVOKED:
        raise RejectedEvent(event.height, "unknown or already revoked identity")
    if record.stake_lock_id is not None and state.tokens.locks[record.stake_lock_id].active:
        raise RejectedEvent(event.height, "entry stake must be settled before revocation")
    if record.status in PENDING:
        _leave_pending(state, record)
    _withdraw_trust(state, pk)
    state.registry.set_status(record, IdentityStatus.REVOKED)
    record.revoked_reason = event.payload['reason']
    record.current_assignee = None
    record.rejection_pending = False


def _on_expired(state: ApplicationState, event: Event) -> None:
    record = state.registry.identities.get(event.payload['pk'])
    if record is None or record.status != IdentityStatus.VERIFIED or not event.epoch > record.expiry_epoch:
        raise RejectedEvent(event.height, "identity is not due to expire")
    _withdraw_trust(state, record.pk)
    state.registry.set_status(record, IdentityStatus.EXPIRED)


def _on_circle_declared(state: ApplicationState, event: Event) -> None:
    pk, members = event.payload['pk'], event.payload['members']
    record = state.registry.identities.get(pk)
    if record is None or record.status != IdentityStatus.VERIFIED:
        raise RejectedEvent(event.height, "trust circle of an unverified identity")
    if pk in members or len(set(members)) != len(members) or len(members) < state.params.trust_circle_min:
        raise RejectedEvent(event.height, "invalid trust circle")
    record.trust_circle = list(members)


def _on_recovered(state: ApplicationState, event: Event) -> None:
    payload = event.payload
    old_pk, new_pk, approvals = payload['old_pk'], payload['new_pk'], payload['approvals']
    record = state.registry.identities.get(old_pk)
    if record is None or record.status not in (IdentityStatus.VERIFIED, IdentityStatus.EXPIRED):
        raise RejectedEvent(event.height, "identity cannot be recovered")
    if not is_hex_digest(new_pk) or state.registry.known(new_pk):
        raise RejectedEvent(event.height, "new key invalid or in use")
    if old_pk in state.audit.open_targets:
        raise RejectedEvent(event.height, "identity is under audit")
    circle = set(record.trust_circle)
    if len(set(approvals)) != len(approvals) or not set(approvals) <= circle \
            or len(approvals) < recovery_quorum(state.params, len(circle)):
        raise RejectedEvent(event.height, "recovery quorum not met")
    if Tokens.verifier_lock(state, old_pk) is not None:
        raise RejectedEvent(event.height, "verifier stake must be released before recovery")
    _withdraw_trust(state, old_pk)
    state.trust.drop_delegations_to(old_pk)
    state.trust.suspended_until.pop(old_pk, None)
    state.registry.verifiers.pop(old_pk, None)
    state.invalidate_eligibility()
    state.registry.remove(record)
    state.registry.retired.add(old_pk)
    record.pk = new_pk
    record.status = IdentityStatus.PENDING_VERIFICATION
    record.entry_gate = RECOVERY_GATE
    record.certs_required = state.params.certs_required
    record.claimed_epoch = event.epoch
    record.certificates = []
    record.rejections = []
    record.assignment_seq = 0
    record.current_assignee = None
    record.reassignments_used = 0
    record.rejection_pending = False
    record.verified_epoch = None
    record.expiry_epoch = None
    record.invitations_remaining = 0
    record.stake_lock_id = None
    record.renewal_count = 0
    record.genesis = False
    state.registry.add(record)
    account = state.tokens.accounts.pop(old_pk, None)
    if account is not None:
        account.pk = new_pk
        state.tokens.accounts[new_pk] = account
    for lock in state.tokens.locks.values():
        if lock.owner == old_pk:
            lock.owner = new_pk


def _on_renewal(state: ApplicationState, event: Event) -> None:
    payload = event.payload
    record = state.registry.identities.get(payload['pk'])
    if record is None or record.status != IdentityStatus.VERIFIED or event.epoch > record.expiry_epoch:
        raise RejectedEvent(event.height, "renewal of an identity that is not live")
    if payload['verifier'] != renewal_verifier(state, record.pk, event.epoch):
        raise RejectedEvent(event.height, "renewal verifier does not match the beacon draw")
    if event.kind == RENEWAL_CERTIFIED:
        expiry = event.epoch + state.params.identity_ttl_epochs
        if payload['expiry_epoch'] != expiry:
            raise RejectedEvent(event.height, f"renewed expiry must be {expiry}")
        record.expiry_epoch = expiry
    record.renewal_count += 1


HANDLERS = {
    GENESIS_CONFIGURED: _on_genesis_configured,
    BEACON_ADVANCED: _on_beacon_advanced,
    GENESIS_IDENTITY_REGISTERED: _on_genesis_identity,
    VERIFIER_REGISTERED: _on_verifier_registered,
    IDENTITY_CLAIMED: _on_claimed,
    VERIFIER_ASSIGNED: _on_assigned,
    ASSIGNMENT_VOIDED: _on_voided,
    CERTIFICATE_ISSUED: _on_certificate,
    CERTIFICATE_REJECTED: _on_certificate,
    IDENTITY_VERIFIED: _on_verified,
    IDENTITY_REVOKED: _on_revoked,
    IDENTITY_EXPIRED: _on_expired,
    TRUST_CIRCLE_DECLARED: _on_circle_declared,
    IDENTITY_RECOVERED: _on_recovered,
    RENEWAL_CERTIFIED: _on_renewal,
    RENEWAL_REJECTED: _on_renewal,
}


##################################
# MARK: Private functions
##################################

def _complete_verification(engine: ProtocolEngine, record: IdentityRecord, epoch: int) -> None:
    engine.emit(IDENTITY_VERIFIED, {
        'pk': record.pk,
        'expiry_epoch': epoch + engine.params.identity_ttl_epochs,
    }, epoch)
    Tokens.mint_on_verification(engine, record.pk, record.certifiers, epoch)
    if record.stake_lock_id is not None and engine.state.tokens.locks[record.stake_lock_id].active:
        Tokens.release_stake(engine, record.stake_lock_id, epoch)


def _gate_problem(state: ApplicationState, gate: EntryGate, city: str, epoch: int) -> Optional[str]:
    params = state.params
    if gate.kind == GATE_INVITATION:
        inviter = state.registry.identities.get(gate.inviter) if gate.inviter else None
        if inviter is None or inviter.status != IdentityStatus.VERIFIED:
            return "inviter is not a verified identity"
        if inviter.invitations_remaining < 1:
            return "inviter has no invitations left"
    elif gate.kind == GATE_SPONSOR:
        sponsor = state.registry.verifiers.get(gate.sponsor) if gate.sponsor else None
        if sponsor is None or not Trust.is_eligible_verifier(state, gate.sponsor, epoch):
            return "sponsor is not an eligible verifier"
        if sponsor.sponsor_quota_remaining(params.sponsor_quota, epoch // params.sponsor_window_epochs) < 1:
            return "sponsor quota exhausted"
    elif gate.kind == GATE_STAKE:
        if gate.amount is None or gate.amount < required_entry_stake(state, city):
            return "stake below the required amount"
    else:
        return f"unknown entry gate {gate.kind}"
    return None


def _check_new_claim(state: ApplicationState, event: Event, pk: PersonId, digest: str, city: str) -> None:
    if not is_hex_digest(pk) or not is_hex_digest(digest):
        raise RejectedEvent(event.height, "keys and digests must be 32-byte lowercase hex")
    if state.registry.known(pk):
        raise RejectedEvent(event.height, "public key already claimed")
    if city not in state.params.city_thresholds:
        raise RejectedEvent(event.height, f"unknown city {city}")


def _pending_record(state: ApplicationState, event: Event, pk: PersonId) -> IdentityRecord:
    record = state.registry.identities.get(pk)
    if record is None or record.status != IdentityStatus.PENDING_VERIFICATION:
        raise RejectedEvent(event.height, "identity is not pending verification")
    return record


def _leave_pending(state: ApplicationState, record: IdentityRecord) -> None:
    if record.entry_gate.kind == GATE_STAKE and record.status in PENDING:
        state.registry.pending_stake_claims[record.city] -= 1


def _withdraw_trust(state: ApplicationState, pk: PersonId) -> None:
    if state.trust.withdraw(pk) or pk in state.registry.verifiers:
        state.invalidate_eligibility()
