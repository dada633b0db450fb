"""
Module: Trust
Delegated trust. Every verified identity may point one delegation at another
verified identity; a verifier is eligible while its received weight reaches
its city's threshold, its verifier stake is locked and it is not suspended.
"""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING, List

from src.Constants import *
from src.models.ApplicationState import ApplicationState
from src.models.Event import Event
from src.models.IdentityRecord import IdentityStatus, PersonId
from src.models.TrustDelegation import TrustDelegation
from src.protocol import Registry
from src.utils.Errors import NoEligibleVerifiersInCity, RejectedEvent, SelfDelegation, Unverified

if TYPE_CHECKING:
    from src.protocol.Engine import ProtocolEngine


def is_eligible_verifier(state: ApplicationState, pk: PersonId, epoch: int) -> bool:
    verifier = state.registry.verifiers.get(pk)
    record = state.registry.identities.get(pk)
    if verifier is None or record is None or record.status != IdentityStatus.VERIFIED:
        return False
    if state.trust.weight_of(pk) < state.params.threshold_for(verifier.city):
        return False
    lock = state.tokens.locks.get(verifier.stake_lock_id) if verifier.stake_lock_id is not None else None
    if lock is None or not lock.active or lock.amount < state.params.monetary.verifier_stake:
        return False
    return not state.trust.is_suspended(pk, epoch)


def eligible_verifiers(state: ApplicationState, city: str, epoch: int) -> List[PersonId]:
    """Eligible verifiers of a city in ascending public-key order (cached per state revision and epoch)."""
    cached = state.eligible_cache.get(city)
    if cached is not None and cached[0] == state.eligibility_revision and cached[1] == epoch:
        return cached[2]
    eligible = sorted(pk for pk, v in state.registry.verifiers.items()
                      if v.city == city and is_eligible_verifier(state, pk, epoch))
    state.eligible_cache[city] = (state.eligibility_revision, epoch, eligible)
    return eligible


def delegate(engine: ProtocolEngine, from_pk: PersonId, to_pk: PersonId, epoch: int) -> TrustDelegation:
    """
    Point from_pk's single delegation at to_pk, replacing any previous one.

    :raises SelfDelegation: when from_pk == to_pk.
    :raises Unverified: when either side is not Verified.
    """
    if from_pk == to_pk:
        raise SelfDelegation(f"{from_pk[:16]}... cannot delegate to itself")
    for pk in (from_pk, to_pk):
        record = engine.state.registry.identities.get(pk)
        if record is None or record.status != IdentityStatus.VERIFIED:
            raise Unverified(f"{pk[:16]}... is not a verified identity")
    engine.emit(TRUST_DELEGATED, {'from': from_pk, 'to': to_pk}, epoch)
    return engine.state.trust.delegations[from_pk]


def suspend(engine: ProtocolEngine, pk: PersonId, until_epoch: int, epoch: int) -> List[PersonId]:
    """
    Suspend a verifier until until_epoch and move every assignment it holds to
    another verifier. The moves do not count against the users' reassignment caps.

    :return: Users whose pending assignment was voided.
    """
    engine.emit(TRUST_SUSPENDED, {'pk': pk, 'until': until_epoch}, epoch)
    registry = engine.state.registry
    affected = sorted(user for user in registry.pending
                      if registry.identities[user].current_assignee == pk)
    for user in affected:
        engine.emit(ASSIGNMENT_VOIDED, {'user': user, 'verifier': pk}, epoch)
        try:
            Registry.assign_next_verifier(engine, user, epoch, free=True)
        except NoEligibleVerifiersInCity as e:
            logging.warning("Voided assignment of %s left open: %s", user[:16], e)
    return affected


##################################
# MARK: Event handlers
##################################

def _on_delegated(state: ApplicationState, event: Event) -> None:
    from_pk, to_pk = event.payload['from'], event.payload['to']
    if from_pk == to_pk:
        raise RejectedEvent(event.height, "self delegation")
    for pk in (from_pk, to_pk):
        record = state.registry.identities.get(pk)
        if record is None or record.status != IdentityStatus.VERIFIED:
            raise RejectedEvent(event.height, f"{pk[:16]}... is not verified")
    state.trust.add(TrustDelegation(from_pk=from_pk, to_pk=to_pk, epoch=event.epoch))
    state.invalidate_eligibility()


def _on_suspended(state: ApplicationState, event: Event) -> None:
    pk, until = event.payload['pk'], event.payload['until']
    if pk not in state.registry.verifiers:
        raise RejectedEvent(event.height, "only verifiers can be suspended")
    state.trust.suspended_until[pk] = max(until, state.trust.suspended_until.get(pk, 0))
    state.invalidate_eligibility()


HANDLERS = {
    TRUST_DELEGATED: _on_delegated,
    TRUST_SUSPENDED: _on_suspended,
}
