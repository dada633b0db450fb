"""
Module: Tokens
Integer token accounting. Supply starts at a*x through the ICO allocation and
grows by exactly x per successful verification plus A-judge rewards; forfeited
stakes are burned. After every token event the conservation identity

    sum(balances) + sum(locked) == genesis + minted - forfeited

is checked, and a violation rejects the event.
"""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING, Dict, List, Optional, Tuple

from src.Constants import *
from src.models.ApplicationState import ApplicationState
from src.models.Event import Event
from src.models.IdentityRecord import IdentityStatus, PersonId
from src.models.TokenAccount import (LOCK_FORFEITED, LOCK_RETURNED, LOCK_SLASHED, StakeLock, SupplyStats,
                                     mint_split)
from src.utils.Errors import AllocationMismatch, InsufficientBalance, NoActiveLock, RejectedEvent, TokenError
from src.utils.MathModels import gini

if TYPE_CHECKING:
    from src.protocol.Engine import ProtocolEngine


def genesis_allocate(engine: ProtocolEngine, allocations: Dict[PersonId, int]) -> None:
    """
    Credit the ICO allocation.

    :raises AllocationMismatch: when the amounts do not sum to a*x.
    """
    expected = engine.params.monetary.genesis_supply
    total = sum(allocations.values())
    if total != expected or any(amount <= 0 for amount in allocations.values()):
        raise AllocationMismatch(total, expected)
    engine.emit(GENESIS_ALLOCATED, {'allocations': dict(sorted(allocations.items()))}, 0)


def mint_on_verification(engine: ProtocolEngine, user: PersonId, verifiers: List[PersonId],
                         epoch: int) -> Dict[PersonId, int]:
    """Mint exactly x, split between the new user and its certifying verifiers."""
    credits = mint_split(engine.params.monetary.x, user, verifiers)
    engine.emit(TOKENS_MINTED, {
        'reason': MINT_VERIFICATION,
        'user': user,
        'credits': [[pk, amount] for pk, amount in credits.items()],
    }, epoch)
    return credits


def mint_reward(engine: ProtocolEngine, pk: PersonId, amount: int, epoch: int) -> None:
    if amount <= 0:
        return
    engine.emit(TOKENS_MINTED, {'reason': MINT_AJUDGE_REWARD, 'user': pk, 'credits': [[pk, amount]]}, epoch)


def transfer(engine: ProtocolEngine, from_pk: PersonId, to_pk: PersonId, amount: int, reason: str, epoch: int) -> None:
    if amount <= 0:
        raise TokenError("transfer amount must be positive")
    balance = engine.state.tokens.balance_of(from_pk)
    if balance < amount:
        raise InsufficientBalance(from_pk, balance, amount)
    engine.emit(TOKENS_TRANSFERRED, {'from': from_pk, 'to': to_pk, 'amount': amount, 'reason': reason}, epoch)


def lock_stake(engine: ProtocolEngine, pk: PersonId, amount: int, reason: str, epoch: int) -> int:
    """
    Move amount from pk's balance into a new lock.

    :return: The lock id (the height of the StakeLocked event).
    """
    balance = engine.state.tokens.balance_of(pk)
    if balance < amount:
        raise InsufficientBalance(pk, balance, amount)
    event = engine.emit(STAKE_LOCKED, {'owner': pk, 'amount': amount, 'reason': reason}, epoch)
    return event.height


def release_stake(engine: ProtocolEngine, lock_id: int, epoch: int) -> None:
    _active_lock(engine.state, lock_id)
    engine.emit(STAKE_RETURNED, {'lock_id': lock_id}, epoch)


def forfeit_stake(engine: ProtocolEngine, lock_id: int, epoch: int) -> None:
    _active_lock(engine.state, lock_id)
    engine.emit(STAKE_FORFEITED, {'lock_id': lock_id}, epoch)


def verifier_lock(state: ApplicationState, pk: PersonId) -> Optional[StakeLock]:
    verifier = state.registry.verifiers.get(pk)
    if verifier is None or verifier.stake_lock_id is None:
        return None
    lock = state.tokens.locks.get(verifier.stake_lock_id)
    return lock if lock is not None and lock.active else None


def slash_to(engine: ProtocolEngine, pk: PersonId, beneficiary: PersonId, epoch: int) -> int:
    """
    Transfer pk's active verifier stake to beneficiary.

    :return: The amount slashed.
    :raises NoActiveLock: when pk has no active verifier stake.
    """
    lock = verifier_lock(engine.state, pk)
    if lock is None:
        raise NoActiveLock(f"{pk[:16]}... has no active verifier stake")
    engine.emit(STAKE_SLASHED, {'lock_id': lock.lock_id, 'beneficiary': beneficiary}, epoch)
    return lock.amount


def supply_stats(state: ApplicationState, ico_accounts: Tuple[PersonId, ...] = ()) -> SupplyStats:
    tokens = state.tokens
    holdings = [a.balance + a.locked for a in tokens.accounts.values()]
    total = sum(holdings)
    ico_held = sum(tokens.accounts[pk].balance + tokens.accounts[pk].locked
                   for pk in ico_accounts if pk in tokens.accounts)
    return SupplyStats(
        genesis_supply=tokens.genesis_supply,
        minted_verification=tokens.minted_verification,
        minted_rewards=tokens.minted_rewards,
        forfeited=tokens.forfeited,
        locked=tokens.total_locked,
        verifications=tokens.verifications,
        circulating=tokens.expected_total - tokens.total_locked,
        gini_balance=gini(holdings),
        ico_share=ico_held / total if total else 0.0,
    )


##################################
# MARK: Event handlers
##################################

def _on_genesis_allocated(state: ApplicationState, event: Event) -> None:
    allocations = event.payload['allocations']
    if state.tokens.genesis_supply:
        raise RejectedEvent(event.height, "genesis allocation already applied")
    total = sum(allocations.values())
    if total != state.params.monetary.genesis_supply:
        raise RejectedEvent(event.height, f"allocations sum to {total}")
    if any(not isinstance(amount, int) or amount <= 0 for amount in allocations.values()):
        raise RejectedEvent(event.height, "allocations must be positive integers")
    for pk, amount in allocations.items():
        _credit(state, pk, amount)
    state.tokens.genesis_supply = total
    _check_conservation(state, event)


def _on_minted(state: ApplicationState, event: Event) -> None:
    payload = event.payload
    credits = [(pk, amount) for pk, amount in payload['credits']]
    total = sum(amount for _, amount in credits)
    if any(amount < 0 for _, amount in credits):
        raise RejectedEvent(event.height, "negative mint credit")
    if payload['reason'] == MINT_VERIFICATION:
        record = state.registry.identities.get(payload['user'])
        if record is None or record.status != IdentityStatus.VERIFIED:
            raise RejectedEvent(event.height, "verification mint for an unverified identity")
        expected = mint_split(state.params.monetary.x, record.pk, record.certifiers)
        if dict(credits) != expected or len(credits) != len(expected):
            raise RejectedEvent(event.height, "verification mint does not follow the split over the certifiers")
        state.tokens.minted_verification += total
        state.tokens.verifications += 1
    elif payload['reason'] == MINT_AJUDGE_REWARD:
        if [pk for pk, _ in credits] != [payload['user']]:
            raise RejectedEvent(event.height, "reward mint must credit its recipient only")
        state.tokens.minted_rewards += total
    else:
        raise RejectedEvent(event.height, f"unknown mint reason {payload['reason']}")
    for pk, amount in credits:
        _credit(state, pk, amount)
    _check_conservation(state, event)


def _on_transferred(state: ApplicationState, event: Event) -> None:
    payload = event.payload
    amount = payload['amount']
    if amount <= 0 or state.tokens.balance_of(payload['from']) < amount:
        raise RejectedEvent(event.height, "transfer exceeds balance")
    state.tokens.account(payload['from']).balance -= amount
    state.tokens.account(payload['to']).balance += amount
    _check_conservation(state, event)


def _on_locked(state: ApplicationState, event: Event) -> None:
    payload = event.payload
    owner, amount, reason = payload['owner'], payload['amount'], payload['reason']
    if amount < 0 or state.tokens.balance_of(owner) < amount:
        raise RejectedEvent(event.height, "stake exceeds balance")
    if reason == LOCK_ENTRY_GATE:
        record = state.registry.identities.get(owner)
        if record is None or record.entry_gate.kind != GATE_STAKE or record.stake_lock_id is not None:
            raise RejectedEvent(event.height, "entry stake without a stake-gated claim")
        record.stake_lock_id = event.height
    elif reason == LOCK_VERIFIER:
        verifier = state.registry.verifiers.get(owner)
        if verifier is None:
            raise RejectedEvent(event.height, "verifier stake for an unregistered verifier")
        if verifier.stake_lock_id is not None and state.tokens.locks[verifier.stake_lock_id].active:
            raise RejectedEvent(event.height, "verifier stake already locked")
        verifier.stake_lock_id = event.height
        state.invalidate_eligibility()
    else:
        raise RejectedEvent(event.height, f"unknown lock reason {reason}")
    account = state.tokens.account(owner)
    account.balance -= amount
    account.locked += amount
    state.tokens.total_locked += amount
    state.tokens.total_balance -= amount
    state.tokens.locks[event.height] = StakeLock(lock_id=event.height, owner=owner, amount=amount, reason=reason)
    _check_conservation(state, event)


def _on_returned(state: ApplicationState, event: Event) -> None:
    lock = _settle(state, event, LOCK_RETURNED)
    account = state.tokens.account(lock.owner)
    account.balance += lock.amount
    state.tokens.total_balance += lock.amount
    _check_conservation(state, event)


def _on_forfeited(state: ApplicationState, event: Event) -> None:
    lock = _settle(state, event, LOCK_FORFEITED)
    state.tokens.forfeited += lock.amount
    _check_conservation(state, event)


def _on_slashed(state: ApplicationState, event: Event) -> None:
    target = state.tokens.locks.get(event.payload['lock_id'])
    if target is not None and target.reason != LOCK_VERIFIER:
        raise RejectedEvent(event.height, "only verifier stakes can be slashed")
    lock = _settle(state, event, LOCK_SLASHED)
    _credit(state, event.payload['beneficiary'], lock.amount)
    state.tokens.slashed += lock.amount
    _check_conservation(state, event)


HANDLERS = {
    GENESIS_ALLOCATED: _on_genesis_allocated,
    TOKENS_MINTED: _on_minted,
    TOKENS_TRANSFERRED: _on_transferred,
    STAKE_LOCKED: _on_locked,
    STAKE_RETURNED: _on_returned,
    STAKE_FORFEITED: _on_forfeited,
    STAKE_SLASHED: _on_slashed,
}


##################################
# MARK: Private functions
##################################

def _credit(state: ApplicationState, pk: PersonId, amount: int) -> None:
    state.tokens.account(pk).balance += amount
    state.tokens.total_balance += amount


def _active_lock(state: ApplicationState, lock_id: int) -> StakeLock:
    lock = state.tokens.locks.get(lock_id)
    if lock is None or not lock.active:
        raise NoActiveLock(f"lock {lock_id} is not active")
    return lock


def _settle(state: ApplicationState, event: Event, status: str) -> StakeLock:
    lock = state.tokens.locks.get(event.payload['lock_id'])
    if lock is None or not lock.active:
        raise RejectedEvent(event.height, f"lock {event.payload['lock_id']} is not active")
    account = state.tokens.account(lock.owner)
    account.locked -= lock.amount
    state.tokens.total_locked -= lock.amount
    lock.status = status
    if lock.reason == LOCK_VERIFIER:
        state.invalidate_eligibility()
    return lock


def _check_conservation(state: ApplicationState, event: Event) -> None:
    tokens = state.tokens
    if tokens.total_balance + tokens.total_locked != tokens.expected_total:
        logging.error("Token conservation violated at height %d", event.height)
        raise RejectedEvent(event.height, "token conservation violated")
    if tokens.total_balance < 0 or tokens.total_locked < 0:
        raise RejectedEvent(event.height, "negative token totals")
