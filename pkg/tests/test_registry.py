"""
Identity lifecycle: genesis, entry gates, beacon-driven assignment,
certificates and reassignment, duplicate claims, recovery, renewal and
expiry.
"""

import hashlib

import numpy as np
import pytest
from scipy.stats import chisquare

from src.Constants import *
from src.models.IdentityRecord import IdentityStatus, Invitation, Stake, VerifierSponsor
from src.models.TokenAccount import LOCK_FORFEITED, LOCK_RETURNED
from src.protocol import Audit, Registry, Trust
from src.protocol.Replay import replay
from src.utils.Canonical import derive_pk
from src.utils.Errors import (AlreadyExpired, DuplicatePk, GateUnsatisfied, IdentityNotVerified,
                              InsufficientApprovals, InsufficientGenesisVerifiers, NoEligibleVerifiersInCity,
                              NoRejectionPending, NotPending, NotRecoverable, PkInUse, ReassignmentLimitReached,
                              SelfInTrustCircle, TooFewMembers, UnverifiedMember, WrongVerifier)
from tests.support import (CITY, certify_until_done, claim_newcomer, free_inviter, genesis_roles,
                           verified_newcomer)


# ===================================================================
# Genesis
# ===================================================================

def test_genesis_registers_verifiers_and_supporters(sim):
    verifiers, supporters = genesis_roles(sim)
    assert len(verifiers) == 5
    assert len(supporters) == 5
    assert sim.state.registry.count(IdentityStatus.VERIFIED) == 10
    assert Trust.eligible_verifiers(sim.state, CITY, 1) == verifiers
    for pk in verifiers:
        assert sim.state.trust.weight_of(pk) == 2
        assert sim.state.tokens.balance_of(pk) == 0
    for pk in verifiers + supporters:
        record = sim.state.registry.identities[pk]
        assert record.genesis
        assert record.expiry_epoch == 52


def test_genesis_needs_enough_verifiers(genesis):
    with pytest.raises(InsufficientGenesisVerifiers):
        genesis(verifiers=2)


def test_lone_verifier_gets_full_supporter_weight(genesis):
    lone = genesis(verifiers=1, threshold=3, protocol={CERTS_REQUIRED: 1})
    verifiers, supporters = genesis_roles(lone)
    assert len(supporters) == 3
    assert lone.state.trust.weight_of(verifiers[0]) == 3
    assert Trust.eligible_verifiers(lone.state, CITY, 1) == verifiers


# ===================================================================
# Claims and entry gates
# ===================================================================

def test_first_assignment_follows_the_beacon(sim):
    candidates = Trust.eligible_verifiers(sim.state, CITY, 1)
    beacon = sim.state.beacon.value
    person = claim_newcomer(sim, 1)
    digest = hashlib.sha256(beacon + bytes.fromhex(person.pk) + (0).to_bytes(8, "big")).digest()
    expected = candidates[int.from_bytes(digest[:8], "big") % len(candidates)]
    record = sim.state.registry.identities[person.pk]
    assert record.current_assignee == expected
    assert record.status == IdentityStatus.PENDING_VERIFICATION
    assert Registry.assignment_index(beacon, person.pk, 0, len(candidates)) == candidates.index(expected)


def test_assignment_regression_vector():
    beacon = bytes(31) + b"\x01"
    pk = "02" * 32
    digest = hashlib.sha256(beacon + bytes.fromhex(pk) + bytes(8)).hexdigest()
    assert digest == "2e7e63fb5fbd4410dafd94b21f1d164bc66a6dbc4e791737f925d56af21f3d51"
    assert Registry.assignment_index(beacon, pk, 0, 5) == 0x2e7e63fb5fbd4410 % 5 == 0


def test_assignment_is_uniform_over_beacon_rounds():
    draws, n = 100_000, 10
    pk = "02" * 32
    counts = np.zeros(n, dtype=np.int64)
    for r in range(draws):
        counts[Registry.assignment_index(r.to_bytes(32, "big"), pk, 0, n)] += 1
    assert np.all(np.abs(counts / draws - 0.1) <= 0.01)
    assert chisquare(counts).pvalue > 1e-4


def test_invitation_is_consumed(sim):
    inviter = free_inviter(sim)
    claim_newcomer(sim, 1, Invitation(inviter))
    assert sim.state.registry.identities[inviter].invitations_remaining == 1
    claim_newcomer(sim, 1, Invitation(inviter))
    with pytest.raises(GateUnsatisfied):
        claim_newcomer(sim, 1, Invitation(inviter))


def test_pending_identity_cannot_invite(sim):
    pending = claim_newcomer(sim, 1)
    with pytest.raises(GateUnsatisfied):
        claim_newcomer(sim, 1, Invitation(pending.pk))


def test_full_verification_mints_and_sets_expiry(sim):
    person = verified_newcomer(sim, 1)
    record = sim.state.registry.identities[person.pk]
    assert record.status == IdentityStatus.VERIFIED
    assert record.expiry_epoch == 1 + 52
    assert record.invitations_remaining == 2
    assert len(set(record.certifiers)) == 3
    for verifier in record.certifiers:
        assert sim.state.tokens.balance_of(verifier) == 25
    assert sim.state.tokens.balance_of(person.pk) == 25
    assert sim.state.tokens.minted_verification == 100
    assert sim.state.tokens.verifications == 1


def test_certificate_from_wrong_verifier(sim):
    person = claim_newcomer(sim, 1)
    record = sim.state.registry.identities[person.pk]
    other = next(v for v in genesis_roles(sim)[0] if v != record.current_assignee)
    with pytest.raises(WrongVerifier):
        Registry.submit_certificate(sim.engine, other, person.pk, sim.present(person.pk), 1)


def test_verified_identity_is_not_pending(sim):
    person = verified_newcomer(sim, 1)
    verifier = genesis_roles(sim)[0][0]
    with pytest.raises(NotPending):
        Registry.submit_certificate(sim.engine, verifier, person.pk, sim.present(person.pk), 1)


def test_public_keys_are_claimed_once(sim):
    person = claim_newcomer(sim, 1)
    with pytest.raises(DuplicatePk):
        sim.claim(person, Invitation(free_inviter(sim)), 1)


def test_sponsor_must_be_an_eligible_verifier(sim):
    verifiers, supporters = genesis_roles(sim)
    with pytest.raises(GateUnsatisfied):
        claim_newcomer(sim, 1, VerifierSponsor(supporters[0]))
    for _ in range(5):
        claim_newcomer(sim, 1, VerifierSponsor(verifiers[0]))
    with pytest.raises(GateUnsatisfied):
        claim_newcomer(sim, 1, VerifierSponsor(verifiers[0]))
    assert sim.state.registry.verifiers[verifiers[0]].sponsor_used == 5


def test_stake_gate_needs_tokens(sim):
    with pytest.raises(GateUnsatisfied):
        claim_newcomer(sim, 1, Stake())


def test_stake_gate_escalates_with_pending_claims(sim):
    first = sim.population.spawn(sim.rng, CITY)
    assert sim.buy_tokens(first.pk, 10, 1)
    record = sim.claim(first, Stake(), 1)
    assert record.entry_gate.amount == 10
    assert sim.state.tokens.locks[record.stake_lock_id].amount == 10

    second = sim.population.spawn(sim.rng, CITY)
    assert sim.buy_tokens(second.pk, 20, 1)
    with pytest.raises(GateUnsatisfied):
        sim.claim(second, Stake(10), 1)
    assert sim.claim(second, Stake(), 1).entry_gate.amount == 20
    assert Registry.required_entry_stake(sim.state, CITY) == 30

    certify_until_done(sim, first.pk, 1)
    assert sim.state.tokens.locks[record.stake_lock_id].status == LOCK_RETURNED
    assert sim.state.tokens.balance_of(first.pk) == 10 + 25
    assert Registry.required_entry_stake(sim.state, CITY) == 20


def test_unknown_city_has_no_verifiers(sim):
    stranger = sim.population.spawn(sim.rng, "atlantis")
    with pytest.raises(NoEligibleVerifiersInCity):
        sim.claim(stranger, Invitation(free_inviter(sim)), 1)


# ===================================================================
# Rejection and reassignment
# ===================================================================

def test_fake_is_rejected_until_reassignments_run_out(sim):
    fake = sim.population.spawn_fake(sim.rng, CITY)
    sim.claim(fake, Invitation(free_inviter(sim)), 1)
    record = sim.state.registry.identities[fake.pk]
    with pytest.raises(NoRejectionPending):
        Registry.request_reassignment(sim.engine, fake.pk, 1)
    for attempt in range(4):
        Registry.submit_certificate(sim.engine, record.current_assignee, fake.pk, sim.present(fake.pk), 1)
        assert record.rejection_pending
        assert record.certificates == []
        if attempt < 3:
            Registry.request_reassignment(sim.engine, fake.pk, 1)
            assert record.reassignments_used == attempt + 1
    with pytest.raises(ReassignmentLimitReached):
        Registry.request_reassignment(sim.engine, fake.pk, 1)
    assert len(record.rejections) == 4
    Registry.abandon_verification(sim.engine, fake.pk, 1)
    assert record.status == IdentityStatus.REVOKED
    assert record.revoked_reason == REASON_VERIFICATION_FAILED


def test_abandoned_stake_claim_forfeits(sim):
    fake = sim.population.spawn_fake(sim.rng, CITY)
    assert sim.buy_tokens(fake.pk, 10, 1)
    record = sim.claim(fake, Stake(), 1)
    Registry.submit_certificate(sim.engine, record.current_assignee, fake.pk, sim.present(fake.pk), 1)
    Registry.abandon_verification(sim.engine, fake.pk, 1)
    assert sim.state.tokens.locks[record.stake_lock_id].status == LOCK_FORFEITED
    assert sim.state.tokens.forfeited == 10
    assert sim.state.registry.pending_stake_claims[CITY] == 0
    assert replay(sim.engine.ledger.events).state_hash() == sim.state.state_hash()


# ===================================================================
# Duplicate claims
# ===================================================================

def test_duplicate_claim_waits_for_adjudication(sim):
    _, supporters = genesis_roles(sim)
    original = sim.population[supporters[0]]
    duplicate = sim.population.spawn_duplicate(sim.rng, original)
    record = sim.claim(duplicate, Invitation(supporters[1]), 1)
    assert record.status == IdentityStatus.PENDING_ENTRY
    assert record.dedup_flags == [original.pk]
    assert record.current_assignee is None

    assert Audit.adjudicate_duplicate_claim(sim.engine, duplicate.pk, 1, sim.present(duplicate.pk))
    assert record.status == IdentityStatus.REVOKED
    assert record.revoked_reason == REASON_DUPLICATE
    assert sim.state.audit.duplicates_confirmed == 1


def test_fresh_claim_is_not_a_duplicate_case(sim):
    person = claim_newcomer(sim, 1)
    with pytest.raises(NotPending):
        Audit.adjudicate_duplicate_claim(sim.engine, person.pk, 1, sim.present(person.pk))


# ===================================================================
# Trust circles and recovery
# ===================================================================

def test_trust_circle_validation(sim):
    verifiers, supporters = genesis_roles(sim)
    user = supporters[0]
    circle = supporters[1:] + verifiers[:1]
    with pytest.raises(SelfInTrustCircle):
        Registry.declare_trust_circle(sim.engine, user, circle[:4] + [user], 1)
    with pytest.raises(TooFewMembers):
        Registry.declare_trust_circle(sim.engine, user, circle[:4], 1)
    pending = claim_newcomer(sim, 1)
    with pytest.raises(UnverifiedMember):
        Registry.declare_trust_circle(sim.engine, user, circle[:4] + [pending.pk], 1)
    with pytest.raises(IdentityNotVerified):
        Registry.declare_trust_circle(sim.engine, pending.pk, circle, 1)
    assert Registry.declare_trust_circle(sim.engine, user, circle, 1) == sorted(circle)


def test_recovery_quorum_is_a_strict_majority(sim):
    params = sim.engine.params
    assert Registry.recovery_quorum(params, 5) == 3
    assert Registry.recovery_quorum(params, 6) == 4


def test_recovery_moves_identity_to_new_key(sim):
    verifiers, supporters = genesis_roles(sim)
    user = supporters[0]
    delegate_to = sim.state.trust.delegations[user].to_pk
    circle = supporters[1:] + verifiers[:1]
    new_pk = derive_pk("recovered", 1)
    with pytest.raises(NotRecoverable):
        Registry.recover_identity(sim.engine, user, new_pk, circle, 1)
    Registry.declare_trust_circle(sim.engine, user, circle, 1)
    with pytest.raises(InsufficientApprovals) as info:
        Registry.recover_identity(sim.engine, user, new_pk, circle[:2] + [verifiers[1]], 1)
    assert (info.value.approvals, info.value.required) == (2, 3)
    with pytest.raises(PkInUse):
        Registry.recover_identity(sim.engine, user, supporters[1], circle, 1)

    record = Registry.recover_identity(sim.engine, user, new_pk, circle[:3], 1)
    registry = sim.state.registry
    assert record.pk == new_pk
    assert record.status == IdentityStatus.PENDING_VERIFICATION
    assert record.entry_gate.kind == GATE_RECOVERY
    assert user in registry.retired and registry.known(user)
    assert user not in registry.identities
    assert user not in sim.state.trust.delegations
    assert sim.state.trust.weight_of(delegate_to) == 1
    assert record.current_assignee is not None

    while record.status == IdentityStatus.PENDING_VERIFICATION:
        Registry.submit_certificate(sim.engine, record.current_assignee, new_pk,
                                    sim.population.present(user, sim.rng), 2)
    assert record.status == IdentityStatus.VERIFIED
    assert replay(sim.engine.ledger.events).state_hash() == sim.state.state_hash()


# ===================================================================
# Renewal and expiry
# ===================================================================

def test_renewal_extends_expiry(sim):
    verifiers, supporters = genesis_roles(sim)
    pk = supporters[0]
    drawn = Registry.renewal_verifier(sim.state, pk, 50)
    other = next(v for v in verifiers if v != drawn)
    with pytest.raises(WrongVerifier):
        Registry.renew_identity(sim.engine, pk, sim.present(pk), other, 50)
    record = Registry.renew_identity(sim.engine, pk, sim.present(pk), drawn, 50)
    assert record.expiry_epoch == 50 + 52
    assert record.renewal_count == 1


def test_rejected_renewal_keeps_expiry(sim):
    _, supporters = genesis_roles(sim)
    pk = supporters[0]
    drawn = Registry.renewal_verifier(sim.state, pk, 50)
    record = Registry.renew_identity(sim.engine, pk, sim.present(supporters[1]), drawn, 50)
    assert record.expiry_epoch == 52
    assert record.renewal_count == 1
    assert sim.engine.ledger[-1].kind == RENEWAL_REJECTED


def test_expiry_after_ttl(sim):
    verifiers, supporters = genesis_roles(sim)
    renewed = supporters[0]
    Registry.renew_identity(sim.engine, renewed, sim.present(renewed),
                            Registry.renewal_verifier(sim.state, renewed, 50), 50)
    assert Registry.expire_identities(sim.engine, 52) == []
    expired = Registry.expire_identities(sim.engine, 53)
    assert expired == sorted(pk for pk in verifiers + supporters if pk != renewed)
    assert sim.state.registry.identities[supporters[1]].status == IdentityStatus.EXPIRED
    with pytest.raises(AlreadyExpired):
        Registry.renew_identity(sim.engine, supporters[1], sim.present(supporters[1]), verifiers[0], 53)
    assert Trust.eligible_verifiers(sim.state, CITY, 53) == []
