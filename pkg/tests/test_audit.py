"""
A-judge re-checks: who may call, quotas, verdicts, slashing of the
certifiers of a fake, missed deadlines and random system checks.
"""

import math
from types import SimpleNamespace

import numpy as np
import pytest

from src.Constants import *
from src.models.AuditCall import AJudgeVerdict
from src.models.IdentityRecord import IdentityStatus, Invitation
from src.protocol import Audit, Trust
from src.protocol.Adversary import corrupt_verifier_behavior
from src.protocol.Replay import replay
from src.utils.Errors import (DeadlinePassed, NotAuthorized, QuotaExhausted, TargetNotVerified,
                              TargetUnderAudit)
from tests.support import CITY, certify_until_done, claim_newcomer, free_inviter, genesis_roles, verified_newcomer


# ===================================================================
# Calling the A-judge
# ===================================================================

def test_call_rules(sim):
    verifiers, supporters = genesis_roles(sim)
    person = verified_newcomer(sim, 1)
    pending = claim_newcomer(sim, 1)
    with pytest.raises(NotAuthorized):
        Audit.call_ajudge(sim.engine, verifiers[0], verifiers[0], 1)
    with pytest.raises(NotAuthorized):
        Audit.call_ajudge(sim.engine, supporters[0], person.pk, 1)
    with pytest.raises(TargetNotVerified):
        Audit.call_ajudge(sim.engine, verifiers[0], pending.pk, 1)

    call = Audit.call_ajudge(sim.engine, verifiers[0], person.pk, 1)
    assert call.open
    assert call.deadline_epoch == 1 + 4
    assert call.call_id == sim.engine.ledger.height
    with pytest.raises(TargetUnderAudit):
        Audit.call_ajudge(sim.engine, verifiers[1], person.pk, 1)


def test_recheck_quota_per_window(sim):
    verifiers, supporters = genesis_roles(sim)
    caller = verifiers[0]
    assert Audit.quota_remaining(sim.state, caller, 1) == 2
    Audit.call_ajudge(sim.engine, caller, supporters[0], 1)
    Audit.call_ajudge(sim.engine, caller, supporters[1], 2)
    assert Audit.quota_remaining(sim.state, caller, 3) == 0
    with pytest.raises(QuotaExhausted):
        Audit.call_ajudge(sim.engine, caller, supporters[2], 3)
    # the next window restores the quota
    assert Audit.quota_remaining(sim.state, caller, 4) == 2
    Audit.call_ajudge(sim.engine, caller, supporters[2], 4)


def test_verdict_modes():
    votes = {"a": True, "b": True, "c": False}
    assert Audit.verdict_from_votes(votes, AJUDGE_MAJORITY) == AJudgeVerdict.PASSED_GENUINE
    assert Audit.verdict_from_votes(votes, AJUDGE_UNANIMITY) == AJudgeVerdict.FAILED_FAKE
    assert Audit.verdict_from_votes({"a": True, "b": False}, AJUDGE_MAJORITY) == AJudgeVerdict.FAILED_FAKE
    assert Audit.verdict_from_votes({"a": True}, AJUDGE_UNANIMITY) == AJudgeVerdict.PASSED_GENUINE


# ===================================================================
# Adjudication
# ===================================================================

def test_genuine_identity_passes_and_is_rewarded(sim):
    verifiers, _ = genesis_roles(sim)
    person = verified_newcomer(sim, 1)
    balance = sim.state.tokens.balance_of(person.pk)
    call = Audit.call_ajudge(sim.engine, verifiers[0], person.pk, 1)
    settlement = Audit.adjudicate(sim.engine, call.call_id, 2, sim.present(person.pk))
    assert settlement.outcome == AJudgeVerdict.PASSED_GENUINE
    assert settlement.reward == 10
    assert sim.state.tokens.balance_of(person.pk) == balance + 10
    assert sim.state.tokens.minted_rewards == 10
    assert not call.open
    assert sorted(call.votes) == verifiers
    assert sim.state.audit.passed == 1
    assert sim.state.registry.identities[person.pk].status == IdentityStatus.VERIFIED


def test_fake_fails_and_certifiers_are_slashed(sim):
    verifiers, _ = genesis_roles(sim)
    for verifier in verifiers:
        corrupt_verifier_behavior(sim.engine, verifier)
    fake = sim.population.spawn_fake(sim.rng, CITY)
    sim.claim(fake, Invitation(free_inviter(sim)), 1)
    record = certify_until_done(sim, fake.pk, 1)
    assert record.status == IdentityStatus.VERIFIED
    certifiers = sorted(record.certifiers)
    caller = next(v for v in verifiers if v not in certifiers)
    before = sim.state.tokens.balance_of(caller)

    call = Audit.call_ajudge(sim.engine, caller, fake.pk, 2)
    settlement = Audit.adjudicate(sim.engine, call.call_id, 2, sim.present(fake.pk))
    assert settlement.outcome == AJudgeVerdict.FAILED_FAKE
    assert settlement.transfers == [(v, caller, 100) for v in certifiers]
    assert settlement.tokens_slashed == 300
    assert settlement.suspended == certifiers
    assert sim.state.tokens.balance_of(caller) == before + 300
    assert record.status == IdentityStatus.REVOKED
    assert record.revoked_reason == REASON_FAILED_FAKE
    for verifier in certifiers:
        assert sim.state.trust.suspended_until[verifier] == 2 + 26
    assert Trust.eligible_verifiers(sim.state, CITY, 3) == sorted(set(verifiers) - set(certifiers))
    assert replay(sim.engine.ledger.events).state_hash() == sim.state.state_hash()


def test_no_show_misses_the_deadline(sim):
    verifiers, _ = genesis_roles(sim)
    person = verified_newcomer(sim, 1)
    call = Audit.call_ajudge(sim.engine, verifiers[0], person.pk, 1)
    assert Audit.expire_audit_calls(sim.engine, 5) == []
    with pytest.raises(DeadlinePassed):
        Audit.adjudicate(sim.engine, call.call_id, 6, sim.present(person.pk))
    settlements = Audit.expire_audit_calls(sim.engine, 6)
    assert [s.outcome for s in settlements] == [AJudgeVerdict.MISSED_DEADLINE]
    assert settlements[0].tokens_slashed == 0
    record = sim.state.registry.identities[person.pk]
    assert record.status == IdentityStatus.REVOKED
    assert record.revoked_reason == REASON_MISSED_DEADLINE
    assert sim.state.audit.missed == 1
    assert sim.state.tokens.slashed == 0


def test_random_check(sim):
    assert Audit.random_check(sim.engine, 1, np.random.default_rng(0), 0.0) is None
    call = Audit.random_check(sim.engine, 1, np.random.default_rng(0), 1.0)
    assert call.system
    assert call.caller == sim.engine.params.system_account
    assert call.target in sim.state.registry.verified
    assert sim.state.audit.quota == {}


def test_random_check_rate_is_binomial(sim, monkeypatch):
    emitted = []

    def record(kind, payload, epoch):
        emitted.append(payload)
        sim.state.audit.calls[len(emitted)] = payload
        return SimpleNamespace(height=len(emitted))

    monkeypatch.setattr(sim.engine, "emit", record)
    rng = np.random.default_rng(24)
    epochs, rate = 10_000, 0.25
    for epoch in range(1, epochs + 1):
        Audit.random_check(sim.engine, epoch, rng, rate)
    assert abs(len(emitted) - epochs * rate) <= 3 * math.sqrt(epochs * rate * (1 - rate))
    assert all(payload['system'] for payload in emitted)
