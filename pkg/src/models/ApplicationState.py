from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

from src.models.AuditCall import AuditCall
from src.models.Community import Community, Proposal
from src.models.IdentityRecord import IdentityRecord, IdentityStatus, PersonId, VerifierRecord
from src.models.RandomnessBeacon import RandomnessBeacon
from src.models.ScenarioConfig import ProtocolParams
from src.models.TokenAccount import StakeLock, TokenAccount
from src.models.TrustDelegation import TrustLedgerView
from src.utils.Canonical import canonical_bytes, sha256


@dataclass
class RegistryState:
    identities: Dict[PersonId, IdentityRecord] = field(default_factory=dict)
    verifiers: Dict[PersonId, VerifierRecord] = field(default_factory=dict)
    retired: Set[PersonId] = field(default_factory=set)
    pending: Set[PersonId] = field(default_factory=set)
    verified: Set[PersonId] = field(default_factory=set)
    pending_stake_claims: Dict[str, int] = field(default_factory=dict)
    status_counts: Dict[str, int] = field(default_factory=dict)
    claims_total: int = 0

    def known(self, pk: PersonId) -> bool:
        return pk in self.identities or pk in self.retired

    def add(self, record: IdentityRecord) -> None:
        self.identities[record.pk] = record
        self._count(record, 1)

    def remove(self, record: IdentityRecord) -> None:
        del self.identities[record.pk]
        self._count(record, -1)

    def set_status(self, record: IdentityRecord, status: IdentityStatus) -> None:
        """Move a registered record to a new status, keeping counts and the pending and verified sets current."""
        self._count(record, -1)
        record.status = status
        self._count(record, 1)

    def _count(self, record: IdentityRecord, delta: int) -> None:
        key = record.status.value
        self.status_counts[key] = self.status_counts.get(key, 0) + delta
        if delta > 0 and record.status in (IdentityStatus.PENDING_ENTRY, IdentityStatus.PENDING_VERIFICATION):
            self.pending.add(record.pk)
        elif delta > 0 and record.status == IdentityStatus.VERIFIED:
            self.verified.add(record.pk)
        elif delta < 0:
            self.pending.discard(record.pk)
            self.verified.discard(record.pk)

    def count(self, status: IdentityStatus) -> int:
        return self.status_counts.get(status.value, 0)

    def to_dict(self) -> dict:
        return {
            'identities': {pk: r.to_dict() for pk, r in sorted(self.identities.items())},
            'verifiers': {pk: v.to_dict() for pk, v in sorted(self.verifiers.items())},
            'retired': sorted(self.retired),
            'pending_stake_claims': dict(sorted(self.pending_stake_claims.items())),
            'claims_total': self.claims_total,
        }


@dataclass
class TokenState:
    accounts: Dict[PersonId, TokenAccount] = field(default_factory=dict)
    locks: Dict[int, StakeLock] = field(default_factory=dict)
    genesis_supply: int = 0
    minted_verification: int = 0
    minted_rewards: int = 0
    forfeited: int = 0
    slashed: int = 0
    verifications: int = 0
    total_balance: int = 0
    total_locked: int = 0

    def account(self, pk: PersonId) -> TokenAccount:
        account = self.accounts.get(pk)
        if account is None:
            account = TokenAccount(pk=pk)
            self.accounts[pk] = account
        return account

    def balance_of(self, pk: PersonId) -> int:
        account = self.accounts.get(pk)
        return account.balance if account else 0

    @property
    def expected_total(self) -> int:
        return self.genesis_supply + self.minted_verification + self.minted_rewards - self.forfeited

    def to_dict(self) -> dict:
        return {
            'accounts': {pk: a.to_dict() for pk, a in sorted(self.accounts.items())},
            'locks': {str(i): lock.to_dict() for i, lock in sorted(self.locks.items())},
            'genesis_supply': self.genesis_supply,
            'minted_verification': self.minted_verification,
            'minted_rewards': self.minted_rewards,
            'forfeited': self.forfeited,
            'slashed': self.slashed,
            'verifications': self.verifications,
        }


@dataclass
class GovernanceState:
    groups: Dict[int, Community] = field(default_factory=dict)
    layers: Dict[int, List[int]] = field(default_factory=dict)
    term: int = 0
    formed_epoch: Optional[int] = None
    next_group_id: int = 1
    proposals: Dict[int, Proposal] = field(default_factory=dict)
    pending_changes: List[Tuple[int, int]] = field(default_factory=list)  # (proposal_id, effective_epoch)

    def layer_groups(self, layer: int) -> List[Community]:
        return [self.groups[g] for g in self.layers.get(layer, [])]

    def layer_representatives(self, layer: int) -> List[PersonId]:
        return sorted(g.representative for g in self.layer_groups(layer) if g.representative is not None)

    def to_dict(self) -> dict:
        return {
            'groups': {str(i): g.to_dict() for i, g in sorted(self.groups.items())},
            'layers': {str(i): list(ids) for i, ids in sorted(self.layers.items())},
            'term': self.term,
            'formed_epoch': self.formed_epoch,
            'next_group_id': self.next_group_id,
            'proposals': {str(i): p.to_dict() for i, p in sorted(self.proposals.items())},
            'pending_changes': [list(c) for c in self.pending_changes],
        }


@dataclass
class AuditState:
    calls: Dict[int, AuditCall] = field(default_factory=dict)
    open_targets: Dict[PersonId, int] = field(default_factory=dict)
    quota: Dict[PersonId, Tuple[int, int]] = field(default_factory=dict)
    opened: int = 0
    passed: int = 0
    failed: int = 0
    missed: int = 0
    duplicates_confirmed: int = 0
    duplicates_cleared: int = 0

    def quota_used(self, pk: PersonId, window: int) -> int:
        used_window, used = self.quota.get(pk, (window, 0))
        return used if used_window == window else 0

    def to_dict(self) -> dict:
        return {
            'calls': {str(i): c.to_dict() for i, c in sorted(self.calls.items())},
            'quota': {pk: list(q) for pk, q in sorted(self.quota.items())},
            'opened': self.opened,
            'passed': self.passed,
            'failed': self.failed,
            'missed': self.missed,
            'duplicates_confirmed': self.duplicates_confirmed,
            'duplicates_cleared': self.duplicates_cleared,
        }


@dataclass
class ApplicationState:
    """
    Everything derivable from the ledger. Two states built from the same
    events hash identically; caches are excluded from the snapshot.
    """
    height: int = 0
    epoch: int = 0
    seed: Optional[int] = None
    setup: Optional[str] = None
    params: Optional[ProtocolParams] = None
    beacon: Optional[RandomnessBeacon] = None
    registry: RegistryState = field(default_factory=RegistryState)
    trust: TrustLedgerView = field(default_factory=TrustLedgerView)
    tokens: TokenState = field(default_factory=TokenState)
    governance: GovernanceState = field(default_factory=GovernanceState)
    audit: AuditState = field(default_factory=AuditState)
    eligibility_revision: int = 0
    eligible_cache: Dict[str, Tuple[int, int, List[PersonId]]] = field(default_factory=dict, repr=False)

    @property
    def configured(self) -> bool:
        return self.params is not None

    def invalidate_eligibility(self) -> None:
        self.eligibility_revision += 1

    def snapshot(self) -> dict:
        return {
            'height': self.height,
            'epoch': self.epoch,
            'seed': self.seed,
            'setup': self.setup,
            'params': None if self.params is None else self.params.to_dict(),
            'beacon': None if self.beacon is None else self.beacon.to_dict(),
            'registry': self.registry.to_dict(),
            'trust': self.trust.to_dict(),
            'tokens': self.tokens.to_dict(),
            'governance': self.governance.to_dict(),
            'audit': self.audit.to_dict(),
        }

    def state_hash(self) -> str:
        return sha256(canonical_bytes(self.snapshot())).hex()
