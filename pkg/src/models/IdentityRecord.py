from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional

from src.Constants import *

PersonId = str  # 32-byte public key as 64 lowercase hex characters


class IdentityStatus(str, Enum):
    PENDING_ENTRY = "PendingEntry"
    PENDING_VERIFICATION = "PendingVerification"
    VERIFIED = "Verified"
    REVOKED = "Revoked"
    EXPIRED = "Expired"


@dataclass(frozen=True)
class EntryGate:
    """How a claimant got past the sybil gate. Exactly one of the optional fields is set, matching kind."""
    kind: str
    inviter: Optional[PersonId] = None
    amount: Optional[int] = None
    sponsor: Optional[PersonId] = None

    def to_dict(self) -> dict:
        data: Dict[str, object] = {'kind': self.kind}
        if self.inviter is not None:
            data['inviter'] = self.inviter
        if self.amount is not None:
            data['amount'] = self.amount
        if self.sponsor is not None:
            data['sponsor'] = self.sponsor
        return data

    @staticmethod
    def from_dict(data: dict) -> 'EntryGate':
        return EntryGate(
            kind=data['kind'],
            inviter=data.get('inviter'),
            amount=data.get('amount'),
            sponsor=data.get('sponsor'),
        )


def Invitation(inviter: PersonId) -> EntryGate:
    return EntryGate(kind=GATE_INVITATION, inviter=inviter)


def Stake(amount: Optional[int] = None) -> EntryGate:
    return EntryGate(kind=GATE_STAKE, amount=amount)


def VerifierSponsor(sponsor: PersonId) -> EntryGate:
    return EntryGate(kind=GATE_SPONSOR, sponsor=sponsor)


GENESIS_GATE = EntryGate(kind=GATE_GENESIS)
RECOVERY_GATE = EntryGate(kind=GATE_RECOVERY)


@dataclass
class Certificate:
    verifier: PersonId
    epoch: int

    def to_dict(self) -> dict:
        return {'verifier': self.verifier, 'epoch': self.epoch}


@dataclass
class IdentityRecord:
    """
    Registry entry for one claimed identity.

    certs_required is pinned when the claim is made so a governance change
    never affects identities already in flight. Genesis identities are
    Verified without certificates.
    """
    pk: PersonId
    template_digest: str
    city: str
    status: IdentityStatus
    entry_gate: EntryGate
    certs_required: int
    claimed_epoch: int
    certificates: List[Certificate] = field(default_factory=list)
    assignment_seq: int = 0
    current_assignee: Optional[PersonId] = None
    reassignments_used: int = 0
    rejection_pending: bool = False
    rejections: List[Certificate] = field(default_factory=list)
    trust_circle: List[PersonId] = field(default_factory=list)
    verified_epoch: Optional[int] = None
    expiry_epoch: Optional[int] = None
    invitations_remaining: int = 0
    stake_lock_id: Optional[int] = None
    renewal_count: int = 0
    dedup_flags: List[str] = field(default_factory=list)
    revoked_reason: Optional[str] = None
    genesis: bool = False

    @property
    def certifiers(self) -> List[PersonId]:
        return [c.verifier for c in self.certificates]

    def to_dict(self) -> dict:
        return {
            'pk': self.pk,
            'template_digest': self.template_digest,
            'city': self.city,
            'status': self.status.value,
            'entry_gate': self.entry_gate.to_dict(),
            'certs_required': self.certs_required,
            'claimed_epoch': self.claimed_epoch,
            'certificates': [c.to_dict() for c in self.certificates],
            'assignment_seq': self.assignment_seq,
            'current_assignee': self.current_assignee,
            'reassignments_used': self.reassignments_used,
            'rejection_pending': self.rejection_pending,
            'rejections': [c.to_dict() for c in self.rejections],
            'trust_circle': list(self.trust_circle),
            'verified_epoch': self.verified_epoch,
            'expiry_epoch': self.expiry_epoch,
            'invitations_remaining': self.invitations_remaining,
            'stake_lock_id': self.stake_lock_id,
            'renewal_count': self.renewal_count,
            'dedup_flags': list(self.dedup_flags),
            'revoked_reason': self.revoked_reason,
            'genesis': self.genesis,
        }


@dataclass
class VerifierRecord:
    """Verifier-specific state; eligibility itself is derived by the trust module."""
    pk: PersonId
    city: str
    registered_epoch: int
    stake_lock_id: Optional[int] = None
    sponsor_window: int = -1
    sponsor_used: int = 0

    def sponsor_quota_remaining(self, quota: int, window: int) -> int:
        used = self.sponsor_used if self.sponsor_window == window else 0
        return max(0, quota - used)

    def to_dict(self) -> dict:
        return {
            'pk': self.pk,
            'city': self.city,
            'registered_epoch': self.registered_epoch,
            'stake_lock_id': self.stake_lock_id,
            'sponsor_window': self.sponsor_window,
            'sponsor_used': self.sponsor_used,
        }
