from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

from src.models.IdentityRecord import PersonId


class Vote(str, Enum):
    APPROVE = "approve"
    REJECT = "reject"
    ABSTAIN = "abstain"


class ProposalStatus(str, Enum):
    OPEN = "Open"
    PASSED = "Passed"
    FAILED = "Failed"
    APPLIED = "Applied"


@dataclass
class Community:
    """
    A layer-one group of verified identities. ballots maps voter to candidate;
    election_support is the vote count the sitting representative was elected with.
    """
    community_id: int
    members: List[PersonId]
    ballots: Dict[PersonId, PersonId] = field(default_factory=dict)
    representative: Optional[PersonId] = None
    election_support: int = 0

    def support_for(self, candidate: PersonId) -> int:
        return sum(1 for c in self.ballots.values() if c == candidate)

    def to_dict(self) -> dict:
        return {
            'community_id': self.community_id,
            'members': list(self.members),
            'ballots': dict(sorted(self.ballots.items())),
            'representative': self.representative,
            'election_support': self.election_support,
        }


@dataclass
class RepresentativeLayer:
    """Layer 1 holds community representatives; layers 2 and 3 are built over the layer below."""
    layer: int
    groups: List[Community] = field(default_factory=list)

    @property
    def representatives(self) -> List[PersonId]:
        return sorted(g.representative for g in self.groups if g.representative is not None)

    def to_dict(self) -> dict:
        return {'layer': self.layer, 'groups': [g.to_dict() for g in self.groups]}


@dataclass
class Proposal:
    proposal_id: int
    proposer: PersonId
    parameter: str
    value: int
    importance: str
    thresholds: Tuple[int, int, int]  # basis points per layer
    opened_epoch: int
    close_epoch: int
    votes: Dict[int, Dict[PersonId, Vote]] = field(default_factory=dict)
    status: ProposalStatus = ProposalStatus.OPEN
    layer_counts: List[List[int]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            'proposal_id': self.proposal_id,
            'proposer': self.proposer,
            'parameter': self.parameter,
            'value': self.value,
            'importance': self.importance,
            'thresholds': list(self.thresholds),
            'opened_epoch': self.opened_epoch,
            'close_epoch': self.close_epoch,
            'votes': {str(layer): {pk: v.value for pk, v in sorted(votes.items())}
                      for layer, votes in sorted(self.votes.items())},
            'status': self.status.value,
            'layer_counts': [list(c) for c in self.layer_counts],
        }
