from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

from src.models.IdentityRecord import PersonId


class AJudgeVerdict(str, Enum):
    PASSED_GENUINE = "PassedGenuine"
    FAILED_FAKE = "FailedFake"
    MISSED_DEADLINE = "MissedDeadline"


@dataclass
class AuditCall:
    """An A-judge call; call_id is the height of the AJudgeCalled event."""
    call_id: int
    caller: PersonId
    target: PersonId
    called_epoch: int
    deadline_epoch: int
    system: bool = False
    votes: Dict[PersonId, bool] = field(default_factory=dict)
    outcome: Optional[AJudgeVerdict] = None

    @property
    def open(self) -> bool:
        return self.outcome is None

    def to_dict(self) -> dict:
        return {
            'call_id': self.call_id,
            'caller': self.caller,
            'target': self.target,
            'called_epoch': self.called_epoch,
            'deadline_epoch': self.deadline_epoch,
            'system': self.system,
            'votes': dict(sorted(self.votes.items())),
            'outcome': None if self.outcome is None else self.outcome.value,
        }


@dataclass
class Settlement:
    call_id: int
    outcome: AJudgeVerdict
    revoked: Optional[PersonId]
    transfers: List[Tuple[PersonId, PersonId, int]] = field(default_factory=list)
    suspended: List[PersonId] = field(default_factory=list)
    reward: int = 0

    @property
    def tokens_slashed(self) -> int:
        return sum(amount for _, _, amount in self.transfers)

    def to_dict(self) -> dict:
        return {
            'call_id': self.call_id,
            'outcome': self.outcome.value,
            'revoked': self.revoked,
            'transfers': [list(t) for t in self.transfers],
            'suspended': list(self.suspended),
            'reward': self.reward,
        }
