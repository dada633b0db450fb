from dataclasses import dataclass, field
from typing import Dict

from src.models.IdentityRecord import PersonId


@dataclass(frozen=True)
class TrustDelegation:
    from_pk: PersonId
    to_pk: PersonId
    epoch: int

    def to_dict(self) -> dict:
        return {'from': self.from_pk, 'to': self.to_pk, 'epoch': self.epoch}


@dataclass
class TrustLedgerView:
    """
    Current delegation graph. Each verified identity has at most one active
    delegation; weight[pk] counts the active delegations pointing at pk.
    """
    delegations: Dict[PersonId, TrustDelegation] = field(default_factory=dict)
    weight: Dict[PersonId, int] = field(default_factory=dict)
    suspended_until: Dict[PersonId, int] = field(default_factory=dict)

    def weight_of(self, pk: PersonId) -> int:
        return self.weight.get(pk, 0)

    def is_suspended(self, pk: PersonId, epoch: int) -> bool:
        return epoch < self.suspended_until.get(pk, 0)

    def add(self, delegation: TrustDelegation) -> None:
        self.withdraw(delegation.from_pk)
        self.delegations[delegation.from_pk] = delegation
        self.weight[delegation.to_pk] = self.weight.get(delegation.to_pk, 0) + 1

    def withdraw(self, from_pk: PersonId) -> bool:
        previous = self.delegations.pop(from_pk, None)
        if previous is None:
            return False
        remaining = self.weight[previous.to_pk] - 1
        if remaining:
            self.weight[previous.to_pk] = remaining
        else:
            del self.weight[previous.to_pk]
        return True

    def drop_delegations_to(self, to_pk: PersonId) -> int:
        delegators = sorted(pk for pk, d in self.delegations.items() if d.to_pk == to_pk)
        for pk in delegators:
            self.withdraw(pk)
        return len(delegators)

    def to_dict(self) -> dict:
        return {
            'delegations': {pk: d.to_dict() for pk, d in sorted(self.delegations.items())},
            'weight': dict(sorted(self.weight.items())),
            'suspended_until': dict(sorted(self.suspended_until.items())),
        }
