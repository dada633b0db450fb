from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Optional

from src.Constants import *
from src.models.IdentityRecord import PersonId
from src.utils.Errors import ConfigInvalid


class Strategy(str, Enum):
    FAKE_IDENTITY_FACTORY = "FakeIdentityFactory"
    DUPLICATE_ENROLLMENT = "DuplicateEnrollment"
    STAKE_GRINDING = "StakeGrinding"
    AUDIT_EVASION = "AuditEvasion"


@dataclass(frozen=True)
class AdversaryPlan:
    """
    An attack campaign. Corrupted verifiers are either listed explicitly or
    drawn (corrupt_count of them, from corrupt_city) at genesis.
    """
    strategy: Strategy
    corrupted_verifiers: List[PersonId] = field(default_factory=list)
    corrupt_count: int = 0
    corrupt_city: Optional[str] = None
    corrupt_selection: str = SELECTION_RANDOM
    bribe_cost_per_verifier: float = DEFAULT_BRIBE_COST
    attempts: int = 0
    attempts_per_epoch: int = DEFAULT_ATTEMPTS_PER_EPOCH
    budget: float = float('inf')
    gate: str = GATE_SPONSOR
    grind: bool = True
    audit_response: str = RESPONSE_APPEAR
    audit_probability: float = DEFAULT_AUDIT_PROBABILITY

    @property
    def collusion_size(self) -> int:
        return len(self.corrupted_verifiers) or self.corrupt_count

    def with_count(self, k: int) -> 'AdversaryPlan':
        return replace(self, corrupt_count=k, corrupted_verifiers=[])

    def with_attempts(self, attempts: int) -> 'AdversaryPlan':
        return replace(self, attempts=attempts)

    def validate(self) -> None:
        if self.corrupt_count < 0:
            raise ConfigInvalid(CORRUPT_COUNT, "must be non-negative")
        if self.attempts < 0:
            raise ConfigInvalid(ATTEMPTS, "must be non-negative")
        if self.attempts_per_epoch < 1:
            raise ConfigInvalid(ATTEMPTS_PER_EPOCH, "must be at least 1")
        if self.gate not in (GATE_SPONSOR, GATE_STAKE, GATE_INVITATION):
            raise ConfigInvalid(ADVERSARY_GATE, f"unknown gate {self.gate}")
        if self.corrupt_selection not in (SELECTION_RANDOM, SELECTION_LOWEST_WEIGHT):
            raise ConfigInvalid(CORRUPT_SELECTION, f"unknown selection {self.corrupt_selection}")
        if self.audit_response not in (RESPONSE_APPEAR, RESPONSE_ABSCOND):
            raise ConfigInvalid(AUDIT_RESPONSE, f"unknown response {self.audit_response}")
        if not 0.0 <= self.audit_probability <= 1.0:
            raise ConfigInvalid(AUDIT_PROBABILITY, "must lie in [0, 1]")

    def to_dict(self) -> dict:
        return {
            STRATEGY: self.strategy.value,
            CORRUPTED_VERIFIERS: list(self.corrupted_verifiers),
            CORRUPT_COUNT: self.corrupt_count,
            CORRUPT_CITY: self.corrupt_city,
            CORRUPT_SELECTION: self.corrupt_selection,
            BRIBE_COST: self.bribe_cost_per_verifier,
            ATTEMPTS: self.attempts,
            ATTEMPTS_PER_EPOCH: self.attempts_per_epoch,
            BUDGET: None if self.budget == float('inf') else self.budget,
            ADVERSARY_GATE: self.gate,
            GRIND: self.grind,
            AUDIT_RESPONSE: self.audit_response,
            AUDIT_PROBABILITY: self.audit_probability,
        }

    @staticmethod
    def from_dict(data: dict) -> 'AdversaryPlan':
        try:
            strategy = Strategy(data.get(STRATEGY, Strategy.FAKE_IDENTITY_FACTORY.value))
        except ValueError:
            raise ConfigInvalid(STRATEGY, f"unknown strategy {data.get(STRATEGY)}")
        budget = data.get(BUDGET)
        plan = AdversaryPlan(
            strategy=strategy,
            corrupted_verifiers=list(data.get(CORRUPTED_VERIFIERS) or []),
            corrupt_count=int(data.get(CORRUPT_COUNT, 0)),
            corrupt_city=data.get(CORRUPT_CITY),
            corrupt_selection=data.get(CORRUPT_SELECTION, SELECTION_RANDOM),
            bribe_cost_per_verifier=float(data.get(BRIBE_COST, DEFAULT_BRIBE_COST)),
            attempts=int(data.get(ATTEMPTS, 0)),
            attempts_per_epoch=int(data.get(ATTEMPTS_PER_EPOCH, DEFAULT_ATTEMPTS_PER_EPOCH)),
            budget=float('inf') if budget is None else float(budget),
            gate=data.get(ADVERSARY_GATE, GATE_SPONSOR),
            grind=bool(data.get(GRIND, True)),
            audit_response=data.get(AUDIT_RESPONSE, RESPONSE_APPEAR),
            audit_probability=float(data.get(AUDIT_PROBABILITY, DEFAULT_AUDIT_PROBABILITY)),
        )
        plan.validate()
        return plan


@dataclass
class DetectionSummary:
    count: int
    mean_epochs: Optional[float]
    median_epochs: Optional[float]
    max_epochs: Optional[int]

    def to_dict(self) -> dict:
        return {
            'count': self.count,
            'mean_epochs': self.mean_epochs,
            'median_epochs': self.median_epochs,
            'max_epochs': self.max_epochs,
        }


@dataclass
class AttackReport:
    strategy: str
    collusion_size: int
    attempts: int
    entered: int
    blocked: int
    flagged: int
    successes: int
    detected: int
    bribes: float
    forfeited: int
    slashed: int
    time_to_detection: DetectionSummary
    analytic_success_prob: Optional[float] = None
    surviving: int = 0

    @property
    def success_prob(self) -> float:
        return self.successes / self.attempts if self.attempts else 0.0

    @property
    def success_std_error(self) -> float:
        if not self.attempts:
            return 0.0
        p = self.success_prob
        return (p * (1.0 - p) / self.attempts) ** 0.5

    @property
    def tokens_spent(self) -> float:
        return self.bribes + self.forfeited + self.slashed

    def to_dict(self) -> dict:
        return {
            'strategy': self.strategy,
            'collusion_size': self.collusion_size,
            'attempts': self.attempts,
            'entered': self.entered,
            'blocked': self.blocked,
            'flagged': self.flagged,
            'successes': self.successes,
            'detected': self.detected,
            'surviving': self.surviving,
            'success_prob': self.success_prob,
            'success_std_error': self.success_std_error,
            'analytic_success_prob': self.analytic_success_prob,
            'tokens_spent': self.tokens_spent,
            'bribes': self.bribes,
            'forfeited': self.forfeited,
            'slashed': self.slashed,
            'time_to_detection': self.time_to_detection.to_dict(),
        }


@dataclass(frozen=True)
class CollusionPoint:
    k: int
    success_prob: float
    expected_cost: float

    def to_dict(self) -> dict:
        return {'k': self.k, 'success_prob': self.success_prob, 'expected_cost': self.expected_cost}

    @staticmethod
    def fieldnames() -> List[str]:
        return ['k', 'success_prob', 'expected_cost']
