from dataclasses import dataclass
from typing import Dict, List

from src.Constants import *
from src.models.IdentityRecord import PersonId


@dataclass(frozen=True)
class MonetaryParams:
    """Integer token parameters; genesis supply is a * x."""
    a: int = DEFAULT_SUPPLY_MULTIPLIER
    x: int = DEFAULT_MINT_PER_VERIFICATION
    base_stake: int = DEFAULT_BASE_STAKE
    verifier_stake: int = DEFAULT_VERIFIER_STAKE
    ajudge_reward: int = DEFAULT_AJUDGE_REWARD

    @property
    def genesis_supply(self) -> int:
        return self.a * self.x

    def to_dict(self) -> dict:
        return {
            SUPPLY_MULTIPLIER: self.a,
            MINT_PER_VERIFICATION: self.x,
            BASE_STAKE: self.base_stake,
            VERIFIER_STAKE: self.verifier_stake,
            AJUDGE_REWARD: self.ajudge_reward,
        }

    @staticmethod
    def from_dict(data: dict) -> 'MonetaryParams':
        return MonetaryParams(
            a=int(data.get(SUPPLY_MULTIPLIER, DEFAULT_SUPPLY_MULTIPLIER)),
            x=int(data.get(MINT_PER_VERIFICATION, DEFAULT_MINT_PER_VERIFICATION)),
            base_stake=int(data.get(BASE_STAKE, DEFAULT_BASE_STAKE)),
            verifier_stake=int(data.get(VERIFIER_STAKE, DEFAULT_VERIFIER_STAKE)),
            ajudge_reward=int(data.get(AJUDGE_REWARD, DEFAULT_AJUDGE_REWARD)),
        )


@dataclass
class TokenAccount:
    pk: PersonId
    balance: int = 0
    locked: int = 0

    def to_dict(self) -> dict:
        return {'pk': self.pk, 'balance': self.balance, 'locked': self.locked}


LOCK_ACTIVE = "active"
LOCK_RETURNED = "returned"
LOCK_FORFEITED = "forfeited"
LOCK_SLASHED = "slashed"


@dataclass
class StakeLock:
    """A stake lock; lock_id is the height of the StakeLocked event that created it."""
    lock_id: int
    owner: PersonId
    amount: int
    reason: str
    status: str = LOCK_ACTIVE

    @property
    def active(self) -> bool:
        return self.status == LOCK_ACTIVE

    def to_dict(self) -> dict:
        return {
            'lock_id': self.lock_id,
            'owner': self.owner,
            'amount': self.amount,
            'reason': self.reason,
            'status': self.status,
        }


@dataclass
class SupplyStats:
    genesis_supply: int
    minted_verification: int
    minted_rewards: int
    forfeited: int
    locked: int
    verifications: int
    circulating: int
    gini_balance: float
    ico_share: float

    @property
    def minted(self) -> int:
        return self.minted_verification + self.minted_rewards

    def to_dict(self) -> dict:
        return {
            'genesis_supply': self.genesis_supply,
            'minted': self.minted,
            'minted_verification': self.minted_verification,
            'minted_rewards': self.minted_rewards,
            'forfeited': self.forfeited,
            'locked': self.locked,
            'verifications': self.verifications,
            'circulating': self.circulating,
            'gini_balance': self.gini_balance,
            'ico_share': self.ico_share,
        }

    @staticmethod
    def fieldnames() -> List[str]:
        return ['genesis_supply', 'minted', 'minted_verification', 'minted_rewards', 'forfeited',
                'locked', 'verifications', 'circulating', 'gini_balance', 'ico_share']


def mint_split(x: int, user: PersonId, verifiers: List[PersonId]) -> Dict[PersonId, int]:
    """
    Split the per-verification mint: each certifying verifier receives x // (v + 1)
    and the user receives the remainder, so the credits always sum to x.
    """
    share = x // (len(verifiers) + 1)
    credits: Dict[PersonId, int] = {user: x - share * len(verifiers)}
    for v in verifiers:
        credits[v] = credits.get(v, 0) + share
    return credits
