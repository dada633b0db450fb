from dataclasses import dataclass

from src.utils.Canonical import seed_bytes, sha256


@dataclass(frozen=True)
class RandomnessBeacon:
    """
    Public hash-chained randomness. Round 0 is SHA-256 of the scenario seed as
    8 big-endian bytes; round r+1 is SHA-256(value_r || (r+1) as 8 big-endian bytes).
    """
    round: int
    value: bytes

    @staticmethod
    def genesis(seed: int) -> 'RandomnessBeacon':
        return RandomnessBeacon(round=0, value=sha256(seed_bytes(seed)))

    def next(self) -> 'RandomnessBeacon':
        r = self.round + 1
        return RandomnessBeacon(round=r, value=sha256(self.value + r.to_bytes(8, "big")))

    def to_dict(self) -> dict:
        return {'round': self.round, 'value': self.value.hex()}
