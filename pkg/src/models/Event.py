from dataclasses import dataclass
from typing import Any, Dict, List

from src.utils.Canonical import canonical_json, event_digest, from_hex


@dataclass(frozen=True)
class Event:
    """
    One entry of the append-only ledger.

    Fields:
      - height: position in the chain, starting at 1
      - epoch: simulation epoch in which the event was appended
      - kind: event kind name (see Constants)
      - payload: canonical payload (no floats)
      - prev_hash: hash of the previous event (32 zero bytes for height 1)
      - hash: SHA-256 over the canonical serialization of the other fields
    """
    height: int
    epoch: int
    kind: str
    payload: Dict[str, Any]
    prev_hash: bytes
    hash: bytes

    def recompute_hash(self) -> bytes:
        return event_digest(self.height, self.prev_hash, self.epoch, self.kind, self.payload)

    def to_dict(self) -> dict:
        return {
            'height': self.height,
            'epoch': self.epoch,
            'kind': self.kind,
            'payload': self.payload,
            'prev_hash': self.prev_hash.hex(),
            'hash': self.hash.hex(),
        }

    def to_json_line(self) -> str:
        return canonical_json(self.to_dict())

    @staticmethod
    def fieldnames() -> List[str]:
        return ['height', 'epoch', 'kind', 'payload', 'prev_hash', 'hash']

    @staticmethod
    def from_dict(data: Dict[str, Any]) -> 'Event':
        if sorted(data.keys()) != sorted(Event.fieldnames()):
            raise ValueError(f"unexpected event fields: {sorted(data.keys())}")
        height, epoch = data['height'], data['epoch']
        if not isinstance(height, int) or isinstance(height, bool):
            raise ValueError("height must be an integer")
        if not isinstance(epoch, int) or isinstance(epoch, bool):
            raise ValueError("epoch must be an integer")
        if not isinstance(data['kind'], str) or not isinstance(data['payload'], dict):
            raise ValueError("kind must be a string and payload an object")
        return Event(
            height=height,
            epoch=epoch,
            kind=data['kind'],
            payload=data['payload'],
            prev_hash=from_hex(data['prev_hash']),
            hash=from_hex(data['hash']),
        )
