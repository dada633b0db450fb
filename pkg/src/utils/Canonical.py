"""
Module: Canonical
Canonical serialization and hashing shared by the ledger, the beacon and the
verifier assignment rule. Serialization is JSON with sorted keys and no
insignificant whitespace; byte fields travel as lowercase hex and floats are
refused so digests stay bit-exact.
"""

import hashlib
import json
from typing import Any, Dict, Union

ZERO_HASH: bytes = bytes(32)
HEX_DIGITS = frozenset("0123456789abcdef")


def canonical_json(obj: Any) -> str:
    """
    Serialize obj canonically.

    :param obj: Nested structure of dicts, lists, strings, ints, bools and None.
    :return: The canonical JSON text.
    """
    _reject_floats(obj)
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def canonical_bytes(obj: Any) -> bytes:
    return canonical_json(obj).encode("utf-8")


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def event_digest(height: int, prev_hash: bytes, epoch: int, kind: str, payload: Dict[str, Any]) -> bytes:
    """
    Digest of one ledger event: SHA-256 over the canonical serialization of
    {"epoch", "height", "kind", "payload", "prev_hash"} with prev_hash as hex.
    """
    body = {
        "epoch": epoch,
        "height": height,
        "kind": kind,
        "payload": payload,
        "prev_hash": prev_hash.hex(),
    }
    return sha256(canonical_bytes(body))


def is_hex_digest(value: Any, n_bytes: int = 32) -> bool:
    return isinstance(value, str) and len(value) == 2 * n_bytes and set(value) <= HEX_DIGITS


def from_hex(value: str, n_bytes: int = 32) -> bytes:
    """Parse a lowercase hex digest, refusing upper case or wrong lengths."""
    if not is_hex_digest(value, n_bytes):
        raise ValueError(f"expected {n_bytes} bytes of lowercase hex, got {value!r}")
    return bytes.fromhex(value)


def seed_bytes(seed: int) -> bytes:
    """Scenario seed as 8 big-endian bytes (two's complement folded into 64 bits)."""
    return (seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "big")


def derive_pk(*parts: Union[str, int, bytes]) -> str:
    """
    Deterministic 32-byte identifier from labelled parts, returned as hex.
    Used for simulated persons, accounts and adversary identities.
    """
    h = hashlib.sha256()
    for part in parts:
        if isinstance(part, bytes):
            chunk = part
        elif isinstance(part, int):
            chunk = seed_bytes(part)
        else:
            chunk = part.encode("utf-8")
        h.update(len(chunk).to_bytes(4, "big"))
        h.update(chunk)
    return h.hexdigest()


##################################
# MARK: Private functions
##################################

def _reject_floats(obj: Any) -> None:
    if isinstance(obj, float):
        raise TypeError(f"floats are not allowed in canonical payloads: {obj!r}")
    if isinstance(obj, dict):
        for key, value in obj.items():
            if not isinstance(key, str):
                raise TypeError(f"payload keys must be strings: {key!r}")
            _reject_floats(value)
    elif isinstance(obj, (list, tuple)):
        for value in obj:
            _reject_floats(value)
