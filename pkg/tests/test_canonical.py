"""
Canonical serialization, digests and the randomness beacon, checked against
plain hashlib/json recomputations.
"""

import hashlib
import json

import pytest

from src.models.RandomnessBeacon import RandomnessBeacon
from src.utils.Canonical import (ZERO_HASH, canonical_json, derive_pk, event_digest, from_hex, is_hex_digest,
                                 seed_bytes)


# ===================================================================
# Canonical JSON
# ===================================================================

def test_keys_are_sorted_without_whitespace():
    assert canonical_json({"b": 1, "a": [1, 2]}) == '{"a":[1,2],"b":1}'


def test_nested_keys_are_sorted():
    assert canonical_json({"z": {"y": None, "x": True}}) == '{"z":{"x":true,"y":null}}'


def test_non_ascii_is_kept_verbatim():
    assert canonical_json({"city": "Zürich"}) == '{"city":"Zürich"}'


def test_floats_are_refused_at_any_depth():
    with pytest.raises(TypeError):
        canonical_json({"a": 1.5})
    with pytest.raises(TypeError):
        canonical_json({"a": [1, {"b": 0.0}]})


def test_non_string_keys_are_refused():
    with pytest.raises(TypeError):
        canonical_json({1: "a"})


# ===================================================================
# Digests and keys
# ===================================================================

def test_event_digest_matches_independent_recomputation():
    prev = bytes(range(32))
    payload = {"pk": "ab" * 32, "n": 3}
    body = json.dumps({"epoch": 4, "height": 7, "kind": "Example", "payload": payload, "prev_hash": prev.hex()},
                      sort_keys=True, separators=(",", ":"))
    assert event_digest(7, prev, 4, "Example", payload) == hashlib.sha256(body.encode()).digest()


def test_seed_bytes_are_eight_big_endian_bytes():
    assert seed_bytes(1) == b"\x00" * 7 + b"\x01"
    assert seed_bytes(-1) == b"\xff" * 8
    assert seed_bytes(2 ** 64 + 5) == seed_bytes(5)


def test_derive_pk_is_deterministic_and_labelled():
    a = derive_pk("person", 42, "honest", 1)
    assert a == derive_pk("person", 42, "honest", 1)
    assert a != derive_pk("person", 42, "honest", 2)
    assert is_hex_digest(a)
    # length prefixes keep part boundaries distinct
    assert derive_pk("ab", "c") != derive_pk("a", "bc")


def test_from_hex_accepts_only_lowercase_digests():
    assert from_hex("00" * 32) == ZERO_HASH
    with pytest.raises(ValueError):
        from_hex("AB" * 32)
    with pytest.raises(ValueError):
        from_hex("ab" * 31)


# ===================================================================
# Beacon
# ===================================================================

def test_beacon_genesis_hashes_the_seed():
    beacon = RandomnessBeacon.genesis(42)
    assert beacon.round == 0
    assert beacon.value == hashlib.sha256((42).to_bytes(8, "big")).digest()


def test_beacon_rounds_chain():
    beacon = RandomnessBeacon.genesis(7)
    following = beacon.next()
    assert following.round == 1
    assert following.value == hashlib.sha256(beacon.value + (1).to_bytes(8, "big")).digest()
    assert following.next().round == 2


def test_beacon_depends_on_seed():
    assert RandomnessBeacon.genesis(1).value != RandomnessBeacon.genesis(2).value
