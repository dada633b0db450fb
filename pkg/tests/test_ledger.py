"""
Hash-chained ledger: chaining, tamper detection, the JSONL format, and
replay of a live run back into the same state.
"""

import dataclasses

import pytest

from src.Constants import *
from src.protocol import Trust
from src.protocol.Ledger import Ledger, read_jsonl, verify_chain, write_jsonl
from src.protocol.Replay import replay
from src.utils.Canonical import ZERO_HASH
from src.utils.Errors import RejectedEvent, SelfDelegation
from tests.support import genesis_roles, verified_newcomer


def _sample_ledger(n: int = 5) -> Ledger:
    ledger = Ledger()
    for i in range(n):
        ledger.append("Example", {"i": i, "note": "same"}, i // 2)
    return ledger


# ===================================================================
# Chaining
# ===================================================================

def test_first_event_links_to_zero_hash():
    ledger = _sample_ledger(1)
    assert ledger[0].height == 1
    assert ledger[0].prev_hash == ZERO_HASH
    assert ledger.head_hash == ledger[0].hash


def test_identical_payloads_hash_differently_at_different_heights():
    ledger = Ledger()
    first = ledger.append("Example", {"x": 1}, 0)
    second = ledger.append("Example", {"x": 1}, 0)
    assert first.hash != second.hash
    assert second.prev_hash == first.hash


def test_intact_chain_verifies():
    assert verify_chain(_sample_ledger().events) is None


def test_tampered_payload_is_located():
    events = list(_sample_ledger().events)
    events[1] = dataclasses.replace(events[1], payload={"i": 99, "note": "same"})
    assert verify_chain(events) == 2


def test_rehashed_tamper_breaks_the_next_link():
    events = list(_sample_ledger().events)
    forged = dataclasses.replace(events[2], payload={"i": 99, "note": "same"})
    events[2] = dataclasses.replace(forged, hash=forged.recompute_hash())
    assert verify_chain(events) == 4


def test_truncated_prefix_still_verifies():
    ledger = _sample_ledger()
    ledger.truncate(3)
    assert ledger.height == 3
    assert verify_chain(ledger.events) is None


# ===================================================================
# JSONL files
# ===================================================================

def test_jsonl_round_trip(tmp_path):
    ledger = _sample_ledger()
    path = tmp_path / LEDGER_FILE
    write_jsonl(ledger.events, str(path))
    events, malformed = read_jsonl(str(path))
    assert malformed is None
    assert [e.hash for e in events] == [e.hash for e in ledger.events]


def test_missing_trailing_newline_marks_last_line(tmp_path):
    ledger = _sample_ledger(3)
    path = tmp_path / LEDGER_FILE
    write_jsonl(ledger.events, str(path))
    path.write_bytes(path.read_bytes().rstrip(b"\n"))
    events, malformed = read_jsonl(str(path))
    assert malformed == 3
    assert len(events) == 2


def test_non_canonical_line_is_malformed(tmp_path):
    ledger = _sample_ledger(2)
    path = tmp_path / LEDGER_FILE
    lines = [ledger[0].to_json_line(), ledger[1].to_json_line().replace(":", ": ", 1)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    _, malformed = read_jsonl(str(path))
    assert malformed == 2


def test_every_single_byte_flip_is_caught(tmp_path):
    ledger = _sample_ledger(3)
    source = tmp_path / "source.jsonl"
    write_jsonl(ledger.events, str(source))
    raw = source.read_bytes()
    line_of = [raw[:i].count(b"\n") + 1 for i in range(len(raw))]
    target = tmp_path / "mutated.jsonl"
    for i in range(len(raw)):
        mutated = bytearray(raw)
        mutated[i] ^= 0x01
        target.write_bytes(bytes(mutated))
        events, malformed = read_jsonl(str(target))
        broken = verify_chain(events)
        detected = [h for h in (malformed, broken) if h is not None]
        # a flipped newline splits or merges lines; either way something at or before it fails
        assert detected, f"flip at byte {i} went unnoticed"
        assert min(detected) <= line_of[i] + 1


# ===================================================================
# Replay
# ===================================================================

def test_replay_reproduces_live_state(sim):
    verified_newcomer(sim, 1)
    replayed = replay(sim.engine.ledger.events)
    assert replayed.state_hash() == sim.state.state_hash()
    assert replayed.height == sim.engine.ledger.height


def test_replay_rejects_ledger_without_genesis():
    ledger = Ledger()
    ledger.append(BEACON_ADVANCED, {"round": 1, "value": "00" * 32}, 0)
    with pytest.raises(RejectedEvent) as info:
        replay(ledger.events)
    assert info.value.height == 1


def test_replay_rejects_invalid_event(sim):
    verifiers, _ = genesis_roles(sim)
    ledger = sim.engine.ledger
    ledger.append(CERTIFICATE_ISSUED, {"user": "ab" * 32, "verifier": verifiers[0]}, 1)
    with pytest.raises(RejectedEvent) as info:
        replay(ledger.events)
    assert info.value.height == ledger.height


def test_replay_rejects_broken_chain(sim):
    events = list(sim.engine.ledger.events)
    events[3] = dataclasses.replace(events[3], epoch=5)
    with pytest.raises(RejectedEvent) as info:
        replay(events)
    assert info.value.height == 4


def test_rejected_live_event_is_dropped(sim):
    verifiers, _ = genesis_roles(sim)
    height = sim.engine.ledger.height
    with pytest.raises(RejectedEvent):
        sim.engine.emit(TRUST_DELEGATED, {"from": verifiers[0], "to": verifiers[0]}, 1)
    assert sim.engine.ledger.height == height
    assert sim.state.height == height
    with pytest.raises(SelfDelegation):
        Trust.delegate(sim.engine, verifiers[0], verifiers[0], 1)
