"""
Module: Ledger
Append-only, hash-chained event log. Every state change in the simulator is an
event appended here; the application state is a pure fold over the events
(see Replay).
"""

import json
import logging
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

from src.models.Event import Event
from src.utils.Canonical import ZERO_HASH, event_digest


class Ledger:
    def __init__(self) -> None:
        self._events: List[Event] = []

    @property
    def height(self) -> int:
        return len(self._events)

    @property
    def head_hash(self) -> bytes:
        return self._events[-1].hash if self._events else ZERO_HASH

    @property
    def events(self) -> Sequence[Event]:
        return tuple(self._events)

    def __len__(self) -> int:
        return len(self._events)

    def __iter__(self) -> Iterator[Event]:
        return iter(self._events)

    def __getitem__(self, index: int) -> Event:
        return self._events[index]

    def append(self, kind: str, payload: Dict[str, Any], epoch: int) -> Event:
        """
        Append one event. Appends are totally ordered; the digest covers height,
        prev_hash, epoch, kind and payload.

        :return: The appended event.
        """
        height = self.height + 1
        prev_hash = self.head_hash
        event = Event(
            height=height,
            epoch=epoch,
            kind=kind,
            payload=payload,
            prev_hash=prev_hash,
            hash=event_digest(height, prev_hash, epoch, kind, payload),
        )
        self._events.append(event)
        return event

    def truncate(self, height: int) -> None:
        """Drop every event above height (used to discard a rejected suffix)."""
        del self._events[height:]


def verify_chain(events: Sequence[Event]) -> Optional[int]:
    """
    Check heights, links and digests.

    :return: None when the chain is intact, else the first invalid height.
    """
    prev_hash = ZERO_HASH
    for position, event in enumerate(events, start=1):
        if event.height != position or event.prev_hash != prev_hash:
            return position
        if event.recompute_hash() != event.hash:
            return position
        prev_hash = event.hash
    return None


def write_jsonl(events: Sequence[Event], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as file:
        for event in events:
            file.write(event.to_json_line())
            file.write("\n")


def read_jsonl(path: str) -> Tuple[List[Event], Optional[int]]:
    """
    Read a ledger file, stopping at the first line that is not the canonical
    serialization of a well-formed event.

    :return: The events read and the height of the first malformed line, if any.
    """
    with open(path, "rb") as file:
        raw = file.read()
    events: List[Event] = []
    if not raw:
        return events, None
    lines = raw.split(b"\n")
    if lines[-1] != b"":
        # no trailing newline: the final line is malformed
        lines[-1] = lines[-1] + b"\x00"
    else:
        lines.pop()
    for height, line in enumerate(lines, start=1):
        try:
            text = line.decode("utf-8")
            event = Event.from_dict(json.loads(text))
            if event.to_json_line() != text:
                raise ValueError("line is not in canonical form")
        except (UnicodeDecodeError, ValueError, TypeError, KeyError, AttributeError) as e:
            logging.error("Malformed ledger line %d in %s: %s", height, path, e)
            return events, height
        events.append(event)
    return events, None
