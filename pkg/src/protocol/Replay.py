"""
Module: Replay
Event handlers dispatch and the pure fold from a ledger to application state.
Replay needs no randomness and no templates: every random outcome travels in
the event payloads, and recomputable ones (verifier assignment, beacon) are
recomputed and checked.
"""

from typing import Callable, Dict, Sequence

from src.Constants import *
from src.models.ApplicationState import ApplicationState
from src.models.Event import Event
from src.protocol import Audit, Governance, Registry, Tokens, Trust
from src.protocol.Ledger import verify_chain
from src.utils.Errors import RejectedEvent

Handler = Callable[[ApplicationState, Event], None]


def _handlers() -> Dict[str, Handler]:
    table: Dict[str, Handler] = {}
    for module in (Registry, Trust, Tokens, Governance, Audit):
        overlap = table.keys() & module.HANDLERS.keys()
        if overlap:
            raise RuntimeError(f"event kinds handled twice: {sorted(overlap)}")
        table.update(module.HANDLERS)
    return table


_HANDLERS: Dict[str, Handler] = {}


def apply_event(state: ApplicationState, event: Event) -> None:
    """
    Fold one event into state.

    :raises RejectedEvent: when the event does not follow from the state.
    """
    if not _HANDLERS:
        _HANDLERS.update(_handlers())
    if event.height != state.height + 1:
        raise RejectedEvent(event.height, f"expected height {state.height + 1}")
    if event.epoch < state.epoch:
        raise RejectedEvent(event.height, f"epoch {event.epoch} precedes {state.epoch}")
    if not state.configured and event.kind != GENESIS_CONFIGURED:
        raise RejectedEvent(event.height, "ledger must start with GenesisConfigured")
    handler = _HANDLERS.get(event.kind)
    if handler is None:
        raise RejectedEvent(event.height, f"unknown event kind {event.kind}")
    try:
        handler(state, event)
    except RejectedEvent:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise RejectedEvent(event.height, f"malformed {event.kind} payload: {e!r}")
    state.height = event.height
    state.epoch = event.epoch


def replay(events: Sequence[Event]) -> ApplicationState:
    """
    Rebuild application state from events alone.

    :raises RejectedEvent: on a broken chain or an event that does not follow.
    """
    first_invalid = verify_chain(events)
    if first_invalid is not None:
        raise RejectedEvent(first_invalid, "hash chain broken")
    state = ApplicationState()
    for event in events:
        apply_event(state, event)
    return state
