"""
Module: Engine
Live protocol context: the ledger, the state folded from it, and the off-ledger
pieces live operations need (stored templates, the dedup index, verifier
behaviours). Operations validate, then call emit(); emit appends the event and
applies it through the same handlers replay uses.
"""

import logging
from typing import Any, Dict, Optional

from src.Constants import *
from src.models.ApplicationState import ApplicationState
from src.models.BiometricTemplate import BiometricTemplate, MatchPolicy
from src.models.Event import Event
from src.models.IdentityRecord import IdentityRecord, PersonId
from src.protocol.Adversary import HONEST, VerifierBehaviour
from src.protocol.Biometric import DedupIndex
from src.protocol.Ledger import Ledger
from src.protocol.Replay import apply_event, replay
from src.utils.Errors import RejectedEvent, UnknownIdentity


class ProtocolEngine:
    def __init__(self, policy: Optional[MatchPolicy] = None) -> None:
        self.ledger = Ledger()
        self.state = ApplicationState()
        self.policy = policy
        self.templates: Dict[str, BiometricTemplate] = {}
        self.dedup_index: Optional[DedupIndex] = None
        if policy is not None:
            self.dedup_index = DedupIndex(policy.n_modalities, policy.template_dim)
        self.behaviours: Dict[PersonId, VerifierBehaviour] = {}

    @property
    def params(self):
        return self.state.params

    @property
    def epoch(self) -> int:
        return self.state.epoch

    def emit(self, kind: str, payload: Dict[str, Any], epoch: Optional[int] = None) -> Event:
        """
        Append and apply one event. A handler rejection drops the event again
        and refolds the state from the remaining ledger, so neither holds any
        part of the rejected event.
        """
        event = self.ledger.append(kind, payload, self.state.epoch if epoch is None else epoch)
        try:
            apply_event(self.state, event)
        except RejectedEvent as e:
            logging.error("Live event rejected at height %d: %s", event.height, e.reason)
            self.ledger.truncate(event.height - 1)
            self.state = replay(self.ledger.events)
            raise
        self._maintain_index(event)
        return event

    def record(self, pk: PersonId) -> IdentityRecord:
        record = self.state.registry.identities.get(pk)
        if record is None:
            raise UnknownIdentity(pk)
        return record

    def store_template(self, template: BiometricTemplate) -> str:
        self.templates[template.digest] = template
        return template.digest

    def template_of(self, pk: PersonId) -> BiometricTemplate:
        return self.templates[self.record(pk).template_digest]

    def behaviour_of(self, verifier: PersonId) -> VerifierBehaviour:
        return self.behaviours.get(verifier, HONEST)

    def require_policy(self) -> MatchPolicy:
        if self.policy is None:
            raise RuntimeError("this engine was built without a match policy")
        return self.policy

    ##################################
    # MARK: Private functions
    ##################################

    def _maintain_index(self, event: Event) -> None:
        if self.dedup_index is None:
            return
        kind, payload = event.kind, event.payload
        if kind in (IDENTITY_VERIFIED, GENESIS_IDENTITY_REGISTERED):
            pk = payload['pk']
            template = self.templates.get(self.state.registry.identities[pk].template_digest)
            if template is not None:
                self.dedup_index.add(pk, template)
        elif kind in (IDENTITY_REVOKED, IDENTITY_EXPIRED):
            self.dedup_index.remove(payload['pk'])
        elif kind == IDENTITY_RECOVERED:
            self.dedup_index.remove(payload['old_pk'])
