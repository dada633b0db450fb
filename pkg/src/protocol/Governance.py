"""
Module: Governance
Three-layer representative democracy. Verified identities are partitioned by
city into communities; each community elects a representative by plurality
of its members' ballots. Representatives are grouped again for layer 2, and
layer-2 representatives for layer 3. Parameter proposals need the configured
share of approvals at every layer (abstentions and non-voters count against).

Partition rule, shared by every layer: a city (or layer) with n >= min members
is split into ceil(n / max) groups of near-equal size, larger groups first.
Cities below the minimum are pooled; a pool below the minimum joins the last
group formed.
"""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING, Dict, List, Optional, Sequence, Tuple

from src.Constants import *
from src.models.ApplicationState import ApplicationState
from src.models.Community import Community, Proposal, ProposalStatus, Vote
from src.models.Event import Event
from src.models.IdentityRecord import IdentityStatus, PersonId
from src.utils.Errors import (GovernanceError, LayersEmpty, NotPassed, NotWhitelisted, NoVotesCast, RejectedEvent,
                              TooFewVerified)
from src.utils.MathModels import even_split_sizes

if TYPE_CHECKING:
    from src.protocol.Engine import ProtocolEngine

LAYERS = (1, 2, 3)
TallyCounts = Tuple[int, int, int]  # approvals, rejections, abstentions


def partition(blocks: Sequence[Sequence[PersonId]], bounds: Tuple[int, int],
              allow_undersized: bool = False) -> List[List[PersonId]]:
    """
    Deterministic partition of ordered blocks (cities) into groups within bounds.
    Blocks below the minimum are pooled; a pool still below it joins the last
    group, and a block no group count can fit folds its remainder into its
    last group. Those are the only groups allowed above the maximum.

    :param allow_undersized: form one group from everything when no group reaches the minimum.
    :raises TooFewVerified: when nothing reaches the minimum and allow_undersized is off.
    """
    low, high = bounds
    groups: List[List[PersonId]] = []
    pool: List[PersonId] = []
    for block in blocks:
        if len(block) >= low:
            groups.extend(_split(list(block), bounds))
        else:
            pool.extend(block)
    if len(pool) >= low:
        groups.extend(_split(pool, bounds))
    elif pool and groups:
        groups[-1].extend(pool)
    elif pool:
        if not allow_undersized:
            raise TooFewVerified(f"{len(pool)} members, at least {low} required")
        groups.append(pool)
    if not groups:
        raise TooFewVerified(f"no members, at least {low} required")
    return groups


def community_partition(state: ApplicationState) -> List[List[PersonId]]:
    by_city: Dict[str, List[PersonId]] = {}
    for pk in state.registry.verified:
        by_city.setdefault(state.registry.identities[pk].city, []).append(pk)
    blocks = [sorted(by_city[city]) for city in sorted(by_city)]
    return partition(blocks, state.params.community_size)


def layer_partition(state: ApplicationState, layer: int) -> List[List[PersonId]]:
    """Groups for layer 2 or 3, built over the representatives of the layer below ordered by (city, pk)."""
    below = state.governance.layer_representatives(layer - 1)
    if not below:
        raise LayersEmpty(f"layer {layer - 1} has no representatives")
    cities = state.registry.identities
    ordered = sorted(below, key=lambda pk: (cities[pk].city, pk))
    bounds = state.params.layer2_size if layer == 2 else state.params.layer3_size
    return partition([ordered], bounds, allow_undersized=True)


def form_communities(engine: ProtocolEngine, epoch: int) -> List[Community]:
    """
    Seal a new term: partition every verified identity into communities.
    Previous groups and layers are discarded.

    :raises TooFewVerified: fewer verified identities than the minimum community size.
    """
    groups = community_partition(engine.state)
    engine.emit(COMMUNITIES_FORMED, {'groups': groups}, epoch)
    return engine.state.governance.layer_groups(1)


def form_layer(engine: ProtocolEngine, layer: int, epoch: int) -> List[Community]:
    if layer not in (2, 3):
        raise GovernanceError(f"layer {layer} is not formed from representatives")
    groups = layer_partition(engine.state, layer)
    engine.emit(LAYER_FORMED, {'layer': layer, 'groups': groups}, epoch)
    return engine.state.governance.layer_groups(layer)


def cast_ballots(engine: ProtocolEngine, group_id: int, ballots: Dict[PersonId, PersonId], epoch: int) -> None:
    """Record members' votes for a candidate within their group; replaces earlier ballots of the same voters."""
    if not ballots:
        return
    engine.emit(BALLOTS_CAST, {
        'group': group_id,
        'ballots': [[voter, candidate] for voter, candidate in sorted(ballots.items())],
    }, epoch)


def change_ballot(engine: ProtocolEngine, group_id: int, voter: PersonId, candidate: PersonId, epoch: int) -> None:
    engine.emit(BALLOT_CHANGED, {'group': group_id, 'voter': voter, 'candidate': candidate}, epoch)


def plurality_winner(community: Community) -> Tuple[PersonId, int]:
    """
    :return: (winner, support); ties go to the lowest public key.
    :raises NoVotesCast: nobody in the group voted.
    """
    tally: Dict[PersonId, int] = {}
    for candidate in community.ballots.values():
        tally[candidate] = tally.get(candidate, 0) + 1
    if not tally:
        raise NoVotesCast(f"group {community.community_id} cast no ballots")
    winner = min(tally, key=lambda pk: (-tally[pk], pk))
    return winner, tally[winner]


def elect_representative(engine: ProtocolEngine, group_id: int, epoch: int) -> PersonId:
    community = _group(engine.state, group_id)
    winner, support = plurality_winner(community)
    engine.emit(REPRESENTATIVE_ELECTED, {'group': group_id, 'representative': winner, 'support': support}, epoch)
    return winner


def retained_support_required(election_support: int, retention_bps: int) -> int:
    return -(-retention_bps * election_support // BPS)


def check_representative_validity(community: Community, retention_bps: int,
                                  current_support: Optional[int] = None) -> bool:
    """A representative stays valid while current support is at least ceil(retention * election support)."""
    if community.representative is None:
        return False
    if current_support is None:
        current_support = community.support_for(community.representative)
    return current_support >= retained_support_required(community.election_support, retention_bps)


def invalidate_representative(engine: ProtocolEngine, group_id: int, epoch: int) -> bool:
    """Drop a representative whose support fell below the retention threshold; re-election follows."""
    community = _group(engine.state, group_id)
    if community.representative is None or check_representative_validity(
            community, engine.params.support_retention_bps):
        return False
    engine.emit(REPRESENTATIVE_INVALIDATED, {
        'group': group_id,
        'representative': community.representative,
        'support': community.support_for(community.representative),
    }, epoch)
    return True


def open_proposal(engine: ProtocolEngine, proposer: PersonId, parameter: str, value: int, importance: str,
                  epoch: int) -> Proposal:
    """
    A layer-3 representative proposes a new value for a whitelisted parameter.

    :raises NotWhitelisted: the parameter cannot be changed at runtime.
    """
    params = engine.params
    if parameter not in WHITELISTED_PARAMETERS:
        raise NotWhitelisted(f"{parameter} is not a runtime parameter")
    if importance not in params.importance_classes:
        raise GovernanceError(f"unknown importance class {importance}")
    if proposer not in engine.state.governance.layer_representatives(3):
        raise GovernanceError(f"{proposer[:16]}... is not a layer-3 representative")
    event = engine.emit(PROPOSAL_OPENED, {
        'proposer': proposer,
        'parameter': parameter,
        'value': value,
        'importance': importance,
        'close_epoch': epoch + params.proposal_window_epochs,
    }, epoch)
    return engine.state.governance.proposals[event.height]


def cast_proposal_votes(engine: ProtocolEngine, proposal_id: int, layer: int, votes: Dict[PersonId, Vote],
                        epoch: int) -> None:
    if not votes:
        return
    engine.emit(PROPOSAL_VOTES_CAST, {
        'proposal': proposal_id,
        'layer': layer,
        'votes': [[pk, Vote(vote).value] for pk, vote in sorted(votes.items())],
    }, epoch)


def tally_counts(counts: Sequence[TallyCounts], thresholds: Sequence[int]) -> ProposalStatus:
    """
    Passed iff approvals / (approvals + rejections + abstentions) >= t at every layer.

    :param thresholds: per-layer thresholds in basis points.
    :raises LayersEmpty: a layer has nobody to count.
    """
    if len(counts) != len(thresholds):
        raise GovernanceError("one count triple is needed per threshold")
    passed = True
    for layer, ((approvals, rejections, abstentions), threshold) in enumerate(zip(counts, thresholds), start=1):
        total = approvals + rejections + abstentions
        if total == 0:
            raise LayersEmpty(f"layer {layer} has no representatives")
        if approvals * BPS < threshold * total:
            passed = False
    return ProposalStatus.PASSED if passed else ProposalStatus.FAILED


def layer_counts(state: ApplicationState, proposal: Proposal) -> List[TallyCounts]:
    """Per-layer (approve, reject, abstain) over every sitting representative; non-voters abstain."""
    counts = []
    for layer in LAYERS:
        reps = state.governance.layer_representatives(layer)
        if not reps:
            raise LayersEmpty(f"layer {layer} has no representatives")
        votes = proposal.votes.get(layer, {})
        approvals = sum(1 for pk in reps if votes.get(pk) == Vote.APPROVE)
        rejections = sum(1 for pk in reps if votes.get(pk) == Vote.REJECT)
        counts.append((approvals, rejections, len(reps) - approvals - rejections))
    return counts


def tally(engine: ProtocolEngine, proposal_id: int, epoch: int) -> ProposalStatus:
    """Close the voting window; a passed proposal takes effect at the next epoch boundary."""
    proposal = _proposal(engine.state, proposal_id)
    if proposal.status != ProposalStatus.OPEN:
        raise GovernanceError(f"proposal {proposal_id} is already {proposal.status.value}")
    if epoch < proposal.close_epoch:
        raise GovernanceError(f"proposal {proposal_id} is open until epoch {proposal.close_epoch}")
    counts = layer_counts(engine.state, proposal)
    status = tally_counts(counts, proposal.thresholds)
    engine.emit(PROPOSAL_TALLIED, {
        'proposal': proposal_id,
        'counts': [list(c) for c in counts],
        'status': status.value,
    }, epoch)
    logging.info("Proposal %d on %s %s with counts %s", proposal_id, proposal.parameter, status.value, counts)
    return status


def apply_parameter_change(engine: ProtocolEngine, proposal_id: int, epoch: int) -> None:
    """
    :raises NotPassed: the proposal did not pass (or was applied already).
    :raises NotWhitelisted: the parameter cannot be changed at runtime.
    """
    proposal = _proposal(engine.state, proposal_id)
    if proposal.status != ProposalStatus.PASSED:
        raise NotPassed(f"proposal {proposal_id} is {proposal.status.value}")
    if proposal.parameter not in WHITELISTED_PARAMETERS:
        raise NotWhitelisted(f"{proposal.parameter} is not a runtime parameter")
    engine.emit(PARAMETER_CHANGED, {
        'proposal': proposal_id,
        'parameter': proposal.parameter,
        'value': proposal.value,
    }, epoch)


def apply_pending_changes(engine: ProtocolEngine, epoch: int) -> List[int]:
    due = sorted(pid for pid, effective in engine.state.governance.pending_changes if effective <= epoch)
    for proposal_id in due:
        apply_parameter_change(engine, proposal_id, epoch)
    return due


##################################
# MARK: Event handlers
##################################

def _on_communities_formed(state: ApplicationState, event: Event) -> None:
    groups = event.payload['groups']
    try:
        expected = community_partition(state)
    except TooFewVerified as e:
        raise RejectedEvent(event.height, str(e))
    if groups != expected:
        raise RejectedEvent(event.height, "communities differ from the deterministic partition")
    governance = state.governance
    governance.groups = {}
    governance.layers = {}
    governance.term += 1
    governance.formed_epoch = event.epoch
    governance.layers[1] = _add_groups(state, groups)


def _on_layer_formed(state: ApplicationState, event: Event) -> None:
    layer, groups = event.payload['layer'], event.payload['groups']
    if layer not in (2, 3):
        raise RejectedEvent(event.height, f"layer {layer} cannot be formed from representatives")
    try:
        expected = layer_partition(state, layer)
    except LayersEmpty as e:
        raise RejectedEvent(event.height, str(e))
    if groups != expected:
        raise RejectedEvent(event.height, f"layer {layer} groups differ from the deterministic partition")
    for dropped in range(layer, 4):
        for group_id in state.governance.layers.pop(dropped, []):
            del state.governance.groups[group_id]
    state.governance.layers[layer] = _add_groups(state, groups)


def _on_ballots(state: ApplicationState, event: Event) -> None:
    group = _event_group(state, event)
    entries = event.payload['ballots'] if event.kind == BALLOTS_CAST else \
        [[event.payload['voter'], event.payload['candidate']]]
    members = set(group.members)
    for voter, candidate in entries:
        if voter not in members or candidate not in members:
            raise RejectedEvent(event.height, "ballots stay inside the group")
        record = state.registry.identities.get(voter)
        if record is None or record.status != IdentityStatus.VERIFIED:
            raise RejectedEvent(event.height, f"{voter[:16]}... is not verified")
    for voter, candidate in entries:
        group.ballots[voter] = candidate


def _on_elected(state: ApplicationState, event: Event) -> None:
    group = _event_group(state, event)
    try:
        winner, support = plurality_winner(group)
    except NoVotesCast as e:
        raise RejectedEvent(event.height, str(e))
    if event.payload['representative'] != winner or event.payload['support'] != support:
        raise RejectedEvent(event.height, "representative is not the plurality winner")
    group.representative = winner
    group.election_support = support


def _on_invalidated(state: ApplicationState, event: Event) -> None:
    group = _event_group(state, event)
    if group.representative != event.payload['representative'] or \
            check_representative_validity(group, state.params.support_retention_bps):
        raise RejectedEvent(event.height, "representative still holds enough support")
    group.representative = None
    group.election_support = 0


def _on_proposal_opened(state: ApplicationState, event: Event) -> None:
    payload = event.payload
    parameter, importance = payload['parameter'], payload['importance']
    if parameter not in WHITELISTED_PARAMETERS or importance not in state.params.importance_classes:
        raise RejectedEvent(event.height, "proposal targets an unknown parameter or class")
    if payload['proposer'] not in state.governance.layer_representatives(3):
        raise RejectedEvent(event.height, "only layer-3 representatives open proposals")
    if payload['close_epoch'] != event.epoch + state.params.proposal_window_epochs:
        raise RejectedEvent(event.height, "voting window does not follow the parameters")
    state.governance.proposals[event.height] = Proposal(
        proposal_id=event.height,
        proposer=payload['proposer'],
        parameter=parameter,
        value=payload['value'],
        importance=importance,
        thresholds=tuple(state.params.importance_classes[importance]),
        opened_epoch=event.epoch,
        close_epoch=payload['close_epoch'],
    )


def _on_proposal_votes(state: ApplicationState, event: Event) -> None:
    payload = event.payload
    proposal = state.governance.proposals.get(payload['proposal'])
    if proposal is None or proposal.status != ProposalStatus.OPEN or event.epoch >= proposal.close_epoch:
        raise RejectedEvent(event.height, "proposal is not open for votes")
    layer = payload['layer']
    reps = set(state.governance.layer_representatives(layer))
    for pk, _ in payload['votes']:
        if pk not in reps:
            raise RejectedEvent(event.height, f"{pk[:16]}... is not a layer-{layer} representative")
    votes = proposal.votes.setdefault(layer, {})
    for pk, vote in payload['votes']:
        votes[pk] = Vote(vote)


def _on_tallied(state: ApplicationState, event: Event) -> None:
    payload = event.payload
    proposal = state.governance.proposals.get(payload['proposal'])
    if proposal is None or proposal.status != ProposalStatus.OPEN or event.epoch < proposal.close_epoch:
        raise RejectedEvent(event.height, "proposal cannot be tallied yet")
    try:
        counts = layer_counts(state, proposal)
    except LayersEmpty as e:
        raise RejectedEvent(event.height, str(e))
    status = tally_counts(counts, proposal.thresholds)
    if [list(c) for c in counts] != payload['counts'] or status.value != payload['status']:
        raise RejectedEvent(event.height, "tally does not follow from the votes")
    proposal.layer_counts = [list(c) for c in counts]
    proposal.status = status
    if status == ProposalStatus.PASSED:
        state.governance.pending_changes.append((proposal.proposal_id, event.epoch + 1))


def _on_parameter_changed(state: ApplicationState, event: Event) -> None:
    payload = event.payload
    proposal = state.governance.proposals.get(payload['proposal'])
    pending = dict(state.governance.pending_changes)
    if proposal is None or proposal.proposal_id not in pending or event.epoch < pending[proposal.proposal_id]:
        raise RejectedEvent(event.height, "no passed proposal is due")
    if payload['parameter'] != proposal.parameter or payload['value'] != proposal.value:
        raise RejectedEvent(event.height, "change differs from the passed proposal")
    params = state.params.with_change(proposal.parameter, proposal.value)
    params.validate()
    state.params = params
    proposal.status = ProposalStatus.APPLIED
    state.governance.pending_changes = [c for c in state.governance.pending_changes if c[0] != proposal.proposal_id]
    state.invalidate_eligibility()


HANDLERS = {
    COMMUNITIES_FORMED: _on_communities_formed,
    LAYER_FORMED: _on_layer_formed,
    BALLOTS_CAST: _on_ballots,
    BALLOT_CHANGED: _on_ballots,
    REPRESENTATIVE_ELECTED: _on_elected,
    REPRESENTATIVE_INVALIDATED: _on_invalidated,
    PROPOSAL_OPENED: _on_proposal_opened,
    PROPOSAL_VOTES_CAST: _on_proposal_votes,
    PROPOSAL_TALLIED: _on_tallied,
    PARAMETER_CHANGED: _on_parameter_changed,
}


##################################
# MARK: Private functions
##################################

def _split(members: List[PersonId], bounds: Tuple[int, int]) -> List[List[PersonId]]:
    groups, start = [], 0
    for size in even_split_sizes(len(members), *bounds):
        groups.append(members[start:start + size])
        start += size
    return groups


def _add_groups(state: ApplicationState, groups: List[List[PersonId]]) -> List[int]:
    governance = state.governance
    ids = []
    for members in groups:
        group_id = governance.next_group_id
        governance.next_group_id += 1
        governance.groups[group_id] = Community(community_id=group_id, members=list(members))
        ids.append(group_id)
    return ids


def _group(state: ApplicationState, group_id: int) -> Community:
    group = state.governance.groups.get(group_id)
    if group is None:
        raise GovernanceError(f"unknown group {group_id}")
    return group


def _event_group(state: ApplicationState, event: Event) -> Community:
    group = state.governance.groups.get(event.payload['group'])
    if group is None:
        raise RejectedEvent(event.height, f"unknown group {event.payload['group']}")
    return group


def _proposal(state: ApplicationState, proposal_id: int) -> Proposal:
    proposal = state.governance.proposals.get(proposal_id)
    if proposal is None:
        raise GovernanceError(f"unknown proposal {proposal_id}")
    return proposal
