"""
Module: Adversary
Verifier behaviours (honest by default, corrupted on request), selection of
the colluding verifiers and the closed-form collusion analysis: how likely
a coalition of k verifiers is to collect every certificate of a fake, and
what the coalition pays for that chance.
"""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING, Iterable, List, Optional, Set

import numpy as np

from src.Constants import *
from src.models.AdversaryPlan import AdversaryPlan, CollusionPoint, Strategy
from src.models.ApplicationState import ApplicationState
from src.models.BiometricTemplate import BiometricTemplate
from src.models.IdentityRecord import PersonId
from src.protocol.Biometric import match_template
from src.utils.Errors import AdversaryError, ConfigInvalid
from src.utils.MathModels import all_corrupt_probability, grinding_success_probability

if TYPE_CHECKING:
    from src.models.ScenarioConfig import ScenarioConfig
    from src.protocol.Engine import ProtocolEngine


class VerifierBehaviour:
    """Honest verifier: every decision is the matcher's decision."""

    def certify(self, engine: ProtocolEngine, verifier: PersonId, user: PersonId,
                presented: Optional[BiometricTemplate], claimed: Optional[BiometricTemplate]) -> bool:
        if presented is None or claimed is None:
            return False
        return match_template(presented, claimed, engine.require_policy())

    def adjudicate(self, engine: ProtocolEngine, verifier: PersonId, target: PersonId,
                   presented: Optional[BiometricTemplate], stored: Optional[BiometricTemplate]) -> bool:
        """Vote genuine iff the person in front of the verifier reproduces the stored template."""
        return self.certify(engine, verifier, target, presented, stored)

    def judge_duplicate(self, engine: ProtocolEngine, verifier: PersonId, claimant: PersonId,
                        presented: Optional[BiometricTemplate], flagged: Optional[BiometricTemplate]) -> bool:
        """Vote "same person" iff the claimant reproduces the flagged identity's template."""
        return self.certify(engine, verifier, claimant, presented, flagged)


HONEST = VerifierBehaviour()


class CorruptBehaviour(VerifierBehaviour):
    """
    Bribed verifier. Accepts every certificate it is asked for, and covers
    for the adversary's own identities in A-judge and duplicate votes.
    """

    def __init__(self, targets: Optional[Set[PersonId]] = None) -> None:
        self.targets: Set[PersonId] = targets if targets is not None else set()

    def certify(self, engine, verifier, user, presented, claimed) -> bool:
        return True

    def adjudicate(self, engine, verifier, target, presented, stored) -> bool:
        if target in self.targets:
            return True
        return HONEST.adjudicate(engine, verifier, target, presented, stored)

    def judge_duplicate(self, engine, verifier, claimant, presented, flagged) -> bool:
        if claimant in self.targets:
            return False
        return HONEST.judge_duplicate(engine, verifier, claimant, presented, flagged)


def corrupt_verifier_behavior(engine: ProtocolEngine, verifier_pk: PersonId,
                              targets: Optional[Set[PersonId]] = None) -> CorruptBehaviour:
    """Install a corrupt override for a registered verifier; verifiers sharing targets share one set."""
    if verifier_pk not in engine.state.registry.verifiers:
        raise AdversaryError(f"{verifier_pk[:16]}... is not a registered verifier")
    behaviour = CorruptBehaviour(targets)
    engine.behaviours[verifier_pk] = behaviour
    return behaviour


def select_corrupt_verifiers(state: ApplicationState, plan: AdversaryPlan, rng: np.random.Generator,
                             epoch: int) -> List[PersonId]:
    """
    The coalition: the plan's explicit list, or corrupt_count eligible
    verifiers of corrupt_city picked at random or by lowest trust weight.
    """
    from src.protocol.Trust import eligible_verifiers

    if plan.corrupted_verifiers:
        unknown = [pk for pk in plan.corrupted_verifiers if pk not in state.registry.verifiers]
        if unknown:
            raise ConfigInvalid(CORRUPTED_VERIFIERS, f"{len(unknown)} listed keys are not verifiers")
        return sorted(set(plan.corrupted_verifiers))
    city = plan.corrupt_city or min(state.params.city_thresholds)
    pool = eligible_verifiers(state, city, epoch)
    if plan.corrupt_count > len(pool):
        raise ConfigInvalid(CORRUPT_COUNT, f"{plan.corrupt_count} exceeds the {len(pool)} verifiers of {city}")
    if plan.corrupt_selection == SELECTION_LOWEST_WEIGHT:
        chosen = sorted(pool, key=lambda pk: (state.trust.weight_of(pk), pk))[:plan.corrupt_count]
    else:
        # prefix of one permutation: for a fixed generator, larger coalitions contain smaller ones
        chosen = [pool[int(i)] for i in rng.permutation(len(pool))[:plan.corrupt_count]]
    logging.info("Corrupted %d of %d verifiers in %s", len(chosen), len(pool), city)
    return sorted(chosen)


def probability_all_assigned_corrupt(n_eligible: int, k_corrupt: int, c_required: int) -> float:
    """
    Probability that c sequentially assigned distinct verifiers are all corrupt:
    C(k, c) / C(N, c).

    :raises InvalidCounts: for counts outside 0 <= k <= N, 0 <= c <= N.
    """
    return all_corrupt_probability(n_eligible, k_corrupt, c_required)


def probability_with_grinding(n_eligible: int, k_corrupt: int, c_required: int, max_reassignments: int) -> float:
    """Same as probability_all_assigned_corrupt, when each honest rejection may be answered by a reassignment."""
    return grinding_success_probability(n_eligible, k_corrupt, c_required, max_reassignments)


def expected_cost(k: int, success_prob: float, c_required: int, bribe_cost: float, verifier_stake: int,
                  audit_probability: float) -> float:
    """Bribes plus the certifiers' stakes expected to be slashed once a success is audited."""
    return k * bribe_cost + success_prob * c_required * verifier_stake * audit_probability


def collusion_frontier(n_eligible: int, c_required: int, bribe_cost: float, verifier_stake: int,
                       audit_probability: float, max_reassignments: int = 0,
                       ks: Optional[Iterable[int]] = None) -> List[CollusionPoint]:
    """Exact success probability and expected cost for each coalition size (default c..N)."""
    sizes = range(c_required, n_eligible + 1) if ks is None else ks
    points = []
    for k in sizes:
        p = probability_with_grinding(n_eligible, k, c_required, max_reassignments)
        points.append(CollusionPoint(k=k, success_prob=p,
                                     expected_cost=expected_cost(k, p, c_required, bribe_cost, verifier_stake,
                                                                 audit_probability)))
    return points


def min_collusion_curve(scenario: ScenarioConfig, target_success_prob: float,
                        plan: Optional[AdversaryPlan] = None) -> List[CollusionPoint]:
    """
    Frontier from k = certs_required up to the smallest coalition whose
    success probability reaches the target; its last point is that coalition.
    """
    if not 0.0 < target_success_prob < 1.0:
        raise AdversaryError(f"target probability {target_success_prob} outside (0, 1)")
    plan = plan or scenario.adversary or AdversaryPlan(strategy=Strategy.FAKE_IDENTITY_FACTORY, grind=False)
    city = scenario.city(plan.corrupt_city) if plan.corrupt_city else scenario.cities[0]
    params = scenario.protocol
    max_reassignments = params.max_reassignments if plan.grind else 0
    curve = []
    for point in collusion_frontier(city.genesis_verifiers, params.certs_required, plan.bribe_cost_per_verifier,
                                    params.monetary.verifier_stake, plan.audit_probability, max_reassignments):
        curve.append(point)
        if point.success_prob >= target_success_prob:
            break
    return curve
