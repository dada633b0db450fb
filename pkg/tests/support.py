"""
Scenario builders and protocol shortcuts shared by the test modules.

All tests use a fixed match policy instead of a calibrated one: genuine
distances sit near 0.45 and impostor distances near 1.41, so honest people
always match themselves and never match anyone else at tau = 0.8.
"""

from typing import List, Optional, Tuple

from src.Constants import *
from src.models.BiometricTemplate import MatchPolicy
from src.models.IdentityRecord import EntryGate, IdentityRecord, IdentityStatus, Invitation, PersonId
from src.models.ScenarioConfig import ScenarioConfig
from src.protocol import Registry
from src.simulation.Population import Person
from src.simulation.Simulator import Simulator

TEST_POLICY = MatchPolicy(tau=0.8, n_modalities=4, k_required=3, genuine_noise_sigma=0.08, template_dim=16)
CITY = "default"


def make_scenario(verifiers: int = 5, threshold: int = 2, seed: int = 11, epochs: int = 0,
                  arrivals: float = 0.0, max_arrivals: Optional[int] = None, protocol: Optional[dict] = None,
                  monetary: Optional[dict] = None, behaviour: Optional[dict] = None,
                  adversary: Optional[dict] = None, verify_replay: bool = True) -> ScenarioConfig:
    city = {CITY_ID: CITY, GENESIS_VERIFIERS: verifiers, ARRIVAL_RATE: arrivals}
    if max_arrivals is not None:
        city[MAX_ARRIVALS] = max_arrivals
    data = {
        SEED: seed,
        EPOCHS: epochs,
        CITIES: [city],
        PROTOCOL: {VERIFIER_TRUST_THRESHOLD: threshold, **(protocol or {})},
        BIOMETRIC: {TAU: TEST_POLICY.tau},
        BEHAVIOUR: behaviour or {},
        VERIFY_REPLAY: verify_replay,
    }
    if monetary:
        data[MONETARY] = monetary
    if adversary:
        data[ADVERSARY] = adversary
    return ScenarioConfig.from_dict(data)


def genesis_simulator(scenario: Optional[ScenarioConfig] = None, **kwargs) -> Simulator:
    sim = Simulator(scenario or make_scenario(**kwargs), TEST_POLICY)
    sim.genesis()
    return sim


def genesis_roles(sim: Simulator) -> Tuple[List[PersonId], List[PersonId]]:
    """(verifiers, supporters) of a genesis simulator, each sorted."""
    registry = sim.state.registry
    verifiers = sorted(registry.verifiers)
    supporters = sorted(pk for pk in registry.verified if pk not in registry.verifiers)
    return verifiers, supporters


def free_inviter(sim: Simulator) -> PersonId:
    registry = sim.state.registry
    return next(pk for pk in sorted(registry.verified) if registry.identities[pk].invitations_remaining > 0)


def claim_newcomer(sim: Simulator, epoch: int, gate: Optional[EntryGate] = None,
                   person: Optional[Person] = None) -> Person:
    """Spawn an honest person (unless one is given) and claim an identity for them."""
    if person is None:
        person = sim.population.spawn(sim.rng, CITY)
    sim.claim(person, gate or Invitation(free_inviter(sim)), epoch)
    return person


def certify_until_done(sim: Simulator, pk: PersonId, epoch: int) -> IdentityRecord:
    """Walk pk through its assigned verifiers until it is verified or a rejection stops it."""
    record = sim.state.registry.identities[pk]
    while (record.status == IdentityStatus.PENDING_VERIFICATION and record.current_assignee is not None
           and not record.rejection_pending):
        Registry.submit_certificate(sim.engine, record.current_assignee, pk, sim.present(pk), epoch)
    return record


def verified_newcomer(sim: Simulator, epoch: int, gate: Optional[EntryGate] = None) -> Person:
    person = claim_newcomer(sim, epoch, gate)
    certify_until_done(sim, person.pk, epoch)
    return person
