"""
Module: Population
The simulated people behind the public keys. A person owns hidden biometric
ground truth; each visit to a verifier presents a fresh noisy sample of it.
Fake identities claim a template no living person reproduces, so whoever
shows up for them presents someone else's biometrics.
"""

from dataclasses import dataclass
from typing import Dict, Iterator, Optional

import numpy as np

from src.models.BiometricTemplate import BiometricTemplate, GroundTruthBiometric, MatchPolicy
from src.models.IdentityRecord import PersonId
from src.protocol.Biometric import generate_person_ground_truth, sample_template
from src.utils.Canonical import derive_pk

HONEST = "honest"
FAKE = "fake"
DUPLICATE = "duplicate"


@dataclass
class Person:
    pk: PersonId
    city: str
    truth: GroundTruthBiometric
    template: BiometricTemplate
    kind: str = HONEST
    alive: bool = True
    original: Optional[PersonId] = None

    @property
    def adversarial(self) -> bool:
        return self.kind != HONEST


class Population:
    """Every simulated person, keyed by public key; keys are derived from the scenario seed and a counter."""

    def __init__(self, seed: int, policy: MatchPolicy) -> None:
        self.seed = seed
        self.policy = policy
        self.people: Dict[PersonId, Person] = {}
        self._counter = 0

    def __len__(self) -> int:
        return len(self.people)

    def __iter__(self) -> Iterator[Person]:
        return iter(self.people.values())

    def __getitem__(self, pk: PersonId) -> Person:
        return self.people[pk]

    def __contains__(self, pk: PersonId) -> bool:
        return pk in self.people

    def next_pk(self, kind: str) -> PersonId:
        self._counter += 1
        return derive_pk("person", self.seed, kind, self._counter)

    def spawn(self, rng: np.random.Generator, city: str) -> Person:
        truth = generate_person_ground_truth(rng, self.policy)
        template = sample_template(truth, rng, self.policy.genuine_noise_sigma)
        return self._add(Person(pk=self.next_pk(HONEST), city=city, truth=truth, template=template))

    def spawn_fake(self, rng: np.random.Generator, city: str) -> Person:
        """A claimed template from nobody; the stand-in who visits verifiers has their own biometrics."""
        phantom = generate_person_ground_truth(rng, self.policy)
        stand_in = generate_person_ground_truth(rng, self.policy)
        template = sample_template(phantom, rng, self.policy.genuine_noise_sigma)
        return self._add(Person(pk=self.next_pk(FAKE), city=city, truth=stand_in, template=template, kind=FAKE))

    def spawn_duplicate(self, rng: np.random.Generator, original: Person) -> Person:
        """The same human enrolling again under a new key with a fresh sample."""
        template = sample_template(original.truth, rng, self.policy.genuine_noise_sigma)
        person = Person(pk=self.next_pk(DUPLICATE), city=original.city, truth=original.truth,
                        template=template, kind=DUPLICATE, original=original.pk)
        return self._add(person)

    def present(self, pk: PersonId, rng: np.random.Generator) -> Optional[BiometricTemplate]:
        """A live sample from whoever turns up for pk; None when that person has died."""
        person = self.people.get(pk)
        if person is None or not person.alive:
            return None
        return sample_template(person.truth, rng, self.policy.genuine_noise_sigma)

    def discard(self, pk: PersonId) -> None:
        """Forget someone who never got an identity."""
        self.people.pop(pk, None)

    def _add(self, person: Person) -> Person:
        self.people[person.pk] = person
        return person
