import hashlib
import json
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from src.Constants import *
from src.utils.Errors import ConfigInvalid


@dataclass(frozen=True, eq=False)
class ModalitySample:
    modality_id: int
    vector: np.ndarray

    def to_dict(self) -> dict:
        return {'modality_id': self.modality_id, 'vector': [float(v) for v in self.vector]}


@dataclass(frozen=True)
class BiometricTemplate:
    """
    A presented or stored set of modality samples. The digest is SHA-256 over
    each modality id and dimension as 4-byte big-endian integers followed by
    the vector as big-endian float64, so equal templates always hash equally.
    """
    samples: Tuple[ModalitySample, ...] = field(compare=False)
    matrix: np.ndarray = field(init=False, repr=False, compare=False)
    digest: str = field(init=False)

    def __post_init__(self) -> None:
        matrix = np.stack([np.asarray(s.vector, dtype=np.float64) for s in self.samples]) \
            if self.samples else np.zeros((0, 0))
        object.__setattr__(self, 'matrix', matrix)
        h = hashlib.sha256()
        for sample in self.samples:
            vec = np.asarray(sample.vector, dtype='>f8')
            h.update(int(sample.modality_id).to_bytes(4, 'big'))
            h.update(int(vec.shape[0]).to_bytes(4, 'big'))
            h.update(vec.tobytes())
        object.__setattr__(self, 'digest', h.hexdigest())

    @property
    def n_modalities(self) -> int:
        return len(self.samples)

    @property
    def modality_ids(self) -> List[int]:
        return [s.modality_id for s in self.samples]

    @staticmethod
    def from_matrix(matrix: np.ndarray) -> 'BiometricTemplate':
        return BiometricTemplate(tuple(
            ModalitySample(modality_id=i, vector=np.array(row, dtype=np.float64))
            for i, row in enumerate(matrix)
        ))

    def to_dict(self) -> dict:
        return {'digest': self.digest, 'samples': [s.to_dict() for s in self.samples]}

    @staticmethod
    def from_dict(data: dict) -> 'BiometricTemplate':
        template = BiometricTemplate(tuple(
            ModalitySample(modality_id=int(s['modality_id']), vector=np.array(s['vector'], dtype=np.float64))
            for s in data['samples']
        ))
        if 'digest' in data and data['digest'] != template.digest:
            raise ValueError(f"template digest mismatch: {data['digest']} != {template.digest}")
        return template

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class GroundTruthBiometric:
    """Hidden per-person latent unit vectors, one row per modality."""
    latents: np.ndarray

    @property
    def n_modalities(self) -> int:
        return int(self.latents.shape[0])

    @property
    def template_dim(self) -> int:
        return int(self.latents.shape[1])


@dataclass(frozen=True)
class MatchPolicy:
    tau: float
    n_modalities: int = DEFAULT_N_MODALITIES
    k_required: int = DEFAULT_K_REQUIRED
    genuine_noise_sigma: float = DEFAULT_GENUINE_NOISE_SIGMA
    template_dim: int = DEFAULT_TEMPLATE_DIM

    def validate(self) -> None:
        if self.n_modalities < 1:
            raise ConfigInvalid(N_MODALITIES, "must be at least 1")
        if not 1 <= self.k_required <= self.n_modalities:
            raise ConfigInvalid(K_REQUIRED, "must lie in [1, n-modalities]")
        if self.tau < 0:
            raise ConfigInvalid(TAU, "must be non-negative")
        if self.genuine_noise_sigma < 0:
            raise ConfigInvalid(GENUINE_NOISE_SIGMA, "must be non-negative")
        if self.template_dim < 1:
            raise ConfigInvalid(TEMPLATE_DIM, "must be at least 1")

    def to_dict(self) -> dict:
        return {
            TAU: self.tau,
            N_MODALITIES: self.n_modalities,
            K_REQUIRED: self.k_required,
            GENUINE_NOISE_SIGMA: self.genuine_noise_sigma,
            TEMPLATE_DIM: self.template_dim,
        }


@dataclass(frozen=True)
class CalibrationResult:
    tau: float
    far: float
    frr: float
    sigma: float
    template_dim: int
    n_pairs: int

    @property
    def eer(self) -> float:
        return (self.far + self.frr) / 2.0

    def to_dict(self) -> dict:
        return {
            'tau': self.tau,
            'far': self.far,
            'frr': self.frr,
            'eer': self.eer,
            'sigma': self.sigma,
            'template_dim': self.template_dim,
            'n_pairs': self.n_pairs,
        }


@dataclass(frozen=True)
class FusionRates:
    """Measured k-of-n fusion rates next to the binomial prediction from measured per-modality rates."""
    n_pairs: int
    modality_far: float
    modality_frr: float
    fused_far: float
    fused_frr: float
    binomial_far: float
    binomial_frr: float

    def to_dict(self) -> dict:
        return {
            'n_pairs': self.n_pairs,
            'modality_far': self.modality_far,
            'modality_frr': self.modality_frr,
            'fused_far': self.fused_far,
            'fused_frr': self.fused_frr,
            'binomial_far': self.binomial_far,
            'binomial_frr': self.binomial_frr,
        }
