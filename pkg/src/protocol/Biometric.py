"""
Module: Biometric
Synthetic multi-modal biometric model. Each person carries one hidden unit
vector per modality; every observation adds Gaussian noise. Two templates match
when at least k of their n modalities lie within Euclidean distance tau.

Tau is calibrated to the equal error rate of a single modality, and the noise
level can itself be searched so that a target per-modality EER is reached.
"""

import logging
import threading
from typing import List, Optional, Tuple

import numpy as np

from src.Constants import *
from src.models.BiometricTemplate import (BiometricTemplate, CalibrationResult, FusionRates,
                                          GroundTruthBiometric, MatchPolicy, ModalitySample)
from src.models.IdentityRecord import PersonId
from src.utils.Errors import CalibrationFailed, ModalityMismatch
from src.utils.MathModels import fused_error_rates

CHUNK_PAIRS = 50_000


def generate_person_ground_truth(rng: np.random.Generator, policy: MatchPolicy) -> GroundTruthBiometric:
    """
    Draw a person's hidden latent vectors.

    :param rng: Seeded generator.
    :param policy: Supplies the modality count and template dimension.
    :return: Unit latent vectors, one per modality.
    """
    latents = _unit_rows(rng.standard_normal((policy.n_modalities, policy.template_dim)))
    return GroundTruthBiometric(latents=latents)


def sample_template(truth: GroundTruthBiometric, rng: np.random.Generator, sigma: float) -> BiometricTemplate:
    """One noisy observation of every modality of a person."""
    noise = rng.standard_normal(truth.latents.shape) * sigma
    return BiometricTemplate.from_matrix(truth.latents + noise)


def modality_distance(a: ModalitySample, b: ModalitySample) -> float:
    if a.modality_id != b.modality_id:
        raise ModalityMismatch(f"modality {a.modality_id} compared with modality {b.modality_id}")
    va, vb = np.asarray(a.vector, dtype=np.float64), np.asarray(b.vector, dtype=np.float64)
    if va.shape != vb.shape:
        raise ModalityMismatch(f"modality {a.modality_id} dimensions differ: {va.shape} vs {vb.shape}")
    return float(_distances(va, vb))


def modality_distances(a: BiometricTemplate, b: BiometricTemplate) -> np.ndarray:
    if a.modality_ids != b.modality_ids:
        raise ModalityMismatch(f"modality sets differ: {a.modality_ids} vs {b.modality_ids}")
    return np.array([modality_distance(sa, sb) for sa, sb in zip(a.samples, b.samples)])


def match_modality(a: ModalitySample, b: ModalitySample, policy: MatchPolicy) -> bool:
    """Single-modality match: distance at most tau."""
    return modality_distance(a, b) <= policy.tau


def match_template(a: BiometricTemplate, b: BiometricTemplate, policy: MatchPolicy) -> bool:
    """k-of-n fusion. Reflexive and symmetric for any tau >= 0."""
    if a.modality_ids != b.modality_ids:
        raise ModalityMismatch(f"modality sets differ: {a.modality_ids} vs {b.modality_ids}")
    matched = sum(match_modality(sa, sb, policy) for sa, sb in zip(a.samples, b.samples))
    return matched >= policy.k_required


##################################
# MARK: Calibration
##################################

def genuine_distances(rng: np.random.Generator, n_pairs: int, template_dim: int, sigma: float) -> np.ndarray:
    """Single-modality distances between two observations of the same latent."""
    z1 = rng.standard_normal((n_pairs, template_dim))
    z2 = rng.standard_normal((n_pairs, template_dim))
    return sigma * np.linalg.norm(z1 - z2, axis=1)


def impostor_distances(rng: np.random.Generator, n_pairs: int, template_dim: int, sigma: float) -> np.ndarray:
    """Single-modality distances between observations of two different latents."""
    u1 = _unit_rows(rng.standard_normal((n_pairs, template_dim)))
    u2 = _unit_rows(rng.standard_normal((n_pairs, template_dim)))
    w = rng.standard_normal((n_pairs, template_dim)) - rng.standard_normal((n_pairs, template_dim))
    return np.linalg.norm(u1 - u2 + sigma * w, axis=1)


def compute_det_curve(target_scores: np.ndarray, nontarget_scores: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    frr, far, thresholds over every observed score (higher score means more alike).
    """
    n_scores = target_scores.size + nontarget_scores.size
    all_scores = np.concatenate((target_scores, nontarget_scores))
    labels = np.concatenate((np.ones(target_scores.size), np.zeros(nontarget_scores.size)))
    indices = np.argsort(all_scores, kind='mergesort')
    labels = labels[indices]
    tar_trial_sums = np.cumsum(labels)
    nontarget_trial_sums = nontarget_scores.size - (np.arange(1, n_scores + 1) - tar_trial_sums)
    frr = np.concatenate((np.atleast_1d(0), tar_trial_sums / target_scores.size))
    far = np.concatenate((np.atleast_1d(1), nontarget_trial_sums / nontarget_scores.size))
    thresholds = np.concatenate((np.atleast_1d(all_scores[indices[0]] - 0.001), all_scores[indices]))
    return frr, far, thresholds


def compute_eer(genuine: np.ndarray, impostor: np.ndarray) -> float:
    """Equal error rate of distance samples (smaller distance means a match)."""
    frr, far, _ = compute_det_curve(-genuine, -impostor)
    min_index = np.argmin(np.abs(frr - far))
    return float(np.mean((frr[min_index], far[min_index])))


def calibrate(template_dim: int, sigma: float, n_pairs: int, rng: np.random.Generator,
              max_eer: Optional[float] = None) -> CalibrationResult:
    """
    Binary-search tau on the sign of FAR - FRR over n_pairs genuine and
    n_pairs impostor single-modality distances, then place tau midway between
    the observed distances around the crossing. When the two distance
    populations do not overlap this is the midpoint of the gap, so zero
    noise gives min(impostor) / 2.

    :raises CalibrationFailed: when max_eer is given and the EER exceeds it.
    """
    if n_pairs < 1:
        raise CalibrationFailed("n_pairs must be positive")
    genuine = np.sort(genuine_distances(rng, n_pairs, template_dim, sigma))
    impostor = np.sort(impostor_distances(rng, n_pairs, template_dim, sigma))
    result = _calibrate_sorted(genuine, impostor, sigma, template_dim)
    if max_eer is not None and result.eer > max_eer:
        raise CalibrationFailed(f"EER {result.eer:.4f} exceeds {max_eer}", eer=result.eer)
    logging.info("Calibrated tau=%.6f (FAR %.5f, FRR %.5f) for sigma=%.5f d=%d",
                 result.tau, result.far, result.frr, sigma, template_dim)
    return result


def calibrate_tau(policy: MatchPolicy, n_pairs: int, rng: np.random.Generator,
                  max_eer: Optional[float] = None) -> float:
    return calibrate(policy.template_dim, policy.genuine_noise_sigma, n_pairs, rng, max_eer).tau


def calibrate_sigma(template_dim: int, target_eer: float, n_pairs: int, rng: np.random.Generator,
                    iterations: int = 40) -> float:
    """
    Search the noise level whose per-modality EER equals target_eer. The same
    standard-normal draws are reused at every candidate sigma so the EER
    curve is smooth in sigma.
    """
    z = rng.standard_normal((n_pairs, template_dim)) - rng.standard_normal((n_pairs, template_dim))
    z_norm = np.linalg.norm(z, axis=1)
    u = _unit_rows(rng.standard_normal((n_pairs, template_dim))) - \
        _unit_rows(rng.standard_normal((n_pairs, template_dim)))
    w = rng.standard_normal((n_pairs, template_dim)) - rng.standard_normal((n_pairs, template_dim))

    def eer_at(sigma: float) -> float:
        return compute_eer(sigma * z_norm, np.linalg.norm(u + sigma * w, axis=1))

    lo, hi = SIGMA_SEARCH_RANGE
    if eer_at(lo) > target_eer or eer_at(hi) < target_eer:
        raise CalibrationFailed(f"target EER {target_eer} not reachable for sigma in {SIGMA_SEARCH_RANGE}")
    for _ in range(iterations):
        mid = (lo + hi) / 2.0
        if eer_at(mid) < target_eer:
            lo = mid
        else:
            hi = mid
    sigma = (lo + hi) / 2.0
    logging.info("Calibrated sigma=%.6f for target EER %.4f (d=%d)", sigma, target_eer, template_dim)
    return sigma


def fusion_rates(policy: MatchPolicy, n_pairs: int, rng: np.random.Generator) -> FusionRates:
    """
    Monte Carlo k-of-n fusion rates over n_pairs genuine and n_pairs impostor
    template pairs, with the binomial prediction from the per-modality rates
    measured on the same draws.
    """
    n, d, sigma = policy.n_modalities, policy.template_dim, policy.genuine_noise_sigma
    modality_accepts_genuine = modality_accepts_impostor = 0
    fused_accepts_genuine = fused_accepts_impostor = 0
    done = 0
    while done < n_pairs:
        size = min(CHUNK_PAIRS, n_pairs - done)
        gen = genuine_distances(rng, size * n, d, sigma).reshape(size, n) <= policy.tau
        imp = impostor_distances(rng, size * n, d, sigma).reshape(size, n) <= policy.tau
        modality_accepts_genuine += int(gen.sum())
        modality_accepts_impostor += int(imp.sum())
        fused_accepts_genuine += int(np.count_nonzero(gen.sum(axis=1) >= policy.k_required))
        fused_accepts_impostor += int(np.count_nonzero(imp.sum(axis=1) >= policy.k_required))
        done += size
    modality_far = modality_accepts_impostor / (n_pairs * n)
    modality_frr = 1.0 - modality_accepts_genuine / (n_pairs * n)
    binomial_far, binomial_frr = fused_error_rates(modality_far, modality_frr, n, policy.k_required)
    return FusionRates(
        n_pairs=n_pairs,
        modality_far=modality_far,
        modality_frr=modality_frr,
        fused_far=fused_accepts_impostor / n_pairs,
        fused_frr=1.0 - fused_accepts_genuine / n_pairs,
        binomial_far=binomial_far,
        binomial_frr=binomial_frr,
    )


##################################
# MARK: Deduplication
##################################

class DedupIndex:
    """
    Stacked templates of verified identities for one-to-many duplicate search.
    Reads may run concurrently; writes are serialized.
    """

    def __init__(self, n_modalities: int, template_dim: int, capacity: int = 1024) -> None:
        self._n = n_modalities
        self._d = template_dim
        self._matrix = np.zeros((capacity, n_modalities, template_dim))
        self._owners: List[PersonId] = []
        self._slots: dict = {}
        self._write_lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._owners)

    def __contains__(self, pk: PersonId) -> bool:
        return pk in self._slots

    def add(self, pk: PersonId, template: BiometricTemplate) -> None:
        if template.matrix.shape != (self._n, self._d):
            raise ModalityMismatch(f"template shape {template.matrix.shape} does not fit the index")
        with self._write_lock:
            if pk in self._slots:
                slot = self._slots[pk]
            else:
                slot = len(self._owners)
                if slot == self._matrix.shape[0]:
                    self._grow()
                self._owners.append(pk)
                self._slots[pk] = slot
            self._matrix[slot] = template.matrix

    def remove(self, pk: PersonId) -> bool:
        with self._write_lock:
            slot = self._slots.pop(pk, None)
            if slot is None:
                return False
            last = len(self._owners) - 1
            if slot != last:
                moved = self._owners[last]
                self._matrix[slot] = self._matrix[last]
                self._owners[slot] = moved
                self._slots[moved] = slot
            self._owners.pop()
            return True

    def check(self, template: BiometricTemplate, policy: MatchPolicy) -> List[Tuple[PersonId, bool]]:
        count = len(self._owners)
        if count == 0:
            return []
        if template.matrix.shape != (self._n, self._d):
            raise ModalityMismatch(f"template shape {template.matrix.shape} does not fit the index")
        distances = _distances(self._matrix[:count], template.matrix[None, :, :])
        hits = np.count_nonzero(distances <= policy.tau, axis=1) >= policy.k_required
        return [(self._owners[i], True) for i in np.flatnonzero(hits)]

    def _grow(self) -> None:
        capacity = self._matrix.shape[0] * 2
        matrix = np.zeros((capacity, self._n, self._d))
        matrix[:self._matrix.shape[0]] = self._matrix
        self._matrix = matrix


def dedup_check(new_template: BiometricTemplate, index: DedupIndex, policy: MatchPolicy) -> List[Tuple[PersonId, bool]]:
    """
    One-to-many search of a new claimant against every verified template.

    :return: All flagged collisions; an empty list means the claimant looks fresh.
    """
    return index.check(new_template, policy)


##################################
# MARK: Private functions
##################################

def _unit_rows(matrix: np.ndarray) -> np.ndarray:
    return matrix / np.linalg.norm(matrix, axis=-1, keepdims=True)


def _distances(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    # pairwise matching and the index must both use this expression
    return np.sqrt(np.sum((u - v) ** 2, axis=-1))


def _rates(genuine: np.ndarray, impostor: np.ndarray, tau: float) -> Tuple[float, float]:
    far = np.searchsorted(impostor, tau, side='right') / impostor.size
    frr = 1.0 - np.searchsorted(genuine, tau, side='right') / genuine.size
    return float(far), float(frr)


def _calibrate_sorted(genuine: np.ndarray, impostor: np.ndarray, sigma: float, template_dim: int) -> CalibrationResult:
    lo, hi = 0.0, float(max(genuine[-1], impostor[-1])) + 1e-9
    for _ in range(200):
        if hi - lo <= 1e-12 * max(1.0, hi):
            break
        mid = (lo + hi) / 2.0
        far, frr = _rates(genuine, impostor, mid)
        if far < frr:
            lo = mid
        else:
            hi = mid
    candidates = [(abs(far - frr), -t, t) for t in (lo, hi) for far, frr in [_rates(genuine, impostor, t)]]
    best = min(candidates)[2]
    observed = np.concatenate((genuine, impostor))
    observed.sort(kind='mergesort')
    i = int(np.searchsorted(observed, best, side='right'))
    left = float(observed[i - 1]) if i > 0 else 0.0
    right = float(observed[i]) if i < observed.size else left
    tau = (left + right) / 2.0 if right > left else best
    far, frr = _rates(genuine, impostor, tau)
    return CalibrationResult(tau=tau, far=far, frr=frr, sigma=sigma,
                             template_dim=template_dim, n_pairs=int(genuine.size))
