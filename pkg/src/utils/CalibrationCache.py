"""
Module: CalibrationCache
Disk-memoised calibration. Calibrating tau (and optionally sigma) costs a few
hundred thousand distance draws, and every scenario run with the same
biometric settings and seed would repeat them.
"""

import logging
import os
from typing import Optional, Tuple

import numpy as np
from diskcache import Cache

from src.Constants import *
from src.models.BiometricTemplate import CalibrationResult, FusionRates, MatchPolicy
from src.models.ScenarioConfig import BiometricConfig
from src.protocol.Biometric import calibrate, calibrate_sigma, fusion_rates
from src.utils.Errors import CalibrationFailed

cache = Cache(os.environ.get(ENV_CACHE_DIR, DEFAULT_CACHE_DIR))


@cache.memoize()
def cached_calibration(template_dim: int, sigma: float, n_pairs: int, seed: int) -> CalibrationResult:
    """Tau calibration keyed by (template_dim, sigma, n_pairs, seed)."""
    return calibrate(template_dim, sigma, n_pairs, np.random.default_rng([seed, 0]))


@cache.memoize()
def cached_sigma(template_dim: int, target_eer: float, n_pairs: int, seed: int) -> float:
    return calibrate_sigma(template_dim, target_eer, n_pairs, np.random.default_rng([seed, 1]))


@cache.memoize()
def cached_fusion_rates(policy: MatchPolicy, n_pairs: int, seed: int) -> FusionRates:
    return fusion_rates(policy, n_pairs, np.random.default_rng([seed, 2]))


def build_policy(config: BiometricConfig, seed: int) -> Tuple[MatchPolicy, Optional[CalibrationResult]]:
    """
    Match policy for a scenario. A configured tau is taken as is; otherwise
    tau is calibrated at the (possibly calibrated) noise level.

    :param config: biometric section of the scenario.
    :param seed: scenario seed, keys the calibration draws.
    :return: the policy and the calibration it came from (None for a fixed tau).
    :raises CalibrationFailed: the calibrated EER exceeds max-eer.
    """
    sigma = config.genuine_noise_sigma
    if config.calibrate_sigma:
        sigma = cached_sigma(config.template_dim, config.target_eer, config.calibration_pairs, seed)
    calibration = None
    tau = config.tau
    if tau is None:
        calibration = cached_calibration(config.template_dim, sigma, config.calibration_pairs, seed)
        if calibration.eer > config.max_eer:
            raise CalibrationFailed(f"EER {calibration.eer:.4f} exceeds {config.max_eer}", eer=calibration.eer)
        tau = calibration.tau
    policy = MatchPolicy(tau=tau, n_modalities=config.n_modalities, k_required=config.k_required,
                         genuine_noise_sigma=sigma, template_dim=config.template_dim)
    policy.validate()
    logging.debug("Match policy tau=%.6f sigma=%.6f (%d of %d modalities)", tau, sigma, config.k_required,
                  config.n_modalities)
    return policy, calibration
