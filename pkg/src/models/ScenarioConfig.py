"""
Module: ScenarioConfig
Typed scenario configuration. Files use kebab-case keys (see Constants); every
key is optional and falls back to its default. Fractions given in the file are
converted to integer basis points before they reach the ledger.
"""

from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

from src.Constants import *
from src.models.AdversaryPlan import AdversaryPlan
from src.models.TokenAccount import MonetaryParams
from src.utils.Canonical import derive_pk
from src.utils.Errors import ConfigInvalid


def account_pk(name: str) -> str:
    """Public key of a named token account (ICO allocations, the system account)."""
    return derive_pk("account", name)


@dataclass(frozen=True)
class CityConfig:
    city_id: str
    genesis_verifiers: int = DEFAULT_GENESIS_VERIFIERS
    arrival_rate: float = DEFAULT_ARRIVAL_RATE
    max_arrivals: Optional[int] = None
    verifier_trust_threshold: Optional[int] = None

    @staticmethod
    def from_dict(data: dict) -> 'CityConfig':
        if CITY_ID not in data:
            raise ConfigInvalid(CITIES, "every city needs an id")
        max_arrivals = data.get(MAX_ARRIVALS)
        threshold = data.get(VERIFIER_TRUST_THRESHOLD)
        city = CityConfig(
            city_id=str(data[CITY_ID]),
            genesis_verifiers=int(data.get(GENESIS_VERIFIERS, DEFAULT_GENESIS_VERIFIERS)),
            arrival_rate=float(data.get(ARRIVAL_RATE, DEFAULT_ARRIVAL_RATE)),
            max_arrivals=None if max_arrivals is None else int(max_arrivals),
            verifier_trust_threshold=None if threshold is None else int(threshold),
        )
        if city.genesis_verifiers < 0:
            raise ConfigInvalid(GENESIS_VERIFIERS, "must be non-negative")
        if city.arrival_rate < 0:
            raise ConfigInvalid(ARRIVAL_RATE, "must be non-negative")
        return city


@dataclass(frozen=True)
class ProtocolParams:
    """
    Protocol parameters as carried on the ledger. All values are integers;
    shares are basis points. Governance replaces this object through
    ParameterChanged events.
    """
    certs_required: int = DEFAULT_CERTS_REQUIRED
    max_reassignments: int = DEFAULT_MAX_REASSIGNMENTS
    verifier_trust_threshold: int = DEFAULT_VERIFIER_TRUST_THRESHOLD
    city_thresholds: Dict[str, int] = field(default_factory=dict)
    invitations_per_user: int = DEFAULT_INVITATIONS_PER_USER
    sponsor_quota: int = DEFAULT_SPONSOR_QUOTA
    sponsor_window_epochs: int = DEFAULT_SPONSOR_WINDOW_EPOCHS
    recheck_quota: int = DEFAULT_RECHECK_QUOTA
    quota_window_epochs: int = DEFAULT_QUOTA_WINDOW_EPOCHS
    identity_ttl_epochs: int = DEFAULT_IDENTITY_TTL_EPOCHS
    suspension_epochs: int = DEFAULT_SUSPENSION_EPOCHS
    ajudge_deadline_epochs: int = DEFAULT_AJUDGE_DEADLINE_EPOCHS
    ajudge_mode: str = AJUDGE_MAJORITY
    trust_circle_min: int = DEFAULT_TRUST_CIRCLE_MIN
    recovery_quorum_bps: int = int(DEFAULT_RECOVERY_QUORUM * BPS)
    support_retention_bps: int = int(DEFAULT_SUPPORT_RETENTION * BPS)
    community_size: Tuple[int, int] = DEFAULT_COMMUNITY_SIZE
    layer2_size: Tuple[int, int] = DEFAULT_LAYER2_SIZE
    layer3_size: Tuple[int, int] = DEFAULT_LAYER3_SIZE
    importance_classes: Dict[str, Tuple[int, int, int]] = field(
        default_factory=lambda: {name: tuple(_to_bps(v, IMPORTANCE_CLASSES) for v in values)
                                 for name, values in DEFAULT_IMPORTANCE_CLASSES.items()})
    proposal_window_epochs: int = DEFAULT_PROPOSAL_WINDOW_EPOCHS
    governance_term_epochs: int = DEFAULT_GOVERNANCE_TERM_EPOCHS
    monetary: MonetaryParams = field(default_factory=MonetaryParams)
    system_account: str = field(default_factory=lambda: account_pk(SYSTEM_ACCOUNT))
    funding_account: str = field(default_factory=lambda: account_pk(DEFAULT_ICO_ACCOUNT))

    def threshold_for(self, city: str) -> int:
        return self.city_thresholds.get(city, self.verifier_trust_threshold)

    def with_change(self, parameter: str, value: int) -> 'ProtocolParams':
        """Return a copy with one whitelisted parameter replaced."""
        if parameter == CERTS_REQUIRED:
            return replace(self, certs_required=value)
        if parameter == VERIFIER_TRUST_THRESHOLD:
            # a governance change applies uniformly to every city
            return replace(self, verifier_trust_threshold=value,
                           city_thresholds={city: value for city in self.city_thresholds})
        if parameter == BASE_STAKE:
            return replace(self, monetary=replace(self.monetary, base_stake=value))
        if parameter == RECHECK_QUOTA:
            return replace(self, recheck_quota=value)
        if parameter == IDENTITY_TTL_EPOCHS:
            return replace(self, identity_ttl_epochs=value)
        raise KeyError(parameter)

    def validate(self) -> None:
        positive = {
            CERTS_REQUIRED: self.certs_required,
            VERIFIER_TRUST_THRESHOLD: self.verifier_trust_threshold,
            SPONSOR_WINDOW_EPOCHS: self.sponsor_window_epochs,
            QUOTA_WINDOW_EPOCHS: self.quota_window_epochs,
            IDENTITY_TTL_EPOCHS: self.identity_ttl_epochs,
            TRUST_CIRCLE_MIN: self.trust_circle_min,
            PROPOSAL_WINDOW_EPOCHS: self.proposal_window_epochs,
            GOVERNANCE_TERM_EPOCHS: self.governance_term_epochs,
            MINT_PER_VERIFICATION: self.monetary.x,
            SUPPLY_MULTIPLIER: self.monetary.a,
        }
        for key, value in positive.items():
            if value < 1:
                raise ConfigInvalid(key, "must be at least 1")
        non_negative = {
            MAX_REASSIGNMENTS: self.max_reassignments,
            INVITATIONS_PER_USER: self.invitations_per_user,
            SPONSOR_QUOTA: self.sponsor_quota,
            RECHECK_QUOTA: self.recheck_quota,
            SUSPENSION_EPOCHS: self.suspension_epochs,
            AJUDGE_DEADLINE_EPOCHS: self.ajudge_deadline_epochs,
            BASE_STAKE: self.monetary.base_stake,
            VERIFIER_STAKE: self.monetary.verifier_stake,
            AJUDGE_REWARD: self.monetary.ajudge_reward,
        }
        for key, value in non_negative.items():
            if value < 0:
                raise ConfigInvalid(key, "must be non-negative")
        for city, threshold in self.city_thresholds.items():
            if threshold < 1:
                raise ConfigInvalid(VERIFIER_TRUST_THRESHOLD, f"city {city} threshold must be at least 1")
        if self.ajudge_mode not in (AJUDGE_MAJORITY, AJUDGE_UNANIMITY):
            raise ConfigInvalid(AJUDGE_MODE, f"unknown mode {self.ajudge_mode}")
        for key, bounds in ((COMMUNITY_SIZE, self.community_size), (LAYER2_SIZE, self.layer2_size),
                            (LAYER3_SIZE, self.layer3_size)):
            if not 1 <= bounds[0] <= bounds[1]:
                raise ConfigInvalid(key, "bounds must satisfy 1 <= min <= max")
        if not self.importance_classes:
            raise ConfigInvalid(IMPORTANCE_CLASSES, "at least one class is required")
        for name, thresholds in self.importance_classes.items():
            if len(thresholds) != 3:
                raise ConfigInvalid(IMPORTANCE_CLASSES, f"class {name} needs one threshold per layer")

    def to_dict(self) -> dict:
        return {
            CERTS_REQUIRED: self.certs_required,
            MAX_REASSIGNMENTS: self.max_reassignments,
            VERIFIER_TRUST_THRESHOLD: self.verifier_trust_threshold,
            CITY_THRESHOLDS: dict(self.city_thresholds),
            INVITATIONS_PER_USER: self.invitations_per_user,
            SPONSOR_QUOTA: self.sponsor_quota,
            SPONSOR_WINDOW_EPOCHS: self.sponsor_window_epochs,
            RECHECK_QUOTA: self.recheck_quota,
            QUOTA_WINDOW_EPOCHS: self.quota_window_epochs,
            IDENTITY_TTL_EPOCHS: self.identity_ttl_epochs,
            SUSPENSION_EPOCHS: self.suspension_epochs,
            AJUDGE_DEADLINE_EPOCHS: self.ajudge_deadline_epochs,
            AJUDGE_MODE: self.ajudge_mode,
            TRUST_CIRCLE_MIN: self.trust_circle_min,
            RECOVERY_QUORUM: self.recovery_quorum_bps,
            SUPPORT_RETENTION: self.support_retention_bps,
            COMMUNITY_SIZE: list(self.community_size),
            LAYER2_SIZE: list(self.layer2_size),
            LAYER3_SIZE: list(self.layer3_size),
            IMPORTANCE_CLASSES: {name: list(values) for name, values in self.importance_classes.items()},
            PROPOSAL_WINDOW_EPOCHS: self.proposal_window_epochs,
            GOVERNANCE_TERM_EPOCHS: self.governance_term_epochs,
            MONETARY: self.monetary.to_dict(),
            SYSTEM_ACCOUNT: self.system_account,
            FUNDING_ACCOUNT: self.funding_account,
        }

    @staticmethod
    def from_dict(data: dict) -> 'ProtocolParams':
        """Inverse of to_dict; values are already integers and basis points."""
        return ProtocolParams(
            certs_required=data[CERTS_REQUIRED],
            max_reassignments=data[MAX_REASSIGNMENTS],
            verifier_trust_threshold=data[VERIFIER_TRUST_THRESHOLD],
            city_thresholds=dict(data[CITY_THRESHOLDS]),
            invitations_per_user=data[INVITATIONS_PER_USER],
            sponsor_quota=data[SPONSOR_QUOTA],
            sponsor_window_epochs=data[SPONSOR_WINDOW_EPOCHS],
            recheck_quota=data[RECHECK_QUOTA],
            quota_window_epochs=data[QUOTA_WINDOW_EPOCHS],
            identity_ttl_epochs=data[IDENTITY_TTL_EPOCHS],
            suspension_epochs=data[SUSPENSION_EPOCHS],
            ajudge_deadline_epochs=data[AJUDGE_DEADLINE_EPOCHS],
            ajudge_mode=data[AJUDGE_MODE],
            trust_circle_min=data[TRUST_CIRCLE_MIN],
            recovery_quorum_bps=data[RECOVERY_QUORUM],
            support_retention_bps=data[SUPPORT_RETENTION],
            community_size=tuple(data[COMMUNITY_SIZE]),
            layer2_size=tuple(data[LAYER2_SIZE]),
            layer3_size=tuple(data[LAYER3_SIZE]),
            importance_classes={name: tuple(values) for name, values in data[IMPORTANCE_CLASSES].items()},
            proposal_window_epochs=data[PROPOSAL_WINDOW_EPOCHS],
            governance_term_epochs=data[GOVERNANCE_TERM_EPOCHS],
            monetary=MonetaryParams.from_dict(data[MONETARY]),
            system_account=data[SYSTEM_ACCOUNT],
            funding_account=data[FUNDING_ACCOUNT],
        )

    @staticmethod
    def from_config(data: dict, monetary: dict, cities: List[CityConfig], funding_account: str) -> 'ProtocolParams':
        """Build from the kebab-case config sections, converting fractions to basis points."""
        classes = data.get(IMPORTANCE_CLASSES, DEFAULT_IMPORTANCE_CLASSES)
        default_threshold = int(data.get(VERIFIER_TRUST_THRESHOLD, DEFAULT_VERIFIER_TRUST_THRESHOLD))
        params = ProtocolParams(
            certs_required=int(data.get(CERTS_REQUIRED, DEFAULT_CERTS_REQUIRED)),
            max_reassignments=int(data.get(MAX_REASSIGNMENTS, DEFAULT_MAX_REASSIGNMENTS)),
            verifier_trust_threshold=default_threshold,
            city_thresholds={c.city_id: c.verifier_trust_threshold or default_threshold for c in cities},
            invitations_per_user=int(data.get(INVITATIONS_PER_USER, DEFAULT_INVITATIONS_PER_USER)),
            sponsor_quota=int(data.get(SPONSOR_QUOTA, DEFAULT_SPONSOR_QUOTA)),
            sponsor_window_epochs=int(data.get(SPONSOR_WINDOW_EPOCHS, DEFAULT_SPONSOR_WINDOW_EPOCHS)),
            recheck_quota=int(data.get(RECHECK_QUOTA, DEFAULT_RECHECK_QUOTA)),
            quota_window_epochs=int(data.get(QUOTA_WINDOW_EPOCHS, DEFAULT_QUOTA_WINDOW_EPOCHS)),
            identity_ttl_epochs=int(data.get(IDENTITY_TTL_EPOCHS, DEFAULT_IDENTITY_TTL_EPOCHS)),
            suspension_epochs=int(data.get(SUSPENSION_EPOCHS, DEFAULT_SUSPENSION_EPOCHS)),
            ajudge_deadline_epochs=int(data.get(AJUDGE_DEADLINE_EPOCHS, DEFAULT_AJUDGE_DEADLINE_EPOCHS)),
            ajudge_mode=str(data.get(AJUDGE_MODE, AJUDGE_MAJORITY)),
            trust_circle_min=int(data.get(TRUST_CIRCLE_MIN, DEFAULT_TRUST_CIRCLE_MIN)),
            recovery_quorum_bps=_to_bps(data.get(RECOVERY_QUORUM, DEFAULT_RECOVERY_QUORUM), RECOVERY_QUORUM),
            support_retention_bps=_to_bps(data.get(SUPPORT_RETENTION, DEFAULT_SUPPORT_RETENTION), SUPPORT_RETENTION),
            community_size=_bounds(data.get(COMMUNITY_SIZE, DEFAULT_COMMUNITY_SIZE), COMMUNITY_SIZE),
            layer2_size=_bounds(data.get(LAYER2_SIZE, DEFAULT_LAYER2_SIZE), LAYER2_SIZE),
            layer3_size=_bounds(data.get(LAYER3_SIZE, DEFAULT_LAYER3_SIZE), LAYER3_SIZE),
            importance_classes={str(name): tuple(_to_bps(v, IMPORTANCE_CLASSES) for v in values)
                                for name, values in classes.items()},
            proposal_window_epochs=int(data.get(PROPOSAL_WINDOW_EPOCHS, DEFAULT_PROPOSAL_WINDOW_EPOCHS)),
            governance_term_epochs=int(data.get(GOVERNANCE_TERM_EPOCHS, DEFAULT_GOVERNANCE_TERM_EPOCHS)),
            monetary=MonetaryParams.from_dict(monetary),
            funding_account=funding_account,
        )
        params.validate()
        return params


@dataclass(frozen=True)
class BiometricConfig:
    template_dim: int = DEFAULT_TEMPLATE_DIM
    n_modalities: int = DEFAULT_N_MODALITIES
    k_required: int = DEFAULT_K_REQUIRED
    genuine_noise_sigma: float = DEFAULT_GENUINE_NOISE_SIGMA
    tau: Optional[float] = None
    target_eer: float = DEFAULT_TARGET_EER
    max_eer: float = DEFAULT_MAX_EER
    calibration_pairs: int = DEFAULT_CALIBRATION_PAIRS
    calibrate_sigma: bool = False

    @staticmethod
    def from_dict(data: dict) -> 'BiometricConfig':
        tau = data.get(TAU)
        config = BiometricConfig(
            template_dim=int(data.get(TEMPLATE_DIM, DEFAULT_TEMPLATE_DIM)),
            n_modalities=int(data.get(N_MODALITIES, DEFAULT_N_MODALITIES)),
            k_required=int(data.get(K_REQUIRED, DEFAULT_K_REQUIRED)),
            genuine_noise_sigma=float(data.get(GENUINE_NOISE_SIGMA, DEFAULT_GENUINE_NOISE_SIGMA)),
            tau=None if tau is None else float(tau),
            target_eer=float(data.get(TARGET_EER, DEFAULT_TARGET_EER)),
            max_eer=float(data.get(MAX_EER, DEFAULT_MAX_EER)),
            calibration_pairs=int(data.get(CALIBRATION_PAIRS, DEFAULT_CALIBRATION_PAIRS)),
            calibrate_sigma=bool(data.get(CALIBRATE_SIGMA, False)),
        )
        if config.template_dim < 1:
            raise ConfigInvalid(TEMPLATE_DIM, "must be at least 1")
        if config.n_modalities < 1:
            raise ConfigInvalid(N_MODALITIES, "must be at least 1")
        if not 1 <= config.k_required <= config.n_modalities:
            raise ConfigInvalid(K_REQUIRED, "must lie in [1, n-modalities]")
        if config.genuine_noise_sigma < 0:
            raise ConfigInvalid(GENUINE_NOISE_SIGMA, "must be non-negative")
        if config.calibration_pairs < 10:
            raise ConfigInvalid(CALIBRATION_PAIRS, "must be at least 10")
        if not 0.0 < config.target_eer < 0.5:
            raise ConfigInvalid(TARGET_EER, "must lie in (0, 0.5)")
        return config


@dataclass(frozen=True)
class ScheduledProposal:
    epoch: int
    parameter: str
    value: int
    importance: str


@dataclass(frozen=True)
class BehaviourConfig:
    """Stochastic behaviour of the simulated population; none of it reaches the ledger directly."""
    entry_gates: Dict[str, float] = field(default_factory=lambda: {GATE_INVITATION: 1.0})
    random_check_rate: float = 0.0
    honest_recheck_rate: float = 0.0
    betrayal_rate: float = 0.0
    ajudge_show_rate: float = 1.0
    renewal_lead_epochs: int = DEFAULT_RENEWAL_LEAD_EPOCHS
    renewal_participation: float = 1.0
    mortality_rate: float = 0.0
    delegation_rate: float = 1.0
    governance_participation: float = DEFAULT_GOVERNANCE_PARTICIPATION
    ballot_switch_rate: float = 0.0
    candidates_per_community: int = DEFAULT_CANDIDATES_PER_COMMUNITY
    proposal_approval_rate: float = DEFAULT_PROPOSAL_APPROVAL_RATE
    proposals: Tuple[ScheduledProposal, ...] = ()

    @staticmethod
    def from_dict(data: dict) -> 'BehaviourConfig':
        gates = data.get(ENTRY_GATES, {GATE_INVITATION: 1.0})
        for gate, weight in gates.items():
            if gate not in (GATE_INVITATION, GATE_STAKE, GATE_SPONSOR):
                raise ConfigInvalid(ENTRY_GATES, f"unknown gate {gate}")
            if float(weight) < 0:
                raise ConfigInvalid(ENTRY_GATES, f"weight of {gate} must be non-negative")
        proposals = tuple(
            ScheduledProposal(
                epoch=int(p[PROPOSAL_EPOCH]),
                parameter=str(p[PROPOSAL_PARAMETER]),
                value=int(p[PROPOSAL_VALUE]),
                importance=str(p.get(PROPOSAL_IMPORTANCE, CRITICAL)),
            )
            for p in data.get(PROPOSALS) or []
        )
        config = BehaviourConfig(
            entry_gates={str(k): float(v) for k, v in sorted(gates.items())},
            random_check_rate=float(data.get(RANDOM_CHECK_RATE, 0.0)),
            honest_recheck_rate=float(data.get(HONEST_RECHECK_RATE, 0.0)),
            betrayal_rate=float(data.get(BETRAYAL_RATE, 0.0)),
            ajudge_show_rate=float(data.get(AJUDGE_SHOW_RATE, 1.0)),
            renewal_lead_epochs=int(data.get(RENEWAL_LEAD_EPOCHS, DEFAULT_RENEWAL_LEAD_EPOCHS)),
            renewal_participation=float(data.get(RENEWAL_PARTICIPATION, 1.0)),
            mortality_rate=float(data.get(MORTALITY_RATE, 0.0)),
            delegation_rate=float(data.get(DELEGATION_RATE, 1.0)),
            governance_participation=float(data.get(GOVERNANCE_PARTICIPATION, DEFAULT_GOVERNANCE_PARTICIPATION)),
            ballot_switch_rate=float(data.get(BALLOT_SWITCH_RATE, 0.0)),
            candidates_per_community=int(data.get(CANDIDATES_PER_COMMUNITY, DEFAULT_CANDIDATES_PER_COMMUNITY)),
            proposal_approval_rate=float(data.get(PROPOSAL_APPROVAL_RATE, DEFAULT_PROPOSAL_APPROVAL_RATE)),
            proposals=proposals,
        )
        for key in (RANDOM_CHECK_RATE, HONEST_RECHECK_RATE, BETRAYAL_RATE, AJUDGE_SHOW_RATE,
                    RENEWAL_PARTICIPATION, MORTALITY_RATE, DELEGATION_RATE, GOVERNANCE_PARTICIPATION,
                    BALLOT_SWITCH_RATE, PROPOSAL_APPROVAL_RATE):
            value = getattr(config, key.replace('-', '_'))
            if not 0.0 <= value <= 1.0:
                raise ConfigInvalid(key, "must lie in [0, 1]")
        if config.candidates_per_community < 1:
            raise ConfigInvalid(CANDIDATES_PER_COMMUNITY, "must be at least 1")
        return config


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int
    epochs: int
    setup: str
    cities: Tuple[CityConfig, ...]
    protocol: ProtocolParams
    biometric: BiometricConfig
    behaviour: BehaviourConfig
    ico_allocations: Dict[str, int]
    adversary: Optional[AdversaryPlan] = None
    verify_replay: bool = True

    def city(self, city_id: str) -> CityConfig:
        for city in self.cities:
            if city.city_id == city_id:
                return city
        raise KeyError(city_id)

    def allocation_pks(self) -> Dict[str, int]:
        return {account_pk(name): amount for name, amount in sorted(self.ico_allocations.items())}

    def with_adversary(self, plan: Optional[AdversaryPlan]) -> 'ScenarioConfig':
        return replace(self, adversary=plan)

    def with_overrides(self, seed: Optional[int] = None, epochs: Optional[int] = None) -> 'ScenarioConfig':
        return replace(self,
                       seed=self.seed if seed is None else seed,
                       epochs=self.epochs if epochs is None else epochs)

    @staticmethod
    def from_dict(data: Optional[Dict[str, Any]]) -> 'ScenarioConfig':
        data = data or {}
        setup = str(data.get(SETUP, SETUP_P2P))
        if setup not in SETUP_VARIANTS:
            raise ConfigInvalid(SETUP, f"unknown setup variant {setup}")
        epochs = int(data.get(EPOCHS, DEFAULT_EPOCHS))
        if epochs < 0:
            raise ConfigInvalid(EPOCHS, "must be non-negative")
        raw_cities = data.get(CITIES) or [{CITY_ID: DEFAULT}]
        cities = tuple(sorted((CityConfig.from_dict(c) for c in raw_cities), key=lambda c: c.city_id))
        if len({c.city_id for c in cities}) != len(cities):
            raise ConfigInvalid(CITIES, "city ids must be unique")
        monetary = data.get(MONETARY) or {}
        params = MonetaryParams.from_dict(monetary)
        allocations = monetary.get(ICO_ALLOCATIONS) or {DEFAULT_ICO_ACCOUNT: params.genesis_supply}
        allocations = {str(name): int(amount) for name, amount in sorted(allocations.items())}
        if SYSTEM_ACCOUNT in allocations:
            raise ConfigInvalid(ICO_ALLOCATIONS, f"'{SYSTEM_ACCOUNT}' is reserved")
        funding = str(monetary.get(FUNDING_ACCOUNT, next(iter(allocations))))
        if funding not in allocations:
            raise ConfigInvalid(FUNDING_ACCOUNT, f"{funding} has no ICO allocation")
        adversary = data.get(ADVERSARY)
        return ScenarioConfig(
            seed=int(data.get(SEED, DEFAULT_SEED)),
            epochs=epochs,
            setup=setup,
            cities=cities,
            protocol=ProtocolParams.from_config(data.get(PROTOCOL) or {}, monetary, list(cities), account_pk(funding)),
            biometric=BiometricConfig.from_dict(data.get(BIOMETRIC) or {}),
            behaviour=BehaviourConfig.from_dict(data.get(BEHAVIOUR) or {}),
            ico_allocations=allocations,
            adversary=None if not adversary else AdversaryPlan.from_dict(adversary),
            verify_replay=bool(data.get(VERIFY_REPLAY, True)),
        )


##################################
# MARK: Private functions
##################################

def _to_bps(value: Any, key: str) -> int:
    share = float(value)
    if not 0.0 <= share <= 1.0:
        raise ConfigInvalid(key, f"share {share} must lie in [0, 1]")
    return int(round(share * BPS))


def _bounds(value: Any, key: str) -> Tuple[int, int]:
    try:
        low, high = (int(v) for v in value)
    except (TypeError, ValueError):
        raise ConfigInvalid(key, "expected a [min, max] pair")
    return (low, high)
