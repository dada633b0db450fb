# Default Values
DEFAULT = "default"
DELIMITER = ","
CONFIG_FLAG = "-c"
DEFAULT_OUTPUT_FOLDER = "output"
DEFAULT_CACHE_DIR = "cache/calibration"
ENV_SIM_THREADS = "UNIQUEID_SIM_THREADS"
ENV_CACHE_DIR = "UNIQUEID_CACHE_DIR"
BPS = 10_000  # basis points per unit

# Exit codes
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

###################
# scenario keys
SEED = "seed"
EPOCHS = "epochs"
SETUP = "setup"
CITIES = "cities"
CITY_ID = "id"
GENESIS_VERIFIERS = "genesis-verifiers"
ARRIVAL_RATE = "arrival-rate"
MAX_ARRIVALS = "max-arrivals"
PROTOCOL = "protocol"
MONETARY = "monetary"
BIOMETRIC = "biometric"
BEHAVIOUR = "behaviour"
ADVERSARY = "adversary"
OUTPUT = "output"
VERIFY_REPLAY = "verify-replay"

SETUP_P2P = "p2p"
SETUP_FAMOUS_PEOPLE = "famous-people"
SETUP_CAPTCHA_PARTY = "captcha-party"
SETUP_VARIANTS = (SETUP_P2P, SETUP_FAMOUS_PEOPLE, SETUP_CAPTCHA_PARTY)

DEFAULT_SEED = 42
DEFAULT_EPOCHS = 20
DEFAULT_GENESIS_VERIFIERS = 10
DEFAULT_ARRIVAL_RATE = 10.0

###################
# protocol parameter keys
CERTS_REQUIRED = "certs-required"
MAX_REASSIGNMENTS = "max-reassignments"
VERIFIER_TRUST_THRESHOLD = "verifier-trust-threshold"
INVITATIONS_PER_USER = "invitations-per-user"
SPONSOR_QUOTA = "sponsor-quota"
SPONSOR_WINDOW_EPOCHS = "sponsor-window-epochs"
RECHECK_QUOTA = "recheck-quota"
QUOTA_WINDOW_EPOCHS = "quota-window-epochs"
IDENTITY_TTL_EPOCHS = "identity-ttl-epochs"
SUSPENSION_EPOCHS = "suspension-epochs"
AJUDGE_DEADLINE_EPOCHS = "ajudge-deadline-epochs"
AJUDGE_MODE = "ajudge-mode"
TRUST_CIRCLE_MIN = "trust-circle-min"
RECOVERY_QUORUM = "recovery-quorum"
SUPPORT_RETENTION = "support-retention"
COMMUNITY_SIZE = "community-size"
LAYER2_SIZE = "layer2-size"
LAYER3_SIZE = "layer3-size"
IMPORTANCE_CLASSES = "importance-classes"
PROPOSAL_WINDOW_EPOCHS = "proposal-window-epochs"
GOVERNANCE_TERM_EPOCHS = "governance-term-epochs"
CITY_THRESHOLDS = "city-thresholds"

DEFAULT_CERTS_REQUIRED = 3
DEFAULT_MAX_REASSIGNMENTS = 3
DEFAULT_VERIFIER_TRUST_THRESHOLD = 10
DEFAULT_INVITATIONS_PER_USER = 2
DEFAULT_SPONSOR_QUOTA = 5
DEFAULT_SPONSOR_WINDOW_EPOCHS = 30
DEFAULT_RECHECK_QUOTA = 2
DEFAULT_QUOTA_WINDOW_EPOCHS = 4
DEFAULT_IDENTITY_TTL_EPOCHS = 52
DEFAULT_SUSPENSION_EPOCHS = 26
DEFAULT_AJUDGE_DEADLINE_EPOCHS = 4
DEFAULT_TRUST_CIRCLE_MIN = 5
DEFAULT_RECOVERY_QUORUM = 0.5  # strictly more than this share of the circle
DEFAULT_SUPPORT_RETENTION = 0.8
DEFAULT_COMMUNITY_SIZE = (50, 100)
DEFAULT_LAYER2_SIZE = (30, 40)
DEFAULT_LAYER3_SIZE = (20, 30)
DEFAULT_PROPOSAL_WINDOW_EPOCHS = 2
DEFAULT_GOVERNANCE_TERM_EPOCHS = 26

AJUDGE_MAJORITY = "majority"
AJUDGE_UNANIMITY = "unanimity"

CRITICAL = "critical"
ROUTINE = "routine"
DEFAULT_IMPORTANCE_CLASSES = {
    CRITICAL: (0.68, 0.85, 0.95),
    ROUTINE: (0.51, 0.60, 0.66),
}

###################
# monetary keys
SUPPLY_MULTIPLIER = "a"
MINT_PER_VERIFICATION = "x"
BASE_STAKE = "base-stake"
VERIFIER_STAKE = "verifier-stake"
AJUDGE_REWARD = "ajudge-reward"
ICO_ALLOCATIONS = "ico-allocations"
FUNDING_ACCOUNT = "funding-account"

DEFAULT_SUPPLY_MULTIPLIER = 1000
DEFAULT_MINT_PER_VERIFICATION = 100
DEFAULT_BASE_STAKE = 10
DEFAULT_VERIFIER_STAKE = 100
DEFAULT_AJUDGE_REWARD = 10
DEFAULT_ICO_ACCOUNT = "treasury"
SYSTEM_ACCOUNT = "system"

# parameters governance may change at runtime
WHITELISTED_PARAMETERS = (
    CERTS_REQUIRED,
    VERIFIER_TRUST_THRESHOLD,
    BASE_STAKE,
    RECHECK_QUOTA,
    IDENTITY_TTL_EPOCHS,
)

###################
# biometric keys
TEMPLATE_DIM = "template-dim"
N_MODALITIES = "n-modalities"
K_REQUIRED = "k-required"
GENUINE_NOISE_SIGMA = "genuine-noise-sigma"
TAU = "tau"
TARGET_EER = "target-eer"
MAX_EER = "max-eer"
CALIBRATION_PAIRS = "calibration-pairs"
CALIBRATE_SIGMA = "calibrate-sigma"

DEFAULT_TEMPLATE_DIM = 16
DEFAULT_N_MODALITIES = 4
DEFAULT_K_REQUIRED = 3
DEFAULT_GENUINE_NOISE_SIGMA = 0.08
DEFAULT_TARGET_EER = 0.01
DEFAULT_MAX_EER = 0.02
DEFAULT_CALIBRATION_PAIRS = 20_000
DEFAULT_FUSION_PAIRS = 1_000_000
SIGMA_SEARCH_RANGE = (1e-4, 1.0)

###################
# behaviour keys
ENTRY_GATES = "entry-gates"
GATE_INVITATION = "invitation"
GATE_STAKE = "stake"
GATE_SPONSOR = "sponsor"
GATE_GENESIS = "genesis"
GATE_RECOVERY = "recovery"
RANDOM_CHECK_RATE = "random-check-rate"
HONEST_RECHECK_RATE = "honest-recheck-rate"
BETRAYAL_RATE = "betrayal-rate"
AJUDGE_SHOW_RATE = "ajudge-show-rate"
RENEWAL_LEAD_EPOCHS = "renewal-lead-epochs"
RENEWAL_PARTICIPATION = "renewal-participation"
MORTALITY_RATE = "mortality-rate"
DELEGATION_RATE = "delegation-rate"
GOVERNANCE_PARTICIPATION = "governance-participation"
BALLOT_SWITCH_RATE = "ballot-switch-rate"
CANDIDATES_PER_COMMUNITY = "candidates-per-community"
PROPOSAL_APPROVAL_RATE = "proposal-approval-rate"
PROPOSALS = "proposals"
PROPOSAL_EPOCH = "epoch"
PROPOSAL_PARAMETER = "parameter"
PROPOSAL_VALUE = "value"
PROPOSAL_IMPORTANCE = "importance"

DEFAULT_RENEWAL_LEAD_EPOCHS = 4
DEFAULT_GOVERNANCE_PARTICIPATION = 0.9
DEFAULT_CANDIDATES_PER_COMMUNITY = 3
DEFAULT_PROPOSAL_APPROVAL_RATE = 0.9

###################
# adversary keys
STRATEGY = "strategy"
CORRUPTED_VERIFIERS = "corrupted-verifiers"
CORRUPT_COUNT = "corrupt-count"
CORRUPT_CITY = "corrupt-city"
CORRUPT_SELECTION = "corrupt-selection"
BRIBE_COST = "bribe-cost-per-verifier"
ATTEMPTS = "attempts"
ATTEMPTS_PER_EPOCH = "attempts-per-epoch"
BUDGET = "budget"
ADVERSARY_GATE = "gate"
GRIND = "grind"
AUDIT_RESPONSE = "audit-response"
AUDIT_PROBABILITY = "audit-probability"

SELECTION_RANDOM = "random"
SELECTION_LOWEST_WEIGHT = "lowest-weight"
RESPONSE_APPEAR = "appear"
RESPONSE_ABSCOND = "abscond"
DEFAULT_ATTEMPTS_PER_EPOCH = 1000
DEFAULT_BRIBE_COST = 1000.0
DEFAULT_AUDIT_PROBABILITY = 0.1

###################
# event kinds
GENESIS_CONFIGURED = "GenesisConfigured"
GENESIS_ALLOCATED = "GenesisAllocated"
GENESIS_IDENTITY_REGISTERED = "GenesisIdentityRegistered"
BEACON_ADVANCED = "BeaconAdvanced"
IDENTITY_CLAIMED = "IdentityClaimed"
DEDUP_ADJUDICATED = "DedupAdjudicated"
VERIFIER_ASSIGNED = "VerifierAssigned"
ASSIGNMENT_VOIDED = "AssignmentVoided"
CERTIFICATE_ISSUED = "CertificateIssued"
CERTIFICATE_REJECTED = "CertificateRejected"
IDENTITY_VERIFIED = "IdentityVerified"
IDENTITY_REVOKED = "IdentityRevoked"
IDENTITY_EXPIRED = "IdentityExpired"
TRUST_CIRCLE_DECLARED = "TrustCircleDeclared"
IDENTITY_RECOVERED = "IdentityRecovered"
RENEWAL_CERTIFIED = "RenewalCertified"
RENEWAL_REJECTED = "RenewalRejected"
VERIFIER_REGISTERED = "VerifierRegistered"
TRUST_DELEGATED = "TrustDelegated"
TRUST_SUSPENDED = "TrustSuspended"
TOKENS_MINTED = "TokensMinted"
TOKENS_TRANSFERRED = "TokensTransferred"
STAKE_LOCKED = "StakeLocked"
STAKE_RETURNED = "StakeReturned"
STAKE_FORFEITED = "StakeForfeited"
STAKE_SLASHED = "StakeSlashed"
AJUDGE_CALLED = "AJudgeCalled"
AJUDGE_ADJUDICATED = "AJudgeAdjudicated"
AJUDGE_MISSED = "AJudgeMissed"
COMMUNITIES_FORMED = "CommunitiesFormed"
BALLOTS_CAST = "BallotsCast"
BALLOT_CHANGED = "BallotChanged"
REPRESENTATIVE_ELECTED = "RepresentativeElected"
REPRESENTATIVE_INVALIDATED = "RepresentativeInvalidated"
LAYER_FORMED = "LayerFormed"
PROPOSAL_OPENED = "ProposalOpened"
PROPOSAL_VOTES_CAST = "ProposalVotesCast"
PROPOSAL_TALLIED = "ProposalTallied"
PARAMETER_CHANGED = "ParameterChanged"

# revocation reasons
REASON_VERIFICATION_FAILED = "verification_failed"
REASON_DUPLICATE = "duplicate"
REASON_FAILED_FAKE = "failed_fake"
REASON_MISSED_DEADLINE = "missed_deadline"

# lock reasons
LOCK_ENTRY_GATE = "entry-gate"
LOCK_VERIFIER = "verifier-stake"

# mint reasons
MINT_VERIFICATION = "verification"
MINT_AJUDGE_REWARD = "ajudge-reward"

# output files
LEDGER_FILE = "ledger.jsonl"
METRICS_FILE = "metrics.csv"
REPORT_FILE = "report.json"
REGISTRY_FILE = "registry.json"
FRONTIER_FILE = "frontier.csv"
CALIBRATION_FILE = "calibration.json"
