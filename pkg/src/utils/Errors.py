"""
Module: Errors
Exception hierarchy for the UniqueID protocol simulator. Every operation raises
one of these before appending anything to the ledger, so a failed call never
leaves a partial event suffix behind.
"""

from typing import Optional


class UniqueIdError(Exception):
    """Base class for every domain error raised by the simulator."""


##################################
# MARK: Configuration
##################################

class ConfigError(UniqueIdError):
    pass


class ConfigInvalid(ConfigError):
    def __init__(self, key: str, reason: str) -> None:
        super().__init__(f"invalid configuration value for '{key}': {reason}")
        self.key = key
        self.reason = reason


class InsufficientGenesisVerifiers(ConfigError):
    def __init__(self, city: str, count: int, required: int) -> None:
        super().__init__(f"city {city} has {count} genesis verifiers, {required} required")
        self.city = city
        self.count = count
        self.required = required


class AllocationMismatch(ConfigError):
    def __init__(self, total: int, expected: int) -> None:
        super().__init__(f"genesis allocations sum to {total}, expected a*x = {expected}")
        self.total = total
        self.expected = expected


##################################
# MARK: Ledger
##################################

class LedgerError(UniqueIdError):
    pass


class RejectedEvent(LedgerError):
    def __init__(self, height: int, reason: str) -> None:
        super().__init__(f"event at height {height} rejected: {reason}")
        self.height = height
        self.reason = reason


class ReplayDivergence(LedgerError):
    def __init__(self, live_hash: str, replayed_hash: str) -> None:
        super().__init__(f"replayed state hash {replayed_hash} differs from live {live_hash}")
        self.live_hash = live_hash
        self.replayed_hash = replayed_hash


##################################
# MARK: Biometric
##################################

class BiometricError(UniqueIdError):
    pass


class ModalityMismatch(BiometricError):
    pass


class CalibrationFailed(BiometricError):
    def __init__(self, reason: str, eer: Optional[float] = None) -> None:
        super().__init__(reason)
        self.eer = eer


##################################
# MARK: Registry
##################################

class RegistryError(UniqueIdError):
    pass


class DuplicatePk(RegistryError):
    def __init__(self, pk: str) -> None:
        super().__init__(f"public key {pk[:16]}... already claimed")
        self.pk = pk


class PkInUse(DuplicatePk):
    pass


class GateUnsatisfied(RegistryError):
    def __init__(self, reason: str) -> None:
        super().__init__(f"entry gate unsatisfied: {reason}")
        self.reason = reason


class NoEligibleVerifiersInCity(RegistryError):
    def __init__(self, city: str) -> None:
        super().__init__(f"no eligible verifiers available in city {city}")
        self.city = city


class NotPending(RegistryError):
    pass


class UnknownIdentity(RegistryError):
    def __init__(self, pk: str) -> None:
        super().__init__(f"unknown identity {pk[:16]}...")
        self.pk = pk


class IdentityNotVerified(RegistryError):
    pass


class WrongVerifier(RegistryError):
    pass


class ReassignmentLimitReached(RegistryError):
    pass


class NoRejectionPending(RegistryError):
    pass


class TooFewMembers(RegistryError):
    pass


class UnverifiedMember(RegistryError):
    pass


class SelfInTrustCircle(RegistryError):
    pass


class InsufficientApprovals(RegistryError):
    def __init__(self, approvals: int, required: int) -> None:
        super().__init__(f"{approvals} valid approvals, {required} required")
        self.approvals = approvals
        self.required = required


class NotRecoverable(RegistryError):
    pass


class AlreadyExpired(RegistryError):
    pass


##################################
# MARK: Trust
##################################

class TrustError(UniqueIdError):
    pass


class Unverified(TrustError):
    pass


class SelfDelegation(TrustError):
    pass


##################################
# MARK: Tokens
##################################

class TokenError(UniqueIdError):
    pass


class InsufficientBalance(TokenError):
    def __init__(self, pk: str, balance: int, amount: int) -> None:
        super().__init__(f"account {pk[:16]}... holds {balance}, needs {amount}")
        self.pk = pk
        self.balance = balance
        self.amount = amount


class NoActiveLock(TokenError):
    pass


##################################
# MARK: Governance
##################################

class GovernanceError(UniqueIdError):
    pass


class TooFewVerified(GovernanceError):
    pass


class NoVotesCast(GovernanceError):
    pass


class LayersEmpty(GovernanceError):
    pass


class NotWhitelisted(GovernanceError):
    pass


class NotPassed(GovernanceError):
    pass


##################################
# MARK: Audit
##################################

class AuditError(UniqueIdError):
    pass


class QuotaExhausted(AuditError):
    pass


class NotAuthorized(AuditError):
    pass


class TargetNotVerified(AuditError):
    pass


class TargetUnderAudit(AuditError):
    pass


class DeadlinePassed(AuditError):
    pass


##################################
# MARK: Adversary
##################################

class AdversaryError(UniqueIdError):
    pass


class InvalidCounts(AdversaryError):
    pass


class BudgetExceeded(AdversaryError):
    def __init__(self, required: float, budget: float) -> None:
        super().__init__(f"plan needs {required} but budget is {budget}")
        self.required = required
        self.budget = budget
