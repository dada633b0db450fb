"""
Module: Metrics
Per-epoch snapshot of the registry, trust, token, audit and governance state.
One row per simulated epoch ends up in metrics.csv.
"""

from dataclasses import dataclass, fields
from typing import List

from src.models.ApplicationState import ApplicationState
from src.models.Community import ProposalStatus
from src.models.IdentityRecord import IdentityStatus
from src.models.TokenAccount import SupplyStats
from src.protocol import Tokens, Trust


@dataclass
class MetricsRow:
    epoch: int
    height: int
    claims_total: int
    turned_away: int
    verified: int
    pending_entry: int
    pending_verification: int
    revoked: int
    expired: int
    verifiers: int
    eligible_verifiers: int
    delegated_share: float
    supply: SupplyStats
    calls_opened: int
    calls_passed: int
    calls_failed: int
    calls_missed: int
    tokens_slashed: int
    duplicates_confirmed: int
    duplicates_cleared: int
    governance_term: int
    communities: int
    representatives: int
    proposals_passed: int
    proposals_failed: int
    certs_required: int

    def to_dict(self) -> dict:
        row = {f.name: getattr(self, f.name) for f in fields(self) if f.name != 'supply'}
        row.update(self.supply.to_dict())
        return row

    @staticmethod
    def fieldnames() -> List[str]:
        names = [f.name for f in fields(MetricsRow) if f.name != 'supply']
        return names + SupplyStats.fieldnames()


def collect_metrics(state: ApplicationState, epoch: int, turned_away: int, ico_accounts=()) -> MetricsRow:
    registry = state.registry
    verified = registry.count(IdentityStatus.VERIFIED)
    delegated = sum(1 for pk in state.trust.delegations
                    if pk in registry.identities and registry.identities[pk].status == IdentityStatus.VERIFIED)
    governance = state.governance
    statuses = [p.status for p in governance.proposals.values()]
    return MetricsRow(
        epoch=epoch,
        height=state.height,
        claims_total=registry.claims_total,
        turned_away=turned_away,
        verified=verified,
        pending_entry=registry.count(IdentityStatus.PENDING_ENTRY),
        pending_verification=registry.count(IdentityStatus.PENDING_VERIFICATION),
        revoked=registry.count(IdentityStatus.REVOKED),
        expired=registry.count(IdentityStatus.EXPIRED),
        verifiers=len(registry.verifiers),
        eligible_verifiers=sum(len(Trust.eligible_verifiers(state, city, epoch))
                               for city in sorted(state.params.city_thresholds)),
        delegated_share=delegated / verified if verified else 0.0,
        supply=Tokens.supply_stats(state, tuple(ico_accounts)),
        calls_opened=state.audit.opened,
        calls_passed=state.audit.passed,
        calls_failed=state.audit.failed,
        calls_missed=state.audit.missed,
        tokens_slashed=state.tokens.slashed,
        duplicates_confirmed=state.audit.duplicates_confirmed,
        duplicates_cleared=state.audit.duplicates_cleared,
        governance_term=governance.term,
        communities=len(governance.layers.get(1, [])),
        representatives=len(governance.layer_representatives(1)),
        proposals_passed=sum(1 for s in statuses if s in (ProposalStatus.PASSED, ProposalStatus.APPLIED)),
        proposals_failed=sum(1 for s in statuses if s == ProposalStatus.FAILED),
        certs_required=state.params.certs_required,
    )
