"""Cubature rules of higher degree, found by searching for compatible commuting extensions numerically."""
import logging
from dataclasses import dataclass, field
from typing import List, Optional

from commext.cubature.rule import CompatibilityError, CubatureRule, NotPositiveRuleError, rule_from_extension
from commext.cubature.verify import DEFAULT_VERIFY_TOL, VerificationReport, check_rule
from commext.extensions.bounds import BoundReport, bound_report
from commext.extensions.candidate import ExtensionCandidate
from commext.extensions.flow import FlowOptions, gradient_flow
from commext.extensions.objective import ZeroBlockSpec
from commext.extensions.search import MinimizeOptions, minimize_s
from commext.linalg import ConvergenceError
from commext.moments import WeightedDomain, coordinate_matrices, gram_schmidt_basis


logger = logging.getLogger(__name__)

MINIMIZE_S = "minimize_s"
GRADIENT_FLOW = "gradient_flow"
BELOW_BOUND = "below rank bound"


@dataclass(frozen=True)
class SearchOptions:
    methods: tuple = (MINIMIZE_S, GRADIENT_FLOW)
    """Tried in order; the gradient flow starts from the previous method's best candidate when there is one."""
    minimize: MinimizeOptions = field(default_factory=MinimizeOptions)
    flow: FlowOptions = field(default_factory=FlowOptions)
    verify_tol: float = DEFAULT_VERIFY_TOL

    def __post_init__(self):
        unknown = set(self.methods) - {MINIMIZE_S, GRADIENT_FLOW}
        if unknown or not self.methods:
            raise ValueError(f"methods must be a nonempty subset of {(MINIMIZE_S, GRADIENT_FLOW)}, got {self.methods}")


@dataclass
class SearchOutcome:
    success: bool
    reason: str
    bounds: BoundReport
    rule: Optional[CubatureRule] = None
    report: Optional[VerificationReport] = None
    candidate: Optional[ExtensionCandidate] = None
    """the candidate the rule came from, or the best one found"""
    attempts: List[ExtensionCandidate] = field(default_factory=list)


def search_rule(domain: WeightedDomain, q: int, N: int, opts: Optional[SearchOptions] = None) -> SearchOutcome:
    """
    Searches for an N-node rule of degree 2q+1 by looking for an N×N commuting extension of the coordinate matrices
    that leaves the P_{q-1} rows of the added columns zero. Never raises for search failures: the outcome says what
    went wrong and carries the best candidates.
    """
    opts = opts or SearchOptions()
    basis = gram_schmidt_basis(domain, q)
    mats = coordinate_matrices(domain, basis)
    bounds = bound_report(mats)

    if N < bounds.rank_bound:
        reason = f"{BELOW_BOUND}: N={N} < {bounds.rank_bound}"
        logger.info(f"Not searching: {reason}")
        return SearchOutcome(success=False, reason=reason, bounds=bounds)

    spec = ZeroBlockSpec(basis.dim_previous)
    attempts: List[ExtensionCandidate] = []
    reason = "no method ran"
    for method in opts.methods:
        if method == GRADIENT_FLOW:
            if mats.d != 2:
                logger.info(f"Skipping gradient flow: it needs 2 matrices, have {mats.d}")
                continue
            init = attempts[-1].extended if attempts else None
            cand = gradient_flow(mats, N, spec, opts.flow, init=init)
        else:
            cand = minimize_s(mats, N, spec, opts.minimize)
        attempts.append(cand)

        if not cand.converged:
            reason = f"{method} did not converge (S={cand.objective:.3e}, penalty={cand.compat_penalty:.3e})"
            logger.info(reason)
            continue

        try:
            rule = rule_from_extension(cand, basis, domain)
        except (CompatibilityError, NotPositiveRuleError, ConvergenceError) as e:
            reason = f"{method} candidate did not give a rule: {e}"
            logger.info(reason)
            continue

        report = check_rule(rule, mats, domain, opts.verify_tol)
        if not report.passed:
            reason = f"{method} rule failed verification (error {report.max_rel_error:.3e})"
            logger.info(reason)
            continue

        logger.info(f"Found a degree {rule.degree} rule with {rule.num_nodes} nodes using {method}")
        return SearchOutcome(
            success=True, reason="", bounds=bounds, rule=rule, report=report, candidate=cand, attempts=attempts
        )

    best = min(attempts, key=lambda c: c.objective + c.compat_penalty + c.commutator_residual**2, default=None)
    return SearchOutcome(success=False, reason=reason, bounds=bounds, candidate=best, attempts=attempts)
