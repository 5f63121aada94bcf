"""
Checks of a cubature rule against exact moments, and the properties every exact rule built from commuting extensions
must have: a lower bound on its node count and nodes spanning the spectra of the coordinate matrices.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from commext.cubature.rule import CubatureRule
from commext.extensions.bounds import commutator_rank_bound
from commext.linalg import commutator, numerical_rank, sym_eigen
from commext.moments import CoordinateMatrices, GradedBasis, WeightedDomain, graded_monomials, moment, monomial_values


logger = logging.getLogger(__name__)

DEFAULT_VERIFY_TOL = 1e-9
NODE_SPAN_MARGIN = 1e-9


class RuleNotExactError(ValueError):
    pass


@dataclass
class VerificationReport:
    degree: int
    tol: float
    max_abs_error: float
    max_rel_error: float
    """max over monomials of |error| / max(1, |moment|); this is what ``tol`` bounds"""
    worst_monomial: Tuple[int, ...]
    per_degree: Dict[int, float] = field(default_factory=dict)
    """largest absolute error among the monomials of each total degree"""
    num_monomials: int = 0
    node_count_ok: Optional[bool] = None
    node_span_ok: Optional[bool] = None

    @property
    def passed(self) -> bool:
        checks = [self.max_rel_error <= self.tol]
        checks += [ok for ok in (self.node_count_ok, self.node_span_ok) if ok is not None]
        return all(checks)


def verify_rule(
    rule: CubatureRule,
    domain: Optional[WeightedDomain] = None,
    tol: float = DEFAULT_VERIFY_TOL,
    *,
    degree: Optional[int] = None,
) -> VerificationReport:
    """
    Compares Σ_α w_α x_α^m with the exact moment for every monomial x^m of total degree up to ``degree`` (default
    the rule's declared degree). Failures are report content, never exceptions.
    """
    domain = domain if domain is not None else rule.domain
    if domain is None:
        raise ValueError("verify_rule needs a domain")
    if domain.dim != rule.d:
        raise ValueError(f"rule is {rule.d}-dimensional but the domain is {domain.dim}-dimensional")
    degree = rule.degree if degree is None else degree

    monomials = graded_monomials(rule.d, degree)
    approx = rule.weights @ monomial_values(rule.nodes, monomials)
    exact = np.array([moment(domain, m) for m in monomials])
    abs_err = np.abs(approx - exact)
    rel_err = abs_err / np.maximum(1.0, np.abs(exact))

    per_degree: Dict[int, float] = {}
    for m, e in zip(monomials, abs_err):
        deg = sum(m)
        per_degree[deg] = max(per_degree.get(deg, 0.0), float(e))

    worst = int(np.argmax(rel_err))
    report = VerificationReport(
        degree=degree,
        tol=tol,
        max_abs_error=float(np.max(abs_err)),
        max_rel_error=float(rel_err[worst]),
        worst_monomial=tuple(monomials[worst]),
        per_degree=per_degree,
        num_monomials=len(monomials),
    )
    if report.max_rel_error > tol:
        worst_mono = report.worst_monomial
        logger.info(f"Rule is not exact to degree {degree}: error {report.max_rel_error:.3e} on monomial {worst_mono}")
    return report


def _require_exact(rule: CubatureRule, mats: CoordinateMatrices, domain: Optional[WeightedDomain], tol: float) -> int:
    q = len(mats.block_sizes) - 1
    needed = 2 * q + 1
    if rule.degree < needed:
        raise RuleNotExactError(f"rule has degree {rule.degree}, the check needs degree {needed}")
    domain = domain if domain is not None else rule.domain
    if domain is None:
        raise RuleNotExactError("cannot confirm exactness without a domain")
    report = verify_rule(rule, domain, tol, degree=needed)
    if report.max_rel_error > tol:
        raise RuleNotExactError(
            f"rule is not exact to degree {needed} (error {report.max_rel_error:.3e}); the check does not apply"
        )
    return q


def node_count_check(
    rule: CubatureRule,
    mats: CoordinateMatrices,
    domain: Optional[WeightedDomain] = None,
    *,
    tol: float = DEFAULT_VERIFY_TOL,
) -> bool:
    """
    Whether the rule has at least dim P_q + ½ max rank([A_i, A_j]) nodes, as every rule of degree 2q+1 must.

    Raises:
        RuleNotExactError: if the rule is not exact to degree 2q+1.
    """
    _require_exact(rule, mats, domain, tol)
    arr = mats.arrays
    max_rank = 0
    for i in range(mats.d):
        for j in range(i + 1, mats.d):
            c = commutator(arr[i], arr[j])
            if np.any(c):
                max_rank = max(max_rank, numerical_rank(c))
    return rule.num_nodes >= commutator_rank_bound(mats.n, max_rank)


def node_span_check(
    rule: CubatureRule,
    mats: CoordinateMatrices,
    domain: Optional[WeightedDomain] = None,
    *,
    tol: float = DEFAULT_VERIFY_TOL,
    margin: float = NODE_SPAN_MARGIN,
) -> bool:
    """
    Whether, in every coordinate i, some node lies at or below the smallest eigenvalue of A_i and some node at or
    above the largest.

    Raises:
        RuleNotExactError: if the rule is not exact to degree 2q+1.
    """
    _require_exact(rule, mats, domain, tol)
    for i in range(mats.d):
        values, _ = sym_eigen(mats[i])
        coords = rule.nodes[:, i]
        if not (coords.min() <= values[0] + margin and coords.max() >= values[-1] - margin):
            return False
    return True


def delta_identity_error(rule: CubatureRule, basis: GradedBasis, p: np.ndarray) -> float:
    """
    For polynomials p in P_q given by their coordinates in the basis (rows of ``p``), the largest
    |p^T u_α - <ι1|u_α> p(x_α)| over the joint eigenvectors u_α of the rule. Zero for an exact extension.
    """
    if rule.joint is None:
        raise ValueError("rule does not carry the joint eigensystem it was built from")
    p = np.atleast_2d(np.asarray(p, dtype=np.float64))
    if p.shape[1] != basis.n:
        raise ValueError(f"coordinates must have length {basis.n}, got {p.shape[1]}")

    u = rule.joint.vectors[: basis.n]
    projections = p @ u
    first = u[0] / basis.constant_value
    values = basis.evaluate(rule.nodes) @ p.T
    return float(np.max(np.abs(projections - first[None, :] * values.T)))


def check_rule(
    rule: CubatureRule,
    mats: CoordinateMatrices,
    domain: Optional[WeightedDomain] = None,
    tol: float = DEFAULT_VERIFY_TOL,
) -> VerificationReport:
    """verify_rule plus the node-count and node-span checks, which are only filled in when the rule is exact."""
    report = verify_rule(rule, domain, tol)
    try:
        report.node_count_ok = node_count_check(rule, mats, domain, tol=tol)
        report.node_span_ok = node_span_check(rule, mats, domain, tol=tol)
    except RuleNotExactError as e:
        logger.info(f"Skipping node checks: {e}")
    return report
