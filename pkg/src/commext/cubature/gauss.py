"""Gaussian quadrature as the one-dimensional case: no extension is needed, the Jacobi matrix already commutes."""
import logging

import numpy as np

from commext.cubature.rule import JACOBI_1D, CubatureRule, rule_from_joint_system
from commext.linalg import JointEigenSystem, sym_eigen
from commext.moments import INTERVAL, WeightedDomain, coordinate_matrices, gram_schmidt_basis


logger = logging.getLogger(__name__)


def gauss_1d(domain: WeightedDomain, q: int) -> CubatureRule:
    """
    The (q+1)-point Gaussian rule of degree 2q+1: nodes are the eigenvalues of the Jacobi matrix of x on P_q, and
    each weight is <1|u>^2 for the corresponding unit eigenvector u.
    """
    if domain.dim != 1:
        raise ValueError(f"gauss_1d needs a one-dimensional domain, got {domain.kind} (d={domain.dim})")
    if q < 0:
        raise ValueError(f"q must be nonnegative, got {q}")

    basis = gram_schmidt_basis(domain, q)
    jacobi = coordinate_matrices(domain, basis)[0]
    values, vectors = sym_eigen(jacobi)
    joint = JointEigenSystem(vectors=vectors, values=values[None, :], offdiag_residual=0.0)
    rule = rule_from_joint_system(joint, basis, domain, JACOBI_1D)

    if domain.kind == INTERVAL:
        inside = (rule.nodes[:, 0] > domain.a) & (rule.nodes[:, 0] < domain.b)
        if not np.all(inside):
            logger.warning(f"Gauss nodes outside ({domain.a}, {domain.b}): {rule.nodes[~inside, 0]}")
    return rule
