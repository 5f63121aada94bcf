import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from jaxtyping import Float

from commext.extensions.candidate import ExtensionCandidate
from commext.linalg import JointEigenSystem, NotCommutingError, simultaneous_diagonalize
from commext.moments import GradedBasis, WeightedDomain


logger = logging.getLogger(__name__)

RADON_CLOSED_FORM = "radon_closed_form"
EXTENSION_SEARCH = "extension_search"
JACOBI_1D = "jacobi_1d"
PROVENANCES = (RADON_CLOSED_FORM, EXTENSION_SEARCH, JACOBI_1D)

# weights below -NEGATIVE_WEIGHT_TOL * Σ|w| make a rule invalid
NEGATIVE_WEIGHT_TOL = 1e-12
DEFAULT_WEIGHT_FLOOR = 1e-12


class NotPositiveRuleError(ValueError):
    pass


class CompatibilityError(ValueError):
    pass


@dataclass
class CubatureRule:
    """
    Nodes x_α (rows of ``nodes``) and positive weights w_α approximating ∫ f ≈ Σ_α w_α f(x_α), declared exact for
    polynomials of total degree up to ``degree``.
    """

    d: int
    nodes: Float[np.ndarray, "N d"]
    weights: Float[np.ndarray, " N"]
    degree: int
    provenance: str
    domain: Optional[WeightedDomain] = None
    info: Dict[str, Any] = field(default_factory=dict)
    joint: Optional[JointEigenSystem] = field(default=None, repr=False, compare=False)
    """The joint eigensystem the rule was read off, when it came from one."""

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=np.float64).reshape(-1, self.d)
        self.weights = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        if self.nodes.shape[0] != self.weights.shape[0]:
            raise ValueError(f"{self.nodes.shape[0]} nodes but {self.weights.shape[0]} weights")
        if self.degree < 0:
            raise ValueError(f"degree must be nonnegative, got {self.degree}")
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}, expected one of {PROVENANCES}")
        if not np.all(np.isfinite(self.nodes)) or not np.all(np.isfinite(self.weights)):
            raise ValueError("nodes and weights must be finite")
        total = float(np.sum(np.abs(self.weights)))
        if self.weights.size and float(np.min(self.weights)) < -NEGATIVE_WEIGHT_TOL * total:
            raise NotPositiveRuleError(f"not a positive rule: smallest weight {np.min(self.weights):.3e}")

    @property
    def num_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.weights))

    def integrate(self, f) -> float:
        """Σ_α w_α f(x_α) for f taking an (N, d) array of points."""
        return float(np.dot(self.weights, np.asarray(f(self.nodes), dtype=np.float64)))

    def with_info(self, **info) -> "CubatureRule":
        return dataclasses.replace(self, info={**self.info, **info})


def _weights_from_vectors(vectors: np.ndarray, constant_value: float) -> np.ndarray:
    # ι1 = e_1 / constant_value, so <ι1|u_α> is the first entry of u_α over the constant
    return (vectors[0] / constant_value) ** 2


def rule_from_joint_system(
    joint: JointEigenSystem,
    basis: GradedBasis,
    domain: Optional[WeightedDomain],
    provenance: str,
    *,
    weight_floor: float = DEFAULT_WEIGHT_FLOOR,
    info: Optional[Dict[str, Any]] = None,
) -> CubatureRule:
    """Nodes are the joint eigenvalue tuples, weights ((u_α)_1 / e_1)^2."""
    weights = _weights_from_vectors(joint.vectors, basis.constant_value)
    total = float(np.sum(weights))
    small = np.flatnonzero(weights <= weight_floor * total)
    if small.size:
        logger.warning(f"{small.size} node(s) carry negligible weight (<= {weight_floor:.0e} of the total): {small}")

    return CubatureRule(
        d=basis.d,
        nodes=joint.tuples,
        weights=weights,
        degree=2 * basis.q + 1,
        provenance=provenance,
        domain=domain,
        info=dict(info or {}),
        joint=joint,
    )


def rule_from_extension(
    c: ExtensionCandidate,
    basis: GradedBasis,
    domain: Optional[WeightedDomain] = None,
    *,
    provenance: str = EXTENSION_SEARCH,
    compat_tol: Optional[float] = None,
    commute_tol: Optional[float] = None,
    weight_floor: float = DEFAULT_WEIGHT_FLOOR,
) -> CubatureRule:
    """
    Reads a cubature rule of degree 2q+1 off a compatible commuting extension of the coordinate matrices: the nodes
    are the joint eigenvalue tuples of the Ã_i and each weight is the squared first entry of the joint eigenvector
    divided by the constant basis value.

    ``compat_tol`` bounds both S and the squared entries in the forbidden block (rows of P_{q-1} against added
    columns); it defaults to 1e-10 Σ_i ||A_i||_F^2. ``commute_tol`` bounds the pairwise commutator norms and
    defaults to 1e-8 max_i ||Ã_i||_F^2.

    Raises:
        CompatibilityError: if the extension does not reproduce the A_i, touches the forbidden block, or does not
            commute.
        NotPositiveRuleError: if a weight is negative beyond rounding.
    """
    if c.n != basis.n or c.d != basis.d:
        raise ValueError(f"candidate is for n={c.n}, d={c.d} but the basis has n={basis.n}, d={basis.d}")

    ext = np.asarray(c.extended)
    scale = max(float(np.sum(ext[:, : c.n, : c.n] ** 2)), 1.0)
    compat_tol = compat_tol if compat_tol is not None else 1e-10 * scale
    rows = basis.dim_previous
    penalty = float(np.sum(ext[:, :rows, c.n :] ** 2))
    if c.objective > compat_tol:
        raise CompatibilityError(f"extension does not reproduce the coordinate matrices: S = {c.objective:.3e}")
    if penalty > compat_tol:
        raise CompatibilityError(
            f"compatibility violated: forbidden block has squared norm {penalty:.3e} > {compat_tol:.3e}"
        )

    try:
        joint = simultaneous_diagonalize(ext, commute_tol=commute_tol)
    except NotCommutingError as e:
        raise CompatibilityError(f"extension does not commute: {e}") from e

    return rule_from_joint_system(
        joint,
        basis,
        domain,
        provenance,
        weight_floor=weight_floor,
        info={"N": c.N, "objective": c.objective, "penalty": penalty, "commutator_residual": c.commutator_residual},
    )


def diametrical_pairs(rule: CubatureRule, tol: float = 1e-8) -> List[Tuple[int, int]]:
    """Pairs of nodes (i, j), i < j, with x_i + x_j = 0 within ``tol``. Each node is in at most one pair."""
    used = set()
    pairs = []
    for i in range(rule.num_nodes):
        if i in used:
            continue
        for j in range(i + 1, rule.num_nodes):
            if j in used:
                continue
            if float(np.max(np.abs(rule.nodes[i] + rule.nodes[j]))) <= tol:
                if float(np.max(np.abs(rule.nodes[i]))) <= tol:
                    continue
                pairs.append((i, j))
                used.update((i, j))
                break
    return pairs
