"""
JSON and CSV records for rules, candidates and reports.

JSON floats are written with Python's shortest round-trip repr, so reading a file back gives the identical binary64
values. Nothing time-dependent goes into a record: the same inputs always produce the same bytes.
"""
import dataclasses
import io
import json
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import fsspec
import numpy as np
from dataclasses_json import dataclass_json

from commext.cubature.rule import PROVENANCES, CubatureRule
from commext.cubature.verify import VerificationReport
from commext.extensions.bounds import BoundReport
from commext.extensions.candidate import ExtensionCandidate
from commext.moments import UnsupportedDomainError, WeightedDomain


logger = logging.getLogger(__name__)


class RuleFormatError(ValueError):
    def __init__(self, message: str, *, line: Optional[int] = None, column: Optional[int] = None, path: str = ""):
        where = []
        if line is not None:
            where.append(f"line {line}, column {column}")
        if path:
            where.append(f"field {path!r}")
        super().__init__(f"{message} ({'; '.join(where)})" if where else message)
        self.line = line
        self.column = column
        self.path = path


def plain(obj: Any) -> Any:
    """Converts numpy scalars and arrays (also inside dicts, lists and tuples) to plain python values."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


@dataclass_json
@dataclass
class VerificationRecord:
    max_error: float
    tol: float
    passed: bool
    max_abs_error: float = 0.0
    worst_monomial: List[int] = dataclasses.field(default_factory=list)
    per_degree: Dict[str, float] = dataclasses.field(default_factory=dict)
    node_count_ok: Optional[bool] = None
    node_span_ok: Optional[bool] = None

    @staticmethod
    def from_report(report: VerificationReport) -> "VerificationRecord":
        return VerificationRecord(
            max_error=report.max_rel_error,
            tol=report.tol,
            passed=report.passed,
            max_abs_error=report.max_abs_error,
            worst_monomial=list(report.worst_monomial),
            per_degree={str(k): v for k, v in sorted(report.per_degree.items())},
            node_count_ok=report.node_count_ok,
            node_span_ok=report.node_span_ok,
        )


@dataclass_json
@dataclass
class RuleRecord:
    domain: Dict[str, Any]
    degree: int
    nodes: List[List[float]]
    weights: List[float]
    provenance: str
    verification: Optional[VerificationRecord] = None
    info: Dict[str, Any] = dataclasses.field(default_factory=dict)


@dataclass_json
@dataclass
class CandidateRecord:
    n: int
    N: int
    d: int
    Q: List[List[float]]
    """the n×N factor, row-major"""
    completion: List[List[float]]
    """the remaining N-n rows of Q̃"""
    lambdas: List[List[float]]
    residuals: Dict[str, float]
    seed: Optional[int]
    sweeps: int
    method: str = ""
    converged: bool = False
    zero_block_rows: int = 0
    history: List[float] = dataclasses.field(default_factory=list)
    diagnostic: str = ""


@dataclass_json
@dataclass
class SolveReport:
    success: bool
    reason: str
    method: str
    domain: Dict[str, Any]
    q: int
    N: Optional[int]
    verification: Optional[VerificationRecord] = None
    bounds: Dict[str, Any] = dataclasses.field(default_factory=dict)
    extension: Dict[str, Any] = dataclasses.field(default_factory=dict)
    diametrical_pairs: List[List[int]] = dataclasses.field(default_factory=list)


@dataclass_json
@dataclass
class VerifyReport:
    rule_file: str
    domain: Dict[str, Any]
    degree: int
    num_nodes: int
    passed: bool
    verification: VerificationRecord


def bounds_to_dict(bounds: BoundReport) -> Dict[str, Any]:
    return {
        "n": bounds.n,
        "d": bounds.d,
        "q": bounds.q,
        "commutator_ranks": {f"{i},{j}": r for (i, j), r in sorted(bounds.commutator_ranks.items())},
        "bounds": {name: {"value": value, "label": label} for name, value, label in bounds.rows()},
        "recommended_N": bounds.recommended_N,
    }


def rule_to_record(rule: CubatureRule, report: Optional[VerificationReport] = None) -> RuleRecord:
    return RuleRecord(
        domain=rule.domain.to_dict() if rule.domain is not None else {},
        degree=rule.degree,
        nodes=plain(rule.nodes),
        weights=plain(rule.weights),
        provenance=rule.provenance,
        verification=VerificationRecord.from_report(report) if report is not None else None,
        info=plain(rule.info),
    )


def rule_to_json(rule: CubatureRule, report: Optional[VerificationReport] = None) -> str:
    return rule_to_record(rule, report).to_json(indent=2)  # type: ignore


def _load_json(text: str) -> Dict[str, Any]:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise RuleFormatError(f"malformed JSON: {e.msg}", line=e.lineno, column=e.colno) from e
    if not isinstance(obj, dict):
        raise RuleFormatError("top level must be an object")
    return obj


def _require(obj: Dict[str, Any], key: str, kind, path: str = ""):
    full = f"{path}.{key}" if path else key
    if key not in obj:
        raise RuleFormatError("missing field", path=full)
    value = obj[key]
    if not isinstance(value, kind) or (isinstance(value, bool) and kind is not bool):
        raise RuleFormatError(f"expected {getattr(kind, '__name__', kind)}, got {type(value).__name__}", path=full)
    return value


def _number_rows(value, path: str, width: Optional[int] = None) -> np.ndarray:
    if not isinstance(value, list):
        raise RuleFormatError("expected a list", path=path)
    for i, row in enumerate(value):
        if isinstance(row, list):
            entries = [(f"{path}[{i}][{j}]", x) for j, x in enumerate(row)]
        else:
            entries = [(f"{path}[{i}]", row)]
        for where, x in entries:
            if isinstance(x, bool) or not isinstance(x, (int, float)):
                raise RuleFormatError(f"expected a number, got {x!r}", path=where)
        if width is not None and isinstance(row, list) and len(row) != width:
            raise RuleFormatError(f"expected {width} coordinates, got {len(row)}", path=f"{path}[{i}]")
    return np.asarray(value, dtype=np.float64)


def rule_from_json(text: str) -> CubatureRule:
    """
    Parses a rule file.

    Raises:
        RuleFormatError: with the line and column of a JSON syntax error, or the path of the offending field.
    """
    obj = _load_json(text)
    domain_dict = _require(obj, "domain", dict)
    try:
        domain = WeightedDomain.from_dict(domain_dict)
    except (UnsupportedDomainError, TypeError) as e:
        raise RuleFormatError(str(e), path="domain") from e

    degree = _require(obj, "degree", int)
    provenance = _require(obj, "provenance", str)
    if provenance not in PROVENANCES:
        raise RuleFormatError(f"unknown provenance {provenance!r}", path="provenance")
    nodes = _number_rows(_require(obj, "nodes", list), "nodes", width=domain.dim)
    weights = _number_rows(_require(obj, "weights", list), "weights")
    if weights.ndim != 1:
        raise RuleFormatError("expected a flat list of numbers", path="weights")
    if weights.shape[0] != nodes.reshape(-1, domain.dim).shape[0]:
        raise RuleFormatError(f"{len(weights)} weights for {len(nodes)} nodes", path="weights")

    info = obj.get("info", {})
    try:
        return CubatureRule(
            d=domain.dim,
            nodes=nodes.reshape(-1, domain.dim),
            weights=weights,
            degree=degree,
            provenance=provenance,
            domain=domain,
            info=info if isinstance(info, dict) else {},
        )
    except ValueError as e:
        raise RuleFormatError(str(e), path="weights") from e


def rule_to_csv(rule: CubatureRule) -> str:
    """One node per row, the weight in the last column, 17 significant digits."""
    buf = io.StringIO()
    header = ",".join([f"x{i + 1}" for i in range(rule.d)] + ["weight"])
    table = np.column_stack([rule.nodes, rule.weights])
    np.savetxt(buf, table, fmt="%.17g", delimiter=",", header=header, comments="")
    return buf.getvalue()


def candidate_to_record(c: ExtensionCandidate) -> CandidateRecord:
    return CandidateRecord(
        n=c.n,
        N=c.N,
        d=c.d,
        Q=plain(c.Q),
        completion=plain(c.completion),
        lambdas=plain(c.lambdas),
        residuals={
            "objective": c.objective,
            "compat_penalty": c.compat_penalty,
            "commutator_residual": c.commutator_residual,
        },
        seed=c.seed,
        sweeps=c.sweeps,
        method=c.method,
        converged=c.converged,
        zero_block_rows=c.zero_block_rows,
        history=list(c.history),
        diagnostic=c.diagnostic,
    )


def candidate_to_json(c: ExtensionCandidate) -> str:
    return candidate_to_record(c).to_json(indent=2)  # type: ignore


def candidate_from_json(text: str) -> ExtensionCandidate:
    """Rebuilds a candidate from its record. The extended matrices are recomputed as Q̃ Λ_i Q̃^T."""
    obj = _load_json(text)
    for key in ("n", "N", "d", "Q", "completion", "lambdas", "residuals"):
        if key not in obj:
            raise RuleFormatError("missing field", path=key)
    record: CandidateRecord = CandidateRecord.from_dict(obj)  # type: ignore

    top = np.asarray(record.Q, dtype=np.float64).reshape(record.n, record.N)
    rest = np.asarray(record.completion, dtype=np.float64).reshape(-1, record.N)
    q_full = np.concatenate([top, rest])
    if q_full.shape != (record.N, record.N):
        raise RuleFormatError(f"Q and completion give shape {q_full.shape}, expected {(record.N, record.N)}", path="Q")
    lam = np.asarray(record.lambdas, dtype=np.float64)
    if lam.shape != (record.d, record.N):
        raise RuleFormatError(f"lambdas have shape {lam.shape}, expected {(record.d, record.N)}", path="lambdas")
    extended = np.einsum("an,in,bn->iab", q_full, lam, q_full)

    return ExtensionCandidate(
        n=record.n,
        N=record.N,
        d=record.d,
        q_full=q_full,
        lambdas=lam,
        extended=0.5 * (extended + np.swapaxes(extended, 1, 2)),
        objective=float(record.residuals.get("objective", 0.0)),
        compat_penalty=float(record.residuals.get("compat_penalty", 0.0)),
        commutator_residual=float(record.residuals.get("commutator_residual", 0.0)),
        zero_block_rows=record.zero_block_rows,
        converged=record.converged,
        method=record.method,
        seed=record.seed,
        sweeps=record.sweeps,
        history=tuple(record.history),
        diagnostic=record.diagnostic,
    )


def write_text(path: str, text: str) -> None:
    with fsspec.open(path, "w") as f:
        f.write(text)


def read_text(path: str) -> str:
    with fsspec.open(path, "r") as f:
        return f.read()
