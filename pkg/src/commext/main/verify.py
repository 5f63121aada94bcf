import logging
import os
from dataclasses import dataclass
from typing import Optional

import commext
from commext.cubature import VerificationReport, check_rule, verify_rule
from commext.logging import init_logger
from commext.moments import WeightedDomain, coordinate_matrices, gram_schmidt_basis
from commext.serialization import (
    RuleFormatError,
    VerificationRecord,
    VerifyReport,
    read_text,
    rule_from_json,
    write_text,
)


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_BAD_INPUT = 1
EXIT_FAILED = 2

# verify takes the domain kind as a plain string, so --domain is not rewritten to --domain.kind here
VERIFY_ALIASES = {"--rule": "--rule_file"}


@dataclass
class VerifyConfig:
    rule_file: str  # a rule.json written by solve, or one written by hand
    domain: Optional[str] = None  # check against this domain kind instead of the one in the file
    a: Optional[float] = None
    b: Optional[float] = None
    r: Optional[float] = None
    tol: float = 1e-9
    out: Optional[str] = None  # where to write the report; defaults to verify_report.json next to the rule file

    log_file: Optional[str] = None

    def domain_override(self) -> Optional[WeightedDomain]:
        if self.domain is None:
            return None
        fields = {"kind": self.domain}
        fields.update({k: v for k, v in (("a", self.a), ("b", self.b), ("r", self.r)) if v is not None})
        return WeightedDomain.from_dict(fields)  # type: ignore

    @property
    def report_path(self) -> str:
        if self.out is not None:
            return self.out
        return os.path.join(os.path.dirname(self.rule_file), "verify_report.json")


def _check(rule, domain: WeightedDomain, tol: float) -> VerificationReport:
    # the node checks need the coordinate matrices of the rule's own degree
    if rule.degree >= 1 and rule.degree % 2 == 1:
        q = (rule.degree - 1) // 2
        mats = coordinate_matrices(domain, gram_schmidt_basis(domain, q))
        return check_rule(rule, mats, domain, tol)
    return verify_rule(rule, domain, tol)


def main(config: VerifyConfig) -> int:
    init_logger(config.log_file)

    try:
        rule = rule_from_json(read_text(config.rule_file))
    except RuleFormatError as e:
        logger.error(f"{config.rule_file}: {e}")
        return EXIT_BAD_INPUT
    except OSError as e:
        logger.error(f"could not read {config.rule_file}: {e}")
        return EXIT_BAD_INPUT

    domain = config.domain_override() or rule.domain
    assert domain is not None
    if rule.domain is not None and domain != rule.domain:
        logger.warning(f"Checking against {domain.to_dict()}, not the file's {rule.domain.to_dict()}")
    if domain.dim != rule.d:
        logger.error(f"the rule has {rule.d}-dimensional nodes but {domain.kind} has dimension {domain.dim}")
        return EXIT_BAD_INPUT

    report = _check(rule, domain, config.tol)
    record = VerifyReport(
        rule_file=config.rule_file,
        domain=domain.to_dict(),
        degree=rule.degree,
        num_nodes=rule.num_nodes,
        passed=report.passed,
        verification=VerificationRecord.from_report(report),
    )
    write_text(config.report_path, record.to_json(indent=2))  # type: ignore

    if not report.passed:
        logger.error(
            f"{config.rule_file} failed: max error {report.max_rel_error:.3e} at monomial {report.worst_monomial}, "
            f"node count ok: {report.node_count_ok}, node span ok: {report.node_span_ok}"
        )
        return EXIT_FAILED

    logger.info(f"{config.rule_file} passed: max error {report.max_rel_error:.3e} over degree {report.degree}")
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(commext.config.main(main, aliases=VERIFY_ALIASES)())
