import dataclasses
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import fsspec

import commext
from commext.cubature import (
    AlreadyCommuteError,
    CubatureRule,
    NoRadonExtensionError,
    SearchOptions,
    VerificationReport,
    check_rule,
    diametrical_pairs,
    gauss_1d,
    radon_solve,
    search_rule,
)
from commext.cubature.search import GRADIENT_FLOW, MINIMIZE_S
from commext.extensions import FlowOptions, MinimizeOptions
from commext.extensions.bounds import BoundReport, bound_report
from commext.extensions.candidate import ExtensionCandidate
from commext.logging import capture_time, format_duration, init_logger
from commext.moments import coordinate_matrices, gram_schmidt_basis
from commext.problem import AUTO, JACOBI_1D, RADON, ProblemConfig
from commext.serialization import (
    SolveReport,
    VerificationRecord,
    bounds_to_dict,
    candidate_to_json,
    plain,
    rule_to_csv,
    rule_to_json,
    write_text,
)
from commext.visualization import write_nodes_svg


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 2


@dataclass
class _Attempt:
    method: str
    rule: Optional[CubatureRule] = None
    reason: str = ""
    candidate: Optional[ExtensionCandidate] = None
    extension: Dict[str, Any] = field(default_factory=dict)


def _extension_summary(c: ExtensionCandidate) -> Dict[str, Any]:
    return {
        "N": c.N,
        "method": c.method,
        "objective": c.objective,
        "compat_penalty": c.compat_penalty,
        "commutator_residual": c.commutator_residual,
        "converged": c.converged,
        "seed": c.seed,
        "sweeps": c.sweeps,
        "history": list(c.history),
    }


def _search_options(config: ProblemConfig, seed: int) -> SearchOptions:
    budget = config.budget
    methods = (MINIMIZE_S, GRADIENT_FLOW) if config.method == AUTO else (config.method,)
    return SearchOptions(
        methods=methods,
        minimize=MinimizeOptions(
            max_sweeps=budget.sweeps, seed=seed, multistarts=budget.multistarts, parallel=budget.parallel
        ),
        flow=FlowOptions(max_iters=budget.iters, seed=seed, multistarts=budget.multistarts),
        verify_tol=config.tol,
    )


def _run_search(config: ProblemConfig, N: int, seed: int) -> _Attempt:
    outcome = search_rule(config.domain, config.q, N, _search_options(config, seed))
    cand = outcome.candidate
    return _Attempt(
        method=cand.method if cand is not None else MINIMIZE_S,
        rule=outcome.rule,
        reason=outcome.reason,
        candidate=cand,
        extension=_extension_summary(cand) if cand is not None else {},
    )


def _run_radon(config: ProblemConfig) -> _Attempt:
    try:
        rules = radon_solve(config.domain, config.family_param)
    except (NoRadonExtensionError, AlreadyCommuteError) as e:
        return _Attempt(method=RADON, reason=str(e))
    rule = rules[0]
    if len(rules) > 1:
        logger.info(f"{len(rules)} Radon rules found; keeping family_param={rule.info.get('family_param')}")
    return _Attempt(method=RADON, rule=rule, extension=plain(rule.info))


def _run_gauss(config: ProblemConfig, N: Optional[int]) -> _Attempt:
    rule = gauss_1d(config.domain, config.q)
    if N is not None and N != rule.num_nodes:
        logger.warning(f"Ignoring N={N}: the Gauss rule of degree {rule.degree} has {rule.num_nodes} nodes")
    return _Attempt(method=JACOBI_1D, rule=rule, extension={"N": rule.num_nodes})


def solve(config: ProblemConfig, bounds: BoundReport, seed: int) -> _Attempt:
    method = config.resolved_method
    N = config.N if config.N is not None else bounds.recommended_N

    if method == JACOBI_1D:
        return _run_gauss(config, config.N)

    if method == RADON:
        attempt = _run_radon(config)
        if attempt.rule is not None or config.method != AUTO:
            return attempt
        logger.warning(f"{attempt.reason}; falling back to the extension search")

    return _run_search(config, N, seed)


def _write_artifacts(
    config: ProblemConfig,
    attempt: _Attempt,
    report: Optional[VerificationReport],
    bounds: BoundReport,
    success: bool,
) -> List[str]:
    out_dir = config.output.dir
    fs, root = fsspec.core.url_to_fs(out_dir)
    fs.makedirs(root, exist_ok=True)
    written = []

    def _write(name: str, text: str):
        path = os.path.join(out_dir, name)
        write_text(path, text)
        written.append(path)

    rule = attempt.rule
    if rule is not None:
        if "json" in config.output.formats:
            _write("rule.json", rule_to_json(rule, report))
        if "csv" in config.output.formats:
            _write("rule.csv", rule_to_csv(rule))
        if "svg" in config.output.formats:
            path = os.path.join(out_dir, "nodes.svg")
            title = f"{config.domain.kind}: degree {rule.degree}, {rule.num_nodes} nodes"
            write_nodes_svg(path, rule, config.domain, title)
            written.append(path)

    if attempt.candidate is not None:
        _write("candidate.json", candidate_to_json(attempt.candidate))

    pairs = diametrical_pairs(rule) if rule is not None and rule.d == 2 else []
    solve_report = SolveReport(
        success=success,
        reason=attempt.reason,
        method=attempt.method,
        domain=config.domain.to_dict(),
        q=config.q,
        N=rule.num_nodes if rule is not None else config.N,
        verification=VerificationRecord.from_report(report) if report is not None else None,
        bounds=bounds_to_dict(bounds),
        extension=plain(attempt.extension),
        diametrical_pairs=[list(p) for p in pairs],
    )
    _write("report.json", solve_report.to_json(indent=2))  # type: ignore
    return written


def main(config: ProblemConfig) -> int:
    init_logger(config.log_file, config.log_level_number)
    seed = config.resolved_seed
    config.wandb.init(dataclasses.asdict(config), seed=seed)

    try:
        basis = gram_schmidt_basis(config.domain, config.q)
        mats = coordinate_matrices(config.domain, basis)
        bounds = bound_report(mats, q=config.q)

        with capture_time() as elapsed:
            attempt = solve(config, bounds, seed)
        logger.info(f"{attempt.method} finished in {format_duration(elapsed())}")

        report = None
        if attempt.rule is not None:
            report = check_rule(attempt.rule, mats, config.domain, config.tol)
            if not report.passed and not attempt.reason:
                attempt.reason = f"verification failed: max error {report.max_rel_error:.3e} > {config.tol:.1e}"

        success = report is not None and report.passed
        written = _write_artifacts(config, attempt, report, bounds, success)
        for path in written:
            logger.info(f"Wrote {path}")
    finally:
        config.wandb.finish()

    if not success:
        logger.error(f"No verified rule: {attempt.reason}")
        return EXIT_FAILED

    rule = attempt.rule
    assert rule is not None and report is not None
    logger.info(f"Degree {rule.degree} rule with {rule.num_nodes} nodes, max error {report.max_rel_error:.3e}")
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(commext.config.main(main)())
