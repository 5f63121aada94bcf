import logging

from rich.console import Console
from rich.table import Table

import commext
from commext.extensions.bounds import bound_report
from commext.logging import init_logger
from commext.moments import coordinate_matrices, gram_schmidt_basis
from commext.problem import ProblemConfig


logger = logging.getLogger(__name__)


def main(config: ProblemConfig) -> int:
    init_logger(config.log_file, config.log_level_number)

    basis = gram_schmidt_basis(config.domain, config.q)
    mats = coordinate_matrices(config.domain, basis)
    report = bound_report(mats, q=config.q)

    console = Console()
    console.print(
        f"{config.domain.kind}, q={config.q}: n = dim P_q = {report.n}, block sizes {tuple(mats.block_sizes)}"
    )

    ranks = Table(title="Commutator ranks")
    ranks.add_column("i")
    ranks.add_column("j")
    ranks.add_column("rank([A_i, A_j])", justify="right")
    for (i, j), r in sorted(report.commutator_ranks.items()):
        ranks.add_row(str(i + 1), str(j + 1), str(r))
    if report.commutator_ranks:
        console.print(ranks)

    table = Table(title="Lower bounds on the number of nodes")
    table.add_column("bound")
    table.add_column("N >=", justify="right")
    table.add_column("kind")
    for name, value, label in report.rows():
        table.add_row(name, str(value), label)
    console.print(table)
    console.print(f"recommended N: {report.recommended_N}")

    return 0


if __name__ == "__main__":
    raise SystemExit(commext.config.main(main)())
