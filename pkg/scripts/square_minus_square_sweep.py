"""
Radon rules on the square with a square hole of half-width r = i/20 (i = 0..8) cut out around (2/5, 3/5). Writes one
SVG per r and prints the nodes, so the drift of the nodes towards and out of the hole can be followed.
"""
import os
import sys

from rich.console import Console
from rich.table import Table

from commext.cubature import NoRadonExtensionError, radon_solve, verify_rule
from commext.moments import SQUARE_MINUS_SQUARE, WeightedDomain
from commext.serialization import rule_to_json, write_text
from commext.visualization import write_nodes_svg


def sweep(out_dir: str, steps: int = 8):
    console = Console()
    table = Table(title="square minus square, degree 5")
    for col in ("r", "node", "x", "y", "weight", "max error"):
        table.add_column(col, justify="right")

    for i in range(steps + 1):
        r = i / 20
        domain = WeightedDomain(kind=SQUARE_MINUS_SQUARE, r=r)
        try:
            rule = radon_solve(domain, family_param=0.0)[0]
        except NoRadonExtensionError as e:
            console.print(f"r={r:.2f}: {e}")
            continue

        report = verify_rule(rule, domain)
        for k, (node, w) in enumerate(zip(rule.nodes, rule.weights)):
            table.add_row(
                f"{r:.2f}",
                str(k),
                f"{node[0]:.6f}",
                f"{node[1]:.6f}",
                f"{w / rule.total_weight:.4%}",
                f"{report.max_rel_error:.1e}" if k == 0 else "",
            )

        stem = os.path.join(out_dir, f"r{i:02d}")
        write_text(f"{stem}.json", rule_to_json(rule, report))
        write_nodes_svg(f"{stem}.svg", rule, domain, title=f"r = {r:.2f}")

    console.print(table)


if __name__ == "__main__":
    sweep(sys.argv[1] if len(sys.argv) > 1 else "out/square_minus_square")
