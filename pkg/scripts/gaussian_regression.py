"""
Searches for rules of degree 13, 15 and 17 for the weight exp(-x^2 - y^2) at the node counts the degree-of-freedom
estimate suggests (35, 46 and 57), starting a few nodes below. Not a test: searches of this size take a long time and
may need a bigger budget than the defaults.
"""
import argparse

from commext.cubature import SearchOptions, search_rule
from commext.extensions import FlowOptions, MinimizeOptions
from commext.extensions.bounds import dof_bound_plane
from commext.logging import capture_time, format_duration, init_logger
from commext.moments import GAUSSIAN_PLANE, WeightedDomain


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--q", type=int, nargs="+", default=[6, 7, 8])
    parser.add_argument("--below", type=int, default=1, help="also try this many node counts below the estimate")
    parser.add_argument("--sweeps", type=int, default=20000)
    parser.add_argument("--multistarts", type=int, default=8)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--parallel", action="store_true")
    args = parser.parse_args()

    init_logger(None)
    domain = WeightedDomain(kind=GAUSSIAN_PLANE)
    opts = SearchOptions(
        minimize=MinimizeOptions(
            max_sweeps=args.sweeps, seed=args.seed, multistarts=args.multistarts, parallel=args.parallel
        ),
        flow=FlowOptions(seed=args.seed, multistarts=args.multistarts),
    )

    for q in args.q:
        estimate = dof_bound_plane(q)
        for offset in range(args.below, -1, -1):
            N = estimate - offset
            with capture_time() as elapsed:
                outcome = search_rule(domain, q, N, opts)
            status = "found" if outcome.success else f"not found ({outcome.reason})"
            print(f"degree {2 * q + 1}, N={N}: {status} in {format_duration(elapsed())}")


if __name__ == "__main__":
    main()
