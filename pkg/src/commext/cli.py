"""
``commext <command> [flags]``: dispatches to the entry points in :mod:`commext.main`.

Exit codes: 0 on success, 1 for a bad config, an unreadable input or an I/O failure, 2 when the search finds no rule
or the rule fails verification.
"""
import sys
from typing import Callable, Dict, List, Optional, Tuple

from commext import config
from commext.main import bounds, fixture, solve, verify


EXIT_BAD_INPUT = 1

COMMANDS: Dict[str, Tuple[Callable, Optional[Dict[str, str]]]] = {
    "bounds": (bounds.main, None),
    "solve": (solve.main, None),
    "verify": (verify.main, verify.VERIFY_ALIASES),
    "fixture": (fixture.main, fixture.FIXTURE_ALIASES),
}

USAGE = f"usage: commext {{{','.join(COMMANDS)}}} [--config_path PATH] [flags]"


def main(argv: Optional[List[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if not argv or argv[0] in ("-h", "--help"):
        print(USAGE)
        return 0 if argv else EXIT_BAD_INPUT

    command, rest = argv[0], argv[1:]
    if command not in COMMANDS:
        print(f"unknown command {command!r}\n{USAGE}", file=sys.stderr)
        return EXIT_BAD_INPUT

    fn, aliases = COMMANDS[command]
    try:
        return int(config.main(fn, args=rest, aliases=aliases)())
    except SystemExit as e:
        # argparse exits 0 for --help and 2 for usage errors
        if e.code in (0, None):
            return 0
        return EXIT_BAD_INPUT
    except Exception as e:
        # draccus may wrap a config validation error raised while decoding
        cause = _bad_input_cause(e)
        if cause is None:
            raise
        print(f"commext {command}: {cause}", file=sys.stderr)
        return EXIT_BAD_INPUT


def _bad_input_cause(e: Optional[BaseException]) -> Optional[BaseException]:
    seen = set()
    while e is not None and id(e) not in seen:
        if isinstance(e, (ValueError, OSError)):
            return e
        seen.add(id(e))
        e = e.__cause__ or e.__context__
    return None


if __name__ == "__main__":
    raise SystemExit(main())
