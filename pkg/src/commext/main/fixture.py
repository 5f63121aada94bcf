import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from dataclasses_json import dataclass_json

import commext
from commext.fixtures import CIRCULANT_DEMO, FIXTURE_NAMES, RANK_TWO_PAIR, make_fixture
from commext.logging import init_logger
from commext.serialization import plain, write_text


logger = logging.getLogger(__name__)

# fixture writes to a single file, so --out keeps its own meaning
FIXTURE_ALIASES: Dict[str, str] = {}


@dataclass
class FixtureConfig:
    name: str = RANK_TWO_PAIR
    n: Optional[int] = None
    N: Optional[int] = None
    d: int = 2
    seed: Optional[int] = None  # falls back to $COMMEXT_SEED, then 0
    out: Optional[str] = None  # a path or url; stdout if unset

    def __post_init__(self):
        if self.name not in FIXTURE_NAMES:
            raise ValueError(f"unknown fixture {self.name!r}; expected one of {FIXTURE_NAMES}")


@dataclass_json
@dataclass
class FixtureRecord:
    name: str
    seed: Optional[int]
    commutator_rank: int
    mats: List[List[List[float]]]
    extension: Optional[List[List[List[float]]]] = None
    info: Dict[str, Any] = field(default_factory=dict)


def main(config: FixtureConfig) -> int:
    init_logger(None)
    seed = config.seed
    # circulant_demo without a seed is the fixed scalar pair
    if seed is not None or config.name != CIRCULANT_DEMO:
        seed = commext.config.resolve_seed(seed)
    fixture = make_fixture(config.name, n=config.n, N=config.N, d=config.d, seed=seed)

    record = FixtureRecord(
        name=fixture.name,
        seed=seed,
        commutator_rank=fixture.commutator_rank,
        mats=plain(fixture.mats),
        extension=plain(fixture.extension) if fixture.extension is not None else None,
        info=plain(fixture.info),
    )
    text = record.to_json(indent=2)  # type: ignore

    if config.out is None:
        print(text)
    else:
        write_text(config.out, text + "\n")
        logger.info(f"Wrote {fixture.name} (commutator rank {record.commutator_rank}) to {config.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(commext.config.main(main, aliases=FIXTURE_ALIASES)())
