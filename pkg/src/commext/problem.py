import logging
from dataclasses import dataclass
from typing import List, Optional

from draccus import field

from commext.config import resolve_seed
from commext.logging import WandbConfig
from commext.moments import SQUARE, WeightedDomain, dim_polynomials


logger = logging.getLogger(__name__)

AUTO = "auto"
RADON = "radon"
MINIMIZE_S = "minimize_s"
GRADIENT_FLOW = "gradient_flow"
JACOBI_1D = "jacobi_1d"
METHODS = (AUTO, RADON, MINIMIZE_S, GRADIENT_FLOW, JACOBI_1D)

FORMATS = ("json", "csv", "svg")


@dataclass
class BudgetConfig:
    sweeps: int = 5000  # Jacobi sweeps per start of the S minimizer
    iters: int = 20000  # Euler steps per start of the gradient flow
    multistarts: int = 8
    parallel: bool = False  # run the starts as ray tasks

    def __post_init__(self):
        if self.sweeps < 1 or self.iters < 1 or self.multistarts < 1:
            raise ValueError(f"budgets must be positive, got {self}")


@dataclass
class OutputConfig:
    dir: str = "out"  # local path or fsspec url
    formats: List[str] = field(default_factory=lambda: list(FORMATS))

    def __post_init__(self):
        unknown = set(self.formats) - set(FORMATS)
        if unknown:
            raise ValueError(f"unknown output formats {sorted(unknown)}; expected a subset of {FORMATS}")


@dataclass
class ProblemConfig:
    domain: WeightedDomain = field(default_factory=lambda: WeightedDomain(kind=SQUARE))
    q: int = 2  # the rule has degree 2q+1
    N: Optional[int] = None  # number of nodes; defaults to the recommended size from the bounds
    method: str = AUTO
    seed: Optional[int] = None  # falls back to $COMMEXT_SEED, then 0
    family_param: Optional[float] = None  # picks one member of a Radon family, in [0, 1)
    tol: float = 1e-9

    budget: BudgetConfig = field(default_factory=BudgetConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    wandb: WandbConfig = field(default_factory=WandbConfig)

    log_file: Optional[str] = None
    log_level: str = "INFO"

    def __post_init__(self):
        if self.q < 0:
            raise ValueError(f"q must be nonnegative, got {self.q}")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.N is not None and self.N < self.n:
            raise ValueError(f"N={self.N} is smaller than dim P_q = {self.n}")
        if self.method == RADON and (self.domain.dim != 2 or self.q != 2):
            raise ValueError(f"the Radon construction needs d=2 and q=2, got d={self.domain.dim}, q={self.q}")
        if self.method == JACOBI_1D and self.domain.dim != 1:
            raise ValueError(f"jacobi_1d needs an interval, got {self.domain.kind}")
        if self.method == GRADIENT_FLOW and self.domain.dim != 2:
            raise ValueError(f"the gradient flow needs d=2, got d={self.domain.dim}")
        if self.family_param is not None and not 0.0 <= self.family_param < 1.0:
            raise ValueError(f"family_param must be in [0, 1), got {self.family_param}")
        if self.tol <= 0:
            raise ValueError(f"tol must be positive, got {self.tol}")

    @property
    def n(self) -> int:
        return dim_polynomials(self.domain.dim, self.q)

    @property
    def resolved_seed(self) -> int:
        return resolve_seed(self.seed)

    @property
    def resolved_method(self) -> str:
        """What ``auto`` stands for on this domain."""
        if self.method != AUTO:
            return self.method
        if self.domain.dim == 1:
            return JACOBI_1D
        if self.domain.dim == 2 and self.q == 2:
            return RADON
        return MINIMIZE_S

    @property
    def log_level_number(self) -> int:
        level = logging.getLevelName(self.log_level.upper())
        if not isinstance(level, int):
            raise ValueError(f"unknown log level {self.log_level!r}")
        return level
