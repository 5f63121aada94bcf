import contextlib
import dataclasses
import logging as pylogging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Union

import humanfriendly
import wandb
from draccus import field

from commext.utils.jax_utils import jnp_to_python


logger = pylogging.getLogger(__name__)


def init_logger(path: Optional[Union[str, Path]], level: int = pylogging.INFO) -> None:
    """
    Initialize logging.Logger with the appropriate name, console, and file handlers.

    :param path: Path for writing log file. If None, only the console handler is installed.
    :param level: Default logging level
    """
    log_format = "%(asctime)s - %(name)s - %(filename)s:%(lineno)d - %(levelname)s :: %(message)s"
    # use ISO 8601 format for timestamps, except no TZ, because who cares
    date_format = "%Y-%m-%dT%H:%M:%S"

    handlers: List[pylogging.Handler] = [pylogging.StreamHandler()]
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        handlers.insert(0, pylogging.FileHandler(path, mode="a"))

    # Create Root Logger w/ Base Formatting
    pylogging.basicConfig(level=level, format=log_format, datefmt=date_format, handlers=handlers, force=True)

    # jax is chatty about platform discovery at INFO
    pylogging.getLogger("jax").setLevel(max(level, pylogging.WARNING))


@contextlib.contextmanager
def capture_time():
    start = time.perf_counter()
    end: Optional[float] = None

    def fn():
        if end is not None:
            return end - start
        else:
            return time.perf_counter() - start

    yield fn
    end = time.perf_counter()


def format_duration(seconds: float) -> str:
    return humanfriendly.format_timespan(seconds)


def is_wandb_available():
    return wandb is not None and wandb.run is not None


def log_metrics(metrics: Dict[str, object], *, step: Optional[int] = None):
    """Logs to the active wandb run, if there is one. Arrays are converted to python scalars first."""
    if not is_wandb_available():
        return

    wandb.log({k: jnp_to_python(v) if hasattr(v, "shape") else v for k, v in metrics.items()}, step=step)


def log_optimizer_hyperparams(opt_state, prefix: Optional[str] = None, *, step=None):
    def wrap_key(key):
        if prefix:
            return f"{prefix}/{key}"
        return key

    if hasattr(opt_state, "hyperparams"):
        params = {wrap_key(k): jnp_to_python(v) for k, v in opt_state.hyperparams.items()}
        log_metrics(params, step=step)


@dataclass
class WandbConfig:
    """
    Configuration for wandb. Runs are disabled unless a mode is given, so searches stay offline by default.
    """

    entity: Optional[str] = None  # An entity is a username or team name where you send runs
    project: Optional[str] = "commext"  # The name of the project where you are sending the new run.
    name: Optional[str] = None  # A short display name for this run, which is how you'll identify this run in the UI.
    tags: List[str] = field(default_factory=list)  # Will populate the list of tags on this run in the UI.
    id: Optional[str] = None  # A unique ID for this run, used for resuming. It must be unique in the project
    group: Optional[str] = None  # Specify a group to organize individual runs into a larger experiment.
    mode: Optional[str] = "disabled"  # Can be "online", "offline" or "disabled".

    def init(self, hparams=None, **extra_hparams):
        if self.mode == "disabled":
            logger.debug("wandb disabled")
            return None

        if hparams is None:
            hparams_to_save = {}
        elif dataclasses.is_dataclass(hparams):
            hparams_to_save = dataclasses.asdict(hparams)
        else:
            hparams_to_save = dict(hparams)

        if extra_hparams:
            hparams_to_save.update(extra_hparams)

        r = wandb.init(
            entity=self.entity,
            project=self.project,
            name=self.name,
            tags=self.tags,
            id=self.id,
            group=self.group,
            mode=self.mode,
            config=hparams_to_save,
            allow_val_change=True,
        )

        assert r is not None
        logger.info(f"Logging to wandb run {r.name} ({r.id})")
        return r

    def finish(self):
        if is_wandb_available():
            wandb.finish()
