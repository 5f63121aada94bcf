import atexit
import functools
import inspect
import os
import sys
import tempfile
import urllib.parse
from functools import wraps
from typing import Dict, List, Optional, Tuple

import fsspec
from draccus import parse
from fsspec import AbstractFileSystem


DEFAULT_CONFIG_DIR = os.path.join(os.path.dirname(__file__), "config")

SEED_ENV_VAR = "COMMEXT_SEED"

# short flags accepted on the command line, rewritten to the draccus path they stand for
FLAG_ALIASES: Dict[str, str] = {
    "--domain": "--domain.kind",
    "--r": "--domain.r",
    "--a": "--domain.a",
    "--b": "--domain.b",
    "--out": "--output.dir",
    "--format": "--output.formats",
    "--budget-sweeps": "--budget.sweeps",
    "--budget-iters": "--budget.iters",
    "--budget-multistarts": "--budget.multistarts",
}

_LIST_FLAGS = {"--output.formats"}


def main(
    fn=None,
    *,
    args: Optional[List[str]] = None,
    config_dir: Optional[str] = DEFAULT_CONFIG_DIR,
    aliases: Optional[Dict[str, str]] = None,
):
    """
    Like draccus.wrap but can handle config paths that are urls loadable by fsspec, and understands the short
    command line aliases in ``aliases`` (FLAG_ALIASES by default). Only the first arg of the wrapped function is
    config-ified.

    :param args: the args to parse. If None, will use sys.argv[1:]
    :param config_dir: the directory to look for configs in (if the path does not exist already). If None, will only
        use the current working directory
    """

    if fn is None:
        return functools.partial(main, args=args, config_dir=config_dir, aliases=aliases)

    _cmdline_args = args
    if args is None:
        _cmdline_args = sys.argv[1:]

    @wraps(fn)
    def wrapper_inner(*args, **kwargs):
        config_path, cmdline_args = _maybe_get_config_path_and_cmdline_args(_cmdline_args)
        cmdline_args = rewrite_flag_aliases(cmdline_args, aliases)
        paths_to_check = [config_path, f"{config_path}.yaml", f"{config_path}.yml", f"{config_path}.json"]
        if config_path is not None and config_dir is not None:
            paths_to_check.extend([os.path.join(config_dir, p) for p in paths_to_check])

        for path in paths_to_check:
            if path is not None and os.path.exists(path):
                config_path = path
                break

        argspec = inspect.getfullargspec(fn)
        argtype = argspec.annotations[argspec.args[0]]
        cfg = parse(config_class=argtype, config_path=config_path, args=cmdline_args)
        response = fn(cfg, *args, **kwargs)
        return response

    return wrapper_inner


def rewrite_flag_aliases(args: List[str], aliases: Optional[Dict[str, str]] = None) -> List[str]:
    """
    Rewrites the short flags (``--domain square``, ``--format json,csv``, ``--budget-sweeps 100``) into the dotted
    draccus form. Both ``--flag value`` and ``--flag=value`` are accepted.
    """
    aliases = FLAG_ALIASES if aliases is None else aliases
    out: List[str] = []
    i = 0
    while i < len(args):
        arg = args[i]
        flag, eq, inline_value = arg.partition("=")
        if flag in aliases:
            target = aliases[flag]
            if eq:
                value: Optional[str] = inline_value
            elif i + 1 < len(args):
                value = args[i + 1]
                i += 1
            else:
                value = None

            out.append(target)
            if value is not None:
                if target in _LIST_FLAGS and not value.startswith("["):
                    value = "[" + ",".join(v.strip() for v in value.split(",") if v.strip()) + "]"
                out.append(value)
        else:
            out.append(arg)
        i += 1

    return out


def resolve_seed(seed: Optional[int]) -> int:
    """An explicit seed wins, then the COMMEXT_SEED environment variable, then 0."""
    if seed is not None:
        return int(seed)

    env = os.getenv(SEED_ENV_VAR)
    if env is None or env.strip() == "":
        return 0

    try:
        return int(env)
    except ValueError:
        raise ValueError(f"{SEED_ENV_VAR} must be an integer, got {env!r}")


def _maybe_get_config_path_and_cmdline_args(args: List[str]) -> Tuple[Optional[str], List[str]]:
    """
    We want to accept ... --config_path <config> ... where config could be a path or url.
    If URL, we need to download it and save it to a temp file. We then want to remove --config_path
    from the cmdline args so that draccus doesn't try to load it as a config path and return it separately here
    along with the modified cmdline args.
    """
    if "--config_path" not in args and "--config" not in args:
        return None, args
    else:
        try:
            config_path_index = args.index("--config_path")
        except ValueError:
            config_path_index = args.index("--config")

        if config_path_index + 1 >= len(args):
            raise ValueError("--config_path needs a value")

        config_path = args[config_path_index + 1]

        if urllib.parse.urlparse(config_path).scheme:
            fs: AbstractFileSystem
            fs, fs_path = fsspec.core.url_to_fs(config_path)
            suffix = os.path.splitext(fs_path)[1] or ".yaml"
            temp_file = tempfile.NamedTemporaryFile(prefix="config", suffix=suffix, delete=False)
            atexit.register(lambda: os.unlink(temp_file.name))
            fs.get(fs_path, temp_file.name)
            config_path = temp_file.name

        args = args.copy()
        del args[config_path_index]
        del args[config_path_index]
        return config_path, args

