import dataclasses

import fsspec
import pytest
from test_utils import check_load_config, parameterize_with_configs

import commext.config
from commext.config import SEED_ENV_VAR, resolve_seed, rewrite_flag_aliases
from commext.moments import GAUSSIAN_PLANE, INTERVAL, SQUARE, UnsupportedDomainError, WeightedDomain
from commext.problem import AUTO, JACOBI_1D, MINIMIZE_S, RADON, ProblemConfig


def test_main_wrapper_loads_from_fsspec():
    with fsspec.open("memory://test.yaml", "w") as f:
        f.write(
            """
        project: test
        """
        )

    args = ["--config_path", "memory://test.yaml", "--x", "2"]

    @dataclasses.dataclass
    class Config:
        project: str
        x: int = 1

    @commext.config.main(args=args)
    def main(config: Config):
        assert config.project == "test"
        assert config.x == 2

    main()


def test_flag_aliases_are_rewritten():
    args = ["--domain", "square", "--format", "json,csv", "--budget-sweeps=10", "--q", "3"]
    assert rewrite_flag_aliases(args) == [
        "--domain.kind",
        "square",
        "--output.formats",
        "[json,csv]",
        "--budget.sweeps",
        "10",
        "--q",
        "3",
    ]


def test_custom_alias_table_leaves_other_flags_alone():
    assert rewrite_flag_aliases(["--domain", "square", "--rule", "x.json"], {"--rule": "--rule_file"}) == [
        "--domain",
        "square",
        "--rule_file",
        "x.json",
    ]


def test_problem_config_from_file_and_flags():
    _write_yaml_to_memory(
        """
    domain:
        kind: gaussian_plane
    q: 5
    budget:
        sweeps: 100
    """
    )
    args = ["--config_path", "memory://problem.yaml", "--q", "4", "--out", "memory://out", "--format", "json"]

    @commext.config.main(args=args)
    def main(config: ProblemConfig):
        assert config.domain.kind == GAUSSIAN_PLANE
        # flags win over the file
        assert config.q == 4
        assert config.budget.sweeps == 100
        assert config.output.dir == "memory://out"
        assert config.output.formats == ["json"]
        return config.resolved_method

    assert main() == MINIMIZE_S


@parameterize_with_configs("*.yaml")
def test_packaged_configs_parse(config_file):
    config = check_load_config(ProblemConfig, config_file)
    assert config.n >= 1


def test_seed_resolution(monkeypatch):
    monkeypatch.delenv(SEED_ENV_VAR, raising=False)
    assert resolve_seed(None) == 0
    assert resolve_seed(7) == 7

    monkeypatch.setenv(SEED_ENV_VAR, "42")
    assert resolve_seed(None) == 42
    assert resolve_seed(3) == 3

    monkeypatch.setenv(SEED_ENV_VAR, "not a number")
    with pytest.raises(ValueError):
        resolve_seed(None)


def test_auto_method():
    assert ProblemConfig(domain=WeightedDomain(kind=INTERVAL), q=4).resolved_method == JACOBI_1D
    assert ProblemConfig(domain=WeightedDomain(kind=SQUARE), q=2).resolved_method == RADON
    assert ProblemConfig(domain=WeightedDomain(kind=SQUARE), q=3).resolved_method == MINIMIZE_S
    assert ProblemConfig().method == AUTO


@pytest.mark.parametrize(
    "kwargs",
    [
        {"q": -1},
        {"q": 2, "N": 5},
        {"q": 3, "method": RADON},
        {"q": 2, "method": "newton"},
        {"q": 2, "method": JACOBI_1D},
        {"q": 2, "family_param": 1.0},
    ],
)
def test_invalid_problem_configs(kwargs):
    with pytest.raises(ValueError):
        ProblemConfig(domain=WeightedDomain(kind=SQUARE), **kwargs)


def test_invalid_domains():
    with pytest.raises(UnsupportedDomainError):
        WeightedDomain(kind="triangle")
    with pytest.raises(UnsupportedDomainError):
        WeightedDomain(kind=INTERVAL, a=1.0, b=0.0)
    with pytest.raises(UnsupportedDomainError):
        WeightedDomain(kind="square_minus_square", r=0.5)


def _write_yaml_to_memory(yaml: str, path: str = "memory://problem.yaml"):
    with fsspec.open(path, "w") as f:
        f.write(yaml)
    return path
