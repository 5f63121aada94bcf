from commext.cubature.gauss import gauss_1d
from commext.cubature.radon import AlreadyCommuteError, NoRadonExtensionError, cross_factor, radon_solve
from commext.cubature.rule import (
    CompatibilityError,
    CubatureRule,
    NotPositiveRuleError,
    diametrical_pairs,
    rule_from_extension,
)
from commext.cubature.search import SearchOptions, SearchOutcome, search_rule
from commext.cubature.verify import (
    RuleNotExactError,
    VerificationReport,
    check_rule,
    delta_identity_error,
    node_count_check,
    node_span_check,
    verify_rule,
)
