from commext.extensions.bounds import BoundReport, bound_report, circulant_extension
from commext.extensions.candidate import (
    ExtensionCandidate,
    candidate_from_extension,
    candidate_from_factorization,
    conjugate_family,
)
from commext.extensions.flow import FlowOptions, FlowProblem, gradient_flow
from commext.extensions.objective import SingularLambdaSystemError, ZeroBlockSpec, s_objective, solve_lambda
from commext.extensions.search import MinimizeOptions, minimize_s, rotation_angle_minimize
from commext.extensions.structure import (
    BlockShapeError,
    LemmaInapplicableError,
    extendability_test,
    spectral_containment,
    structured_residual,
)
