"""Exact numerical checks of quantum work relations under trial Hamiltonians."""

from .bounds import (
    TrialPair,
    bogoliubov_report,
    difference_operator,
    jarzynski_inequality_report,
    norm_bound_report,
    perturbed_pair,
    universal_inequality_report,
    v_averages,
)
from .errors import DomainError, RangeError
from .operators import (
    HermitianOperator,
    eig_hermitian,
    golden_thompson_slack,
    matrix_exponential,
    operator_norm,
    theta_conjugate,
)
from .protocol import (
    DrivingProtocol,
    Observable,
    PropagatorTable,
    build_propagators,
    hamiltonian_at,
    heisenberg,
    microreversibility_residual,
    parity_residual,
    random_protocol,
)
from .reports import BoundReport
from .thermal import (
    DiagonalDistribution,
    GibbsState,
    diagonal_distribution,
    gbf_lower_bound,
    gbf_upper_bound,
    gibbs,
    ratio_bound,
    relative_entropy,
)
from .work import (
    FunctionalSpec,
    WorkDistribution,
    forward_functional_average,
    integrated_observable,
    jarzynski_exact,
    reverse_functional_average,
    tpm_work_distribution,
    universal_relation_residual,
)

__version__ = "0.1.0"
