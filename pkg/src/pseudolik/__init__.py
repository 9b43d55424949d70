"""Weighted pseudolikelihood estimation for discrete models on finite supports.

The objective sums weighted log marginal and log conditional probabilities
over coordinate subsets.  This package provides exact tabular inference on
enumerable supports, three parametric families (one-hot categorical,
fully-visible Boltzmann machine, restricted Boltzmann machine), reproducible
samplers, a quasi-Newton maximizer, and a Monte Carlo harness that measures
convergence of fitted marginals and conditionals toward the generative ones.
"""

from ._kernels import active_backend
from .errors import CapacityError, DomainError, FitError, ParseError, StructureError
from .estimate import FitConfig, FitReport, fit_mpl, fit_mpl_tabular
from .harness import ExperimentConfig, run_experiment, summarize
from .models import CategoricalParams, FvbmParams, RbmParams
from .pl import (
    WeightScheme,
    entropy_term_bound_check,
    log_pl,
    pseudo_entropy,
    scheme_by_name,
    scheme_categorical,
    scheme_composite_marginal,
    scheme_full_conditionals,
    scheme_ml,
    scheme_pairwise,
)
from .pmf import (
    ConditionalTable,
    EmpiricalTable,
    MarginalTable,
    TabularPmf,
    compatibility_check,
    condition,
    empirical_tables,
    marginalize,
)
from .sample import SeedSpec, sample_exact, sample_gibbs
from .support import (
    PartitionId,
    SubsetId,
    SupportSpec,
    enumerate_partitions,
    enumerate_subsets,
    state_at,
    state_index,
)

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "CategoricalParams",
    "ConditionalTable",
    "DomainError",
    "EmpiricalTable",
    "ExperimentConfig",
    "FitConfig",
    "FitError",
    "FitReport",
    "FvbmParams",
    "MarginalTable",
    "ParseError",
    "PartitionId",
    "RbmParams",
    "SeedSpec",
    "StructureError",
    "SubsetId",
    "SupportSpec",
    "TabularPmf",
    "WeightScheme",
    "active_backend",
    "compatibility_check",
    "condition",
    "empirical_tables",
    "entropy_term_bound_check",
    "enumerate_partitions",
    "enumerate_subsets",
    "fit_mpl",
    "fit_mpl_tabular",
    "log_pl",
    "marginalize",
    "pseudo_entropy",
    "run_experiment",
    "sample_exact",
    "sample_gibbs",
    "scheme_by_name",
    "scheme_categorical",
    "scheme_composite_marginal",
    "scheme_full_conditionals",
    "scheme_ml",
    "scheme_pairwise",
    "state_at",
    "state_index",
    "summarize",
]
