"""Uniqueness tests and reconstruction for sequences of single-view projections
of a linearly evolving state."""

from .chain import (
    NullChain,
    ReductionReport,
    compute_chain,
    krylov_span_dims,
    reduction_report,
    stacked_complement_dims,
    stall_witness,
)
from .experiments import condition_study, genericity_experiment
from .models import (
    GridSpec,
    SystemModel,
    column_sum_projection,
    cyclic_example,
    gaussian_blob,
    random_dynamics,
    shift_diffusion,
    variable_diffusion,
)
from .observability import (
    build_block_A,
    build_block_P,
    build_extended,
    oracle_unique,
    reconstruct,
    simulate,
)
from .subspace import (
    Subspace,
    image,
    intersect,
    is_transverse,
    null_space,
    numerical_rank,
    orth_complement,
    subspace_distance,
)

__version__ = "0.1.0"
