"""Time-ordered exponentials of time-dependent matrices via path-sums.

The propagator ``U(t', t)`` solving ``dU/dt' = H(t') U`` is assembled from
⊛-products of two-time kernels over the simple paths and simple cycles of
the sparsity graph of ``H``.  See :mod:`pathsum.engine` for the entry
points, :mod:`pathsum.oracle` for independent reference solvers and
:mod:`pathsum.bounds` for decay envelopes.
"""

from .bounds import (
    BoundQuery,
    bound_bethe,
    bound_from_matrix,
    bound_generic,
    bound_hypercube,
    bound_lattice,
    bound_tridiagonal,
    walk_count_bethe_upper,
    walk_count_hypercube,
    walk_count_hypercube_looped,
    walk_count_path_graph,
)
from .engine import PathSumEngine, dyson_residual, full_propagator, path_sum_entry, propagator_array
from .errors import (
    AcausalQueryError,
    BlowUpError,
    CoarseGridError,
    DomainError,
    ExpressionSyntaxError,
    GridMismatchError,
    InputError,
    MatrixFileError,
    NumericError,
    PathSumError,
    UnknownIdentifierError,
)
from .expr import evaluate, parse, to_source
from .graph import SparsityGraph, build_graph, simple_cycles_at, simple_paths
from .matrix import MatrixSpec, load_spec, spec_from_json
from .oracle import neumann_truncated, ode_residual, rk4_propagator
from .star import StarElement, TimeGrid, identity, resolvent, star_product

__version__ = "0.1.0"
