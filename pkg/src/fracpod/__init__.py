"""fracpod: time-fractional wave solver, POD model reduction, terminal-data inversion."""

from .fem import Field, FemSpace, Interval, Rectangle, build_space, discrete_n_norm, eval_at, inner, project_l2
from .inverse import (
    PipelineStageError,
    ReconstructionConfig,
    ReconstructionResult,
    build_forward_map,
    reconstruct,
    run_pipeline,
)
from .mlf import (
    SpectralSolution,
    interval_solution,
    mittag_leffler,
    mittag_leffler_series,
    mode_ratio,
    spectral_terminal_field,
    square_solution,
    terminal_mode_value,
)
from .mollify import (
    Mollifier,
    ScatteredObservations,
    add_noise,
    build_mollifier,
    extend_to_field,
    lambda_rule,
    quasi_uniform_points,
    smooth,
)
from .pod import (
    PodBasis,
    SnapshotSet,
    build_basis,
    collect_snapshots,
    correlation_matrix,
    eigendecompose,
    projection_error,
)
from .solver import (
    ReducedOperator,
    SourceSpec,
    Trajectory,
    identity_reduced_operator,
    lift,
    reduce_operator,
    solve_full,
    solve_reduced,
    terminal_trace,
)
from .timegrid import (
    ComplementaryKernel,
    GradedMesh,
    L1Kernel,
    apply_l1,
    build_graded_mesh,
    complementary_kernel,
    l1_coefficients,
    mode_block_solve,
    singular_weight,
)

__version__ = "0.1.0"
