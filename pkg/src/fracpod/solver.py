"""Full-order and reduced-order time stepping for the coupled split system.

One scheme serves both the forward problem (driven by the initial velocity
profile) and the observation system (driven by the measured terminal data):
only the spatial source profile differs.  Per step the pair

    (d^nu V^n, phi) + (grad U^n, grad phi) = (g omega_{2-alpha}(t_n), phi)
    (grad V^n, grad phi) = (d^nu grad U^n, grad phi)

collapses by elimination (S is invertible, so the second equation forces
V^n = d^nu U^n nodally) to a single SPD solve with matrix A0_n^2 M + S, where
A0_n is the diagonal L1 coefficient of the step.  On graded meshes A0_n
changes per step and the matrix is re-factorized; factorizations are cached
by A0 value, which collapses to a single factorization on uniform meshes.
The O(N^2) history sums dominate the cost either way.

A trajectory is inherently sequential; independent solves (one per reduced
basis column) are safe to run concurrently against shared read-only inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .fem import FemSpace, Field
from .timegrid import GradedMesh, L1Kernel, singular_weight

__all__ = [
    "SourceSpec",
    "Trajectory",
    "ReducedOperator",
    "solve_full",
    "solve_reduced",
    "reduce_operator",
    "identity_reduced_operator",
    "lift",
    "terminal_trace",
]


@dataclass(frozen=True)
class SourceSpec:
    """Separable source g(x) * omega_{2-alpha}(t); g is the spatial profile."""

    profile: Field
    alpha: float

    def __post_init__(self):
        if not 1.0 < self.alpha < 2.0:
            raise ValueError(f"alpha must be in (1, 2), got {self.alpha}")

    @property
    def nu(self) -> float:
        return 0.5 * self.alpha


@dataclass(frozen=True)
class Trajectory:
    """Time series of coefficient vectors; rows are steps n = 0..N.

    Row 0 is zero (zero initial data) and V^n equals the L1 quotient of the
    U history at every step by construction.
    """

    U: np.ndarray
    V: np.ndarray
    mesh: GradedMesh


@dataclass(frozen=True)
class ReducedOperator:
    """Galerkin-reduced matrices over a basis Psi (rows = basis vectors)."""

    basis: object            # PodBasis
    Mr: np.ndarray
    Sr: np.ndarray
    load_r: np.ndarray


def _check_kernel(kernel: L1Kernel, mesh: GradedMesh, alpha: float) -> None:
    if kernel.N != mesh.N:
        raise ValueError("kernel and mesh sizes differ")
    if abs(kernel.nu - 0.5 * alpha) > 1e-12:
        raise ValueError(
            f"kernel order {kernel.nu} does not match alpha/2 = {0.5 * alpha}")


def _step_system(M: np.ndarray, S: np.ndarray, load: np.ndarray,
                 mesh: GradedMesh, kernel: L1Kernel, alpha: float) -> tuple:
    """Shared stepping loop; returns (U, V) with rows n = 0..N."""
    N = mesh.N
    dof = M.shape[0]
    U = np.zeros((N + 1, dof))
    V = np.zeros((N + 1, dof))
    dU = np.zeros((N, dof))
    dV = np.zeros((N, dof))
    omega = singular_weight(mesh.t[1:], alpha)
    factors: dict[float, object] = {}
    for n in range(1, N + 1):
        row = kernel.coeffs[n - 1]
        A0 = row[0]
        if n > 1:
            c = row[n - 1:0:-1]        # A^{(n)}_{n-k} aligned with dU rows k-1
            hist_u = c @ dU[: n - 1]
            hist_v = c @ dV[: n - 1]
        else:
            hist_u = np.zeros(dof)
            hist_v = np.zeros(dof)
        hu = hist_u - A0 * U[n - 1]
        hv = hist_v - A0 * V[n - 1]
        rhs = omega[n - 1] * load - M @ (A0 * hu + hv)
        fac = factors.get(A0)
        if fac is None:
            try:
                fac = cho_factor(A0 * A0 * M + S)
            except np.linalg.LinAlgError as exc:
                raise np.linalg.LinAlgError(
                    f"step matrix not SPD at step {n}: {exc}") from exc
            factors[A0] = fac
        U[n] = cho_solve(fac, rhs)
        V[n] = A0 * U[n] + hu
        dU[n - 1] = U[n] - U[n - 1]
        dV[n - 1] = V[n] - V[n - 1]
    return U, V


def solve_full(space: FemSpace, mesh: GradedMesh, kernel: L1Kernel,
               src: SourceSpec) -> Trajectory:
    """Full-order solve; the source profile must live in ``space``."""
    if src.profile.space is not space:
        raise ValueError("source profile does not belong to the solver space")
    _check_kernel(kernel, mesh, src.alpha)
    load = space.M @ src.profile.coeffs
    U, V = _step_system(space.M, space.S, load, mesh, kernel, src.alpha)
    return Trajectory(U=U, V=V, mesh=mesh)


def reduce_operator(space: FemSpace, basis, profile: Field = None) -> ReducedOperator:
    """Project mass, stiffness and (optionally) a source profile onto a basis."""
    psi = np.asarray(basis.psi, dtype=float)
    Mr = psi @ space.M @ psi.T
    Sr = psi @ space.S @ psi.T
    Mr = 0.5 * (Mr + Mr.T)
    Sr = 0.5 * (Sr + Sr.T)
    load_r = psi @ (space.M @ profile.coeffs) if profile is not None else np.zeros(psi.shape[0])
    return ReducedOperator(basis=basis, Mr=Mr, Sr=Sr, load_r=load_r)


class _IdentityBasis:
    """Stand-in basis whose vectors are the FEM coordinate directions."""

    def __init__(self, ndof: int):
        self.psi = np.eye(ndof)
        self.rank_r = ndof


def identity_reduced_operator(space: FemSpace, profile: Field = None) -> ReducedOperator:
    """Trivial reduction over all coordinate directions (p = dof sanity path)."""
    return reduce_operator(space, _IdentityBasis(space.ndof), profile)


def solve_reduced(op: ReducedOperator, mesh: GradedMesh, kernel: L1Kernel,
                  src: SourceSpec = None, alpha: float = None) -> Trajectory:
    """Reduced-order solve; returns a trajectory in reduced coordinates.

    The stepping algebra is identical to ``solve_full`` in the p-dimensional
    reduced space.  When ``src`` is given its profile is projected onto the
    basis; otherwise the operator's precomputed ``load_r`` is used and
    ``alpha`` must be supplied.  Lift back to FEM coordinates with ``lift``.
    """
    if op.Mr.shape[0] < 1:
        raise ValueError("reduced basis must have rank >= 1")
    if src is not None:
        alpha = src.alpha
        psi = np.asarray(op.basis.psi, dtype=float)
        load_r = psi @ (src.profile.space.M @ src.profile.coeffs)
    else:
        if alpha is None:
            raise ValueError("either src or alpha must be given")
        load_r = op.load_r
    _check_kernel(kernel, mesh, alpha)
    U, V = _step_system(op.Mr, op.Sr, load_r, mesh, kernel, alpha)
    return Trajectory(U=U, V=V, mesh=mesh)


def lift(traj: Trajectory, basis) -> Trajectory:
    """Map a reduced-coordinate trajectory back to FEM coefficients."""
    psi = np.asarray(basis.psi, dtype=float)
    return Trajectory(U=traj.U @ psi, V=traj.V @ psi, mesh=traj.mesh)


def terminal_trace(traj: Trajectory, space: FemSpace, points) -> np.ndarray:
    """Terminal solution values at measurement points (full coordinates)."""
    from .fem import eval_at

    if traj.U.shape[1] != space.ndof:
        raise ValueError("trajectory is not in the coordinates of this space "
                         "(lift reduced trajectories first)")
    return eval_at(Field(space, traj.U[-1]), points)
