"""Proper orthogonal decomposition via the snapshot correlation matrix.

Snapshots are coefficient vectors from a trajectory; the Gram (correlation)
matrix K_ij = (y_i, y_j)_X / N is diagonalized with a cyclic Jacobi iteration
and the basis vectors are the weighted snapshot combinations psi_j =
sum_n (v_j)^n y_n / sqrt(lambda_j).  The inner product X is the mass-weighted
L2 product by default; the H1 (mass + stiffness) product is selectable for
runs that track the theoretical estimates, which are stated in H1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fem import FemSpace
from .timegrid import L1Kernel, apply_l1

__all__ = [
    "SnapshotSet",
    "PodBasis",
    "correlation_matrix",
    "eigendecompose",
    "build_basis",
    "projection_error",
    "collect_snapshots",
    "save_basis_csv",
    "load_basis_csv",
]

#: eigenvalues below RANK_TOL * lambda_1 are treated as numerical noise
RANK_TOL = 1e-12

_PRODUCTS = ("L2", "H1")


@dataclass(frozen=True)
class SnapshotSet:
    """Snapshot ensemble with the inner product they are measured in."""

    space: FemSpace
    snapshots: np.ndarray      # (count, ndof)
    product: str = "L2"

    def __post_init__(self):
        y = np.atleast_2d(np.asarray(self.snapshots, dtype=float))
        if y.shape[0] < 1:
            raise ValueError("need at least one snapshot")
        if y.shape[1] != self.space.ndof:
            raise ValueError(
                f"snapshot length {y.shape[1]} does not match space ({self.space.ndof})")
        if self.product not in _PRODUCTS:
            raise ValueError(f"product must be one of {_PRODUCTS}")
        object.__setattr__(self, "snapshots", y)

    @property
    def weight(self) -> np.ndarray:
        return self.space.M if self.product == "L2" else self.space.M + self.space.S


@dataclass(frozen=True)
class PodBasis:
    """Orthonormal basis rows ``psi`` with the positive spectrum ``lam``."""

    psi: np.ndarray            # (p, ndof)
    lam: np.ndarray            # (rank_r,) descending, all positive
    rank_r: int
    product: str
    space: FemSpace

    @property
    def p(self) -> int:
        return self.psi.shape[0]

    def weight(self) -> np.ndarray:
        return self.space.M if self.product == "L2" else self.space.M + self.space.S


def correlation_matrix(snaps: SnapshotSet) -> np.ndarray:
    """Symmetric PSD Gram matrix K_ij = (y_i, y_j)_X / N."""
    y = snaps.snapshots
    K = y @ snaps.weight @ y.T / y.shape[0]
    return 0.5 * (K + K.T)


def _rotate(A: np.ndarray, Vm: np.ndarray, p: int, q: int) -> None:
    """One Jacobi rotation zeroing A[p, q], applied to rows/cols and to Vm."""
    apq = A[p, q]
    theta = 0.5 * (A[q, q] - A[p, p]) / apq
    t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(1.0 + theta * theta))
    c = 1.0 / np.sqrt(1.0 + t * t)
    s = t * c
    rp = A[p].copy()
    rq = A[q].copy()
    A[p] = c * rp - s * rq
    A[q] = s * rp + c * rq
    cp = A[:, p].copy()
    cq = A[:, q].copy()
    A[:, p] = c * cp - s * cq
    A[:, q] = s * cp + c * cq
    A[p, q] = A[q, p] = 0.0
    vp = Vm[:, p].copy()
    vq = Vm[:, q].copy()
    Vm[:, p] = c * vp - s * vq
    Vm[:, q] = s * vp + c * vq


def eigendecompose(K: np.ndarray, tol: float = RANK_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of a symmetric matrix by cyclic Jacobi sweeps.

    Sweeps continue until every off-diagonal magnitude falls below
    tol * ||K||_F.  Pairs are sorted by descending eigenvalue and eigenvalues
    below tol * lambda_1 are discarded, which defines the numerical rank.
    Returns (eigenvalues, column eigenvectors).
    """
    K = np.asarray(K, dtype=float)
    n = K.shape[0]
    if K.shape != (n, n):
        raise ValueError("matrix must be square")
    scale = np.linalg.norm(K, "fro")
    if scale == 0.0:
        return np.zeros(0), np.zeros((n, 0))
    if np.max(np.abs(K - K.T)) > 1e-12 * scale:
        raise ValueError("matrix is not symmetric")

    A = 0.5 * (K + K.T)
    Vm = np.eye(n)
    thresh = tol * scale
    for _ in range(60):
        done = True
        for p in range(n - 1):
            row = A[p, p + 1:]
            if np.max(np.abs(row)) <= thresh:
                continue
            for q in range(p + 1, n):
                if abs(A[p, q]) > thresh:
                    _rotate(A, Vm, p, q)
                    done = False
        if done:
            break
    else:
        raise RuntimeError("Jacobi iteration failed to converge in 60 sweeps")

    d = np.diag(A).copy()
    order = np.argsort(d)[::-1]
    d = d[order]
    Vm = Vm[:, order]
    keep = d > tol * max(d[0], 0.0)
    lam = d[keep]
    vec = Vm[:, keep]
    # reproducible sign: first appreciable component of each eigenvector positive
    for j in range(vec.shape[1]):
        col = vec[:, j]
        nz = np.nonzero(np.abs(col) > 1e-14 * np.max(np.abs(col)))[0]
        if nz.size and col[nz[0]] < 0.0:
            vec[:, j] = -col
    return lam, vec


def build_basis(snaps: SnapshotSet, eig: tuple[np.ndarray, np.ndarray],
                p: int) -> PodBasis:
    """Assemble the rank-p POD basis from an eigendecomposition."""
    lam, vec = eig
    r = lam.size
    if not 1 <= p <= r:
        raise ValueError(f"requested rank {p} outside 1..{r}")
    y = snaps.snapshots
    psi = (vec[:, :p].T @ y) / np.sqrt(lam[:p, None] * y.shape[0])
    psi.flags.writeable = False
    return PodBasis(psi=psi, lam=lam.copy(), rank_r=r,
                    product=snaps.product, space=snaps.space)


def projection_error(snaps: SnapshotSet, basis: PodBasis, m: int) -> float:
    """Mean squared X-norm distance of the snapshots to the rank-m subspace.

    Computed directly from the residuals; by the spectral identity it must
    equal the eigenvalue tail sum_{j>m} lambda_j.
    """
    if not 0 <= m <= basis.p:
        raise ValueError(f"rank {m} outside 0..{basis.p}")
    y = snaps.snapshots
    W = snaps.weight
    resid = y if m == 0 else y - (y @ W @ basis.psi[:m].T) @ basis.psi[:m]
    return float(np.mean(np.einsum("ij,ij->i", resid @ W, resid)))


def collect_snapshots(traj, kernel: L1Kernel, include_quotients: bool = False,
                      space: FemSpace = None, product: str = "L2") -> SnapshotSet:
    """Snapshots {U^n} from a trajectory, n = 1..N.

    With ``include_quotients`` the fractional difference quotients of U and V
    are appended (the ensemble the error theory assumes); the plain U-only
    default is what the experiments showed to be sufficient.
    """
    if space is None:
        raise ValueError("pass the FemSpace the trajectory lives in")
    U, V = traj.U, traj.V
    rows = [U[1:]]
    if include_quotients:
        n_steps = U.shape[0] - 1
        qu = np.array([apply_l1(kernel, U[: n + 1]) for n in range(1, n_steps + 1)])
        qv = np.array([apply_l1(kernel, V[: n + 1]) for n in range(1, n_steps + 1)])
        rows += [qu, qv]
    return SnapshotSet(space=space, snapshots=np.vstack(rows), product=product)


def save_basis_csv(basis_matrix: np.ndarray, path) -> None:
    """Write basis vectors as CSV rows."""
    np.savetxt(path, np.atleast_2d(np.asarray(basis_matrix, dtype=float)),
               delimiter=",", fmt="%.17g")


def load_basis_csv(path) -> np.ndarray:
    """Read basis vectors written by ``save_basis_csv``."""
    return np.atleast_2d(np.loadtxt(path, delimiter=",", dtype=float))
