"""Scattered terminal observations: synthesis, Tikhonov smoothing, extension.

Measurements are point values of the terminal state at quasi-uniform points,
contaminated with i.i.d. Gaussian noise.  Smoothing minimizes

    (1/m) sum_i |q^r(x_i) - q(x_i)|^2 + lambda * q^r A (q^r)^T,

with A the inverse of a Matern-5/2 kernel Gram matrix, i.e. the penalty is
the RKHS norm of the interpolant.  The normal equations are solved in the
stable form (K + m lambda I) q* = K q, which never applies K^{-1} directly.
The regularization weight follows the a-priori rule
lambda^{1+1/alpha} = sigma^2 / (m ||q*||_A^2), iterated twice as a fixed
point.  Everything is deterministic given the seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.spatial.distance import cdist

from .fem import FemSpace, Field, Interval, Rectangle

__all__ = [
    "ScatteredObservations",
    "Mollifier",
    "quasi_uniform_points",
    "add_noise",
    "build_mollifier",
    "smooth",
    "smoothing_objective",
    "lambda_rule",
    "extend_to_field",
    "save_observations_csv",
    "load_observations_csv",
]


@dataclass(frozen=True)
class ScatteredObservations:
    """Noisy point observations q(x_i) = u(x_i, T) + sigma * eps_i."""

    points: np.ndarray
    values: np.ndarray
    sigma: float
    seed: int = 0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or pts.shape[0] != vals.shape[0]:
            raise ValueError("points and values must have matching first dimension")
        if pts.shape[0] < 2:
            raise ValueError("need at least two observation points")
        if self.sigma < 0.0:
            raise ValueError(f"noise level must be nonnegative, got {self.sigma}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)

    @property
    def m(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class Mollifier:
    """Kernel Gram matrix, its inverse (the penalty matrix) and helpers."""

    points: np.ndarray
    length_scale: float
    gram: np.ndarray
    penalty: np.ndarray        # A = K^{-1}
    jittered: bool
    lam: float = 0.0
    _cho: tuple = field(repr=False, default=None)

    def gram_solve(self, rhs: np.ndarray) -> np.ndarray:
        return cho_solve(self._cho, rhs)


def quasi_uniform_points(domain, n: int) -> np.ndarray:
    """Equispaced interior sampling, offset half a spacing from the boundary.

    1D returns exactly n points; 2D uses a k x k tensor grid with
    k = round(sqrt(n)), so pick n a perfect square for an exact count.
    """
    if n < 2:
        raise ValueError("need at least two sample points")
    if isinstance(domain, Interval):
        step = domain.extent / n
        return domain.a + step * (np.arange(n) + 0.5)
    if isinstance(domain, Rectangle):
        k = max(2, int(round(np.sqrt(n))))
        sx = (domain.bx - domain.ax) / k
        sy = (domain.by - domain.ay) / k
        gx = domain.ax + sx * (np.arange(k) + 0.5)
        gy = domain.ay + sy * (np.arange(k) + 0.5)
        X, Y = np.meshgrid(gx, gy, indexing="ij")
        return np.column_stack([X.ravel(), Y.ravel()])
    raise TypeError(f"domain must be Interval or Rectangle, got {type(domain)}")


def add_noise(points, clean_values, sigma: float, seed: int) -> ScatteredObservations:
    """Observations = clean values + sigma * standard normal draws (seeded)."""
    clean = np.asarray(clean_values, dtype=float)
    if sigma < 0.0:
        raise ValueError(f"noise level must be nonnegative, got {sigma}")
    noise = np.random.default_rng(seed).standard_normal(clean.shape)
    return ScatteredObservations(points=np.asarray(points, dtype=float),
                                 values=clean + sigma * noise,
                                 sigma=float(sigma), seed=int(seed))


def _matern52(d: np.ndarray, ell: float) -> np.ndarray:
    s = np.sqrt(5.0) * d / ell
    return (1.0 + s + s * s / 3.0) * np.exp(-s)


def default_length_scale(domain) -> float:
    """Kernel length scale: a quarter of the domain extent."""
    return domain.extent / 4.0


def build_mollifier(points, length_scale: float) -> Mollifier:
    """Gram and penalty matrices for the Matern-5/2 kernel at the data sites.

    A diagonal jitter of 1e-10 * trace(K)/m is added once if the Cholesky
    factorization fails; the flag records it for run metadata.
    """
    pts = np.asarray(points, dtype=float)
    P = pts.reshape(-1, 1) if pts.ndim == 1 else pts
    K = _matern52(cdist(P, P), float(length_scale))
    K = 0.5 * (K + K.T)
    jittered = False
    try:
        fac = cho_factor(K)
    except np.linalg.LinAlgError:
        K = K + np.eye(K.shape[0]) * (1e-10 * np.trace(K) / K.shape[0])
        fac = cho_factor(K)
        jittered = True
    A = cho_solve(fac, np.eye(K.shape[0]))
    A = 0.5 * (A + A.T)
    return Mollifier(points=pts, length_scale=float(length_scale), gram=K,
                     penalty=A, jittered=jittered, _cho=fac)


def smooth(obs: ScatteredObservations, mol: Mollifier, lam: float = None) -> np.ndarray:
    """Minimizer q* of the penalized misfit; lam = 0 returns the data."""
    if lam is None:
        lam = mol.lam
    if lam < 0.0:
        raise ValueError(f"regularization weight must be nonnegative, got {lam}")
    if lam == 0.0:
        return obs.values.copy()
    m = obs.m
    # ((1/m) I + lam A) q* = q/m  <=>  (K + m lam I) q* = K q
    lhs = mol.gram + m * lam * np.eye(m)
    return np.linalg.solve(lhs, mol.gram @ obs.values)


def penalty_norm2(mol: Mollifier, values: np.ndarray) -> float:
    """Squared RKHS penalty ||v||_A^2 = v' K^{-1} v."""
    v = np.asarray(values, dtype=float)
    return float(v @ mol.gram_solve(v))


def smoothing_objective(obs: ScatteredObservations, mol: Mollifier,
                        candidate: np.ndarray, lam: float) -> float:
    """(1/m) sum |q^r(x_i) - q(x_i)|^2 + lam ||q^r||_A^2."""
    r = candidate - obs.values
    return float(np.mean(r * r)) + lam * penalty_norm2(mol, candidate)


def lambda_rule(obs: ScatteredObservations, mol: Mollifier, alpha: float,
                iterations: int = 2) -> float:
    """A-priori weight from lambda^(1+1/alpha) = sigma^2 / (m ||q*||_A^2).

    Starts from the penalty norm of the raw data and re-smooths ``iterations``
    times (two suffice; the rule is an order statement).  sigma = 0 gives 0.
    """
    if obs.sigma == 0.0:
        return 0.0
    expo = alpha / (alpha + 1.0)
    norm2 = penalty_norm2(mol, obs.values)
    lam = (obs.sigma**2 / (obs.m * norm2)) ** expo
    for _ in range(iterations):
        qs = smooth(obs, mol, lam)
        norm2 = penalty_norm2(mol, qs)
        lam = (obs.sigma**2 / (obs.m * norm2)) ** expo
    return float(lam)


def extend_to_field(obs: ScatteredObservations, mol: Mollifier,
                    smoothed: np.ndarray, space: FemSpace) -> Field:
    """Kernel interpolant of q* sampled at the FEM nodes.

    q^r(x) = sum_i c_i k(x, x_i) with c = K^{-1} q*; by the representer
    identity it reproduces q* exactly at the observation points.  The FEM
    field is zero on the boundary by construction (interior nodes only).
    """
    c = mol.gram_solve(np.asarray(smoothed, dtype=float))
    P = mol.points.reshape(-1, 1) if mol.points.ndim == 1 else mol.points
    nodes = space.nodes.reshape(-1, 1) if space.dim == 1 else space.nodes
    Kxn = _matern52(cdist(nodes, P), mol.length_scale)
    return Field(space, Kxn @ c)


def save_observations_csv(obs: ScatteredObservations, path) -> None:
    """Columns: coordinates..., value; sigma and seed kept in the header."""
    pts = obs.points.reshape(obs.m, -1)
    data = np.column_stack([pts, obs.values])
    np.savetxt(path, data, delimiter=",", fmt="%.17g",
               header=f"sigma={obs.sigma!r} seed={obs.seed}")


def load_observations_csv(path) -> ScatteredObservations:
    """Inverse of ``save_observations_csv``."""
    sigma, seed = 0.0, 0
    with open(path) as fh:
        first = fh.readline()
    if first.startswith("#"):
        for token in first[1:].split():
            key, _, val = token.partition("=")
            if key == "sigma":
                sigma = float(val)
            elif key == "seed":
                seed = int(val)
    data = np.atleast_2d(np.loadtxt(path, delimiter=","))
    pts = data[:, :-1]
    if pts.shape[1] == 1:
        pts = pts.ravel()
    return ScatteredObservations(points=pts, values=data[:, -1],
                                 sigma=sigma, seed=seed)
