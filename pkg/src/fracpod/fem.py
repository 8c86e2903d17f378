"""Piecewise-linear finite elements on an interval and on a tensor rectangle.

Homogeneous Dirichlet conditions throughout, so the unknowns are the interior
nodal values.  Matrices are dense: the largest system in the experiments has
841 unknowns and the Cholesky factors are reused across every time step, which
makes sparse machinery pointless at this scale.  The 2D matrices are exact
Kronecker compositions of the 1D ones (the grid is a tensor product), with
x-major node ordering: node index = ix * ny + iy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

__all__ = [
    "Interval",
    "Rectangle",
    "FemSpace",
    "Field",
    "build_space",
    "inner",
    "eval_at",
    "project_l2",
    "discrete_n_norm",
]

# 3-point Gauss rule on [0, 1]
_GAUSS_X = np.array([0.5 - np.sqrt(0.15), 0.5, 0.5 + np.sqrt(0.15)])
_GAUSS_W = np.array([5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0])


@dataclass(frozen=True)
class Interval:
    a: float = 0.0
    b: float = np.pi

    @property
    def extent(self) -> float:
        return self.b - self.a


@dataclass(frozen=True)
class Rectangle:
    ax: float = 0.0
    bx: float = 1.0
    ay: float = 0.0
    by: float = 1.0

    @property
    def extent(self) -> float:
        return max(self.bx - self.ax, self.by - self.ay)


def _mass_stiffness_1d(h: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    M = np.zeros((n, n))
    S = np.zeros((n, n))
    idx = np.arange(n)
    M[idx, idx] = 4.0 * h / 6.0
    S[idx, idx] = 2.0 / h
    M[idx[:-1], idx[:-1] + 1] = M[idx[:-1] + 1, idx[:-1]] = h / 6.0
    S[idx[:-1], idx[:-1] + 1] = S[idx[:-1] + 1, idx[:-1]] = -1.0 / h
    return M, S


@dataclass(frozen=True, eq=False)
class FemSpace:
    """Interior-node P1/Q1 space with mass matrix M and stiffness matrix S."""

    dim: int
    domain: object
    h: float
    nodes: np.ndarray          # (n,) in 1D, (n, 2) in 2D
    M: np.ndarray
    S: np.ndarray
    grid_x: np.ndarray = None  # interior axis nodes (2D only)
    grid_y: np.ndarray = None
    _mass_cho: list = field(default_factory=list, repr=False)

    @property
    def ndof(self) -> int:
        return self.nodes.shape[0]

    def mass_solve(self, rhs: np.ndarray) -> np.ndarray:
        if not self._mass_cho:
            self._mass_cho.append(cho_factor(self.M))
        return cho_solve(self._mass_cho[0], rhs)


def _cell_count(extent: float, h: float) -> int:
    ncell = int(round(extent / h))
    if ncell < 2 or abs(ncell * h - extent) > 1e-9 * extent:
        raise ValueError(
            f"mesh size {h} must divide the extent {extent} into >= 2 cells")
    return ncell


def build_space(domain, h: float) -> FemSpace:
    """Assemble the FEM space for an Interval or Rectangle with mesh size h."""
    if h <= 0.0:
        raise ValueError(f"mesh size must be positive, got {h}")
    if isinstance(domain, Interval):
        ncell = _cell_count(domain.extent, h)
        nodes = domain.a + h * np.arange(1, ncell)
        M, S = _mass_stiffness_1d(h, ncell - 1)
        nodes.flags.writeable = False
        M.flags.writeable = False
        S.flags.writeable = False
        return FemSpace(dim=1, domain=domain, h=float(h), nodes=nodes, M=M, S=S)
    if isinstance(domain, Rectangle):
        nx = _cell_count(domain.bx - domain.ax, h)
        ny = _cell_count(domain.by - domain.ay, h)
        gx = domain.ax + h * np.arange(1, nx)
        gy = domain.ay + h * np.arange(1, ny)
        Mx, Sx = _mass_stiffness_1d(h, nx - 1)
        My, Sy = _mass_stiffness_1d(h, ny - 1)
        M = np.kron(Mx, My)
        S = np.kron(Sx, My) + np.kron(Mx, Sy)
        X, Y = np.meshgrid(gx, gy, indexing="ij")
        nodes = np.column_stack([X.ravel(), Y.ravel()])
        for arr in (nodes, M, S, gx, gy):
            arr.flags.writeable = False
        return FemSpace(dim=2, domain=domain, h=float(h), nodes=nodes,
                        M=M, S=S, grid_x=gx, grid_y=gy)
    raise TypeError(f"domain must be Interval or Rectangle, got {type(domain)}")


@dataclass(frozen=True)
class Field:
    """Coefficient vector over the interior nodes of a FemSpace."""

    space: FemSpace
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (self.space.ndof,):
            raise ValueError(
                f"coefficient vector has shape {c.shape}, space has {self.space.ndof} nodes")
        object.__setattr__(self, "coeffs", c)


_PRODUCTS = ("L2", "H1semi", "H1")


def inner(space: FemSpace, a: Field, b: Field, which: str = "L2") -> float:
    """Inner product a' M b (L2), a' S b (H1semi) or a' (M+S) b (H1)."""
    if a.space is not space or b.space is not space:
        raise ValueError("fields do not share the given space")
    if which not in _PRODUCTS:
        raise ValueError(f"unknown product {which!r}, expected one of {_PRODUCTS}")
    if which == "L2":
        return float(a.coeffs @ (space.M @ b.coeffs))
    if which == "H1semi":
        return float(a.coeffs @ (space.S @ b.coeffs))
    return float(a.coeffs @ ((space.M + space.S) @ b.coeffs))


def _eval_1d(space: FemSpace, coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
    dom = space.domain
    if np.any(x < dom.a - 1e-12) or np.any(x > dom.b + 1e-12):
        raise ValueError("evaluation point outside the domain")
    xp = np.concatenate([[dom.a], space.nodes, [dom.b]])
    fp = np.concatenate([[0.0], coeffs, [0.0]])
    return np.interp(x, xp, fp)


def _eval_2d(space: FemSpace, coeffs: np.ndarray, pts: np.ndarray) -> np.ndarray:
    dom = space.domain
    x, y = pts[:, 0], pts[:, 1]
    if (np.any(x < dom.ax - 1e-12) or np.any(x > dom.bx + 1e-12)
            or np.any(y < dom.ay - 1e-12) or np.any(y > dom.by + 1e-12)):
        raise ValueError("evaluation point outside the domain")
    nx = space.grid_x.size + 1
    ny = space.grid_y.size + 1
    # nodal values padded with the boundary zeros
    Z = np.zeros((nx + 1, ny + 1))
    Z[1:nx, 1:ny] = coeffs.reshape(nx - 1, ny - 1)
    h = space.h
    sx = np.clip((x - dom.ax) / h, 0.0, float(nx))
    sy = np.clip((y - dom.ay) / h, 0.0, float(ny))
    ix = np.minimum(sx.astype(int), nx - 1)
    iy = np.minimum(sy.astype(int), ny - 1)
    fx = np.minimum(sx - ix, 1.0)
    fy = np.minimum(sy - iy, 1.0)
    return ((1 - fx) * (1 - fy) * Z[ix, iy] + fx * (1 - fy) * Z[ix + 1, iy]
            + (1 - fx) * fy * Z[ix, iy + 1] + fx * fy * Z[ix + 1, iy + 1])


def eval_at(field: Field, points) -> np.ndarray:
    """Piecewise-linear (bilinear in 2D) evaluation; zero on the boundary."""
    space = field.space
    if space.dim == 1:
        return _eval_1d(space, field.coeffs, np.atleast_1d(np.asarray(points, dtype=float)))
    return _eval_2d(space, field.coeffs, np.atleast_2d(np.asarray(points, dtype=float)))


def _load_1d(space: FemSpace, f) -> np.ndarray:
    dom = space.domain
    h = space.h
    n = space.ndof
    load = np.zeros(n)
    lefts = dom.a + h * np.arange(n + 1)
    for gx, gw in zip(_GAUSS_X, _GAUSS_W):
        xq = lefts + gx * h
        fv = np.asarray(f(xq), dtype=float)
        w = gw * h
        load += w * fv[:n] * gx            # rising part of hat i on cell i
        load += w * fv[1:] * (1.0 - gx)    # falling part of hat i on cell i+1
    return load


def _load_2d(space: FemSpace, f) -> np.ndarray:
    dom = space.domain
    h = space.h
    nx = space.grid_x.size
    ny = space.grid_y.size
    cx = dom.ax + h * np.arange(nx + 1)
    cy = dom.ay + h * np.arange(ny + 1)
    acc = np.zeros((nx + 2, ny + 2))       # padded nodal accumulator
    for gx, wx in zip(_GAUSS_X, _GAUSS_W):
        for gy, wy in zip(_GAUSS_X, _GAUSS_W):
            XQ, YQ = np.meshgrid(cx + gx * h, cy + gy * h, indexing="ij")
            FV = np.asarray(f(XQ, YQ), dtype=float) * (wx * wy * h * h)
            acc[:-1, :-1] += FV * (1 - gx) * (1 - gy)
            acc[1:, :-1] += FV * gx * (1 - gy)
            acc[:-1, 1:] += FV * (1 - gx) * gy
            acc[1:, 1:] += FV * gx * gy
    return acc[1:nx + 1, 1:ny + 1].ravel()


def project_l2(space: FemSpace, f) -> Field:
    """L2 projection of a function onto the space (3-point Gauss loads)."""
    load = _load_1d(space, f) if space.dim == 1 else _load_2d(space, f)
    return Field(space, space.mass_solve(load))


def load_vector(space: FemSpace, f) -> np.ndarray:
    """Load vector (f, phi_i) by the same 3-point Gauss rule as project_l2."""
    return _load_1d(space, f) if space.dim == 1 else _load_2d(space, f)


def discrete_n_norm(values) -> float:
    """Root mean square (1/n sum |v_i|^2)^(1/2) of sampled point values."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("discrete n-norm of an empty sample")
    return float(np.sqrt(np.mean(v * v)))
