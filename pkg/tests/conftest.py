"""Shared fixtures and independent reference implementations."""

import math

import mpmath
import numpy as np
import pytest

import fracpod as fp


def ml_reference(alpha: float, beta: float, z: float) -> float:
    """Mittag-Leffler series summed by mpmath at adaptive precision.

    Fully independent of the package's evaluators; the working precision
    grows with the cancellation scale exp(|z|^(1/alpha)).
    """
    x = abs(z)
    dps = int(40 + 0.55 * x ** (1.0 / alpha))
    with mpmath.workdps(dps):
        s = mpmath.mpf(0)
        zz = mpmath.mpf(z)
        k = 0
        while True:
            term = zz**k / mpmath.gamma(alpha * k + beta)
            s += term
            k += 1
            if k > 25 and abs(term) < mpmath.mpf(10) ** (-dps) * max(abs(s), mpmath.mpf(10) ** -60):
                break
            if k > 100_000:
                raise RuntimeError("reference series did not converge")
        return float(s)


@pytest.fixture(scope="session")
def interval_space():
    return fp.build_space(fp.Interval(0.0, math.pi), math.pi / 200)


@pytest.fixture(scope="session")
def small_space():
    return fp.build_space(fp.Interval(0.0, math.pi), math.pi / 40)


@pytest.fixture(scope="session")
def ex1_setup(interval_space):
    """Example-1 configuration: space, mesh, kernel and the sine source."""
    space = interval_space
    mesh = fp.build_graded_mesh(0.1, 400, 5.0)
    kernel = fp.l1_coefficients(mesh, 0.75)
    src = fp.SourceSpec(profile=fp.Field(space, np.sin(space.nodes)), alpha=1.5)
    return space, mesh, kernel, src


@pytest.fixture(scope="session")
def ex1_trajectory(ex1_setup):
    space, mesh, kernel, src = ex1_setup
    return fp.solve_full(space, mesh, kernel, src)
