"""Mittag-Leffler function on the negative real axis and exact modal solutions.

The two-parameter function E_{a,b}(z) = sum_k z^k / Gamma(a k + b) governs the
modal decay of the fractional evolution: a mode with eigenvalue mu driven by
the initial-velocity source has terminal value T * E_{a,2}(-mu T^a) * coeff.
These closed forms are the ground-truth oracle the time steppers are tested
against.

Evaluation layout (z <= 0 only):
  |z| <= 10      : Taylor series, compensated (Kahan) summation in doubles.
  |z| >  10      : algebraic asymptotic series truncated at its smallest term,
                   accepted only when its error estimate (smallest term plus
                   the oscillatory-tail envelope) certifies <= 1e-9 relative;
                   otherwise the Taylor series summed in double-double.
The double-double brute-force series (`mittag_leffler_series`) doubles as the
reference oracle for validating the production evaluator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import mpmath
from scipy.special import gammaln

from .doubledouble import dd_add, dd_mul, dd_from_float

__all__ = [
    "mittag_leffler",
    "mittag_leffler_series",
    "terminal_mode_value",
    "mode_ratio",
    "SpectralSolution",
    "interval_solution",
    "square_solution",
    "spectral_terminal_field",
]

#: relative accuracy target of the production evaluator
TARGET_REL = 1e-8

_INV_GAMMA_DD: dict[tuple[float, float], list[tuple[float, float, int]]] = {}
_TABLE_CHUNK = 256


def _inv_gamma_table(alpha: float, beta: float, kmax: int) -> list[tuple[float, float, int]]:
    """1/Gamma(alpha*k + beta) for k = 0..kmax as (hi, lo, exp2) triples.

    The value is (hi + lo) * 2^exp2 with the dd mantissa near 1, so entries
    stay representable far past the double underflow threshold.
    """
    key = (float(alpha), float(beta))
    table = _INV_GAMMA_DD.setdefault(key, [])
    if len(table) <= kmax:
        upto = ((kmax // _TABLE_CHUNK) + 1) * _TABLE_CHUNK
        with mpmath.workdps(50):
            for k in range(len(table), upto + 1):
                v = 1 / mpmath.gamma(alpha * k + beta)
                e = mpmath.mag(v)
                m = mpmath.ldexp(v, -e)
                hi = float(m)
                lo = float(m - hi)
                table.append((hi, lo, int(e)))
    return table


def _validate(alpha: float, beta: float, z: float) -> None:
    if not (0.0 < alpha <= 2.0):
        raise ValueError(f"alpha must be in (0, 2], got {alpha}")
    if not beta > 0.0:
        raise ValueError(f"beta must be positive, got {beta}")
    if z > 0.0:
        raise ValueError(f"only z <= 0 is supported, got {z}")
    if not np.isfinite(z):
        raise ValueError("z must be finite")


def mittag_leffler_series(alpha: float, beta: float, z: float,
                          max_terms: int = 10_000) -> float:
    """Brute-force reference: Taylor series summed in double-double arithmetic.

    Terms are formed as dd products of the running power z^k with correctly
    rounded 1/Gamma(alpha k + beta) constants, so the cancellation of the
    alternating series (up to ~exp(|z|^(1/alpha))) is absorbed by the ~31
    digit accumulator.  This is the oracle the production evaluator is
    validated against; it is slow, has no large-|z| escape hatch, and raises
    once the cancellation outruns even the dd accumulator.
    """
    _validate(alpha, beta, z)
    s, max_mag, _ = _series_dd(alpha, beta, z, max_terms)
    if s == 0.0 or 4e-31 * max_mag > 1e-10 * abs(s):
        raise ValueError(
            f"series cancellation exceeds dd precision for E_{{{alpha},{beta}}}({z})")
    return s


def _series_dd(alpha: float, beta: float, z: float,
               max_terms: int) -> tuple[float, float, int]:
    """dd series value, the largest term magnitude met, and terms used.

    The running power z^k is kept as a dd mantissa with a separate base-2
    exponent (renormalized each step, which is exact), so neither the power
    nor the 1/Gamma factors over- or underflow before the terms themselves
    become negligible.  Terms whose true magnitude exceeds the double range
    raise, since no amount of dd accumulation represents them.
    """
    table = _inv_gamma_table(alpha, beta, min(max_terms, _TABLE_CHUNK))
    s = (table[0][0] * 2.0**table[0][2], table[0][1] * 2.0**table[0][2])
    zm, ze = math.frexp(z)
    pm = dd_from_float(1.0)
    pe = 0
    peak = abs(z) ** (1.0 / alpha)
    max_mag = abs(s[0])
    k = 0
    for k in range(1, max_terms + 1):
        if k >= len(table):
            table = _inv_gamma_table(alpha, beta, k + _TABLE_CHUNK)
        pm = dd_mul(pm, (zm, 0.0))
        pe += ze
        shift = math.frexp(pm[0])[1]
        if shift:
            pm = (math.ldexp(pm[0], -shift), math.ldexp(pm[1], -shift))
            pe += shift
        ghi, glo, ge = table[k]
        tm = dd_mul(pm, (ghi, glo))
        te = pe + ge
        if te > 1020:
            raise ValueError(
                f"series term exceeds double range for E_{{{alpha},{beta}}}({z})")
        if te < -1070:
            if alpha * k + beta > peak + 2.0:
                break
            continue
        t = (math.ldexp(tm[0], te), math.ldexp(tm[1], te))
        s = dd_add(s, t)
        mag = abs(t[0])
        if mag > max_mag:
            max_mag = mag
        if alpha * k + beta > peak + 2.0 and mag < 1e-40 * max(abs(s[0]), 1e-300):
            break
    return s[0] + s[1], max_mag, k


def _series_kahan(alpha: float, beta: float, z: float) -> float:
    """Plain-double compensated series; adequate for |z| <= 10."""
    x = -z
    s = math.exp(-gammaln(beta))
    comp = 0.0
    peak = x ** (1.0 / alpha) if x > 0 else 0.0
    lx = math.log(x) if x > 0 else -math.inf
    for k in range(1, 600):
        mag = math.exp(k * lx - gammaln(alpha * k + beta))
        term = -mag if k % 2 else mag
        y = term - comp
        t = s + y
        comp = (t - s) - y
        s = t
        if alpha * k + beta > peak + 2.0 and mag < 1e-18 * max(abs(s), 1e-300):
            break
    return s


def _signed_log_rgamma(w: float) -> tuple[float, float]:
    """(sign, log magnitude) of 1/Gamma(w); sign 0 at the poles w = 0, -1, ..."""
    if w > 0.0:
        return 1.0, -gammaln(w)
    near = round(w)
    if w == near:
        return 0.0, -math.inf
    # reflection: 1/Gamma(w) = Gamma(1-w) sin(pi w) / pi, with the sine argument
    # reduced exactly so large |w| keeps full precision
    wr = w - near
    sin_val = math.sin(math.pi * wr)
    if near % 2:
        sin_val = -sin_val
    return math.copysign(1.0, sin_val), gammaln(1.0 - w) + math.log(abs(sin_val)) - math.log(math.pi)


def _oscillatory_envelope(alpha: float, beta: float, x: float) -> float:
    """Bound on the exponential-oscillatory part omitted by the algebraic series."""
    if alpha < 1.0:
        return 0.0
    expo = x ** (1.0 / alpha) * math.cos(math.pi / alpha)
    if expo > 200.0:
        return math.inf
    return (2.0 / alpha) * x ** ((1.0 - beta) / alpha) * math.exp(expo)


def _asymptotic(alpha: float, beta: float, z: float) -> tuple[float, float]:
    """Algebraic expansion -sum_k z^{-k}/Gamma(beta - alpha k), truncated
    before the first growing term.  Returns (value, absolute error estimate);
    the estimate is the first omitted term plus the oscillatory envelope.
    Terms at Gamma poles vanish; a long run of poles means the expansion
    terminated and only the envelope remains."""
    x = -z
    lx = math.log(x)
    s = 0.0
    comp = 0.0
    omitted = 0.0
    prev_mag = math.inf
    poles_in_a_row = 0
    for k in range(1, 400):
        sgn, logmag = _signed_log_rgamma(beta - alpha * k)
        if sgn == 0.0:
            poles_in_a_row += 1
            if poles_in_a_row >= 8:
                omitted = 0.0
                break
            continue
        poles_in_a_row = 0
        logt = -k * lx + logmag
        mag = math.exp(min(logt, 300.0))
        if mag >= prev_mag:
            omitted = mag
            break
        term = -sgn * mag if k % 2 == 0 else sgn * mag
        # term_k = -z^{-k}/Gamma(w) = -(-1)^k x^{-k}/Gamma(w)
        y = term - comp
        t = s + y
        comp = (t - s) - y
        s = t
        prev_mag = mag
        omitted = mag
        if mag < 1e-20 * max(abs(s), 1e-300):
            break
    return s, omitted + _oscillatory_envelope(alpha, beta, x)


def mittag_leffler(alpha: float, beta: float, z: float) -> float:
    """E_{alpha,beta}(z) for z <= 0, alpha in (0, 2], beta > 0.

    Relative accuracy <= 1e-8 over the supported range; raises ValueError when
    neither branch can certify that accuracy (very large |z| combined with
    alpha near 2, far outside the scales this package uses).
    """
    _validate(alpha, beta, z)
    if z == 0.0:
        return math.exp(-gammaln(beta))
    if -z <= 10.0:
        return _series_kahan(alpha, beta, z)

    val, err = _asymptotic(alpha, beta, z)
    if val != 0.0 and err <= 1e-9 * abs(val):
        return val

    s, max_mag, _ = _series_dd(alpha, beta, z, 10_000)
    dd_err = 4e-31 * max_mag
    if s != 0.0 and dd_err <= TARGET_REL * abs(s):
        return s
    raise ValueError(
        f"cannot certify 1e-8 accuracy for E_{{{alpha},{beta}}}({z})")


def terminal_mode_value(alpha: float, mu: float, T: float, a1_coeff: float) -> float:
    """Terminal value T * E_{alpha,2}(-mu T^alpha) * a1_coeff of one mode."""
    if mu < 0.0:
        raise ValueError(f"eigenvalue must be nonnegative, got {mu}")
    if T <= 0.0:
        raise ValueError(f"terminal time must be positive, got {T}")
    return T * mittag_leffler(alpha, 2.0, -mu * T**alpha) * a1_coeff


def mode_ratio(alpha: float, mu: float, T: float) -> float:
    """Modal amplification factor 1 / (T * E_{alpha,2}(-mu T^alpha)).

    This is the factor mapping an observation-system mode back to the forward
    mode.  E_{alpha,2} can vanish on the negative axis for alpha in (1, 2);
    a vanishing denominator raises ZeroDivisionError rather than returning a
    huge garbage value.
    """
    x = mu * T**alpha
    val = mittag_leffler(alpha, 2.0, -x)
    if abs(val) < 4e-13 / (1.0 + x):
        raise ZeroDivisionError(
            f"E_{{{alpha},2}}({-x}) vanishes; modal ratio undefined")
    return 1.0 / (T * val)


@dataclass(frozen=True)
class SpectralSolution:
    """Exact modal solution of the forward problem on a reference domain.

    ``domain`` is "interval" for (0, pi) with eigenpairs (m^2, sin(m x)), or
    "square" for the unit square with ((k^2+l^2) pi^2, sin(k pi x) sin(l pi y)).
    ``modes`` holds (index, eigenvalue, coefficient) triples, the coefficient
    being the expansion coefficient of the initial velocity in that basis.
    """

    alpha: float
    T: float
    domain: str
    modes: tuple

    def __post_init__(self):
        if self.domain not in ("interval", "square"):
            raise ValueError(f"unknown domain {self.domain!r}")
        for _, mu, c in self.modes:
            if not (np.isfinite(mu) and mu >= 0.0):
                raise ValueError(f"bad eigenvalue {mu}")
            if not np.isfinite(c):
                raise ValueError(f"bad coefficient {c}")


def interval_solution(alpha: float, T: float, coeffs) -> SpectralSolution:
    """Solution on (0, pi) from sine coefficients c_1..c_L (a1 = sum c_m sin(m x))."""
    modes = tuple((m, float(m * m), float(c))
                  for m, c in enumerate(coeffs, start=1))
    return SpectralSolution(alpha, T, "interval", modes)


def square_solution(alpha: float, T: float, coeff_map: dict) -> SpectralSolution:
    """Solution on the unit square from tensor-sine coefficients {(k, l): c}."""
    modes = tuple(((k, l), float((k * k + l * l) * math.pi**2), float(c))
                  for (k, l), c in sorted(coeff_map.items()))
    return SpectralSolution(alpha, T, "square", modes)


def spectral_terminal_field(sol: SpectralSolution, points) -> np.ndarray:
    """Evaluate u(x, T) = sum_m T E_{alpha,2}(-mu_m T^alpha) c_m phi_m(x)."""
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        return np.zeros(0)
    if sol.domain == "interval":
        x = np.atleast_1d(pts)
        out = np.zeros_like(x, dtype=float)
        for m, mu, c in sol.modes:
            if c == 0.0:
                continue
            out += terminal_mode_value(sol.alpha, mu, sol.T, c) * np.sin(m * x)
    else:
        xy = np.atleast_2d(pts)
        out = np.zeros(xy.shape[0])
        for (k, l), mu, c in sol.modes:
            if c == 0.0:
                continue
            out += (terminal_mode_value(sol.alpha, mu, sol.T, c)
                    * np.sin(k * math.pi * xy[:, 0]) * np.sin(l * math.pi * xy[:, 1]))
    return out
