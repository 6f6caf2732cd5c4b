"""Spline basis families evaluated as design-matrix rows.

Three families are supported on a common interface:

* truncated power: ``[1, x, ..., x^p, (x-t_1)_+^p, ..., (x-t_K)_+^p]``
* B-spline: clamped Cox-de Boor basis on the boundary-augmented knot
  vector (boundary knots repeated to multiplicity m = p + 1)
* natural cubic: cubic splines with zero curvature at both domain
  boundaries, linear when continued outside the domain

All evaluation is pure and vectorized; nothing here holds state.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from math import factorial

import numpy as np


class SplineDomainError(ValueError):
    """Evaluation point outside the spline domain (and extrapolation off)."""


class UnsupportedConfigError(ValueError):
    """Basis/knot combination the family cannot represent."""


@dataclass(frozen=True)
class Domain:
    """Closed interval [a, b] the spline is defined on."""

    a: float
    b: float

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)):
            raise ValueError("domain bounds must be finite")
        if not self.a < self.b:
            raise ValueError(f"domain requires a < b, got [{self.a}, {self.b}]")

    @property
    def width(self) -> float:
        return self.b - self.a

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (x >= self.a) & (x <= self.b)


@dataclass(frozen=True)
class KnotConfig:
    """Sorted interior knots strictly inside a domain. K = 0 is allowed."""

    knots: tuple[float, ...]
    domain: Domain

    def __post_init__(self):
        object.__setattr__(self, "knots", tuple(float(t) for t in self.knots))
        ts = np.asarray(self.knots, dtype=float)
        if ts.size and not np.all(np.diff(ts) > 0):
            raise ValueError("knots must be strictly increasing")
        if ts.size and not np.all((ts > self.domain.a) & (ts < self.domain.b)):
            raise ValueError("knots must lie strictly inside the domain")

    @property
    def k(self) -> int:
        return len(self.knots)


class BasisFamily(Enum):
    TRUNCATED_POWER = "truncated-power"
    BSPLINE = "bspline"
    NATURAL_CUBIC = "natural-cubic"


@dataclass(frozen=True)
class BasisSpec:
    """Basis family plus polynomial degree p (order m = p + 1).

    The natural cubic family is, by construction, degree 3.
    """

    family: BasisFamily
    degree: int = 3

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError("degree must be >= 0")
        if self.family is BasisFamily.NATURAL_CUBIC and self.degree != 3:
            raise ValueError("natural cubic basis requires degree == 3")

    @property
    def order(self) -> int:
        return self.degree + 1

    def dimension(self, k: int) -> int:
        """Number of basis functions for ``k`` interior knots."""
        if self.family is BasisFamily.TRUNCATED_POWER:
            return self.degree + 1 + k
        if self.family is BasisFamily.BSPLINE:
            return self.order + k
        return k + 2  # natural cubic


def _check_in_domain(xs: np.ndarray, domain: Domain):
    if not np.all(np.isfinite(xs)):
        raise SplineDomainError("evaluation points must be finite")
    inside = domain.contains(xs)
    if not np.all(inside):
        bad = float(xs[~inside][0])
        raise SplineDomainError(
            f"evaluation point {bad} outside domain [{domain.a}, {domain.b}]"
        )


# ---------------------------------------------------------------------------
# truncated power


def _truncated_power_design(xs: np.ndarray, p: int, knots: np.ndarray) -> np.ndarray:
    cols = [xs**j for j in range(p + 1)]
    for t in knots:
        cols.append(np.where(xs >= t, (xs - t) ** p, 0.0))
    return np.column_stack(cols)


def truncated_power_row(x: float, spec: BasisSpec, kc: KnotConfig) -> np.ndarray:
    """Row [1, x, ..., x^p, (x-t_1)_+^p, ..., (x-t_K)_+^p]."""
    if spec.family is not BasisFamily.TRUNCATED_POWER:
        raise UnsupportedConfigError("spec.family must be TRUNCATED_POWER")
    xs = np.asarray([x], dtype=float)
    _check_in_domain(xs, kc.domain)
    return _truncated_power_design(xs, spec.degree, np.asarray(kc.knots))[0]


# ---------------------------------------------------------------------------
# B-splines (Cox-de Boor)


def _augmented_knots(kc: KnotConfig, m: int) -> np.ndarray:
    a, b = kc.domain.a, kc.domain.b
    return np.concatenate([np.full(m, a), np.asarray(kc.knots), np.full(m, b)])


def _bspline_design(xs: np.ndarray, t: np.ndarray, m: int) -> np.ndarray:
    """All order-m B-splines on knot vector t, evaluated at xs.

    Returns shape (len(xs), len(t) - m). The last half-open interval is
    closed at t[-1] so the row there is still a partition of unity.
    """
    n = xs.shape[0]
    nseg = len(t) - 1
    B = np.zeros((n, nseg))
    for i in range(nseg):
        if t[i] < t[i + 1]:
            B[:, i] = (t[i] <= xs) & (xs < t[i + 1])
    # right-endpoint closure: fold x == t[-1] into the last nonempty interval
    at_end = xs == t[-1]
    if np.any(at_end):
        last = max(i for i in range(nseg) if t[i] < t[i + 1])
        B[at_end, last] = 1.0
    for order in range(2, m + 1):
        ncols = len(t) - order
        nb = np.zeros((n, ncols))
        for i in range(ncols):
            d1 = t[i + order - 1] - t[i]
            if d1 > 0:
                nb[:, i] += (xs - t[i]) / d1 * B[:, i]
            d2 = t[i + order] - t[i + 1]
            if d2 > 0:
                nb[:, i] += (t[i + order] - xs) / d2 * B[:, i + 1]
        B = nb
    return B


def _bspline_derivative_design(xs: np.ndarray, t: np.ndarray, m: int, d: int) -> np.ndarray:
    """d-th derivative of every order-m B-spline on t, at xs."""
    if d == 0:
        return _bspline_design(xs, t, m)
    if m == 1:
        return np.zeros((xs.shape[0], len(t) - 1))
    lower = _bspline_derivative_design(xs, t, m - 1, d - 1)
    ncols = len(t) - m
    out = np.zeros((xs.shape[0], ncols))
    for i in range(ncols):
        d1 = t[i + m - 1] - t[i]
        if d1 > 0:
            out[:, i] += (m - 1) / d1 * lower[:, i]
        d2 = t[i + m] - t[i + 1]
        if d2 > 0:
            out[:, i] -= (m - 1) / d2 * lower[:, i + 1]
    return out


def bspline_row(x: float, spec: BasisSpec, kc: KnotConfig) -> np.ndarray:
    """The m+K clamped B-spline values at x (boundary multiplicity m)."""
    if spec.family is not BasisFamily.BSPLINE:
        raise UnsupportedConfigError("spec.family must be BSPLINE")
    xs = np.asarray([x], dtype=float)
    _check_in_domain(xs, kc.domain)
    return _bspline_design(xs, _augmented_knots(kc, spec.order), spec.order)[0]


# ---------------------------------------------------------------------------
# natural cubic


def _natural_cubic_design(xs: np.ndarray, kc: KnotConfig) -> np.ndarray:
    """Natural cubic basis: dimension K + 2, zero curvature at a and b.

    Construction: cubic truncated-power terms at {a, t_1, ..., t_K}, each
    reduced against the boundary knot b so that every basis function is
    linear outside [a, b].
    """
    if kc.k < 2:
        raise UnsupportedConfigError(
            "natural cubic basis needs at least 2 interior knots; "
            "fall back to the truncated-power family"
        )
    a, b = kc.domain.a, kc.domain.b
    s = np.concatenate([[a], np.asarray(kc.knots), [b]])  # length K + 2

    def d(k: int) -> np.ndarray:
        num = np.where(xs >= s[k], (xs - s[k]) ** 3, 0.0)
        num -= np.where(xs >= s[-1], (xs - s[-1]) ** 3, 0.0)
        return num / (s[-1] - s[k])

    d_last = d(len(s) - 2)  # reference term anchored at t_K
    cols = [np.ones_like(xs), xs]
    for k in range(len(s) - 2):
        cols.append(d(k) - d_last)
    return np.column_stack(cols)


def natural_cubic_row(x: float, kc: KnotConfig) -> np.ndarray:
    """The K+2 natural cubic basis values at x (needs K >= 2)."""
    xs = np.asarray([x], dtype=float)
    _check_in_domain(xs, kc.domain)
    return _natural_cubic_design(xs, kc)[0]


# ---------------------------------------------------------------------------
# design matrices and extrapolation


def design_matrix(
    xs,
    spec: BasisSpec,
    kc: KnotConfig,
    extrapolate: bool = False,
) -> np.ndarray:
    """Stack basis rows for every evaluation point.

    With ``extrapolate=False`` any point outside [a, b] raises
    SplineDomainError. With ``extrapolate=True`` the basis is continued
    beyond the domain: truncated-power and B-spline rows extend the
    adjacent polynomial piece; natural cubic rows continue their linear
    tails.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if xs.size == 0:
        raise ValueError("xs must be nonempty")
    if not np.all(np.isfinite(xs)):
        raise SplineDomainError("evaluation points must be finite")
    if not extrapolate:
        _check_in_domain(xs, kc.domain)

    knots = np.asarray(kc.knots)
    if spec.family is BasisFamily.TRUNCATED_POWER:
        # the formula itself continues the boundary polynomial pieces
        return _truncated_power_design(xs, spec.degree, knots)
    if spec.family is BasisFamily.NATURAL_CUBIC:
        # linear outside [a, b] by construction
        return _natural_cubic_design(xs, kc)

    m = spec.order
    t = _augmented_knots(kc, m)
    inside = kc.domain.contains(xs)
    out = np.zeros((xs.size, len(t) - m))
    if np.any(inside):
        out[inside] = _bspline_design(xs[inside], t, m)
    if np.any(~inside):
        out[~inside] = _bspline_taylor_extension(xs[~inside], t, m, kc.domain)
    return out


def _bspline_taylor_extension(xs: np.ndarray, t: np.ndarray, m: int, domain: Domain) -> np.ndarray:
    """Continue each B-spline's boundary polynomial piece outside [a, b]."""
    out = np.zeros((xs.size, len(t) - m))
    for anchor, mask in ((domain.a, xs < domain.a), (domain.b, xs > domain.b)):
        if not np.any(mask):
            continue
        x0 = np.asarray([anchor])
        h = xs[mask] - anchor
        acc = np.zeros((h.size, len(t) - m))
        for j in range(m):
            dj = _bspline_derivative_design(x0, t, m, j)[0]
            acc += np.outer(h**j / factorial(j), dj)
        out[mask] = acc
    return out


def basis_row(x: float, spec: BasisSpec, kc: KnotConfig) -> np.ndarray:
    """Single basis row for any family."""
    if spec.family is BasisFamily.TRUNCATED_POWER:
        return truncated_power_row(x, spec, kc)
    if spec.family is BasisFamily.BSPLINE:
        return bspline_row(x, spec, kc)
    return natural_cubic_row(x, kc)
