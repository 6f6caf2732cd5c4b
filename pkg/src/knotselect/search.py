"""Joint minimization of the penalized criterion over knot count and placement.

For a given number of knots the placement problem is solved exactly by
enumeration up to two knots, and by a seeded exchange heuristic beyond
(best single insertion into the previous optimum, then coordinate
descent over knot positions on the candidate grid). Candidate knots are
restricted to a grid and must respect the minimum-spacing constraint
delta, including against the domain boundaries.

The residual sums of squares driving the enumeration are computed
incrementally: knot columns are orthogonalized once against the
polynomial part on a rescaled domain, after which the RSS of any small
knot subset reduces to a tiny Gram solve. Reported models are always
refit through :mod:`knotselect.lsq`, so returned RSS/PSS values are
canonical regardless of the search path.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import combinations

import numpy as np

from . import lsq
from .basis import (
    BasisFamily,
    BasisSpec,
    Domain,
    KnotConfig,
    UnsupportedConfigError,
    design_matrix,
)
from .criterion import LambdaPolicy, Penalty, cv_lambda, default_lambda, pss
from .lsq import DataError

_REL_IMPROVE = 1e-12  # coordinate-descent stopping threshold
_MAX_CYCLES = 100


class InfeasibleError(Exception):
    """No delta-feasible placement of the requested number of knots."""


@dataclass(frozen=True)
class SearchConfig:
    """Knobs for the knot search."""

    basis: BasisSpec
    delta: float = 15.0
    k_max: int = 10
    candidate_grid: tuple[float, ...] | None = None  # default: unique xs
    penalty: Penalty = field(default_factory=Penalty)
    exclude_left_frac: float = 0.0
    patience: int = 2

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.k_max < 0:
            raise ValueError("k_max must be >= 0")
        if not 0.0 <= self.exclude_left_frac < 1.0:
            raise ValueError("exclude_left_frac must be in [0, 1)")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")


@dataclass
class SplineModel:
    """A fitted spline: basis, selected knots, coefficients, criterion value."""

    basis: BasisSpec
    knots: KnotConfig
    coefficients: np.ndarray
    rss: float
    pss: float
    lambda_used: float
    fit: lsq.LsqFit = field(repr=False, default=None)

    @property
    def k(self) -> int:
        return self.knots.k

    def predict(self, xs, extrapolate: bool = False) -> np.ndarray:
        X = design_matrix(xs, self.basis, self.knots, extrapolate=extrapolate)
        return X @ self.coefficients

    def to_dict(self) -> dict:
        return {
            "basis": self.basis.family.value,
            "degree": self.basis.degree,
            "domain": [self.knots.domain.a, self.knots.domain.b],
            "knots": list(self.knots.knots),
            "coefficients": [float(c) for c in self.coefficients],
            "rss": self.rss,
            "pss": self.pss,
            "lambda": self.lambda_used,
        }


# ---------------------------------------------------------------------------
# RSS evaluators


class _ProjectedEngine:
    """Incremental RSS over knot subsets for the polynomial-piece bases.

    Works in the truncated-power parameterization on x rescaled to
    [0, 1]; truncated-power and B-spline designs with the same degree
    and knots span the same space, so their RSS agree and either family
    can be searched this way.
    """

    def __init__(self, xs, y, degree, grid, domain):
        z = (xs - domain.a) / domain.width
        zg = (np.asarray(grid, dtype=float) - domain.a) / domain.width
        P = np.column_stack([z**j for j in range(degree + 1)])
        Q0, _ = np.linalg.qr(P)
        C = np.where(z[:, None] >= zg[None, :], (z[:, None] - zg[None, :]) ** degree, 0.0)
        V = C - Q0 @ (Q0.T @ C)
        r0 = y - Q0 @ (Q0.T @ y)
        self.rss0 = float(r0 @ r0)
        self.vr = V.T @ r0
        self.gram = V.T @ V
        self.norm2 = np.diag(self.gram).copy()
        # columns (numerically) inside the polynomial span contribute nothing
        col_scale = np.sum(C * C, axis=0)
        self.live = self.norm2 > 1e-24 * np.maximum(col_scale, 1.0)

    def rss(self, idx: tuple[int, ...]) -> float:
        idx = [i for i in idx if self.live[i]]
        if not idx:
            return self.rss0
        G = self.gram[np.ix_(idx, idx)]
        g = self.vr[list(idx)]
        try:
            c = np.linalg.solve(G, g)
            if not np.all(np.isfinite(c)):
                raise np.linalg.LinAlgError
        except np.linalg.LinAlgError:
            c = np.linalg.lstsq(G, g, rcond=1e-12)[0]
        return max(self.rss0 - float(g @ c), 0.0)

    def rss_singles(self) -> np.ndarray:
        red = np.zeros_like(self.norm2)
        np.divide(self.vr**2, self.norm2, out=red, where=self.live)
        return np.maximum(self.rss0 - red, 0.0)

    def rss0_scale(self) -> float:
        return self.rss0


class _DirectEngine:
    """RSS by a full solve per candidate set (natural cubic searches)."""

    def __init__(self, xs, y, spec, grid, domain):
        self.xs = xs
        self.y = y
        self.spec = spec
        self.grid = np.asarray(grid, dtype=float)
        self.domain = domain

    def rss(self, idx: tuple[int, ...]) -> float:
        knots = tuple(self.grid[list(idx)])
        X = _design_with_fallback(self.xs, self.spec, KnotConfig(knots, self.domain))
        return lsq.solve(X, self.y).rss

    def rss_singles(self) -> np.ndarray:
        return np.array([self.rss((i,)) for i in range(self.grid.size)])

    def rss0_scale(self) -> float:
        return float(self.y @ self.y)


def _design_with_fallback(xs, spec: BasisSpec, kc: KnotConfig) -> np.ndarray:
    """Design matrix, substituting truncated power where natural cubic
    cannot be built (fewer than 2 interior knots)."""
    if spec.family is BasisFamily.NATURAL_CUBIC and kc.k < 2:
        spec = BasisSpec(BasisFamily.TRUNCATED_POWER, degree=3)
    return design_matrix(xs, spec, kc)


# ---------------------------------------------------------------------------
# feasible placement search


def _feasible_mask(grid: np.ndarray, domain: Domain, delta: float, left_bar: float) -> np.ndarray:
    return (
        (grid - domain.a > delta)
        & (domain.b - grid > delta)
        & (grid >= left_bar)
    )


def _set_feasible(grid: np.ndarray, idx, delta: float) -> bool:
    vals = grid[list(idx)]
    return bool(np.all(np.diff(vals) > delta))


def _canonical_rss(xs, y, cfg: SearchConfig, grid, domain):
    """RSS of a grid-index tuple through the same path used for refits."""

    def rss(idx) -> float:
        kc = KnotConfig(tuple(grid[list(idx)]), domain)
        return lsq.solve(_design_with_fallback(xs, cfg.basis, kc), y).rss

    return rss


def _resolve_near_ties(finalists, canon_rss, k, lam):
    """Pick among near-minimal placements by canonical criterion value.

    The incremental engine's RSS values can differ from the canonical
    refit in the last bits, which matters only when distinct placements
    tie exactly. Refitting the shortlist restores the documented
    tie-break: smallest criterion, then lexicographically smallest knot
    vector.
    """
    if len(finalists) == 1:
        return finalists[0]
    keyed = [(pss(canon_rss(idx), k, lam), idx) for idx in sorted(finalists)]
    return min(keyed)[1]


def _best_placement(engine, grid, delta, singles_ok, k, prev_best, canon_rss, lam):
    """Best grid indices for exactly k knots; exact for k <= 2.

    ``prev_best`` is the optimal (k-1)-set used to seed the exchange
    heuristic. Exact ties resolve to the lexicographically smallest
    index vector via a canonical refit of the shortlist.
    """
    ok = np.flatnonzero(singles_ok)
    if k == 0:
        return ()
    if ok.size < k:
        raise InfeasibleError(f"cannot place {k} knots on the feasible grid")

    if k == 1:
        rss1 = engine.rss_singles()
        scale = max(float(rss1[ok].min()), float(engine.rss0_scale()))
        tol = 1e-8 * scale
        lo = float(rss1[ok].min())
        finalists = [(int(i),) for i in ok if rss1[i] <= lo + tol]
        return _resolve_near_ties(finalists, canon_rss, k, lam)

    if k == 2:
        pairs, vals = [], []
        for i, j in combinations(ok, 2):
            if grid[j] - grid[i] <= delta:
                continue
            pairs.append((int(i), int(j)))
            vals.append(engine.rss((int(i), int(j))))
        if not pairs:
            raise InfeasibleError("no delta-feasible pair of knots")
        lo = min(vals)
        tol = 1e-8 * max(lo, float(engine.rss0_scale()))
        finalists = [p for p, v in zip(pairs, vals) if v <= lo + tol]
        return _resolve_near_ties(finalists, canon_rss, k, lam)

    # k >= 3: insert the RSS-minimizing grid point into the previous optimum
    cur, cur_rss = None, np.inf
    prev = list(prev_best)
    for g in ok:
        if g in prev:
            continue
        cand = tuple(sorted(prev + [int(g)]))
        if not _set_feasible(grid, cand, delta):
            continue
        r = engine.rss(cand)
        if r < cur_rss:
            cur, cur_rss = list(cand), r
    if cur is None:
        raise InfeasibleError(f"no delta-feasible insertion for k={k}")

    # coordinate descent: move each knot to its RSS-minimizing position
    for _ in range(_MAX_CYCLES):
        improved = False
        for j in range(k):
            others = cur[:j] + cur[j + 1 :]
            move, move_rss = cur[j], cur_rss
            for g in ok:
                if g in others or g == cur[j]:
                    continue
                cand = tuple(sorted(others + [int(g)]))
                if not _set_feasible(grid, cand, delta):
                    continue
                r = engine.rss(cand)
                if r < move_rss:
                    move, move_rss = int(g), r
            if move != cur[j] and move_rss < cur_rss * (1.0 - _REL_IMPROVE):
                cur = sorted(others + [move])
                cur_rss = move_rss
                improved = True
        if not improved:
            break
    return tuple(cur)


# ---------------------------------------------------------------------------
# public operations


def _prepare(xs, y, cfg: SearchConfig):
    xs = np.asarray(xs, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if xs.size != y.size:
        raise DataError("xs and y must have the same length")
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(y))):
        raise DataError("non-finite values in xs or y")
    order = np.argsort(xs, kind="stable")
    xs, y = xs[order], y[order]
    if xs[0] == xs[-1]:
        raise DataError("constant x: nothing to fit")
    domain = Domain(float(xs[0]), float(xs[-1]))
    if xs.size <= cfg.basis.dimension(0):
        raise DataError(
            f"need more than {cfg.basis.dimension(0)} observations for the k=0 fit"
        )

    if cfg.candidate_grid is not None:
        grid = np.asarray(cfg.candidate_grid, dtype=float)
        if grid.size and not np.all(np.diff(grid) > 0):
            raise ValueError("candidate_grid must be strictly increasing")
    else:
        grid = np.unique(xs)
    grid = grid[(grid > domain.a) & (grid < domain.b)]
    left_bar = domain.a + cfg.exclude_left_frac * domain.width
    return xs, y, domain, grid, left_bar


def _make_engine(xs, y, cfg: SearchConfig, grid, domain):
    if cfg.basis.family is BasisFamily.NATURAL_CUBIC:
        return _DirectEngine(xs, y, cfg.basis, grid, domain)
    return _ProjectedEngine(xs, y, cfg.basis.degree, grid, domain)


def _resolve_lambda(xs, y, cfg: SearchConfig) -> float:
    pen = cfg.penalty
    if pen.policy is LambdaPolicy.FIXED:
        return float(pen.lam)
    if pen.policy is LambdaPolicy.VARIANCE_SCALED_LOG:
        return default_lambda(y, xs)
    base = default_lambda(y, xs)
    grid = pen.cv_grid or tuple(base * f for f in (0.25, 0.5, 1.0, 2.0, 4.0))
    return cv_lambda(
        xs,
        y,
        cfg.basis,
        grid,
        pen.cv_folds,
        seed=pen.cv_seed,
        delta=cfg.delta,
        k_max=cfg.k_max,
        candidate_grid=cfg.candidate_grid,
        exclude_left_frac=cfg.exclude_left_frac,
        patience=cfg.patience,
    )


def _refit(xs, y, cfg: SearchConfig, domain, knots, lam) -> SplineModel:
    kc = KnotConfig(knots, domain)
    X = _design_with_fallback(xs, cfg.basis, kc)
    fit = lsq.solve(X, y)
    basis = cfg.basis
    if basis.family is BasisFamily.NATURAL_CUBIC and kc.k < 2:
        basis = BasisSpec(BasisFamily.TRUNCATED_POWER, degree=3)
    return SplineModel(
        basis=basis,
        knots=kc,
        coefficients=fit.coefficients,
        rss=fit.rss,
        pss=pss(fit.rss, kc.k, lam),
        lambda_used=lam,
        fit=fit,
    )


def best_for_k(xs, y, k: int, cfg: SearchConfig, lam: float | None = None) -> SplineModel:
    """Best delta-feasible placement of exactly k knots.

    Exact by enumeration for k <= 2; the seeded exchange heuristic
    beyond. Raises :class:`InfeasibleError` when no placement fits.
    """
    if k > cfg.k_max:
        raise ValueError(f"k={k} exceeds k_max={cfg.k_max}")
    xs, y, domain, grid, left_bar = _prepare(xs, y, cfg)
    if lam is None:
        lam = _resolve_lambda(xs, y, cfg)
    engine = _make_engine(xs, y, cfg, grid, domain)
    singles_ok = _feasible_mask(grid, domain, cfg.delta, left_bar)
    canon = _canonical_rss(xs, y, cfg, grid, domain)
    prev = ()
    for kk in range(1, k + 1):
        prev = _best_placement(engine, grid, cfg.delta, singles_ok, kk, prev, canon, lam)
    return _refit(xs, y, cfg, domain, tuple(grid[list(prev)]), lam)


def select(xs, y, cfg: SearchConfig) -> SplineModel:
    """Minimize the penalized criterion jointly over knot count and placement.

    Knot counts are visited in increasing order and the loop stops once
    the criterion has not improved for ``cfg.patience`` consecutive
    counts (or the count cap / grid feasibility is hit). Ties prefer
    fewer knots, then the lexicographically smallest knot vector.
    """
    xs, y, domain, grid, left_bar = _prepare(xs, y, cfg)
    lam = _resolve_lambda(xs, y, cfg)
    engine = _make_engine(xs, y, cfg, grid, domain)
    singles_ok = _feasible_mask(grid, domain, cfg.delta, left_bar)
    canon = _canonical_rss(xs, y, cfg, grid, domain)

    best_model = None
    stale = 0
    prev_placement = ()
    k = 0
    while k <= cfg.k_max:
        try:
            placement = _best_placement(
                engine, grid, cfg.delta, singles_ok, k, prev_placement, canon, lam
            )
        except InfeasibleError:
            break  # larger k cannot be feasible either
        prev_placement = placement
        model = _refit(xs, y, cfg, domain, tuple(grid[list(placement)]), lam)
        if best_model is None or model.pss < best_model.pss:
            best_model = model
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break
        k += 1
    return best_model
