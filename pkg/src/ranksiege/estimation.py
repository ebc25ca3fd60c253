"""Likelihood and distributionally robust estimation over the support set.

The support set is the probability simplex intersected with a Euclidean ball
of squared radius ``beta`` around the adversary's target scores. Both
estimators run projected gradient ascent; the robust one wraps a bisection on
the multiplier of the ball constraint around penalized simplex solves.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from scipy.special import log_expit

from ._kernels import penalized_max
from .btl import pair_weighted_grad
from .core import ComparisonGraph, num_pairs, pair_arrays
from .errors import DataError, InfeasibleError, NumericError

DEFAULT_BETA = 0.05


def simplex_project(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto ``{x >= 0, sum(x) = 1}``."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise DataError("simplex_project needs a nonempty vector")
    if not np.isfinite(v).all():
        raise NumericError("non-finite input to simplex projection")
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, v.size + 1)
    rho = np.flatnonzero(u - css / k > 0)[-1]
    shift = css[rho] / (rho + 1)
    return np.maximum(v - shift, 0.0)


def project_simplex_ball(
    v: np.ndarray, center: np.ndarray, radius_sq: float, max_iters: int = 100
) -> np.ndarray:
    """Exact projection onto the simplex intersected with a ball around ``center``.

    ``center`` must lie on the simplex. Off the ball the projection is
    ``simplex_project(center + t * (v - center))`` for the ``t`` in (0, 1]
    at which the squared distance to the center equals ``radius_sq``; on a
    fixed active support that distance is quadratic in ``t`` so each step is
    solved in closed form, with bisection as a fallback.
    """
    v = np.asarray(v, dtype=float)
    x = simplex_project(v)
    if radius_sq <= 0:
        return np.array(center, dtype=float)
    if np.sum((x - center) ** 2) <= radius_sq:
        return x
    d = v - center
    lo, hi = 0.0, 1.0
    t = 1.0
    for _ in range(max_iters):
        active = x > 0
        size = int(active.sum())
        drift = d[active].sum() / size
        a = d[active] - drift
        k = (center[active].sum() - 1.0) / size
        rest = float(np.sum(center[~active] ** 2))
        aa = float(a @ a)
        budget = radius_sq - size * k * k - rest
        t_new = np.sqrt(budget / aa) if aa > 0 and budget > 0 else None
        if t_new is None or not lo <= t_new <= hi:
            t_new = 0.5 * (lo + hi)
        x = simplex_project(center + t_new * d)
        dist = float(np.sum((x - center) ** 2))
        if np.array_equal(x > 0, active) and abs(dist - radius_sq) <= 1e-12 * max(radius_sq, 1e-300) + 1e-15:
            return x
        if dist > radius_sq:
            hi = t_new
        else:
            lo = t_new
        t = t_new
        if hi - lo < 1e-15:
            break
    x = simplex_project(center + lo * d) if t != lo else x
    return x


def simplex_project_rows(v: np.ndarray) -> np.ndarray:
    """Row-wise :func:`simplex_project` for a 2-d array."""
    u = -np.sort(-v, axis=1)
    css = np.cumsum(u, axis=1) - 1.0
    k = np.arange(1, v.shape[1] + 1)
    count = (u - css / k > 0).sum(axis=1)
    shift = css[np.arange(v.shape[0]), count - 1] / count
    return np.maximum(v - shift[:, None], 0.0)


def project_simplex_ball_rows(
    v: np.ndarray,
    centers: np.ndarray,
    radius_sq: np.ndarray,
    guess: np.ndarray | None = None,
    max_iters: int = 60,
) -> np.ndarray:
    """Row-wise :func:`project_simplex_ball` with one center and radius per row.

    ``guess`` holds a starting shrink factor per row (see
    :func:`project_simplex_ball`); after the call it is overwritten with the
    factors found, which makes repeated projections of nearby points cheap.
    """
    x = simplex_project_rows(v)
    dist = np.sum((x - centers) ** 2, axis=1)
    todo = np.flatnonzero(dist > radius_sq)
    if guess is not None:
        guess[dist <= radius_sq] = 1.0
    if todo.size == 0:
        return x
    d = v[todo] - centers[todo]
    c = centers[todo]
    r = radius_sq[todo]
    lo = np.zeros(todo.size)
    hi = np.ones(todo.size)
    t = np.ones(todo.size)
    xs = x[todo]
    if guess is not None:
        t = np.clip(guess[todo], 0.0, 1.0)
        xs = simplex_project_rows(c + t[:, None] * d)
        dist = np.sum((xs - c) ** 2, axis=1)
        hi = np.where(dist > r, t, 1.0)
        lo = np.where(dist > r, 0.0, t)
    done = np.zeros(todo.size, dtype=bool)
    for _ in range(max_iters):
        active = xs > 0
        size = active.sum(axis=1)
        drift = (d * active).sum(axis=1) / size
        a = (d - drift[:, None]) * active
        k = ((c * active).sum(axis=1) - 1.0) / size
        rest = (c * c * ~active).sum(axis=1)
        aa = (a * a).sum(axis=1)
        budget = r - size * k * k - rest
        with np.errstate(divide="ignore", invalid="ignore"):
            t_new = np.sqrt(budget / aa)
        bad = ~np.isfinite(t_new) | (budget <= 0) | (t_new < lo) | (t_new > hi)
        t_new = np.where(bad, 0.5 * (lo + hi), t_new)
        cand = simplex_project_rows(c + t_new[:, None] * d)
        dist = np.sum((cand - c) ** 2, axis=1)
        ok = np.all((cand > 0) == active, axis=1) & (np.abs(dist - r) <= 1e-12 * r + 1e-15)
        ok |= hi - lo < 1e-15
        upd = ~done
        xs[upd] = cand[upd]
        t[upd] = t_new[upd]
        over = upd & (dist > r)
        hi = np.where(over, t_new, hi)
        lo = np.where(upd & ~over, t_new, lo)
        done |= ok
        if done.all():
            break
    if not done.all():
        left = ~done
        xs[left] = simplex_project_rows(c[left] + lo[left, None] * d[left])
        t[left] = lo[left]
    x[todo] = xs
    if guess is not None:
        guess[todo] = t
    return x


@dataclass(frozen=True)
class SupportSet:
    """Simplex points within squared distance ``radius_sq`` of ``center``."""

    center: np.ndarray
    radius_sq: float = DEFAULT_BETA

    def __post_init__(self) -> None:
        c = np.array(self.center, dtype=float)
        if c.ndim != 1 or c.size < 2:
            raise DataError("support center must be a vector of length >= 2")
        if (c < -1e-12).any() or abs(c.sum() - 1.0) > 1e-9:
            raise DataError("support center must lie on the simplex")
        if not self.radius_sq > 0:
            raise DataError(f"radius_sq must be positive, got {self.radius_sq}")
        c.setflags(write=False)
        object.__setattr__(self, "center", c)

    @property
    def n(self) -> int:
        return self.center.size

    def contains(self, theta: np.ndarray, tol: float = 1e-9) -> bool:
        theta = np.asarray(theta, dtype=float)
        return bool(
            (theta >= -tol).all()
            and abs(theta.sum() - 1.0) <= tol
            and np.sum((theta - self.center) ** 2) <= self.radius_sq + tol
        )

    def project(self, v: np.ndarray) -> np.ndarray:
        return project_simplex_ball(v, self.center, self.radius_sq)


@dataclass(frozen=True)
class RobustConfig:
    gamma: float = 0.0
    bisection_tol: float = 1e-4
    pg_iters: int = 2000
    pg_tol: float = 1e-12

    def __post_init__(self) -> None:
        if not self.gamma >= 0:
            raise DataError(f"gamma must be >= 0, got {self.gamma}")
        if not (self.bisection_tol > 0 and self.pg_tol > 0):
            raise DataError("tolerances must be positive")
        if self.pg_iters < 1:
            raise DataError("pg_iters must be >= 1")


def _check_normalized(p: np.ndarray, n: int) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (num_pairs(n),):
        raise DataError(f"expected {num_pairs(n)} pair weights, got shape {p.shape}")
    if (p < 0).any() or abs(p.sum() - 1.0) > 1e-8:
        raise DataError("pair weights must be a probability vector")
    return p


def as_pair_weights(weights: ComparisonGraph | np.ndarray, n: int) -> np.ndarray:
    if isinstance(weights, ComparisonGraph):
        if weights.n != n:
            raise DataError(f"graph has n={weights.n}, expected {n}")
        return weights.weights.astype(float)
    w = np.asarray(weights, dtype=float)
    if w.shape != (num_pairs(n),) or (w < 0).any():
        raise DataError("pair weights must be a nonnegative vector over ordered pairs")
    return w


def dro_coefficients(p: np.ndarray, gamma: float) -> np.ndarray:
    return np.sqrt(gamma) + p


def dro_objective(scores: np.ndarray, p: np.ndarray, gamma: float) -> float:
    """Robust objective ``sqrt(gamma) * sum_all log g + sum p log g`` (maximized)."""
    theta = np.asarray(scores, dtype=float)
    p = _check_normalized(p, theta.size)
    first, second, _ = pair_arrays(theta.size)
    return float(dro_coefficients(p, gamma) @ log_expit(theta[first] - theta[second]))


def dro_gradient(scores: np.ndarray, p: np.ndarray, gamma: float) -> np.ndarray:
    theta = np.asarray(scores, dtype=float)
    p = _check_normalized(p, theta.size)
    return pair_weighted_grad(theta, dro_coefficients(p, gamma))


def pair_lipschitz(coef: np.ndarray, n: int) -> float:
    """Gradient Lipschitz bound of ``sum coef_k log g_k``: half the max weighted degree."""
    first, second, _ = pair_arrays(n)
    degree = np.bincount(first, coef, minlength=n) + np.bincount(second, coef, minlength=n)
    return max(0.5 * float(degree.max()), 1e-12)


@dataclass
class AscentResult:
    x: np.ndarray
    iters: int
    step_norm: float
    converged: bool


def accelerated_ascent(
    grad: Callable[[np.ndarray], np.ndarray],
    project: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    lipschitz: float,
    max_iters: int,
    tol: float,
) -> AscentResult:
    """Projected gradient ascent with Nesterov momentum and adaptive restart.

    Stops once an iterate moves less than ``tol`` in max-norm.
    """
    step = 1.0 / lipschitz
    x = project(x0)
    y = x.copy()
    t = 1.0
    moved = np.inf
    for it in range(1, max_iters + 1):
        g = grad(y)
        if not np.isfinite(g).all():
            raise NumericError("non-finite gradient")
        x_new = project(y + step * g)
        diff = x_new - x
        moved = float(np.abs(diff).max())
        if moved <= tol:
            return AscentResult(x_new, it, moved, True)
        if np.dot(y - x_new, diff) > 0:
            t = 1.0
            y = x_new
        else:
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            y = x_new + ((t - 1.0) / t_next) * diff
            t = t_next
        x = x_new
    return AscentResult(x, max_iters, moved, False)


def mle(
    weights: ComparisonGraph | np.ndarray,
    support: SupportSet,
    pg_iters: int = 20000,
    tol: float = 1e-13,
    x0: np.ndarray | None = None,
) -> np.ndarray:
    """Maximum-likelihood scores constrained to ``support``.

    Weights may be raw counts or a normalized distribution; the maximizer is
    the same either way.
    """
    w = as_pair_weights(weights, support.n)
    start = support.center if x0 is None else x0
    if not w.any():
        return support.project(start)
    lip = pair_lipschitz(w, support.n)
    res = accelerated_ascent(
        lambda th: pair_weighted_grad(th, w), support.project, start, lip, pg_iters, tol
    )
    return res.x


def worst_pair_losses(support: SupportSet) -> np.ndarray:
    """Upper bounds on ``max_{theta in support} -log g_ij(theta)`` per pair.

    ``theta_j - theta_i`` is at most the center's gap plus ``sqrt(2 beta)``
    on the ball and at most 1 on the simplex.
    """
    first, second, _ = pair_arrays(support.n)
    c = support.center
    gap = np.minimum(c[second] - c[first] + np.sqrt(2.0 * support.radius_sq), 1.0)
    return -log_expit(-gap)


@dataclass
class RobustTrace:
    """Multipliers probed by the bisection and the ball slack at each one."""

    mu: list[float] = field(default_factory=list)
    slack: list[float] = field(default_factory=list)
    mu_upper: float = 0.0


def robust_estimate(
    p: np.ndarray,
    support: SupportSet,
    cfg: RobustConfig = RobustConfig(),
    x0: np.ndarray | None = None,
    trace: RobustTrace | None = None,
) -> np.ndarray:
    """Maximize the robust objective over ``support`` by dual bisection.

    For a multiplier ``mu`` the penalized problem
    ``max_{theta in simplex} h(theta) - mu/2 ||theta - center||^2`` is solved
    by accelerated projected gradient. The ball slack
    ``||theta(mu) - center||^2 - beta`` is non-increasing in ``mu`` and the
    bisection brackets its root. The answer is taken on the segment between
    the last infeasible and last feasible iterates, where it meets the sphere.
    """
    n = support.n
    p = _check_normalized(p, n)
    coef = dro_coefficients(p, cfg.gamma)
    center = support.center
    beta = support.radius_sq
    lip_h = pair_lipschitz(coef, n)

    first, second, _ = pair_arrays(n)
    center_arr = np.ascontiguousarray(center)

    def solve(mu: float, start: np.ndarray, strict: bool = True) -> tuple[np.ndarray, float]:
        x = np.array(start, dtype=float)
        iters, moved = penalized_max(
            coef, first, second, center_arr, mu, x, 1.0 / (lip_h + mu), cfg.pg_iters, cfg.pg_tol
        )
        if not np.isfinite(x).all():
            raise NumericError("non-finite iterate in penalized solve")
        if iters >= cfg.pg_iters and moved > np.sqrt(cfg.pg_tol):
            if not strict:
                return x, np.inf
            raise NumericError("penalized inner solve did not converge", moved)
        slack = float(np.sum((x - center) ** 2)) - beta
        if trace is not None:
            trace.mu.append(mu)
            trace.slack.append(slack)
        return x, slack

    z = worst_pair_losses(support)
    m = num_pairs(n)
    mu_upper = max(m * float(np.abs(z).max()), np.sqrt(m / (2.0 * beta)) * float(np.linalg.norm(z)))
    start = center if x0 is None else simplex_project(x0)
    # inactive ball: the unpenalized maximizer is already optimal
    x_free, slack_free = solve(0.0, start, strict=False)
    if slack_free <= 0:
        if trace is not None:
            trace.mu_upper = mu_upper
        return x_free
    x_hi, slack_hi = solve(mu_upper, start)
    while slack_hi > 0:
        mu_upper *= 2.0
        x_hi, slack_hi = solve(mu_upper, x_hi)
    if trace is not None:
        trace.mu_upper = mu_upper

    mu_lo, mu_hi = 0.0, mu_upper
    x_lo = x_free if np.isfinite(slack_free) else None
    x_mid = x_hi
    while mu_hi - mu_lo > cfg.bisection_tol * mu_upper:
        mu = 0.5 * (mu_lo + mu_hi)
        x_mid, slack = solve(mu, x_mid)
        if slack > 0:
            mu_lo, x_lo = mu, x_mid
        else:
            mu_hi, x_hi = mu, x_mid
    if x_lo is None:
        return x_hi
    return _onto_sphere(x_hi, x_lo, center, beta)


def _onto_sphere(inside: np.ndarray, outside: np.ndarray, center: np.ndarray, beta: float) -> np.ndarray:
    """Point of the segment ``[inside, outside]`` at squared distance ``beta``."""
    d = outside - inside
    a = float(d @ d)
    if a == 0.0:
        return inside
    e = inside - center
    b = float(e @ d)
    c = float(e @ e) - beta
    s = (-b + np.sqrt(max(b * b - a * c, 0.0))) / a
    return inside + min(max(s, 0.0), 1.0) * d
