"""Adversary decision machinery: stopping tests, max-min rule, baselines.

Several constrained problems here share one shape: maximize a weighted BTL
log-likelihood ``sum_k coef_k log g_k(theta)`` over the support set, possibly
restricted to a tie hyperplane ``theta_a = theta_b``. On such a hyperplane the
feasible set is again a simplex-ball intersection once coordinates ``a`` and
``b`` are averaged, which keeps every projection exact.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import expit, log_expit

from .core import (
    Comparison,
    Origin,
    Ranking,
    check_ranking,
    num_pairs,
    pair_arrays,
    pair_index,
    positions,
    ranking_from_scores,
)
from .errors import DataError, InfeasibleError, NumericError
from ._kernels import region_max
from .estimation import (
    RobustConfig,
    SupportSet,
    accelerated_ascent,
    as_pair_weights,
    dro_coefficients,
    mle,
    pair_lipschitz,
    project_simplex_ball_rows,
    robust_estimate,
)


class StopMode(enum.Enum):
    S1 = "S1"
    S2 = "S2"


@dataclass(frozen=True)
class StoppingConfig:
    mode: StopMode = StopMode.S2
    chi: float = 1e-3
    alpha: float = 0.5
    robust: bool = True
    gamma: float = 0.0

    def __post_init__(self) -> None:
        if not 0 < self.chi < 1:
            raise DataError(f"chi must be in (0, 1), got {self.chi}")
        if not 0 < self.alpha < 1:
            raise DataError(f"alpha must be in (0, 1), got {self.alpha}")
        if not self.gamma >= 0:
            raise DataError("gamma must be >= 0")


def z_threshold(chi: float, alpha: float) -> float:
    if not 0 < chi < 1:
        raise DataError(f"chi must be in (0, 1), got {chi}")
    if not 0 < alpha < 1:
        raise DataError(f"alpha must be in (0, 1), got {alpha}")
    k = abs(math.log(chi))
    return k * (1.0 + k ** (-alpha))


# ---------------------------------------------------------------------------
# batched constrained maximization


@lru_cache(maxsize=32)
def _incidence(n: int) -> np.ndarray:
    first, second, _ = pair_arrays(n)
    m = np.zeros((num_pairs(n), n))
    m[np.arange(first.size), first] = 1.0
    m[np.arange(first.size), second] = -1.0
    m.setflags(write=False)
    return m


class _Regions:
    """Feasible sets: the full support (pair ``None``) or a tie hyperplane.

    On the hyperplane ``theta_a = theta_b`` the support becomes a
    simplex-ball intersection in averaged coordinates: the center has its
    ``a`` and ``b`` entries averaged and the squared radius loses
    ``(c_a - c_b)^2 / 2``.
    """

    def __init__(self, support: SupportSet, pairs: list[tuple[int, int] | None]) -> None:
        centers = np.tile(support.center, (len(pairs), 1))
        radius = np.full(len(pairs), support.radius_sq)
        for r, pair in enumerate(pairs):
            if pair is not None:
                a, b = pair
                ca, cb = centers[r, a], centers[r, b]
                centers[r, a] = centers[r, b] = 0.5 * (ca + cb)
                radius[r] -= 0.5 * (ca - cb) ** 2
        self.pairs = pairs
        self.centers = centers
        self.radius_sq = radius
        self.feasible = radius >= 0
        self.tie_a = np.array([-1 if p is None else p[0] for p in pairs], dtype=np.intp)
        self.tie_b = np.array([-1 if p is None else p[1] for p in pairs], dtype=np.intp)
        self.guess = np.ones(len(pairs))

    def project(self, v: np.ndarray) -> np.ndarray:
        v = np.array(v, dtype=float)
        rows = np.flatnonzero(self.tie_a >= 0)
        a, b = self.tie_a[rows], self.tie_b[rows]
        mean = 0.5 * (v[rows, a] + v[rows, b])
        v[rows, a] = mean
        v[rows, b] = mean
        return project_simplex_ball_rows(v, self.centers, np.maximum(self.radius_sq, 0.0))


def _batched_max(
    coef: np.ndarray,
    regions: _Regions,
    x0: np.ndarray,
    max_iters: int,
    tol: float,
) -> np.ndarray:
    """Maximize ``sum coef log g`` on every region (accelerated PG per row)."""
    n = x0.shape[1]
    first, second, _ = pair_arrays(n)
    x = np.array(x0, dtype=float)
    step = 1.0 / pair_lipschitz(coef, n)
    region_max(
        np.ascontiguousarray(coef, dtype=float), first, second, regions.centers,
        np.maximum(regions.radius_sq, 0.0), regions.tie_a, regions.tie_b,
        x, step, max_iters, tol, regions.guess,
    )
    if not np.isfinite(x).all():
        raise NumericError("non-finite iterate in constrained maximization")
    return x


def _weighted_loglik_rows(x: np.ndarray, coef: np.ndarray) -> np.ndarray:
    first, second, _ = pair_arrays(x.shape[1])
    return log_expit(x[:, first] - x[:, second]) @ coef


# ---------------------------------------------------------------------------
# likelihood-ratio gaps and stopping


def _stop_objective(weights: np.ndarray, cfg: StoppingConfig) -> np.ndarray:
    if not cfg.robust:
        return weights
    total = weights.sum()
    p = weights / total if total > 0 else np.full_like(weights, 1.0 / weights.size)
    return dro_coefficients(p, cfg.gamma)


def _best_point(weights: np.ndarray, support: SupportSet, cfg: StoppingConfig) -> np.ndarray:
    if cfg.robust:
        total = weights.sum()
        p = weights / total if total > 0 else np.full_like(weights, 1.0 / weights.size)
        return robust_estimate(p, support, RobustConfig(gamma=cfg.gamma, bisection_tol=1e-8))
    return mle(weights, support)


class _GapSolver:
    """Likelihood-ratio gaps for one objective and one overall maximizer."""

    def __init__(self, coef: np.ndarray, best: np.ndarray, support: SupportSet, iters: int, tol: float):
        self.coef = coef
        self.best = best
        self.support = support
        self.iters = iters
        self.tol = tol
        self.top = float(_weighted_loglik_rows(best[None, :], coef)[0])

    def _regions(self, i: int, j: int) -> _Regions:
        regions = _Regions(self.support, [(i, j)])
        if not regions.feasible[0]:
            raise InfeasibleError(f"support contains no point on both sides of ({i}, {j})")
        return regions

    def upper_bound(self, i: int, j: int) -> float:
        """``|gap|`` is at most the drop from ``best`` to its tie-plane projection."""
        tie = self._regions(i, j).project(self.best[None, :])
        return max(self.top - float(_weighted_loglik_rows(tie, self.coef)[0]), 0.0)

    def gap(self, i: int, j: int) -> float:
        tie = _batched_max(self.coef, self._regions(i, j), self.best[None, :], self.iters, self.tol)
        gap = max(self.top - float(_weighted_loglik_rows(tie, self.coef)[0]), 0.0)
        return gap if self.best[i] >= self.best[j] else -gap


def delta_L(
    i: int,
    j: int,
    weights: np.ndarray,
    support: SupportSet,
    cfg: StoppingConfig = StoppingConfig(),
    iters: int = 20000,
    tol: float = 1e-13,
) -> float:
    """Best objective with ``theta_i >= theta_j`` minus best with ``theta_j >= theta_i``.

    The overall maximizer lies on one side, so that side's optimum is the
    overall one and the other side's optimum sits on the tie hyperplane.
    """
    if i == j:
        raise DataError(f"self-pair ({i}, {j})")
    w = as_pair_weights(weights, support.n)
    best = _best_point(w, support, cfg)
    return _GapSolver(_stop_objective(w, cfg), best, support, iters, tol).gap(i, j)


def should_stop(
    weights: np.ndarray,
    support: SupportSet,
    cfg: StoppingConfig = StoppingConfig(),
    best: np.ndarray | None = None,
    iters: int = 20000,
    tol: float = 1e-13,
) -> bool:
    """Generalized likelihood-ratio stopping test over all unordered pairs.

    Each pair is first screened with a cheap upper bound on its gap; the
    exact constrained solve only runs when the bound cannot settle the test.
    """
    n = support.n
    w = as_pair_weights(weights, n)
    z = z_threshold(cfg.chi, cfg.alpha)
    if best is None:
        best = _best_point(w, support, cfg)
    gaps = _GapSolver(_stop_objective(w, cfg), best, support, iters, tol)
    pairs = sorted(
        ((a, b) for a in range(n) for b in range(a + 1, n)),
        key=lambda ab: abs(best[ab[0]] - best[ab[1]]),
    )
    if cfg.mode is StopMode.S2:
        for a, b in pairs:
            if gaps.upper_bound(a, b) < z or abs(gaps.gap(a, b)) < z:
                return False
        return True
    budget = math.exp(-z)
    floor = sum(math.exp(-gaps.upper_bound(a, b)) for a, b in pairs)
    if floor > budget:
        return False
    return sum(math.exp(-abs(gaps.gap(a, b))) for a, b in pairs) <= budget


# ---------------------------------------------------------------------------
# generation rule


def uniform_rule(n: int) -> np.ndarray:
    return np.full(num_pairs(n), 1.0 / num_pairs(n))


def check_rule(rule: np.ndarray, n: int) -> np.ndarray:
    rule = np.asarray(rule, dtype=float)
    if rule.shape != (num_pairs(n),) or (rule < 0).any() or abs(rule.sum() - 1.0) > 1e-9:
        raise DataError("generation rule must be a distribution over ordered pairs")
    return rule


@dataclass
class InnerResult:
    value: float
    argmin: np.ndarray
    pair: tuple[int, int]
    losses: np.ndarray


class InnerSolver:
    """Closest rank-changing point to ``theta_hat`` under a rule-weighted divergence.

    The divergence is ``sum_k rule_k g_k(theta_hat) log(g_k(theta_hat) / g_k(theta))``
    over ordered pairs ``k``. Rank-changing points form the union of closed
    regions where one adjacent pair of ``ranking(theta_hat)`` is tied or
    reversed; the minimizer over each region is either the minimizer over the
    whole support or lies on that pair's tie hyperplane. The solver keeps the
    last iterate of every region, so consecutive calls with slowly varying
    rules converge in a few steps.
    """

    def __init__(self, theta_hat: np.ndarray, support: SupportSet, iters: int = 5000, tol: float = 1e-12):
        self.theta_hat = np.asarray(theta_hat, dtype=float)
        self.support = support
        self.iters = iters
        self.tol = tol
        n = support.n
        self.order = ranking_from_scores(self.theta_hat)
        adjacent = [(self.order[k], self.order[k + 1]) for k in range(n - 1)]
        probe = _Regions(support, adjacent)
        feasible = [pair for pair, ok in zip(adjacent, probe.feasible) if ok]
        if not feasible:
            raise InfeasibleError("support contains no point with a different ranking")
        self.regions = _Regions(support, [None, *feasible])
        first, second, _ = pair_arrays(n)
        margin = self.theta_hat[first] - self.theta_hat[second]
        self.g_hat = expit(margin)
        self.logg_hat = log_expit(margin)
        self.x = np.tile(self.theta_hat, (len(self.regions.pairs), 1))

    def losses(self, theta: np.ndarray) -> np.ndarray:
        """Per-pair terms ``g_k(theta_hat) * log(g_k(theta_hat) / g_k(theta))``."""
        first, second, _ = pair_arrays(self.support.n)
        return self.g_hat * (self.logg_hat - log_expit(theta[first] - theta[second]))

    def solve(self, rule: np.ndarray) -> InnerResult:
        coef = rule * self.g_hat
        self.x = _batched_max(coef, self.regions, self.x, self.iters, self.tol)
        values = coef @ self.logg_hat - _weighted_loglik_rows(self.x, coef)
        overall = self.x[0]
        pairs = self.regions.pairs
        flipped = [k for k in range(1, len(pairs)) if overall[pairs[k][1]] >= overall[pairs[k][0]]]
        if flipped:
            k, x, value = flipped[0], overall.copy(), float(values[0])
        else:
            k = 1 + int(np.argmin(values[1:]))
            x, value = self.x[k].copy(), float(values[k])
        return InnerResult(value, x, pairs[k], self.losses(x))


def inner_min(rule: np.ndarray, theta_hat: np.ndarray, support: SupportSet) -> InnerResult:
    """Minimize the rule-weighted divergence from ``theta_hat`` over rank-changing points."""
    rule = check_rule(rule, support.n)
    return InnerSolver(theta_hat, support).solve(rule)


def entropic_mirror_descent(
    subgradient: Callable[[np.ndarray], np.ndarray],
    dim: int,
    iters: int,
    c0: float | None = None,
    iterates: list[np.ndarray] | None = None,
) -> np.ndarray:
    """Minimize a convex function on the simplex; returns the averaged iterate.

    Steps are ``c0 / sqrt(l)``. Without ``c0`` the constant is set from the
    first subgradient as ``sqrt(2 log dim) / max|d|``.
    """
    lam = np.full(dim, 1.0 / dim)
    total = np.zeros(dim)
    tiny = np.finfo(float).tiny
    for step in range(1, iters + 1):
        d = subgradient(lam)
        if c0 is None:
            scale = float(np.abs(d).max())
            c0 = math.sqrt(2.0 * math.log(dim)) / scale if scale > 0 else 0.0
        logits = np.log(lam) - (c0 / math.sqrt(step)) * d
        lam = np.exp(logits - logits.max())
        lam = np.maximum(lam / lam.sum(), tiny)
        lam /= lam.sum()
        if iterates is not None:
            iterates.append(lam.copy())
        total += lam
    return total / iters


def orient_rule(rule: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Move each pair's mass onto the direction ``ranking(theta)`` prefers."""
    n = theta.size
    first, second, rev = pair_arrays(n)
    pos = positions(ranking_from_scores(theta))
    keep = pos[first] < pos[second]
    return np.where(keep, rule + rule[rev], 0.0)


@dataclass
class MirrorDescentTrace:
    """Worst-case divergence at each rule iterate, plus the iterates."""

    values: list[float] = field(default_factory=list)
    iterates: list[np.ndarray] = field(default_factory=list)
    average: np.ndarray | None = None


def worst_case_divergence(rule: np.ndarray, solver: InnerSolver) -> InnerResult:
    """Inner problem for the binary divergence of each compared pair.

    Weighting an ordered pair and its reverse equally turns the one-sided
    terms into the full binary KL divergence of that pair's outcome.
    """
    rev = pair_arrays(solver.support.n)[2]
    res = solver.solve(0.5 * (rule + rule[rev]))
    full = res.losses + res.losses[rev]
    return InnerResult(2.0 * res.value, res.argmin, res.pair, full)


def solve_generation_rule(
    theta_est: np.ndarray,
    support: SupportSet,
    iters: int = 30,
    c0: float | None = None,
    solver: InnerSolver | None = None,
    trace: MirrorDescentTrace | None = None,
) -> np.ndarray:
    """Max-min rule over which pairs to compare, oriented toward the target.

    Mirror descent maximizes, over distributions of compared pairs, the
    smallest binary-KL divergence between outcomes under ``theta_est`` and
    under any rank-changing point of the support. The averaged rule is then
    oriented so each emitted comparison agrees with the ranking of the
    support center, which is the adversary's target.
    """
    n = support.n
    if solver is None:
        solver = InnerSolver(theta_est, support)

    def subgradient(lam: np.ndarray) -> np.ndarray:
        res = worst_case_divergence(lam, solver)
        if trace is not None:
            trace.values.append(res.value)
        return -res.losses

    iterates = trace.iterates if trace is not None else None
    average = entropic_mirror_descent(subgradient, num_pairs(n), iters, c0, iterates)
    if trace is not None:
        trace.average = average
    return orient_rule(average, support.center)


def mix_exploration(rule: np.ndarray, p_explore: float) -> np.ndarray:
    if not 0 <= p_explore <= 1:
        raise DataError(f"p_explore must be in [0, 1], got {p_explore}")
    rule = np.asarray(rule, dtype=float)
    return p_explore / rule.size + (1.0 - p_explore) * rule


class Baseline(enum.Enum):
    RANDOM = "random"
    GREEDY = "greedy"
    STRAIGHT = "straight"


def baseline_rule(kind: Baseline, target: Ranking, n: int) -> np.ndarray:
    order = check_ranking(target, n)
    rule = np.zeros(num_pairs(n))
    if kind is Baseline.RANDOM:
        rule[:] = 1.0
    elif kind is Baseline.GREEDY:
        top = order[0]
        for other in order[1:]:
            rule[pair_index(top, other, n)] = 1.0
    elif kind is Baseline.STRAIGHT:
        for a in range(n):
            for b in range(a + 1, n):
                rule[pair_index(order[a], order[b], n)] = 1.0
    else:
        raise DataError(f"unknown baseline {kind!r}")
    return rule / rule.sum()


def sample_pair(rule: np.ndarray, n: int, rng: np.random.Generator) -> Comparison:
    first, second, _ = pair_arrays(n)
    k = int(rng.choice(rule.size, p=rule))
    return Comparison(int(first[k]), int(second[k]), Origin.ADVERSARIAL)


# ---------------------------------------------------------------------------
# the proposed adversary


@dataclass(frozen=True)
class PolicyConfig:
    """Knobs of the proposed adversary beyond the robust estimator."""

    md_iters: int = 20
    c0: float | None = None
    p_explore: float = 0.05
    inner_iters: int = 150
    inner_tol: float = 1e-8


def adversarial_generation(
    knowledge: np.ndarray,
    support: SupportSet,
    cfg: RobustConfig,
    rng: np.random.Generator,
    policy: PolicyConfig = PolicyConfig(),
) -> Comparison:
    """One robust-estimate, max-min-rule, explore-and-sample step."""
    theta = robust_estimate(knowledge, support, cfg)
    solver = InnerSolver(theta, support, policy.inner_iters, policy.inner_tol)
    rule = solve_generation_rule(theta, support, policy.md_iters, policy.c0, solver)
    return sample_pair(mix_exploration(rule, policy.p_explore), support.n, rng)


class ProposedAdversary:
    """Stateful form of :func:`adversarial_generation` used by the game loop.

    Warm-starts the robust estimate and the inner region iterates from the
    previous call; outputs are identical in distribution to the stateless
    function up to solver tolerance.
    """

    def __init__(
        self,
        support: SupportSet,
        robust: RobustConfig = RobustConfig(),
        policy: PolicyConfig = PolicyConfig(),
        stopping: StoppingConfig | None = None,
    ) -> None:
        self.support = support
        self.robust = robust
        self.policy = policy
        self.stopping = stopping
        self._theta: np.ndarray | None = None
        self._regions_x: np.ndarray | None = None
        self._order: Ranking | None = None
        self.last_rule: np.ndarray | None = None

    def estimate(self, knowledge: np.ndarray) -> np.ndarray:
        self._theta = robust_estimate(knowledge, self.support, self.robust, x0=self._theta)
        return self._theta

    def wants_stop(self, knowledge: np.ndarray, theta: np.ndarray) -> bool:
        if self.stopping is None:
            return False
        return should_stop(knowledge, self.support, self.stopping, best=theta if self.stopping.robust else None)

    def rule(self, theta: np.ndarray) -> np.ndarray:
        solver = InnerSolver(theta, self.support, self.policy.inner_iters, self.policy.inner_tol)
        if self._regions_x is not None and solver.order == self._order:
            solver.x = self._regions_x
        rule = solve_generation_rule(theta, self.support, self.policy.md_iters, self.policy.c0, solver)
        self._regions_x, self._order = solver.x, solver.order
        self.last_rule = rule
        return mix_exploration(rule, self.policy.p_explore)

    def step(self, knowledge: np.ndarray, rng: np.random.Generator) -> Comparison | None:
        """Next insertion, or ``None`` when the stopping rule fires."""
        theta = self.estimate(knowledge)
        if self.wants_stop(knowledge, theta):
            return None
        return sample_pair(self.rule(theta), self.support.n, rng)
