import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ranksiege.btl import target_scores_from_ranking
from ranksiege.core import Origin, num_pairs, pair_arrays, pair_index
from ranksiege.errors import DataError, InfeasibleError
from ranksiege.estimation import RobustConfig, SupportSet
from ranksiege.policy import (
    Baseline,
    InnerSolver,
    MirrorDescentTrace,
    PolicyConfig,
    ProposedAdversary,
    StopMode,
    StoppingConfig,
    adversarial_generation,
    baseline_rule,
    check_rule,
    delta_L,
    entropic_mirror_descent,
    inner_min,
    mix_exploration,
    orient_rule,
    sample_pair,
    should_stop,
    solve_generation_rule,
    uniform_rule,
    worst_case_divergence,
    z_threshold,
)

CENTER3 = np.array([1.0, 2.0, 3.0]) / 6
COUNTS3 = np.array([10, 8, 1, 6, 1, 1], dtype=float)
# grid top refined to 2e-6 minus a 2e6-point search along each tie line
DELTA_01 = 0.001569102261832378
DELTA_12 = -0.0028534365326726707
# 1-d bounded line search on theta_1 - theta_2 <= 0 for theta_hat = (0.6, 0.4)
INNER2_ORACLE = 0.0024875553204350698
# grid over the rank-changing feasible set (step 5e-4), theta_hat = (0.2, 0.33, 0.47)
INNER3_UNIFORM = 0.0005254568755143256
INNER3_SKEWED = -0.010066003332056941
SKEWED_RULE = np.array([0.3, 0.05, 0.05, 0.3, 0.1, 0.2])
# max over a 10011-point grid of unordered pair weights of the worst binary KL
MAXMIN3_ORACLE = 0.0012095397090677367
THETA3 = np.array([0.2, 0.33, 0.47])


def test_z_threshold_examples():
    assert z_threshold(math.exp(-1), 0.3) == pytest.approx(2.0)
    assert z_threshold(math.exp(-1), 0.9) == pytest.approx(2.0)
    assert z_threshold(math.exp(-4), 0.5) == pytest.approx(6.0)
    with pytest.raises(DataError):
        z_threshold(1.0, 0.5)


@given(st.floats(1e-9, math.exp(-1)), st.floats(1e-9, math.exp(-1)), st.floats(0.01, 0.99))
def test_z_threshold_monotone(a, b, alpha):
    if a < b:
        assert z_threshold(a, alpha) >= z_threshold(b, alpha)


def test_delta_l_matches_tie_line_oracle():
    s = SupportSet(CENTER3, 0.05)
    cfg = StoppingConfig(robust=False)
    p = COUNTS3 / COUNTS3.sum()
    assert delta_L(0, 1, p, s, cfg) == pytest.approx(DELTA_01, abs=1e-6)
    assert delta_L(1, 2, p, s, cfg) == pytest.approx(DELTA_12, abs=1e-6)
    # counts scale the objective linearly
    assert delta_L(0, 1, COUNTS3, s, cfg) == pytest.approx(COUNTS3.sum() * DELTA_01, abs=1e-4)
    with pytest.raises(InfeasibleError):
        delta_L(0, 2, p, s, cfg)


def test_delta_l_examples():
    uniform = SupportSet(np.full(3, 1 / 3), 0.05)
    assert delta_L(0, 1, np.full(6, 1 / 6), uniform, StoppingConfig()) == pytest.approx(0, abs=1e-6)
    two = SupportSet(np.array([0.5, 0.5]), 0.05)
    assert delta_L(0, 1, np.array([0.9, 0.1]), two, StoppingConfig(robust=False)) > 0
    assert delta_L(0, 1, np.array([0.9, 0.1]), two, StoppingConfig(gamma=0.2)) > 0


@given(st.integers(0, 2**31 - 1), st.booleans())
def test_delta_l_antisymmetric(seed, robust):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    s = SupportSet(np.full(n, 1 / n), 0.05)
    p = rng.dirichlet(np.ones(n * (n - 1)))
    cfg = StoppingConfig(robust=robust, gamma=0.1)
    i, j = rng.choice(n, 2, replace=False)
    assert delta_L(i, j, p, s, cfg) == pytest.approx(-delta_L(j, i, p, s, cfg), abs=2e-9)


def test_should_stop_examples():
    uniform = SupportSet(np.full(3, 1 / 3), 0.05)
    p = np.full(6, 1 / 6)
    assert not should_stop(p, uniform, StoppingConfig(mode=StopMode.S2))
    assert not should_stop(p, uniform, StoppingConfig(mode=StopMode.S1))
    # one pair, |delta| far above z: both rules stop
    two = SupportSet(np.array([0.5, 0.5]), 0.2)
    w = np.array([5000.0, 0.0])
    cfg = StoppingConfig(robust=False, chi=0.1)
    gap = abs(delta_L(0, 1, w, two, cfg))
    assert gap > z_threshold(0.1, 0.5) + 1
    assert should_stop(w, two, cfg)
    assert should_stop(w, two, StoppingConfig(mode=StopMode.S1, robust=False, chi=0.1))


def test_should_stop_s2_monotone_in_chi():
    two = SupportSet(np.array([0.5, 0.5]), 0.2)
    w = np.array([40.0, 4.0])
    gap = abs(delta_L(0, 1, w, two, StoppingConfig(robust=False)))
    chis = [1e-6, 1e-4, 1e-2, 0.1, 0.3]
    stops = [should_stop(w, two, StoppingConfig(robust=False, chi=c)) for c in chis]
    assert stops == [gap >= z_threshold(c, 0.5) for c in chis]
    assert stops == sorted(stops)


def test_inner_min_two_candidates():
    s = SupportSet(np.array([2 / 3, 1 / 3]), 1.0)
    res = inner_min(np.array([0.5, 0.5]), np.array([0.6, 0.4]), s)
    assert res.value == pytest.approx(INNER2_ORACLE, abs=1e-9)
    np.testing.assert_allclose(res.argmin, [0.5, 0.5], atol=1e-9)


def test_inner_min_three_candidates_grid_oracle():
    s = SupportSet(CENTER3, 0.05)
    res = inner_min(uniform_rule(3), THETA3, s)
    assert res.value == pytest.approx(INNER3_UNIFORM, abs=1e-6)
    assert res.value > 0
    skewed = inner_min(SKEWED_RULE, THETA3, s)
    # the one-sided sum is not a divergence: a lopsided rule can drive it below 0
    assert skewed.value == pytest.approx(INNER3_SKEWED, abs=1e-5)


def test_inner_min_first_order_in_rule():
    s = SupportSet(CENTER3, 0.05)
    solver = InnerSolver(THETA3, s)
    base = solver.solve(uniform_rule(3))
    for k in range(6):
        bump = uniform_rule(3).copy()
        bump[k] += 0.01
        bump /= bump.sum()
        # the value at a fixed argmin is linear in the rule; the minimum is concave
        assert solver.solve(bump).value <= bump @ base.losses + 1e-9


def test_inner_min_infeasible():
    s = SupportSet(np.array([0.9, 0.1]), 0.01)
    with pytest.raises(InfeasibleError):
        inner_min(np.array([0.5, 0.5]), np.array([0.9, 0.1]), s)


def test_symmetric_rule_gives_nonnegative_value(rng):
    for _ in range(10):
        n = int(rng.integers(2, 6))
        s = SupportSet(target_scores_from_ranking(rng.permutation(n)), 0.06)
        theta = s.project(s.center + rng.normal(scale=0.05, size=n))
        solver = InnerSolver(theta, s)
        rule = rng.dirichlet(np.ones(n * (n - 1)))
        assert worst_case_divergence(rule, solver).value >= -1e-12


def test_mirror_descent_zero_subgradient_keeps_uniform():
    out = entropic_mirror_descent(lambda lam: np.zeros(6), 6, 25, c0=1.0)
    np.testing.assert_allclose(out, uniform_rule(3), atol=1e-15)


def test_mirror_descent_linear_objective():
    d = np.array([3.0, 1.0, 2.0, 5.0])
    iterates = []
    out = entropic_mirror_descent(lambda lam: d, 4, 400, iterates=iterates)
    assert out.argmax() == 1
    assert all(x.min() > 0 for x in iterates)


def test_generation_rule_matches_grid_oracle():
    s = SupportSet(CENTER3, 0.05)
    solver = InnerSolver(THETA3, s)
    trace = MirrorDescentTrace()
    rule = solve_generation_rule(THETA3, s, 30, None, solver, trace)
    value = worst_case_divergence(trace.average, solver).value
    assert value == pytest.approx(MAXMIN3_ORACLE, rel=0.02)
    assert value <= MAXMIN3_ORACLE * (1 + 1e-3)
    check_rule(rule, 3)


@given(st.integers(0, 2**31 - 1))
def test_generation_rule_on_simplex(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    s = SupportSet(target_scores_from_ranking(rng.permutation(n)), 0.06)
    theta = s.project(s.center + rng.normal(scale=0.05, size=n))
    trace = MirrorDescentTrace()
    rule = solve_generation_rule(theta, s, 8, trace=trace)
    assert rule.min() >= 0 and abs(rule.sum() - 1) <= 1e-9
    for lam in trace.iterates:
        assert lam.min() > 0 and abs(lam.sum() - 1) <= 1e-9


def test_orient_rule_follows_ranking():
    theta = np.array([0.2, 0.5, 0.3])
    out = orient_rule(uniform_rule(3), theta)
    first, second, _ = pair_arrays(3)
    assert out.sum() == pytest.approx(1.0)
    for k in np.flatnonzero(out):
        assert theta[first[k]] > theta[second[k]]


def test_mix_exploration_examples():
    rule = np.zeros(6)
    rule[2] = 1.0
    np.testing.assert_allclose(mix_exploration(rule, 1.0), uniform_rule(3))
    np.testing.assert_array_equal(mix_exploration(rule, 0.0), rule)
    mixed = mix_exploration(rule, 0.5)
    assert mixed[0] == pytest.approx(0.5 / 6) and mixed[2] == pytest.approx(0.5 + 0.5 / 6)
    with pytest.raises(DataError):
        mix_exploration(rule, 1.5)


def test_baseline_rules_are_exact():
    np.testing.assert_array_equal(baseline_rule(Baseline.RANDOM, (0, 1, 2), 3), np.full(6, 1 / 6))
    greedy = baseline_rule(Baseline.GREEDY, (2, 0, 1), 3)
    assert greedy[pair_index(2, 0, 3)] == 0.5 and greedy[pair_index(2, 1, 3)] == 0.5 and greedy.sum() == 1
    straight = baseline_rule(Baseline.STRAIGHT, (0, 1, 2), 3)
    for i, j in [(0, 1), (0, 2), (1, 2)]:
        assert straight[pair_index(i, j, 3)] == 1 / 3
    assert straight.sum() == pytest.approx(1.0, abs=1e-15)


def test_sample_pair_respects_support(rng):
    rule = baseline_rule(Baseline.GREEDY, (3, 0, 1, 2), 4)
    for _ in range(50):
        c = sample_pair(rule, 4, rng)
        assert c.winner == 3 and c.origin is Origin.ADVERSARIAL


def test_adversarial_generation_is_deterministic():
    s = SupportSet(target_scores_from_ranking((2, 0, 1, 3)), 0.01)
    p = np.random.default_rng(2).dirichlet(np.ones(12))
    cfg = RobustConfig(gamma=0.01)
    a = adversarial_generation(p, s, cfg, np.random.default_rng(9))
    b = adversarial_generation(p, s, cfg, np.random.default_rng(9))
    assert a == b and a.origin is Origin.ADVERSARIAL


def test_proposed_adversary_pushes_target_winner():
    n = 6
    target = (4, 0, 1, 2, 3, 5)
    s = SupportSet(target_scores_from_ranking(target), 0.004)
    adv = ProposedAdversary(s, RobustConfig(gamma=0.01), PolicyConfig(p_explore=0.0))
    knowledge = np.ones(num_pairs(n))
    rng = np.random.default_rng(0)
    emitted = [adv.step(knowledge / knowledge.sum(), rng) for _ in range(40)]
    assert all(c is not None for c in emitted)
    pos = {c: k for k, c in enumerate(target)}
    assert all(pos[c.winner] < pos[c.loser] for c in emitted)
    assert adv.last_rule is not None and adv.last_rule.sum() == pytest.approx(1.0)
