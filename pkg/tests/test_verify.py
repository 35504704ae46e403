"""Brute-force reference LP, distribution audits, and sampling."""

from __future__ import annotations

import math

import numpy as np
import pytest

from fairsubmax import (
    GroupSpec,
    InfeasibleInstance,
    Instance,
    ModularObjective,
    SelectionDistribution,
    audit_distribution,
    brute_force_lp,
    sample,
)

from conftest import random_coverage, random_overlapping_instance, toy3_oracle


def make_instance(n, groups, b):
    return Instance(
        n,
        tuple(GroupSpec(f"g{k}", frozenset(m), a, bb) for k, (m, a, bb) in enumerate(groups)),
        b,
    )


RAND2 = make_instance(2, [({0}, 0.5, 0.5), ({1}, 0.5, 0.5)], 1)
TOY3 = make_instance(3, [({0, 1}, 1, 1), ({2}, 1, 1)], 2)


def rand2_oracle():
    from fairsubmax import CoverageObjective

    return CoverageObjective(2, [1.0], np.array([[True, True]]))


class TestBruteForce:
    def test_motivating_instance(self):
        distribution, optimum = brute_force_lp(RAND2, rand2_oracle())
        assert optimum == pytest.approx(1.0, abs=1e-9)
        support = {s: p for s, p in distribution.support}
        assert support == {
            frozenset({0}): pytest.approx(0.5, abs=1e-9),
            frozenset({1}): pytest.approx(0.5, abs=1e-9),
        }

    def test_toy3(self):
        _, optimum = brute_force_lp(TOY3, toy3_oracle())
        assert optimum == pytest.approx(3.0, abs=1e-9)

    def test_unconstrained_top_two(self):
        inst = make_instance(3, [({0, 1, 2}, 0, 3)], 2)
        _, optimum = brute_force_lp(inst, ModularObjective([3, 2, 5]))
        assert optimum == pytest.approx(8.0, abs=1e-9)

    def test_infeasible(self):
        inst = make_instance(2, [({0}, 1, 1), ({1}, 1, 1)], 1)
        with pytest.raises(InfeasibleInstance):
            brute_force_lp(inst, ModularObjective([1, 1]))

    def test_group_relabeling_invariance(self):
        rng = np.random.default_rng(44)
        for _ in range(10):
            inst = random_overlapping_instance(rng)
            oracle = random_coverage(rng, inst.item_count)
            _, base = brute_force_lp(inst, oracle)
            shuffled = Instance(
                inst.item_count, tuple(reversed(inst.groups)), inst.budget
            )
            _, relabeled = brute_force_lp(shuffled, oracle)
            assert relabeled == pytest.approx(base, abs=1e-9)

    def test_item_relabeling_invariance(self):
        rng = np.random.default_rng(47)
        for _ in range(10):
            inst = random_overlapping_instance(rng)
            n = inst.item_count
            weights = rng.uniform(0.2, 3.0, size=n)
            _, base = brute_force_lp(inst, ModularObjective(weights))
            perm = rng.permutation(n)
            mapped_weights = np.empty(n)
            mapped_weights[perm] = weights
            mapped_groups = tuple(
                GroupSpec(g.name, frozenset(int(perm[i]) for i in g.members), g.alpha, g.beta)
                for g in inst.groups
            )
            mapped = Instance(n, mapped_groups, inst.budget)
            _, relabeled = brute_force_lp(mapped, ModularObjective(mapped_weights))
            assert relabeled == pytest.approx(base, abs=1e-9)

    def test_audit_of_brute_force_is_feasible(self):
        rng = np.random.default_rng(45)
        for _ in range(20):
            inst = random_overlapping_instance(rng)
            oracle = random_coverage(rng, inst.item_count)
            distribution, _ = brute_force_lp(inst, oracle)
            assert audit_distribution(distribution, inst, oracle).feasible


class TestAudit:
    def test_motivating_output(self):
        d = SelectionDistribution.from_support([({0}, 0.5), ({1}, 0.5)])
        report = audit_distribution(d, RAND2, rand2_oracle())
        assert report.feasible
        assert np.allclose(report.expected_counts, [0.5, 0.5])
        assert report.value == pytest.approx(1.0)

    def test_all_mass_on_empty_set(self):
        d = SelectionDistribution.point(())
        report = audit_distribution(d, RAND2, rand2_oracle())
        assert not report.feasible
        assert report.max_violation == pytest.approx(0.5)

    def test_point_distribution_counts_exactly(self):
        d = SelectionDistribution.point({0, 2})
        report = audit_distribution(d, TOY3, toy3_oracle())
        assert list(report.expected_counts) == [1.0, 1.0]
        assert report.feasible

    def test_budget_violation_detected(self):
        d = SelectionDistribution.point({0, 1, 2})
        report = audit_distribution(d, TOY3, toy3_oracle())
        assert not report.budget_ok
        assert not report.feasible

    def test_never_raises_on_overweight_distribution(self):
        d = SelectionDistribution(((frozenset({0}), 0.8), (frozenset({1}), 0.8)), -0.6)
        report = audit_distribution(d, RAND2, rand2_oracle())
        assert not report.feasible
        assert report.max_violation >= 0.6


class TestSample:
    def test_point_distribution(self):
        d = SelectionDistribution.point({1})
        draws = sample(d, seed=1, count=50)
        assert all(s == frozenset({1}) for s in draws)

    def test_motivating_frequencies(self):
        d = SelectionDistribution.from_support([({0}, 0.5), ({1}, 0.5)])
        draws = sample(d, seed=42, count=10_000)
        freq = sum(1 for s in draws if s == frozenset({0})) / 10_000
        assert abs(freq - 0.5) <= 0.02

    def test_residual_frequency(self):
        d = SelectionDistribution.from_support([({0}, 0.7)])
        draws = sample(d, seed=7, count=20_000)
        freq = sum(1 for s in draws if not s) / 20_000
        sigma = math.sqrt(0.3 * 0.7 / 20_000)
        assert abs(freq - 0.3) <= 4 * sigma

    def test_deterministic_under_seed(self):
        d = SelectionDistribution.from_support([({0}, 0.5), ({1}, 0.25)])
        assert sample(d, 9, 500) == sample(d, 9, 500)
        assert sample(d, 9, 500) != sample(d, 10, 500)


class TestCorrelationGap:
    def test_independent_rounding_keeps_most_value(self):
        # F(marginals) >= (1 - 1/e) * distribution value for coverage objectives
        rng = np.random.default_rng(46)
        mu = 1 - 1 / math.e
        for _ in range(50):
            n = int(rng.integers(3, 9))
            oracle = random_coverage(rng, n)
            b = int(rng.integers(1, n + 1))
            k = int(rng.integers(1, 6))
            sets = []
            for _ in range(k):
                size = int(rng.integers(0, b + 1))
                sets.append(frozenset(int(i) for i in rng.choice(n, size=size, replace=False)))
            probs = rng.random(k)
            probs /= max(probs.sum(), 1.0) * float(rng.uniform(1.0, 1.5))
            marginals = np.zeros(n)
            expected = 0.0
            for s, p in zip(sets, probs):
                expected += p * oracle.evaluate(s)
                for i in s:
                    marginals[i] += p
            extension = oracle.extension(marginals)
            assert extension.exact
            assert extension.value >= mu * expected - 1e-9
