"""Tests for belief exploration, solving and representative sequences."""

import math
import random

from django.test import SimpleTestCase, tag

from fsc_distill.belief import (
    Belief, belief_update, cutoff_strategies, explore, reachable_beliefs, representative_sequence, solve,
)
from fsc_distill.controller import apply_base
from fsc_distill.evaluator import induce_mc, value
from fsc_distill.exceptions import BeliefError, ConfigError, DisabledActionError, UnreachableBeliefError
from fsc_distill.learner import learn
from fsc_distill.pomdp import Distribution, load_model, model_from_dict, parse_objective
from fsc_distill.symbols import DontKnow
from fsc_distill.teachers import BeliefTeacher
from tests.testapp.builders import fixture, mdp_max_reach, model_dict, random_model, running_example


def find_belief(bmdp, pomdp, support):
    expected = Distribution((pomdp.state_index[name], prob) for name, prob in support.items())
    for index, belief in enumerate(bmdp.beliefs):
        if belief.distribution == expected:
            return index
    raise AssertionError('no belief %r' % support)


class BeliefUpdateTestCase(SimpleTestCase):

    def setUp(self):
        self.pomdp = running_example()
        self.initial = Belief.initial(self.pomdp)

    def test_examples(self):
        pomdp = self.pomdp
        belief = belief_update(pomdp, self.initial, 'init', 'b')
        self.assertEqual(belief.distribution, Distribution([(pomdp.state_index['0'], 0.5), (pomdp.state_index['2'], 0.5)]))
        self.assertEqual(belief.observation, pomdp.observation_index['b'])
        self.assertEqual(belief_update(pomdp, self.initial, 'init', 'g').distribution,
                         Distribution.dirac(pomdp.state_index['3']))
        self.assertIsNone(belief_update(pomdp, self.initial, 'init', 'i'))

    def test_disabled_action(self):
        with self.assertRaises(DisabledActionError):
            belief_update(self.pomdp, self.initial, 'r', 'b')

    @tag('property')
    def test_observation_likelihoods_sum_to_one(self):
        rng = random.Random(3)
        for run in range(100):
            pomdp = random_model(rng)
            bmdp = explore(pomdp, max_beliefs=30)
            for (belief, action), edges in bmdp.edges.items():
                with self.subTest(run=run, belief=belief, action=action):
                    self.assertAlmostEqual(math.fsum(prob for _, prob, _ in edges), 1.0, delta=1e-9)
                    for observation, _, successor in edges:
                        self.assertEqual(bmdp.beliefs[successor].observation, observation)
                        for state, _ in bmdp.beliefs[successor].distribution:
                            self.assertEqual(pomdp.obs_of[state], observation)


@tag('basic')
class ExploreTestCase(SimpleTestCase):

    def setUp(self):
        self.pomdp = running_example()

    def test_full_exploration(self):
        bmdp = explore(self.pomdp, max_beliefs=100)
        self.assertEqual(bmdp.cutoffs, {})
        self.assertLessEqual(len(bmdp), 8)
        self.assertEqual(len(bmdp), 6)
        for belief in range(len(bmdp)):
            for action in bmdp.actions(belief):
                self.assertIn((belief, action), bmdp.edges)

    def test_budget_one(self):
        bmdp = explore(self.pomdp, max_beliefs=1)
        self.assertEqual(len(bmdp), 1)
        self.assertEqual(bmdp.cutoffs, {0: 0})
        self.assertEqual(bmdp.edges, {})

    def test_depth_bound(self):
        bmdp = explore(self.pomdp, max_beliefs=100, max_depth=1)
        self.assertEqual(len(bmdp), 4)
        self.assertEqual(sorted(bmdp.cutoffs), [1, 2, 3])

    def test_deterministic(self):
        first = explore(self.pomdp, max_beliefs=4)
        second = explore(self.pomdp, max_beliefs=4)
        self.assertEqual([belief.key() for belief in first.beliefs], [belief.key() for belief in second.beliefs])
        self.assertEqual(first.edges, second.edges)
        self.assertEqual(first.cutoffs, second.cutoffs)

    def test_fully_observable(self):
        pomdp = load_model(fixture('fully-observable.json'))
        bmdp = explore(pomdp, max_beliefs=100)
        self.assertEqual(len(bmdp), 4)
        self.assertTrue(all(belief.distribution.is_dirac for belief in bmdp.beliefs))

    def test_unknown_cutoff_strategy(self):
        with self.assertRaises(BeliefError):
            explore(self.pomdp, cutoff_strategy=3)


class SolveTestCase(SimpleTestCase):

    def setUp(self):
        self.pomdp = running_example()
        self.bmdp = explore(self.pomdp, max_beliefs=100)

    def action(self, strategy, support):
        choice = strategy.choice[find_belief(self.bmdp, self.pomdp, support)]
        return self.pomdp.actions[choice]

    def test_max_prob(self):
        strategy = solve(self.bmdp, self.pomdp, parse_objective('maxprob:g', self.pomdp))
        self.assertAlmostEqual(strategy.value, 1.0, delta=1e-6)
        self.assertEqual(self.action(strategy, {'s0': 1.0}), 'init')
        self.assertEqual(self.action(strategy, {'0': 0.5, '2': 0.5}), 'r')
        self.assertEqual(self.action(strategy, {'1': 1.0}), 'd')

    def test_min_reward(self):
        strategy = solve(self.bmdp, self.pomdp, parse_objective('minreward:g', self.pomdp))
        self.assertAlmostEqual(strategy.value, 3.0, delta=1e-6)
        self.assertEqual(self.action(strategy, {'0': 0.5, '2': 0.5}), 'r')

    def test_all_states_targets(self):
        data = model_dict({'s0': 'o', 's1': 'o'}, {('s0', 'go'): {'s1': 1.0}, ('s1', 'go'): {'s0': 1.0}}, 's0', ['o'])
        pomdp = model_from_dict(data)
        strategy = solve(explore(pomdp), pomdp, parse_objective('minreward:o', pomdp))
        self.assertEqual(strategy.value, 0.0)
        self.assertTrue(all(value == 0.0 for value in strategy.values))

    def test_budget_one_uses_cutoff_value(self):
        bmdp = explore(self.pomdp, max_beliefs=1)
        objective = parse_objective('minreward:g', self.pomdp)
        strategy = solve(bmdp, self.pomdp, objective)
        self.assertEqual(strategy.choice[0], DontKnow(0))
        self.assertEqual(strategy.value, bmdp.cutoff_values[0, str(objective)])
        self.assertGreater(strategy.value, 3.0)
        self.assertFalse(math.isinf(strategy.value))
        strategy = solve(bmdp, self.pomdp, parse_objective('maxprob:g', self.pomdp))
        self.assertAlmostEqual(strategy.value, 1.0, delta=1e-6)

    def test_infinite_reward(self):
        data = model_dict(
            {'s0': 'i', 'a': 'o', 't': 't', 'trap': 'x'},
            {('s0', 'go'): {'a': 0.5, 'trap': 0.5}, ('a', 'go'): {'t': 1.0},
             ('t', 'go'): {'t': 1.0}, ('trap', 'go'): {'trap': 1.0}},
            's0', ['t'])
        pomdp = model_from_dict(data)
        strategy = solve(explore(pomdp), pomdp, parse_objective('minreward:t', pomdp))
        self.assertTrue(math.isinf(strategy.value))
        strategy = solve(explore(pomdp), pomdp, parse_objective('maxprob:t', pomdp))
        self.assertAlmostEqual(strategy.value, 0.5, delta=1e-8)

    def test_zero_reward_loop(self):
        data = model_dict(
            {'s0': 'i', 'a': 'o', 't': 't'},
            {('s0', 'init'): {'a': 1.0}, ('a', 'stay'): {'a': 1.0}, ('a', 'go'): {'t': 1.0},
             ('t', 'go'): {'t': 1.0}},
            's0', ['t'],
            rewards={('s0', 'init'): 0.0, ('a', 'stay'): 0.0, ('a', 'go'): 1.0, ('t', 'go'): 0.0})
        pomdp = model_from_dict(data)
        bmdp = explore(pomdp)
        objective = parse_objective('minreward:t', pomdp)
        strategy = solve(bmdp, pomdp, objective)
        self.assertAlmostEqual(strategy.value, 1.0, delta=1e-8)
        waiting = find_belief(bmdp, pomdp, {'a': 1.0})
        self.assertEqual(strategy.choice[waiting], pomdp.action_index['go'])
        fsc = apply_base(learn(BeliefTeacher(pomdp, bmdp, strategy)), cutoff_strategies(pomdp))
        self.assertAlmostEqual(value(induce_mc(pomdp, fsc), pomdp, objective).value, 1.0, delta=1e-8)

    def test_target_must_be_observable(self):
        with self.assertRaisesMessage(ConfigError, "leaves out state '2'"):
            solve(self.bmdp, self.pomdp, parse_objective('maxprob:0', self.pomdp))

    def test_missing_cutoff(self):
        bmdp = explore(self.pomdp, max_beliefs=1)
        with self.assertRaises(BeliefError):
            solve(bmdp, self.pomdp, parse_objective('maxprob:g', self.pomdp), cutoffs=[])

    def test_fully_observable_matches_mdp(self):
        pomdp = load_model(fixture('fully-observable.json'))
        strategy = solve(explore(pomdp), pomdp, parse_objective('maxprob:c', pomdp))
        expected = mdp_max_reach(pomdp, pomdp.targets)
        self.assertAlmostEqual(strategy.value, expected[pomdp.initial_state], delta=1e-6)
        self.assertAlmostEqual(strategy.value, 0.48, delta=1e-6)

    @tag('property')
    def test_random_fully_observable_models(self):
        rng = random.Random(11)
        checked = 0
        while checked < 30:
            data = random_model_dict_fully_observable(rng)
            pomdp = model_from_dict(data)
            bmdp = explore(pomdp, max_beliefs=100)
            objective = parse_objective('maxprob:%s' % data['targets'][0], pomdp)
            strategy = solve(bmdp, pomdp, objective)
            expected = mdp_max_reach(pomdp, pomdp.resolve_labels(objective.target))
            with self.subTest(checked=checked):
                self.assertAlmostEqual(strategy.value, expected[pomdp.initial_state], delta=1e-6)
            checked += 1

    def test_cutoff_strategies(self):
        strategies = cutoff_strategies(self.pomdp)
        self.assertEqual([strategy.id for strategy in strategies], [0])
        self.assertEqual(strategies[0].policy['b'], Distribution([('l', 0.5), ('r', 0.5)]))


def random_model_dict_fully_observable(rng):
    count = rng.randint(2, 6)
    states = {'s%d' % index: 'z%d' % index for index in range(count)}
    transitions = {}
    for state in states:
        for action in rng.sample(['a', 'b', 'c'], rng.randint(1, 3)):
            support = rng.sample(sorted(states), rng.randint(1, min(3, count)))
            weights = [rng.randint(1, 5) for _ in support]
            transitions[state, action] = {succ: weight / sum(weights) for succ, weight in zip(support, weights)}
    return model_dict(states, transitions, 's0', [states['s%d' % (count - 1)]], actions=['a', 'b', 'c'])


class RepresentativeTestCase(SimpleTestCase):

    def setUp(self):
        self.pomdp = running_example()
        self.bmdp = explore(self.pomdp, max_beliefs=100)
        self.strategy = solve(self.bmdp, self.pomdp, parse_objective('maxprob:g', self.pomdp))

    def test_examples(self):
        bmdp, pomdp = self.bmdp, self.pomdp
        self.assertEqual(representative_sequence(bmdp, bmdp.initial), ('i',))
        self.assertEqual(representative_sequence(bmdp, find_belief(bmdp, pomdp, {'0': 0.5, '2': 0.5})), ('i', 'b'))
        self.assertEqual(representative_sequence(bmdp, find_belief(bmdp, pomdp, {'3': 1.0}), self.strategy),
                         ('i', 'g'))

    def test_strategy_restricts_paths(self):
        bmdp, pomdp = self.bmdp, self.pomdp
        left_corner = find_belief(bmdp, pomdp, {'0': 1.0})
        self.assertEqual(representative_sequence(bmdp, left_corner), ('i', 'y', 'b'))
        with self.assertRaises(UnreachableBeliefError):
            representative_sequence(bmdp, left_corner, self.strategy)
        self.assertNotIn(left_corner, reachable_beliefs(bmdp, self.strategy))
        with self.assertRaises(UnreachableBeliefError):
            representative_sequence(bmdp, 99)

    def test_reachable_beliefs(self):
        self.assertEqual(len(reachable_beliefs(self.bmdp, self.strategy)), 4)
