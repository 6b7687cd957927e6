"""Shared models, controllers and brute-force oracles for the test suite."""

import itertools
import os

import fsc_distill
from fsc_distill.controller import Fsc
from fsc_distill.pomdp import Distribution, load_model, model_from_dict
from fsc_distill.symbols import DONT_CARE
from fsc_distill.teachers import StrategyTable, load_strategy_table

BUNDLED = os.path.join(os.path.dirname(fsc_distill.__file__), 'bundled')
FIXTURES = os.path.join(os.path.dirname(__file__), 'fixtures')


def bundled(name):
    return os.path.join(BUNDLED, name)


def fixture(name):
    return os.path.join(FIXTURES, name)


def running_example():
    return load_model(bundled('running-example.json'))


def grid():
    return load_model(bundled('grid-avoid-4.json'))


def example_table(pomdp=None):
    return load_strategy_table(bundled('running-example.csv'), pomdp or running_example())


def dirac(action):
    return Distribution.dirac(action)


def make_fsc(alphabet, transitions, initial=0, default=DONT_CARE):
    """Build an FSC from ``{(node, observation): (output, next)}``.

    Missing pairs output ``default`` and stay in their node.
    """
    size = 1 + max([node for node, _ in transitions] + [target for _, target in transitions.values()] + [initial])
    gamma, delta = {}, {}
    for node in range(size):
        for observation in alphabet:
            output, target = transitions.get((node, observation), (default, node))
            gamma[node, observation] = output
            delta[node, observation] = target
    return Fsc(size=size, alphabet=tuple(alphabet), gamma=gamma, delta=delta, initial=initial)


def two_node_fsc(alphabet=('i', 'b', 'y', 'g')):
    """Two nodes: play init on i and move on; then r on b and d on y."""
    return make_fsc(alphabet, {
        (0, 'i'): (dirac('init'), 1),
        (1, 'b'): (dirac('r'), 1),
        (1, 'y'): (dirac('d'), 1),
    })


def one_node_fsc(alphabet, outputs):
    return make_fsc(alphabet, {(0, observation): (output, 0) for observation, output in outputs.items()})


def sequences(alphabet, max_length, min_length=1):
    for length in range(min_length, max_length + 1):
        for sequence in itertools.product(alphabet, repeat=length):
            yield sequence


def model_dict(states, transitions, initial, targets=(), rewards=None, actions=None):
    """A model-file structure from ``{state: observation}`` and
    ``{(state, action): {successor: prob}}``."""
    if actions is None:
        actions = sorted({action for _, action in transitions})
    data = {
        'states': [{'id': state, 'observation': observation} for state, observation in states.items()],
        'actions': list(actions),
        'transitions': [
            {'from': state, 'action': action, 'to': [{'state': succ, 'prob': prob} for succ, prob in successors.items()]}
            for (state, action), successors in transitions.items()
        ],
        'initial': initial,
        'targets': list(targets),
    }
    if rewards is not None:
        data['rewards'] = [{'state': state, 'action': action, 'value': value}
                           for (state, action), value in rewards.items()]
    return data


def random_model_dict(rng, max_states=8, max_actions=3, max_observations=4, with_rewards=False):
    """A random valid model: states sharing an observation enable the same actions."""
    count = rng.randint(1, max_states)
    observation_count = rng.randint(1, min(max_observations, count))
    actions = ['a%d' % index for index in range(rng.randint(1, max_actions))]
    observations = ['z%d' % index for index in range(observation_count)]
    labels = observations + [rng.choice(observations) for _ in range(count - observation_count)]
    rng.shuffle(labels)
    states = {'s%d' % index: label for index, label in enumerate(labels)}
    enabled = {label: sorted(rng.sample(actions, rng.randint(1, len(actions)))) for label in observations}
    transitions = {}
    for state, label in states.items():
        for action in enabled[label]:
            support = rng.sample(sorted(states), rng.randint(1, min(3, count)))
            weights = [rng.randint(1, 4) for _ in support]
            total = sum(weights)
            transitions[state, action] = {succ: weight / total for succ, weight in zip(support, weights)}
    rewards = None
    if with_rewards:
        rewards = {key: float(rng.randint(0, 3)) for key in transitions}
    targets = [rng.choice(observations)]
    return model_dict(states, transitions, 's0', targets, rewards, actions)


def random_model(rng, **kwargs):
    return model_from_dict(random_model_dict(rng, **kwargs))


def realizable_sequences(pomdp, max_length):
    """Every observation sequence of length 1..max_length some path produces."""
    start = frozenset([pomdp.initial_state])
    layer = {(pomdp.observations[pomdp.obs_of[pomdp.initial_state]],): start}
    result = list(layer)
    for _ in range(max_length - 1):
        following = {}
        for sequence, states in layer.items():
            for state in states:
                for action in pomdp.enabled[state]:
                    for successor, _ in pomdp.transitions[state, action]:
                        key = sequence + (pomdp.observations[pomdp.obs_of[successor]],)
                        following.setdefault(key, set()).add(successor)
        layer = {sequence: frozenset(states) for sequence, states in sorted(following.items())}
        result.extend(layer)
    return result


def random_complete_table(rng, pomdp, depth, actions=None):
    """A random output on every realizable sequence up to ``depth``."""
    rows = []
    for sequence in realizable_sequences(pomdp, depth):
        enabled = actions or pomdp.enabled_action_names(sequence[-1])
        rows.append((sequence, dirac(rng.choice(sorted(enabled)))))
    return StrategyTable.from_rows(rows)


def canonical_size(table):
    """Number of distinct residuals of the table's output function, dead residual included."""
    residuals = {}
    for sequence, output in table.rows:
        for split in range(len(sequence) + 1):
            residuals.setdefault(sequence[:split], set())
            if split < len(sequence):
                residuals[sequence[:split]].add((sequence[split:], output))
    distinct = {frozenset(residual) for residual in residuals.values()}
    distinct.add(frozenset())
    return len(distinct)


def mdp_max_reach(pomdp, targets, sweeps=100000, tolerance=1e-12):
    """Maximal reachability probabilities on the underlying MDP, by value iteration."""
    values = [1.0 if state in targets else 0.0 for state in range(len(pomdp.states))]
    for _ in range(sweeps):
        change = 0.0
        for state in range(len(pomdp.states)):
            if state in targets:
                continue
            best = max(
                sum(prob * values[succ] for succ, prob in pomdp.transitions[state, action])
                for action in pomdp.enabled[state]
            )
            change = max(change, abs(best - values[state]))
            values[state] = best
        if change < tolerance:
            break
    return values
