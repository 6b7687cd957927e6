"""POMDP data model, model-file parsing and observation sequences."""
import dataclasses
import enum
import json
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, Mapping, Optional, Sequence, Tuple

from pydantic import ValidationError

from .conf import fsc_settings
from .exceptions import InvalidPathError, ModelIOError, ModelParseError, ModelValidationError
from .schemas import ModelDocument

logger = logging.getLogger(__name__)

ObservationSequence = Tuple[str, ...]


class Distribution:
    """A finite probability distribution with strictly positive support.

    Equality and hashing compare probabilities rounded to 1e-9 so that
    distributions can serve as output letters and dictionary keys.
    """
    __slots__ = ('support',)

    def __init__(self, pairs):
        items = tuple((element, float(prob)) for element, prob in pairs)
        seen = set()
        for element, prob in items:
            if element in seen:
                raise ModelValidationError('duplicate id %r in distribution' % (element,))
            seen.add(element)
            if not prob > 0:
                raise ModelValidationError(
                    'distribution support: probability of %r is %r' % (element, prob))
        total = math.fsum(prob for _, prob in items)
        if abs(total - 1.0) > fsc_settings.TOLERANCE:
            raise ModelValidationError('distribution sum is %r, expected 1' % total)
        self.support = tuple(sorted(items, key=lambda item: item[0]))

    @classmethod
    def dirac(cls, element):
        return cls([(element, 1.0)])

    @classmethod
    def uniform(cls, elements):
        elements = list(elements)
        return cls((element, 1.0 / len(elements)) for element in elements)

    @classmethod
    def normalized(cls, weights: Mapping):
        """Normalize non-negative weights; zero weights leave the support."""
        total = math.fsum(weights.values())
        if total <= 0:
            raise ModelValidationError('distribution sum is %r, expected 1' % total)
        return cls((element, weight / total) for element, weight in weights.items() if weight > 0)

    def __iter__(self):
        return iter(self.support)

    def __len__(self):
        return len(self.support)

    def elements(self):
        return tuple(element for element, _ in self.support)

    def prob(self, element):
        for candidate, prob in self.support:
            if candidate == element:
                return prob
        return 0.0

    def as_dict(self):
        return dict(self.support)

    @property
    def is_dirac(self):
        return len(self.support) == 1

    def key(self):
        return tuple((element, round(prob, 9)) for element, prob in self.support)

    def __eq__(self, other):
        if not isinstance(other, Distribution):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return 'Distribution(%s)' % ', '.join('%r: %r' % item for item in self.support)


class ObjectiveKind(enum.Enum):
    MAX_PROB = 'maxprob'
    MIN_PROB = 'minprob'
    MAX_REWARD = 'maxreward'
    MIN_REWARD = 'minreward'


@dataclass(frozen=True)
class Objective:
    kind: ObjectiveKind
    target: FrozenSet[str]

    def __post_init__(self):
        if not self.target:
            raise ModelValidationError('objective target must not be empty')

    @property
    def is_probability(self):
        return self.kind in (ObjectiveKind.MAX_PROB, ObjectiveKind.MIN_PROB)

    @property
    def maximizing(self):
        return self.kind in (ObjectiveKind.MAX_PROB, ObjectiveKind.MAX_REWARD)

    def better(self, first, second):
        """True when ``first`` is strictly better than ``second``."""
        return first > second if self.maximizing else first < second

    def __str__(self):
        return '%s:%s' % (self.kind.value, ','.join(sorted(self.target)))


@dataclass(frozen=True)
class CutoffStrategy:
    """A memoryless strategy on the POMDP used at cut-off beliefs."""
    id: int
    policy: Mapping[str, Distribution]

    def action_distribution(self, observation):
        return self.policy[observation]


@dataclass(frozen=True, eq=False)
class Pomdp:
    """A finite POMDP. States, actions and observations are referred to by index."""
    states: Tuple[str, ...]
    actions: Tuple[str, ...]
    obs_of: Tuple[int, ...]
    observations: Tuple[str, ...]
    transitions: Mapping[Tuple[int, int], Distribution]
    initial_state: int
    targets: FrozenSet[int] = frozenset()
    target_labels: Tuple[str, ...] = ()
    rewards: Optional[Mapping[Tuple[int, int], float]] = None
    cutoff_policies: Tuple[Mapping[str, Distribution], ...] = field(default=())

    def __post_init__(self):
        self.validate()

    @cached_property
    def enabled(self) -> Tuple[Tuple[int, ...], ...]:
        enabled = [[] for _ in self.states]
        for state, action in self.transitions:
            enabled[state].append(action)
        return tuple(tuple(sorted(actions)) for actions in enabled)

    @cached_property
    def state_index(self) -> Dict[str, int]:
        return {name: index for index, name in enumerate(self.states)}

    @cached_property
    def action_index(self) -> Dict[str, int]:
        return {name: index for index, name in enumerate(self.actions)}

    @cached_property
    def observation_index(self) -> Dict[str, int]:
        return {name: index for index, name in enumerate(self.observations)}

    @cached_property
    def observation_actions(self) -> Dict[int, Tuple[int, ...]]:
        """Enabled actions per observation, A(z)."""
        result = {}
        for state, observation in enumerate(self.obs_of):
            result.setdefault(observation, self.enabled[state])
        return result

    def validate(self):
        if not 0 <= self.initial_state < len(self.states):
            raise ModelValidationError('dangling id: initial state %r' % self.initial_state)
        for (state, action), successors in self.transitions.items():
            for successor, _ in successors:
                if not 0 <= successor < len(self.states):
                    raise ModelValidationError(
                        'dangling id: successor %r of (%s, %s)'
                        % (successor, self.states[state], self.actions[action]))
        seen = {}
        for state, observation in enumerate(self.obs_of):
            if not self.enabled[state]:
                raise ModelValidationError('deadlock: state %r enables no action' % self.states[state])
            other = seen.setdefault(observation, state)
            if self.enabled[other] != self.enabled[state]:
                raise ModelValidationError(
                    'observation action-consistency: states %r and %r share observation %r '
                    'but enable different actions'
                    % (self.states[other], self.states[state], self.observations[observation]))
        for state, action in (self.rewards or {}):
            if (state, action) not in self.transitions:
                raise ModelValidationError(
                    'dangling id: reward for disabled pair (%s, %s)'
                    % (self.states[state], self.actions[action]))

    def successors(self, state, action) -> Distribution:
        return self.transitions[state, action]

    def reward(self, state, action):
        if self.rewards is None:
            return 1.0
        return self.rewards.get((state, action), 0.0)

    def states_with_observation(self, observation):
        return tuple(state for state, label in enumerate(self.obs_of) if label == observation)

    def enabled_action_names(self, observation_name):
        observation = self.observation_index[observation_name]
        return tuple(self.actions[action] for action in self.observation_actions[observation])

    def resolve_labels(self, labels: Iterable[str]) -> FrozenSet[int]:
        """Expand state ids and observation ids to a set of state indices."""
        resolved = set()
        for label in labels:
            if label in self.state_index:
                resolved.add(self.state_index[label])
            elif label in self.observation_index:
                resolved.update(self.states_with_observation(self.observation_index[label]))
            else:
                raise ModelValidationError('dangling id: target %r is neither a state nor an observation' % label)
        return frozenset(resolved)

    def sequence_indices(self, sequence: Sequence[str]) -> Tuple[int, ...]:
        try:
            return tuple(self.observation_index[symbol] for symbol in sequence)
        except KeyError as exc:
            raise ModelValidationError('dangling id: unknown observation %r' % exc.args[0])


def model_from_dict(data) -> Pomdp:
    """Build a validated Pomdp from the decoded model-file structure."""
    try:
        document = ModelDocument.model_validate(data)
    except ValidationError as exc:
        raise ModelParseError('malformed model: %s' % exc)
    return _model_from_document(document)


def parse_model(text) -> Pomdp:
    try:
        data = json.loads(text)
    except ValueError as exc:
        raise ModelParseError('malformed model: %s' % exc)
    return model_from_dict(data)


def load_model(path) -> Pomdp:
    try:
        with open(path, encoding='utf-8') as handle:
            text = handle.read()
    except OSError as exc:
        raise ModelIOError('cannot read model %s: %s' % (path, exc.strerror or exc))
    pomdp = parse_model(text)
    logger.info('loaded %s: %d states, %d actions, %d observations',
                path, len(pomdp.states), len(pomdp.actions), len(pomdp.observations))
    return pomdp


def _unique_index(names, what):
    index = {}
    for name in names:
        if name in index:
            raise ModelValidationError('duplicate id: %s %r' % (what, name))
        index[name] = len(index)
    return index


def _model_from_document(document: ModelDocument) -> Pomdp:
    state_index = _unique_index((entry.id for entry in document.states), 'state')
    action_index = _unique_index(document.actions, 'action')
    observations = []
    obs_index = {}
    obs_of = []
    for entry in document.states:
        if entry.observation not in obs_index:
            obs_index[entry.observation] = len(observations)
            observations.append(entry.observation)
        obs_of.append(obs_index[entry.observation])

    def state_of(name):
        if name not in state_index:
            raise ModelValidationError('dangling id: unknown state %r' % name)
        return state_index[name]

    def action_of(name):
        if name not in action_index:
            raise ModelValidationError('dangling id: unknown action %r' % name)
        return action_index[name]

    transitions = {}
    for entry in document.transitions:
        key = (state_of(entry.source), action_of(entry.action))
        if key in transitions:
            raise ModelValidationError('duplicate id: transition (%s, %s)' % (entry.source, entry.action))
        transitions[key] = Distribution((state_of(succ.state), succ.prob) for succ in entry.to)

    rewards = None
    if document.rewards is not None:
        rewards = {}
        for entry in document.rewards:
            if entry.value < 0:
                raise ModelValidationError('negative reward %r at (%s, %s)' % (entry.value, entry.state, entry.action))
            rewards[state_of(entry.state), action_of(entry.action)] = float(entry.value)

    pomdp = Pomdp(
        states=tuple(entry.id for entry in document.states),
        actions=tuple(document.actions),
        obs_of=tuple(obs_of),
        observations=tuple(observations),
        transitions=transitions,
        initial_state=state_of(document.initial),
        target_labels=tuple(document.targets),
        rewards=rewards,
    )
    return dataclasses.replace(
        pomdp,
        targets=pomdp.resolve_labels(document.targets),
        cutoff_policies=tuple(_cutoff_policy(pomdp, raw) for raw in document.cutoff_strategies),
    )


def _cutoff_policy(pomdp, raw):
    policy = uniform_policy(pomdp)
    for observation, weights in raw.items():
        if observation not in pomdp.observation_index:
            raise ModelValidationError('dangling id: cut-off strategy observation %r' % observation)
        allowed = set(pomdp.enabled_action_names(observation))
        for action in weights:
            if action not in allowed:
                raise ModelValidationError(
                    'cut-off strategy plays %r, not enabled under observation %r' % (action, observation))
        policy[observation] = Distribution(weights.items())
    return policy


def model_to_dict(pomdp: Pomdp):
    data = {
        'states': [
            {'id': name, 'observation': pomdp.observations[pomdp.obs_of[state]]}
            for state, name in enumerate(pomdp.states)
        ],
        'actions': list(pomdp.actions),
        'transitions': [
            {
                'from': pomdp.states[state],
                'action': pomdp.actions[action],
                'to': [{'state': pomdp.states[succ], 'prob': prob} for succ, prob in pomdp.transitions[state, action]],
            }
            for state, action in sorted(pomdp.transitions)
        ],
        'initial': pomdp.states[pomdp.initial_state],
        'targets': list(pomdp.target_labels),
    }
    if pomdp.rewards is not None:
        data['rewards'] = [
            {'state': pomdp.states[state], 'action': pomdp.actions[action], 'value': value}
            for (state, action), value in sorted(pomdp.rewards.items())
        ]
    if pomdp.cutoff_policies:
        data['cutoff_strategies'] = [
            {observation: distribution.as_dict() for observation, distribution in policy.items()}
            for policy in pomdp.cutoff_policies
        ]
    return data


def serialize_model(pomdp: Pomdp) -> str:
    return json.dumps(model_to_dict(pomdp), indent=2) + '\n'


def parse_objective(text, pomdp: Pomdp) -> Objective:
    """Parse ``maxprob:<label>[,<label>...]`` and friends."""
    kind_name, sep, labels = str(text).partition(':')
    try:
        kind = ObjectiveKind(kind_name.strip().lower())
    except ValueError:
        raise ModelValidationError('unknown objective kind %r' % kind_name)
    if not sep or not labels.strip():
        raise ModelValidationError('objective %r names no target' % text)
    target = frozenset(label.strip() for label in labels.split(',') if label.strip())
    objective = Objective(kind, target)
    pomdp.resolve_labels(objective.target)
    return objective


def observation_of_path(pomdp: Pomdp, path: Sequence[str]) -> ObservationSequence:
    """Observation sequence O(s0)O(s1)... of an alternating state/action path."""
    if not path or len(path) % 2 == 0:
        raise InvalidPathError('a path alternates states and actions and ends in a state')
    try:
        states = [pomdp.state_index[name] for name in path[0::2]]
        actions = [pomdp.action_index[name] for name in path[1::2]]
    except KeyError as exc:
        raise InvalidPathError('unknown id %r in path' % exc.args[0])
    for position, action in enumerate(actions):
        state, successor = states[position], states[position + 1]
        if (state, action) not in pomdp.transitions:
            raise InvalidPathError(
                'action %r is disabled in state %r' % (pomdp.actions[action], pomdp.states[state]))
        if pomdp.transitions[state, action].prob(successor) <= 0:
            raise InvalidPathError(
                'state %r is not a successor of (%s, %s)'
                % (pomdp.states[successor], pomdp.states[state], pomdp.actions[action]))
    return tuple(pomdp.observations[pomdp.obs_of[state]] for state in states)


def realizable(pomdp: Pomdp, sequence: Sequence[str]) -> bool:
    """Whether some path of the POMDP produces ``sequence``.

    Forward subset construction over the states carrying each observed symbol.
    """
    if not sequence:
        return True
    try:
        symbols = pomdp.sequence_indices(sequence)
    except ModelValidationError:
        return False
    if pomdp.obs_of[pomdp.initial_state] != symbols[0]:
        return False
    current = {pomdp.initial_state}
    for symbol in symbols[1:]:
        current = {
            successor
            for state in current
            for action in pomdp.enabled[state]
            for successor, _ in pomdp.transitions[state, action]
            if pomdp.obs_of[successor] == symbol
        }
        if not current:
            return False
    return True


def uniform_policy(pomdp: Pomdp) -> Dict[str, Distribution]:
    return {
        name: Distribution.uniform(pomdp.enabled_action_names(name))
        for name in pomdp.observations
    }
