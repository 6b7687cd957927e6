"""Finite-state controllers: execution, completion heuristics and export."""
import json
import logging
from collections import Counter, deque
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Sequence, Tuple

from pydantic import ValidationError

from .exceptions import ControllerError, MissingCutoffError, TableError
from .pomdp import Distribution
from .schemas import FscDocument, FscTransitionEntry
from .symbols import DONT_CARE, DontKnow, format_output, is_concrete, parse_output

logger = logging.getLogger(__name__)

H1_FALLBACKS = ('keep', 'dont_care')


@dataclass(frozen=True, eq=False)
class Fsc:
    """A Mealy machine over observations with action-distribution outputs.

    Nodes are ``0 .. size-1``; ``gamma`` and ``delta`` are keyed by
    ``(node, observation)`` and total on nodes times ``alphabet``.
    """
    size: int
    alphabet: Tuple[str, ...]
    gamma: Mapping[Tuple[int, str], object]
    delta: Mapping[Tuple[int, str], int]
    initial: int = 0

    def __post_init__(self):
        if self.size < 1:
            raise ControllerError('an FSC needs at least one node')
        if not 0 <= self.initial < self.size:
            raise ControllerError('initial node %r out of range' % self.initial)
        for node in self.nodes:
            for observation in self.alphabet:
                if (node, observation) not in self.gamma or (node, observation) not in self.delta:
                    raise ControllerError('gamma/delta undefined at node %d on %r' % (node, observation))
                if not 0 <= self.delta[node, observation] < self.size:
                    raise ControllerError('delta of node %d on %r leaves the node set' % (node, observation))

    @property
    def nodes(self):
        return range(self.size)

    @cached_property
    def letters(self):
        return frozenset(self.alphabet)

    def step(self, node, observation):
        if observation not in self.letters:
            raise ControllerError('observation %r outside the FSC alphabet' % observation)
        return self.gamma[node, observation], self.delta[node, observation]

    def walk(self, sequence, start=None):
        """Node reached after reading ``sequence``."""
        node = self.initial if start is None else start
        for observation in sequence:
            _, node = self.step(node, observation)
        return node

    def run(self, sequence):
        """The output on the last symbol of a non-empty sequence."""
        if not sequence:
            raise ControllerError('run needs a non-empty observation sequence')
        node = self.walk(sequence[:-1])
        output, _ = self.step(node, sequence[-1])
        return output

    def outputs(self):
        return [self.gamma[node, observation] for node in self.nodes for observation in self.alphabet]

    def chi_indices(self):
        return sorted({output.index for output in self.outputs() if isinstance(output, DontKnow)})

    @property
    def applicable(self):
        return all(is_concrete(output) for output in self.outputs())

    def reachable(self):
        """Nodes reachable from the initial node, in BFS order."""
        order = [self.initial]
        seen = {self.initial}
        queue = deque(order)
        while queue:
            node = queue.popleft()
            for observation in self.alphabet:
                successor = self.delta[node, observation]
                if successor not in seen:
                    seen.add(successor)
                    order.append(successor)
                    queue.append(successor)
        return order

    def replace(self, gamma=None, delta=None, size=None, initial=None):
        return Fsc(
            size=self.size if size is None else size,
            alphabet=self.alphabet,
            gamma=self.gamma if gamma is None else gamma,
            delta=self.delta if delta is None else delta,
            initial=self.initial if initial is None else initial,
        )

    def __repr__(self):
        return '<Fsc %d nodes over %s>' % (self.size, ','.join(self.alphabet))


def run(fsc: Fsc, sequence: Sequence[str]):
    return fsc.run(sequence)


def apply_h1(fsc: Fsc, fallback='keep') -> Fsc:
    """Replace each χ on observation o by the empirical action frequencies on o.

    Mass of action a on o is summed over all concrete outputs on o and divided
    by their number. With no concrete output on o, χ is kept or, with the
    ``dont_care`` fallback, turned into †.
    """
    if fallback not in H1_FALLBACKS:
        raise ControllerError('unknown H1 fallback %r' % fallback)
    totals = Counter()
    mass = {}
    for (node, observation), output in fsc.gamma.items():
        if is_concrete(output):
            totals[observation] += 1
            for action, prob in output:
                mass.setdefault(observation, Counter())[action] += prob
    completions = {
        observation: Distribution((action, weight / totals[observation]) for action, weight in sorted(weights.items()))
        for observation, weights in mass.items()
    }
    gamma = {}
    for key, output in fsc.gamma.items():
        if isinstance(output, DontKnow):
            completion = completions.get(key[1])
            if completion is not None:
                output = completion
            elif fallback == 'dont_care':
                output = DONT_CARE
        gamma[key] = output
    return fsc.replace(gamma=gamma)


def apply_h2(fsc: Fsc, exact=False) -> Fsc:
    """Relabel every χ as † and minimise."""
    from .learner import minimize

    gamma = {key: DONT_CARE if isinstance(output, DontKnow) else output for key, output in fsc.gamma.items()}
    return minimize(fsc.replace(gamma=gamma), exact=exact)


def apply_base(fsc: Fsc, cutoffs) -> Fsc:
    """Hand control to cut-off strategy i for good once χ_i is output.

    One absorbing node per referenced strategy is appended, in index order.
    """
    by_id = {cutoff.id: cutoff for cutoff in cutoffs}
    indices = fsc.chi_indices()
    missing = [index for index in indices if index not in by_id]
    if missing:
        raise MissingCutoffError('no cut-off strategy for chi_%s' % ', chi_'.join(map(str, missing)))
    absorbing = {index: fsc.size + position for position, index in enumerate(indices)}

    def policy(index, observation):
        try:
            return by_id[index].action_distribution(observation)
        except KeyError:
            raise MissingCutoffError('cut-off strategy %d has no choice for %r' % (index, observation))

    gamma = dict(fsc.gamma)
    delta = dict(fsc.delta)
    for key, output in fsc.gamma.items():
        if isinstance(output, DontKnow):
            gamma[key] = policy(output.index, key[1])
            delta[key] = absorbing[output.index]
    for index, node in absorbing.items():
        for observation in fsc.alphabet:
            gamma[node, observation] = policy(index, observation)
            delta[node, observation] = node
    return fsc.replace(gamma=gamma, delta=delta, size=fsc.size + len(absorbing))


def resolve_dont_care(fsc: Fsc, pomdp) -> Fsc:
    """Play the lexicographically first enabled action wherever † is output."""
    defaults = {
        observation: Distribution.dirac(min(pomdp.enabled_action_names(observation)))
        for observation in fsc.alphabet
        if observation in pomdp.observation_index
    }
    gamma = {
        key: defaults.get(key[1], DONT_CARE) if output is DONT_CARE else output
        for key, output in fsc.gamma.items()
    }
    return fsc.replace(gamma=gamma)


def count_outputs(fsc: Fsc):
    counts = {'action': 0, 'chi': 0, 'dont_care': 0}
    for output in fsc.outputs():
        if output is DONT_CARE:
            counts['dont_care'] += 1
        elif isinstance(output, DontKnow):
            counts['chi'] += 1
        else:
            counts['action'] += 1
    return counts


def export_dot(fsc: Fsc) -> str:
    lines = ['digraph fsc {', '  rankdir=LR;', '  node [shape=circle];']
    for node in fsc.nodes:
        shape = ', shape=doublecircle' if node == fsc.initial else ''
        lines.append('  n%d [label="%d"%s];' % (node, node, shape))
    for node in fsc.nodes:
        for observation in fsc.alphabet:
            label = '%s / %s' % (observation, format_output(fsc.gamma[node, observation], chi_separator='_'))
            lines.append('  n%d -> n%d [label="%s"];' % (
                node, fsc.delta[node, observation], label.replace('"', '\\"')))
    lines.append('}')
    return '\n'.join(lines) + '\n'


def fsc_to_json(fsc: Fsc) -> str:
    document = FscDocument(
        nodes=list(fsc.nodes),
        initial=fsc.initial,
        transitions=[
            FscTransitionEntry(
                node=node,
                observation=observation,
                output=format_output(fsc.gamma[node, observation]),
                next=fsc.delta[node, observation],
            )
            for node in fsc.nodes
            for observation in fsc.alphabet
        ],
    )
    return document.model_dump_json(indent=2) + '\n'


def fsc_from_json(text) -> Fsc:
    try:
        document = FscDocument.model_validate(json.loads(text))
    except (ValueError, ValidationError) as exc:
        raise ControllerError('malformed FSC document: %s' % exc)
    position = {node: index for index, node in enumerate(document.nodes)}
    if len(position) != len(document.nodes):
        raise ControllerError('duplicate id in FSC nodes')
    alphabet = list(dict.fromkeys(entry.observation for entry in document.transitions))
    gamma, delta = {}, {}
    for entry in document.transitions:
        if entry.node not in position or entry.next not in position:
            raise ControllerError('dangling id in FSC transition %r' % entry.model_dump())
        key = (position[entry.node], entry.observation)
        if key in gamma:
            raise ControllerError('duplicate transition for node %r on %r' % (entry.node, entry.observation))
        try:
            gamma[key] = parse_output(entry.output)
        except TableError as exc:
            raise ControllerError(str(exc))
        delta[key] = position[entry.next]
    if document.initial not in position:
        raise ControllerError('dangling id: initial node %r' % document.initial)
    return Fsc(size=len(position), alphabet=tuple(alphabet), gamma=gamma, delta=delta,
               initial=position[document.initial])
