"""
Markov chains induced by a controller on a POMDP and their objective values.

A chain state is a pair ``(pomdp state, controller node)``. From ``(s, n)`` the
chain moves to ``(s', delta(n, O(s)))`` with probability
``sum_a gamma(n, O(s))(a) * P(s, a, s')``.
"""
import logging
import math
import time
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, FrozenSet, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from .conf import fsc_settings
from .exceptions import EvaluationError, InapplicableControllerError
from .pomdp import Distribution, Objective
from .schemas import SimulationReport, ValueReport
from .symbols import DONT_CARE, DontKnow

logger = logging.getLogger(__name__)

METHODS = ('auto', 'linear', 'iteration')
DONT_CARE_POLICIES = ('first', 'error')


@dataclass(frozen=True, eq=False)
class InducedMc:
    states: Tuple[Tuple[int, int], ...]
    transitions: Tuple[Tuple[Tuple[int, float], ...], ...]
    rewards: Tuple[float, ...]
    initial_states: Tuple[int, ...]
    target_states: FrozenSet[int]
    fsc_nodes: int

    @property
    def initial(self):
        return self.initial_states[0]

    @cached_property
    def index(self) -> Dict[Tuple[int, int], int]:
        return {pair: position for position, pair in enumerate(self.states)}

    def __len__(self):
        return len(self.states)

    def lift(self, pomdp_states) -> FrozenSet[int]:
        """Chain states whose POMDP component lies in ``pomdp_states``."""
        return frozenset(position for position, (state, _) in enumerate(self.states) if state in pomdp_states)


def _action_distribution(fsc, pomdp, node, observation, dont_care):
    output = fsc.gamma[node, observation]
    if isinstance(output, DontKnow):
        raise InapplicableControllerError(node, observation, 'outputs chi_%d' % output.index)
    if output is DONT_CARE:
        if dont_care != 'first':
            raise InapplicableControllerError(node, observation, 'outputs the don\'t-care symbol')
        output = Distribution.dirac(min(pomdp.enabled_action_names(observation)))
    return output


def induce_mc(pomdp, fsc, starts: Optional[Sequence[Tuple[int, int]]] = None, dont_care=None) -> InducedMc:
    """Forward-reachable product of ``pomdp`` and ``fsc`` in BFS order.

    ``starts`` lists the initial ``(state, node)`` pairs; by default only
    ``(s0, n0)``. ``dont_care`` is the † policy (``first`` or ``error``).
    """
    if dont_care is None:
        dont_care = fsc_settings.DONT_CARE_POLICY
    if dont_care not in DONT_CARE_POLICIES:
        raise EvaluationError('unknown don\'t-care policy %r' % dont_care)
    if starts is None:
        starts = [(pomdp.initial_state, fsc.initial)]
    states = []
    index = {}
    for pair in starts:
        if pair not in index:
            index[pair] = len(states)
            states.append(pair)
    queue = deque(states)
    transitions = {}
    rewards = {}
    while queue:
        state, node = pair = queue.popleft()
        observation = pomdp.observations[pomdp.obs_of[state]]
        if observation not in fsc.letters:
            raise InapplicableControllerError(node, observation, 'observation outside the controller alphabet')
        actions = _action_distribution(fsc, pomdp, node, observation, dont_care)
        successor_node = fsc.delta[node, observation]
        weights = {}
        reward = 0.0
        for action_name, action_prob in actions:
            action = pomdp.action_index.get(action_name)
            if action is None or (state, action) not in pomdp.transitions:
                raise InapplicableControllerError(
                    node, observation, 'action %r is not enabled in state %r' % (action_name, pomdp.states[state]))
            reward += action_prob * pomdp.reward(state, action)
            for successor, prob in pomdp.transitions[state, action]:
                key = (successor, successor_node)
                weights[key] = weights.get(key, 0.0) + action_prob * prob
        row = []
        for key in sorted(weights):
            if key not in index:
                index[key] = len(states)
                states.append(key)
                queue.append(key)
            row.append((index[key], weights[key]))
        transitions[index[pair]] = tuple(row)
        rewards[index[pair]] = reward
    mc = InducedMc(
        states=tuple(states),
        transitions=tuple(transitions[position] for position in range(len(states))),
        rewards=tuple(rewards[position] for position in range(len(states))),
        initial_states=tuple(index[pair] for pair in dict.fromkeys(starts)),
        target_states=frozenset(position for position, (state, _) in enumerate(states) if state in pomdp.targets),
        fsc_nodes=fsc.size,
    )
    logger.debug('induced chain: %d states from a %d-node controller', len(mc), fsc.size)
    return mc


def _predecessors(mc):
    predecessors = [[] for _ in mc.states]
    for source, successors in enumerate(mc.transitions):
        for successor, _ in successors:
            predecessors[successor].append(source)
    return predecessors


def _backward(predecessors, seeds, blocked=frozenset()):
    reached = set(seeds)
    queue = deque(reached)
    while queue:
        state = queue.popleft()
        for source in predecessors[state]:
            if source not in reached and source not in blocked:
                reached.add(source)
                queue.append(source)
    return reached


def qualitative(mc: InducedMc, targets):
    """``(prob0, prob1)``: states reaching ``targets`` with probability 0 and 1."""
    predecessors = _predecessors(mc)
    can_reach = _backward(predecessors, targets)
    prob0 = set(range(len(mc))) - can_reach
    prob1 = set(range(len(mc))) - _backward(predecessors, prob0, blocked=targets)
    return prob0, prob1


def _solve(mc, unknown, constant, method):
    """Solve ``x = constant + P_uu x`` on the ``unknown`` states."""
    if not unknown:
        return np.zeros(0)
    position = {state: offset for offset, state in enumerate(unknown)}
    rows, cols, data = [], [], []
    for offset, state in enumerate(unknown):
        for successor, prob in mc.transitions[state]:
            if successor in position:
                rows.append(offset)
                cols.append(position[successor])
                data.append(prob)
    size = len(unknown)
    matrix = sparse.csr_matrix((data, (rows, cols)), shape=(size, size))
    if method == 'auto':
        method = 'linear' if size <= fsc_settings.LINEAR_SOLVER_MAX_STATES else 'iteration'
    if method == 'linear':
        system = (sparse.identity(size, format='csc') - matrix.tocsc())
        return np.atleast_1d(spsolve(system, constant))
    values = np.zeros(size)
    for iteration in range(fsc_settings.MAX_ITERATIONS):
        updated = constant + matrix @ values
        if np.max(np.abs(updated - values)) < fsc_settings.VALUE_TOLERANCE:
            logger.debug('value iteration converged after %d sweeps', iteration + 1)
            return updated
        values = updated
    raise EvaluationError('value iteration did not converge in %d sweeps' % fsc_settings.MAX_ITERATIONS)


def state_values(mc: InducedMc, pomdp, objective: Objective, method='auto') -> np.ndarray:
    """Objective value of every chain state; infinite rewards are ``inf``."""
    if method not in METHODS:
        raise EvaluationError('unknown solution method %r' % method)
    targets = mc.lift(pomdp.resolve_labels(objective.target))
    prob0, prob1 = qualitative(mc, targets)
    values = np.zeros(len(mc))
    if objective.is_probability:
        certain = prob1
        values[sorted(certain)] = 1.0
        unknown = [state for state in range(len(mc)) if state not in prob0 and state not in certain]
        constant = np.array([
            sum(prob for successor, prob in mc.transitions[state] if successor in certain)
            for state in unknown
        ])
    else:
        values[:] = math.inf
        values[sorted(targets)] = 0.0
        unknown = [state for state in sorted(prob1) if state not in targets]
        constant = np.array([mc.rewards[state] for state in unknown])
    if unknown:
        values[unknown] = _solve(mc, unknown, constant, method)
    return values


def value(mc: InducedMc, pomdp, objective: Objective, method='auto', heuristic=None) -> ValueReport:
    started = time.perf_counter()
    result = float(state_values(mc, pomdp, objective, method)[mc.initial])
    if objective.is_probability:
        result = min(1.0, max(0.0, result))
    report = ValueReport(
        objective=str(objective),
        value=result,
        mc_states=len(mc),
        fsc_nodes=mc.fsc_nodes,
        wall_time=time.perf_counter() - started,
        heuristic=heuristic,
    )
    logger.info('%s: %s = %s on %d chain states', heuristic or 'controller', objective, result, len(mc))
    return report


def simulate(mc: InducedMc, seed, episodes, horizon, targets=None) -> SimulationReport:
    """Seeded rollouts from the initial state until a target or the horizon.

    ``targets`` are chain states, by default the model file's targets; pass
    ``mc.lift(pomdp.resolve_labels(objective.target))`` to match an objective.
    """
    if episodes < 1:
        raise EvaluationError('simulation needs at least one episode')
    if targets is None:
        targets = mc.target_states
    rng = np.random.default_rng(seed)
    successors = [np.array([successor for successor, _ in row]) for row in mc.transitions]
    cumulative = [np.cumsum([prob for _, prob in row]) for row in mc.transitions]
    hits = np.zeros(episodes)
    totals = np.zeros(episodes)
    for episode in range(episodes):
        state = mc.initial
        reward = 0.0
        steps = 0
        while state not in targets and steps < horizon:
            reward += mc.rewards[state]
            draw = rng.random() * cumulative[state][-1]
            state = int(successors[state][min(np.searchsorted(cumulative[state], draw, side='right'),
                                              len(successors[state]) - 1)])
            steps += 1
        hits[episode] = state in targets
        totals[episode] = reward

    def stderr(samples):
        return float(np.std(samples, ddof=1) / math.sqrt(len(samples))) if len(samples) > 1 else 0.0

    return SimulationReport(
        episodes=episodes,
        horizon=horizon,
        frequency=float(hits.mean()),
        frequency_stderr=stderr(hits),
        mean_reward=float(totals.mean()),
        reward_stderr=stderr(totals),
    )


def format_reports(reports) -> str:
    """Aligned text table: heuristic, value, nodes, chain states and time."""
    header = ('heuristic', 'value', 'nodes', 'mc states', 'time [s]')
    rows = [header] + [
        (
            report.heuristic or '-',
            'inf' if math.isinf(report.value) else '%.6g' % report.value,
            str(report.fsc_nodes),
            str(report.mc_states),
            '%.3f' % report.wall_time,
        )
        for report in reports
    ]
    widths = [max(len(row[column]) for row in rows) for column in range(len(header))]
    lines = [
        '  '.join(cell.ljust(width) if column == 0 else cell.rjust(width)
                  for column, (cell, width) in enumerate(zip(row, widths)))
        for row in rows
    ]
    return '\n'.join(lines) + '\n'
