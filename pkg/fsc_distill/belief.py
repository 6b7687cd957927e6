"""
Belief-MDP exploration with cut-offs and its solution for an objective.

Beliefs are distributions over POMDP state indices whose support shares one
observation. Exploration is breadth first; beliefs beyond the budget or the
depth bound are cut off and valued by running a memoryless cut-off strategy
on the POMDP from the belief.
"""
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple, Union

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from .conf import fsc_settings
from .controller import Fsc
from .evaluator import induce_mc, state_values
from .exceptions import BeliefError, ConfigError, DisabledActionError, UnreachableBeliefError
from .pomdp import CutoffStrategy, Distribution, Objective, ObjectiveKind, Pomdp, uniform_policy
from .symbols import DontKnow

logger = logging.getLogger(__name__)

__all__ = [
    'Belief', 'BeliefMdp', 'BeliefStrategy', 'CutoffStrategy', 'belief_update', 'cutoff_strategies',
    'explore', 'solve', 'representative_sequence', 'reachable_beliefs', 'target_observations',
]


@dataclass(frozen=True)
class Belief:
    distribution: Distribution
    observation: int

    @classmethod
    def initial(cls, pomdp: Pomdp):
        return cls(Distribution.dirac(pomdp.initial_state), pomdp.obs_of[pomdp.initial_state])

    def key(self):
        return self.observation, self.distribution.key()

    def __repr__(self):
        return 'Belief(%s)' % ', '.join('%d: %.6g' % pair for pair in self.distribution)


def _successors(pomdp: Pomdp, belief: Belief, action: int):
    """``[(observation, probability, belief)]`` after ``action``, by observation index."""
    if action not in pomdp.observation_actions[belief.observation]:
        raise DisabledActionError('action %r is not enabled under observation %r'
                                  % (pomdp.actions[action], pomdp.observations[belief.observation]))
    weights: Dict[int, Dict[int, float]] = {}
    for state, prob in belief.distribution:
        for successor, step in pomdp.transitions[state, action]:
            split = weights.setdefault(pomdp.obs_of[successor], {})
            split[successor] = split.get(successor, 0.0) + prob * step
    result = []
    for observation in sorted(weights):
        split = weights[observation]
        mass = math.fsum(split.values())
        result.append((observation, mass, Belief(Distribution.normalized(split), observation)))
    return result


def belief_update(pomdp: Pomdp, belief: Belief, action, observation) -> Optional[Belief]:
    """Bayes successor of ``belief`` after ``action`` and ``observation``; None if impossible.

    ``action`` and ``observation`` are names or indices.
    """
    if isinstance(action, str):
        action = pomdp.action_index[action]
    if isinstance(observation, str):
        observation = pomdp.observation_index[observation]
    for label, _, successor in _successors(pomdp, belief, action):
        if label == observation:
            return successor
    return None


def cutoff_strategies(pomdp: Pomdp) -> List[CutoffStrategy]:
    """Uniform strategy 0, then the model file's strategies numbered from 1."""
    policies = (uniform_policy(pomdp),) + tuple(pomdp.cutoff_policies)
    return [CutoffStrategy(index, policy) for index, policy in enumerate(policies)]


Edge = Tuple[int, float, int]


@dataclass(eq=False)
class BeliefMdp:
    pomdp: Pomdp
    beliefs: List[Belief]
    edges: Dict[Tuple[int, int], Tuple[Edge, ...]]
    depth: List[int]
    cutoffs: Dict[int, int]
    initial: int = 0
    cutoff_values: Dict[Tuple[int, str], float] = field(default_factory=dict)

    def __len__(self):
        return len(self.beliefs)

    def is_cutoff(self, belief):
        return belief in self.cutoffs

    def actions(self, belief):
        if belief in self.cutoffs:
            return ()
        return self.pomdp.observation_actions[self.beliefs[belief].observation]

    def observation_name(self, belief):
        return self.pomdp.observations[self.beliefs[belief].observation]


def explore(pomdp: Pomdp, max_beliefs=None, max_depth=None, cutoff_strategy=None) -> BeliefMdp:
    """Breadth-first exploration of the reachable beliefs.

    A belief at depth ``max_depth`` or one whose new successors would exceed
    ``max_beliefs`` is cut off and flagged with ``cutoff_strategy``.
    """
    if max_beliefs is None:
        max_beliefs = fsc_settings.MAX_BELIEFS
    if max_depth is None:
        max_depth = fsc_settings.MAX_DEPTH
    if cutoff_strategy is None:
        cutoff_strategy = fsc_settings.CUTOFF_STRATEGY
    if max_beliefs < 1:
        raise BeliefError('max_beliefs must be at least 1')
    if not 0 <= cutoff_strategy <= len(pomdp.cutoff_policies):
        raise BeliefError('unknown cut-off strategy %r' % cutoff_strategy)

    initial = Belief.initial(pomdp)
    beliefs = [initial]
    index = {initial.key(): 0}
    depth = [0]
    edges = {}
    cutoffs = {}
    queue = deque([0])
    while queue:
        current = queue.popleft()
        if max_depth is not None and depth[current] >= max_depth:
            cutoffs[current] = cutoff_strategy
            continue
        belief = beliefs[current]
        expansion = {action: _successors(pomdp, belief, action) for action in pomdp.observation_actions[belief.observation]}
        fresh = []
        for successors in expansion.values():
            for _, _, successor in successors:
                if successor.key() not in index and successor.key() not in fresh:
                    fresh.append(successor.key())
        if len(beliefs) + len(fresh) > max_beliefs:
            cutoffs[current] = cutoff_strategy
            continue
        for action, successors in expansion.items():
            row = []
            for observation, prob, successor in successors:
                key = successor.key()
                if key not in index:
                    index[key] = len(beliefs)
                    beliefs.append(successor)
                    depth.append(depth[current] + 1)
                    queue.append(index[key])
                row.append((observation, prob, index[key]))
            edges[current, action] = tuple(row)
    logger.info('explored %d beliefs, %d cut off', len(beliefs), len(cutoffs))
    return BeliefMdp(pomdp=pomdp, beliefs=beliefs, edges=edges, depth=depth, cutoffs=cutoffs)


Choice = Union[int, DontKnow]


@dataclass(frozen=True, eq=False)
class BeliefStrategy:
    """Memoryless belief strategy: an action index or ``DontKnow`` per belief."""
    objective: Objective
    choice: Mapping[int, Choice]
    values: Tuple[float, ...]
    initial: int = 0

    @property
    def value(self):
        return self.values[self.initial]

    def output(self, pomdp: Pomdp, belief):
        choice = self.choice[belief]
        if isinstance(choice, DontKnow):
            return choice
        return Distribution.dirac(pomdp.actions[choice])


def _cutoff_state_values(pomdp, cutoff: CutoffStrategy, objective):
    """Objective value of playing ``cutoff`` from every POMDP state."""
    fsc = Fsc(
        size=1,
        alphabet=pomdp.observations,
        gamma={(0, observation): cutoff.action_distribution(observation) for observation in pomdp.observations},
        delta={(0, observation): 0 for observation in pomdp.observations},
    )
    mc = induce_mc(pomdp, fsc, starts=[(state, 0) for state in range(len(pomdp.states))])
    values = state_values(mc, pomdp, objective)
    return [float(values[mc.index[state, 0]]) for state in range(len(pomdp.states))]


def _cutoff_values(bmdp: BeliefMdp, objective, cutoffs):
    by_id = {cutoff.id: cutoff for cutoff in cutoffs}
    per_state = {}
    result = {}
    for belief, strategy in sorted(bmdp.cutoffs.items()):
        key = (belief, str(objective))
        if key not in bmdp.cutoff_values:
            if strategy not in by_id:
                raise BeliefError('cut-off strategy %d was not provided' % strategy)
            if strategy not in per_state:
                per_state[strategy] = _cutoff_state_values(bmdp.pomdp, by_id[strategy], objective)
            weighted = [prob * per_state[strategy][state] for state, prob in bmdp.beliefs[belief].distribution]
            bmdp.cutoff_values[key] = math.inf if math.inf in weighted else math.fsum(weighted)
        result[belief] = bmdp.cutoff_values[key]
    return result


def target_observations(pomdp: Pomdp, objective: Objective):
    """Observation indices of the objective's target.

    Beliefs only know their observation, so the target must be a union of
    whole observation classes.
    """
    targets = pomdp.resolve_labels(objective.target)
    observations = {pomdp.obs_of[state] for state in targets}
    for observation in sorted(observations):
        outside = [state for state in pomdp.states_with_observation(observation) if state not in targets]
        if outside:
            raise ConfigError(
                'belief mode needs whole observation classes as targets: %s leaves out state %r, '
                'which is also observed as %r; use the observation label instead'
                % (','.join(sorted(objective.target)), pomdp.states[outside[0]], pomdp.observations[observation]))
    return observations


def _prob1e(bmdp, candidates, goal):
    """Beliefs that can reach ``goal`` almost surely within ``candidates``."""
    stay = set(candidates) | set(goal)
    while True:
        reach = set(goal)
        changed = True
        while changed:
            changed = False
            for belief in stay - reach:
                for action in bmdp.actions(belief):
                    successors = [succ for _, _, succ in bmdp.edges[belief, action]]
                    if all(succ in stay for succ in successors) and any(succ in reach for succ in successors):
                        reach.add(belief)
                        changed = True
                        break
        if reach == stay:
            return stay
        stay = reach


def _prob1a(bmdp, goal):
    """Beliefs from which every strategy reaches ``goal`` almost surely."""
    avoid = {belief for belief in range(len(bmdp)) if belief not in goal}
    changed = True
    while changed:
        changed = False
        for belief in list(avoid):
            actions = bmdp.actions(belief)
            if actions and not any(all(succ in avoid for _, _, succ in bmdp.edges[belief, action]) for action in actions):
                avoid.discard(belief)
                changed = True
    escape = set(avoid)
    changed = True
    while changed:
        changed = False
        for belief in range(len(bmdp)):
            if belief in escape or belief in goal:
                continue
            if any(succ in escape for action in bmdp.actions(belief) for _, _, succ in bmdp.edges[belief, action]):
                escape.add(belief)
                changed = True
    return {belief for belief in range(len(bmdp)) if belief not in escape}


def _attractor(bmdp, beliefs, allowed, goal):
    """An action per belief that moves one rank closer to ``goal`` with positive probability."""
    rank = dict.fromkeys(goal, 0)
    policy = {}
    pending = list(beliefs)
    level = 0
    while pending:
        level += 1
        assigned = {}
        for belief in pending:
            for action in allowed[belief]:
                if any(rank.get(succ, level) < level for _, _, succ in bmdp.edges[belief, action]):
                    assigned[belief] = action
                    break
        if not assigned:
            raise BeliefError('%d beliefs cannot reach the target almost surely' % len(pending))
        for belief, action in assigned.items():
            rank[belief] = level
            policy[belief] = action
        pending = [belief for belief in pending if belief not in assigned]
    return policy


def _policy_values(bmdp, beliefs, policy, values, immediate):
    """Expected total reward of ``policy`` on ``beliefs``; the other beliefs are worth ``values``."""
    if not beliefs:
        return np.zeros(0)
    position = {belief: offset for offset, belief in enumerate(beliefs)}
    rows, cols, data = [], [], []
    constant = np.zeros(len(beliefs))
    for offset, belief in enumerate(beliefs):
        action = policy[belief]
        constant[offset] = immediate(belief, action)
        for _, prob, succ in bmdp.edges[belief, action]:
            if succ in position:
                rows.append(offset)
                cols.append(position[succ])
                data.append(prob)
            else:
                constant[offset] += prob * values[succ]
    size = len(beliefs)
    matrix = sparse.csr_matrix((data, (rows, cols)), shape=(size, size))
    return np.atleast_1d(spsolve(sparse.identity(size, format='csc') - matrix.tocsc(), constant))


def solve(bmdp: BeliefMdp, pomdp: Pomdp, objective: Objective, cutoffs=None) -> BeliefStrategy:
    """Optimal memoryless strategy on the explored belief MDP.

    Target beliefs are absorbing, cut-off beliefs are worth their cut-off
    strategy's value, the rest is solved by Gauss-Seidel iteration. MinReward
    iterates downward from the value of a strategy that reaches the target
    almost surely.
    """
    if cutoffs is None:
        cutoffs = cutoff_strategies(pomdp)
    observations = target_observations(pomdp, objective)
    count = len(bmdp)
    targets = {belief for belief in range(count) if bmdp.beliefs[belief].observation in observations}
    cut = _cutoff_values(bmdp, objective, cutoffs)
    reward = not objective.is_probability

    values = [0.0] * count
    for belief, cutoff_value in cut.items():
        values[belief] = cutoff_value
    for belief in targets:
        values[belief] = 0.0 if reward else 1.0
    free = [belief for belief in range(count) if belief not in targets and belief not in cut]

    def immediate(belief, action):
        if not reward:
            return 0.0
        return math.fsum(prob * pomdp.reward(state, action) for state, prob in bmdp.beliefs[belief].distribution)

    allowed = {belief: list(bmdp.actions(belief)) for belief in free}
    if reward:
        goal = targets | {belief for belief, cutoff_value in cut.items() if not math.isinf(cutoff_value)}
        if objective.kind is ObjectiveKind.MIN_REWARD:
            finite = _prob1e(bmdp, free, goal)
            for belief in free:
                allowed[belief] = [
                    action for action in allowed[belief]
                    if all(succ in finite for _, _, succ in bmdp.edges[belief, action])
                ]
        else:
            finite = _prob1a(bmdp, goal)
        for belief in free:
            if belief not in finite:
                values[belief] = math.inf
        free = [belief for belief in free if belief in finite]
        if objective.kind is ObjectiveKind.MIN_REWARD:
            # start above the optimum: zero-reward cycles are fixed points from below
            proper = _attractor(bmdp, free, allowed, goal)
            for belief, upper in zip(free, _policy_values(bmdp, free, proper, values, immediate)):
                values[belief] = float(upper)

    pick = max if objective.maximizing else min

    def q_value(belief, action):
        return immediate(belief, action) + math.fsum(
            prob * values[succ] for _, prob, succ in bmdp.edges[belief, action])

    for sweep in range(fsc_settings.MAX_ITERATIONS):
        change = 0.0
        for belief in free:
            best = pick(q_value(belief, action) for action in allowed[belief])
            change = max(change, abs(best - values[belief]))
            values[belief] = best
        if change < fsc_settings.VALUE_TOLERANCE:
            logger.debug('belief value iteration converged after %d sweeps', sweep + 1)
            break
    else:
        raise BeliefError('value iteration did not converge in %d sweeps' % fsc_settings.MAX_ITERATIONS)

    choice = _extract_choice(bmdp, objective, values, targets, cut, allowed, q_value)
    strategy = BeliefStrategy(objective=objective, choice=choice, values=tuple(values), initial=bmdp.initial)
    logger.info('belief strategy for %s: value %s at the initial belief', objective, strategy.value)
    return strategy


def _extract_choice(bmdp, objective, values, targets, cut, allowed, q_value):
    tolerance = fsc_settings.CHOICE_TOLERANCE
    choice = {}
    optimal = {}
    for belief in range(len(bmdp)):
        if belief in cut:
            choice[belief] = DontKnow(bmdp.cutoffs[belief])
        elif belief in targets:
            choice[belief] = bmdp.actions(belief)[0]
        else:
            actions = allowed.get(belief) or list(bmdp.actions(belief))
            if math.isinf(values[belief]):
                optimal[belief] = actions
            else:
                optimal[belief] = [
                    action for action in actions
                    if abs(q_value(belief, action) - values[belief]) <= tolerance
                ] or actions

    reaching = objective.kind in (ObjectiveKind.MAX_PROB, ObjectiveKind.MIN_REWARD)
    rank = {belief: 0 for belief in list(targets) + list(cut)} if reaching else {}
    changed = reaching
    while changed:
        changed = False
        for belief, actions in optimal.items():
            best = min((rank[succ] + 1 for action in actions for _, _, succ in bmdp.edges[belief, action]
                        if succ in rank), default=None)
            if best is not None and best < rank.get(belief, math.inf):
                rank[belief] = best
                changed = True

    for belief, actions in optimal.items():
        selected = actions[0]
        if belief in rank:
            for action in actions:
                if any(rank.get(succ, math.inf) < rank[belief] for _, _, succ in bmdp.edges[belief, action]):
                    selected = action
                    break
        choice[belief] = selected
    return choice


def reachable_beliefs(bmdp: BeliefMdp, strategy: BeliefStrategy) -> List[int]:
    """Beliefs reachable from the initial one under ``strategy``, in BFS order."""
    order = [bmdp.initial]
    seen = {bmdp.initial}
    queue = deque(order)
    while queue:
        belief = queue.popleft()
        action = strategy.choice[belief]
        if isinstance(action, DontKnow):
            continue
        for _, _, successor in bmdp.edges[belief, action]:
            if successor not in seen:
                seen.add(successor)
                order.append(successor)
                queue.append(successor)
    return order


def _allowed_actions(bmdp, belief, strategy):
    if bmdp.is_cutoff(belief):
        return ()
    if strategy is None:
        return bmdp.actions(belief)
    action = strategy.choice[belief]
    return () if isinstance(action, DontKnow) else (action,)


def representative_sequence(bmdp: BeliefMdp, belief, strategy: Optional[BeliefStrategy] = None):
    """Shortest, then lexicographically least, observation sequence reaching ``belief``.

    Sequences compare by observation index. With a strategy only its choices
    are followed.
    """
    if not 0 <= belief < len(bmdp):
        raise UnreachableBeliefError('unknown belief %r' % belief)
    start = (bmdp.beliefs[bmdp.initial].observation,)
    best = {bmdp.initial: start}
    layer = {bmdp.initial: start}
    while belief not in best and layer:
        candidates = {}
        for current, sequence in layer.items():
            for action in _allowed_actions(bmdp, current, strategy):
                for observation, _, successor in bmdp.edges[current, action]:
                    if successor in best:
                        continue
                    extended = sequence + (observation,)
                    if successor not in candidates or extended < candidates[successor]:
                        candidates[successor] = extended
        best.update(candidates)
        layer = candidates
    if belief not in best:
        raise UnreachableBeliefError('belief %d is not reachable from the initial belief' % belief)
    return tuple(bmdp.pomdp.observations[observation] for observation in best[belief])
