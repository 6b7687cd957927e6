"""
Learning finite-state controllers from a teacher with an L*-style table.

Rows and columns are observation sequences (tuples of observation names).
The table keeps its upper rows ``R`` and columns ``C`` in insertion order;
every entry is the teacher's output query on ``row + column``. Don't-care and
don't-know outputs are plain letters here; their wildcard reading is used by
``minimize`` only.
"""
import logging
from collections import namedtuple
from dataclasses import dataclass
from typing import List, Optional, Tuple

from .conf import fsc_settings
from .controller import Fsc
from .exceptions import LearningError
from .symbols import DONT_CARE

logger = logging.getLogger(__name__)

Sequence = Tuple[str, ...]

ConsistencyWitness = namedtuple('ConsistencyWitness', ['first', 'second', 'observation', 'column'])


class LearningTable:
    """Upper rows, columns and the entries filled in from output queries."""

    def __init__(self, alphabet):
        self.alphabet = tuple(alphabet)
        self.upper: List[Sequence] = [()]
        self.columns: List[Sequence] = [(observation,) for observation in self.alphabet]
        self.entries = {}
        self._upper_set = {()}
        self._column_set = set(self.columns)
        self._signatures = {}

    @property
    def lower(self) -> List[Sequence]:
        return [
            row + (observation,)
            for row in self.upper
            for observation in self.alphabet
            if row + (observation,) not in self._upper_set
        ]

    def rows(self):
        return self.upper + self.lower

    def fill(self, teacher):
        for row in self.rows():
            for column in self.columns:
                key = row + column
                if key not in self.entries:
                    self.entries[key] = teacher.output_query(key)

    def entry(self, row, column):
        try:
            return self.entries[tuple(row) + tuple(column)]
        except KeyError:
            raise LearningError('entry (%s, %s) has not been filled' % (' '.join(row), ' '.join(column)))

    def signature(self, row):
        cached = self._signatures.get(row, ())
        if len(cached) < len(self.columns):
            cached = cached + tuple(self.entry(row, column) for column in self.columns[len(cached):])
            self._signatures[row] = cached
        return cached

    def add_upper(self, row):
        """Add ``row`` and any missing prefix to R."""
        for length in range(1, len(row) + 1):
            prefix = tuple(row[:length])
            if prefix not in self._upper_set:
                self._upper_set.add(prefix)
                self.upper.append(prefix)

    def add_column(self, column):
        """Add ``column`` and any missing non-empty suffix to C, shortest first."""
        for start in range(len(column) - 1, -1, -1):
            suffix = tuple(column[start:])
            if suffix not in self._column_set:
                self._column_set.add(suffix)
                self.columns.append(suffix)

    def classes(self):
        """Row classes of R as ``{signature: node}``, numbered by first appearance."""
        nodes = {}
        for row in self.upper:
            nodes.setdefault(self.signature(row), len(nodes))
        return nodes

    def __repr__(self):
        return '<LearningTable R=%d C=%d>' % (len(self.upper), len(self.columns))


def init_table(teacher) -> LearningTable:
    table = LearningTable(teacher.alphabet)
    table.fill(teacher)
    return table


def is_closed(table: LearningTable):
    """``(closed, witnesses)``; one witness lower row per missing row class."""
    known = {table.signature(row) for row in table.upper}
    witnesses = []
    for row in table.lower:
        signature = table.signature(row)
        if signature not in known:
            known.add(signature)
            witnesses.append(row)
    return not witnesses, witnesses


def is_consistent(table: LearningTable):
    """``(consistent, witness)`` where the witness names two equivalent rows,
    the observation after which they split and the first column showing it."""
    groups = {}
    for row in table.upper:
        groups.setdefault(table.signature(row), []).append(row)
    for rows in groups.values():
        first = rows[0]
        for second in rows[1:]:
            for observation in table.alphabet:
                for column in table.columns:
                    if table.entry(first + (observation,), column) != table.entry(second + (observation,), column):
                        return False, ConsistencyWitness(first, second, observation, column)
    return True, None


def make_closed_and_consistent(table: LearningTable, teacher) -> LearningTable:
    while True:
        closed, witnesses = is_closed(table)
        if not closed:
            for row in witnesses:
                table.add_upper(row)
            table.fill(teacher)
            continue
        consistent, witness = is_consistent(table)
        if not consistent:
            logger.debug('rows %r and %r split after %r on column %r', *witness)
            table.add_column((witness.observation,) + witness.column)
            table.fill(teacher)
            continue
        return table


def extract_fsc(table: LearningTable) -> Fsc:
    if not is_closed(table)[0]:
        raise LearningError('cannot extract a controller from a table that is not closed')
    if not is_consistent(table)[0]:
        raise LearningError('cannot extract a controller from a table that is not consistent')
    classes = table.classes()
    gamma, delta = {}, {}
    for row in table.upper:
        node = classes[table.signature(row)]
        for observation in table.alphabet:
            gamma[node, observation] = table.entry(row, (observation,))
            delta[node, observation] = classes[table.signature(row + (observation,))]
    return Fsc(size=len(classes), alphabet=table.alphabet, gamma=gamma, delta=delta, initial=classes[table.signature(())])


def process_counterexample(table: LearningTable, counterexample, teacher) -> LearningTable:
    if not counterexample:
        raise LearningError('a counterexample must be a non-empty observation sequence')
    table.add_column(tuple(counterexample))
    table.fill(teacher)
    return table


@dataclass
class LearningResult:
    fsc: Fsc
    table: LearningTable
    rounds: int
    counterexamples: List[Sequence]


def run_learning(teacher, max_rounds: Optional[int] = None) -> LearningResult:
    """The full learning loop, keeping the final table and round count."""
    if max_rounds is None:
        max_rounds = fsc_settings.MAX_LEARNING_ROUNDS
    table = init_table(teacher)
    counterexamples = []
    rounds = 0
    while True:
        rounds += 1
        make_closed_and_consistent(table, teacher)
        hypothesis = extract_fsc(table)
        counterexample = teacher.equivalence_query(hypothesis)
        logger.debug('round %d: %d nodes, R=%d, C=%d, counterexample %r',
                     rounds, hypothesis.size, len(table.upper), len(table.columns), counterexample)
        if counterexample is None:
            logger.info('learned %d nodes in %d rounds (R=%d, C=%d)',
                        hypothesis.size, rounds, len(table.upper), len(table.columns))
            return LearningResult(hypothesis, table, rounds, counterexamples)
        if rounds >= max_rounds:
            raise LearningError('no equivalent hypothesis after %d rounds' % rounds)
        counterexamples.append(tuple(counterexample))
        process_counterexample(table, counterexample, teacher)


def learn(teacher, max_rounds=None) -> Fsc:
    return run_learning(teacher, max_rounds).fsc


def _prune(fsc: Fsc) -> Fsc:
    """Drop unreachable nodes and renumber the rest in BFS order."""
    order = fsc.reachable()
    number = {node: index for index, node in enumerate(order)}
    gamma, delta = {}, {}
    for node in order:
        for observation in fsc.alphabet:
            gamma[number[node], observation] = fsc.gamma[node, observation]
            delta[number[node], observation] = number[fsc.delta[node, observation]]
    return Fsc(size=len(order), alphabet=fsc.alphabet, gamma=gamma, delta=delta, initial=0)


def _quotient(fsc: Fsc, block_of):
    """The controller on the blocks of ``block_of``, or None on an output conflict.

    ``block_of`` must be closed under delta.
    """
    gamma, delta = {}, {}
    for node in fsc.nodes:
        block = block_of[node]
        for observation in fsc.alphabet:
            output = fsc.gamma[node, observation]
            current = gamma.get((block, observation), DONT_CARE)
            if output is not DONT_CARE:
                if current is not DONT_CARE and current != output:
                    return None
                current = output
            gamma[block, observation] = current
            delta[block, observation] = block_of[fsc.delta[node, observation]]
    size = max(block_of) + 1
    return _prune(Fsc(size=size, alphabet=fsc.alphabet, gamma=gamma, delta=delta, initial=block_of[fsc.initial]))


def _merge_closure(fsc: Fsc, first, second):
    """Smallest delta-closed partition joining ``first`` and ``second``."""
    parent = list(fsc.nodes)

    def find(node):
        while parent[node] != node:
            parent[node] = parent[parent[node]]
            node = parent[node]
        return node

    pending = [(first, second)]
    while pending:
        left, right = pending.pop()
        root_left, root_right = find(left), find(right)
        if root_left == root_right:
            continue
        parent[max(root_left, root_right)] = min(root_left, root_right)
        for observation in fsc.alphabet:
            pending.append((fsc.delta[left, observation], fsc.delta[right, observation]))
    roots = sorted({find(node) for node in fsc.nodes})
    number = {root: index for index, root in enumerate(roots)}
    return [number[find(node)] for node in fsc.nodes]


def _minimize_greedy(fsc: Fsc) -> Fsc:
    fsc = _prune(fsc)
    merged = True
    while merged:
        merged = False
        for first in fsc.nodes:
            for second in range(first + 1, fsc.size):
                candidate = _quotient(fsc, _merge_closure(fsc, first, second))
                if candidate is not None:
                    logger.debug('merged nodes %d and %d: %d -> %d nodes', first, second, fsc.size, candidate.size)
                    fsc = candidate
                    merged = True
                    break
            if merged:
                break
    return fsc


def _partitions(size, blocks):
    """Restricted growth strings of ``size`` elements using exactly ``blocks`` blocks."""
    assignment = [0] * size

    def extend(position, used):
        if size - position < blocks - used:
            return
        if position == size:
            if used == blocks:
                yield list(assignment)
            return
        for block in range(min(used + 1, blocks)):
            assignment[position] = block
            yield from extend(position + 1, max(used, block + 1))

    if size:
        yield from extend(1, 1)


def _delta_closed(fsc: Fsc, block_of):
    for observation in fsc.alphabet:
        target = {}
        for node in fsc.nodes:
            successor = block_of[fsc.delta[node, observation]]
            if target.setdefault(block_of[node], successor) != successor:
                return False
    return True


def _minimize_exact(fsc: Fsc) -> Fsc:
    fsc = _prune(fsc)
    for blocks in range(1, fsc.size + 1):
        for block_of in _partitions(fsc.size, blocks):
            if _delta_closed(fsc, block_of):
                candidate = _quotient(fsc, block_of)
                if candidate is not None:
                    return candidate
    return fsc


def minimize(fsc: Fsc, exact=False) -> Fsc:
    """Merge nodes whose concrete outputs never disagree, treating † as a wildcard.

    The greedy pass tries node pairs in BFS order and merges the first pair
    whose delta-closure is conflict free, until no pair merges. ``exact``
    searches all partitions for a smallest one instead.
    """
    if exact:
        limit = fsc_settings.EXACT_MINIMIZE_MAX_NODES
        if len(fsc.reachable()) <= limit:
            return _minimize_exact(fsc)
        logger.warning('exact minimisation is limited to %d nodes, using the greedy merge', limit)
    return _minimize_greedy(fsc)
