"""Strategy tables and the teachers answering output and equivalence queries."""
import abc
import csv
import io
import itertools
import logging
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Dict, Optional, Tuple

from .belief import BeliefMdp, BeliefStrategy, reachable_beliefs, representative_sequence
from .exceptions import ModelIOError, TableError
from .pomdp import Pomdp, realizable
from .symbols import DONT_CARE, DontKnow, format_output, parse_output

logger = logging.getLogger(__name__)

CHI_MODES = ('strict', 'skip')

ObservationSequence = Tuple[str, ...]


@dataclass(frozen=True)
class StrategyTable:
    """Rows of observation sequences with their outputs, at most one output per sequence."""
    rows: Tuple[Tuple[ObservationSequence, object], ...] = ()

    @classmethod
    def from_rows(cls, rows):
        seen = {}
        unique = []
        for sequence, output in rows:
            sequence = tuple(sequence)
            if not sequence:
                raise TableError('a strategy table row needs a non-empty sequence')
            if output is DONT_CARE:
                raise TableError('row %r: the don\'t-care symbol is not a table output' % ' '.join(sequence))
            if sequence in seen:
                if seen[sequence] != output:
                    raise TableError('inconsistent rows for %r: %s and %s' % (
                        ' '.join(sequence), format_output(seen[sequence]), format_output(output)))
                continue
            seen[sequence] = output
            unique.append((sequence, output))
        return cls(tuple(unique))

    @cached_property
    def lookup(self) -> Dict[ObservationSequence, object]:
        return dict(self.rows)

    @cached_property
    def prefixes(self):
        return {sequence[:length] for sequence, _ in self.rows for length in range(len(sequence) + 1)}

    def __len__(self):
        return len(self.rows)


def table_output_query(table: StrategyTable, sequence):
    return table.lookup.get(tuple(sequence), DONT_CARE)


def _order_key(pomdp: Pomdp, sequence):
    return len(sequence), pomdp.sequence_indices(sequence)


def table_equivalence_query(pomdp: Pomdp, table: StrategyTable, fsc, chi_mode='strict') -> Optional[ObservationSequence]:
    """Shortest, then least, realizable row on which ``fsc`` disagrees; None if there is none.

    With ``chi_mode='skip'`` rows whose output is χ are not checked.
    """
    if chi_mode not in CHI_MODES:
        raise TableError('unknown chi mode %r' % chi_mode)
    for sequence, output in _checked_rows(pomdp, table, chi_mode):
        if fsc.run(sequence) != output:
            return sequence
    return None


@lru_cache(maxsize=64)
def _checked_rows(pomdp, table, chi_mode):
    rows = [
        (sequence, output) for sequence, output in table.rows
        if realizable(pomdp, sequence) and not (chi_mode == 'skip' and isinstance(output, DontKnow))
    ]
    return tuple(sorted(rows, key=lambda row: _order_key(pomdp, row[0])))


class Teacher(abc.ABC):
    """Answers output queries and equivalence queries over ``alphabet``."""
    alphabet: Tuple[str, ...]

    @abc.abstractmethod
    def output_query(self, sequence):
        pass

    @abc.abstractmethod
    def equivalence_query(self, fsc) -> Optional[ObservationSequence]:
        pass

    def extendable(self, sequence):
        """Whether some extension of ``sequence`` may have a non-† output."""
        return True


class TableTeacher(Teacher):

    def __init__(self, pomdp: Pomdp, table: StrategyTable, chi_mode='strict'):
        self.pomdp = pomdp
        self.table = table
        self.chi_mode = chi_mode
        self.alphabet = pomdp.observations

    def output_query(self, sequence):
        return table_output_query(self.table, sequence)

    def equivalence_query(self, fsc):
        return table_equivalence_query(self.pomdp, self.table, fsc, self.chi_mode)

    def extendable(self, sequence):
        return tuple(sequence) in self.table.prefixes


class BeliefTeacher(Teacher):
    """Teacher backed by a solved belief MDP.

    Output queries follow the strategy from the initial belief along the
    observed symbols. Equivalence queries check every representative sequence
    and then walk belief and controller together for the shortest mismatch.
    """

    def __init__(self, pomdp: Pomdp, bmdp: BeliefMdp, strategy: BeliefStrategy):
        self.pomdp = pomdp
        self.bmdp = bmdp
        self.strategy = strategy
        self.alphabet = pomdp.observations
        self._beliefs = {}

    def belief_of(self, sequence):
        """The belief reached by ``sequence`` under the strategy, or None."""
        sequence = tuple(sequence)
        if sequence in self._beliefs:
            return self._beliefs[sequence]
        belief = None
        if len(sequence) == 1:
            if sequence[0] == self.bmdp.observation_name(self.bmdp.initial):
                belief = self.bmdp.initial
        elif len(sequence) > 1:
            previous = self.belief_of(sequence[:-1])
            if previous is not None:
                action = self.strategy.choice[previous]
                if not isinstance(action, DontKnow):
                    observation = self.pomdp.observation_index.get(sequence[-1])
                    for label, _, successor in self.bmdp.edges[previous, action]:
                        if label == observation:
                            belief = successor
                            break
        self._beliefs[sequence] = belief
        return belief

    def output_query(self, sequence):
        belief = self.belief_of(sequence)
        if belief is None:
            return DONT_CARE
        return self.strategy.output(self.pomdp, belief)

    def extendable(self, sequence):
        if not sequence:
            return True
        belief = self.belief_of(sequence)
        return belief is not None and not self.bmdp.is_cutoff(belief)

    @cached_property
    def representatives(self):
        """Representative sequence of each belief reachable under the strategy, by belief index."""
        reachable = sorted(reachable_beliefs(self.bmdp, self.strategy))
        return [(belief, representative_sequence(self.bmdp, belief, self.strategy)) for belief in reachable]

    def equivalence_query(self, fsc):
        for _, sequence in self.representatives:
            if fsc.run(sequence) != self.output_query(sequence):
                return sequence
        return self._product_counterexample(fsc)

    def _product_counterexample(self, fsc):
        bmdp = self.bmdp
        start = (bmdp.beliefs[bmdp.initial].observation,)
        layer = {(bmdp.initial, fsc.initial): start}
        seen = set(layer)
        while layer:
            mismatches = []
            following = {}
            for (belief, node), sequence in layer.items():
                observation = bmdp.observation_name(belief)
                if fsc.gamma[node, observation] != self.strategy.output(self.pomdp, belief):
                    mismatches.append(sequence)
                    continue
                action = self.strategy.choice[belief]
                if isinstance(action, DontKnow):
                    continue
                successor_node = fsc.delta[node, observation]
                for label, _, successor in bmdp.edges[belief, action]:
                    pair = (successor, successor_node)
                    extended = sequence + (label,)
                    if pair in seen and pair not in following:
                        continue
                    if pair not in following or extended < following[pair]:
                        following[pair] = extended
            if mismatches:
                return tuple(self.pomdp.observations[symbol] for symbol in min(mismatches))
            seen.update(following)
            layer = following
        return None


def belief_teacher(pomdp: Pomdp, bmdp: BeliefMdp, strategy: BeliefStrategy) -> BeliefTeacher:
    return BeliefTeacher(pomdp, bmdp, strategy)


def parse_strategy_table(text, pomdp: Optional[Pomdp] = None) -> StrategyTable:
    """Read the CSV format with ``sequence`` and ``output`` columns."""
    reader = csv.DictReader(io.StringIO(text))
    if not reader.fieldnames or not {'sequence', 'output'} <= {name.strip() for name in reader.fieldnames}:
        raise TableError('a strategy table needs the columns "sequence" and "output"')
    actions = set(pomdp.actions) if pomdp is not None else None
    rows = []
    for line, record in enumerate(reader, start=2):
        record = {(key or '').strip(): value for key, value in record.items()}
        sequence = tuple((record.get('sequence') or '').split())
        if pomdp is not None:
            unknown = [symbol for symbol in sequence if symbol not in pomdp.observation_index]
            if unknown:
                raise TableError('line %d: unknown observation %r' % (line, unknown[0]))
        try:
            output = parse_output(record.get('output') or '', actions)
        except TableError as exc:
            raise TableError('line %d: %s' % (line, exc))
        rows.append((sequence, output))
    return StrategyTable.from_rows(rows)


def load_strategy_table(path, pomdp: Optional[Pomdp] = None) -> StrategyTable:
    try:
        with open(path, encoding='utf-8', newline='') as handle:
            text = handle.read()
    except OSError as exc:
        raise ModelIOError('cannot read strategy table %s: %s' % (path, exc.strerror or exc))
    table = parse_strategy_table(text, pomdp)
    logger.info('loaded strategy table %s with %d rows', path, len(table))
    return table


def write_strategy_table(table: StrategyTable) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(['sequence', 'output'])
    for sequence, output in table.rows:
        writer.writerow([' '.join(sequence), format_output(output)])
    return buffer.getvalue()


def materialize_table(teacher: Teacher, depth) -> StrategyTable:
    """Every sequence of length at most ``depth`` with a non-† output, shortest first."""
    rows = []
    frontier = [()]
    for _ in range(depth):
        extended = []
        for sequence, observation in itertools.product(frontier, teacher.alphabet):
            candidate = sequence + (observation,)
            output = teacher.output_query(candidate)
            if output is not DONT_CARE:
                rows.append((candidate, output))
            if teacher.extendable(candidate):
                extended.append(candidate)
        frontier = extended
    return StrategyTable.from_rows(rows)
