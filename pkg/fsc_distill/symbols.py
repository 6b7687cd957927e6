"""
Output letters of strategy tables and controllers.

An output is either a ``Distribution`` over action names, a ``DontKnow``
symbol deferring to cut-off strategy ``i``, or ``DONT_CARE``.
"""
import re

from .exceptions import TableError
from .pomdp import Distribution

__all__ = ['DontKnow', 'DontCare', 'DONT_CARE', 'is_concrete', 'parse_output', 'format_output']


class DontKnow:
    __slots__ = ('index',)

    def __init__(self, index):
        self.index = int(index)

    def __eq__(self, other):
        return isinstance(other, DontKnow) and other.index == self.index

    def __hash__(self):
        return hash(('chi', self.index))

    def __repr__(self):
        return 'DontKnow(%d)' % self.index


class DontCare:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return 'DONT_CARE'


DONT_CARE = DontCare()

_CHI = re.compile(r'^chi[:_](\d+)$')


def is_concrete(output):
    return isinstance(output, Distribution)


def parse_output(text, actions=None):
    """Parse ``act``, ``chi:<i>``, ``-`` or ``a1:p1;a2:p2``.

    When ``actions`` is given, action names outside it raise ``TableError``.
    """
    text = text.strip()
    if text in ('-', '†'):
        return DONT_CARE
    match = _CHI.match(text)
    if match:
        return DontKnow(match.group(1))
    if not text:
        raise TableError('empty output')
    pairs = []
    for part in text.split(';'):
        name, sep, prob = part.partition(':')
        name = name.strip()
        try:
            pairs.append((name, float(prob) if sep else 1.0))
        except ValueError:
            raise TableError('malformed probability in output %r' % text)
    if actions is not None:
        for name, _ in pairs:
            if name not in actions:
                raise TableError('unknown action %r in output %r' % (name, text))
    try:
        return Distribution(pairs)
    except ValueError as exc:
        raise TableError('output %r: %s' % (text, exc))


def _format_prob(prob):
    return '%.12g' % prob


def format_output(output, chi_separator=':'):
    if output is DONT_CARE:
        return '-'
    if isinstance(output, DontKnow):
        return 'chi%s%d' % (chi_separator, output.index)
    if output.is_dirac:
        return output.support[0][0]
    return ';'.join('%s:%s' % (name, _format_prob(prob)) for name, prob in output)
