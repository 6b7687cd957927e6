"""Exception hierarchy shared by every fsc_distill module."""


class FscDistillError(Exception):
    """Root of all errors raised by fsc_distill.

    ``kind`` is the machine-readable label reported by the ``run`` command,
    ``exit_code`` the process status it exits with.
    """
    kind = 'error'
    exit_code = 1

    def as_dict(self):
        return {'error': self.kind, 'message': str(self)}


class ConfigError(FscDistillError):
    kind = 'config'
    exit_code = 2


class ModelIOError(FscDistillError):
    kind = 'io'
    exit_code = 2


class ModelParseError(FscDistillError):
    kind = 'parse'
    exit_code = 3


class ModelValidationError(FscDistillError, ValueError):
    kind = 'validation'
    exit_code = 3


class InvalidPathError(FscDistillError):
    kind = 'path'
    exit_code = 3


class TableError(FscDistillError):
    kind = 'table'
    exit_code = 3


class BeliefError(FscDistillError):
    kind = 'belief'
    exit_code = 4


class DisabledActionError(BeliefError):
    pass


class UnreachableBeliefError(BeliefError):
    pass


class LearningError(FscDistillError):
    kind = 'learning'
    exit_code = 5


class ControllerError(FscDistillError):
    kind = 'controller'
    exit_code = 6


class MissingCutoffError(ControllerError):
    pass


class InapplicableControllerError(ControllerError):

    def __init__(self, node, observation, reason):
        self.node = node
        self.observation = observation
        super().__init__('node %s on observation %r: %s' % (node, observation, reason))


class EvaluationError(FscDistillError):
    kind = 'evaluation'
    exit_code = 7
