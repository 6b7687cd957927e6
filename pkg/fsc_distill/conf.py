"""
Settings for fsc_distill, overridable through a ``FSC_DISTILL`` dict in the
Django settings module::

    FSC_DISTILL = {
        'MAX_BELIEFS': 1000,
        'VALUE_TOLERANCE': 1e-10,
    }

Outside a configured Django project the defaults below apply.
"""
import os
from contextlib import contextmanager

from django.conf import settings

LOG_ENV_VAR = 'FSC_DISTILL_LOG'

DEFAULTS = {
    'TOLERANCE': 1e-9,
    'VALUE_TOLERANCE': 1e-8,
    'CHOICE_TOLERANCE': 1e-6,
    'MAX_ITERATIONS': 10 ** 6,
    'LINEAR_SOLVER_MAX_STATES': 2000,
    'MAX_BELIEFS': 500,
    'MAX_DEPTH': None,
    'CUTOFF_STRATEGY': 0,
    'MAX_LEARNING_ROUNDS': 10 ** 5,
    'DONT_CARE_POLICY': 'first',
    'EXACT_MINIMIZE_MAX_NODES': 10,
}


class FscSettings:
    """Lazy attribute access to the merged defaults and user settings."""

    def __init__(self, defaults):
        self.defaults = defaults
        self.overrides = {}

    @property
    def user_settings(self):
        if not settings.configured:
            return {}
        return getattr(settings, 'FSC_DISTILL', {})

    def __getattr__(self, name):
        if name not in self.defaults:
            raise AttributeError('Invalid fsc_distill setting: %r' % name)
        if name in self.overrides:
            return self.overrides[name]
        return self.user_settings.get(name, self.defaults[name])

    @contextmanager
    def override(self, **values):
        """Temporarily replace settings, e.g. for one pipeline run."""
        unknown = set(values) - set(self.defaults)
        if unknown:
            raise AttributeError('Invalid fsc_distill setting: %s' % ', '.join(sorted(unknown)))
        previous = dict(self.overrides)
        self.overrides.update(values)
        try:
            yield self
        finally:
            self.overrides = previous


fsc_settings = FscSettings(DEFAULTS)


def logging_config(level=None):
    """The ``LOGGING`` dict-config used by the console entry point."""
    if level is None:
        level = os.environ.get(LOG_ENV_VAR, 'WARNING')
    return {
        'version': 1,
        'disable_existing_loggers': False,
        'formatters': {
            'plain': {'format': '%(asctime)s %(levelname)s %(name)s %(message)s'},
        },
        'handlers': {
            'stderr': {
                'class': 'logging.StreamHandler',
                'formatter': 'plain',
                'stream': 'ext://sys.stderr',
            },
        },
        'loggers': {
            'fsc_distill': {
                'handlers': ['stderr'],
                'level': level.upper(),
                'propagate': False,
            },
        },
    }
