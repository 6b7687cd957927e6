"""
Django settings for the fsc_distill test suite.
"""

import os
from django.core.management.utils import get_random_secret_key

BASE_DIR = os.path.dirname(
    os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

SECRET_KEY = get_random_secret_key()

DEBUG = True

ALLOWED_HOSTS = []

INSTALLED_APPS = [
    'fsc_distill',
    'tests.testapp',
]

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': ':memory:',
    }
}

USE_TZ = True

FSC_DISTILL = {
    'MAX_BELIEFS': 500,
}

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'handlers': {
        'null': {'class': 'logging.NullHandler'},
    },
    'loggers': {
        'fsc_distill': {
            'handlers': ['null'],
            'level': os.environ.get('FSC_DISTILL_LOG', 'WARNING').upper(),
            'propagate': False,
        },
    },
}
