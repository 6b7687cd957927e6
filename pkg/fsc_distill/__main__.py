"""Console entry point: ``fsc-distill run ...`` or ``python -m fsc_distill run ...``."""
import sys

import django
from django.conf import settings


def main(argv=None):
    from django.core.management import execute_from_command_line

    from .conf import logging_config

    if not settings.configured:
        settings.configure(
            INSTALLED_APPS=['fsc_distill'],
            LOGGING=logging_config(),
        )
    django.setup()
    argv = list(sys.argv if argv is None else argv)
    if len(argv) < 2:
        argv.append('help')
    execute_from_command_line(argv)


if __name__ == '__main__':
    main()
