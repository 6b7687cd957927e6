"""Learning small finite-state controllers for POMDP strategies."""

__version__ = '0.1'
