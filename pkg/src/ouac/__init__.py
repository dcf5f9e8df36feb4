"""Absolute continuity of Levy-driven Ornstein-Uhlenbeck endpoints via exhaustion.

Exact rational linear algebra decides the structural questions; simulation
and diagnostics cross-check the verdicts.
"""

__version__ = "0.1.0"
