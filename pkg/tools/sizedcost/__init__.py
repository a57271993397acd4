"""
sizedcost - sized-types resource analysis for small logic programs

Infers lower and upper bounds on output sizes, number of solutions and
user-defined resources, and checks them against a concrete interpreter.
"""

__version__ = "0.3.0"


class SizedCostError(Exception):
    """Base class for every error raised by the analyzer"""
    pass
