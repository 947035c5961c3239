"""Escape rate of the BEC channel-polarization process.

The process ``Z_{n+1} = Z_n**2`` or ``2 Z_n - Z_n**2`` (fair coin) polarizes
to ``{0, 1}``; the mass still inside a window ``[a, b]`` after ``n`` steps
decays like ``2**(rate * n)``. Modules:

``maps``
    the two maps, branch words, forward and backward reachable sets
``exact``
    exact enumeration of ``P(Z_n in [a, b])``, preimage cells, ``a_n``/``b_n``
``stochastic``
    Monte Carlo, threshold points, reverse chain, Lyapunov average
``zeta``
    supermartingale bound and its minimization
``design``
    sub-channel tables and information-set selection
``cli``
    the ``polarescape`` command
"""

__version__ = "0.1.0"

from .errors import BudgetExceeded, DomainError, NumericalError, PolarEscapeError, SplitNotContiguous, TooFewPoints
from .maps import CANONICAL, TargetInterval, apply_inverse_word, apply_word, t_apply, t_inverse

__all__ = [
    "BudgetExceeded",
    "CANONICAL",
    "DomainError",
    "NumericalError",
    "PolarEscapeError",
    "SplitNotContiguous",
    "TargetInterval",
    "TooFewPoints",
    "apply_inverse_word",
    "apply_word",
    "t_apply",
    "t_inverse",
]
