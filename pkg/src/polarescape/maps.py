"""The two BEC polarization maps and their compositions.

Bit convention (fixed everywhere in the package, sub-channel indexing
included)::

    bit 1  ->  T1(x) = x**2        (the "plus" / better channel)
    bit 0  ->  T0(x) = 2x - x**2   (the "minus" / worse channel)

A word ``(b_1, ..., b_n)`` acts as ``T_{b_n} o ... o T_{b_1}``: ``b_1`` is
applied first.

Internally every value is carried together with its complement ``1 - x``.
Both maps have closed forms for the complement (``1 - x**2 = c(1 + x)`` and
``1 - (2x - x**2) = c**2``), so values near 1 keep full relative precision,
and the representation is exactly symmetric under ``x <-> 1 - x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import BudgetExceeded, DomainError

BranchWord = tuple[int, ...]

#: dedup tolerance for forward/backward sets, in units in the last place
DEDUP_ULPS = 4
#: default cap on the number of values a forward/backward set may hold
SET_BUDGET = 2**21


@dataclass(frozen=True)
class TargetInterval:
    """Closed escape window ``[a, b]`` with ``0 < a <= b < 1``."""

    a: float
    b: float

    def __post_init__(self):
        if not (0.0 < self.a <= self.b < 1.0):
            raise DomainError(f"need 0 < a <= b < 1, got [{self.a}, {self.b}]")

    @property
    def consistent(self) -> bool:
        """The ``a <= b**2`` condition under which the escape rate is window independent."""
        return self.a <= self.b * self.b

    @property
    def symmetric(self) -> bool:
        return self.a == 1.0 - self.b

    def contains(self, x):
        return (x >= self.a) & (x <= self.b)

    def as_dict(self):
        return {"a": self.a, "b": self.b}


CANONICAL = TargetInterval(0.25, 0.75)


@dataclass
class SetSample:
    """Sorted, deduplicated forward or backward set of a point."""

    origin: float
    depth: int
    direction: str
    values: list[float] = field(default_factory=list)


def _check_bit(bit):
    if bit not in (0, 1):
        raise DomainError(f"branch bit must be 0 or 1, got {bit!r}")


def _check_unit(x, name="x"):
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"{name} must lie in [0, 1], got {x}")


# -- pair kernels (work on floats and numpy arrays alike) -------------------


def forward_pair(bit, x, c):
    """One forward step on the pair ``(x, 1 - x)``."""
    if bit:
        nx, nc = x * x, c * (1.0 + x)
    else:
        nx, nc = x * (1.0 + c), c * c
    # only the smaller component is accurate; rebuilding the larger from it
    # stops its absolute error doubling each step and keeps both in [0, 1]
    small = nx <= nc
    return np.where(small, nx, 1.0 - nc), np.where(small, 1.0 - nx, nc)


def inverse_pair(bit, y, c):
    """One inverse step on the pair ``(y, 1 - y)``."""
    if bit:
        s = np.sqrt(y)
        return s, c / (1.0 + s)
    s = np.sqrt(c)
    return y / (1.0 + s), s


# -- single maps -------------------------------------------------------------


def t_apply(bit: int, x: float) -> float:
    """Apply ``T1`` (bit 1) or ``T0`` (bit 0) to ``x``."""
    _check_bit(bit)
    _check_unit(x)
    return float(forward_pair(bit, x, 1.0 - x)[0])


def t_inverse(bit: int, y: float) -> float:
    """Inverse of :func:`t_apply`: ``sqrt(y)`` or ``1 - sqrt(1 - y)``.

    The second form is evaluated as ``y / (1 + sqrt(1 - y))`` so small
    arguments do not cancel.
    """
    _check_bit(bit)
    _check_unit(y, "y")
    return float(inverse_pair(bit, y, 1.0 - y)[0])


def t_inverse_derivative(bit: int, y: float) -> float:
    """Derivative of the inverse map at ``y``.

    Raises :class:`DomainError` at the endpoint where it diverges
    (``y = 0`` for bit 1, ``y = 1`` for bit 0).
    """
    _check_bit(bit)
    _check_unit(y, "y")
    d = y if bit else 1.0 - y
    if d <= 0.0:
        raise DomainError(f"inverse derivative of T{bit} diverges at y={y}")
    return 0.5 / math.sqrt(d)


# -- words ---------------------------------------------------------------------


def as_word(bits: Iterable[int]) -> BranchWord:
    word = tuple(int(b) for b in bits)
    for b in word:
        _check_bit(b)
    return word


def word_from_index(index: int, n: int) -> BranchWord:
    """Word of sub-channel ``index``: bit ``b_1`` is the most significant."""
    if not 0 <= index < 2**n:
        raise DomainError(f"index {index} out of range for n={n}")
    return tuple((index >> (n - 1 - j)) & 1 for j in range(n))


def index_from_word(word: Sequence[int]) -> int:
    i = 0
    for b in word:
        i = (i << 1) | int(b)
    return i


def apply_word_pair(word: Sequence[int], z: float, cz: float | None = None):
    x, c = z, (1.0 - z if cz is None else cz)
    for b in word:
        x, c = forward_pair(b, x, c)
    return x, c


def apply_word(word: Sequence[int], z: float) -> float:
    """``phi_w(z)``: apply ``b_1`` first and ``b_n`` last."""
    _check_unit(z, "z")
    return float(apply_word_pair(as_word(word), z)[0])


def apply_inverse_word_pair(word: Sequence[int], y: float, cy: float | None = None):
    x, c = y, (1.0 - y if cy is None else cy)
    for b in reversed(word):
        x, c = inverse_pair(b, x, c)
    return float(x), float(c)


def apply_inverse_word(word: Sequence[int], y: float) -> float:
    """``phi_w^{-1}(y) = T_{b_1}^{-1} o ... o T_{b_n}^{-1}(y)``."""
    _check_unit(y, "y")
    return apply_inverse_word_pair(as_word(word), y)[0]


def reach_bounds(x: float, m: int) -> tuple[float, float]:
    """Smallest and largest values reachable from ``x`` in ``m`` steps.

    By monotonicity the extremes are the all-ones and all-zeros words:
    ``(x**(2**m), 1 - (1 - x)**(2**m))``.
    """
    _check_unit(x)
    if m < 0:
        raise DomainError("m must be >= 0")
    if m == 0:
        return x, x
    e = 2.0**m
    low = x**e
    high = 1.0 - (1.0 - x) ** e if x >= 0.5 else -math.expm1(e * math.log1p(-x))
    return low, high


# -- forward / backward sets ---------------------------------------------------


def _dedup_sorted(values: np.ndarray, ulps: int = DEDUP_ULPS) -> np.ndarray:
    if values.size == 0:
        return values
    keep = [values[0]]
    for v in values[1:]:
        last = keep[-1]
        if v - last > ulps * np.spacing(last):
            keep.append(v)
    return np.asarray(keep)


def _set_levels(z, n, step, budget):
    if n < 0:
        raise DomainError("depth must be >= 0")
    if 2 ** (n + 1) - 1 > budget:
        raise BudgetExceeded("set enumeration", 2 ** (n + 1) - 1, budget)
    x = np.array([z], dtype=float)
    c = np.array([1.0 - z], dtype=float)
    out = [x]
    for _ in range(n):
        x0, c0 = step(0, x, c)
        x1, c1 = step(1, x, c)
        x, c = np.concatenate([x0, x1]), np.concatenate([c0, c1])
        out.append(x)
    return np.sort(np.concatenate(out))


def forward_set(z: float, n: int, budget: int = SET_BUDGET) -> SetSample:
    """All values ``phi_w(z)`` over words of length ``<= n``."""
    _check_unit(z, "z")
    vals = _dedup_sorted(_set_levels(z, n, forward_pair, budget))
    return SetSample(z, n, "forward", vals.tolist())


def backward_set(z: float, n: int, budget: int = SET_BUDGET) -> SetSample:
    """All values ``phi_w^{-1}(z)`` over words of length ``<= n``."""
    _check_unit(z, "z")
    vals = _dedup_sorted(_set_levels(z, n, inverse_pair, budget))
    return SetSample(z, n, "backward", vals.tolist())
