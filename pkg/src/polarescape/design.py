"""Polar-code construction on the binary erasure channel.

On the BEC with erasure probability ``z`` the Bhattacharyya parameter of
sub-channel ``i`` of ``2**n`` is ``apply_word(word_from_index(i, n), z)``;
index bit ``b_1`` (applied first) is the most significant bit and ``0`` is
the minus (degrading) branch.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceeded, DomainError
from .maps import CANONICAL, TargetInterval, forward_pair

TABLE_CAP = 24
#: depth at which the table is cut into independently expanded blocks
_BLOCK_DEPTH = 4


@dataclass
class SubchannelTable:
    n: int
    z: float
    values: np.ndarray

    def __len__(self):
        return self.values.size

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "bhattacharyya"])
        for i, v in enumerate(self.values.tolist()):
            w.writerow([i, repr(v)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, z: float) -> "SubchannelTable":
        rows = list(csv.reader(io.StringIO(text)))
        body = [r for r in rows[1:] if r and not r[0].startswith("#")]
        values = np.array([float(r[1]) for r in body])
        n = int(round(math.log2(values.size)))
        if 2**n != values.size:
            raise DomainError("table length is not a power of two")
        return cls(n, z, values)


def _expand(x, c, levels):
    for _ in range(levels):
        x0, c0 = forward_pair(0, x, c)
        x1, c1 = forward_pair(1, x, c)
        x = np.empty(2 * x.size)
        c = np.empty_like(x)
        x[0::2], x[1::2] = x0, x1
        c[0::2], c[1::2] = c0, c1
    return x, c


def enumerate_subchannels(z: float, n: int, cap: int = TABLE_CAP, threads: int = 1) -> SubchannelTable:
    """All ``2**n`` Bhattacharyya parameters at design erasure probability ``z``."""
    if not 0.0 <= z <= 1.0:
        raise DomainError(f"z must lie in [0, 1], got {z}")
    if n < 0:
        raise DomainError("n must be >= 0")
    if n > cap:
        raise BudgetExceeded("sub-channel table", 2**n, 2**cap)
    head = min(n, _BLOCK_DEPTH)
    x, c = _expand(np.array([z], dtype=float), np.array([1.0 - z]), head)
    rest = n - head
    if rest == 0:
        return SubchannelTable(n, z, x)

    def block(i):
        return _expand(x[i : i + 1], c[i : i + 1], rest)[0]

    idx = range(x.size)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(block, idx))
    else:
        parts = [block(i) for i in idx]
    return SubchannelTable(n, z, np.concatenate(parts))


def unpolarized_fraction(table: SubchannelTable, target: TargetInterval = CANONICAL) -> float:
    """Share of sub-channels whose parameter lies in ``[a, b]``."""
    hits = np.count_nonzero((table.values >= target.a) & (table.values <= target.b))
    return math.ldexp(int(hits), -table.n)


def capacity_split(table: SubchannelTable, target: TargetInterval = CANONICAL) -> tuple[float, float, float]:
    """Fractions below ``a``, inside ``[a, b]`` and above ``b``."""
    v = table.values
    below = int(np.count_nonzero(v < target.a))
    above = int(np.count_nonzero(v > target.b))
    inside = v.size - below - above
    return tuple(math.ldexp(k, -table.n) for k in (below, inside, above))


@dataclass
class CodeSelection:
    n: int
    z: float
    mode: str
    target: float
    info_set: np.ndarray
    union_bound: float

    @property
    def frozen_set(self) -> np.ndarray:
        mask = np.ones(2**self.n, dtype=bool)
        mask[self.info_set] = False
        return np.flatnonzero(mask)

    def as_dict(self):
        return {
            "n": self.n,
            "z": self.z,
            "mode": self.mode,
            "target": self.target,
            "info_set": sorted(int(i) for i in self.info_set),
            "union_bound": self.union_bound,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "CodeSelection":
        d = json.loads(text)
        info = np.asarray(d["info_set"], dtype=np.int64)
        return cls(d["n"], d["z"], d["mode"], d["target"], info, d["union_bound"])


def select_information_set(
    table: SubchannelTable, rate: float | None = None, block_error: float | None = None
) -> CodeSelection:
    """Pick the information set by rate or by a union-bound error budget.

    Rate mode keeps the ``floor(rate * 2**n)`` most reliable sub-channels;
    error mode adds sub-channels in reliability order while the running sum
    of their parameters stays within ``block_error``. Ties go to the lower
    index in both modes.
    """
    if (rate is None) == (block_error is None):
        raise DomainError("give exactly one of rate, block_error")
    order = np.argsort(table.values, kind="stable")
    if rate is not None:
        if not 0.0 < rate <= 1.0:
            raise DomainError(f"rate must lie in (0, 1], got {rate}")
        k = math.floor(rate * table.values.size)
        mode, target = "rate", rate
    else:
        if not 0.0 < block_error < 1.0:
            raise DomainError(f"block_error must lie in (0, 1), got {block_error}")
        sums = np.cumsum(table.values[order])
        k = int(np.searchsorted(sums, block_error, side="right"))
        mode, target = "block_error", block_error
    info = np.sort(order[:k])
    bound = math.fsum(table.values[info].tolist())
    return CodeSelection(table.n, table.z, mode, target, info, bound)
