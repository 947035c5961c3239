"""Exact (non-stochastic) un-polarized mass and escape exponents.

Everything here counts words. ``p_n(z)`` is the fraction of length-``n``
words whose image of ``z`` lands in the target window; equivalently the
fraction of preimage cells ``phi_w^{-1}[a, b]`` containing ``z``.

Two enumeration directions are used:

* forward, from a start value, pruned with :func:`~polarescape.maps.reach_bounds`
  (:func:`exact_pn`);
* inverse, from the target window, producing the preimage cells
  (:func:`preimage_cells`, :func:`integral_bn`, sweep-line :func:`sup_theta`).

For depths where the full cell list no longer fits in memory,
:func:`sup_theta` switches to a split evaluation
``N_n(z) = sum_u N_m(phi_u(z))`` over all forward prefixes ``u`` of length
``n - m`` and a branch-and-bound search over ``z``.

All exponents are in bits.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import BudgetExceeded, DomainError, SplitNotContiguous, TooFewPoints
from .maps import CANONICAL, BranchWord, TargetInterval, forward_pair, word_from_index

#: the analytic lower end of the escape-rate bracket, ``1/(2 ln 2) - 1``
LOWER_BOUND_BITS = 1.0 / (2.0 * math.log(2.0)) - 1.0
#: the optimized supermartingale upper bound reported for the BEC
UPPER_BOUND_BITS = -0.2669
#: the simulated escape rate reported for the BEC
SIMULATED_RATE_BITS = -0.2758

DEFAULT_BUDGET = 2**31
DEFAULT_TOL = 1e-14
#: cells shorter than this get their length cross-checked against ``hi - lo``
TINY_CELL = 1e-10
#: largest number of cells ``preimage_cells`` will materialize
CELL_CAP = 2**24
#: frontier chunk size for the depth-first enumerations
CHUNK = 2**17
#: sweep-line is used by ``sup_theta(method="auto")`` up to this depth
SWEEP_MAX_DEPTH = 20
#: default depth of the base cell table for the split evaluation
SPLIT_BASE_DEPTH = 26
#: first depth of the default tail-fit window
TAIL_START = 16


# -- forward counting ----------------------------------------------------------


def _prune_margin(m):
    # float paths and the closed-form envelope drift apart by ~ (m+1) 2^m ulp
    return 1e-9 + (m + 1) * 2.0**m * 2.0**-50


def _count_forward(x, c, idx, depth, n, a, b, nz, budget):
    counts = np.zeros(nz, dtype=np.int64)
    visited = 0
    stack = [(x, c, idx, depth)]
    log_hi_cut = math.log(1.0 - a)
    log_lo_cut = math.log(b)
    while stack:
        x, c, idx, d = stack.pop()
        if d == n:
            hit = (x >= a) & (x <= b)
            counts += np.bincount(idx[hit], minlength=nz)
            continue
        x0, c0 = forward_pair(0, x, c)
        x1, c1 = forward_pair(1, x, c)
        x = np.concatenate([x0, x1])
        c = np.concatenate([c0, c1])
        idx = np.concatenate([idx, idx])
        d += 1
        m = n - d
        if m > 0:
            e = 2.0**m
            eps = math.log1p(_prune_margin(m))
            with np.errstate(divide="ignore"):
                # high < a  <=>  c^(2^m) > 1 - a ;  low > b  <=>  x^(2^m) > b
                cut = (e * np.log(c) > log_hi_cut + eps) | (e * np.log(x) > log_lo_cut + eps)
            if cut.any():
                keep = ~cut
                x, c, idx = x[keep], c[keep], idx[keep]
        visited += x.size
        if visited > budget:
            raise BudgetExceeded("exact_pn surviving branches", visited, budget)
        if x.size == 0:
            continue
        if x.size > CHUNK:
            h = x.size // 2
            stack.append((x[h:], c[h:], idx[h:], d))
            stack.append((x[:h], c[:h], idx[:h], d))
        else:
            stack.append((x, c, idx, d))
    return counts, visited


def exact_count(z, n: int, target: TargetInterval = CANONICAL, budget: int = DEFAULT_BUDGET):
    """Number of length-``n`` words ``w`` with ``phi_w(z)`` in the target.

    ``z`` may be a scalar or a 1-d array; the result has the same shape.
    Branches that provably cannot reach the target are cut, so this is
    exact, not an approximation.
    """
    if n < 0:
        raise DomainError("n must be >= 0")
    zs = np.atleast_1d(np.asarray(z, dtype=float))
    if zs.ndim != 1 or np.any((zs < 0) | (zs > 1)):
        raise DomainError("z must be in [0, 1]")
    counts, _ = _count_forward(
        zs.copy(), 1.0 - zs, np.arange(zs.size), 0, n, target.a, target.b, zs.size, budget
    )
    return int(counts[0]) if np.ndim(z) == 0 else counts


def exact_pn(z, n: int, target: TargetInterval = CANONICAL, budget: int = DEFAULT_BUDGET):
    """``P^z(Z_n in [a, b])``, an exact multiple of ``2**-n``."""
    counts = exact_count(z, n, target, budget)
    scale = 2.0**-n
    if np.ndim(z) == 0:
        return counts * scale
    return counts.astype(float) * scale


# -- inverse enumeration ("preimage cells") -----------------------------------


@dataclass
class _CellStats:
    pruned_words: int = 0
    pruned_mass: float = 0.0
    tiny_cells: int = 0
    length_discrepancy: float = 0.0


def _iter_cells(n, target, tol, stats, prefix_bits=0, prefix_code=0) -> Iterator[tuple]:
    """Depth-first over inverse words; yields ``(codes, lo, hi, length)`` blocks.

    A node after ``t`` inverse steps carries ``[lo, hi]`` (with complements)
    and its length, propagated through the identities
    ``sqrt(h) - sqrt(l) = (h - l)/(sqrt(h) + sqrt(l))`` and the mirrored one,
    so the length never suffers cancellation. The first inverse step uses
    ``b_n``; ``codes`` hold the word index with ``b_1`` most significant.
    """
    lo = np.array([target.a])
    hi = np.array([target.b])
    clo = np.array([1.0 - target.a])
    chi = np.array([1.0 - target.b])
    ln = np.array([target.b - target.a])
    code = np.zeros(1, dtype=np.int64)
    for t in range(prefix_bits):
        bit = (prefix_code >> t) & 1
        lo, hi, clo, chi, ln = _inverse_cells(bit, lo, hi, clo, chi, ln)
        code = code | (bit << t)
    stack = [(lo, hi, clo, chi, ln, code, prefix_bits)]
    while stack:
        lo, hi, clo, chi, ln, code, t = stack.pop()
        if t == n:
            tiny = ln < TINY_CELL
            if tiny.any():
                direct = hi[tiny] - lo[tiny]
                rel = np.abs(direct - ln[tiny]) / ln[tiny]
                stats.tiny_cells += int(tiny.sum())
                stats.length_discrepancy = max(stats.length_discrepancy, float(rel.max()))
            yield code, lo, hi, ln
            continue
        parts = [_inverse_cells(bit, lo, hi, clo, chi, ln) for bit in (0, 1)]
        lo, hi, clo, chi, ln = (np.concatenate([p[i] for p in parts]) for i in range(5))
        code = np.concatenate([code, code | (np.int64(1) << t)])
        t += 1
        if tol > 0 and t < n:
            small = ln < tol
            if small.any():
                leaves = 2 ** (n - t)
                stats.pruned_words += int(small.sum()) * leaves
                stats.pruned_mass += float(ln[small].sum()) * leaves
                keep = ~small
                lo, hi, clo, chi, ln, code = lo[keep], hi[keep], clo[keep], chi[keep], ln[keep], code[keep]
        if lo.size == 0:
            continue
        if lo.size > CHUNK:
            h = lo.size // 2
            stack.append((lo[h:], hi[h:], clo[h:], chi[h:], ln[h:], code[h:], t))
            stack.append((lo[:h], hi[:h], clo[:h], chi[:h], ln[:h], code[:h], t))
        else:
            stack.append((lo, hi, clo, chi, ln, code, t))


def _inverse_cells(bit, lo, hi, clo, chi, ln):
    if bit:
        sl, sh = np.sqrt(lo), np.sqrt(hi)
        return sl, sh, clo / (1.0 + sl), chi / (1.0 + sh), ln / (sl + sh)
    sl, sh = np.sqrt(clo), np.sqrt(chi)
    return lo / (1.0 + sl), hi / (1.0 + sh), sl, sh, ln / (sl + sh)


def _split_jobs(n, threads):
    """Prefix partition used for parallel runs; fixed, independent of thread count."""
    bits = min(n, 4)
    return bits, list(range(2**bits))


def _map_jobs(fn, jobs, threads):
    if threads is None or threads <= 1:
        return [fn(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, jobs))


@dataclass(frozen=True)
class PreimageCell:
    word: BranchWord
    lo: float
    hi: float


@dataclass
class PreimageEnumeration:
    """All surviving preimage cells of the target at depth ``depth``.

    Cells are stored column-wise, sorted by word index; :attr:`cells`
    materializes :class:`PreimageCell` objects on demand.
    """

    depth: int
    target: TargetInterval
    codes: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    length: np.ndarray
    pruned_words: int = 0
    pruned_mass_bound: float = 0.0
    tiny_cells: int = 0
    length_discrepancy: float = 0.0

    @property
    def cell_count(self) -> int:
        return int(self.codes.size)

    @property
    def cells(self) -> list[PreimageCell]:
        return [
            PreimageCell(word_from_index(int(k), self.depth), float(l), float(h))
            for k, l, h in zip(self.codes, self.lo, self.hi)
        ]

    @property
    def total_length(self) -> float:
        return math.fsum(self.length.tolist())

    @property
    def exponent_bits(self) -> float:
        if self.depth == 0:
            return float("nan")
        mean = self.total_length * 2.0**-self.depth
        return math.log2(mean) / self.depth if mean > 0 else float("-inf")

    def report(self) -> dict:
        return {
            "depth": self.depth,
            "target": self.target.as_dict(),
            "cell_count": self.cell_count,
            "pruned_words": self.pruned_words,
            "pruned_mass_bound": self.pruned_mass_bound,
            "total_length": self.total_length,
            "exponent_bits": self.exponent_bits,
        }


def preimage_cells(
    n: int,
    target: TargetInterval = CANONICAL,
    tol: float = DEFAULT_TOL,
    cap: int = CELL_CAP,
    threads: int = 1,
) -> PreimageEnumeration:
    """Enumerate ``phi_w^{-1}[a, b]`` for every length-``n`` word.

    Subtrees whose interval is shorter than ``tol`` are dropped; their
    word count and ``length * leaves`` are added to ``pruned_words`` and
    ``pruned_mass_bound``. ``tol=0`` disables pruning.
    """
    if n < 0:
        raise DomainError("n must be >= 0")
    if tol < 0:
        raise DomainError("tol must be >= 0")
    if 2**n > cap:
        raise BudgetExceeded("preimage cells", 2**n, cap)
    bits, jobs = _split_jobs(n, threads)

    def run(job):
        stats = _CellStats()
        blocks = list(_iter_cells(n, target, tol, stats, bits, job))
        return blocks, stats

    results = _map_jobs(run, jobs, threads)
    blocks = [blk for res in results for blk in res[0]]
    stats = [res[1] for res in results]
    if blocks:
        codes, lo, hi, ln = (np.concatenate([b[i] for b in blocks]) for i in range(4))
    else:
        codes = np.zeros(0, dtype=np.int64)
        lo = hi = ln = np.zeros(0)
    order = np.argsort(codes, kind="stable")
    return PreimageEnumeration(
        depth=n,
        target=target,
        codes=codes[order],
        lo=lo[order],
        hi=hi[order],
        length=ln[order],
        pruned_words=sum(s.pruned_words for s in stats),
        pruned_mass_bound=math.fsum(s.pruned_mass for s in stats),
        tiny_cells=sum(s.tiny_cells for s in stats),
        length_discrepancy=max(s.length_discrepancy for s in stats),
    )


@dataclass
class IntegralResult:
    """Average of ``p_n`` over ``(0, 1)`` and its exponent ``b_n``."""

    depth: int
    mean_length: float
    exponent_bits: float
    pruned_words: int
    pruned_mass_bound: float
    #: ``b_n`` if every pruned cell had the conservative maximal length
    exponent_bits_upper: float


def integral_bn(
    n: int,
    target: TargetInterval = CANONICAL,
    tol: float = DEFAULT_TOL,
    budget: int = DEFAULT_BUDGET,
    threads: int = 1,
) -> IntegralResult:
    """``b_n = (1/n) log2 of the integral of p_n over (0, 1)``.

    The integral equals the mean preimage-cell length. Lengths are summed
    per block (pairwise) and the block sums combined with ``math.fsum``,
    so the total does not depend on evaluation order.
    """
    if n < 1:
        raise DomainError("b_n needs n >= 1")
    if 2**n > budget:
        raise BudgetExceeded("integral_bn cells", 2**n, budget)
    bits, jobs = _split_jobs(n, threads)

    def run(job):
        stats = _CellStats()
        sums = [float(np.sum(blk[3])) for blk in _iter_cells(n, target, tol, stats, bits, job)]
        return math.fsum(sums), stats

    results = _map_jobs(run, jobs, threads)
    total = math.fsum(r[0] for r in results)
    pruned_words = sum(r[1].pruned_words for r in results)
    pruned_mass = math.fsum(r[1].pruned_mass for r in results)
    scale = 2.0**-n
    mean = total * scale
    exponent = math.log2(mean) / n if mean > 0 else float("-inf")
    upper = (total + pruned_mass) * scale
    return IntegralResult(
        depth=n,
        mean_length=mean,
        exponent_bits=exponent,
        pruned_words=pruned_words,
        pruned_mass_bound=pruned_mass,
        exponent_bits_upper=math.log2(upper) / n if upper > 0 else float("-inf"),
    )


# -- sup over a region ---------------------------------------------------------


@dataclass
class SupTheta:
    """Maximum of ``theta_n`` over a region, with a witness point."""

    depth: int
    count: int
    exponent: float
    argmax_z: float
    method: str
    evaluations: int = 0

    def __iter__(self):
        # unpacks as (exponent, argmax_z)
        return iter((self.exponent, self.argmax_z))


def _sweep_max(lo, hi, r1, r2):
    """Maximum closed-interval overlap count on ``[r1, r2]`` and a witness."""
    keep = (lo <= r2) & (hi >= r1)
    lo, hi = lo[keep], hi[keep]
    if lo.size == 0:
        return 0, 0.5 * (r1 + r2)
    ev = np.concatenate([lo, hi])
    kind = np.concatenate([np.zeros(lo.size, np.int8), np.ones(hi.size, np.int8)])
    # opens before closes at equal coordinates
    order = np.lexsort((kind, ev))
    ev, kind = ev[order], kind[order]
    cnt = np.cumsum(np.where(kind == 0, 1, -1))
    nxt = np.append(ev[1:], np.inf)
    # counts that hold on the open gap (ev_i, ev_{i+1})
    gap = (nxt > ev) & (ev < r2) & (nxt > r1)
    # counts that hold exactly at ev_i (after its last open, before its closes)
    nkind = np.append(kind[1:], 1)
    point = (kind == 0) & ((nxt > ev) | (nkind == 1)) & (ev >= r1) & (ev <= r2)
    best, witness = -1, r1
    if gap.any():
        i = np.flatnonzero(gap)[np.argmax(cnt[gap])]
        best = int(cnt[i])
        g1, g2 = max(ev[i], r1), min(nxt[i], r2)
        witness = float(0.5 * (g1 + g2))
    if point.any():
        i = np.flatnonzero(point)[np.argmax(cnt[point])]
        if cnt[i] > best:
            best, witness = int(cnt[i]), float(ev[i])
    return max(best, 0), witness


def _forward_images(z, k):
    """All ``2**k`` forward-prefix images of each entry of ``z``, shape ``(len(z), 2**k)``."""
    x = z[:, None]
    c = 1.0 - x
    for _ in range(k):
        x0, c0 = forward_pair(0, x, c)
        x1, c1 = forward_pair(1, x, c)
        x = np.concatenate([x0, x1], axis=1)
        c = np.concatenate([c0, c1], axis=1)
    return x


_BASE_CACHE: dict = {}


def _base_table(m, target, tol, threads):
    """Sorted cell endpoints at depth ``m``; the most recent table is cached."""
    key = (m, target.a, target.b, tol)
    if key not in _BASE_CACHE:
        _BASE_CACHE.clear()
        bits, jobs = _split_jobs(m, threads)
        lo = np.empty(2**m)
        hi = np.empty(2**m)
        filled = 0

        stats = _CellStats()
        for job in jobs:
            for _, blo, bhi, _ in _iter_cells(m, target, tol, stats, bits, job):
                lo[filled : filled + blo.size] = blo
                hi[filled : filled + bhi.size] = bhi
                filled += blo.size
        lo, hi = lo[:filled], hi[:filled]
        lo.sort()
        hi.sort()
        _BASE_CACHE[key] = (lo, hi)
    return _BASE_CACHE[key]


class _SplitCounter:
    """``N_n(z) = sum_u N_m(phi_u(z))`` from a sorted depth-``m`` cell table."""

    def __init__(self, n, m, target, tol, threads):
        self.k = n - m
        self.lo, self.hi = _base_table(m, target, tol, threads)
        self.batch = max(1, 2**19 >> self.k)
        self.evaluations = 0

    def _count(self, y_lo, y_hi):
        c = np.searchsorted(self.lo, y_hi, side="right") - np.searchsorted(self.hi, y_lo, side="left")
        return c.sum(axis=1)

    def point(self, z):
        out = []
        for s in range(0, z.size, self.batch):
            y = _forward_images(z[s : s + self.batch], self.k)
            out.append(self._count(y, y))
        self.evaluations += z.size
        return np.concatenate(out) if out else np.zeros(0, dtype=np.int64)

    def upper(self, z1, z2):
        """Number of words whose cell meets ``[z1, z2]``; bounds ``N_n`` there."""
        out = []
        for s in range(0, z1.size, self.batch):
            y1 = _forward_images(z1[s : s + self.batch], self.k)
            y2 = _forward_images(z2[s : s + self.batch], self.k)
            out.append(self._count(y1, y2))
        self.evaluations += z1.size
        return np.concatenate(out) if out else np.zeros(0, dtype=np.int64)


def _split_sup(n, target, r1, r2, base_depth, tol, threads, initial=256):
    m = min(n, base_depth)
    counter = _SplitCounter(n, m, target, tol, threads)
    ends = np.array([r1, r2])
    pc = counter.point(ends)
    best = int(pc.max())
    witness = float(ends[int(np.argmax(pc))])
    edges = np.linspace(r1, r2, initial + 1)
    z1, z2 = edges[:-1], edges[1:]
    while z1.size:
        mid = 0.5 * (z1 + z2)
        lower = counter.point(mid)
        upper = counter.upper(z1, z2)
        i = int(np.argmax(lower))
        if lower[i] > best:
            best, witness = int(lower[i]), float(mid[i])
        resolved = upper == lower
        atomic = (z2 - z1) <= 4 * np.spacing(z2)
        live = (upper > best) & ~resolved
        if np.any(live & atomic):
            # interval at float resolution: the max sits at an endpoint
            za = np.concatenate([z1[live & atomic], z2[live & atomic]])
            pa = counter.point(za)
            j = int(np.argmax(pa))
            if pa[j] > best:
                best, witness = int(pa[j]), float(za[j])
            live &= ~atomic
        z1, z2, mid = z1[live], z2[live], mid[live]
        z1, z2 = np.concatenate([z1, mid]), np.concatenate([mid, z2])
    return best, witness, counter.evaluations


def sup_theta(
    n: int,
    target: TargetInterval = CANONICAL,
    region: TargetInterval = CANONICAL,
    method: str = "auto",
    base_depth: int = SPLIT_BASE_DEPTH,
    tol: float = 0.0,
    threads: int = 1,
) -> SupTheta:
    """``a_n = max over z in region of theta_n(z)``, exactly.

    ``method="sweep"`` enumerates all depth-``n`` cells and sweeps their
    endpoints; ``method="split"`` runs branch-and-bound over ``z`` using a
    depth-``base_depth`` cell table. ``"auto"`` picks the sweep up to
    ``SWEEP_MAX_DEPTH``.
    """
    if n < 1:
        raise DomainError("theta_n needs n >= 1")
    if method == "auto":
        method = "sweep" if n <= SWEEP_MAX_DEPTH else "split"
    r1, r2 = region.a, region.b
    if method == "sweep":
        enum = preimage_cells(n, target, tol=tol, cap=max(CELL_CAP, 2**n), threads=threads)
        count, witness = _sweep_max(enum.lo, enum.hi, r1, r2)
        evals = enum.cell_count
    elif method == "split":
        if target.symmetric and region.symmetric:
            # p_n(z) = p_n(1 - z): search the left half only
            r2 = 0.5
        count, witness, evals = _split_sup(n, target, r1, r2, base_depth, tol, threads)
    else:
        raise DomainError(f"unknown method {method!r}")
    exponent = math.log2(count * 2.0**-n) / n if count > 0 else float("-inf")
    return SupTheta(n, count, exponent, witness, method, evals)


# -- recursion identity ---------------------------------------------------------


def recursion_split(target: TargetInterval) -> tuple[TargetInterval, TargetInterval]:
    """The two windows of the one-step recursion.

    With ``a1 = 1 - sqrt(1 - a)``, ``b1 = 1 - sqrt(1 - b)``, ``a2 = sqrt(a)``,
    ``b2 = sqrt(b)`` this returns ``([a1, b2], [a2, b1])`` so that
    ``p_{n+1}^{a,b} = (p_n^{a1,b2} + p_n^{a2,b1}) / 2``. Requires ``a2 <= b1``.
    """
    a, b = target.a, target.b
    a1 = a / (1.0 + math.sqrt(1.0 - a))
    b1 = b / (1.0 + math.sqrt(1.0 - b))
    a2 = math.sqrt(a)
    b2 = math.sqrt(b)
    if a2 > b1:
        raise SplitNotContiguous(
            f"sqrt(a)={a2} > 1-sqrt(1-b)={b1}: the pieces [a1,b1], [a2,b2] do not overlap"
        )
    return TargetInterval(a1, b2), TargetInterval(a2, b1)


def recursion_pieces(target: TargetInterval) -> tuple[TargetInterval, TargetInterval]:
    """The raw inverse images ``T0^{-1}[a,b] = [a1, b1]`` and ``T1^{-1}[a,b] = [a2, b2]``."""
    a, b = target.a, target.b
    return (
        TargetInterval(a / (1.0 + math.sqrt(1.0 - a)), b / (1.0 + math.sqrt(1.0 - b))),
        TargetInterval(math.sqrt(a), math.sqrt(b)),
    )


# -- curves and extrapolation -----------------------------------------------------

CURVE_KINDS = ("theta_at_z", "a_n_sup", "b_n_integral")


@dataclass
class RateBracket:
    lower: float
    upper: float
    estimate: float
    slope: float = 0.0
    window: tuple[int, int] = (0, 0)
    points: int = 0

    def as_dict(self):
        return {
            "lower": self.lower,
            "upper": self.upper,
            "estimate": self.estimate,
            "slope": self.slope,
            "window": list(self.window),
            "points": self.points,
        }


@dataclass
class EscapeCurve:
    """Finite-``n`` exponents ``(n, exponent_bits)`` of one kind."""

    kind: str
    points: list[tuple[int, float]] = field(default_factory=list)
    tail_estimate: float | None = None
    tail_window: tuple[int, int] | None = None

    def __post_init__(self):
        if self.kind not in CURVE_KINDS:
            raise DomainError(f"unknown curve kind {self.kind!r}")


def extrapolate_rate(curve: EscapeCurve, window: tuple[int, int] | None = None) -> RateBracket:
    """Least-squares fit of ``exponent(n) = rate + slope / n`` over the tail window.

    Without a window the fit uses depths ``>= TAIL_START`` (or the last four
    points if there are fewer); the ``1/n`` term cannot absorb the curvature
    below that. The fitted rate is stored on the curve as ``tail_estimate``. The bracket
    returned alongside is the analytic one, ``[1/(2 ln 2) - 1, -0.2669]``.
    """
    if window is None:
        window = curve.tail_window
    if window is None:
        ns = sorted(p[0] for p in curve.points if math.isfinite(p[1]))
        tail = [n for n in ns if n >= TAIL_START]
        if len(tail) < 4:
            tail = ns[-4:]
        window = (tail[0], ns[-1]) if tail else (0, 0)
    pts = [(n, e) for n, e in curve.points if window[0] <= n <= window[1] and math.isfinite(e)]
    if len(pts) < 4:
        raise TooFewPoints(f"need >= 4 finite points in window {window}, got {len(pts)}")
    ns = np.array([p[0] for p in pts], dtype=float)
    ys = np.array([p[1] for p in pts])
    design = np.column_stack([np.ones_like(ns), 1.0 / ns])
    (rate, slope), *_ = np.linalg.lstsq(design, ys, rcond=None)
    curve.tail_estimate = float(rate)
    curve.tail_window = (int(window[0]), int(window[1]))
    return RateBracket(
        lower=LOWER_BOUND_BITS,
        upper=UPPER_BOUND_BITS,
        estimate=float(rate),
        slope=float(slope),
        window=curve.tail_window,
        points=len(pts),
    )


def escape_curve(
    ns: Sequence[int],
    kind: str = "a_n_sup",
    target: TargetInterval = CANONICAL,
    region: TargetInterval = CANONICAL,
    z: float = 0.5,
    budget: int = DEFAULT_BUDGET,
    tol: float = DEFAULT_TOL,
    threads: int = 1,
    method: str = "auto",
    progress=None,
) -> EscapeCurve:
    """Compute one exponent per depth in ``ns``."""
    curve = EscapeCurve(kind)
    for n in ns:
        if kind == "theta_at_z":
            p = exact_pn(z, n, target, budget)
            val = math.log2(p) / n if p > 0 else float("-inf")
        elif kind == "a_n_sup":
            val = sup_theta(n, target, region, method=method, threads=threads).exponent
        else:
            val = integral_bn(n, target, tol=tol, budget=budget, threads=threads).exponent_bits
        curve.points.append((int(n), float(val)))
        if progress is not None:
            progress(n, val)
    return curve
