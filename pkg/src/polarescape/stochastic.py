"""Monte Carlo side of the escape-rate problem.

Randomness comes from counter-based Philox streams. A run is split into
fixed-size blocks and block ``j`` of stream ``(seed, stream)`` always gets
the same key, so results do not depend on how blocks are spread over
worker threads. Block results are merged in block order with
``math.fsum``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import kolmogi

from .errors import DomainError, TooFewPoints
from .maps import CANONICAL, TargetInterval, apply_inverse_word, apply_word, forward_pair

#: samples per random block
BLOCK = 2**16
LN2 = math.log(2.0)
#: the ergodic average of ln|(T^{-1})'| under Lebesgue measure, in nats
LYAPUNOV_NATS = 0.5 - LN2
LYAPUNOV_BITS = LYAPUNOV_NATS / LN2


@dataclass(frozen=True)
class RngSpec:
    """``(seed, stream)`` fully determines every random bit drawn."""

    seed: int = 0
    stream: int = 0

    def generator(self, block: int = 0) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream, block))
        return np.random.Generator(np.random.Philox(ss))

    def bits(self, shape, block: int = 0) -> np.ndarray:
        return self.generator(block).integers(0, 2, size=shape, dtype=np.uint8)


@dataclass
class MCEstimate:
    mean: float
    std_error: float
    samples: int


@dataclass
class ThresholdSample:
    value: float
    depth: int


@dataclass
class KSResult:
    statistic: float
    critical: float
    passed: bool
    samples: int


@dataclass
class LyapunovEstimate:
    mean_nats: float
    mean_bits: float
    std_error: float
    steps: int
    burnin: int

    @property
    def std_error_bits(self) -> float:
        return self.std_error / LN2


@dataclass
class QnCheck:
    alpha: float
    beta: float
    n: int
    growth: float
    growth_std_error: float
    zeta: float
    mean_q: list[float]
    mean_q_std_error: list[float]

    @property
    def passed(self) -> bool:
        return self.growth <= self.zeta + 4.0 * self.growth_std_error

    def step_ratios(self) -> list[float]:
        q = self.mean_q
        return [q[k + 1] / q[k] if q[k] > 0 else float("nan") for k in range(len(q) - 1)]


def _blocks(samples):
    full, rest = divmod(samples, BLOCK)
    sizes = [BLOCK] * full + ([rest] if rest else [])
    return list(enumerate(sizes))


def _run_blocks(fn, samples, threads):
    blocks = _blocks(samples)
    if threads is None or threads <= 1 or len(blocks) == 1:
        return [fn(j, size) for j, size in blocks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda js: fn(*js), blocks))


def _forward_paths(z, bits, on_step=None):
    """Run one trajectory per column of ``bits`` (shape ``(n, S)``)."""
    S = bits.shape[1]
    x = np.full(S, z, dtype=float)
    c = np.full(S, 1.0 - z, dtype=float)
    if on_step is not None:
        on_step(0, x, c)
    for k, row in enumerate(bits, start=1):
        sq = row.astype(bool)
        x0, c0 = forward_pair(0, x, c)
        x1, c1 = forward_pair(1, x, c)
        x, c = np.where(sq, x1, x0), np.where(sq, c1, c0)
        if on_step is not None:
            on_step(k, x, c)
    return x, c


def sample_trajectory(z: float, n: int, rng: RngSpec) -> float:
    """``Z_n`` started at ``z`` with fair independent branch choices."""
    if n < 0:
        raise DomainError("n must be >= 0")
    word = rng.bits(n).tolist()
    return apply_word(word, z)


def sample_trajectories(z: float, n: int, samples: int, rng: RngSpec, threads: int = 1) -> np.ndarray:
    """``samples`` independent draws of ``Z_n``; block-deterministic."""

    def run(j, size):
        return _forward_paths(z, rng.bits((n, size), block=j))[0]

    return np.concatenate(_run_blocks(run, samples, threads))


def _mean_se(total, total_sq, count):
    mean = total / count
    if count < 2:
        return mean, 0.0
    var = max(total_sq - count * mean * mean, 0.0) / (count - 1)
    return mean, math.sqrt(var / count)


def mc_pn(
    z: float,
    n: int,
    target: TargetInterval = CANONICAL,
    samples: int = 10**5,
    rng: RngSpec = RngSpec(),
    threads: int = 1,
) -> MCEstimate:
    """Indicator-mean estimate of ``P^z(Z_n in [a, b])``."""
    if samples < 1:
        raise DomainError("samples must be >= 1")

    def run(j, size):
        x, _ = _forward_paths(z, rng.bits((n, size), block=j))
        return int(np.count_nonzero(target.contains(x)))

    hits = sum(_run_blocks(run, samples, threads))
    mean, se = _mean_se(float(hits), float(hits), samples)
    return MCEstimate(mean, se, samples)


def _inverse_paths(y0, bits):
    """Apply ``T_{b_1}^{-1} o ... o T_{b_n}^{-1}`` column-wise (``b_n`` first)."""
    S = bits.shape[1]
    y = np.full(S, y0, dtype=float)
    c = np.full(S, 1.0 - y0, dtype=float)
    for row in bits[::-1]:
        sq = row.astype(bool)
        s1, s0 = np.sqrt(y), np.sqrt(c)
        y, c = np.where(sq, s1, y / (1.0 + s0)), np.where(sq, c / (1.0 + s1), s0)
    return y


def threshold_samples(depth: int, count: int, rng: RngSpec, threads: int = 1, anchor: float = 0.5) -> np.ndarray:
    """``phi_w^{-1}(anchor)`` for ``count`` random words of length ``depth``.

    Along almost every branch sequence these converge to the threshold
    point separating start values that polarize to 0 from those that
    polarize to 1. The preimage cells shrink at the Lyapunov rate, about
    ``2**-0.279`` per step, so depth 64 pins the threshold to roughly 1e-5.
    """
    if depth < 1:
        raise DomainError("depth must be >= 1")

    def run(j, size):
        return _inverse_paths(anchor, rng.bits((depth, size), block=j))

    return np.concatenate(_run_blocks(run, count, threads))


def sample_threshold(depth: int, rng: RngSpec) -> ThresholdSample:
    if depth < 1:
        raise DomainError("depth must be >= 1")
    word = rng.bits((depth, 1))[:, 0].tolist()
    return ThresholdSample(apply_inverse_word(word, 0.5), depth)


def ks_uniformity(samples, alpha: float = 0.01) -> KSResult:
    """One-sample Kolmogorov-Smirnov test against Uniform[0, 1].

    Passes when the statistic is below ``c(alpha) / sqrt(N)`` with ``c``
    the asymptotic Kolmogorov quantile (about 1.628 at ``alpha = 0.01``).
    """
    x = np.sort(np.asarray(samples, dtype=float))
    N = x.size
    if N < 100:
        raise TooFewPoints(f"KS test needs >= 100 samples, got {N}")
    i = np.arange(1, N + 1)
    stat = float(max(np.max(i / N - x), np.max(x - (i - 1) / N)))
    crit = float(kolmogi(alpha)) / math.sqrt(N)
    return KSResult(stat, crit, stat < crit, N)


def _reverse_walk(y, c, bits, record=False):
    ys = [] if record else None
    cs = [] if record else None
    sqrt = math.sqrt
    for b in bits:
        if record:
            ys.append(y)
            cs.append(c)
        if b:
            s = sqrt(y)
            y, c = s, c / (1.0 + s)
        else:
            s = sqrt(c)
            y, c = y / (1.0 + s), s
    return y, c, ys, cs


def reverse_chain(z0: float, steps: int, rng: RngSpec) -> np.ndarray:
    """States ``x_1..x_steps`` of ``x <- T_B^{-1}(x)`` with fair random ``B``."""
    if not 0.0 < z0 < 1.0:
        raise DomainError("z0 must lie in (0, 1)")
    bits = rng.bits(steps).tolist()
    _, _, ys, _ = _reverse_walk(z0, 1.0 - z0, bits + [0], record=True)
    return np.asarray(ys[1:])


def reverse_chain_marginal(z0: float, burnin: int, chains: int, rng: RngSpec, threads: int = 1) -> np.ndarray:
    """Final states of ``chains`` independent reverse chains after ``burnin`` steps."""
    if not 0.0 < z0 < 1.0:
        raise DomainError("z0 must lie in (0, 1)")

    def run(j, size):
        # the chain applies its first bit first, so feed rows reversed
        return _inverse_paths(z0, rng.bits((burnin, size), block=j)[::-1])

    return np.concatenate(_run_blocks(run, chains, threads))


def lyapunov_estimate(
    z0: float = 0.5,
    steps: int = 10**6,
    burnin: int = 1000,
    rng: RngSpec = RngSpec(),
    batches: int = 100,
) -> LyapunovEstimate:
    """Time average of ``ln (T_b^{-1})'`` along one reverse chain.

    The derivative is taken at the state before the step's inverse map is
    applied; the first ``burnin`` of the ``steps`` terms are dropped. The
    standard error uses batch means over ``batches`` equal batches.
    """
    if not 0 <= burnin < steps:
        raise DomainError("need 0 <= burnin < steps")
    if not 0.0 < z0 < 1.0:
        raise DomainError("z0 must lie in (0, 1)")
    bits = rng.bits(steps)
    _, _, ys, cs = _reverse_walk(z0, 1.0 - z0, bits.tolist(), record=True)
    ys = np.asarray(ys[burnin:])
    cs = np.asarray(cs[burnin:])
    b = bits[burnin:].astype(bool)
    # ln(1/(2 sqrt(d))) with d = y for the square-root branch, 1 - y otherwise
    terms = -LN2 - 0.5 * np.log(np.where(b, ys, cs))
    kept = terms.size
    mean = math.fsum(terms.tolist()) / kept
    nb = min(batches, kept)
    size = kept // nb
    bm = terms[: nb * size].reshape(nb, size).mean(axis=1)
    se = float(bm.std(ddof=1) / math.sqrt(nb)) if nb > 1 else 0.0
    return LyapunovEstimate(mean, mean / LN2, se, steps, burnin)


def qn_ratio_check(
    alpha: float,
    beta: float,
    z: float = 0.5,
    n: int = 12,
    samples: int = 10**5,
    rng: RngSpec = RngSpec(),
    threads: int = 1,
    zeta_value: float | None = None,
) -> QnCheck:
    """Monte Carlo growth rate ``(E Q_n / Q_0)^{1/n}`` of ``Q = Z^alpha (1 - Z)^beta``.

    It should not exceed the one-step worst-case factor ``zeta(alpha, beta)``.
    """
    if alpha < 0 or beta < 0 or (alpha == 0 and beta == 0):
        raise DomainError("need alpha, beta >= 0, not both zero")
    if n < 1:
        raise DomainError("n must be >= 1")
    if zeta_value is None:
        from .zeta import ZetaParams, zeta

        zeta_value = zeta(ZetaParams(alpha, beta)).zeta

    def run(j, size):
        sums = np.zeros(n + 1)
        sq = np.zeros(n + 1)

        def on_step(k, x, c):
            with np.errstate(divide="ignore", invalid="ignore"):
                q = np.power(x, alpha) * np.power(c, beta)
            sums[k] = math.fsum(q.tolist())
            sq[k] = math.fsum((q * q).tolist())

        _forward_paths(z, rng.bits((n, size), block=j), on_step)
        return sums, sq

    parts = _run_blocks(run, samples, threads)
    means, ses = [], []
    for k in range(n + 1):
        tot = math.fsum(p[0][k] for p in parts)
        tot2 = math.fsum(p[1][k] for p in parts)
        m, s = _mean_se(tot, tot2, samples)
        means.append(m)
        ses.append(s)
    # E Q_n <= Q_0 zeta^n, so the comparable growth is (E Q_n / Q_0)^(1/n)
    q0, mean_n, se_n = means[0], means[-1], ses[-1]
    growth = (mean_n / q0) ** (1.0 / n) if mean_n > 0 and q0 > 0 else 0.0
    growth_se = growth * se_n / (n * mean_n) if mean_n > 0 else 0.0
    return QnCheck(alpha, beta, n, growth, growth_se, zeta_value, means, ses)
