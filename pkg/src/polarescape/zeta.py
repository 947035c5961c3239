"""Supermartingale upper bound on the escape rate.

For ``Q_n = Z_n**alpha * (1 - Z_n)**beta`` one step multiplies ``Q`` by
``Z**alpha (1 + Z)**beta`` (squaring branch) or ``(2 - Z)**alpha (1 - Z)**beta``
(the other one), so ``E[Q_{n+1} | Z_n] <= zeta(alpha, beta) * Q_n`` with

    zeta(alpha, beta) = 1/2 max_z { z^alpha (1+z)^beta + (2-z)^alpha (1-z)^beta }.

Any ``(alpha, beta)`` gives ``rate <= log2 zeta``; minimizing over the pair
gives the upper end of the escape-rate bracket.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .errors import DomainError
from .maps import TargetInterval

GRID_POINTS = 4097
GOLDEN_TOL = 1e-12
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ZetaParams:
    alpha: float
    beta: float

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise DomainError(f"need alpha, beta >= 0, got ({self.alpha}, {self.beta})")


@dataclass
class ZetaResult:
    params: ZetaParams
    zeta: float
    argmax_z: float

    @property
    def bound_bits(self) -> float:
        return math.log2(self.zeta)

    @property
    def bound_nats(self) -> float:
        return math.log(self.zeta)

    def as_dict(self):
        return {
            "alpha": self.params.alpha,
            "beta": self.params.beta,
            "zeta": self.zeta,
            "bound_bits": self.bound_bits,
            "bound_nats": self.bound_nats,
            "argmax_z": self.argmax_z,
        }


def step_objective(z, alpha, beta):
    """Sum of the two one-step growth factors of ``Q`` at ``Z = z``; ``0**0 = 1``."""
    z = np.asarray(z, dtype=float)
    return z**alpha * (1.0 + z) ** beta + (2.0 - z) ** alpha * (1.0 - z) ** beta


def _golden_max(f, lo, hi, tol=GOLDEN_TOL):
    c = hi - _INVPHI * (hi - lo)
    d = lo + _INVPHI * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - _INVPHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INVPHI * (hi - lo)
            fd = f(d)
    return 0.5 * (lo + hi)


def zeta(params: ZetaParams, grid: int = GRID_POINTS) -> ZetaResult:
    """Inner maximization by a dense grid, then golden-section on the best bracket."""
    a, b = params.alpha, params.beta
    zs = np.linspace(0.0, 1.0, grid)
    fs = step_objective(zs, a, b)
    i = int(np.argmax(fs))
    lo, hi = zs[max(i - 1, 0)], zs[min(i + 1, grid - 1)]

    def f(z):
        return float(z**a * (1.0 + z) ** b + (2.0 - z) ** a * (1.0 - z) ** b)

    zr = _golden_max(f, lo, hi)
    best_z, best_f = float(zs[i]), float(fs[i])
    fr = f(zr)
    if fr > best_f:
        best_z, best_f = zr, fr
    return ZetaResult(params, 0.5 * best_f, best_z)


@dataclass
class ZetaSearch:
    """Outcome of :func:`minimize_zeta`."""

    best: ZetaResult
    starts: int
    converged: bool
    evaluations: int
    box: tuple[float, float]
    line: bool
    runs: list[ZetaResult] = field(default_factory=list)

    def as_dict(self):
        out = self.best.as_dict()
        out.update(starts=self.starts, converged=self.converged, evaluations=self.evaluations, line=self.line)
        return out


def minimize_zeta(
    box: tuple[float, float] = (0.0, 4.0),
    starts: int = 16,
    seed: int = 0,
    line: bool = False,
    xatol: float = 1e-9,
    maxiter: int = 2000,
) -> ZetaSearch:
    """Minimize ``log2 zeta(alpha, beta)`` over ``box**2`` by multi-start Nelder-Mead.

    Starts are a Latin hypercube with fixed ``seed``. ``line=True`` restricts
    the search to ``alpha = beta``.
    """
    lo, hi = box
    if not 0.0 <= lo < hi:
        raise DomainError(f"bad search box {box}")
    dim = 1 if line else 2
    x0s = qmc.scale(qmc.LatinHypercube(d=dim, seed=seed).random(starts), [lo] * dim, [hi] * dim)
    evaluations = 0

    def params_of(x):
        x = np.clip(x, lo, hi)
        return ZetaParams(float(x[0]), float(x[0] if line else x[1]))

    def objective(x):
        nonlocal evaluations
        evaluations += 1
        return zeta(params_of(x)).bound_bits

    runs, converged = [], True
    for x0 in x0s:
        res = minimize(
            objective,
            x0,
            method="Nelder-Mead",
            bounds=[box] * dim,
            options={"xatol": xatol, "fatol": 1e-14, "maxiter": maxiter},
        )
        converged &= bool(res.success)
        runs.append(zeta(params_of(res.x)))
    # ties broken by start order, so the result is deterministic
    best = min(runs, key=lambda r: r.zeta)
    return ZetaSearch(best, starts, converged, evaluations, (lo, hi), line, runs)


def markov_tail_constant(target: TargetInterval, params: ZetaParams) -> float:
    """``1 / min_{z in [a,b]} z**alpha (1-z)**beta``.

    ``z**alpha (1-z)**beta`` is log-concave, so the minimum sits at an
    endpoint. Then ``P^z(Z_n in [a,b]) <= constant * zeta**n`` by Markov's
    inequality.
    """
    q = [z**params.alpha * (1.0 - z) ** params.beta for z in (target.a, target.b)]
    return 1.0 / min(q)
