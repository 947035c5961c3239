import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polarescape.errors import DomainError
from polarescape.exact import LOWER_BOUND_BITS, UPPER_BOUND_BITS, exact_pn
from polarescape.maps import CANONICAL, TargetInterval
from polarescape.zeta import ZetaParams, markov_tail_constant, minimize_zeta, step_objective, zeta


def _f(z, alpha, beta):
    return z**alpha * (1 + z) ** beta + (2 - z) ** alpha * (1 - z) ** beta


def dense_max(alpha, beta, points=1_000_001, zooms=4):
    # dense grid, then re-grid around the best point since maxima can sit
    # on a cusp next to z = 0 or z = 1
    z = np.linspace(0.0, 1.0, points)
    best = 0.0
    for _ in range(zooms + 1):
        f = _f(z, alpha, beta)
        i = int(f.argmax())
        best = max(best, float(f[i]))
        step = z[1] - z[0]
        z = np.linspace(max(z[i] - step, 0.0), min(z[i] + step, 1.0), 2001)
    return 0.5 * best


@pytest.fixture(scope="module")
def search():
    return minimize_zeta()


def test_trivial_exponents():
    assert zeta(ZetaParams(1, 0)).zeta == 1.0
    assert np.allclose(step_objective(np.linspace(0, 1, 11), 1, 0), 2.0)
    assert zeta(ZetaParams(0, 0)).zeta == 1.0
    # 0**0 = 1 keeps f continuous at the ends
    assert zeta(ZetaParams(0, 1)).zeta == 1.0
    r = zeta(ZetaParams(2, 0))
    assert r.zeta == 2.0 and r.argmax_z == 0.0


def test_half_half():
    r = zeta(ZetaParams(0.5, 0.5))
    assert r.zeta == pytest.approx(math.sqrt(3) / 2, abs=1e-15)
    assert r.bound_bits == pytest.approx(0.5 * math.log2(0.75), abs=1e-15)
    assert r.bound_nats == pytest.approx(0.5 * math.log(0.75), abs=1e-15)
    # the maximum is flat to second order, so z is resolved to about sqrt(eps)
    assert r.argmax_z == pytest.approx(0.5, abs=1e-7)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 4.0), st.floats(0.0, 4.0))
def test_against_dense_grid(alpha, beta):
    r = zeta(ZetaParams(alpha, beta))
    ref = dense_max(alpha, beta, 200_001)
    assert r.zeta >= ref - 1e-13
    assert r.zeta <= ref * (1 + 1e-9) + 1e-12
    assert 0.5 * step_objective(r.argmax_z, alpha, beta) == pytest.approx(r.zeta, rel=1e-15)


@pytest.mark.parametrize("t", [0.25, 0.5, 0.66, 1.3, 3.0])
def test_symmetric_exponents_give_symmetric_maximizers(t):
    r = zeta(ZetaParams(t, t))
    z = r.argmax_z
    assert step_objective(1 - z, t, t) == pytest.approx(step_objective(z, t, t), rel=1e-14)


def test_maximizer_leaves_center_for_larger_exponents():
    assert zeta(ZetaParams(0.5, 0.5)).argmax_z == pytest.approx(0.5, abs=1e-7)
    z = zeta(ZetaParams(0.66, 0.66)).argmax_z
    assert min(z, 1 - z) < 0.25


@pytest.mark.parametrize("params", [(0.5, 0.5), (0.66, 0.66), (1.7, 0.3), (0.1, 2.5)])
def test_grid_refinement_is_stable(params):
    vals = [zeta(ZetaParams(*params), grid=g).zeta for g in (257, 1025, 4097, 16385)]
    assert max(vals) - min(vals) <= 1e-12


def test_negative_exponents_rejected():
    with pytest.raises(DomainError):
        ZetaParams(-0.1, 0.5)


def test_minimized_bound(search):
    b = search.best
    assert LOWER_BOUND_BITS <= b.bound_bits <= UPPER_BOUND_BITS + 1e-3
    assert b.bound_bits == pytest.approx(-0.266997, abs=2e-6)
    assert b.params.alpha == pytest.approx(b.params.beta, abs=1e-4)
    assert search.converged
    assert len(search.runs) == search.starts == 16


def test_line_search_is_not_better(search):
    line = minimize_zeta(line=True)
    assert line.best.zeta >= search.best.zeta - 1e-12


def test_beats_coarse_scan(search):
    grid = np.linspace(0, 4, 41)
    best = min(zeta(ZetaParams(a, b)).zeta for a in grid for b in grid)
    assert search.best.zeta <= best + 1e-15


def test_minimize_deterministic():
    a = minimize_zeta(starts=3, seed=5)
    b = minimize_zeta(starts=3, seed=5)
    assert a.as_dict() == b.as_dict()


def test_minimize_bad_box():
    with pytest.raises(DomainError):
        minimize_zeta(box=(2.0, 1.0))


def test_iteration_cap_is_reported():
    assert not minimize_zeta(starts=2, maxiter=3).converged


def test_markov_tail_constant_examples():
    half = ZetaParams(0.5, 0.5)
    assert markov_tail_constant(CANONICAL, half) == pytest.approx(1 / math.sqrt(3 / 16), rel=1e-15)
    assert markov_tail_constant(TargetInterval(0.5, 0.5), half) == pytest.approx(2.0, rel=1e-15)


@pytest.mark.parametrize("ab", [(0.1, 0.4), (0.25, 0.75), (0.6, 0.9)])
@pytest.mark.parametrize("params", [(0.5, 0.5), (0.66, 0.66), (2.0, 0.3)])
def test_markov_tail_constant_grid_oracle(ab, params):
    z = np.linspace(*ab, 100_001)
    ref = 1 / (z ** params[0] * (1 - z) ** params[1]).min()
    assert markov_tail_constant(TargetInterval(*ab), ZetaParams(*params)) == pytest.approx(ref, rel=1e-12)


def test_bound_chain_at_half():
    half = ZetaParams(0.5, 0.5)
    c = markov_tail_constant(CANONICAL, half)
    zv = zeta(half).zeta
    for n in range(21):
        assert exact_pn(0.5, n) <= c * zv**n


@pytest.mark.parametrize("params", [(0.3, 0.3), (0.5, 0.5), (1.0, 0.5), (0.8, 1.1)])
def test_bound_chain_other_exponents(params):
    p = ZetaParams(*params)
    c = markov_tail_constant(CANONICAL, p)
    zv = zeta(p).zeta
    z = np.arange(1, 101) / 101
    for n in range(0, 21, 4):
        assert np.all(exact_pn(z, n) <= c * zv**n)
