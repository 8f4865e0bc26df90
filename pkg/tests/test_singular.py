import math

import mpmath as mp
import numpy as np
import pytest

from spiralsheet.checks import random_smooth_pair
from spiralsheet.core import IMAGE, FieldPair, GridSpec, Params, norm_X, norm_Y
from spiralsheet.errors import ContractError, DivergentTermError
from spiralsheet.singular import (SeriesTermContext, _kernel_parts, apply_I_m, evaluate_I_m,
                                  i_m_direct, p_n, q_n, q_n1, q_n2)

GRID = GridSpec()
ZERO = FieldPair.zeros(GRID)
THETAS = np.logspace(-3, 3, 13)

# max n^2 |P_n[0,0]| over n = m..8m, m = 16, 32 and the sample angles: 2.26
P_DECAY_BOUND = 3.0
# max m ||I_m p1 - I_m p2||_Y / ||p1 - p2||_X over small random pairs: 0.095
LIPSCHITZ_BOUND = 0.5


def test_q42_against_oscillatory_quadrature():
    mp.mp.dps = 20
    ref = mp.quadosc(lambda t: t**-6 * mp.expj(4 * (t - 1)), [1, mp.inf], omega=4)
    assert abs(q_n2(ZERO, 4, 1.0) - complex(ref)) <= 1e-8 * abs(complex(ref))


def _osc(f, a, b, w):
    """mpmath quadrature split at every period of the phase."""
    pts = mp.linspace(a, b, max(int(abs(b - a) * w / math.pi), 1) + 2)
    return complex(mp.quad(f, pts))


@pytest.mark.parametrize("n,theta,mu", [(8, 0.3, 1.0), (32, 5.0, 1.0), (6, 2.0, 1.5)])
def test_q_terms_against_oscillatory_quadrature(n, theta, mu):
    mp.mp.dps = 20
    w = n * theta
    end = math.exp(40 / (mu * n + 2 * mu))                    # amplitude below e^-40 beyond
    up = _osc(lambda t: t ** (-mu * n - 2 * mu) * mp.expj(w * (t - 1)), 1, end, w)
    lo = _osc(lambda t: t ** (mu * n - 2 * mu) * mp.expj(w * (1 - t)), 0, 1, w)
    scale = theta ** (1 - 2 * mu)
    assert abs(q_n2(ZERO, n, theta, mu) - scale * up) <= 1e-8 * abs(scale * up)
    assert abs(q_n1(ZERO, n, theta, mu) - scale * lo) <= 1e-8 * abs(scale * lo)


@pytest.mark.parametrize("n", [4, 16, 64])
def test_q2_modulus_bound(n):
    mu = 1.0
    bound = THETAS ** (1 - 2 * mu) / (mu * n + 2 * mu - 1)
    assert np.all(np.abs(q_n2(ZERO, n, THETAS, mu)) <= bound * (1 + 1e-12))


def test_p_decay_ratio():
    ratio = np.abs(p_n(ZERO, 64, THETAS)) / np.abs(p_n(ZERO, 32, THETAS))
    assert np.all(ratio <= 0.5 * 1.2)


def test_p_definition():
    th = THETAS
    ref = (-1.0 + 1j * th) * th * (-q_n1(ZERO, 12, th) + q_n2(ZERO, 12, th))
    np.testing.assert_allclose(p_n(ZERO, 12, th), ref, rtol=1e-12)
    np.testing.assert_allclose(q_n(ZERO, 12, th), -q_n1(ZERO, 12, th) + q_n2(ZERO, 12, th), rtol=1e-12)


@pytest.mark.parametrize("m", [16, 32])
def test_p_decays_like_inverse_square(m):
    vals = [np.max(n**2 * np.abs(p_n(ZERO, n, THETAS))) for n in range(m, 8 * m + 1, m)]
    assert max(vals) <= P_DECAY_BOUND


def test_p_weighted_at_theta_max():
    th = GRID.theta_max
    assert math.isfinite(math.sqrt(1 + th**2) ** 0.5 * abs(p_n(ZERO, 32, th)))


def test_divergent_term_index():
    with pytest.raises(DivergentTermError):
        q_n1(ZERO, 1, 1.0, mu=1.0)
    with pytest.raises(ContractError):
        q_n1(FieldPair.zeros(GRID, IMAGE), 4, 1.0)


def test_smallness_scaling():
    ms = np.array([16, 32, 64])
    norms = [norm_Y(apply_I_m(ZERO, Params(m=int(m))), 1.0, 0.5) for m in ms]
    slope = np.polyfit(np.log(ms), np.log(norms), 1)[0]
    assert abs(slope + 2) <= 0.3


@pytest.mark.parametrize("theta", [0.5, 1.0, 5.0])
def test_series_vs_direct_on_zero(theta):
    res = evaluate_I_m(ZERO, Params(m=32))
    i = int(np.argmin(abs(np.log(GRID.nodes / theta))))
    direct = i_m_direct(ZERO, GRID.nodes[i], 32, tol=1e-9)
    assert abs(res.values[i] - direct) <= 1e-4 * abs(direct)


@pytest.mark.parametrize("theta", [0.5, 1.0, 5.0])
def test_series_vs_direct_on_solution(report32, theta):
    x = report32.x
    res = evaluate_I_m(x, report32.params)
    i = int(np.argmin(abs(np.log(GRID.nodes / theta))))
    direct = i_m_direct(x, GRID.nodes[i], 32, tol=1e-9)
    assert abs(res.values[i] - direct) <= 1e-4 * abs(direct)


def test_direct_tolerance_controls_change():
    a = i_m_direct(ZERO, 1.0, 32, tol=1e-6)
    b = i_m_direct(ZERO, 1.0, 32, tol=1e-10)
    assert abs(a - b) <= 1e-5 * abs(b)


def test_direct_integrand_has_simple_pole():
    theta = 1.0
    F = _kernel_parts(SeriesTermContext.from_pair(ZERO, 1.0), theta, 32)
    d = np.logspace(-7, -4, 12)
    for side in (1, -1):
        slope = np.polyfit(np.log(d), np.log(np.abs(F(theta + side * d))), 1)[0]
        assert abs(slope + 1) <= 0.05


@pytest.mark.parametrize("seed", [0, 1])
def test_lipschitz_in_m(seed):
    rng = np.random.default_rng(seed)
    p1, p2 = (q * (0.01 / norm_X(q, 1.0, 0.5))
              for q in (random_smooth_pair(GRID, 1.0, rng), random_smooth_pair(GRID, 1.0, rng)))
    for m in (16, 32):
        P = Params(m=m)
        gap = norm_Y(apply_I_m(p1, P) - apply_I_m(p2, P), 1.0, 0.5)
        assert gap <= LIPSCHITZ_BOUND / m * norm_X(p1 - p2, 1.0, 0.5)


def test_series_reports_diagnostics():
    res = evaluate_I_m(ZERO, Params(m=32))
    assert not res.truncated and 3 <= res.terms <= 64
    assert res.tail_uncertainty <= 1e-8 * norm_Y(res.image, 1.0, 0.5) * 10


def test_series_cap_warns():
    with pytest.warns(RuntimeWarning):
        res = evaluate_I_m(ZERO, Params(m=32, series_cap=3))
    assert res.truncated
