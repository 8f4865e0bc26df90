import math
import pickle

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spiralsheet.core import (DOMAIN, IMAGE, FieldPair, GridSpec, Params, PowerLaw, SampledField,
                              japanese, make_field, norm_gk, norm_X, norm_Y, seminorm_parts)
from spiralsheet.errors import ConfigError, ContractError, DomainError, FieldConstructionError

GRID = GridSpec()


def brute_norm(f, k, alpha):
    """Dense-grid oracle: 2000 upper points x 500 gaps below them."""
    t1 = np.logspace(-4, math.log10(60), 2000)[:, None]
    gap = np.logspace(-7, 0, 500, endpoint=False)[None, :]
    t2 = t1 - gap
    ok = t2 > 0
    q = np.where(ok, japanese(t1) ** (k + alpha) * np.abs(f(t1) - f(np.where(ok, t2, 1.0)))
                 / gap**alpha, 0.0)
    tt = np.logspace(-4, 4, 10**6)
    return float(np.max(japanese(tt) ** alpha * np.abs(f(tt))) + q.max())


# ---------------------------------------------------------------- parameters

def test_params_defaults():
    p = Params()
    assert (p.mu, p.alpha, p.m) == (1.0, 0.5, 32)
    assert p.grid == GridSpec()


@pytest.mark.parametrize("bad", [dict(mu=0.5), dict(alpha=0.0), dict(alpha=1.0), dict(m=1),
                                 dict(tol_inner=0.0), dict(series_cap=0), dict(ball_radius=-1.0)])
def test_params_rejects(bad):
    with pytest.raises(DomainError):
        Params(**bad)


@pytest.mark.parametrize("bad", [dict(theta_min=0.0), dict(theta_min=2.0, theta_max=1.0),
                                 dict(n_nodes=8)])
def test_grid_rejects(bad):
    with pytest.raises(DomainError):
        GridSpec(**bad)


def test_params_dict_round_trip():
    p = Params(mu=1.5, m=8, grid=GridSpec(1e-3, 1e3, 256, tail_exponent=-2.0))
    assert Params.from_dict(p.to_dict()) == p
    assert "threads" not in p.to_dict(threads=False)
    with pytest.raises(ConfigError):
        Params.from_dict({**p.to_dict(), "colour": 1})


def test_nodes_log_uniform():
    th = GRID.nodes
    assert th.size == GRID.n_nodes
    assert th[0] == pytest.approx(1e-4, rel=1e-14) and th[-1] == pytest.approx(1e4, rel=1e-14)
    np.testing.assert_allclose(np.diff(np.log(th)), GRID.log_step, rtol=1e-9)


# -------------------------------------------------------------------- fields

def test_zero_field():
    f = make_field(lambda t: 0.0 * t, GRID)
    assert not f.values.any() and not f.derivs.any()
    assert f.head.is_zero and f.tail.is_zero
    assert f(3.7) == 0.0


def test_tail_exponent_fit():
    g = GridSpec(1e-2, 1e2, 512)
    f = make_field(lambda t: 1 / t, g)
    assert abs(f.tail.exponent + 1) <= 1e-3


def test_sample_on_node_is_exact():
    g = GridSpec(1e-2, 1e2, 513)           # θ = 1 is node 256
    f = make_field(lambda t: np.exp(-t), g, lambda t: -np.exp(-t))
    assert f(1.0) == pytest.approx(math.exp(-1), rel=1e-15)


def test_interpolation_and_tail():
    f = make_field(lambda t: t**-2.0, GRID, lambda t: -2 * t**-3.0)
    for th in (0.3217, 1.7, 55.5):
        assert f(th) == pytest.approx(th**-2, rel=1e-8)
        assert f.deriv(th) == pytest.approx(-2 * th**-3, rel=1e-6)
    far = 10 * GRID.theta_max
    assert abs(f(far) - far**-2) <= 1e-3 * far**-2


def test_seams_continuous():
    tol = Params().tol_quad
    f = make_field(lambda t: np.exp(-t) / (1 + t), GRID)
    for edge in (GRID.theta_min, GRID.theta_max):
        a, b = f(edge * (1 - 1e-12)), f(edge * (1 + 1e-12))
        assert abs(a - b) <= tol * max(abs(a), 1e-300)


def test_field_rejects_bad_samples():
    with pytest.raises(FieldConstructionError):
        make_field(lambda t: np.log(t - 1.0), GRID)
    with pytest.raises(FieldConstructionError):
        SampledField(GRID, np.zeros(3), np.zeros(3))
    with pytest.raises(DomainError):
        make_field(np.exp, GridSpec(1e-2, 1e2, 64))(-1.0)


def test_field_is_immutable_and_picklable():
    f = make_field(lambda t: np.exp(-t), GRID)
    with pytest.raises(AttributeError):
        f.values = None
    with pytest.raises(ValueError):
        f.values[0] = 1.0
    g = pickle.loads(pickle.dumps(f))
    assert np.array_equal(g.values, f.values) and g.tail == f.tail


def test_weighted_keeps_exact_derivative():
    f = make_field(lambda t: np.exp(-t), GRID, lambda t: -np.exp(-t))
    w = f.weighted(2.0)
    th = GRID.nodes
    np.testing.assert_allclose(w.derivs, (2 * th - th**2) * np.exp(-th), rtol=1e-12, atol=1e-300)
    assert w.tail.exponent == pytest.approx(f.tail.exponent + 2.0)


def test_power_law():
    p = PowerLaw(3.0, -2.0)
    assert p(2.0) == pytest.approx(0.75)
    assert p.deriv(2.0) == pytest.approx(-0.75)


# --------------------------------------------------------------------- norms

def test_norm_of_zero():
    z = SampledField.zeros(GRID)
    assert norm_gk(z, 1, 0.5) == 0.0
    assert norm_X(FieldPair.zeros(GRID), 1.0, 0.5) == 0.0
    assert norm_Y(FieldPair.zeros(GRID, IMAGE), 1.0, 0.5) == 0.0


def test_sup_term_of_bracket_inverse():
    alpha = 0.5
    f = make_field(lambda t: japanese(t) ** -alpha, GRID)
    sup_term = seminorm_parts(f, 0, alpha)[0]
    assert sup_term == pytest.approx(1.0, abs=1e-12)


def test_norm_gk_vs_dense_oracle():
    f = make_field(lambda t: np.exp(-t), GRID, lambda t: -np.exp(-t))
    est = norm_gk(f, 1, 0.5)
    ref = brute_norm(lambda t: np.exp(-t), 1, 0.5)
    assert abs(est - ref) <= 0.05 * ref


def test_norm_X_vs_dense_oracle():
    r = make_field(lambda t: np.exp(-t) / t, GRID, lambda t: -np.exp(-t) * (1 / t + 1 / t**2))
    p = FieldPair(r, SampledField.zeros(GRID))
    ref = brute_norm(lambda t: np.exp(-t), 1, 0.5) + brute_norm(lambda t: -(1 + t) * np.exp(-t), 0, 0.5)
    est = norm_X(p, 1.0, 0.5)
    assert math.isfinite(est) and abs(est - ref) <= 0.05 * ref


def test_norm_gk_rejects_negative_order():
    with pytest.raises(DomainError):
        norm_gk(SampledField.zeros(GRID), -1, 0.5)


def test_pair_kind_checks():
    z = FieldPair.zeros(GRID, DOMAIN)
    with pytest.raises(ContractError):
        norm_Y(z, 1.0, 0.5)
    with pytest.raises(ContractError):
        z + FieldPair.zeros(GRID, IMAGE)
    with pytest.raises(ContractError):
        FieldPair(z.first, SampledField.zeros(GridSpec(1e-2, 1e2, 64)))


_SMALL = GridSpec(1e-3, 1e3, 256)


@st.composite
def smooth_pairs(draw):
    a, b = draw(st.floats(-2, 2)), draw(st.floats(-2, 2))
    s = draw(st.floats(0.2, 5))
    r = make_field(lambda t: a * np.exp(-t / s) / t, _SMALL,
                   lambda t: -a * np.exp(-t / s) * (1 / (s * t) + 1 / t**2))
    g = make_field(lambda t: b / (1 + t) ** 2, _SMALL, lambda t: -2 * b / (1 + t) ** 3)
    return FieldPair(r, g)


@settings(max_examples=30, deadline=None)
@given(smooth_pairs(), st.floats(-10, 10))
def test_norm_X_homogeneous(p, c):
    assert norm_X(p * c, 1.0, 0.5) == pytest.approx(abs(c) * norm_X(p, 1.0, 0.5), rel=1e-12, abs=1e-300)


@settings(max_examples=30, deadline=None)
@given(smooth_pairs(), smooth_pairs())
def test_norm_X_triangle(p, q):
    assert norm_X(p + q, 1.0, 0.5) <= norm_X(p, 1.0, 0.5) + norm_X(q, 1.0, 0.5) + 1e-12


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 0.9), st.floats(-3, 3))
def test_norm_gk_homogeneous(alpha, c):
    f = make_field(lambda t: np.sin(t) / (1 + t**2), _SMALL)
    assert norm_gk(f * c, 0, alpha) == pytest.approx(abs(c) * norm_gk(f, 0, alpha), rel=1e-12, abs=1e-300)
