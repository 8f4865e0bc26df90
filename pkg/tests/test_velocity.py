import json
import math

import numpy as np
import pytest

from spiralsheet.core import DOMAIN, FieldPair, Params
from spiralsheet.errors import DomainError
from spiralsheet.geometry import SpiralSolution, asymptotics, theta_of_radius
from spiralsheet.velocity import (DiskBump, RadialBump, circulation, export_field, flux,
                                  near_center_check, u_m, v_m, weak_residual)

# sup |v(z)| / |z|^(1-1/μ) over 1e-4 <= |z| <= 1e2 and 8 angles at m = 32: 1.03
GROWTH_BOUND = 1.5


def kaden(m):
    p = Params(m=m)
    return SpiralSolution(p, FieldPair.zeros(p.grid, DOMAIN))


def vortex_sum(m, z, count=100_000, lo=1e-3, hi=1e4):
    """v at z from `count` point vortices carrying dγ0 along all m arms (μ = 1).

    Sheet mass inside θ > hi is lumped into one vortex at the origin; the
    part outside θ < lo sits beyond |w| = 1000 and is dropped.
    """
    per = count // m
    h = (math.log(hi) - math.log(lo)) / per
    th = np.exp(math.log(lo) + h * (np.arange(per) + 0.5))
    dg = 2 * math.pi / th * h                      # γ0' dθ with dθ = θ h
    w = np.exp(1j * th) / th
    vs = sum(np.sum(dg / (z - w * np.exp(2j * math.pi * k / m))) for k in range(m)) / m
    vs += (2 * math.pi / hi) / z
    return np.conj(vs / (2j * math.pi))


def test_kaden_against_vortex_sum():
    ref = vortex_sum(4, 0.5)
    got = v_m(kaden(4), 0.5).v
    assert abs(got - ref) <= 1e-3 * abs(ref)


def test_series_against_quadrature(spiral32):
    z = 0.4 * np.exp(0.7j)
    a = v_m(spiral32, z).v
    b = v_m(spiral32, z, method="quadrature").v
    assert abs(a - b) <= 1e-6 * abs(b)


def test_m_fold_equivariance(spiral32):
    xi = np.exp(2j * math.pi / 32)
    z = np.array([0.3 * np.exp(0.1j), 2.0 * np.exp(-1.3j), 0.01j])
    a = v_m(spiral32, z).v
    b = v_m(spiral32, xi * z).v
    assert np.max(np.abs(b - xi * a) / np.abs(a)) <= 1e-10


def test_growth_bound(spiral32):
    mu = spiral32.mu
    z = np.logspace(-4, 2, 61)[:, None] * np.exp(1j * np.linspace(0, 2 * math.pi, 8, endpoint=False))
    ratio = np.abs(v_m(spiral32, z).v) / np.abs(z) ** (1 - 1 / mu)
    assert np.max(ratio) <= GROWTH_BOUND


def test_zero_is_rejected(spiral32):
    with pytest.raises(DomainError):
        v_m(spiral32, 0.0)
    with pytest.raises(DomainError):
        v_m(spiral32, 1.0, method="nearest")


def test_near_center(spiral32):
    rep = near_center_check(spiral32, np.logspace(-1, -4, 13))
    assert rep.passed and abs(rep.slope) <= 0.2
    assert rep.leading_fraction > 0.99


def test_theta0_root(spiral32):
    z = 1e-4 * np.exp(0.3j)
    th0 = v_m(spiral32, z).theta0
    assert abs(spiral32.r_tilde(th0) - abs(z)) <= 1e-12 * abs(z)


@pytest.mark.parametrize("rho", [0.05, 0.2])
def test_circulation_matches_sheet_mass(spiral32, rho):
    c = circulation(spiral32, rho)
    g = float(spiral32.gamma_tilde(theta_of_radius(spiral32, rho)))
    assert abs(abs(c) - abs(g)) <= 1e-2 * abs(g)


def test_circulation_grows_with_radius(spiral32):
    vals = [abs(circulation(spiral32, rho)) for rho in (0.05, 0.2, 0.5, 1.0, 2.0)]
    assert np.all(np.diff(vals) > 0)


def test_circulation_start_angle(spiral32):
    ref = circulation(spiral32, 0.2)
    for j in (1, 5, 17):
        assert abs(circulation(spiral32, 0.2, start=2 * math.pi * j / 32) - ref) <= 1e-10 * abs(ref)
    assert abs(circulation(spiral32, 0.2, start=0.3) - ref) <= 1e-6 * abs(ref)


def _gap_centre(s, rho):
    th0 = float(theta_of_radius(s, rho))
    return rho * np.exp(1j * (th0 - math.pi / s.params.m))


def test_irrotational_between_turns(spiral32):
    c, rad = _gap_centre(spiral32, 0.5), 0.002
    circ = circulation(spiral32, rad, centre=c, nodes=1024)
    assert abs(circ) <= 1e-4 * 2 * math.pi * rad * abs(v_m(spiral32, c).v)


@pytest.mark.parametrize("centre,rad", [(0.0, 0.5), ("gap", 0.002)])
def test_divergence_free(spiral32, centre, rad):
    c = _gap_centre(spiral32, 0.5) if centre == "gap" else centre
    fl, mag = flux(spiral32, rad, centre=c, nodes=1024)
    assert abs(fl) <= 1e-6 * mag


def test_weak_residual_radial(spiral32):
    assert weak_residual(spiral32, RadialBump(0.2, 0.8)) <= 1e-2


def test_weak_residual_off_sheet(spiral32):
    bump = DiskBump(_gap_centre(spiral32, 0.5), 0.004)
    assert weak_residual(spiral32, bump, n_r=256, n_phi=256) <= 1e-3


def test_weak_residual_scale_invariant(spiral32):
    a = weak_residual(spiral32, RadialBump(0.1, 0.4), n_r=128, n_phi=256)
    b = weak_residual(spiral32, RadialBump(0.1, 0.4, amplitude=7.0), n_r=128, n_phi=256)
    assert a == pytest.approx(b, rel=1e-10)


def test_weak_residual_support_checked(spiral32):
    with pytest.raises(DomainError):
        weak_residual(spiral32, RadialBump(1.0, 2e4))
    with pytest.raises(DomainError):
        DiskBump(0.1, 0.2)


def test_u_at_unit_time(spiral32):
    x = np.array([0.3 + 0.2j, -1.5j])
    np.testing.assert_allclose(u_m(spiral32, 1.0, x), v_m(spiral32, x).v, rtol=1e-13)


def test_u_scaling(spiral32):
    mu = spiral32.mu
    x = 0.37 * np.exp(0.9j)
    assert u_m(spiral32, 4.0, 4**mu * x) == pytest.approx(4 ** (mu - 1) * v_m(spiral32, x).v, rel=1e-12)


def test_u_initial_against_ray_sum(spiral32):
    s, m, mu = spiral32, 32, spiral32.mu
    d = asymptotics(s)["d_m"]
    c = (2 * mu - 1) / mu * d ** (-(2 * mu - 1) / mu)
    x = 0.5 * np.exp(1j * math.pi / m)              # halfway between two rays
    n, lo, hi = 100_000 // m, math.log(1e-8), math.log(1e3)
    h = (hi - lo) / n
    r = np.exp(lo + h * (np.arange(n) + 0.5))
    dG = c * r ** (1 - 1 / mu) * r * h
    vs = sum(np.sum(dG / (x - r * np.exp(2j * math.pi * k / m))) for k in range(m)) / m
    vs += -c * x ** (m - 1) * 1e3 ** (2 - 1 / mu - m) / (m - 2 + 1 / mu)   # rays beyond r = 1000
    ref = np.conj(vs / (2j * math.pi))
    assert abs(u_m(s, 0.0, x) - ref) <= 1e-3 * abs(ref)


def test_negative_time_rejected(spiral32):
    with pytest.raises(DomainError):
        u_m(spiral32, -1.0, 0.5)


def test_export_field_rows(spiral32):
    text = export_field(spiral32, resolution=128)
    lines = text.splitlines()
    assert lines[0] == "x,y,vx,vy" and len(lines) - 1 == 128 * 128
    assert all(len(ln.split(",")) == 4 for ln in lines[1:])


def test_export_field_json_marks_origin(spiral32):
    doc = json.loads(export_field(spiral32, window=(-1, 1, -1, 1), resolution=5, format="json"))
    assert doc["vx"][2][2] is None and "threads" not in doc["params"]
