"""Biot-Savart velocity of the solved sheet and the checks built on it.

For z = ρ e^{iφ} let θ0 solve r̃(θ0) = ρ and y = m(θ0 - φ).  Expanding the
kernel z^{m-1}/(z^m - w^m) in powers of (w/z)^m on either side of θ0 gives

    v*(z) = (-γ̃(θ0) + J) / (2πi z),
    J = k Σ_n [e^{iny} Q_{mn,2}(θ0) - e^{-iny} Q_{mn,1}(θ0)],

with the same Q terms as the self-induced series.  Both Q's share the
endpoint asymptotic c0/N, so that part sums to a sawtooth in y in closed
form; what is left decays like n^-2 and is closed with a dilogarithm.  At
y ≡ 0 (on the sheet) the sawtooth takes its mean value, which is the
principal value.  An adaptive-quadrature evaluator of the defining integral
is kept as an independent method.
"""

from __future__ import annotations

import io
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import DomainError
from .geometry import SpiralSolution, asymptotics, theta_of_radius
from .singular import SeriesTermContext, _map_chunks, _side

__all__ = [
    "VelocitySample", "BiotSavart", "v_m", "u_m", "circulation", "flux",
    "NearCenterReport", "near_center_check", "RadialBump", "DiskBump",
    "weak_residual", "export_field",
]

_DEFAULT_TERMS = 16


@dataclass(frozen=True)
class VelocitySample:
    """Velocity v at z (scalar or array) with the pieces of v* = conj(v).

    ``leading`` is -γ̃(θ0)/(2πi z), the enclosed sheet circulation seen as a
    point vortex, and ``remainder`` is v* - leading.
    """

    z: complex
    v: complex
    theta0: float
    leading: complex
    remainder: complex


def _as_points(z):
    zz = np.asarray(z, dtype=complex)
    if np.any(zz == 0):
        raise DomainError("velocity is undefined at z = 0")
    return zz


class BiotSavart:
    """Series evaluator of v* bound to one solution.

    ``terms`` harmonics are summed explicitly after removing their common
    1/N part.  Work is shared between points of equal modulus, so circles and
    polar grids are cheap.
    """

    def __init__(self, s: SpiralSolution, terms: int = _DEFAULT_TERMS, threads: int = 1):
        if terms < 2:
            raise DomainError("need at least two series terms")
        self.s = s
        self.terms = int(terms)
        self.threads = int(threads)
        self.ctx = SeriesTermContext.from_pair(s.perturbation, s.mu)

    def _radial_tables(self, rho):
        """Per-radius data: θ0, γ̃(θ0), c0 and the de-singularised terms."""
        s, mu, m = self.s, self.s.mu, self.s.params.m
        th = np.atleast_1d(theta_of_radius(s, rho))
        weight = th ** (1 - 2 * mu)
        ell = s.r_tilde_prime(th) / s.r_tilde(th)
        gam = 1.0 + np.asarray(self.ctx.W(th)) / self.ctx.k if not self.ctx.trivial \
            else np.ones_like(th)
        c0 = -th ** (-2 * mu) * gam / (ell + 1j)
        d2 = np.empty((self.terms, th.size), dtype=complex)
        d1 = np.empty_like(d2)
        for i in range(self.terms):
            N = m * (i + 1)
            up = _map_chunks(lambda c, N=N: _side(self.ctx, N, c, True), th, self.threads)
            lo = _map_chunks(lambda c, N=N: _side(self.ctx, N, c, False), th, self.threads)
            d2[i] = weight * up - c0 / N
            d1[i] = weight * lo - c0 / N
        return th, s.gamma_tilde(th), c0, d2, d1

    def _series(self, y, c0, d2, d1, saw=True):
        """J/k for phases y (broadcast against the radial tables).

        ``saw=False`` drops the closed-form sawtooth part, whose mean over a
        centred circle is exactly zero.
        """
        m, K = self.s.params.m, self.terms
        body = np.zeros(y.shape, dtype=complex)
        partial = np.zeros(y.shape, dtype=complex)
        e1 = np.exp(1j * y)
        e = np.ones_like(e1)
        for i in range(K):
            e = e * e1                                            # e^{i(i+1)y}
            body += e * d2[i] - np.conj(e) * d1[i]
            partial += e / (i + 1) ** 2
        ym = np.mod(y, 2 * math.pi)
        on_sheet = (ym < 1e-10) | (ym > 2 * math.pi - 1e-10)
        saw = np.where(on_sheet | (not saw), 0.0, 1j * (math.pi - ym))  # Σ (e^{iny}-e^{-iny})/n
        a2 = d2[-1] * K**2
        a1 = d1[-1] * K**2
        w = np.exp(1j * ym)
        tail_p = special.spence(1 - w) - partial                 # Σ_{n>K} e^{iny}/n²
        tail_m = special.spence(1 - np.conj(w)) - np.conj(partial)
        return body + c0 / m * saw + a2 * tail_p - a1 * tail_m

    def conj_velocity(self, z, saw: bool = True):
        """Return (v*, θ0, leading) arrays shaped like z."""
        zz = _as_points(z)
        flat = zz.ravel()
        rho = np.abs(flat)
        uniq, inv = np.unique(rho, return_inverse=True)
        th, gt, c0, d2, d1 = self._radial_tables(uniq)
        th_p = th[inv]
        y = self.s.params.m * (th_p - np.angle(flat))
        J = self.ctx.k * self._series(y, c0[inv], d2[:, inv], d1[:, inv], saw)
        lead = -gt[inv] / (2j * math.pi * flat)
        vstar = lead + J / (2j * math.pi * flat)
        shape = zz.shape
        return vstar.reshape(shape), th_p.reshape(shape), lead.reshape(shape)

    def sample(self, z) -> VelocitySample:
        vstar, th, lead = self.conj_velocity(z)
        return VelocitySample(_scalar(z), _scalar(np.conj(vstar)), _scalar(th),
                              _scalar(lead), _scalar(vstar - lead))


def _scalar(a):
    a = np.asarray(a)
    return a[()] if a.ndim == 0 else a


def _quadrature_conj(s: SpiralSolution, z: complex, tol: float) -> complex:
    """v*(z) from the defining θ-integral by adaptive quadrature.

    Pieces one wavelength 2π/m long tile the window where the kernel differs
    from its limits; beyond the window the kernel is 1 (above) or below 1e-16
    (below), and the upper remainder integrates to -γ̃ in closed form.
    """
    mu, m = s.mu, s.params.m
    rho, phi = abs(z), math.atan2(z.imag, z.real)
    th0 = float(theta_of_radius(s, rho))
    lo = th0 * math.exp(-37.0 / (mu * m - 2 * mu + 1))
    hi = th0 * math.exp(37.0 / (mu * m + 2 * mu - 1))
    lr = math.log(rho)

    def kernel(t):
        lx = m * (math.log(float(s.r_tilde(t))) - lr) + 1j * m * (t - phi)
        if lx.real < 0:
            X = np.exp(lx)
            return 1.0 / (1.0 - X)
        Xi = np.exp(-lx)
        return -Xi / (1.0 - Xi)

    def f(t):
        return float(s.gamma_tilde_prime(t)) * kernel(t)

    wave = 2 * math.pi / m
    edges = np.unique(np.concatenate([np.arange(lo, hi, wave), [hi, th0]]))
    total = 0.0j
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for a, b in zip(edges[:-1], edges[1:]):
            val, _ = integrate.quad(f, a, b, complex_func=True, epsabs=0.0,
                                    epsrel=tol, limit=200)
            total += val
    total -= float(s.gamma_tilde(hi))
    return total / (2j * math.pi * z)


def v_m(s: SpiralSolution, z, method: str = "series", terms: int = _DEFAULT_TERMS,
        tol: float = 1e-10, threads: int = 1) -> VelocitySample:
    """Velocity at z (scalar or array) by the series or by adaptive quadrature.

    The quadrature method is an independent check; it resolves every
    wavelength of the sheet near θ0 and is slow for |z| << 1.  Points on the
    sheet get the principal value, which only the series method provides.
    """
    if method == "series":
        return BiotSavart(s, terms, threads).sample(z)
    if method != "quadrature":
        raise DomainError(f"unknown method {method!r}")
    zz = _as_points(z)
    flat = zz.ravel()
    vstar = np.array([_quadrature_conj(s, complex(p), tol) for p in flat]).reshape(zz.shape)
    th = theta_of_radius(s, np.abs(zz))
    lead = -s.gamma_tilde(th) / (2j * math.pi * zz)
    return VelocitySample(_scalar(zz), _scalar(np.conj(vstar)), _scalar(th),
                          _scalar(lead), _scalar(vstar - lead))


def _initial_conj(s: SpiralSolution, x):
    """v* at t = 0 from straight rays with density c r^(1-1/μ).

    With a = 2 - 1/μ and q = -x^m, the ray integral is the Mellin transform
    ∫_0^∞ u^(a/m-1)/(u+q) du = π q^(a/m-1)/sin(πa/m).
    """
    mu, m = s.mu, s.params.m
    d = asymptotics(s)["d_m"]
    c = (2 * mu - 1) / mu * d ** (-(2 * mu - 1) / mu)
    a = 2.0 - 1.0 / mu
    q = -(x**m)
    ray = -(math.pi / m) * q ** (a / m - 1) / math.sin(math.pi * a / m)
    return c / (2j * math.pi) * x ** (m - 1) * ray


def u_m(s: SpiralSolution, t: float, x, terms: int = _DEFAULT_TERMS, threads: int = 1):
    """Physical velocity u(t, x) = t^(μ-1) v(t^(-μ) x); t = 0 uses the rays."""
    if t < 0:
        raise DomainError("t must be non-negative")
    xx = _as_points(x)
    mu = s.mu
    if t == 0:
        return _scalar(np.conj(_initial_conj(s, xx)))
    vstar, _, _ = BiotSavart(s, terms, threads).conj_velocity(t ** (-mu) * xx)
    return _scalar(t ** (mu - 1) * np.conj(vstar))


def _contour(s, centre, radius, nodes, start, terms, threads):
    # a centred circle crosses the sheet m times; the jumps there all sit in
    # the sawtooth part, which integrates to zero, so only the rest is summed
    ang = start + 2 * math.pi * np.arange(nodes) / nodes
    z = centre + radius * np.exp(1j * ang)
    vstar, _, _ = BiotSavart(s, terms, threads).conj_velocity(z, saw=centre != 0)
    dz = 1j * radius * np.exp(1j * ang) * (2 * math.pi / nodes)
    return np.sum(vstar * dz), np.sum(np.abs(vstar)) * radius * 2 * math.pi / nodes


def circulation(s: SpiralSolution, rho: float, nodes: int = 4096, start: float = 0.0,
                centre: complex = 0.0, terms: int = _DEFAULT_TERMS, threads: int = 1) -> float:
    """∮ v·dl = Re ∮ v* dz over the circle |z - centre| = ρ (trapezoid rule)."""
    if rho <= 0:
        raise DomainError("radius must be positive")
    val, _ = _contour(s, centre, rho, nodes, start, terms, threads)
    return float(val.real)


def flux(s: SpiralSolution, rho: float, nodes: int = 4096, start: float = 0.0,
         centre: complex = 0.0, terms: int = _DEFAULT_TERMS, threads: int = 1):
    """Return (∮ v·n dl, ∮ |v| dl) over a circle; the first is Im ∮ v* dz."""
    if rho <= 0:
        raise DomainError("radius must be positive")
    val, mag = _contour(s, centre, rho, nodes, start, terms, threads)
    return float(val.imag), float(mag)


@dataclass
class NearCenterReport:
    radii: np.ndarray
    ratios: np.ndarray          # max over the angular fan of |remainder|/(ρ(1+|ln ρ|))
    slope: float
    max_ratio: float
    leading_fraction: float     # min |leading|/|v*| at the smallest radius
    passed: bool


def near_center_check(s: SpiralSolution, radii, fan: int = 16, slope_tol: float = 0.2,
                      terms: int = _DEFAULT_TERMS) -> NearCenterReport:
    """Bound |v* - leading| against |z|(1+|ln|z||) as |z| → 0.

    Each radius is probed on ``fan`` angles spread over one inter-arm gap, all
    off the sheet, and the worst ratio is kept.  The check passes when the
    log-log slope of the worst ratio against ρ is within ``slope_tol`` of 0.
    """
    rho = np.asarray(radii, dtype=float)
    if np.any((rho <= 0) | (rho >= 1)):
        raise DomainError("radii must lie in (0, 1)")
    m = s.params.m
    th0 = np.atleast_1d(theta_of_radius(s, rho))
    offs = (2 * math.pi / m) * (np.arange(fan) + 0.5) / fan
    z = rho[:, None] * np.exp(1j * (th0[:, None] - offs[None, :]))
    vstar, _, lead = BiotSavart(s, terms).conj_velocity(z)
    rem = np.abs(vstar - lead)
    ratios = np.max(rem, axis=1) / (rho * (1 + np.abs(np.log(rho))))
    slope = float(np.polyfit(np.log(rho), np.log(ratios), 1)[0])
    i = int(np.argmin(rho))
    frac = float(np.min(np.abs(lead[i]) / np.abs(vstar[i])))
    return NearCenterReport(rho, ratios, slope, float(ratios.max()), frac,
                            abs(slope) <= slope_tol)


def _bump(u):
    """(1-u²)^4 on |u| < 1 with b'(u) and b''(u)."""
    inside = np.abs(u) < 1
    w = np.where(inside, 1 - u * u, 0.0)
    b = w**4
    db = -8 * u * w**3
    ddb = -8 * w**3 + 48 * u * u * w**2
    return b, db, ddb


class RadialBump:
    """η(x) = A b((|x| - c)/h), supported on the annulus r_in < |x| < r_out."""

    def __init__(self, r_in: float, r_out: float, amplitude: float = 1.0):
        if not 0 < r_in < r_out:
            raise DomainError("need 0 < r_in < r_out")
        self.c, self.h, self.amplitude = 0.5 * (r_in + r_out), 0.5 * (r_out - r_in), amplitude
        self.support = (r_in, r_out, 0.0, 2 * math.pi)

    def hessian(self, x, y):
        """Return (η_x, η_y, η_xx, η_xy, η_yy)."""
        r = np.hypot(x, y)
        _, db, ddb = _bump((r - self.c) / self.h)
        er = db / self.h * self.amplitude
        err = ddb / self.h**2 * self.amplitude
        cx, cy = x / r, y / r
        over = er / r
        return (er * cx, er * cy, err * cx * cx + over * cy * cy,
                (err - over) * cx * cy, err * cy * cy + over * cx * cx)


class DiskBump:
    """η(x) = A b(|x - x0|/R), a bump on a disk that must avoid the origin."""

    def __init__(self, centre: complex, radius: float, amplitude: float = 1.0):
        centre = complex(centre)
        if not 0 < radius < abs(centre):
            raise DomainError("the disk must not contain the origin")
        self.x0, self.y0, self.R, self.amplitude = centre.real, centre.imag, radius, amplitude
        half = math.asin(radius / abs(centre))
        phi = math.atan2(centre.imag, centre.real)
        self.support = (abs(centre) - radius, abs(centre) + radius, phi - half, phi + half)

    def hessian(self, x, y):
        dx, dy = x - self.x0, y - self.y0
        u = np.hypot(dx, dy) / self.R
        inside = u < 1
        w = np.where(inside, 1 - u * u, 0.0)
        g = -8 * w**3 / self.R**2 * self.amplitude          # b'(u)/(u R²), regular at u = 0
        gp = 48 * w**2 / self.R**4 * self.amplitude         # d/dρ of g, divided by ρ
        return (g * dx, g * dy, g + gp * dx * dx, gp * dx * dy, g + gp * dy * dy)


def weak_residual(s: SpiralSolution, test, n_r: int = 512, n_phi: int = 512,
                  terms: int = _DEFAULT_TERMS) -> float:
    """Relative residual of the weak self-similar Euler identity for w = ∇⊥η.

    Integrates (3μ-1) v·w, -(v⊗v):∇w = -v_i v_j ∂_j w_i and μ v·((x·∇)w) by
    the midpoint rule on a polar grid, uniform in ln r and φ over the support
    of η, and returns |sum| / Σ ∫|term|.  Integrated magnitudes are used
    because off the sheet every term vanishes on its own.
    """
    mu = s.mu
    r0, r1, p0, p1 = test.support
    disk = float(s.r_tilde(s.params.grid.theta_min))
    if r1 > disk:
        raise DomainError(f"test support reaches |x| = {r1:.3g} beyond the disk {disk:.3g}")
    hs = (math.log(r1) - math.log(r0)) / n_r
    hp = (p1 - p0) / n_phi
    r = np.exp(math.log(r0) + hs * (np.arange(n_r) + 0.5))
    phi = p0 + hp * (np.arange(n_phi) + 0.5)
    z = r[:, None] * np.exp(1j * phi[None, :])
    x, y = z.real, z.imag
    vstar, _, _ = BiotSavart(s, terms).conj_velocity(z)
    v1, v2 = vstar.real, -vstar.imag
    ex, ey, exx, exy, eyy = test.hessian(x, y)
    w1, w2 = -ey, ex
    d1x, d1y, d2x, d2y = -exy, -eyy, exx, exy               # ∂_j w_i
    jac = (r * r)[:, None] * hs * hp
    t1 = (3 * mu - 1) * (v1 * w1 + v2 * w2)
    t2 = -(v1 * (v1 * d1x + v2 * d1y) + v2 * (v1 * d2x + v2 * d2y))
    t3 = mu * (v1 * (x * d1x + y * d1y) + v2 * (x * d2x + y * d2y))
    scale = np.sum((np.abs(t1) + np.abs(t2) + np.abs(t3)) * jac)
    if scale == 0:
        raise DomainError("test field does not meet the flow")
    return float(abs(np.sum((t1 + t2 + t3) * jac)) / scale)


def export_field(s: SpiralSolution, window=(-1.0, 1.0, -1.0, 1.0), resolution: int = 128,
                 format: str = "csv", path=None, terms: int = _DEFAULT_TERMS,
                 threads: int = 1) -> str:
    """Velocity on a uniform grid over ``window`` = (xmin, xmax, ymin, ymax).

    CSV rows run over x fastest with header x,y,vx,vy; a node at the origin
    gets NaN (JSON null).
    """
    fmt = format.lower()
    if fmt not in ("csv", "json"):
        raise DomainError(f"unknown format {format!r}")
    xmin, xmax, ymin, ymax = (float(v) for v in window)
    if not (xmin < xmax and ymin < ymax) or resolution < 2:
        raise DomainError("window must be non-empty and resolution >= 2")
    xs = np.linspace(xmin, xmax, resolution)
    ys = np.linspace(ymin, ymax, resolution)
    z = xs[None, :] + 1j * ys[:, None]
    vel = np.full(z.shape, np.nan + 1j * np.nan)
    ok = z != 0
    vstar, _, _ = BiotSavart(s, terms, threads).conj_velocity(z[ok])
    vel[ok] = np.conj(vstar)
    if fmt == "csv":
        buf = io.StringIO()
        buf.write("x,y,vx,vy\n")
        xl, yl = xs.tolist(), ys.tolist()
        vx, vy = vel.real.tolist(), vel.imag.tolist()
        for j in range(resolution):
            for i in range(resolution):
                buf.write(f"{xl[i]!r},{yl[j]!r},{vx[j][i]!r},{vy[j][i]!r}\n")
        text = buf.getvalue()
    else:
        def grid(a):
            return [[None if math.isnan(q) else float(q) for q in row] for row in a]
        doc = {"params": s.params.to_dict(threads=False), "window": [xmin, xmax, ymin, ymax],
               "resolution": resolution, "x": xs.tolist(), "y": ys.tolist(),
               "vx": grid(vel.real), "vy": grid(vel.imag)}
        text = json.dumps(doc, sort_keys=True, indent=1) + "\n"
    if path is not None:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    return text
