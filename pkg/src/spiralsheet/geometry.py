"""Sheet reconstruction: θ <-> γ maps, the spiral curve, its time evolution,
far-field constants and curve export."""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .core import FieldPair, Params, domain_components
from .errors import DomainError, GeometryDegenerateError

__all__ = ["SpiralSolution", "theta_of_gamma", "theta_of_radius", "z_of_gamma", "Z", "asymptotics",
           "gamma_samples", "export_curve"]


@dataclass(frozen=True)
class SpiralSolution:
    """Full profile r̃ = r0 + r, γ̃ = γ0 + γ built from a solved perturbation."""

    params: Params
    perturbation: FieldPair

    def __post_init__(self):
        self.check_invariants()

    @property
    def mu(self) -> float:
        return self.params.mu

    def r_tilde(self, theta):
        th = np.asarray(theta, dtype=float)
        return th ** (-self.mu) + self.perturbation.first(th)

    def r_tilde_prime(self, theta):
        th = np.asarray(theta, dtype=float)
        return -self.mu * th ** (-self.mu - 1) + self.perturbation.first.deriv(th)

    def gamma_tilde(self, theta):
        th = np.asarray(theta, dtype=float)
        return -2 * math.pi * th ** (1 - 2 * self.mu) + self.perturbation.second(th)

    def gamma_tilde_prime(self, theta):
        th = np.asarray(theta, dtype=float)
        mu = self.mu
        return 2 * math.pi * (2 * mu - 1) * th ** (-2 * mu) + self.perturbation.second.deriv(th)

    def check_invariants(self) -> None:
        """r̃ decreasing, γ̃ increasing and negative, γ̃' > 0 on the grid."""
        mu = self.mu
        c = domain_components(self.perturbation, mu)
        k = 2 * math.pi * (2 * mu - 1)
        if np.any(np.abs(c.W.values) >= k):
            raise GeometryDegenerateError("|θ^(2μ) γ'| reaches 2π(2μ-1); γ̃ is not monotone")
        th = self.params.grid.nodes
        if np.any(self.r_tilde_prime(th) >= 0):
            raise GeometryDegenerateError("r̃ is not strictly decreasing")
        if np.any(self.gamma_tilde_prime(th) <= 0) or np.any(self.gamma_tilde(th) >= 0):
            raise GeometryDegenerateError("γ̃ is not strictly increasing and negative")


def _invert_log(f, fprime, x0, target_scale):
    """Solve f(ln θ) = 0 for an increasing f, vectorised, from the guess x0.

    Expands a bracket around x0, then runs Newton in ln θ with a bisection
    safeguard until |f| <= 1e-12 * target_scale.
    """
    x = np.array(x0, dtype=float)
    lo, hi = x - 0.5, x + 0.5
    for _ in range(200):
        bad = f(lo) > 0
        if not bad.any():
            break
        lo = np.where(bad, lo - 1.0, lo)
    for _ in range(200):
        bad = f(hi) < 0
        if not bad.any():
            break
        hi = np.where(bad, hi + 1.0, hi)
    x = np.clip(x, lo, hi)
    for _ in range(100):
        fx = f(x)
        done = np.abs(fx) <= 1e-12 * target_scale
        if done.all():
            break
        lo = np.where(fx < 0, x, lo)
        hi = np.where(fx > 0, x, hi)
        nx = x - fx / fprime(x)
        outside = (nx <= lo) | (nx >= hi) | ~np.isfinite(nx)
        nx = np.where(outside, 0.5 * (lo + hi), nx)
        x = np.where(done, x, nx)
    out = np.exp(x)
    return out[()] if out.ndim == 0 else out


def theta_of_gamma(s: SpiralSolution, gamma):
    """Invert γ̃(θ) = γ for γ < 0 (vectorised), seeded by the base-spiral
    inverse; |γ̃(θ) - γ| <= 1e-12 |γ| on return."""
    g = np.asarray(gamma, dtype=float)
    if np.any(~(g < 0)):
        raise DomainError("gamma must be negative")
    mu = s.mu
    x0 = np.log(-g / (2 * math.pi)) / (1.0 - 2.0 * mu)
    return _invert_log(lambda u: s.gamma_tilde(np.exp(u)) - g,
                       lambda u: s.gamma_tilde_prime(np.exp(u)) * np.exp(u),
                       x0, np.abs(g))


def theta_of_radius(s: SpiralSolution, rho):
    """The angle θ0 with r̃(θ0) = ρ (vectorised); r̃ is decreasing."""
    r = np.asarray(rho, dtype=float)
    if np.any(~(r > 0)):
        raise DomainError("radius must be positive")
    x0 = -np.log(r) / s.mu
    return _invert_log(lambda u: r - s.r_tilde(np.exp(u)),
                       lambda u: -s.r_tilde_prime(np.exp(u)) * np.exp(u),
                       x0, r)


def z_of_gamma(s: SpiralSolution, gamma):
    """Point of the sheet carrying circulation parameter γ."""
    th = theta_of_gamma(s, gamma)
    return s.r_tilde(th) * np.exp(1j * th)


def Z(s: SpiralSolution, t: float, Gamma):
    """Physical sheet position Z(t, Γ) = t^μ z(t^(1-2μ) Γ); t = 0 uses the
    limiting power law d_m (-Γ)^(μ/(2μ-1)) on the positive real axis."""
    mu = s.mu
    G = np.asarray(Gamma, dtype=float)
    if t < 0:
        raise DomainError("t must be non-negative")
    if np.any(~(G < 0)):
        raise DomainError("Gamma must be negative")
    if t == 0:
        d = asymptotics(s)["d_m"]
        out = (d * (-G) ** (mu / (2 * mu - 1))).astype(complex)
    else:
        out = t**mu * z_of_gamma(s, t ** (1 - 2 * mu) * G)
    return out[()] if np.ndim(out) == 0 else out


def asymptotics(s: SpiralSolution) -> dict:
    """Far-field constants a_m, b_m, d_m, β_m and the centre limit of θ^μ r̃."""
    mu = s.mu
    c = domain_components(s.perturbation, mu)
    a = 1.0 + float(c.U.values[0])
    b = 2 * math.pi - float(c.V.values[0])
    d = a * b ** (-mu / (2 * mu - 1))
    return {"a_m": a, "b_m": b, "d_m": d, "beta_m": d ** (2 * mu - 1),
            "center_limit": 1.0 + float(c.U.values[-1])}


def gamma_samples(s: SpiralSolution, t: float, n_gamma: int = 400, decades: float = 8.0):
    """Log-spaced negative Γ over ``decades`` decades centred where θ(γ) = 1."""
    mu = s.mu
    centre = -float(s.gamma_tilde(1.0))
    if t > 0:
        centre *= t ** (2 * mu - 1)
    half = 0.5 * decades
    mags = centre * np.logspace(-half, half, n_gamma)
    return -mags[::-1]


def _branches(s: SpiralSolution, t, gammas, branches):
    m = s.params.m
    base = Z(s, t, gammas)
    return [np.exp(2j * math.pi * k / m) * base for k in branches]


def export_curve(s: SpiralSolution, t: float = 1.0, k_branches=None, format: str = "csv",
                 n_gamma: int = 400, path=None) -> str:
    """Render branches ξ_m^k Z(t, Γ) as CSV, SVG or JSON text.

    ``k_branches`` defaults to all m branches.  When ``path`` is given the
    document is also written there.
    """
    fmt = format.lower()
    if fmt not in ("csv", "svg", "json"):
        raise DomainError(f"unknown format {format!r}")
    m = s.params.m
    ks = list(range(m)) if k_branches is None else [int(k) for k in k_branches]
    gammas = gamma_samples(s, t, n_gamma)
    curves = _branches(s, t, gammas, ks)
    if fmt == "csv":
        buf = io.StringIO()
        buf.write("branch,Gamma,x,y\n")
        gl = gammas.tolist()
        for k, zc in zip(ks, curves):
            for G, x, y in zip(gl, zc.real.tolist(), zc.imag.tolist()):
                buf.write(f"{k},{G!r},{x!r},{y!r}\n")
        text = buf.getvalue()
    elif fmt == "json":
        doc = {
            "params": s.params.to_dict(threads=False),
            "t": t,
            "gamma": gammas.tolist(),
            "branches": [[[float(zz.real), float(zz.imag)] for zz in zc] for zc in curves],
            "branch_index": ks,
            "asymptotics": asymptotics(s),
        }
        text = json.dumps(doc, sort_keys=True, indent=1) + "\n"
    else:
        text = _svg(curves)
    if path is not None:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    return text


def _svg(curves, size=800) -> str:
    pts = np.concatenate(curves)
    xmin, xmax = float(pts.real.min()), float(pts.real.max())
    ymin, ymax = float(-pts.imag.max()), float(-pts.imag.min())
    span = max(xmax - xmin, ymax - ymin, 1e-300)
    pad = 0.03 * span
    box = (xmin - pad, ymin - pad, span + 2 * pad, span + 2 * pad)
    width = span / 800.0
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" '
        f'height="{size}" viewBox="{box[0]:.9g} {box[1]:.9g} {box[2]:.9g} {box[3]:.9g}">',
    ]
    for zc in curves:
        coords = " ".join(f"{z.real:.9g},{-z.imag:.9g}" for z in zc)
        lines.append(f'<polyline fill="none" stroke="black" stroke-width="{width:.3g}" '
                     f'points="{coords}"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
