"""Named invariant suites, shared by ``spiralsheet check`` and the test-suite.

Each suite returns a list of :class:`CheckResult` rows holding the measured
quantity, its bound and the verdict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import DOMAIN, FieldPair, GridSpec, Params, make_field, norm_X, norm_Y
from .geometry import SpiralSolution, asymptotics, theta_of_gamma, theta_of_radius
from .kaden import KadenProfile
from .linear import apply_L, apply_M
from .nonlinear import apply_N, invert_N
from .singular import evaluate_I_m, i_m_direct
from .solver import SolveReport, main_equation_check, solve
from .velocity import circulation, flux, near_center_check, v_m

__all__ = ["CheckResult", "CheckContext", "SUITES", "run_suite", "random_smooth_pair"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    measured: float
    bound: float
    passed: bool
    relation: str = "<="


def _le(name, measured, bound):
    return CheckResult(name, float(measured), float(bound), bool(measured <= bound))


def random_smooth_pair(grid: GridSpec, mu: float, rng: np.random.Generator,
                       scale: float = 1e-2) -> FieldPair:
    """A random decaying domain pair r = θ^-μ U, γ = θ^(1-2μ) V with analytic
    derivatives; U and V mix exponential and algebraic decay."""
    a1, a2, a3, a4 = rng.normal(size=4)
    s1, s2 = np.exp(rng.uniform(-1, 1, 2))
    q = rng.uniform(1, 3)

    def U(t):
        return a1 * np.exp(-t / s1) + a2 / (1 + t / s2) ** q

    def dU(t):
        return -a1 / s1 * np.exp(-t / s1) - a2 * q / s2 / (1 + t / s2) ** (q + 1)

    def V(t):
        return a3 * t / (1 + t) ** 2 * np.exp(-t / s2) + a4 / (1 + t) ** 2

    def dV(t):
        return (a3 * np.exp(-t / s2) * ((1 - t) / (1 + t) ** 3 - t / s2 / (1 + t) ** 2)
                - 2 * a4 / (1 + t) ** 3)

    r = make_field(lambda t: scale * t**-mu * U(t), grid,
                   lambda t: scale * (-mu * t ** (-mu - 1) * U(t) + t**-mu * dU(t)))
    g = make_field(lambda t: scale * t ** (1 - 2 * mu) * V(t), grid,
                   lambda t: scale * ((1 - 2 * mu) * t ** (-2 * mu) * V(t)
                                      + t ** (1 - 2 * mu) * dV(t)))
    return FieldPair(r, g)


@dataclass
class CheckContext:
    """Inputs of a suite run; the solution is computed on first use."""

    params: Params
    seed: int = 0
    report: SolveReport | None = None
    _solution: SpiralSolution | None = field(default=None, repr=False)

    @property
    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)

    def solution(self) -> SpiralSolution:
        if self._solution is None:
            if self.report is None:
                self.report = solve(self.params)
            self._solution = SpiralSolution(self.params, self.report.x)
        return self._solution


def suite_kaden(ctx: CheckContext):
    mu = ctx.params.mu
    th = np.logspace(-2, 2, 16)
    out = []
    for c1, c2 in ((-2 * math.pi, 0.0), (-math.pi, 0.5), (-4 * math.pi, 1.0)):
        prof = KadenProfile(mu, c1, c2)
        res = float(np.max(np.abs(prof.residual(th)) / (mu * prof.r(th) ** 2)))
        out.append(_le(f"limiting residual c1={c1:.4g} c2={c2:g}", res, 1e-12))
    return out


def suite_linear(ctx: CheckContext, pairs: int = 5):
    p0 = ctx.params
    mu, al = p0.mu, p0.alpha
    rng = ctx.rng
    worst_ml = worst_lm = 0.0
    for _ in range(pairs):
        p = random_smooth_pair(p0.grid, mu, rng)
        y = apply_L(p, mu)
        worst_ml = max(worst_ml, norm_X(apply_M(y, mu) - p, mu, al) / norm_X(p, mu, al))
        worst_lm = max(worst_lm, norm_Y(apply_L(apply_M(y, mu), mu) - y, mu, al) / norm_Y(y, mu, al))
    return [_le("M∘L = Id on X (relative)", worst_ml, 1e-6),
            _le("L∘M = Id on Y (relative)", worst_lm, 1e-6)]


def suite_nonlinear(ctx: CheckContext):
    p0 = ctx.params
    mu, al = p0.mu, p0.alpha
    zero = FieldPair.zeros(p0.grid, DOMAIN)
    base = norm_Y(apply_N(zero, mu), mu, al)
    p = random_smooth_pair(p0.grid, mu, ctx.rng)
    p = p * (1.0 / norm_X(p, mu, al))
    ratios = []
    for size in (1e-2, 1e-3, 1e-4):
        q = p * size
        ratios.append(norm_Y(apply_N(q, mu) - apply_L(q, mu), mu, al) / size**2)
    spread = max(ratios) / min(ratios)
    q = p * 1e-3
    inv = invert_N(apply_N(q, mu), mu, al, tol=p0.tol_inner)
    rt = norm_X(inv.x - q, mu, al) / 1e-3
    return [_le("||N[0,0]||_Y", base, 1e-10),
            _le("quadratic remainder ratio spread", spread, 2.0),
            _le("N^-1 round trip (relative)", rt, 1e-5)]


def suite_singular(ctx: CheckContext):
    p0 = ctx.params
    x = ctx.solution().perturbation
    res = evaluate_I_m(x, p0)
    nodes = p0.grid.nodes
    worst = 0.0
    for th in (0.5, 2.0, 8.0):
        i = int(np.searchsorted(nodes, th))
        direct = i_m_direct(x, nodes[i], p0.m, p0.mu, tol=1e-9)
        worst = max(worst, abs(res.values[i] - direct) / abs(direct))
    return [_le("series vs direct principal value (relative)", worst, 1e-4)]


def suite_solver(ctx: CheckContext):
    s = ctx.solution()
    rep = ctx.report
    out = [CheckResult("converged", float(rep.converged), 1.0, bool(rep.converged), "=="),
           _le("contraction ratio", rep.ratio, 0.5),
           _le("||N[x] - I_m[x]||_Y", rep.residual, 1e-6)]
    err = float(np.max(main_equation_check(s.perturbation, s.params,
                                           [0.3, 0.7, 1, 2, 3, 5, 8, 12])))
    out.append(_le("main equation residual at 8 angles", err, 1e-3))
    return out


def suite_geometry(ctx: CheckContext):
    s = ctx.solution()
    mu = s.mu
    th = s.params.grid.nodes
    rp = float(np.max(s.r_tilde_prime(th)))
    gp = float(-np.min(s.gamma_tilde_prime(th)))
    gmax = float(np.max(s.gamma_tilde(th)))
    centre = abs(asymptotics(s)["center_limit"] - 1.0)
    slope = abs(float(th[-1] ** (mu + 1) * s.r_tilde_prime(th[-1])) + mu)
    g = -np.logspace(-3, 3, 25)
    rt = float(np.max(np.abs(s.gamma_tilde(theta_of_gamma(s, g)) - g) / np.abs(g)))
    return [CheckResult("max r̃'", rp, 0.0, rp < 0, "<"),
            CheckResult("-min γ̃'", gp, 0.0, gp < 0, "<"),
            CheckResult("max γ̃", gmax, 0.0, gmax < 0, "<"),
            _le("|θ^μ r̃ - 1| at θmax", centre, 1e-2),
            _le("|θ^(μ+1) r̃' + μ| at θmax", slope, 1e-2),
            _le("θ(γ) round trip (relative)", rt, 1e-12)]


def suite_velocity(ctx: CheckContext):
    s = ctx.solution()
    m = s.params.m
    z = 0.3 * np.exp(0.1j)
    xi = np.exp(2j * math.pi / m)
    a, b = v_m(s, np.array([z, xi * z])).v
    equi = abs(b - xi * a) / abs(a)
    rep = near_center_check(s, np.logspace(-1, -4, 7))
    worst = 0.0
    for rho in (0.05, 0.2):
        c = circulation(s, rho)
        g = abs(float(s.gamma_tilde(theta_of_radius(s, rho))))
        worst = max(worst, abs(abs(c) - g) / g)
    fl, mag = flux(s, 0.5)
    return [_le("m-fold equivariance", equi, 1e-10),
            _le("|near-centre log-slope|", abs(rep.slope), 0.2),
            _le("circulation vs |γ̃(θ0)| (relative)", worst, 1e-2),
            _le("flux / ∮|v|", abs(fl) / mag, 1e-6)]


SUITES = {
    "kaden": suite_kaden,
    "linear": suite_linear,
    "nonlinear": suite_nonlinear,
    "singular": suite_singular,
    "solver": suite_solver,
    "geometry": suite_geometry,
    "velocity": suite_velocity,
}


def run_suite(name: str, ctx: CheckContext):
    """Run one suite, or every suite for ``name == 'all'``."""
    if name == "all":
        return [row for key in SUITES for row in SUITES[key](ctx)]
    if name not in SUITES:
        raise KeyError(name)
    return SUITES[name](ctx)
