"""Outer fixed-point iteration x <- N^{-1}[I_m[x]] for the spiral perturbation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import DOMAIN, FieldPair, Params, norm_X, norm_Y
from .errors import ContractError, ContractionFailure
from .nonlinear import apply_N, invert_N
from .singular import apply_I_m, evaluate_I_m, i_m_direct

__all__ = ["SolveReport", "solve", "residual", "main_equation_check"]


@dataclass
class SolveReport:
    """Outcome of :func:`solve`.

    ``iterates`` holds the X-norm of every outer step; ``ratio`` is the
    geometric contraction estimate from the last steps above the noise floor.
    """

    params: Params
    x: FieldPair
    iterates: list
    residual: float
    converged: bool
    ratio: float
    norm: float
    series_terms: list = field(default_factory=list)
    tail_uncertainty: float = 0.0
    inner_iterations: list = field(default_factory=list)
    message: str = ""


def _contraction_ratio(steps, floor):
    usable = [s for s in steps[1:] if s > floor]
    if len(usable) < 2:
        usable = steps[1:]
    if len(usable) < 2:
        return math.nan
    q = np.array(usable[1:]) / np.array(usable[:-1])
    return float(np.exp(np.mean(np.log(q[-3:]))))


def _annotate(err: Exception, k: int) -> Exception:
    msg = err.args[0] if err.args else ""
    err.args = (f"outer iteration {k}: {msg}",) + tuple(err.args[1:])
    return err


def solve(params: Params, warm_start: FieldPair | None = None) -> SolveReport:
    """Iterate x_{k+1} = N^{-1}[I_m[x_k]] from x_0 = 0 (or ``warm_start``).

    Raises ContractionFailure when the step norm grows three times in a row
    above the round-off floor ``100 * tol_outer``.  Running out of iterations
    returns an unconverged report instead of raising.
    """
    mu, alpha = params.mu, params.alpha
    x = FieldPair.zeros(params.grid, DOMAIN) if warm_start is None else warm_start
    steps, terms, inner_its = [], [], []
    growth = 0
    spread = 0.0
    converged = False
    for k in range(1, params.max_iter_outer + 1):
        try:
            series = evaluate_I_m(x, params)
            inner = invert_N(series.image, mu, alpha, tol=params.tol_inner,
                             max_iter=params.max_iter_inner,
                             ball_radius=params.ball_radius)
        except (ContractError, ContractionFailure) as err:
            raise _annotate(err, k)
        terms.append(series.terms)
        inner_its.append(inner.iterations)
        spread = series.tail_uncertainty
        step = norm_X(inner.x - x, mu, alpha)
        if steps and step > steps[-1] and step > 100 * params.tol_outer:
            growth += 1
        else:
            growth = 0
        steps.append(step)
        x = inner.x
        if growth >= 3:
            raise ContractionFailure(
                f"outer iteration diverges for m={params.m} (steps grew three times)", steps)
        if step < params.tol_outer:
            converged = True
            break
    res = residual(x, params)
    ratio = _contraction_ratio(steps, 100 * params.tol_outer)
    msg = "converged" if converged else f"no convergence in {params.max_iter_outer} steps"
    return SolveReport(params, x, steps, res, converged, ratio, norm_X(x, mu, alpha),
                       terms, spread, inner_its, msg)


def residual(p: FieldPair, params: Params) -> float:
    """||N[p] - I_m[p]||_Y."""
    return norm_Y(apply_N(p, params.mu) - apply_I_m(p, params), params.mu, params.alpha)


def main_equation_check(p: FieldPair, params: Params, thetas) -> np.ndarray:
    """Pointwise relative error of the full self-similar equation at ``thetas``.

    The left side μr̃² + (1-2μ)(γ̃/γ̃')(r̃r̃' - i r̃²) is formed from the profile
    directly; the right side is the principal-value integral, obtained from
    the direct oracle for I_m plus the subtracted piece -γ̃(θ)/(2πi).
    """
    mu, m = params.mu, params.m
    th = np.atleast_1d(np.asarray(thetas, dtype=float))
    r, g = p.first, p.second
    rt = th**-mu + r(th)
    drt = -mu * th ** (-mu - 1) + r.deriv(th)
    gt = -2 * math.pi * th ** (1 - 2 * mu) + g(th)
    dgt = 2 * math.pi * (2 * mu - 1) * th ** (-2 * mu) + g.deriv(th)
    lhs = mu * rt**2 + (1 - 2 * mu) * (gt / dgt) * (rt * drt - 1j * rt**2)
    rhs = np.array([i_m_direct(p, t, m, mu, tol=1e-9) for t in th]) - gt / (2j * math.pi)
    return np.abs(lhs - rhs) / np.abs(lhs)
