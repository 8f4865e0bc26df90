"""The local nonlinear operator N in weighted factored form, and its inverse.

With U = θ^μ r, Ur = θ^(μ+1) r', V = θ^(2μ-1) γ, W = θ^(2μ) γ' and
k = 2π(2μ-1), the two weighted components are

    θ^(2μ) N1   = (1+U) [ (μU + Ur) + ((2μ-1)V + W)/(k + W) · (μ - Ur) ]
    θ^(2μ-1) N2 = (2μ-1)(V - 2π)/(k + W) · (1+U)^2 - (V - 2π)/(2π)

Both vanish identically at (r, γ) = 0 without cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    DOMAIN,
    IMAGE,
    FieldPair,
    SampledField,
    domain_components,
    image_from_weighted,
    norm_X,
    norm_Y,
)
from .errors import (
    ContractError,
    ContractionFailure,
    GeometryDegenerateError,
    NonConvergenceError,
    OutOfBallError,
)
from .linear import apply_L, apply_M

__all__ = ["NEvaluation", "InverseResult", "evaluate_N", "apply_N", "apply_N_remainder",
           "invert_N"]


@dataclass(frozen=True)
class NEvaluation:
    """Input pair, its image and the weighted components θ^(2μ)N1, θ^(2μ-1)N2."""

    input: FieldPair
    image: FieldPair
    weighted_first: SampledField
    weighted_second: SampledField


def _weighted_N(p: FieldPair, mu: float):
    k = 2 * math.pi * (2 * mu - 1)
    c = domain_components(p, mu)
    U, Ur, V, W = c.U.values, c.Ur.values, c.V.values, c.W.values
    den = k + W
    if np.any(den < 0.5 * k):
        i = int(np.argmin(den))
        raise OutOfBallError(
            f"2π(2μ-1) + θ^(2μ)γ' = {den[i]:.3g} at θ={p.grid.nodes[i]:.3g} "
            f"is below π(2μ-1)")
    R = 1.0 + U
    if np.any(R <= 0):
        i = int(np.argmin(R))
        raise GeometryDegenerateError(f"1 + θ^μ r = {R[i]:.3g} at θ={p.grid.nodes[i]:.3g}")
    F = R * ((mu * U + Ur) + ((2 * mu - 1) * V + W) / den * (mu - Ur))
    G = (2 * mu - 1) * (V - 2 * math.pi) / den * R**2 - (V - 2 * math.pi) / (2 * math.pi)
    return F, G, (U, Ur, V, W)


def evaluate_N(p: FieldPair, mu: float) -> NEvaluation:
    """Evaluate N and keep the weighted components."""
    if p.kind != DOMAIN:
        raise ContractError("apply_N needs a domain-X pair")
    F, G, _ = _weighted_N(p, mu)
    image = image_from_weighted(p.grid, mu, F, G)
    grid = p.grid
    return NEvaluation(p, image, SampledField.from_samples(grid, F),
                       SampledField.from_samples(grid, G))


def apply_N(p: FieldPair, mu: float) -> FieldPair:
    """N[r, γ] as an image pair (f, g)."""
    return evaluate_N(p, mu).image


def apply_N_remainder(p: FieldPair, mu: float) -> FieldPair:
    """N - L, evaluated in weighted form to avoid a second differencing pass."""
    if p.kind != DOMAIN:
        raise ContractError("needs a domain-X pair")
    k = 2 * math.pi * (2 * mu - 1)
    F, G, (U, Ur, V, W) = _weighted_N(p, mu)
    FL = mu * U + Ur + (mu / k) * ((2 * mu - 1) * V + W)
    GL = -2.0 * U + W / k
    return image_from_weighted(p.grid, mu, F - FL, G - GL)


@dataclass
class InverseResult:
    """Outcome of the inner fixed-point solve N[x] = y."""

    x: FieldPair
    residual: float
    iterations: int
    steps: list = field(default_factory=list)


def invert_N(y: FieldPair, mu: float, alpha: float, tol: float = 1e-9,
             max_iter: int = 200, ball_radius: float = 0.1) -> InverseResult:
    """Solve N[x] = y by x_{k+1} = M[y - (N - L)(x_k)] from x_0 = 0.

    Raises ContractionFailure after three consecutive growing steps and
    NonConvergenceError when ``max_iter`` is exhausted.  Steps below
    ``100*tol`` sit at the round-off floor of the weighted derivative terms
    and never count as growth.
    """
    if y.kind != IMAGE:
        raise ContractError("invert_N needs an image-Y pair")
    size = norm_Y(y, mu, alpha)
    if size > ball_radius:
        raise OutOfBallError(f"||y||_Y = {size:.3g} exceeds the ball radius {ball_radius:.3g}")
    x = FieldPair.zeros(y.grid, DOMAIN)
    if size == 0:
        return InverseResult(x, 0.0, 1, [0.0])
    steps = []
    growth = 0
    for it in range(1, max_iter + 1):
        x_new = apply_M(y - apply_N_remainder(x, mu), mu)
        step = norm_X(x_new - x, mu, alpha)
        if steps and step > steps[-1] and step > 100 * tol:
            growth += 1
        else:
            growth = 0
        steps.append(step)
        x = x_new
        if growth >= 3:
            raise ContractionFailure("inner iteration diverges", steps)
        if step < tol:
            res = norm_Y(apply_N(x, mu) - y, mu, alpha)
            return InverseResult(x, res, it, steps)
    raise NonConvergenceError(f"inner iteration did not converge in {max_iter} steps", steps)
