"""The linearisation L of the local operator at zero and its explicit inverse M.

M is assembled from the two integral operators

    A[f](θ) = ∫_θ^∞ f(t)/t dt,        B[g](θ) = (1/θ) ∫_0^θ g(t) dt,

evaluated by cumulative Hermite-corrected trapezoid sums (fourth order, using
the stored derivative samples) plus closed-form power-law end pieces.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .core import (
    DOMAIN,
    IMAGE,
    FieldPair,
    GridSpec,
    PowerLaw,
    SampledField,
    domain_components,
    image_components,
    image_from_weighted,
    pair_from_components,
)
from .errors import ContractError, IntegrabilityError

__all__ = ["LinearWorkspace", "op_A", "op_B", "apply_L", "apply_M"]


_HEAD_DEGREE = 3
_TAIL_STRIDE = 8
_TAIL_ANCHORS = 8


def _clean_power(theta, values):
    """Exponent of values if they are a single power law to 1e-8, else None."""
    if np.any(values == 0) or np.any(np.sign(values) != np.sign(values[0])):
        return None
    x = np.log(theta)
    y = np.log(np.abs(values))
    p, c = np.polyfit(x, y, 1)
    if np.max(np.abs(y - (p * x + c))) > 1e-8:
        return None
    return float(p)


class LinearWorkspace:
    """Grid-dependent quadrature tables shared by every application of A and B."""

    def __init__(self, grid: GridSpec):
        self.grid = grid
        th = grid.nodes
        self.theta = th
        self.h = grid.log_step
        self.dtheta = np.diff(th)
        n = max(int(np.searchsorted(th, 10.0 * th[0], side="right")), 8)
        self.head_nodes = n
        basis = np.vander(th[:n] / th[0], _HEAD_DEGREE + 1, increasing=True)
        self.head_solver = np.linalg.pinv(basis)   # coefficients in powers of t/θmin

    @classmethod
    @lru_cache(maxsize=8)
    def for_grid(cls, grid: GridSpec) -> "LinearWorkspace":
        return cls(grid)

    def tail_integral(self, f: SampledField, cells=None):
        """∫_{θmax}^∞ f(t)/t dt.

        In s = ln t a tail made of two powers obeys g'' - a g' + b g = 0.
        Integrating that from eight anchor nodes to θmax gives an overdetermined
        system linear in (a, b), using only the samples, their derivatives and
        the cumulative integrals; the tail is then (g'(S) - a g(S)) / b.  This
        is exact for a power with its first 1/θ correction and for a mix of
        two powers.  Falls back to the fitted tail model.
        """
        c, p = f.tail.coef, f.tail.exponent
        if c == 0:
            return 0.0
        # a fitted exponent near or above 0 can come from a sign change near θmax;
        # only the two-power fit below may then still certify decay
        simple = -c * self.grid.theta_max**p / p if p < -1e-3 else None
        n = self.theta.size
        idx = n - 1 - _TAIL_STRIDE * np.arange(1, _TAIL_ANCHORS + 1)
        if cells is None or f.is_complex or idx[-1] < 0:
            return self._checked(simple, p)
        back = np.concatenate(([0.0], np.cumsum(cells[::-1])))  # ∫ from node n-1-k to end
        g = f.values
        gs = f.derivs * self.theta
        G = back[n - 1 - idx]
        rows = np.column_stack((g[idx] - g[-1], G))
        rhs = gs[idx] - gs[-1]
        scale = np.max(np.abs(rows), axis=0)
        if np.all(scale > 0) and np.all(np.isfinite(rows)):
            (a, b), *_ = np.linalg.lstsq(rows / scale, rhs, rcond=1e-12)
            a, b = a / scale[0], b / scale[1]
            roots = np.roots([1.0, -a, b])
            if b != 0 and np.all(np.real(roots) < -1e-3) and np.all(np.isfinite(roots)):
                return float((gs[-1] - a * g[-1]) / b)
        return self._checked(simple, p)

    @staticmethod
    def _checked(simple, p):
        if simple is None:
            raise IntegrabilityError(f"tail exponent {p:.3g} does not decay: A[f] diverges")
        return simple

    def head_integral(self, g: SampledField):
        """∫_0^{θmin} g(t) dt.

        Heads that are clean non-integer powers use the power law itself.
        Otherwise g is taken to be regular at zero and a cubic in t, fitted by
        least squares on the first decade of nodes, is integrated exactly.
        The cubic fit is linear in the data, so repeated applications inside a
        fixed-point loop stay smooth.
        """
        if g.is_complex:
            return self.head_integral(g.real) + 1j * self.head_integral(g.imag)
        th0 = self.theta[0]
        n = self.head_nodes
        vals = g.values[:n]
        if not np.any(vals):
            return 0.0
        p = _clean_power(self.theta[:n], vals)
        if p is not None:
            if p <= -1:
                raise IntegrabilityError(f"head behaves like theta**{p:.3g}: B[g] diverges")
            if abs(p - round(p)) > 0.02:
                return vals[0] * th0 / (p + 1)
        coef = self.head_solver @ vals
        return float(np.sum(coef * th0 / np.arange(1, coef.size + 1)))

    def A_values(self, f: SampledField) -> np.ndarray:
        h = self.h
        y = f.values
        dy = f.derivs * self.theta  # d/ds
        cells = 0.5 * h * (y[:-1] + y[1:]) + (h * h / 12.0) * (dy[:-1] - dy[1:])
        out = np.empty_like(y)
        out[-1] = 0.0
        out[:-1] = np.cumsum(cells[::-1])[::-1]
        return out + self.tail_integral(f, cells)

    def B_values(self, g: SampledField) -> np.ndarray:
        d = self.dtheta
        y, dy = g.values, g.derivs
        cells = 0.5 * d * (y[:-1] + y[1:]) + (d * d / 12.0) * (dy[:-1] - dy[1:])
        out = np.empty_like(y)
        out[0] = 0.0
        out[1:] = np.cumsum(cells)
        return (out + self.head_integral(g)) / self.theta


def op_A(f: SampledField) -> SampledField:
    """A[f](θ) = ∫_θ^∞ f(t)/t dt with exact derivative -f/θ."""
    ws = LinearWorkspace.for_grid(f.grid)
    vals = ws.A_values(f)
    tail = None
    if f.tail.coef != 0 and f.tail.exponent < 0:
        tail = PowerLaw(-f.tail.coef / f.tail.exponent, f.tail.exponent)
    elif vals[-1] == 0:
        tail = PowerLaw(0.0, 0.0)
    return SampledField(f.grid, vals, -f.values / ws.theta, tail=tail)


def op_B(g: SampledField) -> SampledField:
    """B[g](θ) = (1/θ)∫_0^θ g with exact derivative (g - B[g])/θ."""
    ws = LinearWorkspace.for_grid(g.grid)
    vals = ws.B_values(g)
    head = None
    if g.head.coef != 0:
        head = PowerLaw(g.head.coef / (g.head.exponent + 1), g.head.exponent)
    return SampledField(g.grid, vals, (g.values - vals) / ws.theta, head=head)


def apply_L(p: FieldPair, mu: float) -> FieldPair:
    """Linearised operator, returned as an image pair (f, g)."""
    if p.kind != DOMAIN:
        raise ContractError("apply_L needs a domain-X pair")
    k = 2 * math.pi * (2 * mu - 1)
    c = domain_components(p, mu)
    U, Ur, V, W = c.U.values, c.Ur.values, c.V.values, c.W.values
    F = mu * U + Ur + (mu / k) * ((2 * mu - 1) * V + W)
    G = -2.0 * U + W / k
    return image_from_weighted(p.grid, mu, F, G)


def apply_M(y: FieldPair, mu: float) -> FieldPair:
    """Explicit inverse of the linearisation.

    Derivatives of (r, γ) follow from closed-form identities in A and B rather
    than from differencing.
    """
    if y.kind != IMAGE:
        raise ContractError("apply_M needs an image-Y pair")
    k = 2 * math.pi * (2 * mu - 1)
    c = mu / k
    F, G = image_components(y, mu)
    AF = op_A(F)
    BAF = op_B(AF).values
    BG = op_B(G).values
    AFv, Fv, Gv = AF.values, F.values, G.values
    V = k * (-2.0 * BAF + BG)
    W = k * (4 * mu * BAF - 2 * mu * BG - 2.0 * AFv + Gv)
    U = -c * V - AFv
    Ur = -c * (mu - 1) * V - c * W + mu * AFv + Fv
    return pair_from_components(y.grid, mu, U, Ur, V, W)
