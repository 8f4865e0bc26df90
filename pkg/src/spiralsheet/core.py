"""Log grids, sampled fields and the weighted Hölder norms of the spaces X and Y.

Every profile handled by the package lives on a log-uniform grid in the angle
variable theta.  A :class:`SampledField` stores values *and* derivatives at the
nodes, interpolates with cubic Hermite splines in ``s = ln(theta)`` and
continues the data outside the grid by power laws ``c * theta**p``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace
from functools import cached_property, lru_cache

import numpy as np

from .errors import ConfigError, ContractError, DomainError, FieldConstructionError

__all__ = [
    "GridSpec",
    "Params",
    "PowerLaw",
    "SampledField",
    "FieldPair",
    "DomainComponents",
    "make_field",
    "log_derivative",
    "norm_gk",
    "seminorm_parts",
    "domain_components",
    "image_components",
    "pair_from_components",
    "image_from_weighted",
    "norm_X",
    "norm_Y",
    "japanese",
]


def japanese(theta):
    """Return the bracket weight (1 + theta**2)**0.5."""
    return np.sqrt(1.0 + np.square(theta))


@dataclass(frozen=True)
class GridSpec:
    """Log-uniform angular grid.

    ``head_exponent`` / ``tail_exponent`` pin the exponents of the power-law
    continuations below ``theta_min`` and above ``theta_max``; ``None`` means
    they are fitted per field.
    """

    theta_min: float = 1e-4
    theta_max: float = 1e4
    n_nodes: int = 2048
    head_exponent: float | None = None
    tail_exponent: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.theta_min) and self.theta_min > 0):
            raise DomainError("theta_min must be positive and finite")
        if not (math.isfinite(self.theta_max) and self.theta_max > self.theta_min):
            raise DomainError("theta_max must exceed theta_min")
        if int(self.n_nodes) != self.n_nodes or self.n_nodes < 16:
            raise DomainError("n_nodes must be an integer >= 16")
        object.__setattr__(self, "n_nodes", int(self.n_nodes))

    @cached_property
    def nodes(self) -> np.ndarray:
        s = np.linspace(math.log(self.theta_min), math.log(self.theta_max), self.n_nodes)
        theta = np.exp(s)
        theta[0], theta[-1] = self.theta_min, self.theta_max
        theta.flags.writeable = False
        return theta

    @property
    def log_step(self) -> float:
        return (math.log(self.theta_max) - math.log(self.theta_min)) / (self.n_nodes - 1)

    @property
    def s_min(self) -> float:
        return math.log(self.theta_min)


@dataclass(frozen=True)
class Params:
    """Problem parameters and numerical controls.

    Attributes:
        mu: spiral exponent, must exceed 1/2.
        alpha: Hölder exponent in (0, 1).
        m: fold count, at least 2.
        grid: angular grid.
        series_cap: maximum number of series terms in the self-interaction sum.
        tol_inner, tol_outer: stopping tolerances of the two fixed-point loops.
        tol_quad: relative tolerance of quadratures and series tails.
        max_iter_inner, max_iter_outer: iteration caps.
        ball_radius: admissible Y-norm of right-hand sides for the inner solve.
        threads: worker threads for node-parallel evaluations.
    """

    mu: float = 1.0
    alpha: float = 0.5
    m: int = 32
    grid: GridSpec = field(default_factory=GridSpec)
    series_cap: int = 64
    tol_inner: float = 1e-9
    tol_outer: float = 1e-8
    tol_quad: float = 1e-8
    max_iter_inner: int = 200
    max_iter_outer: int = 60
    ball_radius: float = 0.1
    threads: int = 1

    def __post_init__(self):
        if not (math.isfinite(self.mu) and self.mu > 0.5):
            raise DomainError("mu must be > 1/2")
        if not (0.0 < self.alpha < 1.0):
            raise DomainError("alpha must lie in (0, 1)")
        if int(self.m) != self.m or self.m < 2:
            raise DomainError("m must be an integer >= 2")
        object.__setattr__(self, "m", int(self.m))
        for name in ("tol_inner", "tol_outer", "tol_quad", "ball_radius"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be positive")
        for name in ("series_cap", "max_iter_inner", "max_iter_outer", "threads"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise DomainError(f"{name} must be an integer >= 1")
            object.__setattr__(self, name, int(value))

    def with_(self, **changes) -> "Params":
        return replace(self, **changes)

    def to_dict(self, threads: bool = True) -> dict:
        """Plain nested dict (the grid becomes a sub-dict).  ``threads=False``
        drops the thread count, which never changes results."""
        d = asdict(self)
        if not threads:
            del d["threads"]
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "Params":
        data = dict(data)
        grid = data.pop("grid", None)
        if isinstance(grid, dict):
            grid = GridSpec(**grid)
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown parameter")
        return cls(grid=grid or GridSpec(), **data)


@dataclass(frozen=True)
class PowerLaw:
    """The continuation ``coef * theta**exponent``."""

    coef: complex | float = 0.0
    exponent: float = 0.0

    def __call__(self, theta):
        return self.coef * np.power(theta, self.exponent)

    def deriv(self, theta):
        return self.coef * self.exponent * np.power(theta, self.exponent - 1.0)

    @property
    def is_zero(self) -> bool:
        return self.coef == 0


def log_derivative(values: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order finite-difference derivative with respect to ``s`` on a
    uniform grid of step ``h`` (one-sided stencils at the two ends)."""
    y = np.asarray(values)
    n = y.shape[0]
    if n < 5:
        raise FieldConstructionError("need at least 5 nodes for differencing")
    d = np.empty_like(y)
    d[2:-2] = (y[:-4] - 8.0 * y[1:-3] + 8.0 * y[3:-1] - y[4:]) / (12.0 * h)
    c0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / (12.0 * h)
    c1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / (12.0 * h)
    d[0] = c0 @ y[:5]
    d[1] = c1 @ y[:5]
    d[-1] = -(c0 @ y[-1:-6:-1])
    d[-2] = -(c1 @ y[-1:-6:-1])
    return d


def _edge_model(theta, values, end, pinned, derivs=None):
    """Power law through the end node.

    The exponent is pinned, or else the local exponent θf'/f at the end node so
    that the continuation joins with matching slope.  Tails whose local
    exponent does not decay fall back to a log fit on the outer decade.
    """
    anchor_theta, anchor_value = theta[end], values[end]
    if anchor_value == 0:
        return PowerLaw(0.0, 0.0 if pinned is None else float(pinned))
    p = None
    if pinned is not None:
        p = float(pinned)
    elif derivs is not None:
        local = anchor_theta * derivs[end] / anchor_value
        if np.iscomplexobj(local):
            local = local.real if abs(local.imag) <= 1e-12 * abs(local) else np.nan
        if np.isfinite(local) and abs(local) <= 50 and (end == 0 or local < 0):
            p = float(local)
    if p is None:
        if end == 0:
            sel = theta <= 10.0 * theta[0]
        else:
            sel = theta >= theta[-1] / 10.0
        if sel.sum() < 4:
            sel = np.zeros_like(sel)
            sel[:4] = end == 0
            sel[-4:] = end != 0
        mags = np.abs(values[sel])
        if np.all(mags > 0):
            x = np.log(theta[sel])
            p = float(np.polyfit(x, np.log(mags), 1)[0])
        else:
            p = 0.0
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        coef = anchor_value * np.exp(-p * np.log(anchor_theta))
    if not np.isfinite(coef):
        return PowerLaw(0.0, p)          # underflowed edge; the continuation is negligible
    if isinstance(coef, complex) or np.iscomplexobj(coef):
        coef = complex(coef)
    else:
        coef = float(coef)
    return PowerLaw(coef, p)


class SampledField:
    """A function of theta sampled with its derivative on a log grid.

    Instances are immutable; arithmetic returns new fields and propagates
    derivatives by the usual rules, so products keep exact derivative data.
    """

    __slots__ = ("grid", "values", "derivs", "head", "tail")

    def __init__(self, grid: GridSpec, values, derivs, head: PowerLaw | None = None,
                 tail: PowerLaw | None = None):
        n = grid.n_nodes
        v = np.array(values, copy=True)
        d = np.array(derivs, copy=True)
        if v.shape != (n,) or d.shape != (n,):
            raise FieldConstructionError(f"values and derivs must have shape ({n},)")
        if np.iscomplexobj(v) or np.iscomplexobj(d):
            v, d = v.astype(complex), d.astype(complex)
        else:
            v, d = v.astype(float), d.astype(float)
        for arr, label in ((v, "value"), (d, "derivative")):
            bad = ~np.isfinite(arr)
            if bad.any():
                k = int(np.argmax(bad))
                raise FieldConstructionError(
                    f"non-finite {label} at theta={grid.nodes[k]!r}")
        v.flags.writeable = False
        d.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "derivs", d)
        th = grid.nodes
        if head is None:
            head = _edge_model(th, v, 0, grid.head_exponent, d)
        if tail is None:
            tail = _edge_model(th, v, -1, grid.tail_exponent, d)
        object.__setattr__(self, "head", head)
        object.__setattr__(self, "tail", tail)

    def __setattr__(self, name, value):
        raise AttributeError("SampledField is immutable")

    def __reduce__(self):
        return (SampledField, (self.grid, self.values, self.derivs, self.head, self.tail))

    # construction -----------------------------------------------------------
    @classmethod
    def from_samples(cls, grid, values, derivs=None, head=None, tail=None):
        """Build from node values; missing derivatives are differenced."""
        values = np.asarray(values)
        if derivs is None:
            derivs = log_derivative(values, grid.log_step) / grid.nodes
        return cls(grid, values, derivs, head, tail)

    @classmethod
    def zeros(cls, grid, complex_=False):
        z = np.zeros(grid.n_nodes, dtype=complex if complex_ else float)
        return cls(grid, z, z, PowerLaw(0.0, 0.0), PowerLaw(0.0, 0.0))

    # evaluation -------------------------------------------------------------
    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)

    def _locate(self, theta):
        theta = np.asarray(theta, dtype=float)
        if np.any(~(theta > 0)):
            raise DomainError("theta must be positive")
        g = self.grid
        s = np.log(theta)
        x = (s - g.s_min) / g.log_step
        idx = np.clip(np.floor(x).astype(np.int64), 0, g.n_nodes - 2)
        u = x - idx
        return theta, idx, u

    def _hermite(self, theta, want_deriv):
        theta, idx, u = self._locate(theta)
        g = self.grid
        h = g.log_step
        th = g.nodes
        y0, y1 = self.values[idx], self.values[idx + 1]
        m0 = self.derivs[idx] * th[idx] * h
        m1 = self.derivs[idx + 1] * th[idx + 1] * h
        if not want_deriv:
            u2 = u * u
            u3 = u2 * u
            out = ((2 * u3 - 3 * u2 + 1) * y0 + (u3 - 2 * u2 + u) * m0
                   + (-2 * u3 + 3 * u2) * y1 + (u3 - u2) * m1)
        else:
            u2 = u * u
            ds = ((6 * u2 - 6 * u) * y0 + (3 * u2 - 4 * u + 1) * m0
                  + (-6 * u2 + 6 * u) * y1 + (3 * u2 - 2 * u) * m1) / h
            out = ds / theta
        lo = theta < g.theta_min
        hi = theta > g.theta_max
        if lo.any() or hi.any():
            out = np.array(out, dtype=complex if self.is_complex else float)
            head = self.head.deriv if want_deriv else self.head
            tail = self.tail.deriv if want_deriv else self.tail
            out[lo] = head(theta[lo])
            out[hi] = tail(theta[hi])
        return out

    def __call__(self, theta):
        out = self._hermite(theta, False)
        return out[()] if np.ndim(out) == 0 else out

    def deriv(self, theta):
        out = self._hermite(theta, True)
        return out[()] if np.ndim(out) == 0 else out

    # arithmetic -------------------------------------------------------------
    def _new(self, values, derivs):
        return SampledField(self.grid, values, derivs)

    def _check(self, other):
        if other.grid != self.grid:
            raise ContractError("fields live on different grids")

    def __add__(self, other):
        if isinstance(other, SampledField):
            self._check(other)
            return self._new(self.values + other.values, self.derivs + other.derivs)
        return self._new(self.values + other, self.derivs)

    __radd__ = __add__

    def __neg__(self):
        return SampledField(self.grid, -self.values, -self.derivs,
                            PowerLaw(-self.head.coef, self.head.exponent),
                            PowerLaw(-self.tail.coef, self.tail.exponent))

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, SampledField):
            self._check(other)
            return self._new(self.values * other.values,
                             self.derivs * other.values + self.values * other.derivs)
        if np.ndim(other) != 0:
            return NotImplemented
        return SampledField(self.grid, self.values * other, self.derivs * other,
                            PowerLaw(self.head.coef * other, self.head.exponent),
                            PowerLaw(self.tail.coef * other, self.tail.exponent))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def weighted(self, p: float) -> "SampledField":
        """Return theta**p * f with its exact derivative."""
        th = self.grid.nodes
        w = th**p
        return SampledField(
            self.grid, w * self.values, p * th ** (p - 1.0) * self.values + w * self.derivs,
            PowerLaw(self.head.coef, self.head.exponent + p),
            PowerLaw(self.tail.coef, self.tail.exponent + p))

    @property
    def real(self):
        return SampledField(self.grid, self.values.real, self.derivs.real)

    @property
    def imag(self):
        return SampledField(self.grid, self.values.imag, self.derivs.imag)

    def __repr__(self):
        kind = "complex" if self.is_complex else "real"
        return (f"SampledField({kind}, n={self.grid.n_nodes}, "
                f"head={self.head}, tail={self.tail})")


def make_field(closure, grid: GridSpec, deriv=None, head_exponent=None,
               tail_exponent=None) -> SampledField:
    """Sample ``closure`` on the grid nodes.

    Derivatives come from ``deriv`` when supplied, otherwise from fourth-order
    differences in ln(theta).  Power-law continuations are fitted on the outer
    decade of nodes unless an exponent is given.
    """
    th = grid.nodes
    with np.errstate(all="ignore"):
        values = np.asarray(closure(th))
        if values.shape == ():
            values = np.full(th.shape, values)
    bad = ~np.isfinite(values)
    if bad.any():
        raise FieldConstructionError(f"closure not finite at theta={th[np.argmax(bad)]!r}")
    if deriv is None:
        derivs = log_derivative(values, grid.log_step) / th
    else:
        with np.errstate(all="ignore"):
            derivs = np.asarray(deriv(th))
            if derivs.shape == ():
                derivs = np.full(th.shape, derivs)
    head = tail = None
    if head_exponent is not None or grid.head_exponent is not None:
        p = grid.head_exponent if head_exponent is None else head_exponent
        head = _edge_model(th, values, 0, p, derivs)
    if tail_exponent is not None or grid.tail_exponent is not None:
        p = grid.tail_exponent if tail_exponent is None else tail_exponent
        tail = _edge_model(th, values, -1, p, derivs)
    return SampledField(grid, values, derivs, head, tail)


# --------------------------------------------------------------------------
# weighted Hölder norms

@lru_cache(maxsize=8)
def _pair_table(grid: GridSpec):
    """All node pairs (i, j), i < j, with 0 < theta_j - theta_i < 1."""
    th = grid.nodes
    n = th.size
    reach = np.searchsorted(th, th + 1.0, side="left") - 1  # last j with gap < 1
    counts = np.maximum(reach - np.arange(n), 0)
    i = np.repeat(np.arange(n), counts)
    offs = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts) + 1
    j = i + offs
    gap = th[j] - th[i]
    keep = gap > 0
    i, j, gap = i[keep], j[keep], gap[keep]
    for a in (i, j, gap):
        a.flags.writeable = False
    return i, j, gap


def seminorm_parts(f: SampledField, k: float, alpha: float):
    """Return ``(sup_term, derivative_surrogate, pairwise_quotient)``.

    ``derivative_surrogate`` is sup <θ>^(k+2α-1) θ^(1-α) |f'| and
    ``pairwise_quotient`` the largest <θ1>^(k+α)|f(θ1)-f(θ2)|/|θ1-θ2|^α over
    all node pairs closer than one unit.
    """
    th = f.grid.nodes
    jt = japanese(th)
    sup_term = float(np.max(jt**alpha * np.abs(f.values)))
    surrogate = float(np.max(jt ** (k + 2 * alpha - 1) * th ** (1 - alpha) * np.abs(f.derivs)))
    i, j, gap = _pair_table(f.grid)
    if i.size:
        q = jt[j] ** (k + alpha) * np.abs(f.values[j] - f.values[i]) / gap**alpha
        pairwise = float(q.max())
    else:
        pairwise = 0.0
    return sup_term, surrogate, pairwise


def norm_gk(f: SampledField, k: float, alpha: float) -> float:
    """Estimate ||f||_k = sup <θ>^α|f| + [f]_k on the grid.

    The seminorm is estimated by the larger of the derivative surrogate and the
    pairwise difference quotient (see :func:`seminorm_parts`).
    """
    if k < 0:
        raise DomainError("k must be nonnegative")
    sup_term, surrogate, pairwise = seminorm_parts(f, k, alpha)
    return sup_term + max(surrogate, pairwise)


# --------------------------------------------------------------------------
# pairs

DOMAIN = "domain-X"
IMAGE = "image-Y"


@dataclass(frozen=True)
class FieldPair:
    """A perturbation (r, gamma) when ``kind == 'domain-X'`` or an image
    (f, g) when ``kind == 'image-Y'``."""

    first: SampledField
    second: SampledField
    kind: str = DOMAIN

    def __post_init__(self):
        if self.kind not in (DOMAIN, IMAGE):
            raise ContractError(f"unknown pair kind {self.kind!r}")
        if self.first.grid != self.second.grid:
            raise ContractError("pair components live on different grids")

    @property
    def grid(self) -> GridSpec:
        return self.first.grid

    @classmethod
    def zeros(cls, grid, kind=DOMAIN):
        z = SampledField.zeros(grid)
        return cls(z, z, kind)

    def _same(self, other):
        if not isinstance(other, FieldPair) or other.kind != self.kind:
            raise ContractError("pair kinds differ")

    def __add__(self, other):
        self._same(other)
        return FieldPair(self.first + other.first, self.second + other.second, self.kind)

    def __sub__(self, other):
        self._same(other)
        return FieldPair(self.first - other.first, self.second - other.second, self.kind)

    def __mul__(self, c):
        return FieldPair(self.first * c, self.second * c, self.kind)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldPair(-self.first, -self.second, self.kind)

    def check_membership(self, mu: float, tol: float = 1e-6) -> None:
        """Raise ContractError if the pair visibly leaves its space."""
        th = self.grid.nodes
        if self.kind == DOMAIN:
            comps = domain_components(self, mu)
            for name in ("U", "Ur", "V", "W"):
                if not np.all(np.isfinite(getattr(comps, name).values)):
                    raise ContractError(f"weighted component {name} is not bounded")
        else:
            F = th ** (2 * mu) * self.first.values
            scale = max(float(np.max(np.abs(F))), 1.0)
            if abs(F[0]) > tol * scale:
                raise ContractError("theta^(2mu) f does not vanish at theta_min")


@dataclass(frozen=True)
class DomainComponents:
    """Weighted pieces of a perturbation pair.

    U = θ^μ r, Ur = θ^(μ+1) r', V = θ^(2μ-1) γ, W = θ^(2μ) γ'.
    """

    U: SampledField
    Ur: SampledField
    V: SampledField
    W: SampledField


def domain_components(p: FieldPair, mu: float) -> DomainComponents:
    if p.kind != DOMAIN:
        raise ContractError("expected a domain-X pair")
    r, g = p.first, p.second
    grid = p.grid
    th = grid.nodes
    U = r.weighted(mu)
    V = g.weighted(2 * mu - 1)
    Ur = SampledField.from_samples(grid, th ** (mu + 1) * r.derivs)
    W = SampledField.from_samples(grid, th ** (2 * mu) * g.derivs)
    return DomainComponents(U, Ur, V, W)


def image_components(y: FieldPair, mu: float):
    """Return (θ^(2μ) f, θ^(2μ-1) g) for an image pair."""
    if y.kind != IMAGE:
        raise ContractError("expected an image-Y pair")
    return y.first.weighted(2 * mu), y.second.weighted(2 * mu - 1)


def pair_from_components(grid, mu, U, Ur, V, W) -> FieldPair:
    """Assemble (r, γ) from weighted node arrays U, Ur, V, W."""
    th = grid.nodes
    r = SampledField(grid, th ** (-mu) * U, th ** (-mu - 1) * Ur)
    g = SampledField(grid, th ** (1 - 2 * mu) * V, th ** (-2 * mu) * W)
    return FieldPair(r, g, DOMAIN)


def image_from_weighted(grid, mu, F, G) -> FieldPair:
    """Assemble (f, g) from node arrays F = θ^(2μ) f and G = θ^(2μ-1) g."""
    th = grid.nodes
    h = grid.log_step
    dF = log_derivative(F, h) / th
    dG = log_derivative(G, h) / th
    f = SampledField(grid, th ** (-2 * mu) * F, th ** (-2 * mu) * (dF - 2 * mu * F / th))
    g = SampledField(grid, th ** (1 - 2 * mu) * G,
                     th ** (1 - 2 * mu) * (dG - (2 * mu - 1) * G / th))
    return FieldPair(f, g, IMAGE)


def norm_X(p: FieldPair, mu: float, alpha: float) -> float:
    """||θ^μ r||_1 + ||θ^(μ+1) r'||_0 + ||θ^(2μ-1) γ||_1 + ||θ^(2μ) γ'||_1."""
    if p.kind != DOMAIN:
        raise ContractError("norm_X needs a domain-X pair")
    c = domain_components(p, mu)
    return (norm_gk(c.U, 1, alpha) + norm_gk(c.Ur, 0, alpha)
            + norm_gk(c.V, 1, alpha) + norm_gk(c.W, 1, alpha))


def norm_Y(y: FieldPair, mu: float, alpha: float) -> float:
    """||θ^(2μ) f||_0 + ||θ^(2μ-1) g||_1."""
    if y.kind != IMAGE:
        raise ContractError("norm_Y needs an image-Y pair")
    F, G = image_components(y, mu)
    return norm_gk(F, 0, alpha) + norm_gk(G, 1, alpha)
