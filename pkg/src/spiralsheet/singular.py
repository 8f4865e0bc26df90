"""The Cauchy-integral operator I_m as an oscillatory series, and a direct
principal-value oracle.

For N = m n the terms are Q_N = -Q_{N,1} + Q_{N,2} with

    Q_{N,1}(θ) = θ^(1-2μ) ∫_0^1 t^(μN-2μ) Γ(θt) (R(θt)/R(θ))^(-N) e^{iNθ(1-t)} dt
    Q_{N,2}(θ) = θ^(1-2μ) ∫_1^∞ t^(-μN-2μ) Γ(θt) (R(θt)/R(θ))^N e^{iNθ(t-1)} dt

where R = 1 + θ^μ r and Γ = 1 + θ^(2μ) γ' / (2π(2μ-1)).  Each integral is split
into panels that are uniform in |ln t| and sized by the algebraic decay rate.
On every panel the smooth amplitude is interpolated at Gauss-Legendre nodes and
the linear phase is integrated exactly (Filon-type weights from spherical
Bessel functions), so the cost does not grow with the frequency Nθ.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .core import (
    DOMAIN,
    FieldPair,
    Params,
    SampledField,
    domain_components,
    image_from_weighted,
)
from .errors import AccuracyError, ContractError, DivergentTermError, GeometryDegenerateError

__all__ = [
    "SeriesTermContext", "SeriesResult", "q_n1", "q_n2", "q_n", "p_n",
    "evaluate_I_m", "apply_I_m", "i_m_direct",
]

_GL_ORDER = 10
_DAMP_LOG = math.log(1e16)   # truncate where the algebraic damping drops below 1e-16
_CHUNK = 256


@lru_cache(maxsize=4)
def _filon_rule(order: int):
    """Gauss-Legendre nodes and the matrix turning samples into Legendre moments.

    For samples a_j at the nodes, ∫_{-1}^{1} p(x) e^{iκx} dx with p the
    interpolant equals Σ_k (a @ M)_k j_k(κ).
    """
    x, w = np.polynomial.legendre.leggauss(order)
    k = np.arange(order)
    P = np.stack([special.eval_legendre(kk, x) for kk in k], axis=1)  # (j, k)
    M = (2 * k + 1) * (1j ** k) * w[:, None] * P
    return x, M


@dataclass(frozen=True)
class SeriesTermContext:
    """The profile functions entering every series term.

    ``log_R`` and ``Gamma`` are callables of θ; the exponents h_n and φ_n are
    exposed for diagnostics.
    """

    mu: float
    U: SampledField
    W: SampledField
    trivial: bool

    @classmethod
    def from_pair(cls, p: FieldPair, mu: float) -> "SeriesTermContext":
        if p.kind != DOMAIN:
            raise ContractError("series terms need a domain-X pair")
        c = domain_components(p, mu)
        trivial = not (np.any(c.U.values) or np.any(c.W.values))
        if np.any(1.0 + c.U.values <= 0):
            raise GeometryDegenerateError("R = 1 + θ^μ r is not positive on the grid")
        return cls(mu, c.U, c.W, trivial)

    @property
    def k(self) -> float:
        return 2 * math.pi * (2 * self.mu - 1)

    def log_R(self, theta):
        if self.trivial:
            return np.zeros(np.shape(theta))
        return np.log1p(self.U(theta))

    def Gamma(self, theta):
        if self.trivial:
            return np.ones(np.shape(theta))
        return 1.0 + self.W(theta) / self.k

    def h_n(self, n, theta):
        mu = self.mu
        return (np.log(mu - 1j * theta) / n + (-mu + (2 * mu - 1) / n) * np.log(theta)
                + self.log_R(theta) + 1j * theta)

    def phi_n(self, n, theta):
        mu = self.mu
        return (-np.log(mu - 1j * theta) / n + (-mu - (2 * mu - 1) / n) * np.log(theta)
                + self.log_R(theta) + 1j * theta)


def _panels(rate: float):
    """Panel edges in σ = |ln t| for an amplitude decaying like e^{-rate σ}."""
    span = _DAMP_LOG / rate
    step = min(0.5, 1.0 / rate)
    count = max(int(math.ceil(span / step)), 1)
    return np.linspace(0.0, count * step, count + 1)


def _side(ctx: SeriesTermContext, N: int, theta: np.ndarray, upper: bool) -> np.ndarray:
    """One of θ^(2μ-1) Q_{N,2} (upper) or θ^(2μ-1) Q_{N,1}, vectorised over θ."""
    mu = ctx.mu
    x, M = _filon_rule(_GL_ORDER)
    if upper:
        rate = mu * N + 2 * mu - 1
        em1 = np.expm1(_panels(rate))                              # t - 1 at the edges
        sgn = 1.0
    else:
        rate = mu * N - 2 * mu + 1
        em1 = np.expm1(-_panels(rate))[::-1]
        sgn = -1.0
    # offsets from t = 1 are kept exact so the phases N θ (t - 1) stay accurate
    shift = 0.5 * (em1[1:] + em1[:-1])
    half = 0.5 * (em1[1:] - em1[:-1])
    tm1 = shift[:, None] + half[:, None] * x[None, :]            # (panel, node)
    t = 1.0 + tm1
    lt = np.log1p(tm1)
    th = theta[:, None, None]
    tt = th * t[None]
    if upper:
        log_amp = (-mu * N - 2 * mu) * lt
    else:
        log_amp = (mu * N - 2 * mu) * lt
    log_amp = np.broadcast_to(log_amp, tt.shape)
    if not ctx.trivial:
        dlr = ctx.log_R(tt) - ctx.log_R(theta)[:, None, None]
        log_amp = log_amp + (N if upper else -N) * dlr
    amp = np.exp(log_amp) * ctx.Gamma(tt)
    moments = amp @ M                                             # (θ, panel, k)
    kappa = N * theta[:, None] * half[None, :]
    orders = np.arange(_GL_ORDER)
    jk = special.spherical_jn(orders[None, None, :], kappa[..., None])
    if sgn < 0:
        jk = jk * (-1.0) ** orders                                # j_k(-κ) = (-1)^k j_k(κ)
    panel = np.sum(moments * jk, axis=-1) * half[None, :]
    phase = np.exp(1j * sgn * N * theta[:, None] * shift[None, :])
    return np.sum(panel * phase, axis=1)


def _map_chunks(fn, theta, threads):
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if np.any(~(theta > 0)):
        raise ValueError("theta must be positive")
    parts = [theta[i:i + _CHUNK] for i in range(0, theta.size, _CHUNK)]
    if threads > 1 and len(parts) > 1:
        with ThreadPoolExecutor(threads) as pool:
            out = list(pool.map(fn, parts))
    else:
        out = [fn(c) for c in parts]
    return np.concatenate(out)


def _guard(n, mu):
    if not mu * n - 2 * mu > -1:
        raise DivergentTermError(f"term index n={n} violates n > 2 - 1/mu (mu={mu})")


def _shape(theta, values):
    return values[0] if np.ndim(theta) == 0 else values


def q_n1(p: FieldPair, n: int, theta, mu: float = 1.0, threads: int = 1):
    """Q_{n,1}(θ), the contribution of the part of the sheet inside θ."""
    _guard(n, mu)
    ctx = SeriesTermContext.from_pair(p, mu)
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    vals = _map_chunks(lambda c: _side(ctx, n, c, False), th, threads)
    return _shape(theta, vals * th ** (1 - 2 * mu))


def q_n2(p: FieldPair, n: int, theta, mu: float = 1.0, threads: int = 1):
    """Q_{n,2}(θ), the contribution of the part of the sheet outside θ."""
    _guard(n, mu)
    ctx = SeriesTermContext.from_pair(p, mu)
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    vals = _map_chunks(lambda c: _side(ctx, n, c, True), th, threads)
    return _shape(theta, vals * th ** (1 - 2 * mu))


def _q_weighted(ctx, N, theta, threads):
    """θ^(2μ-1) Q_N on an array of θ."""
    def run(c):
        return _side(ctx, N, c, True) - _side(ctx, N, c, False)
    return _map_chunks(run, theta, threads)


def q_n(p: FieldPair, n: int, theta, mu: float = 1.0, threads: int = 1):
    """Q_n = -Q_{n,1} + Q_{n,2}."""
    _guard(n, mu)
    ctx = SeriesTermContext.from_pair(p, mu)
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    return _shape(theta, _q_weighted(ctx, n, th, threads) * th ** (1 - 2 * mu))


def p_n(p: FieldPair, n: int, theta, mu: float = 1.0, threads: int = 1):
    """P_n = (-μ + iθ) θ^(2μ-1) Q_n."""
    _guard(n, mu)
    ctx = SeriesTermContext.from_pair(p, mu)
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    return _shape(theta, (-mu + 1j * th) * _q_weighted(ctx, n, th, threads))


# --------------------------------------------------------------------------
# the series

@dataclass
class SeriesResult:
    """I_m on the grid together with the series diagnostics."""

    image: FieldPair
    values: np.ndarray          # complex I_m at the nodes
    terms: int
    tail_estimate: float        # weighted sup of the extrapolated remainder
    tail_uncertainty: float     # weighted sup of the last change of the extrapolated total
    truncated: bool


def _zeta_tail(terms: list, n: int, order: int):
    """Remainder Σ_{j>n} T_j from the last ``order`` terms fitted by Σ c_i j^-(i+2)."""
    idx = np.arange(n - order + 1, n + 1, dtype=float)
    powers = np.arange(2, 2 + order)
    A = idx[:, None] ** (-powers[None, :].astype(float))
    coef = np.linalg.solve(A, np.stack(terms[-order:]))
    z = np.array([special.zeta(float(q), n + 1.0) for q in powers])
    return z @ coef


def _weighted_sup(vals, theta, mu, alpha):
    F = theta ** (2 * mu) * vals.real
    G = theta ** (2 * mu - 1) * vals.imag
    return float(max(np.max(np.abs(F)), np.max(np.sqrt(1 + theta**2) ** alpha * np.abs(G))))


def evaluate_I_m(p: FieldPair, params: Params) -> SeriesResult:
    """Sum -(2μ-1) i Σ_n Q_{mn} over the grid with an extrapolated tail.

    The remainder after n terms is extrapolated from the last three terms with
    the model Σ c_q j^-q, q = 2, 3, 4, and summed with Hurwitz zeta values.
    Terms are added until two successive extrapolated totals agree to
    ``tol_quad`` relative to the total (weighted as in the image norm), or
    until ``series_cap`` terms.
    """
    mu, m = params.mu, params.m
    _guard(m, mu)
    ctx = SeriesTermContext.from_pair(p, mu)
    theta = p.grid.nodes
    pref = -(2 * mu - 1) * 1j * theta ** (1 - 2 * mu)
    terms, partial = [], np.zeros(theta.size, dtype=complex)
    tail = np.zeros_like(partial)
    previous = None
    spread = math.inf
    truncated = True
    for n in range(1, params.series_cap + 1):
        T = pref * _q_weighted(ctx, m * n, theta, params.threads)
        terms.append(T)
        partial = partial + T
        if n < 3:
            continue
        tail = _zeta_tail(terms, n, 3)
        total = partial + tail
        if previous is not None:
            spread = _weighted_sup(total - previous, theta, mu, params.alpha)
            scale = _weighted_sup(total, theta, mu, params.alpha)
            if spread <= params.tol_quad * scale:
                truncated = False
                break
        previous = total
    total = partial + tail
    if truncated:
        warnings.warn(f"I_m series stopped at series_cap={params.series_cap} with "
                      f"tail spread {spread:.3g}", RuntimeWarning, stacklevel=2)
    image = image_from_weighted(p.grid, mu, theta ** (2 * mu) * total.real,
                                theta ** (2 * mu - 1) * total.imag)
    return SeriesResult(image, total, len(terms),
                        _weighted_sup(tail, theta, mu, params.alpha), spread, truncated)


def apply_I_m(p: FieldPair, params: Params) -> FieldPair:
    """I_m[r, γ] as an image pair (Re, Im)."""
    return evaluate_I_m(p, params).image


# --------------------------------------------------------------------------
# direct principal value

def _kernel_parts(ctx: SeriesTermContext, theta: float, m: int):
    mu, k = ctx.mu, ctx.k
    lr0 = float(ctx.log_R(np.array([theta]))[0])

    def F(tt):
        tt = np.atleast_1d(np.asarray(tt, dtype=float))
        L = m * (-mu * np.log(tt / theta) + ctx.log_R(tt) - lr0) + 1j * m * (tt - theta)
        dgam = k * tt ** (-2 * mu) * ctx.Gamma(tt)
        out = np.empty(tt.shape, dtype=complex)
        above = tt > theta
        # above: 1/(1-X) - 1 = X/(1-X); below: 1/(1-X) = -1/X / (1 - 1/X)
        Xa = np.exp(L[above])
        out[above] = dgam[above] * Xa / (1.0 - Xa)
        Xb = np.exp(-L[~above])
        out[~above] = -dgam[~above] * Xb / (1.0 - Xb)
        return out

    return F


def _quad_complex(f, a, b, tol):
    with warnings.catch_warnings():
        # round-off in the folded pole limits quad's own error estimate
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(lambda x: f(x)[0], a, b, complex_func=True,
                                epsabs=0.0, epsrel=tol, limit=200)
    return val


def i_m_direct(p: FieldPair, theta: float, m: int, mu: float = 1.0, tol: float = 1e-6):
    """I_m(θ) straight from the principal-value integral.

    The integrand γ̃'(θ̃) [1/(1-X) - H(θ̃-θ)] with X the m-th power of the
    radius ratio times e^{im(θ̃-θ)} is folded about θ̃ = θ, which cancels the
    simple pole.  The exclusion half-width ε is halved until the estimate
    changes by at most ``tol`` relative; a midpoint value stands in for the
    excluded window.
    """
    if not theta > 0:
        raise ValueError("theta must be positive")
    ctx = SeriesTermContext.from_pair(p, mu)
    F = _kernel_parts(ctx, theta, m)
    wave = 2 * math.pi / m
    eps0 = min(0.5 * theta, wave)
    lo = theta * math.exp(-_DAMP_LOG / (mu * m - 2 * mu + 1))
    hi = theta * math.exp(_DAMP_LOG / (mu * m + 2 * mu - 1))
    qt = 1e-11
    outer = 0j
    for a, b in ((lo, theta - eps0), (theta + eps0, hi)):
        if b <= a:
            continue
        cuts = np.linspace(a, b, max(int(math.ceil((b - a) / wave)), 1) + 1)
        for u, v in zip(cuts[:-1], cuts[1:]):
            outer += _quad_complex(F, u, v, qt)

    def fold(s):
        s = np.atleast_1d(s)
        return F(theta + s) + F(theta - s)

    eps = 0.5 * eps0
    inner = _quad_complex(fold, eps, eps0, qt)
    prev = outer + inner + eps * fold(0.5 * eps)[0]
    for _ in range(60):
        nxt = 0.5 * eps
        inner += _quad_complex(fold, nxt, eps, qt)
        eps = nxt
        # the folded integrand is bounded, so the excluded window is O(eps)
        est = outer + inner + eps * fold(0.5 * eps)[0]
        if abs(est - prev) <= tol * abs(est):
            return est / (2j * math.pi)
        prev = est
    raise AccuracyError(f"principal value did not stabilise (last change {abs(est - prev):.3g})")
