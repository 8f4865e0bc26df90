"""Closed-form algebraic spirals solving the m -> infinity limit equation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SingularConfigurationError

__all__ = [
    "r0", "gamma0", "r0_prime", "gamma0_prime", "KadenProfile", "family",
    "limiting_residual",
]


def _positive(theta):
    theta = np.asarray(theta, dtype=float)
    if np.any(~(theta > 0)):
        raise DomainError("theta must be positive")
    return theta


def _out(x):
    return x[()] if np.ndim(x) == 0 else x


def r0(theta, mu=1.0):
    """Base radius theta**(-mu)."""
    return _out(_positive(theta) ** (-mu))


def gamma0(theta, mu=1.0):
    """Base circulation -2*pi*theta**(1-2mu)."""
    return _out(-2.0 * math.pi * _positive(theta) ** (1.0 - 2.0 * mu))


def r0_prime(theta, mu=1.0):
    return _out(-mu * _positive(theta) ** (-mu - 1.0))


def gamma0_prime(theta, mu=1.0):
    return _out(2.0 * math.pi * (2.0 * mu - 1.0) * _positive(theta) ** (-2.0 * mu))


@dataclass(frozen=True)
class KadenProfile:
    """Member of the two-constant family r = b**(-mu), gamma = c1 * b**(1-2mu)
    with b = -(2*pi/c1)*theta + c2."""

    mu: float = 1.0
    c1: float = -2.0 * math.pi
    c2: float = 0.0

    def __post_init__(self):
        if not self.mu > 0.5:
            raise DomainError("mu must be > 1/2")
        if self.c1 == 0:
            raise DomainError("c1 must be nonzero")

    def _base(self, theta):
        theta = _positive(theta)
        b = -(2.0 * math.pi / self.c1) * theta + self.c2
        if np.any(b <= 0):
            raise DomainError("theta outside the profile's range (base <= 0)")
        return b

    def r(self, theta):
        return _out(self._base(theta) ** (-self.mu))

    def gamma(self, theta):
        return _out(self.c1 * self._base(theta) ** (1.0 - 2.0 * self.mu))

    def r_prime(self, theta):
        b = self._base(theta)
        return _out(-self.mu * b ** (-self.mu - 1.0) * (-2.0 * math.pi / self.c1))

    def gamma_prime(self, theta):
        b = self._base(theta)
        return _out(self.c1 * (1.0 - 2.0 * self.mu) * b ** (-2.0 * self.mu)
                    * (-2.0 * math.pi / self.c1))

    def __call__(self, theta):
        return self.r(theta), self.gamma(theta)

    def residual(self, theta):
        return limiting_residual(self.mu, self.r(theta), self.r_prime(theta),
                                 self.gamma(theta), self.gamma_prime(theta))


def family(c1, c2, mu=1.0):
    """Return the callable theta -> (r, gamma) for constants (c1, c2)."""
    return KadenProfile(mu, c1, c2)


def limiting_residual(mu, r, r_prime, gamma, gamma_prime):
    """mu r^2 + (1-2mu)(gamma/gamma')(r r' - i r^2) + gamma/(2 pi i)."""
    r, r_prime = np.asarray(r), np.asarray(r_prime)
    gamma, gamma_prime = np.asarray(gamma), np.asarray(gamma_prime)
    if np.any(gamma_prime == 0):
        raise SingularConfigurationError("gamma' vanishes")
    res = (mu * r**2 + (1.0 - 2.0 * mu) * (gamma / gamma_prime) * (r * r_prime - 1j * r**2)
           + gamma / (2j * math.pi))
    return _out(res)
