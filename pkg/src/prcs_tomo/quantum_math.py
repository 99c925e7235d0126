"""Closed-form quantities for phase-randomized coherent states (PRCS).

Quadratures follow X = (a e^{-i theta} + a^dag e^{i theta}) / 2, so the vacuum
variance is 1/4 everywhere in this package.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DomainError

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


@dataclass(frozen=True)
class TruncationPolicy:
    """Where to cut the Poisson sum over photon numbers.

    The order K(mu) is the smallest K >= k_min_cap whose Poisson tail
    sum_{k>K} P_mu(k) falls below ``tail_tolerance``.
    """

    tail_tolerance: float = 1e-10
    k_min_cap: int = 20

    def __post_init__(self):
        if not 0.0 < self.tail_tolerance < 1.0:
            raise DomainError(f"tail_tolerance must lie in (0, 1), got {self.tail_tolerance}")
        if self.k_min_cap < 0:
            raise DomainError(f"k_min_cap must be non-negative, got {self.k_min_cap}")

    def order(self, mu: float) -> int:
        _check_mu(mu)
        if mu == 0.0:
            return self.k_min_cap
        # generous upper bound for the search; tail beyond it is < 1e-300
        kmax = int(mu + 40.0 * math.sqrt(mu) + 80)
        pmf = poisson_weights(mu, kmax)
        tail = np.cumsum(pmf[::-1])[::-1]  # tail[k] = sum_{j>=k}
        above = tail[1:]  # above[K] = sum_{j>K}
        K = int(np.argmax(above < self.tail_tolerance))
        return max(K, self.k_min_cap)


DEFAULT_POLICY = TruncationPolicy()


@dataclass
class MarginalDensity:
    """Quadrature probability density on a uniform grid."""

    x_grid: np.ndarray
    values: np.ndarray

    @property
    def grid_step(self) -> float:
        return grid_step(self.x_grid)

    def integral(self) -> float:
        return float(np.sum(self.values) * self.grid_step)


@dataclass
class RadialWignerProfile:
    """Rotationally symmetric Wigner function W(r) on an ascending radial grid."""

    r_grid: np.ndarray
    values: np.ndarray

    def normalization(self) -> float:
        """2 pi * integral of r W(r) dr (trapezoid rule)."""
        return float(2.0 * np.pi * np.trapezoid(self.r_grid * self.values, self.r_grid))


@dataclass
class DiagonalFockState:
    """Diagonal of a Fock-basis density matrix, k = 0..k_max.

    Estimated states may be non-positive or have trace != 1; values are kept as-is.
    """

    diag: np.ndarray

    @property
    def k_max(self) -> int:
        return len(self.diag) - 1

    @property
    def trace(self) -> float:
        return float(np.sum(self.diag))


def _check_mu(mu):
    if not mu >= 0.0:
        raise DomainError(f"mean photon number must be >= 0, got {mu}")


def grid_step(x_grid) -> float:
    x = np.asarray(x_grid, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise DomainError("grid must be a non-empty 1-D array")
    if x.size == 1:
        raise DomainError("grid needs at least two points")
    d = np.diff(x)
    step = float((x[-1] - x[0]) / (x.size - 1))
    if step <= 0 or not np.allclose(d, step, rtol=1e-6, atol=0.0):
        raise DomainError("grid must be uniformly spaced and increasing")
    return step


def uniform_grid(lo: float, hi: float, step: float) -> np.ndarray:
    n = int(round((hi - lo) / step)) + 1
    return np.linspace(lo, hi, n)


def poisson_weight(mu: float, k: int) -> float:
    """P_mu(k) = mu^k e^{-mu} / k!, evaluated in log space."""
    _check_mu(mu)
    if k < 0:
        raise DomainError(f"photon number must be >= 0, got {k}")
    if mu == 0.0:
        return 1.0 if k == 0 else 0.0
    return math.exp(k * math.log(mu) - mu - math.lgamma(k + 1))


def poisson_weights(mu: float, kmax: int) -> np.ndarray:
    """P_mu(k) for k = 0..kmax."""
    _check_mu(mu)
    k = np.arange(kmax + 1)
    if mu == 0.0:
        return (k == 0).astype(float)
    lg = np.array([math.lgamma(i + 1) for i in range(kmax + 1)])
    return np.exp(k * math.log(mu) - mu - lg)


def fock_quadrature_density(k: int, x):
    """|psi_k(x)|^2, the quadrature density of the Fock state |k>.

    Evaluated with the orthonormal Hermite-function recurrence, so it stays
    finite for k up to a few hundred.
    """
    if k < 0:
        raise DomainError(f"photon number must be >= 0, got {k}")
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    coeffs = np.zeros(k + 1)
    coeffs[k] = 1.0
    out = kernels.fock_mixture(xa.ravel(), coeffs).reshape(xa.shape)
    return float(out[0]) if np.ndim(x) == 0 else out


def fock_mixture_density(diag, x_grid) -> np.ndarray:
    """sum_k diag[k] |psi_k(x)|^2 for an arbitrary (possibly signed) diagonal."""
    diag = np.asarray(diag, dtype=float)
    if diag.size == 0:
        raise DomainError("empty Fock diagonal")
    return kernels.fock_mixture(np.asarray(x_grid, dtype=float), diag)


def prcs_marginal(mu: float, x_grid, policy: TruncationPolicy = DEFAULT_POLICY) -> MarginalDensity:
    """Quadrature marginal X_mu(x) of a PRCS, a Poisson mixture of Fock densities."""
    _check_mu(mu)
    x = np.asarray(x_grid, dtype=float)
    if x.size == 0:
        raise DomainError("empty x grid")
    weights = poisson_weights(mu, policy.order(mu))
    return MarginalDensity(x, kernels.fock_mixture(x, weights))


def prcs_wigner(mu: float, r) -> np.ndarray:
    """W_mu(r) at arbitrary (unsorted) non-negative radii."""
    _check_mu(mu)
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("radial distance must be non-negative")
    s = math.sqrt(mu)
    # (2/pi) e^{-2(r^2+mu)} I0(4 r s) = (2/pi) e^{-2(r-s)^2} i0e(4 r s)
    return (2.0 / np.pi) * np.exp(-2.0 * (r - s) ** 2) * kernels.i0e(4.0 * r * s)


def prcs_wigner_radial(mu: float, r_grid) -> RadialWignerProfile:
    r = np.asarray(r_grid, dtype=float)
    if r.ndim != 1 or r.size == 0:
        raise DomainError("r grid must be a non-empty 1-D array")
    if r[0] != 0.0 or np.any(np.diff(r) <= 0):
        raise DomainError("r grid must start at 0 and increase strictly")
    return RadialWignerProfile(r, prcs_wigner(mu, r))


def prcs_density_matrix(mu: float, policy: TruncationPolicy = DEFAULT_POLICY) -> DiagonalFockState:
    return DiagonalFockState(poisson_weights(mu, policy.order(mu)))


def single_photon_marginal(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return 4.0 * SQRT_2_OVER_PI * x**2 * np.exp(-2.0 * x**2)


def single_photon_wigner(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return (2.0 / np.pi) * (4.0 * r**2 - 1.0) * np.exp(-2.0 * r**2)


def single_photon_references(x_grid, r_grid) -> tuple[MarginalDensity, RadialWignerProfile]:
    """Exact |1> marginal and Wigner function, the reconstruction targets."""
    x = np.asarray(x_grid, dtype=float)
    r = np.asarray(r_grid, dtype=float)
    return MarginalDensity(x, single_photon_marginal(x)), RadialWignerProfile(r, single_photon_wigner(r))


def wigner_p_marginal(wigner_of_r, x, p_max: float = 6.0, n_p: int = 1201) -> np.ndarray:
    """Integrate a radial Wigner function over p: int W(sqrt(x^2+p^2)) dp.

    ``wigner_of_r`` is any callable accepting an array of radii.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    p = np.linspace(-p_max, p_max, n_p)
    r = np.hypot(x[:, None], p[None, :])
    w = np.asarray(wigner_of_r(r.ravel())).reshape(r.shape)
    return np.trapezoid(w, p, axis=1)
