"""Decoy-state linear estimators for the single-photon quadrature density.

Given the vacuum marginal X_0 and PRCS marginals X_{mu_1}..X_{mu_L}, the
single-photon density is estimated as Y1 = sum_j lambda_j X_{mu_j}.  For
odd L the estimate bounds Y1 from above, for even L from below.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AlignmentError, DomainError, IllConditionedError

SEPARATION_FLOOR = 1e-3


@dataclass(frozen=True)
class MeanPhotonSet:
    """Non-zero mean photon numbers mu_1 < ... < mu_L with 1-sigma errors."""

    mus: tuple
    sigmas: tuple = None
    separation_floor: float = SEPARATION_FLOOR

    def __post_init__(self):
        mus = tuple(float(m) for m in np.atleast_1d(self.mus))
        if not mus:
            raise DomainError("at least one non-zero mean photon number is required")
        if any(not m > 0 for m in mus):
            raise DomainError(f"mean photon numbers must be strictly positive, got {mus}")
        if any(b <= a for a, b in zip(mus, mus[1:])):
            raise DomainError(f"mean photon numbers must be strictly ascending, got {mus}")
        gaps = np.diff(mus)
        if gaps.size and gaps.min() < self.separation_floor:
            raise IllConditionedError(
                f"mean photon numbers {mus} closer than {self.separation_floor}; "
                "the decoy system is ill-conditioned"
            )
        sigmas = self.sigmas
        sigmas = (0.0,) * len(mus) if sigmas is None else tuple(float(s) for s in np.atleast_1d(sigmas))
        if len(sigmas) != len(mus):
            raise DomainError("one sigma per mean photon number is required")
        if any(s < 0 for s in sigmas):
            raise DomainError("sigmas must be non-negative")
        object.__setattr__(self, "mus", mus)
        object.__setattr__(self, "sigmas", sigmas)

    def __len__(self):
        return len(self.mus)

    def prefix(self, L: int) -> "MeanPhotonSet":
        return MeanPhotonSet(self.mus[:L], self.sigmas[:L], self.separation_floor)


@dataclass(frozen=True)
class DecoyWeights:
    """lambda_0..lambda_L; lambda_0 multiplies the vacuum marginal."""

    lambdas: np.ndarray
    source: MeanPhotonSet

    @property
    def L(self) -> int:
        return len(self.source)

    @property
    def mus_with_vacuum(self) -> np.ndarray:
        return np.concatenate([[0.0], self.source.mus])

    @property
    def trace(self) -> float:
        return float(np.sum(self.lambdas))


@dataclass
class EstimatedDensity:
    """Estimated single-photon density; values may be negative."""

    x_grid: np.ndarray
    values: np.ndarray
    sigma_values: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.sigma_values is None:
            self.sigma_values = np.zeros_like(self.values)


def lambda_coefficients(mus) -> np.ndarray:
    """Raw coefficient formula, no validation; returns lambda_0..lambda_L."""
    mus = np.asarray(mus, dtype=float)
    L = mus.size
    prod = np.prod(mus)
    denom = np.array([np.prod(np.delete(mus, j) - mus[j]) for j in range(L)])
    lam = np.empty(L + 1)
    lam[0] = -prod * np.sum(mus**-2.0 / denom)
    lam[1:] = prod * mus**-2.0 * np.exp(mus) / denom
    return lam


def decoy_weights(mu_set: MeanPhotonSet) -> DecoyWeights:
    if not isinstance(mu_set, MeanPhotonSet):
        mu_set = MeanPhotonSet(mu_set)
    return DecoyWeights(lambda_coefficients(mu_set.mus), mu_set)


def _grid_and_values(curve):
    values = curve.values if hasattr(curve, "values") else curve.density
    return np.asarray(curve.x_grid, dtype=float), np.asarray(values, dtype=float)


def _aligned(weights, vacuum, curves):
    if len(curves) != weights.L:
        raise AlignmentError(f"expected {weights.L} PRCS curves, got {len(curves)}")
    x, v0 = _grid_and_values(vacuum)
    stack = [v0]
    for c in curves:
        xc, vc = _grid_and_values(c)
        if xc.shape != x.shape or not np.allclose(xc, x, rtol=0, atol=1e-9 * max(1.0, np.abs(x).max())):
            raise AlignmentError("all densities must share the same x grid")
        stack.append(vc)
    return x, np.vstack(stack)


def estimate_y1(weights: DecoyWeights, vacuum, curves) -> EstimatedDensity:
    """lambda_0 X_0(x) + sum_j lambda_j X_{mu_j}(x) on the shared grid.

    ``vacuum`` and ``curves`` may be MarginalDensity or CalibratedHistogram
    instances; ``curves`` follows the ascending order of ``weights.source``.
    """
    x, X = _aligned(weights, vacuum, curves)
    return EstimatedDensity(x, weights.lambdas @ X)


def lambda_sensitivities(mus, rel_step: float = 1e-6) -> np.ndarray:
    """d lambda_i / d mu_j by central differences, shape (L + 1, L)."""
    mus = np.asarray(mus, dtype=float)
    out = np.empty((mus.size + 1, mus.size))
    for j, m in enumerate(mus):
        h = rel_step * m
        up, dn = mus.copy(), mus.copy()
        up[j] += h
        dn[j] -= h
        out[:, j] = (lambda_coefficients(up) - lambda_coefficients(dn)) / (2.0 * h)
    return out


def propagate_errors(weights, vacuum, curves, mu_sigmas=None, histogram_counts=None,
                     include_histogram=True, include_mu=True) -> np.ndarray:
    """First-order 1-sigma uncertainty of the Y1 estimate at each grid point.

    Histogram term: sum_j lambda_j^2 X_j / (N_j dx), Poisson bin counts.
    Mean-photon term: sum_j (dY/dmu_j)^2 sigma_mu_j^2, with dY/dmu_j from
    finite differences of the lambdas. All inputs are taken as independent.
    ``histogram_counts`` holds N for vacuum then each curve; None or inf
    drops the histogram term for that curve (exact theoretical input).
    """
    x, X = _aligned(weights, vacuum, curves)
    lam = weights.lambdas
    var = np.zeros(x.size)
    if include_histogram and histogram_counts is not None:
        counts = np.asarray([np.inf if n is None else n for n in histogram_counts], dtype=float)
        if counts.size != lam.size:
            raise AlignmentError("one sample count per density (vacuum first) is required")
        dx = float((x[-1] - x[0]) / (x.size - 1))
        for j in range(lam.size):
            if np.isinf(counts[j]):
                continue
            if counts[j] <= 0:
                if np.any(X[j] != 0):
                    raise DomainError("zero sample count for a non-empty histogram")
                continue
            var += lam[j] ** 2 * np.clip(X[j], 0.0, None) / (counts[j] * dx)
    if include_mu:
        sig = np.asarray(weights.source.sigmas if mu_sigmas is None else mu_sigmas, dtype=float)
        if sig.size != weights.L:
            raise AlignmentError("one sigma per mean photon number is required")
        if np.any(sig > 0):
            dY = lambda_sensitivities(weights.source.mus).T @ X  # (L, n)
            var += np.sum((dY * sig[:, None]) ** 2, axis=0)
    return np.sqrt(var)


def estimate_with_errors(weights, vacuum, curves, mu_sigmas=None, histogram_counts=None,
                         **kwargs) -> EstimatedDensity:
    est = estimate_y1(weights, vacuum, curves)
    est.sigma_values = propagate_errors(weights, vacuum, curves, mu_sigmas, histogram_counts, **kwargs)
    return est
