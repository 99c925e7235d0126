"""Single-photon Wigner function and density matrix as lambda-weighted PRCS sums.

No positivity or trace repair is applied; the report quantifies how far the
raw linear combination is from a physical state.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decoy import DecoyWeights
from .quantum_math import (DEFAULT_POLICY, DiagonalFockState, RadialWignerProfile,
                           TruncationPolicy, fock_mixture_density, poisson_weights,
                           prcs_wigner, prcs_wigner_radial, wigner_p_marginal)

NEGATIVE_GUARD = 1e-12


@dataclass(frozen=True)
class ReconstructionReport:
    trace: float
    distance_to_single_photon: float
    min_eigenvalue: float
    has_negative_eigenvalue: bool
    k_max: int


def wigner_estimate(weights: DecoyWeights, r) -> np.ndarray:
    """W_est at arbitrary radii (no grid requirements)."""
    r = np.asarray(r, dtype=float)
    return sum(lam * prcs_wigner(mu, r) for lam, mu in zip(weights.lambdas, weights.mus_with_vacuum))


def reconstruct_wigner(weights: DecoyWeights, r_grid) -> RadialWignerProfile:
    prof = prcs_wigner_radial(0.0, r_grid)  # validates the grid
    return RadialWignerProfile(prof.r_grid, wigner_estimate(weights, prof.r_grid))


def reconstruct_density_matrix(weights: DecoyWeights,
                               policy: TruncationPolicy = DEFAULT_POLICY) -> DiagonalFockState:
    kmax = policy.order(max(weights.source.mus))
    diag = np.zeros(kmax + 1)
    diag[0] = weights.lambdas[0]
    for lam, mu in zip(weights.lambdas[1:], weights.source.mus):
        diag += lam * poisson_weights(mu, kmax)
    return DiagonalFockState(diag)


def quality_metrics(rho_est: DiagonalFockState) -> ReconstructionReport:
    """Trace, Hilbert-Schmidt distance to |1><1|, and smallest eigenvalue.

    The state is diagonal, so its eigenvalues are the diagonal entries.
    """
    d = np.asarray(rho_est.diag, dtype=float)
    target = np.zeros(max(d.size, 2))
    target[1] = 1.0
    padded = np.zeros_like(target)
    padded[:d.size] = d
    dist = float(np.sqrt(np.sum((padded - target) ** 2)))
    lo = float(d.min())
    return ReconstructionReport(float(d.sum()), dist, lo, lo < -NEGATIVE_GUARD, d.size - 1)


def marginal_from_state(rho: DiagonalFockState, x_grid) -> np.ndarray:
    """sum_k rho_kk |psi_k(x)|^2."""
    return fock_mixture_density(rho.diag, x_grid)


def wigner_estimate_marginal(weights: DecoyWeights, x, p_max: float = 6.0, n_p: int = 1201) -> np.ndarray:
    """p-integrated W_est, which should equal the marginal estimate."""
    return wigner_p_marginal(lambda r: wigner_estimate(weights, r), x, p_max, n_p)
