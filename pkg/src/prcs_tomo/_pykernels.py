"""Pure numpy implementations of the numerical kernels.

Used when the compiled extension is unavailable or disabled with
``PRCS_TOMO_PURE_PYTHON=1``. Signatures match ``_ckernels`` exactly.
"""
import numpy as np

# Cephes Chebyshev coefficients for exp(-x) I0(x); [0, 8] and (8, inf).
I0E_A = np.array([
    -4.4153416464793395e-18, 3.3307945188222384e-17, -2.431279846547955e-16,
    1.715391285555133e-15, -1.1685332877993451e-14, 7.676185498604936e-14,
    -4.856446783111929e-13, 2.95505266312964e-12, -1.726826291441556e-11,
    9.675809035373237e-11, -5.189795601635263e-10, 2.6598237246823866e-09,
    -1.300025009986248e-08, 6.046995022541919e-08, -2.670793853940612e-07,
    1.1173875391201037e-06, -4.4167383584587505e-06, 1.6448448070728896e-05,
    -5.754195010082104e-05, 0.00018850288509584165, -0.0005763755745385824,
    0.0016394756169413357, -0.004324309995050576, 0.010546460394594998,
    -0.02373741480589947, 0.04930528423967071, -0.09490109704804764,
    0.17162090152220877, -0.3046826723431984, 0.6767952744094761,
])
I0E_B = np.array([
    -7.233180487874754e-18, -4.830504485944182e-18, 4.46562142029676e-17,
    3.461222867697461e-17, -2.8276239805165836e-16, -3.425485619677219e-16,
    1.7725601330565263e-15, 3.8116806693526224e-15, -9.554846698828307e-15,
    -4.150569347287222e-14, 1.54008621752141e-14, 3.8527783827421426e-13,
    7.180124451383666e-13, -1.7941785315068062e-12, -1.3215811840447713e-11,
    -3.1499165279632416e-11, 1.1889147107846439e-11, 4.94060238822497e-10,
    3.3962320257083865e-09, 2.266668990498178e-08, 2.0489185894690638e-07,
    2.8913705208347567e-06, 6.889758346916825e-05, 0.0033691164782556943,
    0.8044904110141088,
])

# (2/pi)**0.25 * exp(-x**2) is psi_0 in the variance-1/4 convention
_PSI0_NORM = (2.0 / np.pi) ** 0.25


def _chbevl(t, coeffs):
    b0 = np.zeros_like(t)
    b1 = np.zeros_like(t)
    b2 = np.zeros_like(t)
    for c in coeffs:
        b2 = b1
        b1 = b0
        b0 = t * b1 - b2 + c
    return 0.5 * (b0 - b2)


def i0e(x):
    """Exponentially scaled modified Bessel function ``exp(-|x|) I0(x)``."""
    x = np.abs(np.asarray(x, dtype=np.float64))
    out = np.empty_like(x)
    small = x <= 8.0
    xs = x[small]
    out[small] = _chbevl(xs / 2.0 - 2.0, I0E_A)
    xl = x[~small]
    out[~small] = _chbevl(32.0 / xl - 2.0, I0E_B) / np.sqrt(xl)
    return out


def fock_density_table(x, kmax):
    """Return ``|psi_k(x)|**2`` for k = 0..kmax as a (kmax + 1, len(x)) array.

    Uses the orthonormal recurrence in y = sqrt(2) x:
    psi_{k+1} = sqrt(2/(k+1)) y psi_k - sqrt(k/(k+1)) psi_{k-1}.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.sqrt(2.0) * x
    table = np.empty((kmax + 1, x.size))
    prev = np.zeros_like(x)
    cur = _PSI0_NORM * np.exp(-x * x)
    table[0] = cur * cur
    for k in range(kmax):
        nxt = np.sqrt(2.0 / (k + 1)) * y * cur - np.sqrt(k / (k + 1.0)) * prev
        prev, cur = cur, nxt
        table[k + 1] = cur * cur
    return table


def fock_mixture(x, coeffs):
    """Return ``sum_k coeffs[k] |psi_k(x)|**2`` without storing the table."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    coeffs = np.asarray(coeffs, dtype=np.float64)
    y = np.sqrt(2.0) * x
    prev = np.zeros_like(x)
    cur = _PSI0_NORM * np.exp(-x * x)
    acc = coeffs[0] * cur * cur
    for k in range(coeffs.size - 1):
        nxt = np.sqrt(2.0 / (k + 1)) * y * cur - np.sqrt(k / (k + 1.0)) * prev
        prev, cur = cur, nxt
        acc += coeffs[k + 1] * cur * cur
    return acc
