"""Histogramming, vacuum-variance calibration, and mean-photon-number fits."""
from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import (DegenerateInputError, DomainError, FitError, ParseError,
                     SubVacuumWarning, ValidationError)
from .quantum_math import DEFAULT_POLICY, TruncationPolicy, poisson_weights
from . import kernels

VACUUM_VARIANCE = 0.25
DEFAULT_BINS = 201
GOLDEN = (3.0 - math.sqrt(5.0)) / 2.0

# Gauss-Legendre nodes/weights on [-1/2, 1/2] for bin averages
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(4)
_GL_NODES = _GL_NODES / 2.0
_GL_WEIGHTS = _GL_WEIGHTS / 2.0


@dataclass
class RawHistogram:
    """Counts in raw detector units plus running moments of every sample.

    Histograms with identical edges merge with ``+``.
    """

    edges: np.ndarray
    counts: np.ndarray
    n_out_of_range: int = 0
    n_total: int = 0
    sum1: float = 0.0
    sum2: float = 0.0

    def __add__(self, other):
        if not np.array_equal(self.edges, other.edges):
            raise ValidationError("cannot merge histograms with different binning")
        return RawHistogram(self.edges, self.counts + other.counts,
                            self.n_out_of_range + other.n_out_of_range,
                            self.n_total + other.n_total,
                            self.sum1 + other.sum1, self.sum2 + other.sum2)

    @property
    def centers(self):
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def width(self):
        return float(self.edges[1] - self.edges[0])

    @property
    def mean(self):
        return self.sum1 / self.n_total

    @property
    def variance(self):
        """Sample variance of all samples (not the binned estimate)."""
        m = self.mean
        return self.sum2 / self.n_total - m * m


@dataclass
class CalibratedHistogram:
    """Normalized quadrature density in vacuum-variance-1/4 units.

    ``n_samples`` is None for exact theoretical curves; ``binned`` selects
    whether the fit model is averaged over each bin.
    """

    x_grid: np.ndarray
    density: np.ndarray
    delta_x: float
    n_samples: int | None
    scale_factor: float
    variance: float
    binned: bool = True
    meta: dict = field(default_factory=dict)

    @property
    def values(self):
        return self.density


@dataclass(frozen=True)
class MuEstimate:
    mu: float
    sigma: float
    fit_residual: float
    iterations: int = 0


def build_histogram(samples, n_bins: int, range: tuple) -> RawHistogram:
    """Histogram with a closed upper edge; out-of-range samples are counted apart."""
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size == 0:
        raise DomainError("cannot histogram an empty sample set")
    if n_bins < 2:
        raise DomainError("n_bins must be >= 2")
    lo, hi = float(range[0]), float(range[1])
    if not lo < hi:
        raise DomainError("histogram range must satisfy lo < hi")
    counts, edges = np.histogram(samples, bins=n_bins, range=(lo, hi))
    inside = int(counts.sum())
    return RawHistogram(edges, counts.astype(np.int64), samples.size - inside, samples.size,
                        float(samples.sum()), float(np.dot(samples, samples)))


def centered_samples(record) -> np.ndarray:
    s = np.asarray(record.samples, dtype=float)
    return s - s.mean()


def default_range(record_sets, width_sigmas: float = 4.0) -> tuple:
    """Symmetric raw range of +-4 sigma of the widest channel."""
    sig = 0.0
    for records in record_sets:
        n = sum(r.samples.size for r in records)
        v = sum(float(np.sum(centered_samples(r) ** 2)) for r in records) / n
        sig = max(sig, math.sqrt(v))
    if sig == 0.0:
        raise DegenerateInputError("all channels have zero spread")
    return (-width_sigmas * sig, width_sigmas * sig)


def histogram_records(records, n_bins: int, range: tuple) -> RawHistogram:
    """Subtract each record's mean, histogram it, and merge the partial histograms."""
    total = None
    for r in records:
        h = build_histogram(centered_samples(r), n_bins, range)
        total = h if total is None else total + h
    if total is None:
        raise DomainError("no records to histogram")
    return total


def calibrate(vacuum_hist: RawHistogram, signal_hists) -> list[CalibratedHistogram]:
    """Rescale every histogram so the vacuum variance is 1/4; vacuum first.

    Records are mean-subtracted before binning, so all channels keep the
    shared bin centers and line up for the decoy combination.
    """
    for h in signal_hists:
        if not np.array_equal(h.edges, vacuum_hist.edges):
            raise ValidationError("all histograms must share the raw binning")
    v = vacuum_hist.variance
    if not v > 0:
        raise DegenerateInputError("vacuum histogram has zero variance")
    scale = 1.0 / (2.0 * math.sqrt(v))
    out = []
    for h in [vacuum_hist, *signal_hists]:
        inside = int(h.counts.sum())
        if inside == 0:
            raise DegenerateInputError("histogram has no in-range samples")
        dx = h.width * scale
        out.append(CalibratedHistogram(
            x_grid=h.centers * scale,
            density=h.counts / (inside * dx),
            delta_x=dx,
            n_samples=inside,
            scale_factor=scale,
            variance=h.variance * scale * scale,
        ))
    return out


def from_marginal(marginal, meta=None) -> CalibratedHistogram:
    """Wrap an exact theoretical density as a (noise-free) calibrated input."""
    x = np.asarray(marginal.x_grid, dtype=float)
    dens = np.asarray(marginal.values, dtype=float)
    dx = float((x[-1] - x[0]) / (x.size - 1))
    dens = dens / (dens.sum() * dx)
    var = float(np.sum(x * x * dens) * dx - (np.sum(x * dens) * dx) ** 2)
    return CalibratedHistogram(x, dens, dx, None, 1.0, var, binned=False, meta=dict(meta or {}))


# --- mean photon number fit -------------------------------------------------

def model_density(mu, hist: CalibratedHistogram, policy: TruncationPolicy, bin_average: bool):
    weights = poisson_weights(mu, policy.order(mu))
    if not bin_average:
        return kernels.fock_mixture(hist.x_grid, weights)
    pts = (hist.x_grid[:, None] + hist.delta_x * _GL_NODES[None, :]).ravel()
    vals = kernels.fock_mixture(pts, weights).reshape(hist.x_grid.size, _GL_NODES.size)
    return vals @ _GL_WEIGHTS


def brent_minimize(f, lo, hi, rtol=1e-8, atol=1e-12, max_iter=200):
    """Golden-section search with parabolic refinement on [lo, hi].

    Returns (x_min, f_min, iterations); raises FitError past ``max_iter``.
    """
    a, b = lo, hi
    x = w = v = a + GOLDEN * (b - a)
    fx = fw = fv = f(x)
    d = e = 0.0
    for it in range(1, max_iter + 1):
        m = 0.5 * (a + b)
        tol1 = rtol * abs(x) + atol
        tol2 = 2.0 * tol1
        if abs(x - m) <= tol2 - 0.5 * (b - a):
            return x, fx, it
        use_golden = True
        if abs(e) > tol1:
            r = (x - w) * (fx - fv)
            q = (x - v) * (fx - fw)
            p = (x - v) * q - (x - w) * r
            q = 2.0 * (q - r)
            if q > 0:
                p = -p
            q = abs(q)
            if abs(p) < abs(0.5 * q * e) and q * (a - x) < p < q * (b - x):
                e, d = d, p / q
                u = x + d
                if u - a < tol2 or b - u < tol2:
                    d = tol1 if x < m else -tol1
                use_golden = False
        if use_golden:
            e = (b - x) if x < m else (a - x)
            d = GOLDEN * e
        u = x + d if abs(d) >= tol1 else x + (tol1 if d > 0 else -tol1)
        fu = f(u)
        if fu <= fx:
            if u < x:
                b = x
            else:
                a = x
            v, fv, w, fw, x, fx = w, fw, x, fx, u, fu
        else:
            if u < x:
                a = u
            else:
                b = u
            if fu <= fw or w == x:
                v, fv, w, fw = w, fw, u, fu
            elif fu <= fv or v == x or v == w:
                v, fv = u, fu
    raise FitError(f"mean photon number fit did not converge in {max_iter} iterations")


def fit_mu(hist: CalibratedHistogram, policy: TruncationPolicy = DEFAULT_POLICY,
           bin_average: bool | None = None) -> MuEstimate:
    """Least-squares fit of the PRCS marginal to a calibrated histogram.

    Minimizes S(mu) = sum_bins (density - X_mu)^2 over mu >= 0. The 1-sigma
    error is sqrt(2 s^2 / S''(mu)) with s^2 = S(mu_hat) / (n_bins - 1).
    """
    if bin_average is None:
        bin_average = hist.binned
    y = np.asarray(hist.density, dtype=float)
    if hist.n_samples is not None:
        sig_v = VACUUM_VARIANCE * math.sqrt(2.0 / hist.n_samples)
        if hist.variance < VACUUM_VARIANCE - 3.0 * sig_v:
            warnings.warn(f"calibrated variance {hist.variance:.6g} is below the vacuum level "
                          "by more than 3 sigma; calibration is inconsistent", SubVacuumWarning,
                          stacklevel=2)

    def S(mu):
        r = y - model_density(mu, hist, policy, bin_average)
        return float(r @ r)

    hi = max(2.0 * (4.0 * hist.variance - 1.0), 0.1)
    total_it = 0
    for _ in range(12):
        mu_hat, s_min, it = brent_minimize(S, 0.0, hi, max_iter=200 - total_it)
        total_it += it
        if hi - mu_hat > 1e-6 * hi:
            break
        hi *= 2.0  # minimum sits on the upper bracket edge; widen
    else:
        raise FitError("mean photon number fit ran off the bracket")

    h = max(1e-4 * mu_hat, 1e-5)
    if mu_hat > h:
        curv = (S(mu_hat + h) - 2.0 * s_min + S(mu_hat - h)) / (h * h)
    else:
        curv = (S(mu_hat + 2 * h) - 2.0 * S(mu_hat + h) + s_min) / (h * h)
    s2 = s_min / max(y.size - 1, 1)
    sigma = math.sqrt(2.0 * s2 / curv) if curv > 0 else math.inf
    return MuEstimate(float(mu_hat), float(sigma), float(s_min), total_it)


# --- calibrated histogram files --------------------------------------------

_KV = re.compile(r"^#\s*([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*?)\s*$")


def _fmt(v):
    if v is None:
        return "exact"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_calibrated(hist: CalibratedHistogram, path) -> Path:
    path = Path(path)
    meta = dict(hist.meta)
    meta.setdefault("mu_hat", math.nan)
    meta.setdefault("sigma_mu", math.nan)
    header = ["# prcs-tomo calibrated histogram"]
    for k in ("mu_hat", "sigma_mu"):
        header.append(f"# {k}={_fmt(float(meta.pop(k)))}")
    header += [
        f"# delta_x={_fmt(float(hist.delta_x))}",
        f"# n_samples={_fmt(hist.n_samples)}",
        f"# scale_factor={_fmt(float(hist.scale_factor))}",
        f"# variance={_fmt(float(hist.variance))}",
        f"# binned={_fmt(bool(hist.binned))}",
    ]
    header += [f"# {k}={_fmt(v)}" for k, v in sorted(meta.items())]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(header) + "\n")
        fh.write("# x,density\n")
        np.savetxt(fh, np.column_stack([hist.x_grid, hist.density]), fmt="%.17g", delimiter=",")
    return path


def _parse_value(text):
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    if low == "exact":
        return None
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def read_calibrated(path) -> CalibratedHistogram:
    path = Path(path)
    meta, rows = {}, []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                m = _KV.match(line)
                if m:
                    meta[m.group(1)] = _parse_value(m.group(2))
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ParseError(f"expected 'x,density', got {line!r}", path, lineno)
            try:
                rows.append((float(parts[0]), float(parts[1])))
            except ValueError:
                raise ParseError(f"malformed number in {line!r}", path, lineno) from None
    for key in ("delta_x", "n_samples", "scale_factor"):
        if key not in meta:
            raise ParseError(f"missing header key {key!r}", path)
    if len(rows) < 2:
        raise ParseError("fewer than two data rows", path)
    data = np.array(rows)
    n_samples = meta.pop("n_samples")
    hist = CalibratedHistogram(
        x_grid=data[:, 0], density=data[:, 1],
        delta_x=float(meta.pop("delta_x")), n_samples=n_samples,
        scale_factor=float(meta.pop("scale_factor")),
        variance=float(meta.pop("variance", math.nan)),
        binned=bool(meta.pop("binned", True)),
        meta=meta,
    )
    step = (hist.x_grid[-1] - hist.x_grid[0]) / (hist.x_grid.size - 1)
    if not math.isclose(step, hist.delta_x, rel_tol=1e-6):
        raise ValidationError(f"{path}: delta_x={hist.delta_x} disagrees with grid spacing {step}")
    return hist


def with_fit(hist: CalibratedHistogram, est: MuEstimate) -> CalibratedHistogram:
    meta = dict(hist.meta, mu_hat=est.mu, sigma_mu=est.sigma, fit_residual=est.fit_residual)
    return replace(hist, meta=meta)
