import math

import numpy as np
import pytest
from scipy import special, stats

from prcs_tomo import synth
from prcs_tomo.errors import DomainError, ParseError, ValidationError


def prcs_cdf(x, mu, n_phi=4000):
    """CDF of the phase-averaged marginal as an average of shifted normal CDFs."""
    phi = (np.arange(n_phi) + 0.5) * 2 * np.pi / n_phi
    c = math.sqrt(mu) * np.cos(phi)
    x = np.asarray(x, dtype=float)
    return np.mean(special.ndtr((x[..., None] - c) / 0.5), axis=-1)


def chi2_pvalue(samples, mu, n_bins=100):
    sd = math.sqrt(0.25 + mu / 2)
    edges = np.linspace(-3.5 * sd, 3.5 * sd, n_bins + 1)
    counts, _ = np.histogram(samples, edges)
    p = np.diff(prcs_cdf(edges, mu))
    expected = counts.sum() * p / p.sum()
    chi2 = np.sum((counts - expected) ** 2 / expected)
    return stats.chi2.sf(chi2, n_bins - 1)


def test_vacuum_sample_is_gaussian(rng):
    x = synth.sample_prcs_quadrature(0.0, np.zeros(200_000), rng)
    assert x.var() == pytest.approx(0.25, rel=0.02)
    assert isinstance(synth.sample_prcs_quadrature(0.0, 0.3, rng), float)


@pytest.mark.parametrize("mu", [0.0, 0.5, 2.2])
def test_sample_variance_law_of_total_variance(mu, rng):
    n = 1_000_000
    x = synth.sample_prcs_quadrature(mu, rng.uniform(0, 2 * np.pi, n), rng)
    dev = (x - x.mean()) ** 2
    se = dev.std() / math.sqrt(n)
    assert abs(x.var() - (0.25 + mu / 2)) < 5 * se


def test_sampler_ks_against_marginal_cdf(rng):
    n = 1_000_000
    x = synth.sample_prcs_quadrature(0.436, rng.uniform(0, 2 * np.pi, n), rng)
    xs = np.sort(x)
    cdf = prcs_cdf(xs[::50], 0.436)
    emp_hi = (np.arange(n)[::50] + 1) / n
    emp_lo = np.arange(n)[::50] / n
    d = max(np.max(emp_hi - cdf), np.max(cdf - emp_lo))
    # between evaluated points both CDFs are monotone, so the full sup is at most d + 50/n
    assert d + 50 / n < 1.628 / math.sqrt(n)  # 1% critical value


def test_sampler_rejects_negative_mu(rng):
    with pytest.raises(DomainError):
        synth.sample_prcs_quadrature(-1.0, 0.0, rng)


def test_generate_records_deterministic_and_counted():
    cfg = synth.SimulationConfig(0.436, 1000, 5, rng_seed=42)
    a, b = synth.generate_records(cfg), synth.generate_records(cfg)
    assert len(a) == 5 and sum(r.samples.size for r in a) == 5000
    assert all(x.samples.tobytes() == y.samples.tobytes() for x, y in zip(a, b))
    other = synth.generate_records(synth.SimulationConfig(0.436, 1000, 5, rng_seed=43))
    assert not np.array_equal(a[0].samples, other[0].samples)
    assert not np.array_equal(a[0].samples, a[1].samples)


def test_config_validation():
    for bad in (dict(mu_true=-1), dict(mu_true=0.1, n_samples_per_record=0),
                dict(mu_true=0.1, n_records=0), dict(mu_true=0.1, phase_periods=0),
                dict(mu_true=0.1, electronic_noise_sigma=-0.1), dict(mu_true=0.1, gain=0)):
        with pytest.raises(DomainError):
            synth.SimulationConfig(**bad)


def test_electronic_noise_adds_variance():
    cfg = synth.SimulationConfig(0.0, 100_000, 10, electronic_noise_sigma=0.1, gain=1.0, rng_seed=7)
    x = np.concatenate([r.samples for r in synth.generate_records(cfg)])
    se = ((x - x.mean()) ** 2).std() / math.sqrt(x.size)
    assert abs(x.var() - 0.26) < 5 * se


def test_gain_scales_samples():
    a = synth.generate_record(synth.SimulationConfig(0.3, 500, 1, gain=1.0, rng_seed=3), 0)
    b = synth.generate_record(synth.SimulationConfig(0.3, 500, 1, gain=2.5, rng_seed=3), 0)
    np.testing.assert_allclose(b.samples, 2.5 * a.samples, rtol=1e-15)


@pytest.mark.parametrize("periods", [1, 2, 5])
def test_integer_ramp_gives_uniform_phase(periods):
    phases = np.mod(synth.ramp_phases(100_000, periods, offset=1.234), 2 * np.pi)
    counts, _ = np.histogram(phases, bins=20, range=(0, 2 * np.pi))
    assert stats.chisquare(counts).pvalue > 0.01


def test_fractional_ramp_is_not_uniform():
    phases = np.mod(synth.ramp_phases(100_000, 1.5), 2 * np.pi)
    counts, _ = np.histogram(phases, bins=20, range=(0, 2 * np.pi))
    assert stats.chisquare(counts).pvalue < 0.01


@pytest.mark.parametrize("mu,noise,periods", [(0.0, 0.0, 1), (0.436, 0.0, 1), (2.2, 0.05, 3), (1.0, 0.0, 1.3)])
def test_pooled_samples_centered(mu, noise, periods):
    cfg = synth.SimulationConfig(mu, 20_000, 20, electronic_noise_sigma=noise,
                                 phase_periods=periods, gain=1.0, rng_seed=11)
    x = np.concatenate([r.samples for r in synth.generate_records(cfg)])
    assert abs(x.mean()) <= 5 * x.std() / math.sqrt(x.size)


@pytest.mark.slow
@pytest.mark.parametrize("mu", [0.178, 0.436, 2.20])
def test_pooled_distribution_matches_marginal(mu):
    cfg = synth.SimulationConfig(mu, 100_000, 100, gain=1.0, rng_seed=int(mu * 1000))
    x = np.concatenate([r.samples for r in synth.generate_records(cfg)])
    assert x.size == 10_000_000
    assert chi2_pvalue(x, mu) > 0.01


# --- record files -----------------------------------------------------------------

def test_record_round_trip(tmp_path):
    cfg = synth.SimulationConfig(0.178, 200, 3, electronic_noise_sigma=0.02, phase_periods=2.0, rng_seed=2**63 + 5)
    recs = synth.generate_records(cfg)
    paths = synth.write_records(recs, tmp_path / "recs")
    assert [p.name for p in paths] == ["record_0000.txt", "record_0001.txt", "record_0002.txt"]
    back = synth.read_records(tmp_path / "recs")
    assert back == recs
    assert back[0].config_echo.mu_true == 0.178
    assert synth.read_records(paths[1]) == [recs[1]]


def test_truncated_record_is_an_error(tmp_path):
    rec = synth.generate_record(synth.SimulationConfig(0.178, 50, 1), 0)
    p = synth.write_record(rec, tmp_path / "r.txt")
    lines = p.read_text().splitlines()
    p.write_text("\n".join(lines[:-10]) + "\n")
    with pytest.raises(ParseError, match="truncated") as exc:
        synth.read_record(p)
    assert exc.value.line is not None


def test_malformed_sample_reports_line(tmp_path):
    rec = synth.generate_record(synth.SimulationConfig(0.178, 20, 1), 0)
    p = synth.write_record(rec, tmp_path / "r.txt")
    lines = p.read_text().splitlines()
    lines[14] = "1.0e-3x"
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(ParseError) as exc:
        synth.read_record(p)
    assert exc.value.line == 15


def test_missing_header_key(tmp_path):
    p = tmp_path / "r.txt"
    p.write_text("# mu_true=0.1\n# gain=1.0\n1.0\n")
    with pytest.raises(ParseError, match="seed"):
        synth.read_record(p)


def test_mixed_configs_in_directory(tmp_path):
    a = synth.generate_record(synth.SimulationConfig(0.178, 20, 2, rng_seed=1), 0)
    b = synth.generate_record(synth.SimulationConfig(0.436, 20, 2, rng_seed=1), 1)
    synth.write_records([a, b], tmp_path)
    with pytest.raises(ValidationError):
        synth.read_records(tmp_path)


def test_full_precision_in_files(tmp_path):
    rec = synth.generate_record(synth.SimulationConfig(2.2, 1000, 1, rng_seed=9), 0)
    back = synth.read_record(synth.write_record(rec, tmp_path / "r.txt"))
    assert back.samples.tobytes() == rec.samples.tobytes()
