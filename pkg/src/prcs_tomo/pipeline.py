"""simulate -> calibrate -> fit-mu -> estimate -> reconstruct -> report.

Every stage reads the previous stage's files from the output directory, so
stages can be run one at a time or all at once with ``run``.
"""
from __future__ import annotations

import configparser
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import calibration as cal
from . import decoy, reconstruct, synth, tables
from .errors import ValidationError
from .quantum_math import (TruncationPolicy, prcs_marginal, single_photon_marginal,
                           single_photon_wigner, uniform_grid)

log = logging.getLogger(__name__)

VACUUM = "vacuum"


class ConfigError(ValidationError):
    def __init__(self, field_name, message):
        super().__init__(f"config field {field_name!r}: {message}")
        self.field = field_name


@dataclass
class Channel:
    name: str
    mu: float | None = None
    sigma: float = 0.0  # extra mu uncertainty, mainly for theoretical mode
    records: Path | None = None  # existing record directory; skips simulation


@dataclass
class PipelineConfig:
    channels: list
    vacuum: Channel = field(default_factory=lambda: Channel(VACUUM, 0.0))
    out_dir: Path = Path("prcs_out")
    seed: int = 0
    theoretical: bool = False
    n_records: int = 10
    n_samples: int = 100_000
    noise_sigma: float = 0.0
    gain: float = synth.DEFAULT_GAIN
    phase_periods: float = 1.0
    bins: int = cal.DEFAULT_BINS
    range_sigmas: float = 4.0
    tail_tolerance: float = 1e-10
    k_min_cap: int = 20
    x_min: float = -6.0
    x_max: float = 6.0
    x_step: float = 0.01
    r_max: float = 3.0
    r_step: float = 0.01
    histogram_errors: bool = True
    mu_errors: bool = True

    @property
    def policy(self) -> TruncationPolicy:
        return TruncationPolicy(self.tail_tolerance, self.k_min_cap)

    @property
    def all_channels(self):
        return [self.vacuum, *self.channels]

    def validate(self):
        if not self.channels:
            raise ConfigError("channels", "at least one non-zero mean photon number channel is required")
        if self.vacuum.mu not in (None, 0.0):
            raise ConfigError("vacuum.mu", "vacuum channel must have mu = 0")
        names = [c.name for c in self.all_channels]
        if len(set(names)) != len(names):
            raise ConfigError("channels", f"duplicate channel names {names}")
        for c in self.channels:
            if c.mu is None and c.records is None:
                raise ConfigError(f"{c.name}.mu", "needs a mean photon number or a records path")
            if c.mu is not None and not c.mu > 0:
                raise ConfigError(f"{c.name}.mu", f"must be > 0, got {c.mu}")
            if self.theoretical and c.mu is None:
                raise ConfigError(f"{c.name}.mu", "theoretical mode needs an explicit mean photon number")
            if c.sigma < 0:
                raise ConfigError(f"{c.name}.sigma", "must be >= 0")
        for name in ("n_records", "n_samples", "bins"):
            if getattr(self, name) < 1:
                raise ConfigError(name, "must be positive")
        if self.bins < 2:
            raise ConfigError("bins", "must be >= 2")
        if self.noise_sigma < 0:
            raise ConfigError("noise", "must be >= 0")
        if not self.x_min < self.x_max or self.x_step <= 0:
            raise ConfigError("x_grid", "need x_min < x_max and x_step > 0")
        if self.r_max <= 0 or self.r_step <= 0:
            raise ConfigError("r_grid", "need r_max > 0 and r_step > 0")
        return self

    # paths
    def records_dir(self, ch: Channel) -> Path:
        return ch.records if ch.records is not None else self.out_dir / "records" / ch.name

    def calibrated_path(self, ch: Channel) -> Path:
        return self.out_dir / "calibrated" / f"{ch.name}.csv"


_PIPELINE_FIELDS = {
    "seed": int, "theoretical": "bool", "records": ("n_records", int),
    "samples": ("n_samples", int), "noise": ("noise_sigma", float), "gain": float,
    "phase_periods": float, "bins": int, "range_sigmas": float,
    "tail_tolerance": float, "k_min_cap": int, "x_min": float, "x_max": float,
    "x_step": float, "r_max": float, "r_step": float,
    "histogram_errors": "bool", "mu_errors": "bool", "out": ("out_dir", Path),
}


def load_config(path) -> PipelineConfig:
    """Read an INI-style config: [pipeline], [vacuum], and [channel:NAME] sections."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError("config", str(exc)) from None
    kwargs = {}
    if cp.has_section("pipeline"):
        sec = cp["pipeline"]
        for key in sec:
            if key not in _PIPELINE_FIELDS:
                raise ConfigError(f"pipeline.{key}", "unknown key")
            spec = _PIPELINE_FIELDS[key]
            name, conv = (spec if isinstance(spec, tuple) else (key, spec))
            try:
                kwargs[name] = sec.getboolean(key) if conv == "bool" else conv(sec[key])
            except ValueError:
                raise ConfigError(f"pipeline.{key}", f"bad value {sec[key]!r}") from None
        if "out_dir" in kwargs and not kwargs["out_dir"].is_absolute():
            kwargs["out_dir"] = path.parent / kwargs["out_dir"]

    def channel(name, sec):
        try:
            mu = float(sec["mu"]) if "mu" in sec else None
            sigma = float(sec.get("sigma", "0"))
        except ValueError:
            raise ConfigError(f"{name}.mu", "not a number") from None
        rec = sec.get("records")
        if rec is not None:
            rec = Path(rec)
            if not rec.is_absolute():
                rec = path.parent / rec
        return Channel(name, mu, sigma, rec)

    if cp.has_section("vacuum"):
        vac = channel(VACUUM, cp["vacuum"])
        if vac.mu is None:
            vac.mu = 0.0
        kwargs["vacuum"] = vac
    channels = []
    for sec_name in cp.sections():
        if sec_name.startswith("channel:"):
            channels.append(channel(sec_name.split(":", 1)[1].strip(), cp[sec_name]))
        elif sec_name not in ("pipeline", "vacuum"):
            raise ConfigError(sec_name, "unknown section")
    return PipelineConfig(channels=channels, **kwargs)


def channels_from_mus(mus, sigmas=None):
    sigmas = sigmas or [0.0] * len(mus)
    return [Channel(f"mu{i + 1}", float(m), float(s)) for i, (m, s) in enumerate(zip(mus, sigmas))]


def channel_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1, np.uint64)[0])


# --- stages -----------------------------------------------------------------

def stage_simulate(cfg: PipelineConfig) -> list[Path]:
    cfg.validate()
    if cfg.theoretical:
        log.info("theoretical mode: nothing to simulate")
        return []
    written = []
    for i, ch in enumerate(cfg.all_channels):
        if ch.records is not None:
            continue
        sim = synth.SimulationConfig(
            mu_true=ch.mu, n_samples_per_record=cfg.n_samples, n_records=cfg.n_records,
            electronic_noise_sigma=cfg.noise_sigma, phase_periods=cfg.phase_periods,
            rng_seed=channel_seed(cfg.seed, i), gain=cfg.gain)
        log.info("simulating %s (mu=%g, %d x %d samples)", ch.name, ch.mu, cfg.n_records, cfg.n_samples)
        written += synth.write_records(synth.generate_records(sim), cfg.records_dir(ch))
    return written


def calibrate_records(record_sets, bins, range_sigmas=4.0):
    """Shared-binning calibration of in-memory records; vacuum set first."""
    rng = cal.default_range(record_sets, range_sigmas)
    raws = [cal.histogram_records(rs, bins, rng) for rs in record_sets]
    hists = cal.calibrate(raws[0], raws[1:])
    n_vac = raws[0].n_total
    for h in hists:
        h.meta["vacuum_variance_rel_sigma"] = math.sqrt(2.0 / n_vac)
    return hists


def stage_calibrate(cfg: PipelineConfig) -> list[Path]:
    cfg.validate()
    out = cfg.out_dir / "calibrated"
    out.mkdir(parents=True, exist_ok=True)
    chans = cfg.all_channels
    if cfg.theoretical:
        x = uniform_grid(cfg.x_min, cfg.x_max, cfg.x_step)
        hists = [cal.from_marginal(prcs_marginal(ch.mu, x, cfg.policy)) for ch in chans]
        for h in hists:
            h.meta["vacuum_variance_rel_sigma"] = 0.0
    else:
        record_sets = []
        for ch in chans:
            d = cfg.records_dir(ch)
            if not d.exists():
                raise FileNotFoundError(f"records for channel {ch.name!r} not found at {d}; run `simulate` first")
            record_sets.append(synth.read_records(d))
        hists = calibrate_records(record_sets, cfg.bins, cfg.range_sigmas)
    paths = []
    for ch, h in zip(chans, hists):
        h.meta.update(channel=ch.name, role=VACUUM if ch is cfg.vacuum else "prcs",
                      mu_target=math.nan if ch.mu is None else float(ch.mu),
                      sigma_config=float(ch.sigma))
        paths.append(cal.write_calibrated(h, cfg.calibrated_path(ch)))
    return paths


def fit_channel(hist, policy, sigma_config=0.0):
    """fit_mu plus the vacuum-scale and configured uncertainties, in quadrature."""
    est = cal.fit_mu(hist, policy)
    rel = float(hist.meta.get("vacuum_variance_rel_sigma", 0.0) or 0.0)
    # mu ~ 2 (var - 1/4); a relative vacuum-variance error rel rescales var
    sigma_cal = 2.0 * hist.variance * rel
    sigma = math.sqrt(est.sigma**2 + sigma_cal**2 + sigma_config**2)
    return est, sigma_cal, sigma


def _load_calibrated(cfg):
    hists = []
    for ch in cfg.all_channels:
        p = cfg.calibrated_path(ch)
        if not p.exists():
            raise FileNotFoundError(f"calibrated histogram {p} missing; run `calibrate` first")
        hists.append(cal.read_calibrated(p))
    return hists


def stage_fit(cfg: PipelineConfig) -> dict:
    cfg.validate()
    summary = {}
    for ch, h in zip(cfg.all_channels, _load_calibrated(cfg)):
        est, sigma_cal, sigma = fit_channel(h, cfg.policy, ch.sigma)
        h.meta.update(mu_hat=est.mu, sigma_mu=sigma, fit_residual=est.fit_residual)
        cal.write_calibrated(h, cfg.calibrated_path(ch))
        summary.update({
            f"channel.{ch.name}.mu_target": h.meta.get("mu_target", math.nan),
            f"channel.{ch.name}.mu_hat": est.mu,
            f"channel.{ch.name}.sigma_mu": sigma,
            f"channel.{ch.name}.sigma_fit": est.sigma,
            f"channel.{ch.name}.sigma_calibration": sigma_cal,
            f"channel.{ch.name}.fit_residual": est.fit_residual,
        })
        log.info("%s: mu_hat = %.6g +- %.2g", ch.name, est.mu, sigma)
    tables.write_summary(cfg.out_dir / "mu_fit.txt", summary, "prcs-tomo mean photon number fits")
    return summary


def _fitted(cfg):
    """Calibrated histograms with fits, PRCS channels sorted by mu_hat."""
    hists = _load_calibrated(cfg)
    for ch, h in zip(cfg.all_channels, hists):
        if not math.isfinite(h.meta.get("mu_hat", math.nan)):
            raise FileNotFoundError(f"channel {ch.name!r} has no fitted mu; run `fit-mu` first")
    vac, rest = hists[0], sorted(hists[1:], key=lambda h: h.meta["mu_hat"])
    return vac, rest


def _mu_set(rest, L):
    return decoy.MeanPhotonSet([h.meta["mu_hat"] for h in rest[:L]],
                               [h.meta["sigma_mu"] for h in rest[:L]])


def stage_estimate(cfg: PipelineConfig) -> list[Path]:
    cfg.validate()
    vac, rest = _fitted(cfg)
    paths = []
    for L in range(1, len(rest) + 1):
        w = decoy.decoy_weights(_mu_set(rest, L))
        counts = [h.n_samples for h in [vac, *rest[:L]]]
        est = decoy.estimate_with_errors(
            w, vac, rest[:L], histogram_counts=counts,
            include_histogram=cfg.histogram_errors, include_mu=cfg.mu_errors)
        meta = {"L": L, "mus": list(w.source.mus), "sigmas": list(w.source.sigmas),
                "lambdas": list(w.lambdas), "trace_estimate": w.trace}
        paths.append(tables.write_table(
            cfg.out_dir / f"estimate_L{L}.csv", ["x", "y1_est", "sigma", "y1_exact"],
            [est.x_grid, est.values, est.sigma_values, single_photon_marginal(est.x_grid)],
            meta, "prcs-tomo single-photon marginal estimate"))
    return paths


def stage_reconstruct(cfg: PipelineConfig) -> list[Path]:
    cfg.validate()
    _, rest = _fitted(cfg)
    r = uniform_grid(0.0, cfg.r_max, cfg.r_step)
    metrics, paths = {}, []
    for L in range(1, len(rest) + 1):
        w = decoy.decoy_weights(_mu_set(rest, L))
        prof = reconstruct.reconstruct_wigner(w, r)
        paths.append(tables.write_table(
            cfg.out_dir / f"wigner_L{L}.csv", ["r", "w_est", "w_exact"],
            [prof.r_grid, prof.values, single_photon_wigner(prof.r_grid)],
            {"L": L, "mus": list(w.source.mus)}, "prcs-tomo reconstructed Wigner function"))
        rho = reconstruct.reconstruct_density_matrix(w, cfg.policy)
        paths.append(tables.write_table(
            cfg.out_dir / f"rho_L{L}.csv", ["k", "diag"], [np.arange(rho.k_max + 1), rho.diag],
            {"L": L, "mus": list(w.source.mus)}, "prcs-tomo reconstructed density matrix diagonal"))
        rep = reconstruct.quality_metrics(rho)
        metrics.update({
            f"L{L}.mus": list(w.source.mus),
            f"L{L}.trace": rep.trace,
            f"L{L}.distance": rep.distance_to_single_photon,
            f"L{L}.min_eigenvalue": rep.min_eigenvalue,
            f"L{L}.negative_eigenvalues": rep.has_negative_eigenvalue,
            f"L{L}.k_max": rep.k_max,
        })
    metrics["L_max"] = len(rest)
    paths.append(tables.write_summary(cfg.out_dir / "reconstruct.txt", metrics,
                                      "prcs-tomo reconstruction metrics"))
    return paths


def emit_plot_data(cfg: PipelineConfig) -> list[Path]:
    """Plot-ready data files under ``plots/``."""
    plots = cfg.out_dir / "plots"
    plots.mkdir(parents=True, exist_ok=True)
    paths = []
    vac, rest = _fitted(cfg)
    for h in [vac, *rest]:
        theory = prcs_marginal(max(h.meta["mu_hat"], 0.0), h.x_grid, cfg.policy).values
        paths.append(tables.write_table(
            plots / f"marginal_{h.meta['channel']}.csv", ["x", "density_observed", "density_theory"],
            [h.x_grid, h.density, theory],
            {"channel": h.meta["channel"], "mu_hat": h.meta["mu_hat"], "delta_x": h.delta_x},
            "prcs-tomo calibrated histogram vs fitted marginal"))
    for L in range(1, len(rest) + 1):
        for src, dst, cols in ((f"estimate_L{L}.csv", f"marginal_estimate_L{L}.csv", ["x", "Y1_est", "sigma", "Y1_exact"]),
                               (f"wigner_L{L}.csv", f"wigner_estimate_L{L}.csv", ["r", "W_est", "W_exact"])):
            p = cfg.out_dir / src
            if not p.exists():
                raise FileNotFoundError(f"{p} missing; run `estimate` and `reconstruct` first")
            meta, _, data = tables.read_table(p)
            paths.append(tables.write_table(plots / dst, cols, data.T, meta))
    return paths


def _yes_no(flag):
    return "Yes" if flag else "No"


def stage_report(cfg: PipelineConfig) -> str:
    cfg.validate()
    fit_path, rec_path = cfg.out_dir / "mu_fit.txt", cfg.out_dir / "reconstruct.txt"
    for p, stage in ((fit_path, "fit-mu"), (rec_path, "reconstruct")):
        if not p.exists():
            raise FileNotFoundError(f"{p} missing; run `{stage}` first")
    fits = tables.read_summary(fit_path)
    rec = tables.read_summary(rec_path)
    emit_plot_data(cfg)

    mode = "theoretical" if cfg.theoretical else f"simulated (seed {cfg.seed})"
    lines = ["PRCS single-photon reconstruction report", f"mode: {mode}", "",
             "Mean photon numbers",
             f"{'channel':<10} {'mu_target':>10} {'mu_hat':>12} {'sigma_mu':>10}"]
    summary = {"mode": "theoretical" if cfg.theoretical else "simulated", "seed": cfg.seed}
    for ch in cfg.all_channels:
        k = f"channel.{ch.name}"
        mu_t, mu_h, s = (float(fits[f"{k}.{f}"]) for f in ("mu_target", "mu_hat", "sigma_mu"))
        lines.append(f"{ch.name:<10} {mu_t:>10.4g} {mu_h:>12.6f} {s:>10.2e}")
        summary.update({f"{k}.mu_target": mu_t, f"{k}.mu_hat": mu_h, f"{k}.sigma_mu": s})
    lines += ["", "Reconstructed density matrix",
              f"{'mu != 0':<28} {'Tr(rho)':>8} {'|rho - |1><1||':>16} {'eigenvalues < 0':>16}"]
    for L in range(1, int(rec["L_max"]) + 1):
        mus = [float(m) for m in rec[f"L{L}.mus"].split(",")]
        tr, dist = float(rec[f"L{L}.trace"]), float(rec[f"L{L}.distance"])
        neg = rec[f"L{L}.negative_eigenvalues"] == "true"
        label = ", ".join(f"{m:.4g}" for m in mus)
        lines.append(f"{label:<28} {tr:>8.3f} {dist:>16.2e} {_yes_no(neg):>16}")
        summary.update({f"L{L}.mus": mus, f"L{L}.trace": tr, f"L{L}.distance": dist,
                        f"L{L}.min_eigenvalue": float(rec[f"L{L}.min_eigenvalue"]),
                        f"L{L}.negative_eigenvalues": neg})
    text = "\n".join(lines) + "\n"
    (cfg.out_dir / "report.txt").write_text(text, encoding="utf-8")
    tables.write_summary(cfg.out_dir / "summary.txt", summary, "prcs-tomo summary")
    return text


STAGES = {
    "simulate": stage_simulate,
    "calibrate": stage_calibrate,
    "fit-mu": stage_fit,
    "estimate": stage_estimate,
    "reconstruct": stage_reconstruct,
    "report": stage_report,
}


def run(cfg: PipelineConfig) -> str:
    cfg.validate()
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    for name, stage in STAGES.items():
        log.info("stage %s", name)
        result = stage(cfg)
    return result


def with_overrides(cfg: PipelineConfig, **kw) -> PipelineConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
