"""Synthetic balanced-homodyne records for PRCS and vacuum inputs.

A coherent state at fixed phase phi has a Gaussian quadrature of variance
1/4 centred at sqrt(mu) cos(phi); sweeping phi with a triangular ramp over an
integer number of 2 pi periods reproduces the phase-averaged marginal.
"""
from __future__ import annotations

import math
import re
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, ParseError, ValidationError

VACUUM_SIGMA = 0.5
DEFAULT_GAIN = 3.7


@dataclass(frozen=True)
class SimulationConfig:
    mu_true: float
    n_samples_per_record: int = 100_000
    n_records: int = 100
    electronic_noise_sigma: float = 0.0
    phase_periods: float = 1.0
    rng_seed: int = 0
    gain: float = DEFAULT_GAIN

    def __post_init__(self):
        if not self.mu_true >= 0:
            raise DomainError(f"mu_true must be >= 0, got {self.mu_true}")
        if self.n_samples_per_record < 1 or self.n_records < 1:
            raise DomainError("n_samples_per_record and n_records must be positive")
        if self.electronic_noise_sigma < 0:
            raise DomainError("electronic_noise_sigma must be >= 0")
        if not self.phase_periods > 0:
            raise DomainError("phase_periods must be > 0")
        if not self.gain > 0:
            raise DomainError("gain must be > 0")
        if not 0 <= self.rng_seed < 2**64:
            raise DomainError("rng_seed must be a 64-bit unsigned integer")


@dataclass
class SampleRecord:
    """One acquisition record; samples are detector output (gain applied)."""

    samples: np.ndarray
    record_index: int
    config_echo: SimulationConfig

    def __eq__(self, other):
        if not isinstance(other, SampleRecord):
            return NotImplemented
        return (self.record_index == other.record_index
                and self.config_echo == other.config_echo
                and np.array_equal(self.samples, other.samples))


def sample_prcs_quadrature(mu, phase, rng):
    """sqrt(mu) cos(phase) plus vacuum noise of standard deviation 1/2.

    ``phase`` may be a scalar or an array; the result has its shape.
    """
    if not mu >= 0:
        raise DomainError(f"mu must be >= 0, got {mu}")
    phase = np.asarray(phase, dtype=float)
    out = math.sqrt(mu) * np.cos(phase) + rng.normal(0.0, VACUUM_SIGMA, size=phase.shape)
    return float(out) if out.ndim == 0 else out


def triangular_ramp(t):
    """Ramp position in [0, 1] for t in [0, 1): rises then falls once."""
    t = np.asarray(t, dtype=float)
    return 1.0 - np.abs(2.0 * t - 1.0)


def ramp_phases(n, phase_periods, offset=0.0):
    """Optical phases of ``n`` consecutive samples driven by one ramp cycle."""
    t = (np.arange(n) + 0.5) / n
    return offset + 2.0 * np.pi * phase_periods * triangular_ramp(t)


def record_rng(seed, record_index):
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(record_index)]))


def generate_record(config: SimulationConfig, record_index: int) -> SampleRecord:
    rng = record_rng(config.rng_seed, record_index)
    # ramp start is not synchronised with the optical phase
    offset = rng.uniform(0.0, 2.0 * np.pi)
    phases = ramp_phases(config.n_samples_per_record, config.phase_periods, offset)
    q = sample_prcs_quadrature(config.mu_true, phases, rng)
    if config.electronic_noise_sigma > 0:
        q = q + rng.normal(0.0, config.electronic_noise_sigma, size=q.shape)
    return SampleRecord(config.gain * q, record_index, config)


def generate_records(config: SimulationConfig) -> list[SampleRecord]:
    return [generate_record(config, i) for i in range(config.n_records)]


# --- record files ----------------------------------------------------------

_HEADER_KEYS = {
    # header key -> (SimulationConfig field, parser)
    "mu_true": ("mu_true", float),
    "gain": ("gain", float),
    "seed": ("rng_seed", int),
    "n_samples": ("n_samples_per_record", int),
    "n_records": ("n_records", int),
    "noise_sigma": ("electronic_noise_sigma", float),
    "phase_periods": ("phase_periods", float),
}
_KV = re.compile(r"^#\s*([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*?)\s*$")


def record_filename(record_index: int) -> str:
    return f"record_{record_index:04d}.txt"


def write_record(record: SampleRecord, path) -> Path:
    c = record.config_echo
    path = Path(path)
    lines = [
        "# prcs-tomo sample record",
        f"# mu_true={c.mu_true!r}",
        f"# gain={c.gain!r}",
        f"# seed={c.rng_seed}",
        f"# n_samples={c.n_samples_per_record}",
        f"# n_records={c.n_records}",
        f"# record_index={record.record_index}",
        f"# noise_sigma={c.electronic_noise_sigma!r}",
        f"# phase_periods={c.phase_periods!r}",
    ]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
        np.savetxt(fh, record.samples, fmt="%.17g")
    return path


def write_records(records, directory) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    return [write_record(r, directory / record_filename(r.record_index)) for r in records]


def parse_header(lines, path=None):
    meta = {}
    for lineno, line in lines:
        m = _KV.match(line)
        if m:
            meta[m.group(1)] = (m.group(2), lineno)
    return meta


def read_record(path) -> SampleRecord:
    path = Path(path)
    header, values = [], []
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    if values:
                        raise ParseError("header line after sample data", path, lineno)
                    header.append((lineno, line))
                    continue
                try:
                    values.append(float(line))
                except ValueError:
                    raise ParseError(f"malformed sample {line!r}", path, lineno) from None
    except UnicodeDecodeError as exc:
        raise ParseError(f"not UTF-8 text ({exc.reason})", path) from None
    meta = parse_header(header)
    kwargs = {}
    for key, (field, conv) in _HEADER_KEYS.items():
        if key not in meta:
            if key in ("n_records", "phase_periods"):
                continue
            raise ParseError(f"missing header key {key!r}", path)
        text, lineno = meta[key]
        try:
            kwargs[field] = conv(text)
        except ValueError:
            raise ParseError(f"bad value for {key}: {text!r}", path, lineno) from None
    if "record_index" not in meta:
        raise ParseError("missing header key 'record_index'", path)
    try:
        index = int(meta["record_index"][0])
    except ValueError:
        raise ParseError("bad record_index", path, meta["record_index"][1]) from None
    n = kwargs["n_samples_per_record"]
    if len(values) != n:
        last = header[-1][0] + len(values) if header else len(values)
        raise ParseError(f"expected {n} samples, found {len(values)} (truncated?)", path, last)
    try:
        config = SimulationConfig(**kwargs)
    except DomainError as exc:
        raise ValidationError(f"{path}: {exc}") from None
    return SampleRecord(np.array(values), index, config)


def read_records(path) -> list[SampleRecord]:
    """Read one record file or every ``record_*.txt`` in a directory.

    All records of a directory must carry the same configuration.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    if path.is_file():
        return [read_record(path)]
    files = sorted(path.glob("record_*.txt"))
    if not files:
        raise FileNotFoundError(f"no record files in {path}")
    records = [read_record(f) for f in files]
    first = records[0].config_echo
    for f, r in zip(files, records):
        if r.config_echo != first:
            raise ValidationError(f"{f}: configuration differs from {files[0].name}")
    indices = [r.record_index for r in records]
    if len(set(indices)) != len(indices):
        raise ValidationError(f"{path}: duplicate record indices")
    return records


def config_dict(config: SimulationConfig) -> dict:
    return asdict(config)
