"""Core domain types: annealing schedules, chain instances, spin samples, kinks.

Conventions
-----------
* Schedule files and `AnnealSchedule` store the plotted curves A(s), B(s) in GHz;
  the annealing Hamiltonian uses A(s)/2 and B(s)/2.
* A bond i (between sites i and i+1, 0-based) is a kink iff its coupling energy
  contribution is positive: J_i * s_i * s_{i+1} = +1.  Anti-aligned neighbours
  for a ferromagnetic bond (J=-1), aligned for an antiferromagnetic one (J=+1).
* Kink density divides by L, not L-1, so that the Boltzmann closed form
  rho = (1 - 1/L) / (1 + exp(2*beta')) holds exactly.

All types are immutable after construction; operations are pure functions.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Sequence

import numpy as np

SCHEDULE_CSV_HEADER = ("s", "A_GHz", "B_GHz")
SAMPLE_CSV_HEADER = ("instance_id", "anneal_time", "spins")

SAMPLE_SOURCES = ("ingested", "svmc", "exact-oracle")


class ScheduleError(ValueError):
    """Schedule data violates an invariant."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class AnnealSchedule:
    """Tabulated annealing curves with piecewise-linear interpolation.

    `s` runs from 0 to 1 (strictly increasing); `a_ghz` and `b_ghz` are the
    plotted transverse-field and Ising curves.  A(1) must vanish (within
    1e-6 of max|A|) and B must be monotone non-decreasing.
    """

    s: np.ndarray
    a_ghz: np.ndarray
    b_ghz: np.ndarray
    name: str = "unnamed"

    def __post_init__(self) -> None:
        s = np.asarray(self.s, dtype=float)
        a = np.asarray(self.a_ghz, dtype=float)
        b = np.asarray(self.b_ghz, dtype=float)
        if not (s.ndim == 1 and s.size >= 2 and a.shape == s.shape and b.shape == s.shape):
            raise ScheduleError("schedule needs >= 2 points with matching s, A, B columns")
        if not np.all(np.diff(s) > 0):
            raise ScheduleError("s values must be strictly increasing")
        if s[0] != 0.0 or s[-1] != 1.0:
            raise ScheduleError(f"s must start at 0 and end at 1, got [{s[0]}, {s[-1]}]")
        if abs(a[-1]) > 1e-6 * np.max(np.abs(a)):
            raise ScheduleError(f"A(1) = {a[-1]} is not zero within tolerance")
        if np.any(np.diff(b) < 0):
            raise ScheduleError("B must be monotone non-decreasing")
        object.__setattr__(self, "s", _readonly(s))
        object.__setattr__(self, "a_ghz", _readonly(a))
        object.__setattr__(self, "b_ghz", _readonly(b))

    @property
    def b1_ghz(self) -> float:
        """B at the end of the anneal (the Ising energy scale is B(1)/2)."""
        return float(self.b_ghz[-1])

    def __call__(self, s):
        return eval_schedule(self, s)


def eval_schedule(sched: AnnealSchedule, s):
    """Interpolate (A, B) at `s` in [0, 1]; exact at the tabulated knots.

    Accepts a scalar or an array; returns a pair of matching shape.
    """
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0.0) or np.any(s_arr > 1.0):
        raise ValueError(f"schedule evaluated outside [0, 1]: s={s!r}")
    a = np.interp(s_arr, sched.s, sched.a_ghz)
    b = np.interp(s_arr, sched.s, sched.b_ghz)
    if np.isscalar(s) or s_arr.ndim == 0:
        return float(a), float(b)
    return a, b


def linear_schedule(b1_ghz: float = 2.0) -> AnnealSchedule:
    """The exact linear schedule A(s)/2 = (1-s) E, B(s)/2 = s E with E = B(1)/2."""
    s = np.linspace(0.0, 1.0, 21)
    return AnnealSchedule(s, b1_ghz * (1.0 - s), b1_ghz * s, name="linear")


def schedule_from_csv(path_or_text, name: str | None = None) -> AnnealSchedule:
    """Read a schedule CSV (header `s,A_GHz,B_GHz`; `#` comment lines allowed)."""
    if hasattr(path_or_text, "read"):
        text = path_or_text.read()
        label = name or "stream"
    else:
        with open(path_or_text, "r", encoding="utf-8") as fh:
            text = fh.read()
        label = name or str(path_or_text)
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.reader(lines)
    header = tuple(h.strip() for h in next(reader, ()))
    if header != SCHEDULE_CSV_HEADER:
        raise ScheduleError(f"bad schedule header {header!r}, expected {SCHEDULE_CSV_HEADER!r}")
    rows = [(float(r[0]), float(r[1]), float(r[2])) for r in reader]
    arr = np.array(rows, dtype=float)
    return AnnealSchedule(arr[:, 0], arr[:, 1], arr[:, 2], name=label)


def schedule_to_csv(sched: AnnealSchedule, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SCHEDULE_CSV_HEADER)
        for s, a, b in zip(sched.s, sched.a_ghz, sched.b_ghz):
            writer.writerow([f"{s:.6g}", f"{a:.9g}", f"{b:.9g}"])


def load_schedule(name: str) -> AnnealSchedule:
    """Load a bundled schedule by name ('linear', 'nasa_like', 'burnaby_like') or a path."""
    if name == "linear":
        return linear_schedule()
    data = resources.files("kzchain.data.schedules")
    candidate = data / f"{name}.csv"
    if candidate.is_file():
        return schedule_from_csv(io.StringIO(candidate.read_text()), name=name)
    return schedule_from_csv(name)


# ---------------------------------------------------------------------------
# Chains, spin configurations, samples
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChainInstance:
    """A 1-D chain with free boundaries: L sites and L-1 signed unit couplings.

    `embedding`, when present, is the self-avoiding hardware path realising the
    chain (one vertex id per site, no repeats); consecutive-adjacency is
    enforced by the generator in `kzchain.embedding`.
    """

    couplings: np.ndarray
    embedding: tuple[int, ...] | None = None
    label: str = ""

    def __post_init__(self) -> None:
        j = np.asarray(self.couplings, dtype=np.int8)
        if j.ndim != 1 or j.size < 1:
            raise ValueError("couplings must be a non-empty 1-D sequence")
        if not np.all(np.abs(j) == 1):
            raise ValueError("couplings must all be +1 or -1")
        object.__setattr__(self, "couplings", _readonly(j))
        if self.embedding is not None:
            emb = tuple(int(v) for v in self.embedding)
            if len(emb) != j.size + 1:
                raise ValueError(f"embedding has {len(emb)} vertices for L={j.size + 1}")
            if len(set(emb)) != len(emb):
                raise ValueError("embedding repeats a vertex")
            object.__setattr__(self, "embedding", emb)

    @property
    def length(self) -> int:
        return int(self.couplings.size) + 1


def uniform_chain(length: int, coupling: int = 1, label: str = "") -> ChainInstance:
    """Uniform chain: coupling=+1 antiferromagnetic, -1 ferromagnetic."""
    if length < 2:
        raise ValueError("chain needs at least 2 sites")
    return ChainInstance(np.full(length - 1, coupling, dtype=np.int8), label=label)


@dataclass(frozen=True)
class SpinConfig:
    """One final spin configuration, stored as a packed bit array (+1 -> bit 1)."""

    packed: bytes
    length: int

    @classmethod
    def from_spins(cls, spins: Sequence[int] | np.ndarray) -> "SpinConfig":
        arr = np.asarray(spins)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("spins must be a non-empty 1-D sequence")
        if not np.all(np.abs(arr) == 1):
            raise ValueError("spins must all be +1 or -1")
        return cls(np.packbits(arr > 0).tobytes(), int(arr.size))

    @classmethod
    def from_string(cls, text: str) -> "SpinConfig":
        bad = set(text) - {"+", "-"}
        if bad or not text:
            raise ValueError(f"spin string must be non-empty +/- characters, got {text!r}")
        up = np.frombuffer(text.encode(), dtype=np.uint8) == ord("+")
        return cls.from_spins(up.astype(np.int8) * 2 - 1)

    @property
    def spins(self) -> np.ndarray:
        bits = np.unpackbits(np.frombuffer(self.packed, dtype=np.uint8), count=self.length)
        return _readonly(bits.astype(np.int8) * 2 - 1)

    def to_string(self) -> str:
        return "".join("+" if b else "-" for b in self.spins > 0)


@dataclass(frozen=True)
class SampleSet:
    """A batch of final configurations for one instance at one annealing time.

    `anneal_time` is in microseconds for ingested device data and is the
    dimensionless t'_a for simulated data.
    """

    instance: ChainInstance
    anneal_time: float
    configs: tuple[SpinConfig, ...]
    source: str = "svmc"

    def __post_init__(self) -> None:
        if self.source not in SAMPLE_SOURCES:
            raise ValueError(f"source must be one of {SAMPLE_SOURCES}, got {self.source!r}")
        configs = tuple(self.configs)
        if not configs:
            raise ValueError("sample set must be non-empty")
        L = self.instance.length
        for c in configs:
            if c.length != L:
                raise ValueError(f"config length {c.length} != instance length {L}")
        object.__setattr__(self, "configs", configs)

    def __len__(self) -> int:
        return len(self.configs)

    def spin_matrix(self) -> np.ndarray:
        """(n_samples, L) matrix of +-1 spins."""
        return np.stack([c.spins for c in self.configs])


# ---------------------------------------------------------------------------
# Kink counting
# ---------------------------------------------------------------------------

def count_kinks(instance: ChainInstance, config: SpinConfig) -> int:
    """Number of frustrated bonds: |{i : J_i s_i s_{i+1} = +1}|."""
    s = config.spins
    if s.size != instance.length:
        raise ValueError(f"config length {s.size} != instance length {instance.length}")
    return int(np.count_nonzero(instance.couplings * s[:-1] * s[1:] > 0))


def kink_counts(instance: ChainInstance, configs: Iterable[SpinConfig] | SampleSet) -> np.ndarray:
    """Vectorised per-config kink counts."""
    if isinstance(configs, SampleSet):
        configs = configs.configs
    mat = np.stack([c.spins for c in configs])
    if mat.shape[1] != instance.length:
        raise ValueError("config length does not match instance")
    return np.count_nonzero(instance.couplings[None, :] * mat[:, :-1] * mat[:, 1:] > 0, axis=1)


def kink_density(instance: ChainInstance, configs: Iterable[SpinConfig] | SampleSet):
    """Mean kink density rho = mean(n)/L and the per-config counts.

    Divides by L (not L-1) to match the Boltzmann closed form.
    """
    counts = kink_counts(instance, configs)
    if counts.size == 0:
        raise ValueError("need at least one configuration")
    return float(counts.mean()) / instance.length, counts


# ---------------------------------------------------------------------------
# Gauge transforms
# ---------------------------------------------------------------------------

def apply_gauge(instance: ChainInstance, mask: Sequence[bool]) -> ChainInstance:
    """Flip the sign of both couplings adjacent to every masked site.

    Equivalent to the local spin flip s_i -> -s_i on masked sites; applying the
    same mask twice is the identity.
    """
    m = np.asarray(mask, dtype=bool)
    if m.shape != (instance.length,):
        raise ValueError(f"mask length {m.size} != L={instance.length}")
    g = np.where(m, -1, 1).astype(np.int8)
    new_j = (instance.couplings * g[:-1] * g[1:]).astype(np.int8)
    return ChainInstance(new_j, embedding=instance.embedding, label=instance.label)


def apply_random_gauge(instance: ChainInstance, seed) -> tuple[ChainInstance, np.ndarray]:
    """Gauge transform on floor(L/2) randomly selected sites; returns (instance, mask)."""
    rng = np.random.default_rng(seed)
    L = instance.length
    sites = rng.choice(L, size=L // 2, replace=False)
    mask = np.zeros(L, dtype=bool)
    mask[sites] = True
    return apply_gauge(instance, mask), mask


def flip_spins(config: SpinConfig, mask: Sequence[bool]) -> SpinConfig:
    """Flip the spins on masked sites (the partner of `apply_gauge`)."""
    m = np.asarray(mask, dtype=bool)
    if m.shape != (config.length,):
        raise ValueError(f"mask length {m.size} != config length {config.length}")
    return SpinConfig.from_spins(np.where(m, -config.spins, config.spins))


# ---------------------------------------------------------------------------
# Sample CSV
# ---------------------------------------------------------------------------

def write_samples_csv(path, sample_sets: Iterable[SampleSet]) -> None:
    """Write sample sets in the ingestion format (instance_id,anneal_time,spins)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SAMPLE_CSV_HEADER)
        for ss in sample_sets:
            label = ss.instance.label or "chain"
            for cfg in ss.configs:
                writer.writerow([label, f"{ss.anneal_time:.10g}", cfg.to_string()])
