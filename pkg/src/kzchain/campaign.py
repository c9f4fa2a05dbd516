"""Campaign orchestration: config parsing, pipeline execution, report emission.

A campaign takes one INI config (documented in the README), runs generation
(simulation or exact theory) or file ingestion over a time grid, pushes every
grid point through the same analysis chain (cumulants -> ratios -> power law
-> Boltzmann fit -> decay series), and writes deterministic artifacts.  All
randomness derives from the single campaign seed through documented
SeedSequence spawn keys, so rerunning a config reproduces the report
byte-for-byte (the provenance timestamp aside).
"""
from __future__ import annotations

import configparser
import csv
import datetime
import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, boltzmann, stats, theory
from .embedding import ChimeraGraph, saw_chain
from .model import (ChainInstance, SampleSet, SpinConfig, kink_counts,
                    load_schedule, uniform_chain)
from .svmc import SvmcParams, svmc_anneal

MODES = ("svmc", "theory", "ingest")


class ConfigError(ValueError):
    """Campaign configuration is invalid."""


class IngestError(ValueError):
    """Sample file violates the ingestion schema; carries a line number."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class CampaignConfig:
    mode: str
    seed: int
    times: tuple[float, ...]
    output: str | None = None
    # instance (svmc mode)
    length: int = 200
    coupling: str = "antiferro"
    cells: int | None = None
    # svmc dynamics
    schedule: str = "linear"
    temperature_k: float = 0.004
    n0: int = 1000
    samples: int = 200
    # ingest
    input_path: str | None = None
    instances_path: str | None = None
    # analysis
    bootstrap: int = 1000
    fit_min: float | None = None
    fit_max: float | None = None
    store_pmf: bool = True

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if len(self.times) < 1:
            raise ConfigError("time grid is empty")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ConfigError("time grid must be strictly increasing")
        if self.mode == "ingest":
            if not self.input_path:
                raise ConfigError("ingest mode needs an input path")
            if not Path(self.input_path).exists():
                raise ConfigError(f"input file not found: {self.input_path}")
        if self.instances_path and not Path(self.instances_path).exists():
            raise ConfigError(f"instances file not found: {self.instances_path}")
        if self.bootstrap < 100:
            raise ConfigError("bootstrap must be >= 100")

    def canonical_items(self) -> list[tuple[str, str]]:
        """Sorted (key, value) pairs defining campaign identity; output excluded."""
        skip = {"output"}
        items = []
        for key, value in sorted(vars(self).items()):
            if key in skip:
                continue
            if isinstance(value, tuple):
                value = ",".join(f"{v:.10g}" for v in value)
            items.append((key, str(value)))
        return items

    def config_hash(self) -> str:
        text = "\n".join(f"{k}={v}" for k, v in self.canonical_items())
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    @classmethod
    def from_ini(cls, path) -> "CampaignConfig":
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {path}")
        return cls.from_ini_text(p.read_text(encoding="utf-8"), origin=str(path))

    @classmethod
    def from_ini_text(cls, text: str, origin: str = "<string>") -> "CampaignConfig":
        parser = configparser.ConfigParser()
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"bad config {origin}: {exc}") from exc
        try:
            camp = parser["campaign"]
            kwargs: dict = {
                "mode": camp.get("mode", ""),
                "seed": camp.getint("seed", 0),
                "output": camp.get("output", None),
            }
            grid = parser["grid"]
            kwargs["times"] = tuple(float(v) for v in grid.get("times", "").split(",") if v.strip())
            if parser.has_section("instance"):
                inst = parser["instance"]
                kwargs["length"] = inst.getint("length", 200)
                kwargs["coupling"] = inst.get("coupling", "antiferro")
                if inst.get("cells", None):
                    kwargs["cells"] = inst.getint("cells")
            if parser.has_section("svmc"):
                sv = parser["svmc"]
                kwargs["schedule"] = sv.get("schedule", "linear")
                if sv.get("temperature_mk", None):
                    kwargs["temperature_k"] = sv.getfloat("temperature_mk") * 1e-3
                kwargs["n0"] = sv.getint("n0", 1000)
                kwargs["samples"] = sv.getint("samples", 200)
            if parser.has_section("ingest"):
                ing = parser["ingest"]
                kwargs["input_path"] = ing.get("path", None)
                kwargs["instances_path"] = ing.get("instances", None)
            if parser.has_section("analysis"):
                an = parser["analysis"]
                kwargs["bootstrap"] = an.getint("bootstrap", 1000)
                if an.get("fit_min", None):
                    kwargs["fit_min"] = an.getfloat("fit_min")
                if an.get("fit_max", None):
                    kwargs["fit_max"] = an.getfloat("fit_max")
                kwargs["store_pmf"] = an.getboolean("store_pmf", True)
        except (configparser.Error, KeyError, ValueError) as exc:
            raise ConfigError(f"bad config {origin}: {exc}") from exc
        return cls(**kwargs)


def load_preset(name: str) -> CampaignConfig:
    """Load a bundled campaign preset (e.g. 'desk-theory', 'desk-svmc-L200')."""
    data = resources.files("kzchain.data.presets")
    candidate = data / f"{name}.ini"
    if not candidate.is_file():
        available = sorted(p.name[:-4] for p in data.iterdir() if p.name.endswith(".ini"))
        raise ConfigError(f"unknown preset {name!r}; available: {available}")
    return CampaignConfig.from_ini_text(candidate.read_text(), origin=name)


def point_seed(master: int, index: int) -> int:
    """Documented per-grid-point seed split: SeedSequence(master, spawn_key=(2, i))."""
    ss = np.random.SeedSequence(entropy=master, spawn_key=(2, index))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def instance_seed(master: int) -> int:
    ss = np.random.SeedSequence(entropy=master, spawn_key=(1,))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------

@dataclass
class Report:
    """Everything a campaign produced, JSON-serialisable and deterministic."""

    provenance: dict
    points: list[dict] = field(default_factory=list)
    fits: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"provenance": self.provenance, "points": self.points, "fits": self.fits}

    @classmethod
    def from_dict(cls, d: dict) -> "Report":
        return cls(provenance=d["provenance"], points=list(d["points"]),
                   fits=dict(d["fits"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "Report":
        return cls.from_dict(json.loads(text))

    def ok_points(self) -> list[dict]:
        return [p for p in self.points if not p.get("error")]

    @property
    def n_failed(self) -> int:
        return sum(1 for p in self.points if p.get("error"))


# ---------------------------------------------------------------------------
# Ingestion
# ---------------------------------------------------------------------------

def ingest_samples(path, instances: dict[str, ChainInstance] | None = None,
                   default_coupling: int = 1) -> list[SampleSet]:
    """Read a sample CSV and group rows into SampleSets by (instance_id, time).

    Rows carry no couplings, so kink counting needs the instance definition:
    either pass `instances` (id -> ChainInstance, e.g. from instance JSON) or
    accept the uniform default (antiferromagnetic, +1).  Malformed rows raise
    with their line number.
    """
    groups: dict[tuple[str, float], list[SpinConfig]] = {}
    order: list[tuple[str, float]] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise IngestError("no data rows (empty file)")
        if tuple(h.strip() for h in header) != ("instance_id", "anneal_time", "spins"):
            raise IngestError(f"bad header {header!r}", line=1)
        n_rows = 0
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise IngestError(f"expected 3 fields, got {len(row)}", line=lineno)
            inst_id, time_text, spin_text = row
            try:
                t = float(time_text)
            except ValueError:
                raise IngestError(f"bad anneal_time {time_text!r}", line=lineno) from None
            try:
                cfg = SpinConfig.from_string(spin_text.strip())
            except ValueError as exc:
                raise IngestError(f"bad spin string: {exc}", line=lineno) from None
            key = (inst_id, t)
            if key not in groups:
                groups[key] = []
                order.append(key)
            groups[key].append(cfg)
            n_rows += 1
    if n_rows == 0:
        raise IngestError("no data rows")

    out = []
    for inst_id, t in order:
        configs = groups[(inst_id, t)]
        lengths = {c.length for c in configs}
        if len(lengths) != 1:
            raise IngestError(
                f"inconsistent spin lengths {sorted(lengths)} in group "
                f"({inst_id!r}, {t})"
            )
        L = lengths.pop()
        if instances and inst_id in instances:
            instance = instances[inst_id]
            if instance.length != L:
                raise IngestError(
                    f"instance {inst_id!r} has length {instance.length} but rows "
                    f"have {L} spins"
                )
        else:
            instance = uniform_chain(L, default_coupling, label=inst_id)
        out.append(SampleSet(instance=instance, anneal_time=t,
                             configs=tuple(configs), source="ingested"))
    return out


def load_instances_json(path) -> dict[str, ChainInstance]:
    """Read the embed command's instance JSON into id -> ChainInstance."""
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    out = {}
    for entry in payload["instances"]:
        emb = tuple(entry["vertices"]) if entry.get("vertices") else None
        out[entry["id"]] = ChainInstance(
            np.asarray(entry["couplings"], dtype=np.int8),
            embedding=emb, label=entry["id"],
        )
    return out


# ---------------------------------------------------------------------------
# Campaign execution
# ---------------------------------------------------------------------------

def _build_instance(config: CampaignConfig) -> ChainInstance:
    if config.cells:
        graph = ChimeraGraph(config.cells)
        return saw_chain(graph, config.length, seed=instance_seed(config.seed),
                         coupling=config.coupling, label="chain-0")
    sign = {"ferro": -1, "antiferro": 1}.get(config.coupling)
    if sign is None:
        raise ConfigError(
            "uniform instances support ferro/antiferro; use cells=... for gauge chains"
        )
    return uniform_chain(config.length, sign, label="chain-0")


def _analyse_counts(counts: np.ndarray, config: CampaignConfig, index: int) -> dict:
    est = stats.estimate_cumulants(counts, resamples=config.bootstrap,
                                   seed=point_seed(config.seed, index))
    ratios = stats.estimate_cumulant_ratios(counts, resamples=config.bootstrap,
                                            seed=point_seed(config.seed, index))
    record = {
        "cumulants": est.as_dict(),
        "ratio21": ratios["ratio21"],
        "ratio31": ratios["ratio31"],
    }
    if config.store_pmf:
        hist = stats.histogram(counts)
        record["histogram"] = [float(v) for v in hist.pmf]
    return record


def _run_svmc_point(config: CampaignConfig, instance: ChainInstance, index: int,
                    t: float) -> tuple[dict, np.ndarray]:
    schedule = load_schedule(config.schedule)
    params = SvmcParams(schedule=schedule, temperature_k=config.temperature_k,
                        n0=config.n0, ta_prime=t, samples=config.samples,
                        seed=point_seed(config.seed, index))
    ss = svmc_anneal(instance, params)
    counts = kink_counts(instance, ss)
    record = {"time": t, "n_samples": len(ss), "seed": params.seed,
              "rho": float(counts.mean()) / instance.length}
    record.update(_analyse_counts(counts, config, index))
    return record, counts


def _run_theory_point(config: CampaignConfig, index: int, tau: float) -> dict:
    q = theory.QuenchParams(L=config.length, tau=tau)
    k1, k2, k3 = theory.kink_cumulants(q)
    record = {
        "time": tau,
        "cumulants": {"kappa1": k1, "kappa2": k2, "kappa3": k3,
                      "ci68": {}, "n_samples": 0},
        "ratio21": {"value": k2 / k1, "ci68": (k2 / k1, k2 / k1), "stderr": 0.0},
        "ratio31": {"value": k3 / k1, "ci68": (k3 / k1, k3 / k1), "stderr": 0.0},
        "rho": k1 / config.length,
    }
    if config.store_pmf and config.length <= 4096:
        record["histogram"] = [float(v) for v in theory.kink_distribution(q).pmf]
    return record


def run_campaign(config: CampaignConfig) -> Report:
    """Execute the configured pipeline over the full time grid.

    Per-point failures are recorded in the point record; the campaign raises
    only if every point fails.
    """
    provenance = {
        "tool": "kzchain",
        "version": __version__,
        "config": {k: v for k, v in config.canonical_items()},
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    report = Report(provenance=provenance)

    counts_by_point: dict[int, np.ndarray] = {}
    instance = None

    if config.mode == "ingest":
        instances = (load_instances_json(config.instances_path)
                     if config.instances_path else None)
        all_sets = ingest_samples(config.input_path, instances=instances)
        for index, t in enumerate(config.times):
            sets_at_t = [s for s in all_sets if s.anneal_time == t]
            record: dict = {"time": t}
            try:
                if not sets_at_t:
                    raise ValueError(f"no ingested rows at time {t}")
                counts = np.concatenate([kink_counts(s.instance, s) for s in sets_at_t])
                lengths = {s.instance.length for s in sets_at_t}
                if len(lengths) != 1:
                    raise ValueError(f"mixed chain lengths {sorted(lengths)} at time {t}")
                record["n_samples"] = int(counts.size)
                record["rho"] = float(counts.mean()) / lengths.pop()
                record.update(_analyse_counts(counts, config, index))
                counts_by_point[index] = counts
                instance = sets_at_t[0].instance
            except Exception as exc:  # per-point isolation
                record["error"] = f"{type(exc).__name__}: {exc}"
            report.points.append(record)
    elif config.mode == "svmc":
        instance = _build_instance(config)
        for index, t in enumerate(config.times):
            try:
                record, counts = _run_svmc_point(config, instance, index, t)
                counts_by_point[index] = counts
            except Exception as exc:
                record = {"time": t, "error": f"{type(exc).__name__}: {exc}"}
            report.points.append(record)
    else:  # theory
        for index, tau in enumerate(config.times):
            try:
                record = _run_theory_point(config, index, tau)
            except Exception as exc:
                record = {"time": tau, "error": f"{type(exc).__name__}: {exc}"}
            report.points.append(record)

    ok = report.ok_points()
    if not ok:
        first = report.points[0].get("error", "unknown") if report.points else "no points"
        raise RuntimeError(f"all {len(report.points)} campaign points failed ({first})")

    _fit_report(report, config, counts_by_point, instance)
    return report


def _fit_report(report: Report, config: CampaignConfig,
                counts_by_point: dict[int, np.ndarray],
                instance: ChainInstance | None) -> None:
    ok = report.ok_points()
    fit_range = None
    if config.fit_min is not None or config.fit_max is not None:
        fit_range = (config.fit_min if config.fit_min is not None else -np.inf,
                     config.fit_max if config.fit_max is not None else np.inf)

    density_points = [(p["time"], p["rho"]) for p in ok if p.get("rho", 0) > 0]
    try:
        alpha = stats.fit_power_law(density_points, t_range=fit_range)
        report.fits["alpha"] = alpha.as_dict()
    except ValueError as exc:
        report.fits["alpha"] = {"error": str(exc)}

    for name in ("ratio21", "ratio31"):
        pts = [(p["time"], p[name]["value"], p[name]["stderr"])
               for p in ok if name in p]
        pts = [(t, v, s) for t, v, s in pts if np.isfinite(v)]
        try:
            use_sigma = all(s > 0 for _, _, s in pts)
            fit = stats.fit_constant(pts if use_sigma else [(t, v) for t, v, _ in pts])
            report.fits[f"{name}_const"] = fit.as_dict()
        except ValueError as exc:
            report.fits[f"{name}_const"] = {"error": str(exc)}

    # effective temperature at the largest successful grid point, then the
    # fixed-beta trace-norm decay across the whole grid
    if config.mode in ("svmc", "ingest") and counts_by_point and instance is not None:
        ref_index = max(counts_by_point)
        ref_counts = counts_by_point[ref_index]
        try:
            hist = stats.histogram(ref_counts)
            fit = boltzmann.fit_beta(hist, instance.length)
            entry = fit.as_dict()
            entry["reference_time"] = report.points[ref_index]["time"]
            schedule_b1 = None
            if config.mode == "svmc":
                schedule_b1 = load_schedule(config.schedule).b1_ghz
                entry["effective_temperature_k"] = boltzmann.effective_temperature_k(
                    fit.beta_tn, 0.5 * schedule_b1)
            report.fits["beta_eff"] = entry

            series = []
            for index in sorted(counts_by_point):
                q = boltzmann.boltzmann_pmf(instance.length, fit.beta_tn)
                p = stats.histogram(counts_by_point[index])
                series.append((report.points[index]["time"], stats.tv_distance(p, q)))
            report.fits["tn_series"] = [[t, d] for t, d in series]
            positive = [(t, d) for t, d in series if d > 0]
            if len(positive) >= 4:
                decay = stats.fit_decay_shape(positive)
                report.fits["decay"] = decay.as_dict()
        except (ValueError, boltzmann.FitConvergenceError) as exc:
            report.fits["beta_eff"] = {"error": str(exc)}


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------

def emit_report(report: Report, fmt: str, out_dir) -> list[Path]:
    """Write the report as json, csv-bundle, or markdown-table files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if fmt == "json":
        path = out / "report.json"
        path.write_text(report.to_json() + "\n", encoding="utf-8")
        written.append(path)
    elif fmt == "csv-bundle":
        written.extend(_emit_csv_bundle(report, out))
    elif fmt == "markdown-table":
        path = out / "report.md"
        path.write_text(_markdown_report(report), encoding="utf-8")
        written.append(path)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    return written


def _emit_csv_bundle(report: Report, out: Path) -> list[Path]:
    written = []
    cum_path = out / "cumulants.csv"
    with open(cum_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "n_samples", "rho", "kappa1", "kappa1_lo", "kappa1_hi",
                         "kappa2", "kappa2_lo", "kappa2_hi", "kappa3", "kappa3_lo",
                         "kappa3_hi", "ratio21", "ratio31", "error"])
        for p in report.points:
            if p.get("error"):
                writer.writerow([p["time"], "", "", "", "", "", "", "", "", "", "",
                                 "", "", "", p["error"]])
                continue
            c = p["cumulants"]
            ci = c.get("ci68", {})

            def bounds(name):
                pair = ci.get(name) or ["", ""]
                return pair[0], pair[1]

            writer.writerow([
                p["time"], c.get("n_samples", ""), p.get("rho", ""),
                c["kappa1"], *bounds("kappa1"),
                c["kappa2"], *bounds("kappa2"),
                c["kappa3"], *bounds("kappa3"),
                p["ratio21"]["value"], p["ratio31"]["value"], "",
            ])
    written.append(cum_path)

    fits_path = out / "fits.csv"
    with open(fits_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fit", "param", "value", "stderr"])
        for name, entry in sorted(report.fits.items()):
            if not isinstance(entry, dict) or "params" not in entry:
                continue
            for param, value in sorted(entry["params"].items()):
                writer.writerow([name, param, value, entry["stderr"].get(param, "")])
        be = report.fits.get("beta_eff", {})
        for key in ("beta_kl", "beta_tn", "effective_temperature_k"):
            if key in be:
                writer.writerow(["beta_eff", key, be[key], ""])
    written.append(fits_path)

    hist_dir = out / "histograms"
    hist_dir.mkdir(exist_ok=True)
    for i, p in enumerate(report.points):
        if p.get("error") or "histogram" not in p:
            continue
        path = hist_dir / f"hist_{i:03d}_t{p['time']:.6g}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n", "probability"])
            for n, prob in enumerate(p["histogram"]):
                writer.writerow([n, prob])
        written.append(path)
    return written


def format_value_pm(value: float, err: float, digits: int = 3) -> str:
    """'0.204±0.002' formatting used by the summary tables."""
    return f"{value:.{digits}f}±{err:.{digits}f}"


def _markdown_report(report: Report) -> str:
    lines = ["# Campaign report", ""]
    prov = report.provenance
    lines.append(f"- config hash: `{prov['config_hash']}`  seed: {prov['seed']}  "
                 f"version: {prov['version']}")
    lines.append("")
    lines.append("| fit | value |")
    lines.append("|---|---|")
    for name, entry in sorted(report.fits.items()):
        if not isinstance(entry, dict) or "params" not in entry:
            continue
        for param, value in sorted(entry["params"].items()):
            err = entry["stderr"].get(param, 0.0)
            lines.append(f"| {name}.{param} | {format_value_pm(value, err)} |")
    be = report.fits.get("beta_eff", {})
    if "beta_tn" in be:
        lines.append(f"| beta_eff.beta_tn | {be['beta_tn']:.4f} |")
    lines.append("")
    lines.append("| time | kappa1 | kappa2/kappa1 | kappa3/kappa1 |")
    lines.append("|---|---|---|---|")
    for p in report.points:
        if p.get("error"):
            lines.append(f"| {p['time']:g} | error: {p['error']} | | |")
            continue
        c = p["cumulants"]
        r21, r31 = p["ratio21"], p["ratio31"]
        lines.append(
            f"| {p['time']:g} | {c['kappa1']:.4g} | "
            f"{format_value_pm(r21['value'], r21['stderr'])} | "
            f"{format_value_pm(r31['value'], r31['stderr'])} |"
        )
    lines.append("")
    return "\n".join(lines)
