"""Command-line interface.

Subcommands: embed, svmc, theory, analyze, boltzmann-fit, report, campaign.
Exit codes: 0 success, 1 validation error, 2 runtime error, 3 partial failure
(some campaign points failed but the report was still produced).
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, boltzmann, stats, theory
from .campaign import (CampaignConfig, ConfigError, IngestError, Report,
                       emit_report, ingest_samples, instance_seed,
                       load_instances_json, load_preset, run_campaign)
from .embedding import ChimeraGraph, GenerationError, saw_chain_stats
from .model import (count_kinks, kink_counts, load_schedule, uniform_chain,
                    write_samples_csv)
from .svmc import SvmcParams, svmc_anneal
from .units import DEVICE_PRESETS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kzchain",
        description="Kink statistics of annealed transverse-field Ising chains",
    )
    parser.add_argument("--version", action="version", version=f"kzchain {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", help="generate chain instances on the hardware graph")
    p.add_argument("--cells", type=int, default=16, help="unit cells per side")
    p.add_argument("--length", type=int, required=True, help="chain length L")
    p.add_argument("--instances", type=int, default=1, help="number of chains")
    p.add_argument("--coupling", choices=["ferro", "antiferro", "gauge"],
                   default="antiferro")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-retries", type=int, default=10_000)
    p.add_argument("--out", required=True, help="output instance JSON file")

    p = sub.add_parser("svmc", help="run spin-vector Monte Carlo annealing")
    p.add_argument("--schedule", default="linear",
                   help="bundled schedule name or CSV path")
    p.add_argument("--temp-mk", type=float, required=True,
                   help="bath temperature in millikelvin")
    p.add_argument("--n0", type=int, default=1000, help="sweeps per unit t'_a")
    p.add_argument("--ta-prime", required=True,
                   help="comma-separated dimensionless annealing times")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--length", type=int, default=200)
    p.add_argument("--coupling", choices=["ferro", "antiferro"], default="antiferro")
    p.add_argument("--out", required=True, help="output sample CSV")

    p = sub.add_parser("theory", help="exact closed-system cumulants over a tau grid")
    p.add_argument("--length", "--L", dest="length", type=int, default=2000)
    p.add_argument("--tau-list", required=True, help="comma-separated tau values")
    p.add_argument("--pmf-dir", default=None,
                   help="also write the exact kink PMF per tau into this directory")
    p.add_argument("--out", required=True, help="output CSV")

    p = sub.add_parser("analyze", help="cumulant/fit analysis of a sample CSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--group-by", default="anneal_time", choices=["anneal_time"],
                   help="grouping key (schema has one grouping)")
    p.add_argument("--bootstrap", type=int, default=1000)
    p.add_argument("--fit-range", default=None, help="a:b time range for the alpha fit")
    p.add_argument("--coupling", choices=["ferro", "antiferro"], default="antiferro",
                   help="bond convention when no instance JSON is given")
    p.add_argument("--instances", default=None, help="instance JSON from `embed`")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output report JSON")

    p = sub.add_parser("boltzmann-fit", help="effective-temperature fit of a sample CSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--length", "--L", dest="length", type=int, required=True)
    p.add_argument("--device", default="nasa",
                   help="nasa | burnaby | custom:B1_GHZ,T_K (sets B(1) and T)")
    p.add_argument("--out", required=True, help="output JSON")

    p = sub.add_parser("report", help="re-emit a report JSON in another format")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--format", choices=["json", "csv-bundle", "markdown-table"],
                   default="markdown-table")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("campaign", help="run a full campaign from a config or preset")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--config", help="campaign INI file")
    group.add_argument("--preset", help="bundled preset name (e.g. desk-svmc-L200)")
    p.add_argument("--out", default=None, help="output directory (overrides config)")
    p.add_argument("--format", choices=["json", "csv-bundle", "markdown-table"],
                   action="append", default=None,
                   help="emission formats (repeatable; default json)")
    return parser


def _parse_float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _cmd_embed(args) -> int:
    graph = ChimeraGraph(args.cells)
    entries = []
    rng_seeds = [instance_seed(args.seed + i) for i in range(args.instances)]
    for i, seed in enumerate(rng_seeds):
        inst, attempts = saw_chain_stats(graph, args.length, seed=seed,
                                         max_retries=args.max_retries,
                                         coupling=args.coupling, label=f"chain-{i}")
        entries.append({
            "id": inst.label,
            "vertices": list(inst.embedding),
            "couplings": [int(j) for j in inst.couplings],
            "seed": seed,
            "attempts": attempts,
        })
    payload = {"graph": {"cells": args.cells}, "instances": entries}
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {len(entries)} instance(s) to {args.out}")
    return 0


def _cmd_svmc(args) -> int:
    schedule = load_schedule(args.schedule)
    sign = -1 if args.coupling == "ferro" else 1
    instance = uniform_chain(args.length, sign, label="chain-0")
    times = _parse_float_list(args.ta_prime)
    sets = []
    for i, t in enumerate(times):
        params = SvmcParams(schedule=schedule, temperature_k=args.temp_mk * 1e-3,
                            n0=args.n0, ta_prime=t, samples=args.samples,
                            seed=args.seed + i)
        sets.append(svmc_anneal(instance, params))
        print(f"t'_a={t:g}: mean kink density "
              f"{kink_counts(instance, sets[-1]).mean() / instance.length:.5f}")
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_samples_csv(args.out, sets)
    print(f"wrote {sum(len(s) for s in sets)} samples to {args.out}")
    return 0


def _cmd_theory(args) -> int:
    taus = _parse_float_list(args.tau_list)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tau", "kappa1", "kappa2", "kappa3", "ratio21", "ratio31"])
        for tau in taus:
            q = theory.QuenchParams(L=args.length, tau=tau)
            k1, k2, k3 = theory.kink_cumulants(q)
            writer.writerow([f"{tau:.10g}", f"{k1:.12g}", f"{k2:.12g}",
                             f"{k3:.12g}", f"{k2 / k1:.12g}", f"{k3 / k1:.12g}"])
            if args.pmf_dir:
                pmf_dir = Path(args.pmf_dir)
                pmf_dir.mkdir(parents=True, exist_ok=True)
                dist = theory.kink_distribution(q)
                with open(pmf_dir / f"pmf_tau{tau:.6g}.csv", "w", newline="",
                          encoding="utf-8") as pf:
                    pw = csv.writer(pf)
                    pw.writerow(["n", "probability"])
                    for n, prob in enumerate(dist.pmf):
                        pw.writerow([n, f"{prob:.12g}"])
    print(f"wrote {len(taus)} tau points to {args.out}")
    return 0


def _cmd_analyze(args) -> int:
    instances = load_instances_json(args.instances) if args.instances else None
    default_coupling = -1 if args.coupling == "ferro" else 1
    sets = ingest_samples(args.input, instances=instances,
                          default_coupling=default_coupling)
    times = sorted({s.anneal_time for s in sets})
    fit_min = fit_max = None
    if args.fit_range:
        lo, _, hi = args.fit_range.partition(":")
        fit_min, fit_max = float(lo), float(hi)
    config = CampaignConfig(mode="ingest", seed=args.seed, times=tuple(times),
                            input_path=args.input, instances_path=args.instances,
                            bootstrap=args.bootstrap, fit_min=fit_min,
                            fit_max=fit_max)
    report = run_campaign(config)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text(report.to_json() + "\n", encoding="utf-8")
    print(f"wrote report to {args.out}")
    return 3 if report.n_failed else 0


def _cmd_boltzmann_fit(args) -> int:
    if args.device in DEVICE_PRESETS:
        preset = DEVICE_PRESETS[args.device]
        b1_half, temp = preset.b1_half_ghz, preset.temperature_k
    elif args.device.startswith("custom:"):
        b1_text, _, t_text = args.device[len("custom:"):].partition(",")
        b1_half, temp = 0.5 * float(b1_text), float(t_text)
    else:
        raise ConfigError(f"unknown device {args.device!r}")
    sets = ingest_samples(args.input)
    out = {"device": args.device, "B1_half_GHz": b1_half, "T_physical_K": temp,
           "points": []}
    for ss in sets:
        if ss.instance.length != args.length:
            raise ValueError(
                f"sample group at t={ss.anneal_time} has L={ss.instance.length}, "
                f"expected {args.length}"
            )
        counts = kink_counts(ss.instance, ss)
        hist = stats.histogram(counts)
        fit = boltzmann.fit_beta(hist, args.length)
        entry = fit.as_dict()
        entry["time"] = ss.anneal_time
        entry["n_samples"] = len(ss)
        entry["effective_temperature_k"] = boltzmann.effective_temperature_k(
            fit.beta_tn, b1_half)
        entry["beta_from_density"] = boltzmann.beta_from_density(
            args.length, float(counts.mean()) / args.length)
        out["points"].append(entry)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(out, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote effective-temperature fits to {args.out}")
    return 0


def _cmd_report(args) -> int:
    report = Report.from_json(Path(args.input).read_text(encoding="utf-8"))
    written = emit_report(report, args.format, args.out)
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_campaign(args) -> int:
    if args.preset:
        config = load_preset(args.preset)
    else:
        config = CampaignConfig.from_ini(args.config)
    out_dir = args.out or config.output
    if not out_dir:
        raise ConfigError("no output directory (set [campaign] output or pass --out)")
    report = run_campaign(config)
    for fmt in (args.format or ["json"]):
        for path in emit_report(report, fmt, out_dir):
            print(f"wrote {path}")
    if report.n_failed:
        print(f"warning: {report.n_failed}/{len(report.points)} points failed",
              file=sys.stderr)
        return 3
    return 0


_COMMANDS = {
    "embed": _cmd_embed,
    "svmc": _cmd_svmc,
    "theory": _cmd_theory,
    "analyze": _cmd_analyze,
    "boltzmann-fit": _cmd_boltzmann_fit,
    "report": _cmd_report,
    "campaign": _cmd_campaign,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, IngestError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (RuntimeError, GenerationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
