"""Command-line interface.

Subcommands:
  model      evaluate the analytic rate chain, optionally over a sweep
  simulate   run the Monte-Carlo simulator and save a tag record
  analyze    recompute measured rates from a saved tag record
  reproduce  check analytic and Monte-Carlo results against the published
             reference values

Exit codes: 0 success, 1 reproduce checks failed, 2 configuration or usage
error, 3 I/O or file-format error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import analysis, model, reproduce, tagio
from .config import config_to_text, load_config, parse_config_text
from .engine import run_sim
from .params import ConfigError, SystemConfig

EXIT_OK = 0
EXIT_CHECKS_FAILED = 1
EXIT_CONFIG = 2
EXIT_IO = 3


def _load_config_arg(args) -> SystemConfig:
    cfg = load_config(args.config) if args.config else SystemConfig()
    if getattr(args, "set", None):
        overrides = {}
        for item in args.set:
            key, sep, value = item.partition("=")
            if not sep:
                raise ConfigError(f"--set expects key=value, got {item!r}")
            overrides[key.strip()] = value.strip()
        cfg = _apply_overrides(cfg, overrides)
    return cfg


def _apply_overrides(cfg: SystemConfig, overrides: dict) -> SystemConfig:
    lines = config_to_text(cfg).splitlines()
    index = {line.split(" = ")[0]: i for i, line in enumerate(lines)}
    for key, value in overrides.items():
        if key not in index:
            raise ConfigError(f"unknown config key {key!r}")
        lines[index[key]] = f"{key} = {value}"
    if "source.r1_cps" in overrides and "source.r2_cps" not in overrides:
        # keep the default pair-rate ratio when only channel 1 is overridden
        del lines[index["source.r2_cps"]]
    return parse_config_text("\n".join(lines))


def _parse_sweep(spec: str):
    try:
        key, _, rng = spec.partition("=")
        lo, hi, steps = rng.split(":")
        values = np.linspace(float(lo), float(hi), int(steps))
    except ValueError:
        raise ConfigError(f"--sweep expects key=LO:HI:STEPS, got {spec!r}") \
            from None
    return key.strip(), values


def cmd_model(args) -> int:
    cfg = _load_config_arg(args)
    if args.sweep:
        key, values = _parse_sweep(args.sweep)
        reports = []
        for v in values:
            swept = _apply_overrides(cfg, {key: repr(float(v))})
            reports.append((v, model.full_chain(swept)))
        names = [name for name, _, _ in reports[0][1].rows()]
        header = [key] + names
        rows = [[f"{v:.10g}"] + [f"{val:.10g}" for _, val, _ in rep.rows()]
                for v, rep in reports]
        text = "\n".join([",".join(header)] + [",".join(r) for r in rows])
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
            print(f"wrote {len(rows)} sweep points to {args.out}")
        else:
            print(text)
        return EXIT_OK
    rep = model.full_chain(cfg)
    for name, value, _ in rep.rows():
        print(f"{name:16s} {value:.6g}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _load_config_arg(args)
    record = run_sim(cfg, seed=args.seed, duration_s=args.duration)
    counts = record.counts()
    total = sum(counts.values())
    print(f"simulated {record.effective_duration_s:g} s, {total} tags "
          f"({', '.join(f'{k}={v}' for k, v in counts.items())}), "
          f"{record.log.n_trials} trials")
    if args.out:
        paths = tagio.save_record(args.out, record, fmt=args.format)
        for p in paths:
            print(f"wrote {p}")
    print(f"digest {record.digest()}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    record = tagio.load_record(args.record)
    rep = analysis.analyze_record(record)
    lines = []
    for name, value, err in rep.rows():
        has_err = isinstance(err, float) and err == err
        lines.append((name, f"{value:.6g}", f"{err:.3g}" if has_err else ""))
    width = max(len(n) for n, _, _ in lines)
    for name, value, err in lines:
        suffix = f" +- {err}" if err else ""
        print(f"{name:{width}s} {value}{suffix}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("metric,value,stderr\n")
            for name, value, err in lines:
                fh.write(f"{name},{value},{err}\n")
        print(f"wrote {args.out}")
    return EXIT_OK


def cmd_reproduce(args) -> int:
    numbers = args.criteria or None
    if args.skip_mc:
        numbers = sorted(set(numbers or reproduce.ANALYTIC_CRITERIA)
                         & set(reproduce.ANALYTIC_CRITERIA))
    cache = reproduce.RunCache(seed=args.seed, scale=args.scale)
    results = reproduce.run_criteria(numbers, cache)
    for r in results:
        print(r.line())
    n_fail = sum(not r.passed for r in results)
    print(f"{len(results) - n_fail}/{len(results)} checks passed")
    return EXIT_OK if n_fail == 0 else EXIT_CHECKS_FAILED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="photonsync", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    def add_config_args(sp):
        sp.add_argument("--config", help="parameter file (key = value lines)")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a single config key (repeatable)")

    sp = sub.add_parser("model", help="evaluate the analytic rate chain")
    add_config_args(sp)
    sp.add_argument("--sweep", metavar="KEY=LO:HI:STEPS",
                    help="sweep one config key over a linear grid")
    sp.add_argument("--out", help="write results as CSV")
    sp.set_defaults(func=cmd_model)

    sp = sub.add_parser("simulate", help="run the Monte-Carlo simulator")
    add_config_args(sp)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--duration", type=float, default=1.0,
                    help="simulated seconds (default 1)")
    sp.add_argument("--out", help="output base path (writes base.<fmt>, "
                                  "base.json, base.events.csv)")
    sp.add_argument("--format", choices=("ptag", "csv"), default="ptag")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("analyze", help="analyze a saved tag record")
    sp.add_argument("record", help="base path used by simulate --out")
    sp.add_argument("--out", help="write metrics as CSV")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("reproduce",
                        help="check results against published references")
    sp.add_argument("--criteria", type=int, nargs="+", metavar="N",
                    help="criterion numbers to run (default: all)")
    sp.add_argument("--seed", type=int, default=reproduce.BASE_SEED)
    sp.add_argument("--scale", type=float, default=1.0,
                    help="multiply Monte-Carlo durations (quick look: 0.1)")
    sp.add_argument("--skip-mc", action="store_true",
                    help="run only the closed-form checks")
    sp.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except tagio.FileFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
