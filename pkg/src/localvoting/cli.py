"""Command line: ``localvoting run|sweep|consensus CONFIG``.

Outputs go to ``--out`` (default ``$LOCALVOTING_OUT`` or ``./results``) under
a directory named after the config file. Existing non-empty directories are
left alone unless ``--force`` is given.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import consensus, metrics
from .config import ConfigError, load_scenario, load_sweep
from .engine import run
from .local_voting import control_trace_csv
from .rng import derive_seed
from .topology import TopologyInfeasible

log = logging.getLogger("localvoting")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class OutputExists(RuntimeError):
    pass


def output_dir(args, cfg_path) -> Path:
    root = Path(args.out or os.environ.get("LOCALVOTING_OUT") or "results")
    d = root / Path(cfg_path).stem
    if d.exists() and any(d.iterdir()) and not args.force:
        raise OutputExists(f"{d} exists and is not empty (use --force to overwrite)")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write(path: Path, text: str):
    path.write_text(text, encoding="utf-8")


def print_summary(rows, out=None):
    out = out or sys.stdout
    print(f"{'scheduler':<14}{'param':>10}{'runs':>6}{'avg_deliv':>12}{'max_deliv':>12}"
          f"{'jain':>8}{'avg_delay':>12}", file=out)
    for sched, param, agg in rows:
        print(f"{sched:<14}{str(param):>10}{agg['runs']:>6}{agg['avg_delivery']:>12.2f}"
              f"{agg['max_delivery']:>12.2f}{agg['jain_delivery']:>8.4f}{agg['avg_delay']:>12.2f}",
              file=out)


def cmd_run(args) -> int:
    cfg = load_scenario(args.config)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    out = output_dir(args, args.config)
    result = run(cfg)
    _write(out / "packets.csv", result.packets_csv())
    _write(out / "connections.csv", result.connections_csv())
    stats = metrics.result_stats(result)
    rows = [(cfg.scheduler, "", metrics.aggregate([stats]))]
    _write(out / "summary.csv", metrics.summary_csv(rows))
    _write(out / "delay_histogram.csv",
           metrics.histogram_csv(metrics.delay_histogram(result.delivered_packets())))
    if result.trace and len(result.trace) >= 2:
        _write_consensus(out, result, cfg.gamma)
    print_summary(rows)
    return EXIT_OK


def _write_consensus(out, result, gamma):
    tr = consensus.ConsensusTrace.from_frames(result.trace)
    rep = consensus.spectral_report(tr, gamma)
    _write(out / "consensus.txt", rep.to_text())
    _write(out / "consensus.csv", consensus.timeseries_csv(tr, gamma))
    _write(out / "controls.csv", control_trace_csv(result.trace))
    return rep


def cmd_consensus(args) -> int:
    cfg = load_scenario(args.config)
    if cfg.scheduler != "local_voting":
        print(f"error: trace undefined for scheduler {cfg.scheduler!r}", file=sys.stderr)
        return EXIT_USAGE
    cfg = cfg.replace(trace=True)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    out = output_dir(args, args.config)
    result = run(cfg)
    if not result.trace or len(result.trace) < 2:
        print("error: run produced fewer than two frames", file=sys.stderr)
        return EXIT_FAIL
    rep = _write_consensus(out, result, cfg.gamma)
    sys.stdout.write(rep.to_text())
    return EXIT_OK


def sweep_seed(base_seed, scheduler, value, rep, paired=False) -> int:
    if paired:
        return derive_seed(base_seed, value, rep)
    return derive_seed(base_seed, scheduler, value, rep)


def _sweep_task(task):
    cfg, key = task
    try:
        result = run(cfg)
        return key, metrics.result_stats(result), None
    except Exception:  # one failed replication must not stop the sweep
        return key, None, traceback.format_exc(limit=3)


def sweep_tasks(spec, seed_override=None):
    base_seed = spec.base.seed if seed_override is None else seed_override
    tasks = []
    for sched in spec.schedulers:
        for value in spec.values:
            for rep in range(spec.replications):
                cfg = spec.scenario(sched, value)
                cfg = cfg.replace(seed=sweep_seed(base_seed, sched, value, rep, spec.paired))
                tasks.append((cfg, (sched, value, rep)))
    return tasks


def cmd_sweep(args) -> int:
    spec = load_sweep(args.config)
    out = output_dir(args, args.config)
    tasks = sweep_tasks(spec, args.seed)
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            results = list(ex.map(_sweep_task, tasks))
    else:
        results = [_sweep_task(t) for t in tasks]
    groups = {}
    failures = []
    for (sched, value, rep), stats, err in results:
        if err is not None:
            failures.append((sched, value, rep, err))
            continue
        groups.setdefault((sched, value), {})[rep] = stats
    rows = []
    for sched in spec.schedulers:
        for value in spec.values:
            runs = groups.get((sched, value))
            if runs:
                rows.append((sched, value, metrics.aggregate([runs[k] for k in sorted(runs)])))
    _write(out / "sweep.csv", metrics.summary_csv(rows))
    print_summary(rows)
    if failures:
        lines = ["scheduler,param,replication,error"]
        for sched, value, rep, err in failures:
            msg = err.strip().splitlines()[-1].replace(",", ";")
            lines.append(f"{sched},{value},{rep},{msg}")
        _write(out / "failures.csv", "\n".join(lines) + "\n")
        print(f"{len(failures)} replication(s) failed; see failures.csv", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="localvoting", description="TDMA slot scheduling simulator")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, fn, hlp in (("run", cmd_run, "run one scenario"),
                          ("sweep", cmd_sweep, "run a parameter sweep"),
                          ("consensus", cmd_consensus, "trace a Local Voting run and analyze it")):
        p = sub.add_parser(name, help=hlp)
        p.add_argument("config")
        p.add_argument("--out", help="output root (default $LOCALVOTING_OUT or ./results)")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--force", action="store_true", help="overwrite an existing output directory")
        p.add_argument("--jobs", type=int, default=1, help="parallel replications (sweep)")
        p.set_defaults(func=fn)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OutputExists, TopologyInfeasible) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
