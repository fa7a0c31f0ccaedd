"""Command-line entry point.

Subcommands: ``enumerate`` (valid task orderings), ``simulate`` (batch
scripted-leader sessions), ``analyze`` (metrics, statistics and benchmark
comparisons over exported runs), ``serve`` (interactive websocket session) and
``bench`` (stepping-backend comparison).

Exit codes: 0 success, 2 configuration error, 3 runtime fault, 4 partial
analysis (some trials missing or incomplete).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import _layout as L
from ._backend import BACKEND_NAME
from .config import ConfigError, load_config
from .metrics import (
    summarize_by_task,
    summaries_to_dict,
    completion_time_from_trace,
    scaled_path_length,
    velocity_histogram,
    velocity_samples,
)
from .model import ParameterError, SimConfig, Vec2
from .sim import (
    ParamBundle,
    SimulationFault,
    bundle_config_dict,
    export_session,
    hold_rows,
    run_session,
)
from .stats import bonferroni, brunner_munzel, compare_report, format_report, load_reference, report_to_dict
from .tasks import count_orderings, enumerate_valid_sets, sets_to_json

log = logging.getLogger("comanip")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_PARTIAL = 4


def _setup_logging() -> None:
    level = os.environ.get("COMANIP_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def cmd_enumerate(args) -> int:
    sets = enumerate_valid_sets(args.workspace)
    total = count_orderings()
    print(f"{len(sets)} / {total}")
    if args.out:
        Path(args.out).write_text(sets_to_json(sets))
        log.info("wrote %s", args.out)
    return EXIT_OK


def _load_bundle(config_path) -> ParamBundle:
    if config_path is None:
        return ParamBundle()
    return load_config(config_path)


def cmd_simulate(args) -> int:
    bundle = _load_bundle(args.config)
    log.info("backend: %s", BACKEND_NAME)
    session = run_session(bundle, n_sets=args.sets, seed=args.seed)
    path = export_session(session, args.out)
    n_trials = sum(len(s.trials) for s in session.sets)
    n_done = sum(t.completed for s in session.sets for t in s.trials)
    print(f"wrote {path} ({n_trials} trials, {n_done} completed)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# analyze


def _load_run(run_dir: Path):
    """Load a run directory: (session dict, {(set_i, task_i): trace or None})."""
    session_path = run_dir / "session.json"
    if not session_path.exists():
        raise ConfigError(f"{session_path} not found")
    session = json.loads(session_path.read_text())
    traces = {}
    missing = []
    for s in session["sets"]:
        for ti, trial in enumerate(s["trials"]):
            key = (s["set_index"], ti)
            p = run_dir / trial["trace_file"]
            if p.exists():
                traces[key] = np.loadtxt(p, delimiter=",", skiprows=1)
            else:
                traces[key] = None
                missing.append(trial["trace_file"])
    return session, traces, missing


def _trial_metrics(session: dict, traces: dict):
    """Recompute per-trial metrics from traces; returns dicts keyed by task code."""
    cfg = session["config"]["sim"]
    sim_cfg = SimConfig(dt=cfg["dt"], completion_tolerance=cfg["completion_tolerance"],
                        completion_hold=cfg["completion_hold"])
    rows = hold_rows(sim_cfg)
    ref_point = session["config"]["controller"]["reference_point"]
    plate = Vec2(*session["config"]["cmo"]["plate_offset"])
    times: dict = {}
    paths: dict = {}
    incomplete = []
    x_samples = []
    for s in session["sets"]:
        for ti, trial in enumerate(s["trials"]):
            trace = traces.get((s["set_index"], ti))
            if trace is None:
                continue
            code = trial["task"]
            goal = Vec2(*trial["goal"])
            start = Vec2(*trial["start"])
            t = completion_time_from_trace(trace, goal, sim_cfg.completion_tolerance,
                                           rows, ref_point, plate)
            if t is None:
                incomplete.append(trial["trace_file"])
            else:
                times.setdefault(code, []).append(t)
            paths.setdefault(code, []).append(
                scaled_path_length(trace, start, goal, ref_point, plate))
            if code in ("x+", "x-"):
                x_samples.append(velocity_samples(trace, "x", sim_cfg.dt, ref_point, plate))
    return times, paths, incomplete, x_samples


def cmd_analyze(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    reference = load_reference() if args.reference == "builtin" else json.loads(
        Path(args.reference).read_text())

    partial = False
    runs = []
    for run_dir in args.runs:
        session, traces, missing = _load_run(Path(run_dir))
        times, paths, incomplete, x_samples = _trial_metrics(session, traces)
        if missing or incomplete:
            partial = True
            for name in missing:
                log.warning("%s: missing trace %s", run_dir, name)
            for name in incomplete:
                log.warning("%s: no completion in %s", run_dir, name)
        runs.append({"dir": str(run_dir), "times": times, "paths": paths,
                     "x_samples": x_samples, "missing": missing, "incomplete": incomplete})

    primary = runs[0]
    time_summaries = summarize_by_task(primary["times"])
    path_summaries = summarize_by_task(primary["paths"])

    report_time = compare_report(time_summaries, "completion_time", reference)
    report_path = compare_report(path_summaries, "scaled_path_length", reference)
    text = format_report(report_time, "completion_time") + "\n" + \
        format_report(report_path, "scaled_path_length")
    (out / "report.txt").write_text(text)
    print(text, end="")

    payload = {
        "runs": [r["dir"] for r in runs],
        "completion_time": summaries_to_dict(time_summaries),
        "scaled_path_length": summaries_to_dict(path_summaries),
        "reports": [report_to_dict(report_time, "completion_time"),
                    report_to_dict(report_path, "scaled_path_length")],
        "missing": primary["missing"],
        "incomplete": primary["incomplete"],
    }

    if primary["x_samples"]:
        hist = velocity_histogram(primary["x_samples"])
        (out / "x_velocity_histogram.csv").write_text(hist.to_csv())
        payload["x_velocity"] = {
            "sim": {"mean": hist.mean, "sd": hist.sd, "n": hist.n},
            "reference": reference.get("x_velocity", {}),
        }

    if len(runs) == 2:
        comparison = _two_run_comparison(runs[0], runs[1], args.bonferroni_m)
        payload["two_run_comparison"] = comparison
        (out / "bm_comparison.json").write_text(
            json.dumps(comparison, indent=2, sort_keys=True) + "\n")

    (out / "analysis.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return EXIT_PARTIAL if partial else EXIT_OK


def _two_run_comparison(run_a: dict, run_b: dict, m: int | None) -> dict:
    """Brunner-Munzel + Bonferroni between two runs, per metric and task code."""
    out: dict = {"a": run_a["dir"], "b": run_b["dir"], "metrics": {}}
    for metric_key in ("times", "paths"):
        name = "completion_time" if metric_key == "times" else "scaled_path_length"
        rows = []
        codes = sorted(set(run_a[metric_key]) & set(run_b[metric_key]))
        for code in codes:
            a = run_a[metric_key][code]
            b = run_b[metric_key][code]
            if len(a) < 2 or len(b) < 2:
                continue
            r = brunner_munzel(a, b)
            rows.append({"task": code, "statistic": r.statistic, "df": r.df,
                         "p_value": r.p_value, "p_hat": r.p_hat,
                         "degenerate": r.degenerate,
                         "n_a": len(a), "n_b": len(b)})
        family = m if m is not None else len(rows)
        corrected = bonferroni([r["p_value"] for r in rows], max(family, len(rows)))
        for row, p in zip(rows, corrected):
            row["p_corrected"] = p
        out["metrics"][name] = rows
    return out


def cmd_serve(args) -> int:
    from .server import serve  # deferred: pulls in fastapi/uvicorn

    bundle = _load_bundle(args.config)
    serve(bundle, host=args.host, port=args.port, out_dir=args.out,
          realtime=not args.no_realtime, static_dir=args.static)
    return EXIT_OK


def cmd_bench(args) -> int:
    from .benchmark import run_benchmark

    result = run_benchmark(n_steps=args.steps)
    for name, rate in result["rates"].items():
        print(f"{name:>8}: {rate:12.0f} steps/s")
    if "speedup" in result:
        print(f"speedup: {result['speedup']:.1f}x (cython over python)")
    else:
        print("compiled kernel unavailable; measured the pure-Python backend only")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="comanip",
                                     description="Planar co-manipulation simulator and benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enumerate", help="enumerate valid task orderings")
    p.add_argument("--workspace", type=float, default=1.0, metavar="M",
                   help="workspace half-width in meters (default 1.0)")
    p.add_argument("--out", default=None, help="write the set library JSON here")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("simulate", help="run scripted-leader sessions")
    p.add_argument("--config", default=None, help="JSON run config (defaults when omitted)")
    p.add_argument("--sets", type=int, default=6, help="number of distinct sets (default 6)")
    p.add_argument("--seed", type=int, default=0, help="64-bit session seed")
    p.add_argument("--out", required=True, help="output directory for traces and session JSON")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="metrics and statistics over exported runs")
    p.add_argument("--runs", nargs="+", required=True, metavar="DIR",
                   help="one run directory, or two to compare")
    p.add_argument("--reference", default="builtin",
                   help="'builtin' or a path to a reference tables JSON")
    p.add_argument("--out", required=True, help="output directory for reports")
    p.add_argument("--bonferroni-m", type=int, default=None,
                   help="Bonferroni family size (default: rows per comparison table)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("serve", help="host an interactive session over websocket")
    p.add_argument("--port", type=int, default=8700)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--config", default=None, help="JSON run config")
    p.add_argument("--out", default=None, help="directory for exported session traces")
    p.add_argument("--no-realtime", action="store_true",
                   help="step as fast as possible (testing)")
    p.add_argument("--static", default=None, help="serve this directory at / (browser UI)")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("bench", help="compare the stepping backends")
    p.add_argument("--steps", type=int, default=200000)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationFault as exc:
        print(f"simulation fault: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
