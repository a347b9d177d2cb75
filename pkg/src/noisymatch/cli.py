"""Batch front-end: run one experiment and emit deterministic CSV outputs.

Exit codes: 0 success, 1 runtime failure, 2 unparseable input (flags,
config file, preset name), 3 config invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config_io import (
    apply_overrides,
    config_hash,
    config_to_dict,
    dict_to_config,
    load_config_file,
)
from .errors import ConfigError
from .estimation import (
    AffordProbability,
    MatchProbability,
    amplification_metrics,
    attenuation_metrics,
    default_threads,
    estimate_afford_curve,
    estimate_match_curve,
    run_replications,
    steepest_ascent_bin,
)
from .market import v_s_threshold
from .presets import PRESET_NAMES, preset

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_PARSE = 2
EXIT_INVARIANT = 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="noisymatch",
        description="Simulate noisy-score matching markets and emit curve/metric CSVs.",
    )
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", help=f"bundled preset: {', '.join(PRESET_NAMES)}")
    src.add_argument("--config", type=Path, help="JSON config file")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--replications", type=int, help="override the replication count")
    p.add_argument("--colleges", type=int, help="preset only: college count (per coalition for fig2)")
    p.add_argument("--noise", help="preset only: uniform|exponential|pareto|gaussian|gumbel|none")
    p.add_argument("--threads", type=int, default=None, help="worker processes (default: cores)")
    p.add_argument("--out-dir", type=Path, default=Path("out"), help="output directory")
    p.add_argument(
        "--emit-cutoffs",
        action="store_true",
        help="force per-replication cutoff recording (cutoffs.csv is written "
        "whenever the plan records cutoffs, as both presets do)",
    )
    p.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="config-file override with a dotted path, repeatable",
    )
    return p


def _build_doc(args) -> dict:
    if args.preset is not None:
        kwargs = {}
        if args.colleges is not None:
            kwargs["colleges"] = args.colleges
        if args.noise is not None:
            kwargs["noise"] = args.noise
        if args.seed is not None:
            kwargs["seed"] = args.seed
        if args.replications is not None:
            kwargs["replications"] = args.replications
        config, plan = preset(args.preset, **kwargs)
        doc = config_to_dict(config, plan)
    else:
        doc = load_config_file(args.config)
        if args.noise is not None or args.colleges is not None:
            raise ConfigError("--noise/--colleges apply to presets only; use --set for files")
        if args.seed is not None:
            doc["master_seed"] = args.seed
        if args.replications is not None:
            doc.setdefault("plan", {})["replications"] = args.replications
    return apply_overrides(doc, args.overrides)


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def _curve_rows(curve_id: str, curve):
    for i in range(len(curve.count)):
        p = curve.probability[i]
        se = curve.stderr[i]
        yield (
            curve_id,
            "all",
            curve.bin_edges[i],
            curve.bin_edges[i + 1],
            "" if np.isnan(p) else p,
            "" if np.isnan(se) else se,
            int(curve.count[i]),
        )


def run(doc: dict, out_dir: Path, threads: int, emit_cutoffs: bool) -> int:
    started = time.time()
    if emit_cutoffs:
        doc = dict(doc)
        doc.setdefault("plan", {})["record_cutoffs"] = True
    config, plan = dict_to_config(doc)
    digest = config_hash(config_to_dict(config, plan))
    out_dir.mkdir(parents=True, exist_ok=True)

    records = run_replications(config, plan, threads=threads)

    curve_rows = []
    metric_rows = []
    single = len(config.coalitions) == 1
    s_total = config.total_capacity() / config.n_students
    matched_share = records.matched().mean()
    metric_rows.append(("matched_share", matched_share))

    for request in plan.curves:
        if isinstance(request, MatchProbability):
            cid = request.coalition_id
            curve = estimate_match_curve(records, coalition_id=cid)
            curve_id = f"match_value{cid}" if cid is not None else "match"
        else:
            cid = request.coalition_id
            curve = estimate_afford_curve(records, cid, request.trim_epsilon)
            curve_id = f"afford_c{cid}_trim{request.trim_epsilon:g}"
        curve_rows.extend(_curve_rows(curve_id, curve))
        if isinstance(request, MatchProbability) and single:
            v_s = v_s_threshold(config.coalitions[0].values, s_total)
            att = attenuation_metrics(curve, v_s)
            metric_rows.append(("v_s", v_s))
            metric_rows.append(("below_mass", att.below_mass))
            metric_rows.append(("step_deviation", att.step_deviation))
            metric_rows.append(("sup_deviation", amplification_metrics(curve, s_total)))
        if isinstance(request, AffordProbability):
            metric_rows.append((f"{curve_id}_step_location", steepest_ascent_bin(curve)))

    if records.cutoffs is not None:
        for k, coalition in enumerate(config.coalitions):
            cols = records.college_coalition == k
            per_rep_min = records.cutoffs[:, cols].min(axis=1)
            metric_rows.append((f"cutoff_min_mean_c{coalition.id}", per_rep_min.mean()))
            metric_rows.append(
                (f"cutoff_mean_mean_c{coalition.id}", records.cutoffs[:, cols].mean())
            )

    outputs = []
    curves_path = out_dir / "curves.csv"
    _write_csv(
        curves_path,
        ["curve_id", "replication_set", "bin_lo", "bin_hi", "probability", "stderr", "count"],
        curve_rows,
    )
    outputs.append(curves_path.name)

    metrics_path = out_dir / "metrics.csv"
    _write_csv(
        metrics_path,
        ["metric", "value", "config_hash"],
        [(name, value, digest) for name, value in metric_rows],
    )
    outputs.append(metrics_path.name)

    if records.cutoffs is not None:
        cutoffs_path = out_dir / "cutoffs.csv"
        _write_csv(
            cutoffs_path,
            ["replication", "college_id", "coalition_id", "cutoff"],
            (
                (r, config.colleges[c].id, config.colleges[c].coalition, records.cutoffs[r, c])
                for r in range(records.n_replications)
                for c in range(config.n_colleges)
            ),
        )
        outputs.append(cutoffs_path.name)

    manifest = {
        "config_hash": digest,
        "master_seed": config.master_seed,
        "tool_version": __version__,
        "tie_break": "score descending, exact ties to the lower student index",
        "wall_clock_seconds": round(time.time() - started, 3),
        "outputs": outputs,
        "effective_config": doc,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_PARSE if e.code not in (0, None) else EXIT_OK
    try:
        doc = _build_doc(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    threads = args.threads if args.threads is not None else default_threads()
    try:
        return run(doc, args.out_dir, threads, args.emit_cutoffs)
    except ConfigError as e:
        print(f"invariant violation: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    except Exception as e:  # noqa: BLE001 - the CLI maps failures to exit codes
        print(f"runtime error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
