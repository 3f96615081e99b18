"""Command-line front end.

Subcommands:

* ``run <config>``   -- full campaign: mass, acceptance, speedup, bounds.
* ``check <config>`` -- bound-verification suites only.
* ``plot <csv dir>`` -- split campaign CSVs into per-curve series files.

Exit codes: 0 success, 1 usage/configuration error, 2 an invariant gate or
bound assertion failed (outputs are still written for inspection).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import harness, kernels
from .checks import SuiteResult
from .harness import ConfigError, load_config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edgespec",
        description="Deterministic device-edge speculative decoding simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a full campaign from a config file")
    run.add_argument("config", help="YAML experiment configuration")
    run.add_argument("--out", default="results", help="output directory (default: results)")
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.add_argument("--jobs", type=int, default=1, help="parallel campaign workers")

    check = sub.add_parser("check", help="run only the bound-verification suites")
    check.add_argument("config", help="YAML experiment configuration")
    check.add_argument("--out", default="results", help="output directory (default: results)")
    check.add_argument("--seed", type=int, default=None, help="override the config seed")
    check.add_argument("--jobs", type=int, default=1, help="parallel campaign workers")

    plot = sub.add_parser("plot", help="emit per-curve plot data from campaign CSVs")
    plot.add_argument("csv_dir", help="directory holding campaign CSV files")
    plot.add_argument("--svg", action="store_true", help="also write simple SVG charts")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses 2 for usage errors; we reserve 2
        return 0 if exc.code == 0 else 1

    if args.command == "plot":
        csv_dir = Path(args.csv_dir)
        if not csv_dir.is_dir():
            print(f"error: {csv_dir} is not a directory", file=sys.stderr)
            return 1
        written = harness.emit_plot_data(csv_dir, svg=args.svg)
        for path in written:
            print(path)
        return 0

    try:
        cfg = load_config(args.config)
    except FileNotFoundError:
        print(f"error: config file not found: {args.config}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return 1
    if args.seed is not None:
        cfg = harness.config_from_mapping(_override_seed(cfg, args.seed))
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return 1

    print(f"kernel backend: {kernels.backend_name()}")
    if args.command == "run":
        result = harness.run_campaign(cfg, args.out, jobs=args.jobs)
        print((Path(args.out) / "summary.txt").read_text(encoding="utf-8"), end="")
        return 0 if result.ok else 2
    # check: theory suites only
    result = _run_check(cfg, args.out, jobs=args.jobs)
    print((Path(args.out) / "summary.txt").read_text(encoding="utf-8"), end="")
    return 0 if not result.violations else 2


def _override_seed(cfg: harness.ExperimentConfig, seed: int) -> dict:
    data = {
        "seed": seed,
        "model": {
            "stats_vocab": cfg.stats_vocab,
            "payload_vocab": cfg.payload_vocab,
            "context_order": cfg.context_order,
            "concentration": cfg.concentration,
            "head_mass_target": cfg.head_mass_target,
            "head_mass_fraction": cfg.head_mass_fraction,
            "divergence": cfg.divergence,
            "target_alpha": cfg.target_alpha,
        },
        "decode": {
            "draft_len": cfg.draft_len,
            "expansion": list(cfg.expansion),
            "stop_len": cfg.stop_len,
        },
        "truncation": {
            "fractions": list(cfg.fractions),
            "nucleus_exclusive": cfg.nucleus_exclusive,
        },
        "link": {
            "r_up_mbit": list(cfg.r_up_mbit),
            "b_prob": cfg.b_prob,
            "b_idx": cfg.b_idx,
            "conventions": list(cfg.conventions),
        },
        "timing": {"draft_s": cfg.draft_s, "target_s": cfg.target_s},
        "campaign": {
            "single_steps": cfg.single_steps,
            "multi_nodes": cfg.multi_nodes,
            "mass_contexts": cfg.mass_contexts,
            "theory_instances": cfg.theory_instances,
            "chain_vocab": cfg.chain_vocab,
            "chain_keep": cfg.chain_keep,
            "chain_depth": cfg.chain_depth,
        },
    }
    return data


def _run_check(cfg: harness.ExperimentConfig, out_dir, *, jobs: int) -> SuiteResult:
    """Theory suites only, same seeding and outputs as the full campaign."""
    from concurrent.futures import ProcessPoolExecutor

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model = harness.resolve_model(cfg)
    tasks = [t for t in harness._task_list(cfg) if t[0] == "theory"]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            results = list(
                pool.map(harness._run_task, [cfg] * len(tasks), [model] * len(tasks), tasks)
            )
    else:
        results = [harness._run_task(cfg, model, t) for t in tasks]
    suite = SuiteResult()
    for res in results:
        suite.extend(res)
    harness._write_csv(
        out / "theory_report.csv",
        [
            "family", "seed", "vocab", "trunc", "level", "lhs", "rhs",
            "slack", "satisfied", "asserted", "note",
        ],
        [
            (
                r.family, r.seed, r.vocab, r.trunc, r.level, r.lhs, r.rhs,
                r.slack, r.satisfied, r.asserted, r.note,
            )
            for r in suite.reports
        ],
    )
    n_vac = sum(1 for r in suite.reports if "vacuous" in r.note)
    n_deg = sum(1 for r in suite.reports if "degenerate" in r.note)
    lines = [
        "bound-check summary",
        "===================",
        f"seed: {cfg.seed}",
        f"reports={len(suite.reports)} asserted={suite.n_asserted} "
        f"violations={len(suite.violations)} vacuous={n_vac} degenerate={n_deg} "
        f"(from theory_report.csv)",
    ]
    for v in suite.violations:
        lines.append(f"  VIOLATION {v.family} seed={v.seed} lhs={v.lhs!r} rhs={v.rhs!r}")
    lines.append(f"exit: {0 if not suite.violations else 2}")
    lines.append("")
    (out / "summary.txt").write_text("\n".join(lines), encoding="utf-8")
    return suite


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())
