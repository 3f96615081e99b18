"""Experiment driver: config in, deterministic CSV campaigns out.

A campaign reproduces the full desk-scale evaluation: head-mass curves,
acceptance rates across truncation widths for both decoding modes, analytic
throughput/speedup sweeps over uplink rates (fed by the measured acceptance
rates), and the bound-verification suites.  Outputs: ``mass.csv``,
``acceptance.csv``, ``speedup.csv``, ``theory_report.csv`` and a
``summary.txt`` whose every number is an aggregate of CSV rows.

Determinism contract: (config, seed) fixes every output byte.  Campaign
tasks derive their randomness from (seed, task id) and results are merged
in task order, so ``--jobs N`` only changes wall time.
"""

from __future__ import annotations

import csv
import dataclasses
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from . import checks, perf
from .checks import AcceptanceRow, BoundReport, SuiteResult
from .models import ModelPair, calibrate_concentration, calibrate_divergence
from .perf import LinkModel, PayloadConvention, TimingModel
from .rng import derive
from .tree import ExpansionConfig


class ConfigError(ValueError):
    """Invalid experiment configuration; message names the offending field."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated campaign parameters (see ``configs/`` for the schema)."""

    seed: int
    stats_vocab: int = 512
    payload_vocab: int = 32000
    context_order: int = 2
    concentration: float | None = None
    head_mass_target: float = 0.85
    head_mass_fraction: float = 0.01
    divergence: float | None = None
    target_alpha: float = 0.8
    draft_len: int = 4
    expansion: tuple[int, ...] = (2, 2, 2)
    stop_len: int = 64
    fractions: tuple[float, ...] = (1.0, 0.1, 0.01, 0.001)
    nucleus_exclusive: bool = False
    r_up_mbit: tuple[float, ...] = (0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0)
    b_prob: int = 16
    b_idx: int | None = None
    conventions: tuple[str, ...] = ("value_and_index", "value_only")
    draft_s: float = 0.0015
    target_s: float = 0.03
    single_steps: int = 20000
    multi_nodes: int = 20000
    mass_contexts: int = 64
    theory_instances: int = 10000
    chain_vocab: int = 8
    chain_keep: int = 4
    chain_depth: int = 4

    def __post_init__(self):
        _require(isinstance(self.seed, int), "seed", "must be an integer (no wall-clock seeding)")
        _require(self.stats_vocab >= 2, "model.stats_vocab", "must be >= 2")
        _require(self.payload_vocab >= 2, "model.payload_vocab", "must be >= 2")
        _require(0 <= self.context_order <= 2, "model.context_order", "must be 0, 1 or 2")
        if self.concentration is not None:
            _require(self.concentration > 0, "model.concentration", "must be > 0")
        _require(0 < self.head_mass_target < 1, "model.head_mass_target", "must be in (0, 1)")
        _require(0 < self.head_mass_fraction <= 1, "model.head_mass_fraction", "must be in (0, 1]")
        if self.divergence is not None:
            _require(0 <= self.divergence <= 1, "model.divergence", "must be in [0, 1]")
        _require(0 < self.target_alpha <= 1, "model.target_alpha", "must be in (0, 1]")
        _require(self.draft_len >= 1, "decode.draft_len", "must be >= 1")
        _require(
            len(self.expansion) >= 1 and all(k >= 1 for k in self.expansion),
            "decode.expansion", "must be a non-empty list of counts >= 1",
        )
        _require(self.stop_len > 2, "decode.stop_len", "must exceed the prefix length")
        _require(len(self.fractions) > 0, "truncation.fractions", "must be non-empty")
        _require(
            all(0 < f <= 1 for f in self.fractions),
            "truncation.fractions", "entries must be in (0, 1]",
        )
        _require(1.0 in self.fractions, "truncation.fractions", "must include 1.0 (dense reference)")
        _require(
            len(self.r_up_mbit) > 0 and all(r > 0 for r in self.r_up_mbit),
            "link.r_up_mbit", "must be a non-empty list of positive rates",
        )
        _require(self.b_prob in (16, 32), "link.b_prob", "must be 16 or 32")
        if self.b_idx is not None:
            _require(self.b_idx >= 1, "link.b_idx", "must be >= 1")
        _require(len(self.conventions) > 0, "link.conventions", "must be non-empty")
        for c in self.conventions:
            _require(
                c in ("value_and_index", "value_only"),
                "link.conventions", f"unknown convention {c!r}",
            )
        _require(self.draft_s > 0, "timing.draft_s", "must be > 0")
        _require(self.target_s > 0, "timing.target_s", "must be > 0")
        for name in ("single_steps", "multi_nodes", "mass_contexts", "theory_instances"):
            _require(getattr(self, name) >= 1, f"campaign.{name}", "must be >= 1")
        _require(self.chain_vocab >= 2, "campaign.chain_vocab", "must be >= 2")
        _require(
            1 <= self.chain_keep <= self.chain_vocab,
            "campaign.chain_keep", "must be in [1, chain_vocab]",
        )
        _require(self.chain_depth >= 2, "campaign.chain_depth", "must be >= 2")

    def keep_widths(self, vocab: int) -> tuple[int, ...]:
        """Kept-set widths for each configured fraction at the given V."""
        return tuple(max(1, round(f * vocab)) for f in self.fractions)

    @property
    def timing(self) -> TimingModel:
        return TimingModel(self.draft_s, self.target_s)

    @property
    def expansion_config(self) -> ExpansionConfig:
        return ExpansionConfig(self.expansion)


def _require(ok: bool, name: str, message: str) -> None:
    if not ok:
        raise ConfigError(f"{name}: {message}")


_SECTION_FIELDS = {
    "model": (
        "stats_vocab", "payload_vocab", "context_order", "concentration",
        "head_mass_target", "head_mass_fraction", "divergence", "target_alpha",
    ),
    "decode": ("draft_len", "expansion", "stop_len"),
    "truncation": ("fractions", "nucleus_exclusive"),
    "link": ("r_up_mbit", "b_prob", "b_idx", "conventions"),
    "timing": ("draft_s", "target_s"),
    "campaign": (
        "single_steps", "multi_nodes", "mass_contexts", "theory_instances",
        "chain_vocab", "chain_keep", "chain_depth",
    ),
}


def config_from_mapping(data) -> ExperimentConfig:
    """Build a config from a nested mapping, naming any offending field."""
    if not isinstance(data, dict):
        raise ConfigError("top level: expected a mapping of sections")
    if "seed" not in data:
        raise ConfigError("seed: required (campaigns are never wall-clock seeded)")
    kwargs = {"seed": data["seed"]}
    for section, names in _SECTION_FIELDS.items():
        sub = data.get(section, {})
        if sub is None:
            sub = {}
        if not isinstance(sub, dict):
            raise ConfigError(f"{section}: expected a mapping")
        for key, value in sub.items():
            if key not in names:
                raise ConfigError(f"{section}.{key}: unknown field")
            if isinstance(value, list):
                value = tuple(value)
            kwargs[key] = value
    for key in data:
        if key not in _SECTION_FIELDS and key != "seed":
            raise ConfigError(f"{key}: unknown section")
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: not valid YAML ({exc})") from exc
    return config_from_mapping(data)


@dataclass(frozen=True)
class ResolvedModel:
    """Config with calibrations applied; what the campaign actually runs."""

    concentration: float
    concentration_calibrated: bool
    divergence: float
    divergence_calibrated: bool

    def pair(self, cfg: ExperimentConfig, vocab: int) -> ModelPair:
        return ModelPair(vocab, cfg.context_order, self.divergence, self.concentration, cfg.seed)


def resolve_model(cfg: ExperimentConfig) -> ResolvedModel:
    """Run the configured calibrations (deterministic, done once)."""
    if cfg.concentration is not None:
        gamma, gcal = cfg.concentration, False
    else:
        gamma = calibrate_concentration(
            cfg.stats_vocab, cfg.head_mass_fraction, cfg.head_mass_target,
            cfg.seed, context_order=cfg.context_order,
        )
        gcal = True
    if cfg.divergence is not None:
        lam, lcal = cfg.divergence, False
    else:
        lam = calibrate_divergence(
            cfg.stats_vocab, cfg.context_order, gamma, cfg.seed, cfg.target_alpha
        )
        lcal = True
    return ResolvedModel(gamma, gcal, lam, lcal)


# ----------------------------------------------------------------------
# campaign tasks (module-level so worker processes can unpickle them)
# ----------------------------------------------------------------------

_THEORY_CHUNK = 1250


def _task_list(cfg: ExperimentConfig) -> list[tuple]:
    tasks: list[tuple] = [("mass", "stats"), ("mass", "payload")]
    for mode in ("single", "multi"):
        for fraction in cfg.fractions:
            tasks.append(("acceptance", mode, fraction))
    for family in ("drift", "triangle", "chain"):
        done = 0
        while done < cfg.theory_instances:
            n = min(_THEORY_CHUNK, cfg.theory_instances - done)
            tasks.append(("theory", family, done, n))
            done += n
    return tasks


def _run_task(cfg: ExperimentConfig, model: ResolvedModel, task: tuple):
    kind = task[0]
    if kind == "mass":
        scope = task[1]
        vocab = cfg.stats_vocab if scope == "stats" else cfg.payload_vocab
        pair = model.pair(cfg, vocab)
        contexts = cfg.mass_contexts if scope == "stats" else max(8, cfg.mass_contexts // 4)
        rows = checks.head_mass_curve(
            pair, cfg.keep_widths(vocab), n_contexts=contexts,
            seed=derive(cfg.seed, "mass", scope),
        )
        return [(scope, vocab, keep, keep / vocab, mass) for keep, mass in rows]
    if kind == "acceptance":
        _, mode, fraction = task
        keep = max(1, round(fraction * cfg.stats_vocab))
        pair = model.pair(cfg, cfg.stats_vocab)
        rows = checks.acceptance_campaign(
            pair, [keep], modes=(mode,), draft_len=cfg.draft_len,
            expansion=cfg.expansion_config, stop_len=cfg.stop_len,
            single_steps=cfg.single_steps, multi_nodes=cfg.multi_nodes,
            seed=cfg.seed,
        )
        # Rows carry the configured fraction (distinct fractions can share a
        # kept width at small vocabularies; the realized one is keep/vocab).
        return [dataclasses.replace(r, fraction=fraction) for r in rows]
    if kind == "theory":
        _, family, start, count = task
        seed = derive(cfg.seed, "theory", family)
        if family == "drift":
            return checks.run_drift_suite(seed, count, start=start).reports
        if family == "triangle":
            return checks.run_triangle_suite(seed, count, start=start).reports
        return checks.run_chain_suite(
            seed, count, start=start, vocab=cfg.chain_vocab,
            keep=cfg.chain_keep, max_depth=cfg.chain_depth,
        ).reports
    raise ValueError(f"unknown task {task!r}")


@dataclass(frozen=True)
class SpeedupRow:
    mode: str
    convention: str
    keep: int
    fraction: float
    r_up_mbit: float
    alpha: float
    payload_bits: int
    t_comm_s: float
    throughput_tps: float
    speedup: float


def _speedup_rows(cfg: ExperimentConfig, acceptance: list[AcceptanceRow]) -> list[SpeedupRow]:
    """Analytic sweep at payload scale, driven by measured acceptance.

    Acceptance is measured at stats scale, so rates map to payload-scale
    kept widths through the configured fraction.
    """
    alpha_of = {(r.mode, r.fraction): r.measured_alpha for r in acceptance}
    rows: list[SpeedupRow] = []
    timing = cfg.timing
    expansion = cfg.expansion_config
    for mode in ("single", "multi"):
        for conv_name in cfg.conventions:
            conv = PayloadConvention(conv_name)
            for frac, keep in zip(cfg.fractions, cfg.keep_widths(cfg.payload_vocab)):
                alpha = alpha_of[(mode, frac)]
                for r_up in cfg.r_up_mbit:
                    link = LinkModel(r_up * 1e6, cfg.payload_vocab, cfg.b_prob, cfg.b_idx)
                    if mode == "single":
                        bits = perf.payload_bits(link, cfg.draft_len, keep, conv)
                        tps, s = perf.single_throughput_speedup(
                            link, timing, alpha, cfg.draft_len, keep, conv
                        )
                    else:
                        bits = perf.payload_bits(link, expansion.dist_count, keep, conv)
                        tps, s = perf.multi_throughput_speedup(
                            link, timing, alpha, expansion, keep, conv
                        )
                    rows.append(
                        SpeedupRow(
                            mode, conv_name, keep, frac, r_up, alpha,
                            bits, perf.comm_time(link, bits), tps, s,
                        )
                    )
    rows.sort(key=lambda r: (r.mode, r.convention, -r.keep, r.r_up_mbit))
    return rows


@dataclass
class CampaignResult:
    config: ExperimentConfig
    model: ResolvedModel
    mass_rows: list[tuple]
    acceptance_rows: list[AcceptanceRow]
    speedup_rows: list[SpeedupRow]
    theory: SuiteResult
    gate_failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.gate_failures and not self.theory.violations


def run_campaign(cfg: ExperimentConfig, out_dir, *, jobs: int = 1) -> CampaignResult:
    """Execute the full campaign and write all output files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model = resolve_model(cfg)
    tasks = _task_list(cfg)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            results = list(pool.map(_run_task, [cfg] * len(tasks), [model] * len(tasks), tasks))
    else:
        results = [_run_task(cfg, model, t) for t in tasks]

    mass_rows: list[tuple] = []
    acceptance_rows: list[AcceptanceRow] = []
    theory = SuiteResult()
    for task, res in zip(tasks, results):
        if task[0] == "mass":
            mass_rows.extend(res)
        elif task[0] == "acceptance":
            acceptance_rows.extend(res)
        else:
            theory.extend(res)
    mass_rows.sort(key=lambda r: (r[0], r[2]))
    acceptance_rows.sort(key=lambda r: (r.mode, -r.fraction))
    speedup_rows = _speedup_rows(cfg, acceptance_rows)

    result = CampaignResult(cfg, model, mass_rows, acceptance_rows, speedup_rows, theory)
    result.gate_failures = _evaluate_gates(cfg, result)
    _write_outputs(result, out)
    return result


# ----------------------------------------------------------------------
# invariant gates
# ----------------------------------------------------------------------


def _evaluate_gates(cfg: ExperimentConfig, res: CampaignResult) -> list[str]:
    """Cross-cutting invariants the campaign must satisfy; any failure turns
    into a nonzero exit.  Statistical gates use 3 standard errors."""
    fails: list[str] = []

    for scope in ("stats", "payload"):
        rows = [r for r in res.mass_rows if r[0] == scope]
        masses = [r[4] for r in rows]
        if any(b < a - 1e-12 for a, b in zip(masses, masses[1:])):
            fails.append(f"head-mass curve not monotone in kept width ({scope})")
        full = [r for r in rows if r[2] == r[1]]
        if full and abs(full[0][4] - 1.0) > 1e-9:
            fails.append(f"full-width head mass != 1 ({scope}: {full[0][4]!r})")

    by_mode: dict[str, list[AcceptanceRow]] = {"single": [], "multi": []}
    for row in res.acceptance_rows:
        by_mode[row.mode].append(row)
    for mode, rows in by_mode.items():
        if not rows:
            continue
        dense = max(rows, key=lambda r: r.fraction)
        for row in rows:
            # measured-vs-analytic agreement (acceptance == overlap mass)
            if abs(row.measured_alpha - row.analytic_alpha) > 3 * row.stderr:
                fails.append(
                    f"{mode} keep={row.keep}: measured alpha {row.measured_alpha:.4f} "
                    f"vs analytic {row.analytic_alpha:.4f} beyond 3 stderr"
                )
            # acceptance drift bounded by mean discarded mass
            se = (row.stderr**2 + dense.stderr**2) ** 0.5
            drift = abs(row.measured_alpha - dense.measured_alpha)
            if drift > row.mean_sigma + 3 * se:
                fails.append(
                    f"{mode} keep={row.keep}: acceptance drift {drift:.4f} exceeds "
                    f"mean discarded mass {row.mean_sigma:.4f} + 3 stderr"
                )
    singles = {r.fraction: r for r in by_mode["single"]}
    multis = {r.fraction: r for r in by_mode["multi"]}
    for frac, srow in singles.items():
        mrow = multis.get(frac)
        if mrow is None:
            continue
        se = (srow.stderr**2 + mrow.stderr**2) ** 0.5
        if mrow.measured_alpha < srow.measured_alpha - 3 * se:
            fails.append(
                f"multi alpha below single alpha at fraction {frac} "
                f"({mrow.measured_alpha:.4f} < {srow.measured_alpha:.4f})"
            )

    fails.extend(_speedup_gates(cfg, res.speedup_rows))

    for v in res.theory.violations:
        fails.append(
            f"bound violation: {v.family} seed={v.seed} level={v.level} "
            f"lhs={v.lhs!r} rhs={v.rhs!r}"
        )
    return fails


def _speedup_gates(cfg: ExperimentConfig, rows: list[SpeedupRow]) -> list[str]:
    fails: list[str] = []
    curves: dict[tuple, dict[float, list[SpeedupRow]]] = {}
    for r in rows:
        curves.setdefault((r.mode, r.convention), {}).setdefault(r.fraction, []).append(r)
    for (mode, conv), by_frac in curves.items():
        for frac, pts in by_frac.items():
            pts.sort(key=lambda r: r.r_up_mbit)
            sp = [p.speedup for p in pts]
            if any(b < a - 1e-12 for a, b in zip(sp, sp[1:])):
                fails.append(f"{mode}/{conv}: speedup not monotone in uplink rate (frac={frac})")
        dense = by_frac.get(1.0)
        for frac in sorted(by_frac):
            if frac == 1.0 or frac < 0.01 - 1e-12 or dense is None:
                continue
            if any(
                t.speedup < d.speedup - 1e-12 for t, d in zip(by_frac[frac], dense)
            ):
                fails.append(
                    f"{mode}/{conv}: truncated fraction {frac} not >= dense at every rate"
                )
            # Relative gain over dense must grow as the uplink slows (the
            # absolute gap vanishes at both rate extremes, so it is the
            # ratio that is monotone).
            gains = [t.speedup / d.speedup for t, d in zip(by_frac[frac], dense)]
            if any(b > a + 1e-9 for a, b in zip(gains, gains[1:])):
                fails.append(
                    f"{mode}/{conv}: truncation gain (frac={frac}) fails to grow "
                    f"as the uplink slows"
                )
    return fails


# ----------------------------------------------------------------------
# output files
# ----------------------------------------------------------------------


def _fmt(value) -> str:
    """Locale-free cell formatting; floats use shortest-roundtrip repr."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header: list[str], rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    path.write_text(buf.getvalue(), encoding="utf-8")


def _write_outputs(res: CampaignResult, out: Path) -> None:
    _write_csv(
        out / "mass.csv",
        ["scope", "vocab", "keep", "fraction", "mean_mass"],
        res.mass_rows,
    )
    _write_csv(
        out / "acceptance.csv",
        [
            "mode", "vocab", "keep", "fraction", "tested", "accepted",
            "measured_alpha", "analytic_alpha", "abs_delta", "mean_sigma", "stderr",
        ],
        [
            (
                r.mode, res.config.stats_vocab, r.keep, r.fraction, r.tested,
                r.accepted, r.measured_alpha, r.analytic_alpha,
                abs(r.measured_alpha - r.analytic_alpha), r.mean_sigma, r.stderr,
            )
            for r in res.acceptance_rows
        ],
    )
    _write_csv(
        out / "speedup.csv",
        [
            "mode", "convention", "vocab", "keep", "fraction", "r_up_mbit",
            "alpha", "payload_bits", "t_comm_s", "throughput_tps", "speedup",
        ],
        [
            (
                r.mode, r.convention, res.config.payload_vocab, r.keep, r.fraction,
                r.r_up_mbit, r.alpha, r.payload_bits, r.t_comm_s,
                r.throughput_tps, r.speedup,
            )
            for r in res.speedup_rows
        ],
    )
    _write_csv(
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
            for r in res.theory.reports
        ],
    )
    (out / "summary.txt").write_text(_summary_text(res), encoding="utf-8")


def _summary_text(res: CampaignResult) -> str:
    cfg = res.config
    lines: list[str] = []
    push = lines.append
    push("campaign summary")
    push("================")
    push(f"seed: {cfg.seed}")
    push(
        f"model: stats_vocab={cfg.stats_vocab} payload_vocab={cfg.payload_vocab} "
        f"context_order={cfg.context_order}"
    )
    push(
        f"concentration: {res.model.concentration!r}"
        + (" (calibrated)" if res.model.concentration_calibrated else " (configured)")
    )
    push(
        f"divergence: {res.model.divergence!r}"
        + (" (calibrated)" if res.model.divergence_calibrated else " (configured)")
    )
    push("")
    push("[head mass] scope keep fraction mean_mass (from mass.csv)")
    for scope, vocab, keep, fraction, mass in res.mass_rows:
        push(f"  {scope} V={vocab} keep={keep} frac={fraction:.6g} mass={mass!r}")
    push("")
    push("[acceptance] mode keep measured analytic sigma stderr (from acceptance.csv)")
    for r in res.acceptance_rows:
        push(
            f"  {r.mode} keep={r.keep} measured={r.measured_alpha!r} "
            f"analytic={r.analytic_alpha!r} sigma={r.mean_sigma!r} stderr={r.stderr!r}"
        )
    push("")
    n_vac = sum(1 for r in res.theory.reports if "vacuous" in r.note)
    n_deg = sum(1 for r in res.theory.reports if "degenerate" in r.note)
    push(
        f"[theory] reports={len(res.theory.reports)} asserted={res.theory.n_asserted} "
        f"violations={len(res.theory.violations)} vacuous={n_vac} degenerate={n_deg} "
        f"(from theory_report.csv)"
    )
    push("")
    push("[notes]")
    for conv in cfg.conventions:
        link = LinkModel(1e6, cfg.payload_vocab, cfg.b_prob, cfg.b_idx)
        per_vec = link.bits_per_entry(PayloadConvention(conv)) * cfg.payload_vocab
        push(
            f"  payload accounting '{conv}': one dense vector at V={cfg.payload_vocab} "
            f"costs {per_vec} bits"
        )
    push(
        "  the two conventions differ by the per-entry index bits; both are "
        "emitted because published payload figures use either."
    )
    push(
        "  residual normalizers in chain bounds use the constructive definition "
        "sum max(0, p_prev - q); bounds are reported (not asserted) below the "
        f"Z floor and flagged 'vacuous' when they exceed 1."
    )
    push(
        "  nucleus truncation includes the threshold-crossing token; the "
        "exclusive variant is available as a config flag."
    )
    push("")
    if res.gate_failures:
        push("[gates] VIOLATIONS:")
        for f in res.gate_failures:
            push(f"  - {f}")
    else:
        push("[gates] all invariants satisfied")
    push(f"exit: {0 if res.ok else 2}")
    push("")
    return "\n".join(lines)


# ----------------------------------------------------------------------
# plot data
# ----------------------------------------------------------------------


def emit_plot_data(csv_dir, *, svg: bool = False) -> list[Path]:
    """Split campaign CSVs into one whitespace-separated series per curve.

    Missing input files are skipped; an input with no data rows yields an
    empty series file.  With ``svg=True`` a self-contained line chart is
    written next to each series group.
    """
    csv_dir = Path(csv_dir)
    out_dir = csv_dir / "plots"
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    mass = csv_dir / "mass.csv"
    if mass.exists():
        rows = _read_csv(mass)
        for scope in sorted({r["scope"] for r in rows}):
            series = [
                (float(r["fraction"]), float(r["mean_mass"]))
                for r in rows
                if r["scope"] == scope
            ]
            series.sort()
            written.append(_write_series(out_dir / f"mass_{scope}.dat", series))
        if svg and rows:
            written.append(
                _write_svg(
                    out_dir / "mass.svg", "kept fraction", "mean head mass",
                    {
                        scope: sorted(
                            (float(r["fraction"]), float(r["mean_mass"]))
                            for r in rows
                            if r["scope"] == scope
                        )
                        for scope in sorted({r["scope"] for r in rows})
                    },
                )
            )

    acceptance = csv_dir / "acceptance.csv"
    if acceptance.exists():
        rows = _read_csv(acceptance)
        for mode in sorted({r["mode"] for r in rows}):
            series = [
                (float(r["fraction"]), float(r["measured_alpha"]))
                for r in rows
                if r["mode"] == mode
            ]
            series.sort()
            written.append(_write_series(out_dir / f"acceptance_{mode}.dat", series))
        if svg and rows:
            written.append(
                _write_svg(
                    out_dir / "acceptance.svg", "kept fraction", "acceptance rate",
                    {
                        mode: sorted(
                            (float(r["fraction"]), float(r["measured_alpha"]))
                            for r in rows
                            if r["mode"] == mode
                        )
                        for mode in sorted({r["mode"] for r in rows})
                    },
                )
            )

    speedup = csv_dir / "speedup.csv"
    if speedup.exists():
        rows = _read_csv(speedup)
        groups = sorted({(r["mode"], r["convention"], r["fraction"]) for r in rows})
        svg_series: dict[str, list[tuple[float, float]]] = {}
        for mode, conv, frac in groups:
            series = [
                (float(r["r_up_mbit"]), float(r["speedup"]))
                for r in rows
                if (r["mode"], r["convention"], r["fraction"]) == (mode, conv, frac)
            ]
            series.sort()
            name = f"speedup_{mode}_{conv}_frac{frac}.dat"
            written.append(_write_series(out_dir / name, series))
            svg_series[f"{mode}/{conv}/{frac}"] = series
        if svg and rows:
            written.append(
                _write_svg(
                    out_dir / "speedup.svg", "uplink rate (Mbit/s)", "speedup",
                    svg_series,
                )
            )
    return written


def _read_csv(path: Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _write_series(path: Path, series) -> Path:
    buf = [f"{x!r} {y!r}" for x, y in series]
    path.write_text("\n".join(buf) + ("\n" if buf else ""), encoding="utf-8")
    return path


def _write_svg(path: Path, xlabel: str, ylabel: str, series: dict) -> Path:
    """Minimal deterministic line chart (no plotting dependency)."""
    width, height, pad = 640, 420, 50
    palette = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
               "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")
    pts = [p for s in series.values() for p in s]
    if not pts:
        path.write_text(
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}"/>\n',
            encoding="utf-8",
        )
        return path
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    x_span = (x_hi - x_lo) or 1.0
    y_span = (y_hi - y_lo) or 1.0

    def sx(x: float) -> float:
        return pad + (x - x_lo) / x_span * (width - 2 * pad)

    def sy(y: float) -> float:
        return height - pad - (y - y_lo) / y_span * (height - 2 * pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="monospace" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width // 2}" y="{height - 12}" text-anchor="middle">{xlabel}</text>',
        f'<text x="14" y="{height // 2}" transform="rotate(-90 14 {height // 2})" '
        f'text-anchor="middle">{ylabel}</text>',
        f'<text x="{pad}" y="{height - pad + 16}">{x_lo:.6g}</text>',
        f'<text x="{width - pad}" y="{height - pad + 16}" text-anchor="end">{x_hi:.6g}</text>',
        f'<text x="{pad - 4}" y="{height - pad}" text-anchor="end">{y_lo:.6g}</text>',
        f'<text x="{pad - 4}" y="{pad + 4}" text-anchor="end">{y_hi:.6g}</text>',
    ]
    for i, (label, s) in enumerate(series.items()):
        if not s:
            continue
        color = palette[i % len(palette)]
        points = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in s)
        parts.append(f'<polyline fill="none" stroke="{color}" points="{points}"/>')
        parts.append(
            f'<text x="{width - pad + 4}" y="{pad + 14 * i}" fill="{color}" '
            f'font-size="10">{label}</text>'
        )
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n", encoding="utf-8")
    return path


__all__ = [
    "CampaignResult",
    "ConfigError",
    "ExperimentConfig",
    "config_from_mapping",
    "emit_plot_data",
    "load_config",
    "resolve_model",
    "run_campaign",
]
