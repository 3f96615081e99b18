"""Executable verifiers for the protocol's distributional guarantees.

Each verifier evaluates one inequality (or identity) on a concrete instance
and returns a :class:`BoundReport`; suites sweep seeded fuzz instances and
are reproducible from (seed, index) alone.  The guarantees checked:

* truncation mass identity: tv(q_hat, q) equals the discarded mass sigma;
* acceptance drift: |beta_hat - beta| <= sigma for any target law;
* TV triangle bounds: |tv(q_hat,p) - tv(q,p)| <= tv(q_hat,q), and the
  four-distribution version with p perturbed too;
* residual chains: tv(p_i, p_hat_i) obeys the recursive bound
  (2/Z_i) * [tv(p_{i-1}, p_hat_{i-1}) + tv(q, q_hat)], and the per-candidate
  acceptance drift obeys its telescoped form.  Z_i is the residual
  normalizer sum max(0, p_{i-1} - q) of the untruncated chain.  The bounds
  blow up as Z_i -> 0, so instances below a Z floor are reported but not
  asserted, and bound values above 1 are flagged vacuous.

The suites also back the measurement campaigns: head-mass curves and
acceptance-rate sweeps across truncation widths for both decoding modes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .models import ModelPair, sample_contexts
from .multi import run_tree_session
from .prob import Categorical, TopK, TopRho, TruncationMode, truncate
from .rng import Stream, derive
from .single import run_session
from .tree import ExpansionConfig

BOUND_TOL = 1e-9


@dataclass(frozen=True)
class BoundReport:
    """One evaluated inequality: satisfied iff lhs <= rhs + 1e-9."""

    family: str
    seed: int
    vocab: int
    trunc: str
    level: int
    lhs: float
    rhs: float
    asserted: bool
    note: str = ""

    @property
    def satisfied(self) -> bool:
        return self.lhs <= self.rhs + BOUND_TOL

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs


def fuzz_categorical(stream: Stream, vocab: int) -> Categorical:
    """Random distribution with occasional sparsification so that zero
    entries (the boundary cases of every bound) are exercised."""
    w = [stream.uniform() for _ in range(vocab)]
    if stream.uniform() < 0.5:
        for i in range(vocab):
            if stream.uniform() < 0.3:
                w[i] = 0.0
        if not any(v > 0.0 for v in w):
            w[stream.randint(vocab)] = 1.0
    arr = np.array(w)
    return Categorical._wrap(arr / kernels.seq_sum(arr))


def fuzz_truncation(stream: Stream, vocab: int) -> TruncationMode:
    """Random truncation request: TopK over the full width range or a
    nucleus mass in [0.1, 1.0]."""
    if stream.uniform() < 0.5:
        return TopK(1 + stream.randint(vocab))
    return TopRho(0.1 + 0.9 * stream.uniform())


def _trunc_label(mode: TruncationMode) -> str:
    if isinstance(mode, TopK):
        return f"topk:{mode.k}"
    return f"toprho:{mode.rho:.6f}"


def check_mass_identity(q: Categorical, mode: TruncationMode, seed: int = 0) -> BoundReport:
    """tv(q_hat, q) == discarded mass, asserted as |difference| <= 1e-9."""
    q_hat, spec = truncate(q, mode)
    tv = kernels.tv_distance(q_hat.probs, q.probs)
    return BoundReport(
        "mass-identity", seed, q.size, _trunc_label(mode), 0,
        abs(tv - spec.discarded_mass), 0.0, True,
    )


def check_acceptance_drift(
    p: Categorical, q: Categorical, mode: TruncationMode, seed: int = 0
) -> BoundReport:
    """|beta_hat - beta| <= sigma with beta = 1 - tv(q, p)."""
    q_hat, spec = truncate(q, mode)
    beta = 1.0 - kernels.tv_distance(q.probs, p.probs)
    beta_hat = 1.0 - kernels.tv_distance(q_hat.probs, p.probs)
    return BoundReport(
        "acceptance-drift", seed, q.size, _trunc_label(mode), 0,
        abs(beta_hat - beta), spec.discarded_mass, True,
    )


def check_tv_triangle(
    p: Categorical, q: Categorical, q_alt: Categorical, seed: int = 0
) -> BoundReport:
    """|tv(q_alt, p) - tv(q, p)| <= tv(q_alt, q) for any three laws."""
    lhs = abs(
        kernels.tv_distance(q_alt.probs, p.probs) - kernels.tv_distance(q.probs, p.probs)
    )
    return BoundReport(
        "tv-triangle", seed, q.size, "-", 0,
        lhs, kernels.tv_distance(q_alt.probs, q.probs), True,
    )


def check_tv_triangle_pairs(
    p: Categorical,
    q: Categorical,
    p_alt: Categorical,
    q_alt: Categorical,
    seed: int = 0,
) -> BoundReport:
    """|tv(q_alt, p_alt) - tv(q, p)| <= tv(q_alt, q) + tv(p_alt, p)."""
    lhs = abs(
        kernels.tv_distance(q_alt.probs, p_alt.probs)
        - kernels.tv_distance(q.probs, p.probs)
    )
    rhs = kernels.tv_distance(q_alt.probs, q.probs) + kernels.tv_distance(
        p_alt.probs, p.probs
    )
    return BoundReport("tv-triangle-pairs", seed, q.size, "-", 0, lhs, rhs, True)


def _residual_step(cur: np.ndarray, q: np.ndarray) -> tuple[np.ndarray | None, float]:
    out = np.empty(cur.shape[0])
    z = kernels.residual_into(cur, q, out)
    if z < 1e-9:
        return None, z
    return out / z, z


def check_residual_chain(
    p: Categorical,
    q: Categorical,
    mode: TruncationMode,
    depth: int,
    *,
    z_floor: float = 0.05,
    seed: int = 0,
) -> list[BoundReport]:
    """Per-level reports for a residual chain of the given depth.

    Level i >= 2 produces two reports: the recursive bound on
    tv(p_i, p_hat_i) and the telescoped acceptance-drift bound on
    |beta_hat_i - beta_i|.  Levels are asserted only while every residual
    normalizer seen so far stays at or above ``z_floor``; a chain whose
    residual degenerates is reported truncated at that level.
    """
    q_hat, spec = truncate(q, mode)
    sigma = spec.discarded_mass
    label = _trunc_label(mode)
    reports: list[BoundReport] = []

    cur = p.probs  # untruncated chain p_i
    cur_hat = p.probs  # truncated chain p_hat_i (same start: p_1)
    prev_tv = 0.0  # tv(p_{i-1}, p_hat_{i-1})
    telescoped = 0.0  # running bound on tv(p_i, p_hat_i)
    min_z = float("inf")
    for level in range(2, depth + 1):
        nxt, z = _residual_step(cur, q.probs)
        nxt_hat, z_hat = _residual_step(cur_hat, q_hat.probs)
        if nxt is None or nxt_hat is None:
            reports.append(
                BoundReport(
                    "residual-chain", seed, p.size, label, level,
                    0.0, 0.0, False,
                    note=f"degenerate at level {level} (z={z:.3e}, z_hat={z_hat:.3e})",
                )
            )
            break
        min_z = min(min_z, z)
        asserted = min_z >= z_floor
        lhs = kernels.tv_distance(nxt, nxt_hat)
        rhs = (2.0 / z) * (prev_tv + sigma)
        note = "corollary-base" if level == 2 else ""
        if rhs > 1.0:
            note = (note + ";vacuous").lstrip(";")
        reports.append(
            BoundReport("residual-chain", seed, p.size, label, level, lhs, rhs, asserted, note)
        )

        telescoped = (2.0 / z) * (telescoped + sigma)
        beta = kernels.overlap_mass(q.probs, nxt)
        beta_hat = kernels.overlap_mass(q_hat.probs, nxt_hat)
        drift_rhs = telescoped + sigma
        dnote = "vacuous" if drift_rhs > 1.0 else ""
        reports.append(
            BoundReport(
                "cascade-drift", seed, p.size, label, level,
                abs(beta_hat - beta), drift_rhs, asserted, dnote,
            )
        )
        cur, cur_hat, prev_tv = nxt, nxt_hat, lhs
    return reports


@dataclass
class SuiteResult:
    """Outcome of a fuzz suite: all reports plus the asserted failures."""

    reports: list[BoundReport] = field(default_factory=list)

    @property
    def violations(self) -> list[BoundReport]:
        return [r for r in self.reports if r.asserted and not r.satisfied]

    @property
    def n_asserted(self) -> int:
        return sum(1 for r in self.reports if r.asserted)

    def extend(self, reports) -> None:
        self.reports.extend(reports)


def run_drift_suite(
    seed: int, instances: int, *, start: int = 0, v_lo: int = 2, v_hi: int = 64
) -> SuiteResult:
    """Mass identity + acceptance drift over fuzzed (p, q, truncation).

    Instance i derives its seed from (seed, i), so a suite may be split into
    ranges and merged back without changing a single report.
    """
    result = SuiteResult()
    for idx in range(start, start + instances):
        iseed = derive(seed, "drift-suite", idx)
        stream = Stream(iseed)
        vocab = v_lo + stream.randint(v_hi - v_lo + 1)
        p = fuzz_categorical(stream, vocab)
        q = fuzz_categorical(stream, vocab)
        mode = fuzz_truncation(stream, vocab)
        result.reports.append(check_mass_identity(q, mode, iseed))
        result.reports.append(check_acceptance_drift(p, q, mode, iseed))
    return result


def run_triangle_suite(
    seed: int, instances: int, *, start: int = 0, v_lo: int = 2, v_hi: int = 64
) -> SuiteResult:
    """Three- and four-distribution TV triangle bounds over fuzzed tuples."""
    result = SuiteResult()
    for idx in range(start, start + instances):
        iseed = derive(seed, "triangle-suite", idx)
        stream = Stream(iseed)
        vocab = v_lo + stream.randint(v_hi - v_lo + 1)
        p = fuzz_categorical(stream, vocab)
        q = fuzz_categorical(stream, vocab)
        q_alt = fuzz_categorical(stream, vocab)
        p_alt = fuzz_categorical(stream, vocab)
        result.reports.append(check_tv_triangle(p, q, q_alt, iseed))
        result.reports.append(check_tv_triangle_pairs(p, q, p_alt, q_alt, iseed))
    return result


def run_chain_suite(
    seed: int,
    instances: int,
    *,
    start: int = 0,
    vocab: int = 8,
    keep: int = 4,
    max_depth: int = 4,
    z_floor: float = 0.05,
) -> SuiteResult:
    """Residual-chain bounds over fuzzed chains of depth 2..max_depth.

    A slice of instances uses draft laws equal or near-equal to the target
    so that degenerate chains and chains under the Z floor appear in every
    campaign (those are reported, never asserted).
    """
    result = SuiteResult()
    for idx in range(start, start + instances):
        iseed = derive(seed, "chain-suite", idx)
        stream = Stream(iseed)
        p = fuzz_categorical(stream, vocab)
        roll = stream.uniform()
        if roll < 0.1:
            q = p  # residual degenerates immediately
        elif roll < 0.25:
            # tiny divergence keeps the residual mass below any useful floor
            eps = 0.01 + 0.04 * stream.uniform()
            noise = fuzz_categorical(stream, vocab)
            q = Categorical._wrap((1.0 - eps) * p.probs + eps * noise.probs)
        else:
            q = fuzz_categorical(stream, vocab)
        depth = 2 + stream.randint(max_depth - 1)
        result.extend(
            check_residual_chain(p, q, TopK(keep), depth, z_floor=z_floor, seed=iseed)
        )
    return result


def head_mass_curve(
    pair: ModelPair, widths, *, n_contexts: int = 64, seed: int = 0
) -> list[tuple[int, float]]:
    """Mean retained target-law mass of the top-``width`` tokens, per width."""
    contexts = sample_contexts(pair.vocab_size, pair.context_order, n_contexts, seed)
    dists = [pair.target_dist(c) for c in contexts]
    rows: list[tuple[int, float]] = []
    for width in widths:
        total = 0.0
        for d in dists:
            order = np.argsort(-d.probs, kind="stable")
            total += kernels.seq_sum(d.probs[order[:width]])
        rows.append((int(width), total / len(dists)))
    return rows


@dataclass(frozen=True)
class AcceptanceRow:
    """One acceptance-campaign point: a decoding mode at one kept width."""

    mode: str  # "single" | "multi"
    keep: int  # kept-set width (vocab_size for dense)
    fraction: float
    tested: int
    accepted: int
    measured_alpha: float
    analytic_alpha: float
    mean_sigma: float
    stderr: float


def _binomial_stderr(p_hat: float, n: int) -> float:
    return (max(p_hat * (1.0 - p_hat), 1e-12) / n) ** 0.5


def measure_single_acceptance(
    pair: ModelPair,
    truncation: TruncationMode | None,
    *,
    draft_len: int,
    stop_len: int,
    min_steps: int,
    seed: int,
) -> tuple[int, int, float, float]:
    """Run sessions until ``min_steps`` positions were tested; returns
    (tested, accepted, mean analytic beta, mean sigma)."""
    tested = accepted = 0
    beta_sum = sigma_sum = 0.0
    trial = 0
    while tested < min_steps:
        session_seed = derive(seed, "trial", trial)
        prefix = _session_prefix(pair, session_seed)
        res = run_session(pair, prefix, draft_len, truncation, stop_len, session_seed)
        for r in res.rounds:
            tested += len(r.accept_flags)
            accepted += len(r.accepted)
            beta_sum += sum(r.betas)
            sigma_sum += sum(r.sigmas[: len(r.accept_flags)])
        trial += 1
    return tested, accepted, beta_sum / tested, sigma_sum / tested


def measure_multi_acceptance(
    pair: ModelPair,
    truncation: TruncationMode | None,
    *,
    expansion: ExpansionConfig,
    stop_len: int,
    min_nodes: int,
    seed: int,
) -> tuple[int, int, float, float]:
    """Tree-mode counterpart: counts visited nodes and accepted nodes."""
    visited = accepted = 0
    theta_sum = sigma_sum = 0.0
    trial = 0
    while visited < min_nodes:
        session_seed = derive(seed, "trial", trial)
        prefix = _session_prefix(pair, session_seed)
        res = run_tree_session(pair, prefix, expansion, truncation, stop_len, session_seed)
        for r in res.rounds:
            visited += r.visited_nodes
            accepted += r.accepted_nodes
            theta_sum += sum(r.node_thetas)
            sigma_sum += sum(r.node_sigmas)
        trial += 1
    return visited, accepted, theta_sum / visited, sigma_sum / visited


def _session_prefix(pair: ModelPair, session_seed: int) -> tuple[int, ...]:
    stream = Stream(derive(session_seed, "prefix"))
    length = max(pair.context_order, 1)
    return tuple(stream.randint(pair.vocab_size) for _ in range(length))


def acceptance_campaign(
    pair: ModelPair,
    keeps,
    *,
    modes=("single", "multi"),
    draft_len: int = 4,
    expansion: ExpansionConfig | None = None,
    stop_len: int = 64,
    single_steps: int = 20000,
    multi_nodes: int = 20000,
    seed: int = 0,
) -> list[AcceptanceRow]:
    """Measure acceptance rates for each mode across kept widths.

    ``keeps`` are TopK widths; a width equal to the vocabulary is the dense
    reference point.  Rows come back sorted by (mode, descending width).
    """
    if "multi" in modes and expansion is None:
        raise ValueError("multi mode requires an expansion configuration")
    rows: list[AcceptanceRow] = []
    for mode in modes:
        for keep in keeps:
            keep = int(keep)
            trunc = TopK(keep)
            pseed = derive(seed, "acceptance", mode, keep)
            if mode == "single":
                tested, accepted, analytic, mean_sigma = measure_single_acceptance(
                    pair, trunc, draft_len=draft_len, stop_len=stop_len,
                    min_steps=single_steps, seed=pseed,
                )
            elif mode == "multi":
                tested, accepted, analytic, mean_sigma = measure_multi_acceptance(
                    pair, trunc, expansion=expansion, stop_len=stop_len,
                    min_nodes=multi_nodes, seed=pseed,
                )
            else:
                raise ValueError(f"unknown mode {mode!r}")
            measured = accepted / tested
            rows.append(
                AcceptanceRow(
                    mode, keep, keep / pair.vocab_size, tested, accepted,
                    measured, analytic, mean_sigma, _binomial_stderr(measured, tested),
                )
            )
    rows.sort(key=lambda r: (r.mode, -r.keep))
    return rows
