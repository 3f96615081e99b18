"""Multi-candidate device-edge decoding over draft trees.

Per tree node the device samples k candidate tokens i.i.d. (with
replacement) from its (possibly truncated) draft law.  The edge verifies the
candidates sequentially: candidate i is accepted with probability
min(1, p_i(x)/q(x)) against the current residual law p_i, which after each
rejection is updated to norm(max(0, p_i - q)).  If every candidate is
rejected the node emits a draw from the final residual law.  The emitted
token therefore follows the target law exactly regardless of q, same as the
single-candidate case; duplicated candidates self-reject because the
residual of a rejected token is zero.

Verification of distinct nodes is independent, so phase 1 runs every node
(parallelizable, keyed substreams), and phase 2 just walks the results from
the root, descending into the accepted child and stopping at the first node
whose candidates were all rejected.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .models import ModelPair
from .prob import (
    Categorical,
    SparseLogits,
    TruncationMode,
    residual,
    sample_index,
    sparse_payload,
    truncate,
)
from .rng import Stream, derive
from .single import DRAFT_NODE, ROUND, VERIFY_NODE
from .tree import ExpansionConfig, TokenTree


@dataclass(frozen=True)
class CandidateVerdict:
    """Result of verifying one node's candidate list."""

    emitted: int
    accepted: bool
    accept_index: int | None  # 1-based candidate position, None if rejected
    residual_steps: int


def sample_candidates(dist: Categorical, k: int, stream: Stream) -> tuple[int, ...]:
    """k i.i.d. draws with replacement, order preserved."""
    if k < 1:
        raise ValueError("candidate count must be >= 1")
    return tuple(sample_index(dist, stream) for _ in range(k))


def verify_candidates(
    candidates,
    p: Categorical,
    q: Categorical,
    stream: Stream,
) -> CandidateVerdict:
    """Sequential accept-or-update pass over one node's candidates."""
    current = p
    steps = 0
    for i, tok in enumerate(candidates, start=1):
        qv = q.prob(tok)
        if qv <= 0.0:
            raise ValueError("candidate outside the support of its draft law")
        r = stream.uniform()
        if r < min(1.0, current.prob(tok) / qv):
            return CandidateVerdict(tok, True, i, steps)
        split = residual(current, q)
        if split.degenerate:
            # current <= q pointwise; the pending resample law is current itself.
            return CandidateVerdict(sample_index(current, stream), False, None, steps)
        current = split.dist
        steps += 1
    return CandidateVerdict(sample_index(current, stream), False, None, steps)


def exact_cascade_law(p: Categorical, q: Categorical, k: int) -> Categorical:
    """Closed-form law of the token emitted by a k-candidate cascade.

    sum_j [prod_{s<j} (1-beta_s)] * beta_j * A_j + [prod_s (1-beta_s)] * p_residual
    with beta_j = sum min(q, p_j) and A_j = min(q, p_j)/beta_j.  Telescopes
    to ``p`` exactly; serves as the multi-candidate exactness oracle.
    """
    if p.size != q.size:
        raise ValueError(f"vocabulary mismatch: {p.size} vs {q.size}")
    if k < 1:
        raise ValueError("candidate count must be >= 1")
    total = np.zeros(p.size)
    survive = 1.0
    current = p.probs
    for _ in range(k):
        m = np.minimum(current, q.probs)
        beta = kernels.seq_sum(m)
        if beta > 0.0:
            total += (survive * beta) * (m / beta)
        out = np.empty(p.size)
        z = kernels.residual_into(current, q.probs, out)
        survive *= 1.0 - beta
        if z <= 0.0 or survive == 0.0:
            current = None
            break
        current = out / z
    if current is not None and survive > 0.0:
        total += survive * current
    return Categorical._wrap(total)


def cascade_acceptance(p: Categorical, q: Categorical, k: int) -> tuple[float, tuple[float, ...]]:
    """Total acceptance probability of a k-candidate cascade plus the
    per-candidate conditional rates beta_j = 1 - tv(q, p_j)."""
    if k < 1:
        raise ValueError("candidate count must be >= 1")
    betas: list[float] = []
    theta = 0.0
    survive = 1.0
    current = p.probs
    for _ in range(k):
        beta = kernels.overlap_mass(q.probs, current)
        betas.append(beta)
        theta += survive * beta
        out = np.empty(p.size)
        z = kernels.residual_into(current, q.probs, out)
        survive *= 1.0 - beta
        if z <= 0.0 or survive == 0.0:
            betas.extend([1.0] * (k - len(betas)))  # residual is exhausted
            break
        current = out / z
    return theta, tuple(betas)


@dataclass(frozen=True)
class DraftedTree:
    """A token tree plus the uplink bookkeeping produced while drafting."""

    tree: TokenTree
    sparse: tuple[tuple[SparseLogits, ...], ...] | None
    payload_entries: int
    node_sigmas: tuple[tuple[float, ...], ...]


def draft_tree(
    pair: ModelPair,
    prefix,
    expansion: ExpansionConfig,
    truncation: TruncationMode | None = None,
    *,
    round_seed: int,
) -> DraftedTree:
    """Draft a full tree, layer by layer.

    Nodes within a layer are independent given the previous layer; each node
    (l, i) consumes its own stream keyed by (round seed, role, l, i), so any
    parallel expansion order yields the same tree.
    """
    prefix = tuple(prefix)
    paths: list[tuple[int, ...]] = [prefix]  # paths of the current layer's nodes
    token_layers: list[tuple[int, ...]] = []
    dist_layers: list[tuple[Categorical, ...]] = []
    sparse_layers: list[tuple[SparseLogits, ...]] = []
    sigma_layers: list[tuple[float, ...]] = []
    entries = 0
    for layer in range(expansion.depth):
        k = expansion.ks[layer]
        tokens: list[int] = []
        dists: list[Categorical] = []
        sparse: list[SparseLogits] = []
        sigmas: list[float] = []
        next_paths: list[tuple[int, ...]] = []
        for i, path in enumerate(paths, start=1):
            q = pair.draft_dist(path)
            if truncation is not None:
                q_hat, spec = truncate(q, truncation)
                sparse.append(sparse_payload(q, spec))
                entries += spec.width
                sigmas.append(spec.discarded_mass)
            else:
                q_hat = q
                entries += q.size
                sigmas.append(0.0)
            stream = Stream(derive(round_seed, DRAFT_NODE, layer, i))
            kids = sample_candidates(q_hat, k, stream)
            tokens.extend(kids)
            dists.append(q_hat)
            next_paths.extend(path + (t,) for t in kids)
        token_layers.append(tuple(tokens))
        dist_layers.append(tuple(dists))
        sparse_layers.append(tuple(sparse))
        sigma_layers.append(tuple(sigmas))
        paths = next_paths
    tree = TokenTree(expansion, prefix, tuple(token_layers), tuple(dist_layers))
    return DraftedTree(
        tree,
        tuple(sparse_layers) if truncation is not None else None,
        entries,
        tuple(sigma_layers),
    )


@dataclass(frozen=True)
class VerifiedSequence:
    """Phase-2 walk result: the new tokens and the child positions taken."""

    tokens: tuple[int, ...]
    trace: tuple[tuple[int, int], ...]  # (layer, absolute 1-based index)

    @property
    def length(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class TreeRoundOutcome:
    """One tree round: the verified sequence plus per-node statistics for
    the nodes the walk actually consumed."""

    sequence: VerifiedSequence
    visited_nodes: int
    accepted_nodes: int
    node_thetas: tuple[float, ...]
    node_betas: tuple[float, ...]  # first-candidate rate at each visited node
    node_sigmas: tuple[float, ...]
    payload_entries: int

    @property
    def n_generated(self) -> int:
        return self.sequence.length

    @property
    def emitted(self) -> tuple[int, ...]:
        return self.sequence.tokens


def verify_tree(
    pair: ModelPair,
    prefix,
    drafted: DraftedTree,
    *,
    round_seed: int,
    collect_stats: bool = True,
) -> TreeRoundOutcome:
    """Verify a drafted tree and extract the accepted sequence.

    ``collect_stats=False`` skips the per-node analytic acceptance numbers
    (they are only needed by measurement campaigns) and zeroes those fields.

    Phase 1 verifies every internal node independently (keyed substreams)
    and samples a continuation token at every leaf from the target law at
    that leaf's path.  Phase 2 walks from the root: append the node's
    emitted token, descend into the matching child while candidates keep
    being accepted -- choosing the smallest matching child position when
    duplicates tie -- and stop at the first rejection; a walk that survives
    to a leaf appends that leaf's continuation token.
    """
    tree = drafted.tree
    cfg = tree.config
    verdicts: list[list[CandidateVerdict]] = []
    thetas: list[list[float]] = []
    betas: list[list[float]] = []
    for layer in range(cfg.depth):
        row: list[CandidateVerdict] = []
        trow: list[float] = []
        brow: list[float] = []
        k = cfg.ks[layer]
        for i in range(1, cfg.layer_width(layer) + 1):
            p = pair.target_dist(tree.path_of(layer, i))
            q_hat = tree.dist(layer, i)
            stream = Stream(derive(round_seed, VERIFY_NODE, layer, i))
            row.append(verify_candidates(tree.children_tokens(layer, i), p, q_hat, stream))
            if collect_stats:
                theta, bchain = cascade_acceptance(p, q_hat, k)
                trow.append(theta)
                brow.append(bchain[0])
            else:
                trow.append(0.0)
                brow.append(0.0)
        verdicts.append(row)
        thetas.append(trow)
        betas.append(brow)
    bonus: list[int] = []
    for i in range(1, cfg.layer_width(cfg.depth) + 1):
        p_leaf = pair.target_dist(tree.path_of(cfg.depth, i))
        stream = Stream(derive(round_seed, VERIFY_NODE, cfg.depth, i))
        bonus.append(sample_index(p_leaf, stream))

    tokens: list[int] = []
    trace: list[tuple[int, int]] = []
    visited_thetas: list[float] = []
    visited_betas: list[float] = []
    visited_sigmas: list[float] = []
    accepted_nodes = 0
    layer, index = 0, 1
    while layer < cfg.depth:
        verdict = verdicts[layer][index - 1]
        visited_thetas.append(thetas[layer][index - 1])
        visited_betas.append(betas[layer][index - 1])
        visited_sigmas.append(drafted.node_sigmas[layer][index - 1])
        tokens.append(verdict.emitted)
        if not verdict.accepted:
            return TreeRoundOutcome(
                VerifiedSequence(tuple(tokens), tuple(trace)),
                len(visited_thetas),
                accepted_nodes,
                tuple(visited_thetas),
                tuple(visited_betas),
                tuple(visited_sigmas),
                drafted.payload_entries,
            )
        accepted_nodes += 1
        kids = tree.children_tokens(layer, index)
        position = kids.index(verdict.emitted) + 1  # smallest matching child
        lo, _ = cfg.children_range(layer, index)
        index = lo + position - 1
        trace.append((layer + 1, index))
        layer += 1
    tokens.append(bonus[index - 1])
    return TreeRoundOutcome(
        VerifiedSequence(tuple(tokens), tuple(trace)),
        len(visited_thetas),
        accepted_nodes,
        tuple(visited_thetas),
        tuple(visited_betas),
        tuple(visited_sigmas),
        drafted.payload_entries,
    )


@dataclass(frozen=True)
class TreeSessionResult:
    """A full tree-decode session."""

    prefix: tuple[int, ...]
    sequence: tuple[int, ...]
    rounds: tuple[TreeRoundOutcome, ...]

    @property
    def n_rounds(self) -> int:
        return len(self.rounds)

    @property
    def generated(self) -> int:
        return len(self.sequence) - len(self.prefix)

    @property
    def visited_nodes(self) -> int:
        return sum(r.visited_nodes for r in self.rounds)

    @property
    def accepted_nodes(self) -> int:
        return sum(r.accepted_nodes for r in self.rounds)

    @property
    def mean_tokens_per_round(self) -> float:
        return self.generated / self.n_rounds

    def payload_bits(self, bits_per_entry: int) -> int:
        return sum(r.payload_entries for r in self.rounds) * bits_per_entry


def run_tree_session(
    pair: ModelPair,
    prefix,
    expansion: ExpansionConfig,
    truncation: TruncationMode | None,
    stop_len: int,
    session_seed: int,
    *,
    collect_stats: bool = True,
) -> TreeSessionResult:
    """Repeat draft-tree -> upload -> verify -> prefix update to stop_len."""
    prefix = tuple(prefix)
    if stop_len <= len(prefix):
        raise ValueError("stop_len must exceed the prefix length")
    seq = list(prefix)
    rounds: list[TreeRoundOutcome] = []
    idx = 0
    while len(seq) < stop_len:
        round_seed = derive(session_seed, ROUND, idx)
        drafted = draft_tree(pair, seq, expansion, truncation, round_seed=round_seed)
        outcome = verify_tree(
            pair, seq, drafted, round_seed=round_seed, collect_stats=collect_stats
        )
        seq.extend(outcome.emitted)
        rounds.append(outcome)
        idx += 1
    return TreeSessionResult(prefix, tuple(seq), tuple(rounds))
