"""Single-candidate device-edge decoding rounds.

One round: the device drafts L tokens autoregressively from its draft model
(optionally truncating each distribution and shipping only the kept
entries), the edge recomputes target distributions along the drafted path,
accepts each token x with probability min(1, p(x)/q(x)), resamples from the
residual law at the first rejection, and emits a bonus token from the next
target distribution when everything was accepted.  The emitted-token law
equals the target model's own law exactly, for any draft law -- truncated or
not -- which the test suite checks both analytically and by simulation.

Randomness discipline: position j consumes its own stream derived from
(round seed, role, layer j-1, index 1).  This matches the tree drafting
keying exactly, so a depth-L chain tree reproduces these rounds bit for bit,
and no result depends on evaluation order.
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
    overlap_mass,
    residual,
    sample_index,
    sparse_payload,
    truncate,
)
from .rng import Stream, derive, fnv1a64

DRAFT_NODE = fnv1a64("draft-node")
VERIFY_NODE = fnv1a64("verify-node")
ROUND = fnv1a64("round")


@dataclass(frozen=True)
class DraftBatch:
    """Device output for one round.

    ``dists`` are the laws the tokens were actually sampled from (the
    truncated-renormalized ones when truncation is active); ``sparse`` holds
    the corresponding uplink payloads, or ``None`` for dense transmission.
    ``payload_entries`` counts shipped (value, id) pairs per position.
    """

    tokens: tuple[int, ...]
    dists: tuple[Categorical, ...]
    sparse: tuple[SparseLogits, ...] | None
    payload_entries: tuple[int, ...]
    sigmas: tuple[float, ...]

    @property
    def draft_len(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class RoundOutcome:
    """Edge output for one round.

    ``accepted`` are the surviving draft tokens; ``final_token`` is the
    residual resample (after a rejection) or the bonus draw (full accept),
    so ``n_generated == len(accepted) + 1`` always.  ``accept_flags`` covers
    exactly the tested positions.  ``betas`` are the per-tested-position
    analytic acceptance probabilities sum min(q, p); ``sigmas`` the per
    drafted position discarded mass (0 for dense).
    """

    accepted: tuple[int, ...]
    final_token: int
    accept_flags: tuple[bool, ...]
    reject_position: int | None
    payload_entries: int
    betas: tuple[float, ...]
    sigmas: tuple[float, ...]

    @property
    def n_generated(self) -> int:
        return len(self.accepted) + 1

    @property
    def emitted(self) -> tuple[int, ...]:
        return self.accepted + (self.final_token,)


def draft_sequence(
    pair: ModelPair,
    prefix,
    draft_len: int,
    truncation: TruncationMode | None = None,
    *,
    round_seed: int,
) -> DraftBatch:
    """Draft ``draft_len`` tokens autoregressively from the draft model."""
    if draft_len < 1:
        raise ValueError("draft_len must be >= 1")
    context = list(prefix)
    tokens: list[int] = []
    dists: list[Categorical] = []
    sparse: list[SparseLogits] = []
    entries: list[int] = []
    sigmas: list[float] = []
    for pos in range(draft_len):
        q = pair.draft_dist(context)
        if truncation is not None:
            q_hat, spec = truncate(q, truncation)
            sparse.append(sparse_payload(q, spec))
            entries.append(spec.width)
            sigmas.append(spec.discarded_mass)
        else:
            q_hat = q
            entries.append(q.size)
            sigmas.append(0.0)
        stream = Stream(derive(round_seed, DRAFT_NODE, pos, 1))
        tok = sample_index(q_hat, stream)
        tokens.append(tok)
        dists.append(q_hat)
        context.append(tok)
    return DraftBatch(
        tuple(tokens),
        tuple(dists),
        tuple(sparse) if truncation is not None else None,
        tuple(entries),
        tuple(sigmas),
    )


def verify_sequence(
    pair: ModelPair,
    prefix,
    batch: DraftBatch,
    *,
    round_seed: int,
    invert_ratio: bool = False,
) -> RoundOutcome:
    """Verify a drafted batch against the target model.

    ``invert_ratio`` swaps the accept test to min(1, q(x)/p(x)); that
    variant is NOT lossless and exists only so tests can demonstrate the
    breakage.
    """
    context = list(prefix)
    # One conceptual parallel pass: targets along the drafted path plus one.
    targets: list[Categorical] = []
    for tok in batch.tokens:
        targets.append(pair.target_dist(context))
        context.append(tok)
    targets.append(pair.target_dist(context))

    accepted: list[int] = []
    flags: list[bool] = []
    betas: list[float] = []
    for pos, tok in enumerate(batch.tokens):
        q_hat = batch.dists[pos]
        p = targets[pos]
        betas.append(overlap_mass(q_hat, p))
        stream = Stream(derive(round_seed, VERIFY_NODE, pos, 1))
        r = stream.uniform()
        accept = r < _accept_prob(p.prob(tok), q_hat.prob(tok), invert_ratio)
        flags.append(accept)
        if not accept:
            split = residual(p, q_hat)
            source = p if split.degenerate else split.dist
            final = sample_index(source, stream)
            return RoundOutcome(
                tuple(accepted),
                final,
                tuple(flags),
                pos + 1,
                sum(batch.payload_entries),
                tuple(betas),
                batch.sigmas,
            )
        accepted.append(tok)
    bonus_stream = Stream(derive(round_seed, VERIFY_NODE, batch.draft_len, 1))
    final = sample_index(targets[-1], bonus_stream)
    return RoundOutcome(
        tuple(accepted),
        final,
        tuple(flags),
        None,
        sum(batch.payload_entries),
        tuple(betas),
        batch.sigmas,
    )


def _accept_prob(pv: float, qv: float, invert: bool) -> float:
    if invert:
        if pv <= 0.0:
            return 1.0
        return min(1.0, qv / pv)
    if qv <= 0.0:
        raise ValueError("drafted token outside the support of its draft law")
    return min(1.0, pv / qv)


@dataclass(frozen=True)
class SessionResult:
    """A full decode session: prefix extended round by round to a target
    length, with every per-round outcome retained."""

    prefix: tuple[int, ...]
    sequence: tuple[int, ...]
    rounds: tuple[RoundOutcome, ...]

    @property
    def n_rounds(self) -> int:
        return len(self.rounds)

    @property
    def generated(self) -> int:
        return len(self.sequence) - len(self.prefix)

    @property
    def tested_positions(self) -> int:
        return sum(len(r.accept_flags) for r in self.rounds)

    @property
    def accepted_positions(self) -> int:
        return sum(len(r.accepted) for r in self.rounds)

    @property
    def mean_tokens_per_round(self) -> float:
        return self.generated / self.n_rounds

    def payload_bits(self, bits_per_entry: int) -> int:
        return sum(r.payload_entries for r in self.rounds) * bits_per_entry


def run_session(
    pair: ModelPair,
    prefix,
    draft_len: int,
    truncation: TruncationMode | None,
    stop_len: int,
    session_seed: int,
    *,
    invert_ratio: bool = False,
) -> SessionResult:
    """Repeat draft -> (simulated upload) -> verify -> prefix update until
    the sequence reaches ``stop_len`` tokens."""
    prefix = tuple(prefix)
    if stop_len <= len(prefix):
        raise ValueError("stop_len must exceed the prefix length")
    seq = list(prefix)
    rounds: list[RoundOutcome] = []
    idx = 0
    while len(seq) < stop_len:
        round_seed = derive(session_seed, ROUND, idx)
        batch = draft_sequence(pair, seq, draft_len, truncation, round_seed=round_seed)
        outcome = verify_sequence(
            pair, seq, batch, round_seed=round_seed, invert_ratio=invert_ratio
        )
        seq.extend(outcome.emitted)
        rounds.append(outcome)
        idx += 1
    return SessionResult(prefix, tuple(seq), tuple(rounds))


def exact_output_law(p: Categorical, q: Categorical) -> Categorical:
    """Closed-form law of the token emitted by one accept-or-resample step.

    min(p, q) + (1 - beta) * residual(p, q) with beta = sum min(p, q); the
    algebraic identity min(p,q) + max(0, p-q) = p makes this equal ``p``
    for every draft law ``q``, which is the exactness oracle the simulation
    is checked against.
    """
    if p.size != q.size:
        raise ValueError(f"vocabulary mismatch: {p.size} vs {q.size}")
    m = np.minimum(p.probs, q.probs)
    beta = kernels.seq_sum(m)
    out = np.empty(p.size)
    z = kernels.residual_into(p.probs, q.probs, out)
    if z <= 0.0:
        return Categorical._wrap(m)
    return Categorical._wrap(m + (1.0 - beta) * (out / z))
