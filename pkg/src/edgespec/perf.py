"""Analytic uplink/latency/throughput model for device-edge decoding.

The device drafts tokens and ships one probability vector per drafted
position (single-candidate) or per internal tree node (multi-candidate).
Payload per vector is ``width * bits_per_entry`` where width is the full
vocabulary for dense transmission or the kept-set size under truncation.

Two payload accounting conventions are supported, because hardware reports
commonly quote only the value bits while a self-describing sparse format
also ships an index per entry:

* ``VALUE_AND_INDEX`` -- each entry costs b_prob + b_idx bits.
* ``VALUE_ONLY``      -- each entry costs b_prob bits.

Downlink time and the few bits of drafted-token ids are excluded: both are
negligible next to the distribution payload (the harness can add the id
bits back for sensitivity runs via ``token_id_bits``).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .tree import ExpansionConfig


class PayloadConvention(enum.Enum):
    VALUE_AND_INDEX = "value_and_index"
    VALUE_ONLY = "value_only"


@dataclass(frozen=True)
class LinkModel:
    """Uplink abstraction: an effective post-retransmission data rate plus
    the bit widths of one (value, index) payload entry."""

    uplink_bps: float
    vocab_size: int
    b_prob: int = 16
    b_idx: int | None = None

    def __post_init__(self):
        if not self.uplink_bps > 0:
            raise ValueError("uplink_bps must be > 0")
        if self.vocab_size < 1:
            raise ValueError("vocab_size must be >= 1")
        if self.b_prob not in (16, 32):
            raise ValueError("b_prob must be 16 or 32")
        if self.b_idx is not None and self.b_idx < 1:
            raise ValueError("b_idx must be >= 1 when overridden")

    @property
    def bits_per_index(self) -> int:
        """ceil(log2 V) unless overridden."""
        if self.b_idx is not None:
            return self.b_idx
        return max(1, math.ceil(math.log2(self.vocab_size)))

    def bits_per_entry(self, convention: PayloadConvention) -> int:
        if convention is PayloadConvention.VALUE_AND_INDEX:
            return self.b_prob + self.bits_per_index
        return self.b_prob


@dataclass(frozen=True)
class TimingModel:
    """Seconds per forward pass of the draft and target models."""

    draft_s: float
    target_s: float

    def __post_init__(self):
        if not (self.draft_s > 0 and self.target_s > 0):
            raise ValueError("model timings must be > 0")


def payload_bits(
    link: LinkModel,
    n_dists: int,
    effective_vocab: int,
    convention: PayloadConvention = PayloadConvention.VALUE_AND_INDEX,
) -> int:
    """Uplink bits for one round shipping ``n_dists`` vectors of
    ``effective_vocab`` entries each (V dense, kept-set width truncated)."""
    if n_dists < 0 or effective_vocab < 0:
        raise ValueError("payload factors must be non-negative")
    return n_dists * effective_vocab * link.bits_per_entry(convention)


def comm_time(link: LinkModel, bits: float) -> float:
    """Seconds to ship ``bits`` over the effective uplink rate."""
    if bits < 0:
        raise ValueError("payload bits must be >= 0")
    return bits / link.uplink_bps


def expected_tokens_per_round(alpha: float, draft_len: int) -> float:
    """(1 - alpha**(L+1)) / (1 - alpha) for i.i.d. per-position acceptance;
    continuous at alpha -> 1 where the value is L + 1."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must be in [0, 1]")
    if draft_len < 1:
        raise ValueError("draft_len must be >= 1")
    if alpha >= 1.0 - 1e-12:
        return float(draft_len + 1)
    return (1.0 - alpha ** (draft_len + 1)) / (1.0 - alpha)


def single_round_time(
    link: LinkModel,
    timing: TimingModel,
    draft_len: int,
    effective_vocab: int,
    convention: PayloadConvention = PayloadConvention.VALUE_AND_INDEX,
    *,
    token_id_bits: bool = False,
) -> float:
    """Wall time of one draft->upload->verify round, single candidate."""
    bits = payload_bits(link, draft_len, effective_vocab, convention)
    if token_id_bits:
        bits += draft_len * link.bits_per_index
    return draft_len * timing.draft_s + comm_time(link, bits) + timing.target_s


def single_throughput_speedup(
    link: LinkModel,
    timing: TimingModel,
    alpha: float,
    draft_len: int,
    effective_vocab: int,
    convention: PayloadConvention = PayloadConvention.VALUE_AND_INDEX,
    *,
    token_id_bits: bool = False,
) -> tuple[float, float]:
    """Tokens/second and speedup over the standalone target model.

    Throughput is expected tokens per round divided by round time; speedup
    divides by the standalone rate 1 / target_s.
    """
    n = expected_tokens_per_round(alpha, draft_len)
    t = single_round_time(
        link, timing, draft_len, effective_vocab, convention, token_id_bits=token_id_bits
    )
    throughput = n / t
    return throughput, throughput * timing.target_s


def multi_round_time(
    link: LinkModel,
    timing: TimingModel,
    expansion: ExpansionConfig,
    effective_vocab: int,
    convention: PayloadConvention = PayloadConvention.VALUE_AND_INDEX,
    *,
    token_id_bits: bool = False,
) -> float:
    """Wall time of one tree round: depth drafting passes, one vector per
    internal node on the uplink, one verification pass."""
    bits = payload_bits(link, expansion.dist_count, effective_vocab, convention)
    if token_id_bits:
        bits += expansion.token_count * link.bits_per_index
    return expansion.depth * timing.draft_s + comm_time(link, bits) + timing.target_s


def multi_throughput_speedup(
    link: LinkModel,
    timing: TimingModel,
    alpha: float,
    expansion: ExpansionConfig,
    effective_vocab: int,
    convention: PayloadConvention = PayloadConvention.VALUE_AND_INDEX,
    *,
    token_id_bits: bool = False,
) -> tuple[float, float]:
    """Tokens/second and speedup for tree decoding.

    Expected tokens per round use the linear surrogate L * alpha + 1, with
    ``alpha`` the per-node total acceptance rate, so

        throughput = (L*alpha + 1) / t_round
        speedup    = throughput * t_target
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must be in [0, 1]")
    n = expansion.depth * alpha + 1.0
    t = multi_round_time(
        link, timing, expansion, effective_vocab, convention, token_id_bits=token_id_bits
    )
    throughput = n / t
    return throughput, throughput * timing.target_s


def total_inference_time(t_comp: float, n_rounds: float, t_comm_per_round: float) -> float:
    """Hybrid accounting: measured compute plus modeled per-round uplink."""
    if t_comp < 0 or n_rounds < 0 or t_comm_per_round < 0:
        raise ValueError("inputs must be >= 0")
    return t_comp + n_rounds * t_comm_per_round
