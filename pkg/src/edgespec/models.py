"""Seeded synthetic draft/target model pairs.

Real checkpoints are replaced by hash-keyed conditional distributions so that
acceptance rates and output laws can be checked exactly at any vocabulary
size without stored tables.  For a context c the target law is

    P(. | c) = normalize(u_i ** gamma),   u_i = keyed-counter uniform,

where ``gamma`` controls how peaked the distribution is (real LLM outputs
concentrate most mass on a tiny head; gamma reproduces that regime).  The
draft law mixes the target with an independent noise distribution,

    Q = (1 - lambda) * P + lambda * N,

so tv(Q, P) = lambda * tv(N, P) exactly and the expected acceptance rate is
a strictly decreasing function of ``lambda`` that calibration can bisect.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .prob import Categorical, descending_order
from .rng import Stream, derive, fnv1a64

_ROLE_TARGET = fnv1a64("model-target")
_ROLE_NOISE = fnv1a64("model-noise")
_CTX = fnv1a64("model-context")
_CAL_CONTEXTS = fnv1a64("calibration-contexts")


@dataclass(frozen=True)
class ModelPair:
    """Paired draft and target models over one shared vocabulary.

    ``context_order`` is how many trailing tokens condition each output
    (0 makes every distribution context-free); ``divergence`` is the mixing
    weight pushing the draft away from the target; ``concentration`` is the
    peaking exponent.  Outputs are pure functions of (seed, context).
    """

    vocab_size: int
    context_order: int
    divergence: float
    concentration: float
    seed: int

    def __post_init__(self):
        if self.vocab_size < 1:
            raise ValueError("vocab_size must be >= 1")
        if not 0 <= self.context_order <= 2:
            raise ValueError("context_order must be 0, 1 or 2")
        if not 0.0 <= self.divergence <= 1.0:
            raise ValueError("divergence must be in [0, 1]")
        if not self.concentration > 0.0:
            raise ValueError("concentration must be > 0")

    def _context_key(self, context) -> int:
        tail = tuple(context)[-self.context_order :] if self.context_order else ()
        return derive(self.seed, _CTX, len(tail), *tail)

    def _peaked(self, role: int, context) -> Categorical:
        key = derive(self._context_key(context), role)
        raw = np.empty(self.vocab_size)
        kernels.peaked_weights_into(key, self.concentration, raw)
        total = kernels.seq_sum(raw)
        if total <= 0.0:
            raise ValueError(
                "concentration too large: every weight underflowed to zero "
                f"(vocab_size={self.vocab_size}, concentration={self.concentration})"
            )
        return Categorical._wrap(raw / total)

    def target_dist(self, context) -> Categorical:
        """Verifier-side law P(. | context)."""
        return self._peaked(_ROLE_TARGET, context)

    def noise_dist(self, context) -> Categorical:
        """Independent per-context law the draft is mixed toward."""
        return self._peaked(_ROLE_NOISE, context)

    def draft_dist(self, context) -> Categorical:
        """Device-side law Q = (1 - divergence) * P + divergence * N."""
        p = self.target_dist(context)
        lam = self.divergence
        if lam == 0.0:
            return p
        n = self.noise_dist(context)
        return Categorical._wrap((1.0 - lam) * p.probs + lam * n.probs)


def sample_contexts(vocab_size: int, context_order: int, count: int, seed: int) -> list[tuple[int, ...]]:
    """Deterministic batch of random contexts for calibration/measurement."""
    stream = Stream(derive(seed, _CAL_CONTEXTS))
    length = max(context_order, 1)
    return [tuple(stream.randint(vocab_size) for _ in range(length)) for _ in range(count)]


def mean_alpha(pair: ModelPair, contexts) -> float:
    """Mean single-draw acceptance rate E[1 - tv(Q, P)] over contexts."""
    total = 0.0
    for ctx in contexts:
        total += 1.0 - kernels.tv_distance(pair.draft_dist(ctx).probs, pair.target_dist(ctx).probs)
    return total / len(contexts)


def calibrate_divergence(
    vocab_size: int,
    context_order: int,
    concentration: float,
    seed: int,
    target_alpha: float,
    *,
    n_contexts: int = 1000,
    tol: float = 2.5e-3,
    max_iter: int = 60,
) -> float:
    """Find the mixing weight whose mean acceptance rate hits ``target_alpha``.

    Bisects on the divergence knob; the measured acceptance over a fixed
    seeded context sample is strictly decreasing in it.  Raises if the target
    lies outside the achievable range, naming that range.
    """
    if not 0.0 < target_alpha <= 1.0:
        raise ValueError("target_alpha must be in (0, 1]")
    base = ModelPair(vocab_size, context_order, 1.0, concentration, seed)
    contexts = sample_contexts(vocab_size, context_order, n_contexts, seed)
    # Cache per-context target/noise vectors; alpha(lam) only re-mixes them.
    targets = [base.target_dist(c).probs for c in contexts]
    noises = [base.noise_dist(c).probs for c in contexts]

    def measure(lam: float) -> float:
        total = 0.0
        for p, n in zip(targets, noises):
            q = (1.0 - lam) * p + lam * n
            total += 1.0 - kernels.tv_distance(q, p)
        return total / len(contexts)

    if target_alpha == 1.0:
        return 0.0
    floor = measure(1.0)
    if target_alpha < floor - tol:
        raise ValueError(
            f"target alpha {target_alpha} unreachable; achievable range is "
            f"[{floor:.4f}, 1.0] for this model family"
        )
    lo, hi = 0.0, 1.0  # alpha(lo) = 1 >= target >= alpha(hi)
    lam = 0.5
    for _ in range(max_iter):
        lam = 0.5 * (lo + hi)
        got = measure(lam)
        if abs(got - target_alpha) <= tol:
            break
        if got > target_alpha:
            lo = lam
        else:
            hi = lam
    return lam


def head_mass(dist: Categorical, width: int) -> float:
    """Probability mass of the ``width`` highest-probability tokens."""
    order = descending_order(dist.probs)
    return kernels.seq_sum(dist.probs[order[:width]])


def calibrate_concentration(
    vocab_size: int,
    fraction: float,
    target_mass: float,
    seed: int,
    *,
    context_order: int = 2,
    n_contexts: int = 64,
    tol: float = 5e-3,
    bounds: tuple[float, float] = (1.0, 4000.0),
    max_iter: int = 60,
) -> float:
    """Find the peaking exponent whose mean head mass hits ``target_mass``.

    The head is the top ``fraction`` of the vocabulary (at least one token).
    Mean head mass is increasing in the exponent, so bisection applies.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must be in (0, 1]")
    if not 0.0 < target_mass < 1.0:
        raise ValueError("target_mass must be in (0, 1)")
    width = max(1, round(fraction * vocab_size))
    contexts = sample_contexts(vocab_size, context_order, n_contexts, seed)

    def measure(gamma: float) -> float:
        pair = ModelPair(vocab_size, context_order, 0.0, gamma, seed)
        total = 0.0
        for ctx in contexts:
            total += head_mass(pair.target_dist(ctx), width)
        return total / len(contexts)

    lo, hi = bounds
    if measure(lo) > target_mass or measure(hi) < target_mass:
        raise ValueError(
            f"target head mass {target_mass} not bracketed by concentration "
            f"bounds {bounds}"
        )
    gamma = 0.5 * (lo + hi)
    for _ in range(max_iter):
        gamma = 0.5 * (lo + hi)
        got = measure(gamma)
        if abs(got - target_mass) <= tol:
            break
        if got < target_mass:
            lo = gamma
        else:
            hi = gamma
    return gamma
