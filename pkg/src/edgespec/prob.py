"""Categorical-distribution arithmetic for draft/verify simulation.

All distributions live on one shared token vocabulary of size V and are
plain float64 vectors.  The operations here are the exact primitives the
decoding protocols are built from: total-variation distance, truncation with
renormalization (sparsify-then-sample), residual distributions for rejection
resampling, and deterministic inverse-CDF sampling.

Reductions go through :mod:`edgespec.kernels` so the accumulation order (and
therefore every simulated bit) is independent of the selected backend.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .rng import Stream

SUM_TOL = 1e-9
DEGENERATE_MASS = 1e-12


class Categorical:
    """Immutable probability vector indexed by token id 0..V-1."""

    __slots__ = ("probs",)

    def __init__(self, probs):
        arr = np.ascontiguousarray(probs, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("probs must be a non-empty 1-D vector")
        if not np.all(np.isfinite(arr)):
            raise ValueError("probs must be finite")
        if np.any(arr < 0.0):
            raise ValueError("probs must be non-negative")
        total = kernels.seq_sum(arr)
        if abs(total - 1.0) > SUM_TOL:
            raise ValueError(f"probs must sum to 1 within {SUM_TOL} (got {total!r})")
        arr.setflags(write=False)
        self.probs = arr

    @classmethod
    def _wrap(cls, arr: np.ndarray) -> "Categorical":
        """Trusted constructor for vectors valid by construction."""
        self = cls.__new__(cls)
        arr.setflags(write=False)
        self.probs = arr
        return self

    @property
    def size(self) -> int:
        return self.probs.shape[0]

    def prob(self, token: int) -> float:
        return float(self.probs[token])

    def __repr__(self) -> str:  # short, for debugging only
        return f"Categorical(V={self.size})"


@dataclass(frozen=True)
class TopK:
    """Keep the k highest-probability tokens (ties: lower token id wins)."""

    k: int


@dataclass(frozen=True)
class TopRho:
    """Keep the smallest head of the sorted distribution reaching mass rho.

    The token that crosses the threshold is included (standard nucleus
    sampling).  ``exclusive=True`` switches to the variant that stops just
    below the threshold instead; the top-1 token is always kept.
    """

    rho: float
    exclusive: bool = False


TruncationMode = TopK | TopRho


@dataclass(frozen=True)
class TruncationSpec:
    """Result of applying a truncation mode to a concrete distribution.

    ``kept`` is ordered by descending probability (ties by ascending token
    id) and never contains zero-probability tokens, so a sparse payload is
    supported exactly on it.  ``kept_mass`` + ``discarded_mass`` equals 1 up
    to float rounding.
    """

    mode: TruncationMode
    kept: np.ndarray
    kept_mass: float
    discarded_mass: float

    @property
    def width(self) -> int:
        return int(self.kept.shape[0])


@dataclass(frozen=True)
class SparseLogits:
    """Uplink payload: (token id, raw weight) pairs plus the dense size.

    Carries the *unnormalized* kept weights; the receiver renormalizes, which
    reproduces the sender's truncated distribution exactly when any mass was
    discarded (identical division) and up to 1 ulp when nothing was.
    """

    token_ids: np.ndarray
    values: np.ndarray
    source_size: int

    def __post_init__(self):
        if self.token_ids.shape != self.values.shape or self.token_ids.ndim != 1:
            raise ValueError("token_ids and values must be parallel 1-D arrays")
        if self.token_ids.shape[0] == 0:
            raise ValueError("sparse payload must contain at least one entry")
        ids = self.token_ids
        if len(set(ids.tolist())) != ids.shape[0]:
            raise ValueError("token ids must be distinct")
        if ids.min() < 0 or ids.max() >= self.source_size:
            raise ValueError("token ids must lie in [0, source_size)")

    @classmethod
    def _wrap(cls, token_ids, values, source_size) -> "SparseLogits":
        """Trusted constructor for payloads valid by construction."""
        self = object.__new__(cls)
        object.__setattr__(self, "token_ids", token_ids)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "source_size", source_size)
        return self

    @property
    def width(self) -> int:
        return int(self.token_ids.shape[0])

    def to_categorical(self) -> Categorical:
        """Dense expansion, renormalized over the kept set."""
        total = kernels.seq_sum(self.values)
        dense = np.zeros(self.source_size)
        dense[self.token_ids] = self.values / total
        return Categorical._wrap(dense)


def _check_same_size(a: Categorical, b: Categorical) -> None:
    if a.size != b.size:
        raise ValueError(f"vocabulary mismatch: {a.size} vs {b.size}")


def tv_distance(a: Categorical, b: Categorical) -> float:
    """Total variation distance, 0.5 * sum |a - b| in ascending token order."""
    _check_same_size(a, b)
    return kernels.tv_distance(a.probs, b.probs)


def overlap_mass(a: Categorical, b: Categorical) -> float:
    """sum_x min(a(x), b(x)) -- the single-draw acceptance probability,
    which equals 1 - tv_distance(a, b)."""
    _check_same_size(a, b)
    return kernels.overlap_mass(a.probs, b.probs)


def descending_order(probs: np.ndarray) -> np.ndarray:
    """Token ids sorted by descending probability, ties by ascending id."""
    return np.argsort(-probs, kind="stable")


def truncate(q: Categorical, mode: TruncationMode) -> tuple[Categorical, TruncationSpec]:
    """Restrict ``q`` to a kept set and renormalize.

    Returns the renormalized distribution and the spec describing the kept
    set.  If no probability mass was discarded the input vector is reused
    unchanged, so a full-width truncation is the exact identity.
    """
    v = q.size
    order = descending_order(q.probs)
    sorted_vals = q.probs[order]

    if isinstance(mode, TopK):
        if not 1 <= mode.k <= v:
            raise ValueError(f"TopK width must be in [1, {v}] (got {mode.k})")
        n = mode.k
    elif isinstance(mode, TopRho):
        if not 0.0 < mode.rho <= 1.0:
            raise ValueError(f"TopRho mass must be in (0, 1] (got {mode.rho})")
        n = kernels.nucleus_cutoff(sorted_vals, mode.rho, mode.exclusive)
    else:
        raise TypeError(f"unsupported truncation mode: {mode!r}")

    kept_vals = sorted_vals[:n]
    # Zero-probability tokens sort last, so the positive entries are a prefix.
    n_pos = int(np.count_nonzero(kept_vals))
    if n_pos == 0:
        raise ValueError("cannot truncate a distribution with no positive mass")
    kept = order[:n_pos]
    kept_vals = kept_vals[:n_pos]

    kept_mass = kernels.seq_sum(kept_vals)
    complement = np.ones(v, dtype=bool)
    complement[kept] = False
    discarded = kernels.seq_sum(q.probs[complement])

    if discarded == 0.0:
        q_hat = Categorical._wrap(q.probs)
    else:
        dense = np.zeros(v)
        dense[kept] = kept_vals / kept_mass
        q_hat = Categorical._wrap(dense)

    kept = np.ascontiguousarray(kept, dtype=np.int64)
    kept.setflags(write=False)
    return q_hat, TruncationSpec(mode, kept, kept_mass, discarded)


def sparse_payload(q: Categorical, spec: TruncationSpec) -> SparseLogits:
    """Payload for a truncated distribution: raw kept weights of ``q``.

    Kept ids are distinct and in range by construction, so validation is
    skipped on this path.
    """
    values = np.ascontiguousarray(q.probs[spec.kept])
    values.setflags(write=False)
    return SparseLogits._wrap(spec.kept, values, q.size)


@dataclass(frozen=True)
class ResidualSplit:
    """Rejection-resampling law r = norm(max(0, p - q)).

    ``mass`` is sum max(0, p - q), which equals tv_distance(p, q) up to
    rounding.  When ``p <= q`` pointwise the residual is undefined
    (``degenerate``); callers sample the pending token from ``p`` directly.
    """

    dist: Categorical | None
    mass: float
    degenerate: bool


def residual(p: Categorical, q: Categorical) -> ResidualSplit:
    _check_same_size(p, q)
    out = np.empty(p.size)
    z = kernels.residual_into(p.probs, q.probs, out)
    if z < DEGENERATE_MASS:
        return ResidualSplit(None, z, True)
    return ResidualSplit(Categorical._wrap(out / z), z, False)


def sample_index(dist: Categorical, stream: Stream) -> int:
    """Inverse-CDF draw; deterministic given the stream state."""
    return kernels.inverse_cdf(dist.probs, stream.uniform())
