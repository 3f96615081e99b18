"""Deterministic simulator for device-edge speculative decoding.

A small on-device draft model proposes tokens; an edge-side target model
verifies them.  Shipping each draft distribution over the uplink dominates
the communication cost, so the device can truncate distributions to a small
kept set, renormalize, sample from the truncated law, and transmit only the
kept (id, value) pairs -- without changing the emitted-token law at all.
This package provides exact distribution arithmetic, seeded synthetic model
pairs, single- and multi-candidate decoding protocols, executable verifiers
for their distributional guarantees, an analytic uplink/latency model, and a
campaign harness with a CLI.
"""

from .kernels import available_backends, backend_name
from .models import ModelPair, calibrate_concentration, calibrate_divergence
from .perf import LinkModel, PayloadConvention, TimingModel
from .prob import (
    Categorical,
    SparseLogits,
    TopK,
    TopRho,
    TruncationSpec,
    overlap_mass,
    residual,
    sample_index,
    truncate,
    tv_distance,
)
from .rng import Stream, derive
from .tree import ExpansionConfig, TokenTree

__version__ = "0.1.0"

__all__ = [
    "Categorical",
    "ExpansionConfig",
    "LinkModel",
    "ModelPair",
    "PayloadConvention",
    "SparseLogits",
    "Stream",
    "TimingModel",
    "TokenTree",
    "TopK",
    "TopRho",
    "TruncationSpec",
    "available_backends",
    "backend_name",
    "calibrate_concentration",
    "calibrate_divergence",
    "derive",
    "overlap_mass",
    "residual",
    "sample_index",
    "truncate",
    "tv_distance",
    "__version__",
]
