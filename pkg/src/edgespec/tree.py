"""Expansion-configured draft trees and their index arithmetic.

A draft tree of depth L is laid out as per-layer arrays.  Layer 0 is the
single root (the shared prefix, carrying no token of its own); every node in
layer l has exactly ``ks[l]`` children, stored contiguously, so layer l
holds ``W_l = k_1 * ... * k_l`` tokens.  Node indices are 1-based within a
layer to keep interfaces and logs aligned with the usual (layer, index)
notation.

The closed-form counts used throughout:

    tokens shipped   = sum_{l=1..L} W_l          (everything but the root)
    distributions    = 1 + sum_{l=1..L-1} W_l    (root + internal layers)
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil

from .prob import Categorical


@dataclass(frozen=True)
class ExpansionConfig:
    """Branch counts per layer, ``ks[l]`` children for layer-l parents."""

    ks: tuple[int, ...]

    def __post_init__(self):
        ks = tuple(int(k) for k in self.ks)
        object.__setattr__(self, "ks", ks)
        if len(ks) < 1 or any(k < 1 for k in ks):
            raise ValueError("expansion needs depth >= 1 and all branch counts >= 1")
        widths = [1]
        for k in ks:
            widths.append(widths[-1] * k)
        object.__setattr__(self, "_widths", tuple(widths))

    @property
    def depth(self) -> int:
        return len(self.ks)

    def layer_width(self, layer: int) -> int:
        """W_l: number of nodes in layer ``layer`` (W_0 = 1)."""
        if not 0 <= layer <= self.depth:
            raise ValueError(f"layer must be in [0, {self.depth}]")
        return self._widths[layer]

    @property
    def token_count(self) -> int:
        """Non-root node count: sum of all layer widths below the root."""
        return sum(self._widths[1:])

    @property
    def dist_count(self) -> int:
        """Distributions drafted: one per internal node (layers 0..L-1)."""
        return 1 + sum(self._widths[1:-1])

    def children_range(self, layer: int, index: int) -> tuple[int, int]:
        """Inclusive 1-based index interval of (layer, index)'s children in
        layer+1: [(index-1)*k + 1, index*k]."""
        if not 0 <= layer < self.depth:
            raise ValueError(f"parent layer must be in [0, {self.depth - 1}]")
        if not 1 <= index <= self.layer_width(layer):
            raise ValueError(f"index {index} out of range for layer {layer}")
        k = self.ks[layer]
        return (index - 1) * k + 1, index * k

    def parent_index(self, layer: int, index: int) -> int:
        """1-based parent index in layer-1: ceil(index / k_layer)."""
        if not 1 <= layer <= self.depth:
            raise ValueError(f"child layer must be in [1, {self.depth}]")
        if not 1 <= index <= self.layer_width(layer):
            raise ValueError(f"index {index} out of range for layer {layer}")
        return ceil(index / self.ks[layer - 1])


@dataclass(frozen=True)
class TokenTree:
    """Drafted tree: per-layer token arrays plus per-internal-node laws.

    ``token_layers[l-1]`` holds layer l's tokens (the root stores none);
    ``dists[l][i-1]`` is the law node (l, i) drew its children from.
    Duplicate sibling tokens are allowed: candidates are drawn with
    replacement, and the tree stores positions, not token sets.
    """

    config: ExpansionConfig
    prefix: tuple[int, ...]
    token_layers: tuple[tuple[int, ...], ...]
    dists: tuple[tuple[Categorical, ...], ...]

    def __post_init__(self):
        cfg = self.config
        if len(self.token_layers) != cfg.depth:
            raise ValueError("token layer count must equal tree depth")
        for l, layer in enumerate(self.token_layers, start=1):
            if len(layer) != cfg.layer_width(l):
                raise ValueError(f"layer {l} must hold {cfg.layer_width(l)} tokens")
        if len(self.dists) != cfg.depth:
            raise ValueError("need one distribution layer per internal layer")
        for l, layer in enumerate(self.dists):
            if len(layer) != cfg.layer_width(l):
                raise ValueError(f"distribution layer {l} must hold {cfg.layer_width(l)} entries")

    def token(self, layer: int, index: int) -> int:
        if not 1 <= layer <= self.config.depth:
            raise ValueError(f"token layers are 1..{self.config.depth}")
        if not 1 <= index <= self.config.layer_width(layer):
            raise ValueError(f"index {index} out of range for layer {layer}")
        return self.token_layers[layer - 1][index - 1]

    def dist(self, layer: int, index: int) -> Categorical:
        return self.dists[layer][index - 1]

    def children_tokens(self, layer: int, index: int) -> tuple[int, ...]:
        lo, hi = self.config.children_range(layer, index)
        return self.token_layers[layer][lo - 1 : hi]

    def path_of(self, layer: int, index: int) -> tuple[int, ...]:
        """Prefix followed by the tokens along the root-to-(layer, index)
        chain; the root path is the prefix itself."""
        if layer == 0:
            if index != 1:
                raise ValueError("layer 0 has only index 1")
            return self.prefix
        chain = []
        l, i = layer, index
        while l >= 1:
            chain.append(self.token(l, i))
            i = self.config.parent_index(l, i)
            l -= 1
        return self.prefix + tuple(reversed(chain))


def flatten(tree: TokenTree) -> tuple[tuple[int, ...], tuple[Categorical, ...]]:
    """Canonical upload order, layer-major then index-minor: all non-root
    tokens and all drafted distributions."""
    tokens = tuple(t for layer in tree.token_layers for t in layer)
    dists = tuple(d for layer in tree.dists for d in layer)
    return tokens, dists


def rebuild(
    config: ExpansionConfig,
    prefix: tuple[int, ...],
    tokens,
    dists,
) -> TokenTree:
    """Inverse of :func:`flatten`; the layout is a bijection by construction."""
    tokens = list(tokens)
    dists = list(dists)
    if len(tokens) != config.token_count:
        raise ValueError(f"expected {config.token_count} tokens, got {len(tokens)}")
    if len(dists) != config.dist_count:
        raise ValueError(f"expected {config.dist_count} distributions, got {len(dists)}")
    token_layers = []
    dist_layers = []
    t_at = 0
    d_at = 0
    for l in range(1, config.depth + 1):
        w = config.layer_width(l)
        token_layers.append(tuple(tokens[t_at : t_at + w]))
        t_at += w
    for l in range(config.depth):
        w = config.layer_width(l)
        dist_layers.append(tuple(dists[d_at : d_at + w]))
        d_at += w
    return TokenTree(config, tuple(prefix), tuple(token_layers), tuple(dist_layers))
