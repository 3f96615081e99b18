"""Pure-Python reference kernels.

These are the semantics the native extension must reproduce *bit for bit*:
every reduction accumulates in ascending index order, and the only libm call
(``pow``) goes through ``math.pow``, which is the same C library function the
extension links.  Loops run over ``list`` objects because unboxing numpy
scalars element-by-element is several times slower.
"""

from __future__ import annotations

import math

NAME = "pure"

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_TO_UNIT = 1.0 / 9007199254740992.0


def seq_sum(x) -> float:
    """Sum in ascending index order (the documented accumulation order)."""
    total = 0.0
    for v in x.tolist():
        total += v
    return total


def tv_distance(a, b) -> float:
    """0.5 * sum |a_i - b_i|, accumulated in ascending index order."""
    total = 0.0
    bl = b.tolist()
    for i, v in enumerate(a.tolist()):
        d = v - bl[i]
        if d < 0.0:
            d = -d
        total += d
    return 0.5 * total


def overlap_mass(a, b) -> float:
    """sum min(a_i, b_i), accumulated in ascending index order."""
    total = 0.0
    bl = b.tolist()
    for i, v in enumerate(a.tolist()):
        w = bl[i]
        total += w if w < v else v
    return total


def residual_into(p, q, out) -> float:
    """out_i = max(0, p_i - q_i); returns the ascending-order sum of out."""
    pl = p.tolist()
    ql = q.tolist()
    n = len(pl)
    r = [0.0] * n
    z = 0.0
    for i in range(n):
        d = pl[i] - ql[i]
        if d > 0.0:
            r[i] = d
            z += d
    out[:] = r
    return z


def inverse_cdf(probs, u: float) -> int:
    """Smallest index with cumulative mass > u, scanning ascending.

    Floating-point shortfall (cumulative sum ending below 1.0) falls back to
    the last strictly positive index, so a zero-probability token can never
    be returned.
    """
    acc = 0.0
    last = -1
    for i, v in enumerate(probs.tolist()):
        if v > 0.0:
            last = i
            acc += v
            if u < acc:
                return i
    return last


def nucleus_cutoff(sorted_desc, rho: float, exclusive: bool) -> int:
    """Number of leading entries kept from a descending-sorted weight list.

    Inclusive rule: smallest prefix whose cumulative mass reaches ``rho``.
    Exclusive rule: longest prefix whose cumulative mass stays below ``rho``.
    Comparisons use a 1e-12 absolute tolerance so that decimal-boundary
    inputs (e.g. 0.5 + 0.3 vs 0.8) resolve the way exact arithmetic would.
    At least one entry is always kept.
    """
    vals = sorted_desc.tolist()
    n = 0
    acc = 0.0
    limit = rho - 1e-12
    if exclusive:
        while n < len(vals) and acc + vals[n] < limit:
            acc += vals[n]
            n += 1
    else:
        while n < len(vals) and acc < limit:
            acc += vals[n]
            n += 1
    return n if n > 0 else 1


def peaked_weights_into(key: int, gamma: float, out) -> None:
    """Fill ``out`` with raw weights u_i**gamma, u_i a keyed-counter uniform.

    u_i is the splitmix64 output at counter i under ``key``, mapped to
    [0, 1); the caller normalizes.  Must match the native kernel exactly.
    """
    n = len(out)
    w = [0.0] * n
    k = key & _MASK64
    for i in range(n):
        z = (k + ((i + 1) * _GOLDEN & _MASK64)) & _MASK64
        z ^= z >> 30
        z = (z * _MIX1) & _MASK64
        z ^= z >> 27
        z = (z * _MIX2) & _MASK64
        z ^= z >> 31
        w[i] = math.pow((z >> 11) * _TO_UNIT, gamma)
    out[:] = w
