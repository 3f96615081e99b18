# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Native kernels: same semantics as ``_pure``, loop for loop.

Reductions accumulate in ascending index order and ``pow`` is libm's; with
strict IEEE compilation (no fast-math) every result is bit-identical to the
pure backend, which the test suite asserts.
"""

from libc.math cimport pow as c_pow

NAME = "native"

cdef unsigned long long _MASK64 = 0xFFFFFFFFFFFFFFFFULL
cdef unsigned long long _GOLDEN = 0x9E3779B97F4A7C15ULL
cdef unsigned long long _MIX1 = 0xBF58476D1CE4E5B9ULL
cdef unsigned long long _MIX2 = 0x94D049BB133111EBULL
cdef double _TO_UNIT = 1.0 / 9007199254740992.0


def seq_sum(const double[::1] x) -> float:
    cdef double total = 0.0
    cdef Py_ssize_t i
    for i in range(x.shape[0]):
        total += x[i]
    return total


def tv_distance(const double[::1] a, const double[::1] b) -> float:
    cdef double total = 0.0
    cdef double d
    cdef Py_ssize_t i
    for i in range(a.shape[0]):
        d = a[i] - b[i]
        if d < 0.0:
            d = -d
        total += d
    return 0.5 * total


def overlap_mass(const double[::1] a, const double[::1] b) -> float:
    cdef double total = 0.0
    cdef double v, w
    cdef Py_ssize_t i
    for i in range(a.shape[0]):
        v = a[i]
        w = b[i]
        total += w if w < v else v
    return total


def residual_into(const double[::1] p, const double[::1] q, double[::1] out) -> float:
    cdef double z = 0.0
    cdef double d
    cdef Py_ssize_t i
    for i in range(p.shape[0]):
        d = p[i] - q[i]
        if d > 0.0:
            out[i] = d
            z += d
        else:
            out[i] = 0.0
    return z


def inverse_cdf(const double[::1] probs, double u) -> int:
    cdef double acc = 0.0
    cdef Py_ssize_t last = -1
    cdef Py_ssize_t i
    cdef double v
    for i in range(probs.shape[0]):
        v = probs[i]
        if v > 0.0:
            last = i
            acc += v
            if u < acc:
                return i
    return last


def nucleus_cutoff(const double[::1] sorted_desc, double rho, bint exclusive) -> int:
    cdef Py_ssize_t n = 0
    cdef Py_ssize_t size = sorted_desc.shape[0]
    cdef double acc = 0.0
    cdef double limit = rho - 1e-12
    if exclusive:
        while n < size and acc + sorted_desc[n] < limit:
            acc += sorted_desc[n]
            n += 1
    else:
        while n < size and acc < limit:
            acc += sorted_desc[n]
            n += 1
    return n if n > 0 else 1


def peaked_weights_into(unsigned long long key, double gamma, double[::1] out):
    cdef Py_ssize_t i
    cdef unsigned long long z
    for i in range(out.shape[0]):
        z = key + (<unsigned long long> (i + 1)) * _GOLDEN
        z ^= z >> 30
        z = z * _MIX1
        z ^= z >> 27
        z = z * _MIX2
        z ^= z >> 31
        out[i] = c_pow(<double> (z >> 11) * _TO_UNIT, gamma)
