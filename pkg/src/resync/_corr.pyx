# cython: language_level=3
"""Compiled correlation kernels.

Hot path for offset recovery: bit lookups against the packed pattern and
the early-exit sweep over the alternating offset order.  Contract matches
_corr_py exactly; kernels.py picks whichever is importable.
"""

name = "compiled"


cdef inline long long _corr_at(const unsigned char* pat,
                               const long long* bins,
                               Py_ssize_t nd,
                               long long delta) noexcept nogil:
    cdef long long n = 0
    cdef long long k
    cdef Py_ssize_t i
    for i in range(nd):
        k = bins[i] - delta
        n += (pat[k >> 3] >> (k & 7)) & 1
    return 2 * n - <long long>nd


def correlate(const unsigned char[::1] packed, long long n_bins,
              const long long[::1] bins, long long delta):
    """C(delta) = 2*N - nd for one candidate offset."""
    cdef Py_ssize_t nd = bins.shape[0]
    if nd == 0:
        return 0
    cdef Py_ssize_t i
    cdef long long k
    for i in range(nd):
        k = bins[i] - delta
        if k < 0 or k >= n_bins:
            raise ValueError("detection bin minus offset falls outside the pattern")
    cdef long long c
    with nogil:
        c = _corr_at(&packed[0], &bins[0], nd, delta)
    return int(c)


def sweep(const unsigned char[::1] packed, long long n_bins,
          const long long[::1] bins, long long delta_max, long long threshold):
    """Early-exit sweep over offsets 0, +1, -1, +2, -2, ...

    Returns (accepted, delta, corr, tested); corr is the max seen when
    nothing qualifies.
    """
    cdef Py_ssize_t nd = bins.shape[0]
    if nd == 0:
        return False, 0, 0, 0
    cdef long long bmin = bins[0]
    cdef long long bmax = bins[0]
    cdef Py_ssize_t i
    for i in range(nd):
        if bins[i] < bmin:
            bmin = bins[i]
        if bins[i] > bmax:
            bmax = bins[i]
    if bmin < delta_max or bmax >= n_bins - delta_max:
        raise ValueError("detection bins violate the margin needed for a full sweep")

    cdef long long total = 2 * delta_max + 1
    cdef long long n, delta, corr
    cdef long long best = -<long long>nd - 1
    cdef long long tested = 0
    cdef bint hit = False
    cdef long long hit_delta = 0
    cdef long long hit_corr = 0
    with nogil:
        for n in range(total):
            if n & 1:
                delta = (n >> 1) + 1
            else:
                delta = -(n >> 1)
            corr = _corr_at(&packed[0], &bins[0], nd, delta)
            tested += 1
            if corr > best:
                best = corr
            if corr > threshold:
                hit = True
                hit_delta = delta
                hit_corr = corr
                break
    if hit:
        return True, int(hit_delta), int(hit_corr), int(tested)
    return False, 0, int(best), int(tested)
