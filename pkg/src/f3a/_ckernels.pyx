# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled greedy selection kernels (see _pykernels for the reference)."""
import numpy as np
cimport numpy as cnp

from libc.math cimport INFINITY

cnp.import_array()


cdef inline Py_ssize_t _iabs(Py_ssize_t x) nogil:
    return -x if x < 0 else x


cdef void _absorb(double[::1] pen, const cnp.int64_t[::1] cand, Py_ssize_t j,
                  const double[:, ::1] gram, const cnp.int64_t[::1] rows,
                  const cnp.int64_t[::1] cols, const double[:, ::1] ktab,
                  double w_sim, double w_kap) noexcept nogil:
    cdef Py_ssize_t t, i
    cdef double term
    for t in range(cand.shape[0]):
        i = cand[t]
        term = w_sim * gram[i, j] + w_kap * ktab[_iabs(rows[i] - rows[j]), _iabs(cols[i] - cols[j])]
        if term > pen[t]:
            pen[t] = term


def greedy_penalized(base, cand, init, gram, rows, cols, kappa_tab,
                     double w_sim, double w_kap, double scale, Py_ssize_t k):
    cdef const double[::1] b = np.ascontiguousarray(base, dtype=np.float64)
    cdef const cnp.int64_t[::1] c = np.ascontiguousarray(cand, dtype=np.int64)
    cdef const cnp.int64_t[::1] s0 = np.ascontiguousarray(init, dtype=np.int64)
    cdef const double[:, ::1] g = np.ascontiguousarray(gram, dtype=np.float64)
    cdef const cnp.int64_t[::1] rr = np.ascontiguousarray(rows, dtype=np.int64)
    cdef const cnp.int64_t[::1] cc = np.ascontiguousarray(cols, dtype=np.int64)
    cdef const double[:, ::1] kt = np.ascontiguousarray(kappa_tab, dtype=np.float64)
    cdef Py_ssize_t n = c.shape[0]
    pen_arr = np.full(n, -np.inf)
    alive_arr = np.ones(n, dtype=np.uint8)
    picks_arr = np.empty(k, dtype=np.int64)
    pick_scores_arr = np.empty(k)
    last_arr = np.empty(n)
    cdef double[::1] pen = pen_arr
    cdef cnp.uint8_t[::1] alive = alive_arr
    cdef cnp.int64_t[::1] picks = picks_arr
    cdef double[::1] pscore = pick_scores_arr
    cdef double[::1] last = last_arr
    cdef bint has = False
    cdef Py_ssize_t t, step, best
    cdef double sc, bestval

    with nogil:
        for t in range(s0.shape[0]):
            _absorb(pen, c, s0[t], g, rr, cc, kt, w_sim, w_kap)
            has = True
        for step in range(k):
            best = -1
            bestval = -INFINITY
            for t in range(n):
                if not alive[t]:
                    continue
                sc = b[t] - scale * pen[t] if has else b[t]
                if best < 0 or sc > bestval:
                    best = t
                    bestval = sc
            picks[step] = c[best]
            pscore[step] = bestval
            last[best] = bestval
            alive[best] = 0
            _absorb(pen, c, c[best], g, rr, cc, kt, w_sim, w_kap)
            has = True
        for t in range(n):
            if alive[t]:
                last[t] = b[t] - scale * pen[t] if has else b[t]
    return picks_arr, pick_scores_arr, last_arr


def greedy_maxmin(weight, gram, Py_ssize_t seed, Py_ssize_t k):
    cdef const double[::1] w = np.ascontiguousarray(weight, dtype=np.float64)
    cdef const double[:, ::1] g = np.ascontiguousarray(gram, dtype=np.float64)
    cdef Py_ssize_t n = w.shape[0]
    picks_arr = np.empty(k, dtype=np.int64)
    mind_arr = np.empty(n)
    alive_arr = np.ones(n, dtype=np.uint8)
    cdef cnp.int64_t[::1] picks = picks_arr
    cdef double[::1] mind = mind_arr
    cdef cnp.uint8_t[::1] alive = alive_arr
    cdef Py_ssize_t i, step, best
    cdef double gain, bestval, d

    with nogil:
        picks[0] = seed
        alive[seed] = 0
        for i in range(n):
            mind[i] = 1.0 - g[i, seed]
        for step in range(1, k):
            best = -1
            bestval = -INFINITY
            for i in range(n):
                if not alive[i]:
                    continue
                gain = w[i] * mind[i]
                if best < 0 or gain > bestval:
                    best = i
                    bestval = gain
            picks[step] = best
            alive[best] = 0
            for i in range(n):
                d = 1.0 - g[i, best]
                if d < mind[i]:
                    mind[i] = d
    return picks_arr
