# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: posting-list varint codec and document-at-a-time top-k.

The scoring arithmetic replicates gir.models expression by expression, so
results are bit-identical to the pure-Python backend.  Build with
-ffp-contract=off; fused multiply-add would break that equivalence.
"""

import math

import numpy as np

from libc.math cimport exp, expm1, log1p, log2, sqrt
from libc.stdlib cimport free, malloc

cdef double LOG2E = math.log2(math.e)
cdef double LN2 = math.log(2.0)
cdef double TWO_PI = 2.0 * math.pi
cdef double MIN_ONE_MINUS_F = 1e-9
cdef double STIRLING_MIN = 0.5

# must match gir.models.MODEL_IDS
MODEL_ORDER = (
    "BB2", "BM25", "DFI0", "DFR_BM25", "DFRee", "DLH", "DLH13", "DPH",
    "Hiemstra_LM", "IFB2", "InL2", "In_expC2", "Js_KLs", "LGD", "PL2",
    "TF_IDF", "XSqrA_M",
)

BACKEND = "compiled"


cdef inline double _log2_1p(double x) noexcept nogil:
    return log1p(x) / LN2


cdef inline double _log2_ratio(double a, double b) noexcept nogil:
    cdef double r = (a - b) / b
    if -0.5 < r < 0.5:
        return log1p(r) / LN2
    return log2(a / b)


cdef inline double _norm2(double tf, double l, double avg_l, double c) noexcept nogil:
    return tf * _log2_1p(c * avg_l / l)


cdef inline double _stirling(double n, double delta) noexcept nogil:
    cdef double m = n - delta
    if m < STIRLING_MIN:
        m = STIRLING_MIN
        delta = n - m
    return (m + 0.5) * _log2_1p(delta / m) + delta * log2(n)


cdef inline double _one_minus_f(double tf, double l) noexcept nogil:
    cdef double g = (l - tf) / l
    if g < MIN_ONE_MINUS_F:
        return MIN_ONE_MINUS_F
    return g


cdef double _score(int model, double tf, double qtf, double l, double avg_l,
                   double N, double TC, double df, double F,
                   double c, double k1, double b, double k3, double lam) noexcept nogil:
    cdef double K, qw, tfn, n_e, n1, gain, g, norm, post, ipc, ratio, e, pd, pc, m, d, x, q
    if model == 0:  # BB2
        tfn = _norm2(tf, l, avg_l, c)
        n1 = N - 1.0
        if n1 < 1.0:
            n1 = 1.0
        gain = (-log2(n1) - LOG2E + _stirling(N + F - 1.0, tfn + 1.0)
                - _stirling(F, tfn))
        return qtf * ((F + 1.0) / (df * (tfn + 1.0))) * gain
    elif model == 1:  # BM25
        K = k1 * ((1.0 - b) + b * l / avg_l)
        qw = (k3 + 1.0) * qtf / (k3 + qtf)
        return qw * ((k1 + 1.0) * tf / (K + tf)) * _log2_ratio(N - df + 0.5, df + 0.5)
    elif model == 2:  # DFI0
        e = F * l / TC
        if tf <= e:
            return 0.0
        return qtf * _log2_1p((tf - e) / sqrt(e))
    elif model == 3:  # DFR_BM25
        K = k1 * ((1.0 - b) + b * l / avg_l)
        qw = (k3 + 1.0) * qtf / (k3 + qtf)
        return qw * ((k1 + 1.0) * tf / (K + tf)) * _log2_ratio(N + 1.0, df + 0.5)
    elif model == 4:  # DFRee
        post = (tf + 1.0) / (l + 1.0)
        ipc = TC / F
        ratio = _log2_1p((l - tf) / (tf * (l + 1.0)))
        norm = tf * ratio
        gain = (tf + 0.5) * ratio + log2(post * ipc)
        return qtf * norm * gain
    elif model == 5:  # DLH
        g = _one_minus_f(tf, l)
        gain = (tf * log2((tf * avg_l / l) * (N / F))
                + (l - tf) * log2(g)
                + 0.5 * log2(TWO_PI * tf * g))
        return qtf / (tf + 0.5) * gain
    elif model == 6:  # DLH13
        g = _one_minus_f(tf, l)
        gain = tf * log2((tf * avg_l / l) * (N / F)) + 0.5 * log2(TWO_PI * tf * g)
        return qtf / (tf + 0.5) * gain
    elif model == 7:  # DPH
        g = _one_minus_f(tf, l)
        norm = g * g / (tf + 1.0)
        gain = tf * log2((tf * avg_l / l) * (N / F)) + 0.5 * log2(TWO_PI * tf * g)
        return qtf * norm * gain
    elif model == 8:  # Hiemstra_LM
        return qtf * _log2_1p((lam * tf * TC) / ((1.0 - lam) * F * l))
    elif model == 9:  # IFB2
        tfn = _norm2(tf, l, avg_l, c)
        return qtf * ((F + 1.0) / (df * (tfn + 1.0))) * tfn * _log2_ratio(N + 1.0, F + 0.5)
    elif model == 10:  # InL2
        tfn = _norm2(tf, l, avg_l, c)
        return qtf * (1.0 / (tfn + 1.0)) * tfn * _log2_ratio(N + 1.0, df + 0.5)
    elif model == 11:  # In_expC2
        tfn = _norm2(tf, l, avg_l, c)
        if N <= 1.0:
            q = 0.0
            n_e = N
        else:
            x = F * log1p(-1.0 / N)
            q = exp(x)
            n_e = N * -expm1(x)
        return qtf * ((F + 1.0) / (df * (tfn + 1.0))) * tfn * _log2_1p((0.5 + N * q) / (n_e + 0.5))
    elif model == 12:  # Js_KLs
        pd = tf / l
        pc = F / TC
        if pd <= pc:
            return 0.0
        m = (pd + pc) / 2.0
        return qtf * tf * (pd * log2(pd / m) + pc * log2(pc / m))
    elif model == 13:  # LGD
        tfn = _norm2(tf, l, avg_l, c)
        lam = df / N
        return qtf * _log2_1p(tfn / lam)
    elif model == 14:  # PL2
        tfn = _norm2(tf, l, avg_l, c)
        lam = F / N
        gain = tfn * log2(tfn / lam) + (lam - tfn) * LOG2E + 0.5 * log2(TWO_PI * tfn)
        return qtf * (1.0 / (tfn + 1.0)) * gain
    elif model == 15:  # TF_IDF
        K = k1 * ((1.0 - b) + b * l / avg_l)
        return qtf * (k1 * tf / (tf + K)) * _log2_1p(N / df)
    else:  # XSqrA_M
        pd = tf / l
        pc = F / TC
        if pd <= pc:
            return 0.0
        d = pd - pc
        return qtf * l * d * d / pc


def score_array(int model, tuple params, const double[:] tf, const double[:] l,
                double qtf, double avg_l, double N, double TC, double df, double F):
    """Score one term over many (tf, l) pairs.  Used by the benchmark."""
    cdef double c = params[0], k1 = params[1], b = params[2], k3 = params[3], lam = params[4]
    cdef Py_ssize_t i, n = tf.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[:] o = out
    with nogil:
        for i in range(n):
            o[i] = _score(model, tf[i], qtf, l[i], avg_l, N, TC, df, F, c, k1, b, k3, lam)
    return out


cdef inline bint _better(double s1, int r1, double s2, int r2) noexcept nogil:
    return s1 > s2 or (s1 == s2 and r1 > r2)


cdef void _sift_down(double* hs, int* hr, int* hd, int size, int pos) noexcept nogil:
    cdef int child, best
    cdef double ts
    cdef int tr, td
    while True:
        child = 2 * pos + 1
        if child >= size:
            break
        best = child
        if child + 1 < size and _better(hs[child], hr[child], hs[child + 1], hr[child + 1]):
            best = child + 1
        if _better(hs[pos], hr[pos], hs[best], hr[best]):
            ts = hs[pos]; hs[pos] = hs[best]; hs[best] = ts
            tr = hr[pos]; hr[pos] = hr[best]; hr[best] = tr
            td = hd[pos]; hd[pos] = hd[best]; hd[best] = td
            pos = best
        else:
            break


cdef void _sift_up(double* hs, int* hr, int* hd, int pos) noexcept nogil:
    cdef int parent
    cdef double ts
    cdef int tr, td
    while pos > 0:
        parent = (pos - 1) // 2
        if _better(hs[parent], hr[parent], hs[pos], hr[pos]):
            ts = hs[pos]; hs[pos] = hs[parent]; hs[parent] = ts
            tr = hr[pos]; hr[pos] = hr[parent]; hr[parent] = tr
            td = hd[pos]; hd[pos] = hd[parent]; hd[parent] = td
            pos = parent
        else:
            break


def daat_topk(int model, tuple params,
              const int[:] docids, const int[:] tfs,
              const long long[:] starts, const long long[:] ends,
              const double[:] qtfs, const double[:] dfs, const double[:] cfs,
              const int[:] doc_lengths, const int[:] doc_rank,
              double N, double TC, double avg_l, int k):
    """Document-at-a-time scoring of the query terms' posting ranges.

    Query terms are scored in the order given, so each document's score is
    accumulated in a fixed order.  Returns (docids, scores) of the best k
    documents, unordered.
    """
    cdef double c = params[0], k1 = params[1], b = params[2], k3 = params[3], lam = params[4]
    cdef Py_ssize_t nt = starts.shape[0]
    cdef Py_ssize_t t
    cdef long long* cur = <long long*> malloc(max(nt, 1) * sizeof(long long))
    cdef double* hs = <double*> malloc(max(k, 1) * sizeof(double))
    cdef int* hr = <int*> malloc(max(k, 1) * sizeof(int))
    cdef int* hd = <int*> malloc(max(k, 1) * sizeof(int))
    cdef int size = 0
    cdef int d, cand, r
    cdef double s, l
    if cur == NULL or hs == NULL or hr == NULL or hd == NULL:
        free(cur); free(hs); free(hr); free(hd)
        raise MemoryError()
    try:
        with nogil:
            for t in range(nt):
                cur[t] = starts[t]
            while True:
                d = -1
                for t in range(nt):
                    if cur[t] < ends[t]:
                        cand = docids[cur[t]]
                        if d < 0 or cand < d:
                            d = cand
                if d < 0:
                    break
                s = 0.0
                l = doc_lengths[d]
                for t in range(nt):
                    if cur[t] < ends[t] and docids[cur[t]] == d:
                        s += _score(model, tfs[cur[t]], qtfs[t], l, avg_l, N, TC,
                                    dfs[t], cfs[t], c, k1, b, k3, lam)
                        cur[t] += 1
                r = doc_rank[d]
                if size < k:
                    hs[size] = s; hr[size] = r; hd[size] = d
                    _sift_up(hs, hr, hd, size)
                    size += 1
                elif _better(s, r, hs[0], hr[0]):
                    hs[0] = s; hr[0] = r; hd[0] = d
                    _sift_down(hs, hr, hd, size, 0)
        out_docs = np.empty(size, dtype=np.int32)
        out_scores = np.empty(size, dtype=np.float64)
        for t in range(size):
            out_docs[t] = hd[t]
            out_scores[t] = hs[t]
        return out_docs, out_scores
    finally:
        free(cur); free(hs); free(hr); free(hd)


def encode_postings(const int[:] docids, const int[:] tfs, const long long[:] offsets):
    """Varint-encode posting runs; docids are delta-coded within each run."""
    cdef Py_ssize_t nterms = offsets.shape[0] - 1
    cdef Py_ssize_t total = docids.shape[0]
    buf = bytearray(total * 10 + 16)
    cdef unsigned char[:] out = buf
    cdef Py_ssize_t pos = 0, i, t
    cdef unsigned long long v
    cdef int prev
    with nogil:
        for t in range(nterms):
            prev = 0
            for i in range(offsets[t], offsets[t + 1]):
                v = <unsigned long long> (docids[i] - prev)
                prev = docids[i]
                while v >= 0x80:
                    out[pos] = <unsigned char> ((v & 0x7F) | 0x80)
                    pos += 1
                    v >>= 7
                out[pos] = <unsigned char> v
                pos += 1
                v = <unsigned long long> tfs[i]
                while v >= 0x80:
                    out[pos] = <unsigned char> ((v & 0x7F) | 0x80)
                    pos += 1
                    v >>= 7
                out[pos] = <unsigned char> v
                pos += 1
    return bytes(buf[:pos])


def decode_postings(const unsigned char[:] data, const long long[:] offsets):
    """Inverse of encode_postings.  Raises ValueError on malformed input."""
    cdef Py_ssize_t nterms = offsets.shape[0] - 1
    cdef Py_ssize_t total = offsets[nterms] if nterms >= 0 else 0
    cdef Py_ssize_t n = data.shape[0]
    docids_arr = np.empty(total, dtype=np.int32)
    tfs_arr = np.empty(total, dtype=np.int32)
    cdef int[:] od = docids_arr
    cdef int[:] ot = tfs_arr
    cdef Py_ssize_t pos = 0, i, t
    cdef unsigned long long v
    cdef int shift, which
    cdef long long prev
    cdef bint bad = False
    with nogil:
        for t in range(nterms):
            prev = 0
            for i in range(offsets[t], offsets[t + 1]):
                for which in range(2):
                    v = 0
                    shift = 0
                    while True:
                        if pos >= n or shift > 28:
                            bad = True
                            break
                        v |= (<unsigned long long> (data[pos] & 0x7F)) << shift
                        pos += 1
                        if data[pos - 1] < 0x80:
                            break
                        shift += 7
                    if bad:
                        break
                    if which == 0:
                        prev += <long long> v
                        if prev > 0x7FFFFFFF:
                            bad = True
                            break
                        od[i] = <int> prev
                    else:
                        if v > 0x7FFFFFFF:
                            bad = True
                            break
                        ot[i] = <int> v
                if bad:
                    break
            if bad:
                break
    if bad:
        raise ValueError("malformed varint postings")
    if pos != n:
        raise ValueError(f"{n - pos} trailing bytes after postings")
    return docids_arr, tfs_arr
