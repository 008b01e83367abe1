# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the exhaustive inner loops (see _pykernels)."""
import numpy as np
cimport numpy as cnp

ctypedef long long i64


cdef inline int c_int_level(i64 x, i64 p) nogil:
    cdef int n = 0
    if x < 0:
        x = -x
    while x >= p:
        x = x // p
        n += 1
    return n


def int_level(x, p):
    return c_int_level(<i64>x, <i64>p)


def int_pair_excess(xs, long p):
    cdef i64[::1] a = np.ascontiguousarray(xs, dtype=np.int64)
    cdef Py_ssize_t M = a.shape[0], i, j
    cdef int add = -1000000000, mul = -1000000000, e, lx, ly
    cdef i64 x, y
    cdef i64 big = 0
    for i in range(M):
        if a[i] > big or -a[i] > big:
            big = a[i] if a[i] > 0 else -a[i]
    if big > 3037000499:
        raise OverflowError("values too large for the compiled kernel")
    lv = np.empty(M, dtype=np.int32)
    cdef int[::1] L = lv
    for i in range(M):
        L[i] = c_int_level(a[i], p)
    with nogil:
        for i in range(M):
            x = a[i]
            lx = L[i]
            for j in range(M):
                y = a[j]
                ly = L[j]
                e = c_int_level(x + y, p) - (lx if lx > ly else ly)
                if e > add:
                    add = e
                if x != 0 and y != 0:
                    e = c_int_level(x * y, p) - lx - ly
                    if e > mul:
                        mul = e
    return add, mul


cdef inline int c_v2(i64 a) nogil:
    cdef int n = 0
    if a < 0:
        a = -a
    while (a & 1) == 0:
        a >>= 1
        n += 1
    return n


def dyadic_pair_excess(nums, int level):
    cdef i64[::1] a = np.ascontiguousarray(nums, dtype=np.int64)
    cdef Py_ssize_t M = a.shape[0], i, j
    cdef int add = -1000000000, mul = -1000000000, e, ls, lp, li, lj
    cdef i64 s, pr
    if level > 30:
        raise OverflowError("level too large for the compiled kernel")
    with nogil:
        for i in range(M):
            li = 0 if a[i] == 0 else level - c_v2(a[i])
            for j in range(M):
                lj = 0 if a[j] == 0 else level - c_v2(a[j])
                s = a[i] + a[j]
                ls = 0
                if s != 0:
                    ls = level - c_v2(s)
                    if ls < 0:
                        ls = 0
                e = ls - (li if li > lj else lj)
                if e > add:
                    add = e
                if a[i] != 0 and a[j] != 0:
                    pr = a[i] * a[j]
                    lp = 2 * level - c_v2(pr)
                    if lp < 0:
                        lp = 0
                    e = lp - li - lj
                    if e > mul:
                        mul = e
    return add, mul


cdef inline int c_deg(i64* v, Py_ssize_t n, i64 p) nogil:
    cdef Py_ssize_t i
    for i in range(n - 1, -1, -1):
        if v[i] % p != 0:
            return <int>i
    return 0


def fp_pair_excess(polys, long p):
    cdef i64[:, ::1] a = np.ascontiguousarray(polys, dtype=np.int64)
    cdef Py_ssize_t M = a.shape[0], D = a.shape[1], i, j, u, w
    cdef int add = -1000000000, mul = -1000000000, e
    buf_s = np.zeros(D, dtype=np.int64)
    buf_p = np.zeros(2 * D, dtype=np.int64)
    degs = np.zeros(M, dtype=np.int32)
    cdef i64[::1] S = buf_s
    cdef i64[::1] Pr = buf_p
    cdef int[::1] dg = degs
    cdef bint nz_i, nz_j
    for i in range(M):
        dg[i] = c_deg(&a[i, 0], D, p)
    with nogil:
        for i in range(M):
            nz_i = False
            for u in range(D):
                if a[i, u] % p != 0:
                    nz_i = True
            for j in range(M):
                for u in range(D):
                    S[u] = (a[i, u] + a[j, u]) % p
                e = c_deg(&S[0], D, p) - (dg[i] if dg[i] > dg[j] else dg[j])
                if e > add:
                    add = e
                nz_j = False
                for u in range(D):
                    if a[j, u] % p != 0:
                        nz_j = True
                if nz_i and nz_j:
                    for u in range(2 * D):
                        Pr[u] = 0
                    for u in range(D):
                        if a[i, u] != 0:
                            for w in range(D):
                                Pr[u + w] += a[i, u] * a[j, w]
                    e = c_deg(&Pr[0], 2 * D, p) - dg[i] - dg[j]
                    if e > mul:
                        mul = e
    return add, mul


def fp_poly_valuations(coeffs, exps, points, long p, int prec):
    cdef i64[:, ::1] C = np.ascontiguousarray(coeffs, dtype=np.int64)
    cdef i64[:, ::1] E = np.ascontiguousarray(exps, dtype=np.int64)
    cdef i64[:, :, ::1] X = np.ascontiguousarray(points, dtype=np.int64)
    cdef Py_ssize_t T = C.shape[0], S = X.shape[0], NV = E.shape[1]
    cdef Py_ssize_t s, t, var, u, w, k
    out = np.empty(S, dtype=np.int64)
    cdef i64[::1] O = out
    acc_a = np.zeros(prec, dtype=np.int64)
    term_a = np.zeros(prec, dtype=np.int64)
    nt_a = np.zeros(prec, dtype=np.int64)
    cdef i64[::1] acc = acc_a
    cdef i64[::1] term = term_a
    cdef i64[::1] nt = nt_a
    cdef i64 tu
    with nogil:
        for s in range(S):
            for u in range(prec):
                acc[u] = 0
            for t in range(T):
                for u in range(prec):
                    term[u] = C[t, u] if u < C.shape[1] else 0
                for var in range(NV):
                    for k in range(E[t, var]):
                        for u in range(prec):
                            nt[u] = 0
                        for u in range(prec):
                            tu = term[u]
                            if tu != 0:
                                for w in range(prec - u):
                                    if X[s, var, w] != 0:
                                        nt[u + w] += tu * X[s, var, w]
                        for u in range(prec):
                            term[u] = nt[u] % p
                for u in range(prec):
                    acc[u] = (acc[u] + term[u]) % p
            O[s] = prec
            for u in range(prec):
                if acc[u] != 0:
                    O[s] = u
                    break
    return out
