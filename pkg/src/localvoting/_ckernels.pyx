# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the slot-table kernels in _pykernels."""
import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef cnp.uint8_t u8
ctypedef cnp.int64_t i64


def block_counts(const u8[:, ::1] X, const i64[::1] members):
    cdef Py_ssize_t S = X.shape[1], m, s
    out = np.zeros(S, dtype=np.int32)
    cdef int[::1] c = out
    cdef i64 k
    for m in range(members.shape[0]):
        k = members[m]
        for s in range(S):
            c[s] += X[k, s]
    return out


cdef inline void _counts(const u8[:, ::1] X, const i64[::1] members, int* c) nogil:
    cdef Py_ssize_t S = X.shape[1], m, s
    cdef i64 k
    for s in range(S):
        c[s] = 0
    for m in range(members.shape[0]):
        k = members[m]
        for s in range(S):
            c[s] += X[k, s]


def free_slots(const u8[:, ::1] X, const i64[::1] members, Py_ssize_t limit):
    cdef Py_ssize_t S = X.shape[1], s
    out = []
    if limit <= 0:
        return out
    cdef int[::1] c = np.empty(S, dtype=np.int32)
    _counts(X, members, &c[0])
    for s in range(S):
        if c[s] == 0:
            out.append(s)
            if len(out) >= limit:
                break
    return out


def transferable_slots(const u8[:, ::1] X, const i64[::1] members, Py_ssize_t donor,
                       Py_ssize_t limit):
    cdef Py_ssize_t S = X.shape[1], s
    out = []
    if limit <= 0:
        return out
    cdef int[::1] c = np.empty(S, dtype=np.int32)
    _counts(X, members, &c[0])
    for s in range(S):
        if X[donor, s] == 1 and c[s] == 1:
            out.append(s)
            if len(out) >= limit:
                break
    return out


def exchange_donors(const u8[:, ::1] X, const i64[::1] members, candidates):
    cdef Py_ssize_t S = X.shape[1], s
    out = []
    if len(candidates) == 0:
        return out
    cdef int[::1] c = np.empty(S, dtype=np.int32)
    _counts(X, members, &c[0])
    cdef Py_ssize_t j
    for cand in candidates:
        j = cand
        for s in range(S):
            if X[j, s] == 1 and c[s] == 1:
                out.append(int(j))
                break
    return out


def greedy_admit(order, const u8[:, ::1] conflict):
    cdef Py_ssize_t n = conflict.shape[0], k
    cdef Py_ssize_t v
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] taken_arr = np.zeros(n, dtype=np.uint8)
    cdef u8[::1] taken = taken_arr
    out = []
    for item in order:
        v = item
        if taken[v]:
            continue
        out.append(int(v))
        taken[v] = 1
        for k in range(n):
            if conflict[v, k]:
                taken[k] = 1
    return out


def lqf_order(q):
    cdef i64[::1] qv = np.ascontiguousarray(q, dtype=np.int64)
    cdef Py_ssize_t n = qv.shape[0], i, j, m = 0
    cdef cnp.ndarray[i64, ndim=1] idx_arr = np.empty(n, dtype=np.int64)
    cdef i64[::1] idx = idx_arr
    cdef i64 key
    for i in range(n):
        if qv[i] > 0:
            # insertion sort: descending q, ascending id on ties
            j = m
            while j > 0 and qv[idx[j - 1]] < qv[i]:
                idx[j] = idx[j - 1]
                j -= 1
            idx[j] = i
            m += 1
    return [int(idx[i]) for i in range(m)]


def lyui_winners(eff_in, const u8[:, ::1] conflict):
    cdef i64[::1] eff = np.ascontiguousarray(eff_in, dtype=np.int64)
    cdef Py_ssize_t n = eff.shape[0], i, k
    cdef bint win
    out = []
    for i in range(n):
        if eff[i] <= 0:
            continue
        win = True
        for k in range(n):
            if conflict[i, k] and eff[k] >= eff[i]:
                win = False
                break
        if win:
            out.append(int(i))
    return out
