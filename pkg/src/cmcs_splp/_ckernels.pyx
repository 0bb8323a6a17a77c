# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled neighbourhood kernels.

Every function mirrors one in ``_pykernels`` exactly: same arguments, same
return tuple, same tie-breaking.  "Closer" always means lower rank in the
per-client site ordering, i.e. lower cost with the lower site index winning
ties.  Returned ``work`` counts inner-loop steps and drives the deterministic
work budget.
"""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int32_t, int64_t, uint8_t

cnp.import_array()

ctypedef int64_t cost_t
ctypedef int32_t idx_t

cdef cost_t BIG = 1 << 62


def assign(const idx_t[:, ::1] order, const cost_t[:, ::1] C,
           const uint8_t[::1] y, idx_t[::1] p, idx_t[::1] q):
    cdef Py_ssize_t n = order.shape[0], m = order.shape[1]
    cdef Py_ssize_t j, r, found
    cdef idx_t i
    cdef cost_t total = 0
    cdef int64_t work = 0
    for j in range(n):
        found = 0
        for r in range(m):
            i = order[j, r]
            if y[i]:
                if found == 0:
                    p[j] = i
                    total += C[i, j]
                    found = 1
                else:
                    q[j] = i
                    found = 2
                    work += r + 1
                    break
        if found < 2:
            raise ValueError("at least two sites must be open")
    return total, work


def open_site(const cost_t[:, ::1] C, const idx_t[:, ::1] rank,
              uint8_t[::1] y, idx_t[::1] p, idx_t[::1] q, idx_t s):
    cdef Py_ssize_t n = C.shape[1], j
    cdef idx_t rs
    cdef cost_t delta = 0
    for j in range(n):
        rs = rank[s, j]
        if rs < rank[p[j], j]:
            delta += C[s, j] - C[p[j], j]
            q[j] = p[j]
            p[j] = s
        elif rs < rank[q[j], j]:
            q[j] = s
    y[s] = 1
    return delta, n


cdef inline idx_t _second(const idx_t[:, ::1] rank, const idx_t[::1] opened,
                          Py_ssize_t count, idx_t first, Py_ssize_t j):
    cdef Py_ssize_t k
    cdef idx_t best = -1, i, br = 0x7fffffff
    for k in range(count):
        i = opened[k]
        if i != first and rank[i, j] < br:
            br = rank[i, j]
            best = i
    return best


def close_site(const cost_t[:, ::1] C, const idx_t[:, ::1] rank,
               uint8_t[::1] y, idx_t[::1] p, idx_t[::1] q, idx_t s):
    cdef Py_ssize_t m = C.shape[0], n = C.shape[1], j, i, count = 0
    cdef cost_t delta = 0
    cdef int64_t work = m + n
    y[s] = 0
    cdef idx_t[::1] opened = np.empty(m, dtype=np.int32)
    for i in range(m):
        if y[i]:
            opened[count] = i
            count += 1
    if count < 2:
        y[s] = 1
        raise ValueError("closing would leave fewer than two open sites")
    for j in range(n):
        if p[j] == s:
            delta += C[q[j], j] - C[s, j]
            p[j] = q[j]
            q[j] = _second(rank, opened, count, p[j], j)
            work += count
        elif q[j] == s:
            q[j] = _second(rank, opened, count, p[j], j)
            work += count
    return delta, work


cdef int64_t _open_gains(const cost_t[:, ::1] C, const idx_t[:, ::1] order,
                         const cost_t[:, ::1] S, const idx_t[:, ::1] rank,
                         const idx_t[::1] p, cost_t[::1] gain):
    # gain[i] += c_ij - c_p(j)j over sites ranked before p(j); S keeps each
    # client's costs in rank order so the scan reads memory sequentially
    cdef Py_ssize_t n = C.shape[1], j, r, lim
    cdef idx_t pj
    cdef cost_t cp
    cdef int64_t work = 0
    for j in range(n):
        pj = p[j]
        cp = C[pj, j]
        lim = rank[pj, j]
        for r in range(lim):
            gain[order[j, r]] += S[j, r] - cp
        work += lim + 1
    return work


def open_best(const cost_t[::1] F, const cost_t[:, ::1] C,
              const idx_t[:, ::1] order, const cost_t[:, ::1] S,
              const idx_t[:, ::1] rank, const uint8_t[::1] y, const idx_t[::1] p):
    cdef Py_ssize_t m = C.shape[0], i
    cdef cost_t[::1] gain = np.zeros(m, dtype=np.int64)
    cdef int64_t work = _open_gains(C, order, S, rank, p, gain) + m
    cdef idx_t best = -1
    cdef cost_t bd = BIG, d
    for i in range(m):
        if not y[i]:
            d = F[i] + gain[i]
            if d < bd:
                bd = d
                best = i
    return best, (bd if best >= 0 else 0), work


def open_best_naive(const cost_t[::1] F, const cost_t[:, ::1] C,
                    const uint8_t[::1] y, const idx_t[::1] p):
    cdef Py_ssize_t m = C.shape[0], n = C.shape[1], i, j
    cdef idx_t best = -1
    cdef cost_t bd = BIG, d, diff
    for i in range(m):
        if y[i]:
            continue
        d = F[i]
        for j in range(n):
            diff = C[i, j] - C[p[j], j]
            if diff < 0:
                d += diff
        if d < bd:
            bd = d
            best = i
    return best, (bd if best >= 0 else 0), m * n


def close_best(const cost_t[::1] F, const cost_t[:, ::1] C,
               const uint8_t[::1] y, const idx_t[::1] p, const idx_t[::1] q):
    cdef Py_ssize_t m = C.shape[0], n = C.shape[1], i, j
    cdef cost_t[::1] loss = np.zeros(m, dtype=np.int64)
    for j in range(n):
        loss[p[j]] += C[q[j], j] - C[p[j], j]
    cdef idx_t best = -1
    cdef cost_t bd = BIG, d
    for i in range(m):
        if y[i]:
            d = loss[i] - F[i]
            if d < bd:
                bd = d
                best = i
    return best, (bd if best >= 0 else 0), m + n


def exchange_best(const cost_t[::1] F, const cost_t[:, ::1] C,
                  const idx_t[:, ::1] order, const cost_t[:, ::1] S,
                  const idx_t[:, ::1] rank, const uint8_t[::1] y,
                  const idx_t[::1] p, const idx_t[::1] q):
    cdef Py_ssize_t m = C.shape[0], n = C.shape[1], i, j, r, k, lim, count = 0
    cdef idx_t pj, qj, row, best_r = -1, best_i = -1
    cdef cost_t cp, cq, ci, bd = BIG, base, d
    cdef idx_t[::1] pos = np.full(m, -1, dtype=np.int32)
    cdef idx_t[::1] opened = np.empty(m, dtype=np.int32)
    for i in range(m):
        if y[i]:
            pos[i] = count
            opened[count] = i
            count += 1
    if count == m:
        return -1, -1, 0, m
    cdef cost_t[::1] gain = np.zeros(m, dtype=np.int64)
    cdef cost_t[::1] loss = np.zeros(m, dtype=np.int64)
    cdef cost_t[:, ::1] extra = np.zeros((count, m), dtype=np.int64)
    cdef int64_t work = _open_gains(C, order, S, rank, p, gain)
    for j in range(n):
        pj = p[j]
        qj = q[j]
        cp = C[pj, j]
        cq = C[qj, j]
        loss[pj] += cq - cp
        row = pos[pj]
        lim = rank[qj, j]
        for r in range(lim):
            i = order[j, r]
            if not y[i]:
                ci = S[j, r]
                extra[row, i] += cq - (ci if ci > cp else cp)
        work += lim + 1
    for k in range(count):
        r = opened[k]
        base = loss[r] - F[r]
        for i in range(m):
            if not y[i]:
                d = base + F[i] + gain[i] - extra[k, i]
                if d < bd:
                    bd = d
                    best_r = r
                    best_i = i
    work += count * m
    return best_r, best_i, bd, work


def exchange_fixed(const cost_t[::1] F, const cost_t[:, ::1] C,
                   const idx_t[:, ::1] order, const cost_t[:, ::1] S,
                   const idx_t[:, ::1] rank, const uint8_t[::1] y,
                   const idx_t[::1] p, const idx_t[::1] q, idx_t s):
    cdef Py_ssize_t m = C.shape[0], n = C.shape[1], i, j, r, lim
    cdef idx_t qj, best = -1
    cdef cost_t cp, cq, ci, loss = 0, bd = BIG, d
    cdef cost_t[::1] gain = np.zeros(m, dtype=np.int64)
    cdef int64_t work = _open_gains(C, order, S, rank, p, gain) + m
    for j in range(n):
        if p[j] != s:
            continue
        qj = q[j]
        cp = C[s, j]
        cq = C[qj, j]
        loss += cq - cp
        lim = rank[qj, j]
        for r in range(lim):
            i = order[j, r]
            if not y[i]:
                ci = S[j, r]
                gain[i] -= cq - (ci if ci > cp else cp)
        work += lim + 1
    for i in range(m):
        if not y[i]:
            d = F[i] + gain[i]
            if d < bd:
                bd = d
                best = i
    if best < 0:
        return -1, 0, work
    return best, bd + loss - F[s], work
