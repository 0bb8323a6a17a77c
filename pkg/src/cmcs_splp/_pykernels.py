"""Pure Python/numpy implementations of the neighbourhood kernels.

Semantics match ``_ckernels`` one for one.  The rank-bounded scans are
expressed as masked whole-matrix numpy operations here, so the asymptotic
savings of the compiled core do not carry over; ``work`` is still counted
the way the compiled kernels count it so both backends consume a work
budget identically.
"""

import numpy as np

BIG = 1 << 62


def _cols(n):
    return np.arange(n)


def assign(order, C, y, p, q):
    n, m = order.shape
    if int(np.count_nonzero(y)) < 2:
        raise ValueError("at least two sites must be open")
    is_open = y.astype(bool)[order]  # n x m, per-client ordering
    # first and second open positions in each client's ordering
    first = np.argmax(is_open, axis=1)
    is_open[np.arange(n), first] = False
    second = np.argmax(is_open, axis=1)
    p[:] = order[np.arange(n), first]
    q[:] = order[np.arange(n), second]
    total = int(C[p, _cols(n)].sum())
    return total, int((second + 1).sum())


def open_site(C, rank, y, p, q, s):
    n = C.shape[1]
    cols = _cols(n)
    rs = rank[s]
    closer = rs < rank[p, cols]
    second = ~closer & (rs < rank[q, cols])
    delta = int((C[s, closer] - C[p[closer], cols[closer]]).sum())
    q[closer] = p[closer]
    p[closer] = s
    q[second] = s
    y[s] = 1
    return delta, n


def _second_open(rank, opened, first, cols):
    # closest open site other than first(j), for each client in cols
    sub = rank[np.ix_(opened, cols)].astype(np.int64)
    sub[opened[:, None] == first[None, :]] = np.iinfo(np.int64).max
    return opened[np.argmin(sub, axis=0)]


def close_site(C, rank, y, p, q, s):
    m, n = C.shape
    y[s] = 0
    opened = np.flatnonzero(y).astype(np.int32)
    if len(opened) < 2:
        y[s] = 1
        raise ValueError("closing would leave fewer than two open sites")
    work = m + n
    lost = np.flatnonzero(p == s)
    delta = 0
    if len(lost):
        delta = int((C[q[lost], lost] - C[s, lost]).sum())
        p[lost] = q[lost]
        q[lost] = _second_open(rank, opened, p[lost], lost)
    demoted = np.flatnonzero(q == s)
    if len(demoted):
        q[demoted] = _second_open(rank, opened, p[demoted], demoted)
    work += (len(lost) + len(demoted)) * len(opened)
    return delta, work


def _open_gains(C, rank, p):
    n = C.shape[1]
    cols = _cols(n)
    rp = rank[p, cols]
    cp = C[p, cols]
    mask = rank < rp[None, :]
    gain = np.where(mask, C - cp[None, :], 0).sum(axis=1)
    return gain, int((rp + 1).sum())


def _argmin_closed(values, y):
    closed = np.flatnonzero(y == 0)
    if len(closed) == 0:
        return -1, 0
    k = int(np.argmin(values[closed]))
    return int(closed[k]), int(values[closed[k]])


def open_best(F, C, order, S, rank, y, p):
    gain, work = _open_gains(C, rank, p)
    best, delta = _argmin_closed(F + gain, y)
    return best, delta, work + C.shape[0]


def open_best_naive(F, C, y, p):
    m, n = C.shape
    diff = C - C[p, _cols(n)][None, :]
    delta = F + np.minimum(diff, 0).sum(axis=1)
    best, d = _argmin_closed(delta, y)
    return best, d, m * n


def close_best(F, C, y, p, q):
    m, n = C.shape
    cols = _cols(n)
    loss = np.zeros(m, dtype=np.int64)
    np.add.at(loss, p, C[q, cols] - C[p, cols])
    opened = np.flatnonzero(y)
    if len(opened) == 0:
        return -1, 0, m + n
    delta = loss[opened] - F[opened]
    k = int(np.argmin(delta))
    return int(opened[k]), int(delta[k]), m + n


def _extra_terms(C, rank, p, q, clients):
    """Per (site i, client j in clients): max(0, c_qj - max(c_ij, c_pj))."""
    cp = C[p[clients], clients]
    cq = C[q[clients], clients]
    sub = C[:, clients]
    return np.maximum(0, cq[None, :] - np.maximum(sub, cp[None, :]))


def exchange_best(F, C, order, S, rank, y, p, q):
    m, n = C.shape
    cols = _cols(n)
    opened = np.flatnonzero(y)
    if len(opened) == m:
        return -1, -1, 0, m
    gain, work = _open_gains(C, rank, p)
    loss = np.zeros(m, dtype=np.int64)
    np.add.at(loss, p, C[q, cols] - C[p, cols])
    work += int((rank[q, cols] + 1).sum()) + len(opened) * m

    by_p = np.argsort(p, kind="stable")
    extra_cols = _extra_terms(C, rank, p, q, by_p)  # m x n, clients grouped by p
    groups, starts = np.unique(p[by_p], return_index=True)
    extra = np.zeros((len(opened), m), dtype=np.int64)
    row_of = np.full(m, -1)
    row_of[opened] = np.arange(len(opened))
    extra[row_of[groups]] = np.add.reduceat(extra_cols, starts, axis=1).T

    delta = (loss[opened] - F[opened])[:, None] + (F + gain)[None, :] - extra
    delta[:, opened] = BIG
    k = int(np.argmin(delta))  # row-major: lowest closing site, then opening site
    r, i = divmod(k, m)
    return int(opened[r]), int(i), int(delta[r, i]), work


def exchange_fixed(F, C, order, S, rank, y, p, q, s):
    m, n = C.shape
    gain, work = _open_gains(C, rank, p)
    work += m
    clients = np.flatnonzero(p == s)
    loss = 0
    if len(clients):
        loss = int((C[q[clients], clients] - C[s, clients]).sum())
        gain = gain - _extra_terms(C, rank, p, q, clients).sum(axis=1)
        work += int((rank[q[clients], clients] + 1).sum())
    best, d = _argmin_closed(F + gain, y)
    if best < 0:
        return -1, 0, work
    return best, d + loss - int(F[s]), work
