"""Compiled inner loops.  Everything here works on raw CSR arrays."""

import numpy as np
from numba import njit

CYC, ARGMAX, GREEDY = 0, 1, 2

# advance() status codes
BUDGET, BOUND_REACHED, NO_FLUID = 0, 1, 2


@njit(cache=True)
def diffuse(indptr, indices, probs, F, H, d, i):
    """One elementary diffusion of node i; returns (fluid consumed, change of sum|F|)."""
    f = F[i]
    H[i] += f
    F[i] = 0.0
    delta = -abs(f)
    if f != 0.0:
        df = d * f
        for pos in range(indptr[i], indptr[i + 1]):
            j = indices[pos]
            old = F[j]
            new = old + df * probs[pos]
            F[j] = new
            delta += abs(new) - abs(old)
    return f, delta


# --- max-heap on (|F|, -id) with lazy invalidation -------------------------


@njit(cache=True)
def _before(ka, ia, kb, ib):
    return ka > kb or (ka == kb and ia < ib)


@njit(cache=True)
def _sift_down(keys, ids, size, pos):
    while True:
        left = 2 * pos + 1
        if left >= size:
            return
        best = left
        right = left + 1
        if right < size and _before(keys[right], ids[right], keys[left], ids[left]):
            best = right
        if _before(keys[best], ids[best], keys[pos], ids[pos]):
            keys[pos], keys[best] = keys[best], keys[pos]
            ids[pos], ids[best] = ids[best], ids[pos]
            pos = best
        else:
            return


@njit(cache=True)
def _sift_up(keys, ids, pos):
    while pos > 0:
        parent = (pos - 1) // 2
        if _before(keys[pos], ids[pos], keys[parent], ids[parent]):
            keys[pos], keys[parent] = keys[parent], keys[pos]
            ids[pos], ids[parent] = ids[parent], ids[pos]
            pos = parent
        else:
            return


@njit(cache=True)
def _heap_build(F, keys, ids):
    size = 0
    for i in range(F.shape[0]):
        v = abs(F[i])
        if v > 0.0:
            keys[size] = v
            ids[size] = i
            size += 1
    for pos in range(size // 2 - 1, -1, -1):
        _sift_down(keys, ids, size, pos)
    return size


@njit(cache=True)
def _heap_pop(keys, ids, size):
    size -= 1
    keys[0] = keys[size]
    ids[0] = ids[size]
    _sift_down(keys, ids, size, 0)
    return size


@njit(cache=True)
def _heap_push(F, keys, ids, size, key, node):
    if size == keys.shape[0]:
        return _heap_build(F, keys, ids)
    keys[size] = key
    ids[size] = node
    _sift_up(keys, ids, size)
    return size + 1


@njit(cache=True)
def _scan_argmax(F, order, cursor, threshold):
    """Cyclic scan for |F| >= threshold; returns (position or -1, skipped)."""
    n = order.shape[0]
    pos = cursor
    for skipped in range(n):
        if abs(F[order[pos]]) >= threshold:
            return pos, skipped
        pos += 1
        if pos == n:
            pos = 0
    return -1, n


@njit(cache=True)
def _first_max(F, order, cursor):
    n = order.shape[0]
    best = cursor
    pos = cursor
    for _ in range(n):
        if abs(F[order[pos]]) > abs(F[order[best]]):
            best = pos
        pos += 1
        if pos == n:
            pos = 0
    return best


@njit(cache=True, nogil=True)
def advance(indptr, indices, probs, dangling, F, H, d, kind, order, cursor,
            f_abs, leak, max_steps, stop_bound):
    """Run up to ``max_steps`` scheduled diffusions.

    Stops early once ``f_abs / (1 - d - d*leak) <= stop_bound`` or the
    fluid is identically zero (argmax/greedy).  Returns
    (steps, scans, cursor, f_abs, leak, status).
    """
    n = F.shape[0]
    steps = 0
    scans = 0
    status = BUDGET
    since_refresh = 0
    cap = 4 * n + 16
    keys = np.empty(cap if kind == GREEDY else 0)
    ids = np.empty(cap if kind == GREEDY else 0, dtype=np.int64)
    size = 0
    if kind == GREEDY:
        size = _heap_build(F, keys, ids)

    while True:
        denom = 1.0 - d - d * leak
        if denom > 1e-15 and f_abs / denom <= stop_bound:
            status = BOUND_REACHED
            break
        if steps >= max_steps:
            break

        if kind == CYC:
            i = order[cursor]
            cursor += 1
            if cursor == n:
                cursor = 0
        elif kind == ARGMAX:
            pos, skipped = _scan_argmax(F, order, cursor, f_abs / n)
            scans += skipped
            if pos < 0:
                f_abs = np.abs(F).sum()
                since_refresh = 0
                if f_abs == 0.0:
                    status = NO_FLUID
                    break
                pos, skipped = _scan_argmax(F, order, cursor, f_abs / n)
                scans += skipped
                if pos < 0:
                    pos = _first_max(F, order, cursor)
            i = order[pos]
            cursor = pos + 1
            if cursor == n:
                cursor = 0
        else:
            i = -1
            while size > 0:
                k0 = keys[0]
                i0 = ids[0]
                if k0 == abs(F[i0]):
                    i = i0
                    break
                size = _heap_pop(keys, ids, size)
                scans += 1
            if i < 0:
                status = NO_FLUID
                f_abs = 0.0
                break
            size = _heap_pop(keys, ids, size)

        f, delta = diffuse(indptr, indices, probs, F, H, d, i)
        f_abs += delta
        if f_abs < 0.0:
            f_abs = 0.0
        if dangling[i]:
            leak += f
        if kind == GREEDY and f != 0.0:
            for p in range(indptr[i], indptr[i + 1]):
                j = indices[p]
                v = abs(F[j])
                if v > 0.0:
                    size = _heap_push(F, keys, ids, size, v, j)
        steps += 1
        since_refresh += 1
        if since_refresh >= n:
            f_abs = np.abs(F).sum()
            since_refresh = 0

    return steps, scans, cursor, f_abs, leak, status


@njit(cache=True, nogil=True)
def advance_opic(indptr, indices, probs, dangling, F, H, snap, pool, d, kind,
                 order, cursor, n_steps, threshold):
    """OPIC push steps on the damped stochastic emulation matrix.

    The uniform part of that matrix is carried by the scalar ``pool``:
    node i is owed ``(pool - snap[i]) / n`` on top of ``F[i]``.
    Returns (pool, cursor, scans).
    """
    n = F.shape[0]
    scans = 0
    for _ in range(n_steps):
        if kind == CYC:
            pos = cursor
        else:
            pos = cursor
            found = False
            for _s in range(n):
                node = order[pos]
                if F[node] + (pool - snap[node]) / n >= threshold:
                    found = True
                    break
                scans += 1
                pos += 1
                if pos == n:
                    pos = 0
            if not found:
                best = cursor
                best_v = -1.0
                pos = cursor
                for _s in range(n):
                    node = order[pos]
                    v = F[node] + (pool - snap[node]) / n
                    if v > best_v:
                        best_v = v
                        best = pos
                    pos += 1
                    if pos == n:
                        pos = 0
                pos = best
        j = order[pos]
        cursor = pos + 1
        if cursor == n:
            cursor = 0

        f = F[j] + (pool - snap[j]) / n
        H[j] += f
        F[j] = 0.0
        snap[j] = pool
        if dangling[j]:
            pool += f
        else:
            df = d * f
            for p in range(indptr[j], indptr[j + 1]):
                F[indices[p]] += df * probs[p]
            pool += (1.0 - d) * f
    return pool, cursor, scans


@njit(cache=True, nogil=True)
def gs_sweep(rindptr, rindices, rdata, x, d, Z, dangling, completed):
    """One in-place ascending Gauss-Seidel sweep; returns the L1 change."""
    n = x.shape[0]
    dmass = 0.0
    if completed:
        for i in range(n):
            if dangling[i]:
                dmass += x[i]
    change = 0.0
    for i in range(n):
        s = 0.0
        for p in range(rindptr[i], rindptr[i + 1]):
            s += rdata[p] * x[rindices[p]]
        new = d * s + (1.0 - d) * Z[i]
        if completed:
            new += d * dmass * Z[i]
        old = x[i]
        x[i] = new
        change += abs(new - old)
        if completed and dangling[i]:
            dmass += new - old
    return change
