"""JIT kernels for the probing table and workload replay.

Slot arrays are 1-based (index 0 unused): tag int8 (0 empty / 1 element /
2 tombstone), stored hash int64, key uint64. Hash-order comparisons inside a
run use run-relative displacement, (position - stored_hash) mod n under
wrap-around, which stays correct when runs wrap the table boundary.

The bulk driver `run_ops` replays a pre-hashed operation sequence, maintains
the rebuild policy (none / every-R-insertions / graveyard), accumulates
per-window statistics, and optionally writes one instrumentation record per
operation. The Python-level single-op API drives the same kernels, so there
is exactly one implementation of the operation semantics.
"""

import numpy as np
from numba import njit

# slot tags
EMPTY = 0
ELEM = 1
TOMB = 2

# rebuild policies
POLICY_NEVER = 0
POLICY_EVERY_R = 1
POLICY_GRAVEYARD = 2

# driver / kernel statuses
OK = 0
ERR_DUPLICATE = 1
ERR_OVERFLOW = 2
ERR_FULL = 3
ERR_NOT_FOUND = 4
ERR_WINDOWS_FULL = 5
RESIZE_REQUEST = 6
ERR_OVERFULL = 7

# state vector indices
S_ELEMS = 0
S_TOMBS = 1
S_INS_SINCE = 2
S_OPS_SINCE = 3
S_BUDGET = 4
S_WINDOW = 5
STATE_LEN = 6

# float state indices
F_XPARAM = 0
F_XLAST = 1
FSTATE_LEN = 2

# per-window statistics columns
W_INS_COUNT = 0
W_INS_PROBES = 1
W_INS_DISP = 2
W_DEL_COUNT = 3
W_DEL_PROBES = 4
W_Q_COUNT = 5
W_Q_PROBES = 6
W_REBUILD_SLOTS = 7
W_TOMB_CONSUMED = 8
W_XNOW = 9
W_END_ELEMS = 10
W_OPS = 11
WSTAT_LEN = 12

# instrumentation record columns
R_KIND = 0          # 0 insert, 1 delete, 2 query hit, 3 query miss
R_HASH = 1
R_PROBES = 2
R_DISP = 3
R_PEAK = 4
R_CONSUMED_KIND = 5  # 0 free slot, 1 tombstone, 2 none
R_CONSUMED_POS = 6
R_CONSUMED_HASH = 7
R_SPAN_START = 8
R_SPAN_END = 9
R_WINDOW = 10
REC_LEN = 11

# workload op kinds
OP_INSERT = 0
OP_DELETE = 1
OP_QUERY = 2

_GOLDEN = 0x9E3779B97F4A7C15
_U = np.uint64
_S32 = _U(32)
_MASK32 = _U(0xFFFFFFFF)


@njit(cache=True, nogil=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> _U(30))) * _U(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> _U(27))) * _U(0x94D049BB133111EB)
    return z ^ (z >> _U(31))


@njit(cache=True, nogil=True, inline="always")
def _rng_out(state):
    """Output for a splitmix64 counter state."""
    return _mix64(state * _U(_GOLDEN))


@njit(cache=True, nogil=True, inline="always")
def _randbelow(z, m):
    """Map a uniform uint64 draw onto [0, m) by multiply-shift (m < 2^32)."""
    um = _U(m)
    lo = (z & _MASK32) * um
    hi = (z >> _S32) * um
    return np.int64((hi + (lo >> _S32)) >> _S32)


@njit(cache=True, nogil=True)
def insert_kernel(tag, hsh, key, n, size, wrap, h, k):
    """Ordered insert of key k with hash h.

    Returns (status, probes, displacement, peak, consumed_kind, consumed_pos,
    consumed_hash, terminal_pos). Scan stops where k belongs in hash order
    (equal-hash tombstones and larger-key equal-hash elements stop it); the
    displaced suffix then shifts right one slot until the first tombstone or
    empty slot absorbs it.
    """
    t = np.int64(0)
    p = h
    while True:
        tg = tag[p]
        if tg == EMPTY:
            tag[p] = ELEM
            hsh[p] = h
            key[p] = k
            return OK, t + 1, t, p, 0, p, np.int64(-1), p
        d = p - hsh[p]
        if wrap and d < 0:
            d += n
        if d < t:
            break
        if d == t:
            if tg == TOMB:
                break
            if key[p] == k:
                return ERR_DUPLICATE, t + 1, np.int64(-1), np.int64(-1), 2, np.int64(-1), np.int64(-1), p
            if key[p] > k:
                break
        t += 1
        if wrap:
            p = p + 1 if p < n else 1
            if t > n:
                return ERR_FULL, t, np.int64(-1), np.int64(-1), 2, np.int64(-1), np.int64(-1), p
        else:
            p += 1
            if p > size:
                return ERR_OVERFLOW, t, np.int64(-1), np.int64(-1), 2, np.int64(-1), np.int64(-1), size

    # shift phase: carry the new element right until a tombstone/free slot
    carry_h = h
    carry_k = k
    steps = np.int64(0)
    while True:
        tg = tag[p]
        if tg == ELEM:
            th = hsh[p]
            tk = key[p]
            hsh[p] = carry_h
            key[p] = carry_k
            carry_h = th
            carry_k = tk
            t += 1
            steps += 1
            if wrap:
                p = p + 1 if p < n else 1
                if steps > size:
                    return ERR_FULL, t, np.int64(-1), np.int64(-1), 2, np.int64(-1), np.int64(-1), p
            else:
                p += 1
                if p > size:
                    return ERR_OVERFLOW, t, np.int64(-1), np.int64(-1), 2, np.int64(-1), np.int64(-1), size
        elif tg == TOMB:
            tomb_hash = hsh[p]
            tag[p] = ELEM
            hsh[p] = carry_h
            key[p] = carry_k
            disp = tomb_hash - h
            if wrap and disp < 0:
                disp += n
            return OK, t + 1, disp, tomb_hash, 1, p, tomb_hash, p
        else:
            tag[p] = ELEM
            hsh[p] = carry_h
            key[p] = carry_k
            return OK, t + 1, t, p, 0, p, np.int64(-1), p


@njit(cache=True, nogil=True)
def tombstone_insert_kernel(tag, hsh, key, n, size, wrap, h):
    """Insert an artificial tombstone with assigned hash h through the
    ordered path (it shifts elements exactly like an element insert).

    Returns (status, consumed_existing_tombstone, terminal_pos).
    """
    t = np.int64(0)
    p = h
    while True:
        tg = tag[p]
        if tg == EMPTY:
            tag[p] = TOMB
            hsh[p] = h
            key[p] = _U(0)
            return OK, False, p
        d = p - hsh[p]
        if wrap and d < 0:
            d += n
        if d <= t:
            break
        t += 1
        if wrap:
            p = p + 1 if p < n else 1
            if t > n:
                return ERR_FULL, False, p
        else:
            p += 1
            if p > size:
                return ERR_OVERFLOW, False, size

    carry_tag = np.int8(TOMB)
    carry_h = h
    carry_k = _U(0)
    steps = np.int64(0)
    while True:
        tg = tag[p]
        if tg == ELEM:
            th = hsh[p]
            tk = key[p]
            tag[p] = carry_tag
            hsh[p] = carry_h
            key[p] = carry_k
            carry_tag = np.int8(ELEM)
            carry_h = th
            carry_k = tk
            steps += 1
            if wrap:
                p = p + 1 if p < n else 1
                if steps > size:
                    return ERR_FULL, False, p
            else:
                p += 1
                if p > size:
                    return ERR_OVERFLOW, False, size
        elif tg == TOMB:
            tag[p] = carry_tag
            hsh[p] = carry_h
            key[p] = carry_k
            return OK, True, p
        else:
            tag[p] = carry_tag
            hsh[p] = carry_h
            key[p] = carry_k
            return OK, False, p


@njit(cache=True, nogil=True)
def query_kernel(tag, hsh, key, n, size, wrap, h, k):
    """Probe for key k with hash h.

    Returns (found, probes, terminal_pos); probes counts every slot examined
    including the terminating one. Tombstones never match but their stored
    hash participates in the early-termination comparison like an element's.
    """
    t = np.int64(0)
    p = h
    while True:
        tg = tag[p]
        if tg == EMPTY:
            return False, t + 1, p
        d = p - hsh[p]
        if wrap and d < 0:
            d += n
        if d < t:
            return False, t + 1, p
        if tg == ELEM and key[p] == k:
            return True, t + 1, p
        t += 1
        if wrap:
            p = p + 1 if p < n else 1
            if t > n + 1:
                return False, t, p
        else:
            p += 1
            if p > size:
                return False, t, size


@njit(cache=True, nogil=True)
def delete_kernel(tag, hsh, key, n, size, wrap, h, k):
    """Replace key k's slot with a tombstone carrying its stored hash.

    Returns (status, probes, position).
    """
    t = np.int64(0)
    p = h
    while True:
        tg = tag[p]
        if tg == EMPTY:
            return ERR_NOT_FOUND, t + 1, p
        d = p - hsh[p]
        if wrap and d < 0:
            d += n
        if d < t:
            return ERR_NOT_FOUND, t + 1, p
        if tg == ELEM and key[p] == k:
            tag[p] = TOMB
            key[p] = _U(0)
            return OK, t + 1, p
        t += 1
        if wrap:
            p = p + 1 if p < n else 1
            if t > n + 1:
                return ERR_NOT_FOUND, t, p
        else:
            p += 1
            if p > size:
                return ERR_NOT_FOUND, t, size


@njit(cache=True, nogil=True)
def rebuild_kernel(tag, hsh, key, n, size, wrap):
    """Drop all tombstones and re-place elements as if inserted in increasing
    (stored_hash, key) order into an empty table (same hashes, no rehash).

    Returns the number of elements re-placed.
    """
    count = np.int64(0)
    for p in range(1, size + 1):
        if tag[p] == ELEM:
            count += 1
    eh = np.empty(count, dtype=np.int64)
    ek = np.empty(count, dtype=np.uint64)
    i = np.int64(0)
    for p in range(1, size + 1):
        if tag[p] == ELEM:
            eh[i] = hsh[p]
            ek[i] = key[p]
            i += 1
        tag[p] = EMPTY
    # stable two-pass argsort == lexsort by (hash, key)
    idx1 = np.argsort(ek, kind="mergesort")
    eh2 = eh[idx1]
    ek2 = ek[idx1]
    idx2 = np.argsort(eh2, kind="mergesort")
    for j in range(count):
        jj = idx2[j]
        insert_kernel(tag, hsh, key, n, size, wrap, eh2[jj], ek2[jj])
    return count


@njit(cache=True, nogil=True)
def graveyard_rebuild_kernel(tag, hsh, key, n, size, wrap, state, fstate):
    """Rebuild, then seed floor(n/(2x)) evenly spaced artificial tombstones
    (x from the current load factor) and reset the op budget to floor(n/(4x)).
    """
    count = rebuild_kernel(tag, hsh, key, n, size, wrap)
    state[S_ELEMS] = count
    state[S_TOMBS] = 0
    state[S_INS_SINCE] = 0
    state[S_OPS_SINCE] = 0
    if count >= n:
        return ERR_OVERFULL
    if count == 0:
        xp = fstate[F_XPARAM]
        budget = np.int64(n / (4.0 * xp))
        state[S_BUDGET] = budget if budget > 0 else 1
        fstate[F_XLAST] = xp
        return OK
    free = n - count
    x_now = n / free
    m = free // 2
    prev = np.int64(-1)
    for i in range(1, m + 1):
        th = np.int64(2.0 * i * x_now + 0.5)
        if th > n:
            th = n
        if th == prev:
            continue
        prev = th
        st, consumed, _pos = tombstone_insert_kernel(tag, hsh, key, n, size, wrap, th)
        if st != OK:
            return st
        if not consumed:
            state[S_TOMBS] += 1
    budget = free // 4
    state[S_BUDGET] = budget if budget > 0 else 1
    fstate[F_XLAST] = x_now
    return OK


@njit(cache=True, nogil=True)
def run_ops(tag, hsh, key, n, size, wrap,
            kinds, hashes, keys, start,
            policy, rebuild_r, resize_on_rebuild,
            state, fstate,
            record, records,
            track_windows, winstats):
    """Replay ops[start:] against the table. Returns (status, next_index).

    status OK means the whole sequence was consumed. RESIZE_REQUEST hands
    control back so the caller can resize + reseed (the precomputed hash
    stream is stale after a resize); next_index is where to resume.
    """
    nops = kinds.shape[0]
    i = start
    while i < nops:
        kind = kinds[i]
        h = hashes[i]
        k = keys[i]
        w = state[S_WINDOW]
        if track_windows and w >= winstats.shape[0]:
            return ERR_WINDOWS_FULL, i
        if kind == OP_INSERT:
            if state[S_ELEMS] >= n:
                return ERR_FULL, i
            st, probes, disp, peak, ckind, cpos, chash, term = insert_kernel(
                tag, hsh, key, n, size, wrap, h, k)
            if st != OK:
                return st, i
            state[S_ELEMS] += 1
            if ckind == 1:
                state[S_TOMBS] -= 1
            state[S_INS_SINCE] += 1
            if record:
                records[i, R_KIND] = 0
                records[i, R_HASH] = h
                records[i, R_PROBES] = probes
                records[i, R_DISP] = disp
                records[i, R_PEAK] = peak
                records[i, R_CONSUMED_KIND] = ckind
                records[i, R_CONSUMED_POS] = cpos
                records[i, R_CONSUMED_HASH] = chash
                records[i, R_SPAN_START] = h
                records[i, R_SPAN_END] = h + probes - 1
                records[i, R_WINDOW] = w
            if track_windows:
                winstats[w, W_INS_COUNT] += 1
                winstats[w, W_INS_PROBES] += probes
                winstats[w, W_INS_DISP] += disp
                winstats[w, W_OPS] += 1
                if ckind == 1:
                    winstats[w, W_TOMB_CONSUMED] += 1
        elif kind == OP_DELETE:
            st, probes, pos = delete_kernel(tag, hsh, key, n, size, wrap, h, k)
            if st != OK:
                return ERR_NOT_FOUND, i
            state[S_ELEMS] -= 1
            state[S_TOMBS] += 1
            if record:
                records[i, R_KIND] = 1
                records[i, R_HASH] = h
                records[i, R_PROBES] = probes
                records[i, R_DISP] = -1
                records[i, R_PEAK] = -1
                records[i, R_CONSUMED_KIND] = 2
                records[i, R_CONSUMED_POS] = -1
                records[i, R_CONSUMED_HASH] = -1
                records[i, R_SPAN_START] = h
                records[i, R_SPAN_END] = h + probes - 1
                records[i, R_WINDOW] = w
            if track_windows:
                winstats[w, W_DEL_COUNT] += 1
                winstats[w, W_DEL_PROBES] += probes
                winstats[w, W_OPS] += 1
        else:
            found, probes, term = query_kernel(tag, hsh, key, n, size, wrap, h, k)
            if record:
                records[i, R_KIND] = 2 if found else 3
                records[i, R_HASH] = h
                records[i, R_PROBES] = probes
                records[i, R_DISP] = -1
                records[i, R_PEAK] = -1
                records[i, R_CONSUMED_KIND] = 2
                records[i, R_CONSUMED_POS] = -1
                records[i, R_CONSUMED_HASH] = -1
                records[i, R_SPAN_START] = h
                records[i, R_SPAN_END] = h + probes - 1
                records[i, R_WINDOW] = w
            if track_windows:
                winstats[w, W_Q_COUNT] += 1
                winstats[w, W_Q_PROBES] += probes
                winstats[w, W_OPS] += 1

        # rebuild policy fires after the triggering operation completes
        if policy == POLICY_EVERY_R:
            if kind == OP_INSERT and state[S_INS_SINCE] >= rebuild_r:
                if track_windows:
                    winstats[w, W_REBUILD_SLOTS] += size
                    winstats[w, W_END_ELEMS] = state[S_ELEMS]
                    winstats[w, W_XNOW] = n / (n - state[S_ELEMS]) if state[S_ELEMS] < n else 0.0
                rebuild_kernel(tag, hsh, key, n, size, wrap)
                state[S_TOMBS] = 0
                state[S_INS_SINCE] = 0
                state[S_OPS_SINCE] = 0
                state[S_WINDOW] += 1
        elif policy == POLICY_GRAVEYARD:
            if kind != OP_QUERY:
                state[S_OPS_SINCE] += 1
                state[S_BUDGET] -= 1
                if state[S_BUDGET] <= 0:
                    if track_windows:
                        winstats[w, W_END_ELEMS] = state[S_ELEMS]
                        winstats[w, W_XNOW] = n / (n - state[S_ELEMS]) if state[S_ELEMS] < n else 0.0
                    if resize_on_rebuild:
                        return RESIZE_REQUEST, i + 1
                    if track_windows:
                        winstats[w, W_REBUILD_SLOTS] += size
                    st = graveyard_rebuild_kernel(tag, hsh, key, n, size, wrap, state, fstate)
                    if st != OK:
                        return st, i + 1
                    state[S_WINDOW] += 1
        i += 1
    return OK, nops


# ---------------------------------------------------------------------------
# workload generation kernels (deterministic splitmix64 streams)
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True, inline="always")
def _fresh_key(counter, prf):
    return _mix64((counter + _U(1)) * _U(_GOLDEN) ^ prf)


@njit(cache=True, nogil=True)
def gen_fill_kernel(count, seed):
    keys = np.empty(count, dtype=np.uint64)
    prf = _mix64(_U(seed) ^ _U(0xD6E8FEB86659FD93))
    for i in range(count):
        keys[i] = _fresh_key(_U(i), prf)
    return keys


@njit(cache=True, nogil=True)
def gen_hovering_kernel(fill_count, pairs, seed, distinct_keys, query_rate):
    """Fill prefix, then `pairs` (delete random live, insert) pairs, each
    followed by query_rate fresh negative queries."""
    total = fill_count + pairs * (2 + query_rate)
    kinds = np.empty(total, dtype=np.int8)
    keys = np.empty(total, dtype=np.uint64)
    live = np.empty(fill_count + 1, dtype=np.uint64)
    dead = np.empty(pairs + 1, dtype=np.uint64)
    prf = _mix64(_U(seed) ^ _U(0xD6E8FEB86659FD93))
    rng = _mix64(_U(seed) ^ _U(0xA3C59AC2F1039E4D))
    counter = _U(0)
    out = np.int64(0)
    lc = np.int64(0)
    dc = np.int64(0)
    for i in range(fill_count):
        k = _fresh_key(counter, prf)
        counter += _U(1)
        live[lc] = k
        lc += 1
        kinds[out] = OP_INSERT
        keys[out] = k
        out += 1
    for _pair in range(pairs):
        rng += _U(1)
        idx = _randbelow(_rng_out(rng), lc)
        dk = live[idx]
        live[idx] = live[lc - 1]
        lc -= 1
        kinds[out] = OP_DELETE
        keys[out] = dk
        out += 1
        reuse = False
        if not distinct_keys and dc > 0:
            rng += _U(1)
            reuse = (_rng_out(rng) & _U(1)) == _U(1)
        if reuse:
            rng += _U(1)
            j = _randbelow(_rng_out(rng), dc)
            nk = dead[j]
            dead[j] = dead[dc - 1]
            dc -= 1
        else:
            nk = _fresh_key(counter, prf)
            counter += _U(1)
        dead[dc] = dk
        dc += 1
        live[lc] = nk
        lc += 1
        kinds[out] = OP_INSERT
        keys[out] = nk
        out += 1
        for _q in range(query_rate):
            qk = _fresh_key(counter, prf)
            counter += _U(1)
            kinds[out] = OP_QUERY
            keys[out] = qk
            out += 1
    return kinds, keys


@njit(cache=True, nogil=True)
def gen_pathological_kernel(fill_count, r, blocks, seed):
    """Fill prefix, then `blocks` repetitions of (r-1 inserts, r deletes,
    1 insert); each block leaves the live count unchanged."""
    total = fill_count + blocks * 2 * r
    kinds = np.empty(total, dtype=np.int8)
    keys = np.empty(total, dtype=np.uint64)
    live = np.empty(fill_count + r + 1, dtype=np.uint64)
    prf = _mix64(_U(seed) ^ _U(0xD6E8FEB86659FD93))
    rng = _mix64(_U(seed) ^ _U(0xA3C59AC2F1039E4D))
    counter = _U(0)
    out = np.int64(0)
    lc = np.int64(0)
    for i in range(fill_count):
        k = _fresh_key(counter, prf)
        counter += _U(1)
        live[lc] = k
        lc += 1
        kinds[out] = OP_INSERT
        keys[out] = k
        out += 1
    for _b in range(blocks):
        for _j in range(r - 1):
            k = _fresh_key(counter, prf)
            counter += _U(1)
            live[lc] = k
            lc += 1
            kinds[out] = OP_INSERT
            keys[out] = k
            out += 1
        for _j in range(r):
            rng += _U(1)
            idx = _randbelow(_rng_out(rng), lc)
            dk = live[idx]
            live[idx] = live[lc - 1]
            lc -= 1
            kinds[out] = OP_DELETE
            keys[out] = dk
            out += 1
        k = _fresh_key(counter, prf)
        counter += _U(1)
        live[lc] = k
        lc += 1
        kinds[out] = OP_INSERT
        keys[out] = k
        out += 1
    return kinds, keys


@njit(cache=True, nogil=True)
def gen_capped_kernel(cap, length, seed):
    """length ops; below the cap a fair coin picks insert-fresh vs delete a
    random live key (insert when none live); at the cap always delete."""
    kinds = np.empty(length, dtype=np.int8)
    keys = np.empty(length, dtype=np.uint64)
    live = np.empty(cap + 1, dtype=np.uint64)
    prf = _mix64(_U(seed) ^ _U(0xD6E8FEB86659FD93))
    rng = _mix64(_U(seed) ^ _U(0xA3C59AC2F1039E4D))
    counter = _U(0)
    lc = np.int64(0)
    for i in range(length):
        do_insert = False
        if lc < cap:
            rng += _U(1)
            if (_rng_out(rng) & _U(1)) == _U(1):
                do_insert = True
            elif lc == 0:
                do_insert = True
        if do_insert:
            k = _fresh_key(counter, prf)
            counter += _U(1)
            live[lc] = k
            lc += 1
            kinds[i] = OP_INSERT
            keys[i] = k
        else:
            rng += _U(1)
            idx = _randbelow(_rng_out(rng), lc)
            dk = live[idx]
            live[idx] = live[lc - 1]
            lc -= 1
            kinds[i] = OP_DELETE
            keys[i] = dk
    return kinds, keys
