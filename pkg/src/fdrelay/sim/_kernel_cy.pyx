# cython: language_level=3
"""Compiled slot-by-slot kernel.

Statement-by-statement mirror of ``_kernel_py.run_slots``; consumes the same
uniform stream in the same order and performs float arithmetic in the same
sequence, so outputs are bit-identical to the pure-Python kernel (the build
disables FP contraction to keep C arithmetic equal to CPython's).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport log

MODE_PROBABILITY = 0
MODE_SINR = 1

CHUNK = 1 << 16


def max_draws_per_slot(n, mode):
    if mode == MODE_PROBABILITY:
        return 3 * n + 2
    return n + 1 + 2 * n * (n + 1) + n + 1


def run_slots(
    int n,
    q,
    double q0,
    int mode,
    p_d,
    p_0,
    p_0d,
    double mean_d,
    double mean_0,
    double mean_0d,
    double si_mean,
    double eta_d,
    double eta_0,
    double gamma_d,
    double gamma_0,
    long long slots,
    long long warmup,
    int n_batches,
    gen,
):
    cdef long long measured = slots - warmup
    cdef int max_slot = max_draws_per_slot(n, mode)
    cdef long long chunk = max(CHUNK, 4 * max_slot)

    cdef double[::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef double[:, ::1] pd = np.ascontiguousarray(p_d, dtype=np.float64)
    cdef double[:, ::1] p0 = np.ascontiguousarray(p_0, dtype=np.float64)
    cdef double[::1] p0d = np.ascontiguousarray(p_0d, dtype=np.float64)

    qlen_arr = np.zeros(slots + 1, dtype=np.int64)
    direct_arr = np.zeros((n_batches, n), dtype=np.int64)
    pickups_arr = np.zeros((n_batches, n), dtype=np.int64)
    relay_deliv_arr = np.zeros((n_batches, n), dtype=np.int64)
    delay_sum_arr = np.zeros((n_batches, n), dtype=np.int64)
    delay_cnt_arr = np.zeros((n_batches, n), dtype=np.int64)
    q_sum_arr = np.zeros(n_batches, dtype=np.int64)
    empty_slots_arr = np.zeros(n_batches, dtype=np.int64)
    nonempty_slots_arr = np.zeros(n_batches, dtype=np.int64)
    arr_total_arr = np.zeros(n_batches, dtype=np.int64)
    arr_empty_arr = np.zeros(n_batches, dtype=np.int64)
    arr_nonempty_arr = np.zeros(n_batches, dtype=np.int64)
    departures_arr = np.zeros(n_batches, dtype=np.int64)
    user_attempts_arr = np.zeros(n_batches, dtype=np.int64)
    relay_attempts_arr = np.zeros(n_batches, dtype=np.int64)
    batch_slots_arr = np.zeros(n_batches, dtype=np.int64)

    cdef long long[::1] qlen = qlen_arr
    cdef long long[:, ::1] direct = direct_arr
    cdef long long[:, ::1] pickups = pickups_arr
    cdef long long[:, ::1] relay_deliv = relay_deliv_arr
    cdef long long[:, ::1] delay_sum = delay_sum_arr
    cdef long long[:, ::1] delay_cnt = delay_cnt_arr
    cdef long long[::1] q_sum = q_sum_arr
    cdef long long[::1] empty_slots = empty_slots_arr
    cdef long long[::1] nonempty_slots = nonempty_slots_arr
    cdef long long[::1] arr_total = arr_total_arr
    cdef long long[::1] arr_empty = arr_empty_arr
    cdef long long[::1] arr_nonempty = arr_nonempty_arr
    cdef long long[::1] departures = departures_arr
    cdef long long[::1] user_attempts = user_attempts_arr
    cdef long long[::1] relay_attempts = relay_attempts_arr
    cdef long long[::1] batch_slots = batch_slots_arr

    # FIFO ring buffer of (owner, head-of-line start slot)
    cdef long long cap = 1024
    q_owner_arr = np.zeros(cap, dtype=np.int64)
    q_hol_arr = np.zeros(cap, dtype=np.int64)
    cdef long long[::1] q_owner = q_owner_arr
    cdef long long[::1] q_hol = q_hol_arr
    cdef long long head = 0
    cdef long long count = 0

    hol_src_arr = np.zeros(n, dtype=np.int64)
    active_arr = np.zeros(n, dtype=np.int8)
    cdef long long[::1] hol_src = hol_src_arr
    cdef signed char[::1] active = active_arr

    buf_arr = gen.random(chunk)
    cdef double[::1] buf = buf_arr
    cdef long long buf_len = buf.shape[0]
    cdef long long pos = 0

    cdef long long t, b, qstart, tail, idx, s, h0
    cdef int i, k, n_active, j, owner
    cdef bint a, relay_tx, dest_ok, rel_ok, dep_ok
    cdef double u_rel, sig, inter
    cdef long long arrivals_this

    for t in range(slots):
        qlen[t] = count
        if buf_len - pos < max_slot:
            buf_arr = gen.random(chunk)
            buf = buf_arr
            buf_len = buf.shape[0]
            pos = 0
        b = (t - warmup) * n_batches // measured if t >= warmup else -1

        n_active = 0
        for i in range(n):
            a = buf[pos] < qv[i]
            pos += 1
            active[i] = a
            if a:
                n_active += 1
        u_rel = buf[pos]
        pos += 1
        qstart = count
        relay_tx = qstart > 0 and u_rel < q0
        j = 1 if relay_tx else 0

        if b >= 0:
            batch_slots[b] += 1
            q_sum[b] += qstart
            if qstart == 0:
                empty_slots[b] += 1
            else:
                nonempty_slots[b] += 1
            user_attempts[b] += n_active
            if relay_tx:
                relay_attempts[b] += 1

        arrivals_this = 0
        for i in range(n):
            if not active[i]:
                continue
            if mode == 0:
                dest_ok = buf[pos] < pd[n_active, j]
                pos += 1
                rel_ok = buf[pos] < p0[n_active, j]
                pos += 1
            else:
                sig = -log(1.0 - buf[pos]) * mean_d
                pos += 1
                inter = 0.0
                for k in range(n):
                    if k != i and active[k]:
                        inter += -log(1.0 - buf[pos]) * mean_d
                        pos += 1
                if relay_tx:
                    inter += -log(1.0 - buf[pos]) * mean_0d
                    pos += 1
                dest_ok = sig >= gamma_d * (eta_d + inter)
                sig = -log(1.0 - buf[pos]) * mean_0
                pos += 1
                inter = 0.0
                for k in range(n):
                    if k != i and active[k]:
                        inter += -log(1.0 - buf[pos]) * mean_0
                        pos += 1
                if relay_tx:
                    inter += -log(1.0 - buf[pos]) * si_mean
                    pos += 1
                rel_ok = sig >= gamma_0 * (eta_0 + inter)
            if dest_ok:
                if b >= 0:
                    direct[b, i] += 1
                    delay_sum[b, i] += t - hol_src[i] + 1
                    delay_cnt[b, i] += 1
                hol_src[i] = t + 1
            elif rel_ok:
                if count == cap:  # grow the ring buffer
                    new_owner_arr = np.zeros(2 * cap, dtype=np.int64)
                    new_hol_arr = np.zeros(2 * cap, dtype=np.int64)
                    for s in range(count):
                        idx = head + s
                        if idx >= cap:
                            idx -= cap
                        new_owner_arr[s] = q_owner[idx]
                        new_hol_arr[s] = q_hol[idx]
                    q_owner_arr = new_owner_arr
                    q_hol_arr = new_hol_arr
                    q_owner = q_owner_arr
                    q_hol = q_hol_arr
                    head = 0
                    cap *= 2
                tail = head + count
                if tail >= cap:
                    tail -= cap
                q_owner[tail] = i
                q_hol[tail] = hol_src[i]
                count += 1
                arrivals_this += 1
                if b >= 0:
                    pickups[b, i] += 1
                hol_src[i] = t + 1

        if relay_tx:
            if mode == 0:
                dep_ok = buf[pos] < p0d[n_active]
                pos += 1
            else:
                sig = -log(1.0 - buf[pos]) * mean_0d
                pos += 1
                inter = 0.0
                for k in range(n):
                    if active[k]:
                        inter += -log(1.0 - buf[pos]) * mean_d
                        pos += 1
                dep_ok = sig >= gamma_d * (eta_d + inter)
            if dep_ok:
                owner = <int> q_owner[head]
                h0 = q_hol[head]
                head += 1
                if head == cap:
                    head = 0
                count -= 1
                if b >= 0:
                    departures[b] += 1
                    relay_deliv[b, owner] += 1
                    delay_sum[b, owner] += t - h0 + 1
                    delay_cnt[b, owner] += 1

        if b >= 0:
            arr_total[b] += arrivals_this
            if qstart == 0:
                arr_empty[b] += arrivals_this
            else:
                arr_nonempty[b] += arrivals_this

    qlen[slots] = count
    return {
        "qlen": qlen_arr,
        "direct": direct_arr,
        "pickups": pickups_arr,
        "relay_deliv": relay_deliv_arr,
        "delay_sum": delay_sum_arr,
        "delay_cnt": delay_cnt_arr,
        "q_sum": q_sum_arr,
        "empty_slots": empty_slots_arr,
        "nonempty_slots": nonempty_slots_arr,
        "arr_total": arr_total_arr,
        "arr_empty": arr_empty_arr,
        "arr_nonempty": arr_nonempty_arr,
        "departures": departures_arr,
        "user_attempts": user_attempts_arr,
        "relay_attempts": relay_attempts_arr,
        "batch_slots": batch_slots_arr,
    }
