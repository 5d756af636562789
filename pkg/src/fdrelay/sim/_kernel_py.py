"""Pure-Python slot-by-slot kernel.

Reference implementation of the hot loop; the compiled Cython kernel in
``_kernel_cy.pyx`` mirrors it statement by statement. Both consume uniforms
from the same chunked Generator stream in the same order and perform float
arithmetic in the same sequence, so their outputs are bit-identical for a
given seed.

Random-draw discipline per slot (identical in both kernels):
  1. one uniform per user (transmit decision), one for the relay;
  2. per active user, in index order: destination test then relay test
     (probability mode: one uniform each; SINR mode: signal draw, one draw
     per other active user, plus one for the relay when it transmits);
  3. if the relay transmits: the departure test.
A chunk is refilled whenever fewer than the per-slot worst case remain, so
consumption never straddles a refill mid-slot.
"""

import math

import numpy as np

MODE_PROBABILITY = 0
MODE_SINR = 1

CHUNK = 1 << 16


def max_draws_per_slot(n, mode):
    if mode == MODE_PROBABILITY:
        return 3 * n + 2
    return n + 1 + 2 * n * (n + 1) + n + 1


def run_slots(
    n,
    q,
    q0,
    mode,
    p_d,
    p_0,
    p_0d,
    mean_d,
    mean_0,
    mean_0d,
    si_mean,
    eta_d,
    eta_0,
    gamma_d,
    gamma_0,
    slots,
    warmup,
    n_batches,
    gen,
):
    measured = slots - warmup
    max_slot = max_draws_per_slot(n, mode)
    chunk = max(CHUNK, 4 * max_slot)

    q = [float(x) for x in q]
    pd = [[float(p_d[i, 0]), float(p_d[i, 1])] for i in range(n + 1)]
    p0 = [[float(p_0[i, 0]), float(p_0[i, 1])] for i in range(n + 1)]
    p0d = [float(x) for x in p_0d]
    q0 = float(q0)

    qlen = np.zeros(slots + 1, dtype=np.int64)
    direct = np.zeros((n_batches, n), dtype=np.int64)
    pickups = np.zeros((n_batches, n), dtype=np.int64)
    relay_deliv = np.zeros((n_batches, n), dtype=np.int64)
    delay_sum = np.zeros((n_batches, n), dtype=np.int64)
    delay_cnt = np.zeros((n_batches, n), dtype=np.int64)
    q_sum = np.zeros(n_batches, dtype=np.int64)
    empty_slots = np.zeros(n_batches, dtype=np.int64)
    nonempty_slots = np.zeros(n_batches, dtype=np.int64)
    arr_total = np.zeros(n_batches, dtype=np.int64)
    arr_empty = np.zeros(n_batches, dtype=np.int64)
    arr_nonempty = np.zeros(n_batches, dtype=np.int64)
    departures = np.zeros(n_batches, dtype=np.int64)
    user_attempts = np.zeros(n_batches, dtype=np.int64)
    relay_attempts = np.zeros(n_batches, dtype=np.int64)
    batch_slots = np.zeros(n_batches, dtype=np.int64)

    # FIFO ring buffer of (owner, head-of-line start slot)
    cap = 1024
    q_owner = [0] * cap
    q_hol = [0] * cap
    head = 0
    count = 0

    hol_src = [0] * n
    active = [False] * n

    buf = gen.random(chunk).tolist()
    buf_len = len(buf)
    pos = 0
    log = math.log

    for t in range(slots):
        qlen[t] = count
        if buf_len - pos < max_slot:
            buf = gen.random(chunk).tolist()
            buf_len = len(buf)
            pos = 0
        b = (t - warmup) * n_batches // measured if t >= warmup else -1

        n_active = 0
        for i in range(n):
            a = buf[pos] < q[i]
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
            if mode == MODE_PROBABILITY:
                dest_ok = buf[pos] < pd[n_active][j]
                pos += 1
                rel_ok = buf[pos] < p0[n_active][j]
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
                    new_owner = [0] * (2 * cap)
                    new_hol = [0] * (2 * cap)
                    for s in range(count):
                        idx = head + s
                        if idx >= cap:
                            idx -= cap
                        new_owner[s] = q_owner[idx]
                        new_hol[s] = q_hol[idx]
                    q_owner = new_owner
                    q_hol = new_hol
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
            if mode == MODE_PROBABILITY:
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
                owner = q_owner[head]
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
        "qlen": qlen,
        "direct": direct,
        "pickups": pickups,
        "relay_deliv": relay_deliv,
        "delay_sum": delay_sum,
        "delay_cnt": delay_cnt,
        "q_sum": q_sum,
        "empty_slots": empty_slots,
        "nonempty_slots": nonempty_slots,
        "arr_total": arr_total,
        "arr_empty": arr_empty,
        "arr_nonempty": arr_nonempty,
        "departures": departures,
        "user_attempts": user_attempts,
        "relay_attempts": relay_attempts,
        "batch_slots": batch_slots,
    }
