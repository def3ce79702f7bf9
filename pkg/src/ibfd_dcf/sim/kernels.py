"""Event loops, compiled with numba. Node 0 is the AP; nodes 1..n-1 are STAs.

Time is integer nanoseconds. ``totals`` and the per-node arrays are filled in place.
"""

import numba
import numpy as np

# totals layout
T_ELAPSED = 0
T_IDLE = 1
T_BUSY_SUCCESS = 2
T_BUSY_COLLISION = 3
T_EVENTS = 4
T_COLLISIONS = 5
T_DL_FRAMES = 6
T_UL_FRAMES = 7
T_DL_BITS = 8
T_UL_BITS = 9
T_LAT_SUM = 10
T_LAT_COUNT = 11
T_SUCCESSES = 12
N_TOTALS = 13

# per-node layout (rows of ``nodes``)
N_ATTEMPTS = 0
N_SUCCESSES = 1
N_FAILURES = 2
N_DROPS = 3
N_REPLIES = 4
N_CONSECUTIVE = 5
N_FIELDS = 6


@numba.njit(cache=True)
def _idle_run(counters, ev, horizon):
    low = counters.min()
    if low <= 0:
        return 0
    return min(low, horizon - ev)


@numba.njit(cache=True)
def run_hd_kernel(rng, windows, load_bytes, ts_ns, tc_ns, slot_ns, horizon, drop_reset,
                  totals, nodes):
    """Half-duplex DCF. A winner whose fresh backoff draw is 0 sends again at once;
    every busy period ends with one protected slot in which the others count down."""
    n = load_bytes.shape[0]
    last = windows.shape[0] - 1
    counters = np.empty(n, np.int64)
    stage = np.zeros(n, np.int64)
    hol = np.zeros(n, np.int64)
    for i in range(n):
        counters[i] = rng.integers(0, windows[0])
    t = 0
    ev = 0
    while ev < horizon:
        k = _idle_run(counters, ev, horizon)
        if k > 0:
            counters -= k
            t += k * slot_ns
            totals[T_IDLE] += k * slot_ns
            ev += k
            continue
        ev += 1
        ntx = 0
        who = -1
        longest = 0
        for i in range(n):
            if counters[i] == 0:
                ntx += 1
                who = i
                nodes[N_ATTEMPTS, i] += 1
                if tc_ns[i] > longest:
                    longest = tc_ns[i]
        if ntx == 1:
            draw = 0
            while True:
                t += ts_ns[who]
                totals[T_BUSY_SUCCESS] += ts_ns[who]
                totals[T_SUCCESSES] += 1
                nodes[N_SUCCESSES, who] += 1
                if who == 0:
                    totals[T_DL_FRAMES] += 1
                    totals[T_DL_BITS] += 8 * load_bytes[who]
                else:
                    totals[T_UL_FRAMES] += 1
                    totals[T_UL_BITS] += 8 * load_bytes[who]
                totals[T_LAT_SUM] += t - hol[who]
                totals[T_LAT_COUNT] += 1
                hol[who] = t
                stage[who] = 0
                draw = rng.integers(0, windows[0])
                if draw > 0:
                    break
                nodes[N_CONSECUTIVE, who] += 1
            t += slot_ns
            totals[T_IDLE] += slot_ns
            for i in range(n):
                if i == who:
                    counters[i] = draw - 1
                else:
                    counters[i] -= 1
        else:
            totals[T_COLLISIONS] += 1
            t += longest + slot_ns
            totals[T_BUSY_COLLISION] += longest
            totals[T_IDLE] += slot_ns
            for i in range(n):
                if counters[i] == 0:
                    nodes[N_FAILURES, i] += 1
                    if stage[i] == last:
                        stage[i] = 0
                        nodes[N_DROPS, i] += 1
                        if drop_reset:
                            hol[i] = t
                    else:
                        stage[i] += 1
                    counters[i] = rng.integers(0, windows[stage[i]])
                else:
                    counters[i] -= 1
    totals[T_ELAPSED] = t
    totals[T_EVENTS] = ev


@numba.njit(cache=True)
def run_ibfd_kernel(rng, windows, dl_bytes, ul_bytes, ul_frames, ts_ns, tc_ns, slot_ns, horizon,
                    drop_reset, totals, nodes):
    """Full-duplex DCF with reply-back. The AP addresses a uniformly drawn STA per
    head-of-line frame; the addressee (or the AP, for an STA's frame) answers in
    the same exchange."""
    n = ul_bytes.shape[0]
    last = windows.shape[0] - 1
    counters = np.empty(n, np.int64)
    stage = np.zeros(n, np.int64)
    hol = np.zeros(n, np.int64)
    for i in range(n):
        counters[i] = rng.integers(0, windows[0])
    dest = 1 + rng.integers(0, n - 1)
    t = 0
    ev = 0
    while ev < horizon:
        k = _idle_run(counters, ev, horizon)
        if k > 0:
            counters -= k
            t += k * slot_ns
            totals[T_IDLE] += k * slot_ns
            ev += k
            continue
        ev += 1
        ap_tx = counters[0] == 0
        nsta = 0
        sta = -1
        for i in range(n):
            if counters[i] == 0:
                nodes[N_ATTEMPTS, i] += 1
                if i > 0:
                    nsta += 1
                    sta = i
        peer = -1
        if ap_tx and nsta == 0:
            peer = dest
            nodes[N_REPLIES, peer] += 1
        elif ap_tx and nsta == 1 and sta == dest:
            peer = dest
        elif not ap_tx and nsta == 1:
            peer = sta
            nodes[N_REPLIES, 0] += 1
        if peer > 0:
            t += ts_ns
            totals[T_BUSY_SUCCESS] += ts_ns
            totals[T_SUCCESSES] += 1
            totals[T_DL_FRAMES] += 1
            totals[T_DL_BITS] += 8 * dl_bytes
            totals[T_UL_FRAMES] += ul_frames[peer]
            totals[T_UL_BITS] += 8 * ul_bytes[peer]
            # one HOL-to-ACK delay per direction, shared by every frame it carries
            totals[T_LAT_SUM] += (t - hol[0]) + (t - hol[peer])
            totals[T_LAT_COUNT] += 1 + ul_frames[peer]
            hol[0] = t
            hol[peer] = t
            nodes[N_SUCCESSES, 0] += 1
            nodes[N_SUCCESSES, peer] += 1
            dest = 1 + rng.integers(0, n - 1)
            for i in range(n):
                if i == 0 or i == peer:
                    stage[i] = 0
                    counters[i] = rng.integers(0, windows[0])
                else:
                    counters[i] -= 1
        else:
            totals[T_COLLISIONS] += 1
            t += tc_ns
            totals[T_BUSY_COLLISION] += tc_ns
            for i in range(n):
                if counters[i] == 0:
                    nodes[N_FAILURES, i] += 1
                    if stage[i] == last:
                        stage[i] = 0
                        nodes[N_DROPS, i] += 1
                        if drop_reset:
                            hol[i] = t
                        if i == 0:
                            dest = 1 + rng.integers(0, n - 1)
                    else:
                        stage[i] += 1
                    counters[i] = rng.integers(0, windows[stage[i]])
                else:
                    counters[i] -= 1
    totals[T_ELAPSED] = t
    totals[T_EVENTS] = ev
