"""Array kernels for placement and rollouts.

Everything here works on index arrays (node index, link index, request row)
and is compiled with numba unless ``DRIFTSFC_NO_NUMBA`` is set. The MDP in
``mdp.py`` calls the same functions, so a kernel rollout and a step-by-step
Python rollout follow identical rules.
"""

from __future__ import annotations

import numpy as np

from ._accel import jit

MAX_CHAIN = 5


@jit
def assign_maxres(path, plen, resid_cpu, dem, k, node_ids, first_skip, out_pos):
    """Greedy in-order assignment: each VNF to the path node with most residual CPU.

    Positions never move backwards along the path. Ties go to the lower node id.
    ``first_skip`` > 0 gives the first VNF its ``first_skip``-th best node
    instead of the best (the perturbed variant). Returns False if some VNF
    fits nowhere.
    """
    tmp = np.empty(plen, dtype=np.int64)
    for p in range(plen):
        tmp[p] = resid_cpu[path[p]]
    prev = 0
    for j in range(k):
        d = dem[j]
        skip = first_skip if j == 0 else 0
        chosen = -1
        for _ in range(skip + 1):
            best = -1
            for p in range(prev, plen):
                if tmp[p] < d:
                    continue
                if j == 0 and skip > 0 and chosen >= 0:
                    # exclude nodes already ranked above the current pick
                    if tmp[p] > tmp[chosen] or (
                        tmp[p] == tmp[chosen] and node_ids[path[p]] <= node_ids[path[chosen]]
                    ):
                        continue
                if best < 0 or tmp[p] > tmp[best] or (
                    tmp[p] == tmp[best] and node_ids[path[p]] < node_ids[path[best]]
                ):
                    best = p
            if best < 0:
                break
            chosen = best
        if chosen < 0 or (skip > 0 and best < 0):
            return False
        tmp[chosen] -= d
        out_pos[j] = chosen
        prev = chosen
    return True


@jit
def assign_earliest(path, plen, resid_cpu, dem, k, min_first, out_pos):
    """Greedy in-order assignment: each VNF to the first path node that fits.

    The first VNF starts searching at position ``min_first``.
    """
    tmp = np.empty(plen, dtype=np.int64)
    for p in range(plen):
        tmp[p] = resid_cpu[path[p]]
    prev = min_first
    for j in range(k):
        d = dem[j]
        chosen = -1
        for p in range(prev, plen):
            if tmp[p] >= d:
                chosen = p
                break
        if chosen < 0:
            return False
        tmp[chosen] -= d
        out_pos[j] = chosen
        prev = chosen
    return True


@jit
def cpu_fits(path, plen, resid_cpu, dem, k, pos):
    used = np.zeros(plen, dtype=np.int64)
    for j in range(k):
        used[pos[j]] += dem[j]
    for p in range(plen):
        if used[p] > resid_cpu[path[p]]:
            return False
    return True


@jit
def bw_fits(links, plen, resid_bw, seg, k, pos):
    """Check each hop against the demand of the segment that crosses it.

    Hop ``p`` (between path positions p and p+1) carries segment ``c`` where
    ``c`` is the number of VNFs placed at positions <= p.
    """
    c = 0
    for p in range(plen - 1):
        while c < k and pos[c] <= p:
            c += 1
        if seg[c] > resid_bw[links[p]]:
            return False
    return True


@jit
def apply_usage(path, links, plen, dem, seg, k, pos, cpu_out, bw_out, sign):
    for j in range(k):
        cpu_out[path[pos[j]]] += sign * dem[j]
    c = 0
    for p in range(plen - 1):
        while c < k and pos[c] <= p:
            c += 1
        bw_out[links[p]] += sign * seg[c]


@jit
def nf_choose(row, pnodes, plinks, plen, k_paths, resid_cpu, resid_bw, dem, seg, k, node_ids, out_pos):
    """First path (in rank order) where max-residual packing fits; -1 if none."""
    for r in range(k_paths):
        L = plen[row, r]
        if L == 0:
            continue
        path = pnodes[row, r]
        if not assign_maxres(path, L, resid_cpu, dem, k, node_ids, 0, out_pos):
            continue
        if bw_fits(plinks[row, r], L, resid_bw, seg, k, out_pos):
            return r
    return -1


@jit
def rollout_kernel(
    clock, horizon_end, steps_slots,
    resid_cpu, resid_bw, act_end, act_cpu, act_bw, n_act,
    waiting, n_wait, cursor,
    rel, ing, egr, klen, cpu, seg, dur, dl, n_req,
    pnodes, plinks, plen, k_paths, node_ids,
    gamma, r_complete, r_block, lam, hop_delay,
):
    """Discounted return of the NF-Heuristic policy for ``steps_slots`` slots.

    One step per decision on the head of the queue; the clock advances after a
    Wait or when the queue empties. Mirrors ``SfcMdp.step`` exactly.
    """
    n = resid_cpu.shape[0]
    m = resid_bw.shape[0]
    rc = resid_cpu.copy()
    rb = resid_bw.copy()
    cap_a = n_act + n_wait + (n_req - cursor) + 1
    a_end = np.empty(cap_a, dtype=np.int64)
    a_cpu = np.zeros((cap_a, n), dtype=np.int64)
    a_bw = np.zeros((cap_a, m), dtype=np.int64)
    a_alive = np.zeros(cap_a, dtype=np.bool_)
    for a in range(n_act):
        a_end[a] = act_end[a]
        a_alive[a] = True
        for i in range(n):
            a_cpu[a, i] = act_cpu[a, i]
        for i in range(m):
            a_bw[a, i] = act_bw[a, i]
    na = n_act
    queue = np.empty(n_wait + (n_req - cursor) + 1, dtype=np.int64)
    qt = 0
    for i in range(n_wait):
        queue[qt] = waiting[i]
        qt += 1
    qh = 0
    pos = np.zeros(MAX_CHAIN, dtype=np.int64)
    total = 0.0
    disc = 1.0
    stop = clock + steps_slots
    while clock < stop and clock < horizon_end:
        reward = 0.0
        advance = True
        if qt > qh:
            r = queue[qh]
            k = klen[r]
            row = ing[r] * n + egr[r]
            rank = nf_choose(row, pnodes, plinks, plen, k_paths, rc, rb, cpu[r], seg[r], k, node_ids, pos)
            if rank >= 0:
                L = plen[row, rank]
                a_end[na] = clock + dur[r]
                a_alive[na] = True
                apply_usage(pnodes[row, rank], plinks[row, rank], L, cpu[r], seg[r], k, pos,
                            a_cpu[na], a_bw[na], 1)
                for i in range(n):
                    rc[i] -= a_cpu[na, i]
                for i in range(m):
                    rb[i] -= a_bw[na, i]
                na += 1
                # on-path routing: the k+1 segments tile the path, L-1 hops in total
                delay = (clock - rel[r]) + dur[r] + (L - 1) * hop_delay
                reward -= lam * delay / (dl[r] - rel[r])
                qh += 1
                advance = qh == qt
            elif clock + 1 + dur[r] <= dl[r]:
                advance = True
            else:
                reward += r_block
                qh += 1
                advance = qh == qt
        if advance:
            clock += 1
            for a in range(na):
                if a_alive[a] and a_end[a] <= clock:
                    a_alive[a] = False
                    for i in range(n):
                        rc[i] += a_cpu[a, i]
                    for i in range(m):
                        rb[i] += a_bw[a, i]
                    reward += r_complete
            while cursor < n_req and rel[cursor] <= clock:
                queue[qt] = cursor
                qt += 1
                cursor += 1
            w = qh
            for q in range(qh, qt):
                r = queue[q]
                if clock + dur[r] > dl[r]:
                    reward += r_block
                else:
                    queue[w] = r
                    w += 1
            qt = w
        total += disc * reward
        disc *= gamma
    return total


@jit
def utilization_buckets(used, cap, levels):
    out = np.empty(used.shape[0], dtype=np.int64)
    for i in range(used.shape[0]):
        if cap[i] <= 0:
            out[i] = 0 if used[i] <= 0 else levels - 1
        else:
            b = (levels * used[i]) // cap[i]
            out[i] = min(max(b, 0), levels - 1)
    return out


@jit
def fill_monotone(path, links, plen, resid_cpu, resid_bw, dem, seg, k, need, out):
    """Feasible nondecreasing position tuples in lexicographic order, at most ``need``."""
    pos = np.zeros(MAX_CHAIN, dtype=np.int64)
    count = 0
    while count < need:
        if cpu_fits(path, plen, resid_cpu, dem, k, pos) and bw_fits(links, plen, resid_bw, seg, k, pos):
            for j in range(k):
                out[count, j] = pos[j]
            count += 1
        j = k - 1
        while j >= 0 and pos[j] == plen - 1:
            j -= 1
        if j < 0:
            break
        pos[j] += 1
        for t in range(j + 1, k):
            pos[t] = pos[j]
    return count
