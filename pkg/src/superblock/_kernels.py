"""Compiled inner loops: heaps, score bounds, block scoring and the traversal.

All scores are int64. Documents are addressed by their position in the
reordered collection; ``rank`` arrays give each position's place in
external-id order and break score ties (lower rank wins).
"""

import numpy as np
from numba import njit

# stats slots
SB_PRUNED = 0
SB_VISITED = 1
BL_PRUNED = 2
BL_SCORED = 3
DOCS_SCORED = 4
NUM_STATS = 5

NO_RANK = np.iinfo(np.int64).max


# ---------------------------------------------------------------------------
# top-k min-heap; root holds the current k-th best entry
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _worse(s1, r1, s2, r2):
    return s1 < s2 or (s1 == s2 and r1 > r2)


@njit(cache=True, nogil=True)
def _topk_swap(hs, hd, hr, i, j):
    hs[i], hs[j] = hs[j], hs[i]
    hd[i], hd[j] = hd[j], hd[i]
    hr[i], hr[j] = hr[j], hr[i]


@njit(cache=True, nogil=True)
def topk_offer(hs, hd, hr, size, k, score, doc, rank):
    """Offer (score, doc) to the heap; ``size`` is a 1-element array."""
    if score <= 0:
        return False
    n = size[0]
    if n < k:
        i = n
        hs[i] = score
        hd[i] = doc
        hr[i] = rank
        size[0] = n + 1
        while i > 0:
            p = (i - 1) // 2
            if _worse(hs[i], hr[i], hs[p], hr[p]):
                _topk_swap(hs, hd, hr, i, p)
                i = p
            else:
                break
        return True
    if not _worse(hs[0], hr[0], score, rank):
        return False
    hs[0] = score
    hd[0] = doc
    hr[0] = rank
    i = 0
    while True:
        lo = i
        left = 2 * i + 1
        right = left + 1
        if left < n and _worse(hs[left], hr[left], hs[lo], hr[lo]):
            lo = left
        if right < n and _worse(hs[right], hr[right], hs[lo], hr[lo]):
            lo = right
        if lo == i:
            break
        _topk_swap(hs, hd, hr, i, lo)
        i = lo
    return True


@njit(cache=True, nogil=True)
def topk_theta(hs, size, k):
    if size[0] < k:
        return 0
    return hs[0]


# ---------------------------------------------------------------------------
# pruning predicates (mu, eta as num/den integer pairs)
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def prunable(lhs, rhs, group_rank, full, floor_rank):
    """``lhs <= rhs`` where equality only prunes if no member can win a tie.

    Before the heap is full theta is 0, so equality means a zero bound and
    zero-score documents are never admitted anyway.
    """
    if lhs < rhs:
        return True
    if lhs > rhs:
        return False
    return (not full) or group_rank > floor_rank


@njit(cache=True, nogil=True)
def superblock_prunable(
    sbmax, child_sum_score, theta, mu_num, mu_den, eta_num, eta_den, c,
    group_rank, full, floor_rank,
):
    return prunable(
        mu_num * sbmax, mu_den * theta, group_rank, full, floor_rank
    ) and prunable(
        eta_num * child_sum_score, eta_den * c * theta, group_rank, full, floor_rank
    )


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def superblock_bounds(q_terms, q_weights, sb_max, sb_sum):
    S = sb_max.shape[1]
    sbmax = np.zeros(S, np.int64)
    css = np.zeros(S, np.int64)
    for i in range(q_terms.size):
        w = q_weights[i]
        row_max = sb_max[q_terms[i]]
        row_sum = sb_sum[q_terms[i]]
        for s in range(S):
            sbmax[s] += w * row_max[s]
            css[s] += w * row_sum[s]
    return sbmax, css


@njit(cache=True, nogil=True)
def block_boundsums(q_terms, q_weights, block_max, sb_ids, c, superblock_at_a_time):
    """BoundSum for every child block of ``sb_ids``; row i covers superblock sb_ids[i].

    Columns past the last real block stay 0.
    """
    N = block_max.shape[1]
    out = np.zeros((sb_ids.size, c), np.int64)
    if superblock_at_a_time:
        for i in range(sb_ids.size):
            base = sb_ids[i] * c
            hi = min(c, N - base)
            acc = out[i]
            for j in range(q_terms.size):
                w = q_weights[j]
                row = block_max[q_terms[j]]
                for x in range(hi):
                    acc[x] += w * row[base + x]
    else:
        for j in range(q_terms.size):
            w = q_weights[j]
            row = block_max[q_terms[j]]
            for i in range(sb_ids.size):
                base = sb_ids[i] * c
                hi = min(c, N - base)
                for x in range(hi):
                    out[i, x] += w * row[base + x]
    return out


# ---------------------------------------------------------------------------
# block scoring through the forward index
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def score_block(
    blk, q_dense, b, num_docs, block_ptr, fwd_terms, term_ptr, slots, impacts,
    rank, scratch, hs, hd, hr, size, k,
):
    """Score all slots of one block and offer each to the heap; returns real docs scored."""
    for j in range(b):
        scratch[j] = 0
    for g in range(block_ptr[blk], block_ptr[blk + 1]):
        w = q_dense[fwd_terms[g]]
        if w == 0:
            continue
        for p in range(term_ptr[g], term_ptr[g + 1]):
            scratch[slots[p]] += w * impacts[p]
    base = blk * b
    n = min(b, num_docs - base)
    theta = topk_theta(hs, size, k)
    for j in range(n):
        s = scratch[j]
        if s >= theta and s > 0:
            if topk_offer(hs, hd, hr, size, k, s, base + j, rank[base + j]):
                theta = topk_theta(hs, size, k)
    return n


# ---------------------------------------------------------------------------
# block candidate pool: max-heap on (bound desc, block id asc)
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _pool_better(b1, k1, b2, k2):
    return b1 > b2 or (b1 == b2 and k1 < k2)


@njit(cache=True, nogil=True)
def _pool_push(pb, pk, n, bound, blk):
    i = n
    pb[i] = bound
    pk[i] = blk
    while i > 0:
        p = (i - 1) // 2
        if _pool_better(pb[i], pk[i], pb[p], pk[p]):
            pb[i], pb[p] = pb[p], pb[i]
            pk[i], pk[p] = pk[p], pk[i]
            i = p
        else:
            break
    return n + 1


@njit(cache=True, nogil=True)
def _pool_pop(pb, pk, n):
    n -= 1
    pb[0] = pb[n]
    pk[0] = pk[n]
    i = 0
    while True:
        hi = i
        left = 2 * i + 1
        right = left + 1
        if left < n and _pool_better(pb[left], pk[left], pb[hi], pk[hi]):
            hi = left
        if right < n and _pool_better(pb[right], pk[right], pb[hi], pk[hi]):
            hi = right
        if hi == i:
            break
        pb[i], pb[hi] = pb[hi], pb[i]
        pk[i], pk[hi] = pk[hi], pk[i]
        i = hi
    return n


# ---------------------------------------------------------------------------
# traversal
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def search(
    q_terms, q_weights, q_dense, k, mu_num, mu_den, eta_num, eta_den,
    superblock_at_a_time, two_phase,
    b, c, num_docs, block_max, sb_max, sb_sum,
    block_ptr, fwd_terms, term_ptr, slots, impacts,
    rank, block_rank, sb_rank,
):
    N = block_max.shape[1]
    S = sb_max.shape[1]
    stats = np.zeros(NUM_STATS, np.int64)
    hs = np.zeros(k, np.int64)
    hd = np.zeros(k, np.int64)
    hr = np.zeros(k, np.int64)
    size = np.zeros(1, np.int64)
    scratch = np.zeros(b, np.int64)

    sbmax, css = superblock_bounds(q_terms, q_weights, sb_max, sb_sum)

    if two_phase:
        keep = np.zeros(S, np.int64)
        nkeep = 0
        for s in range(S):
            if superblock_prunable(
                sbmax[s], css[s], 0, mu_num, mu_den, eta_num, eta_den, c,
                sb_rank[s], False, 0,
            ):
                stats[SB_PRUNED] += 1
            else:
                keep[nkeep] = s
                nkeep += 1
        stats[SB_VISITED] = nkeep
        keep = keep[:nkeep]
        bounds = block_boundsums(q_terms, q_weights, block_max, keep, c, superblock_at_a_time)
        cand_blk = np.empty(nkeep * c, np.int64)
        cand_bnd = np.empty(nkeep * c, np.int64)
        m = 0
        for i in range(nkeep):
            base = keep[i] * c
            for x in range(min(c, N - base)):
                cand_blk[m] = base + x
                cand_bnd[m] = bounds[i, x]
                m += 1
        cand_blk = cand_blk[:m]
        cand_bnd = cand_bnd[:m]
        order = np.argsort(-cand_bnd, kind="mergesort")
        for i in range(m):
            blk = cand_blk[order[i]]
            full = size[0] == k
            theta = topk_theta(hs, size, k)
            if prunable(eta_num * cand_bnd[order[i]], eta_den * theta,
                        block_rank[blk], full, hr[0]):
                stats[BL_PRUNED] += 1
            else:
                stats[BL_SCORED] += 1
                stats[DOCS_SCORED] += score_block(
                    blk, q_dense, b, num_docs, block_ptr, fwd_terms, term_ptr,
                    slots, impacts, rank, scratch, hs, hd, hr, size, k,
                )
        return hs, hd, hr, size[0], stats

    sb_order = np.argsort(-sbmax, kind="mergesort")
    pb = np.empty(N, np.int64)
    pk = np.empty(N, np.int64)
    npool = 0
    cursor = 0
    one = np.zeros(1, np.int64)
    while True:
        if npool == 0 and cursor >= S:
            break
        take_block = npool > 0 and (cursor >= S or pb[0] >= sbmax[sb_order[cursor]])
        full = size[0] == k
        theta = topk_theta(hs, size, k)
        if take_block:
            blk = pk[0]
            bound = pb[0]
            npool = _pool_pop(pb, pk, npool)
            if prunable(eta_num * bound, eta_den * theta, block_rank[blk], full, hr[0]):
                stats[BL_PRUNED] += 1
                if cursor >= S and eta_num * bound < eta_den * theta:
                    # Remaining candidates have bounds <= this one.
                    stats[BL_PRUNED] += npool
                    npool = 0
            else:
                stats[BL_SCORED] += 1
                stats[DOCS_SCORED] += score_block(
                    blk, q_dense, b, num_docs, block_ptr, fwd_terms, term_ptr,
                    slots, impacts, rank, scratch, hs, hd, hr, size, k,
                )
            continue

        s = sb_order[cursor]
        # Sorted stream: once eta * sbmax falls below theta every remaining
        # superblock satisfies both prune inequalities (avg <= max, mu <= eta).
        if prunable(eta_num * sbmax[s], eta_den * theta, -1, full, 0):
            stats[SB_PRUNED] += S - cursor
            cursor = S
            continue
        cursor += 1
        if superblock_prunable(
            sbmax[s], css[s], theta, mu_num, mu_den, eta_num, eta_den, c,
            sb_rank[s], full, hr[0],
        ):
            stats[SB_PRUNED] += 1
            continue
        stats[SB_VISITED] += 1
        one[0] = s
        bounds = block_boundsums(q_terms, q_weights, block_max, one, c, superblock_at_a_time)
        base = s * c
        for x in range(min(c, N - base)):
            blk = base + x
            if prunable(eta_num * bounds[0, x], eta_den * theta, block_rank[blk], full, hr[0]):
                stats[BL_PRUNED] += 1
            else:
                npool = _pool_push(pb, pk, npool, bounds[0, x], blk)
    return hs, hd, hr, size[0], stats


# ---------------------------------------------------------------------------
# greedy similarity ordering
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def greedy_order(doc_ptr, terms, inv_ptr, inv_docs):
    """Chain documents by largest term-set overlap with the last placed one.

    ``inv_docs`` is consumed: placed documents are swapped out of each
    posting list as they are encountered.
    """
    n = doc_ptr.size - 1
    live = np.empty(inv_ptr.size - 1, np.int64)
    for t in range(live.size):
        live[t] = inv_ptr[t + 1] - inv_ptr[t]
    placed = np.zeros(n, np.bool_)
    counts = np.zeros(n, np.int64)
    touched = np.empty(n, np.int64)
    order = np.empty(n, np.int64)
    cur = 0
    placed[0] = True
    order[0] = 0
    next_free = 1
    for step in range(1, n):
        nt = 0
        for p in range(doc_ptr[cur], doc_ptr[cur + 1]):
            t = terms[p]
            lo = inv_ptr[t]
            i = 0
            while i < live[t]:
                d = inv_docs[lo + i]
                if placed[d]:
                    live[t] -= 1
                    inv_docs[lo + i] = inv_docs[lo + live[t]]
                    inv_docs[lo + live[t]] = d
                    continue
                if counts[d] == 0:
                    touched[nt] = d
                    nt += 1
                counts[d] += 1
                i += 1
        best = -1
        best_count = 0
        for i in range(nt):
            d = touched[i]
            cnt = counts[d]
            if cnt > best_count or (cnt == best_count and d < best):
                best = d
                best_count = cnt
            counts[d] = 0
        if best < 0:
            while placed[next_free]:
                next_free += 1
            best = next_free
        placed[best] = True
        order[step] = best
        cur = best
    return order
