# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled bitmask kernels; see ``_pykernels`` for the reference versions."""

from libc.stdint cimport uint64_t

cdef enum:
    MAXN = 64


def transitive_closure(pred):
    cdef int n = len(pred)
    cdef uint64_t rel[MAXN]
    cdef int i, k
    cdef uint64_t kbit, pk
    if n > MAXN:
        raise ValueError("at most 64 elements")
    for i in range(n):
        rel[i] = pred[i]
    for k in range(n):
        kbit = (<uint64_t>1) << k
        pk = rel[k]
        for i in range(n):
            if rel[i] & kbit:
                rel[i] |= pk
    return [rel[i] for i in range(n)]


def downset_masks(pred, topo):
    cdef int n = len(topo)
    cdef int m = len(pred)
    cdef uint64_t p[MAXN]
    cdef int order[MAXN]
    cdef uint64_t stack_cur[MAXN + 1]
    cdef int stack_i[MAXN + 1]
    cdef signed char stack_branch[MAXN + 1]
    cdef int sp, i, e
    cdef uint64_t cur
    if m > MAXN:
        raise ValueError("at most 64 elements")
    for i in range(m):
        p[i] = pred[i]
    for i in range(n):
        order[i] = topo[i]
    out = []
    # explicit DFS: frame = (position, current set, next branch)
    sp = 0
    stack_i[0] = 0
    stack_cur[0] = 0
    stack_branch[0] = 0
    while sp >= 0:
        i = stack_i[sp]
        cur = stack_cur[sp]
        if i == n:
            out.append(cur)
            sp -= 1
            continue
        e = order[i]
        if stack_branch[sp] == 0:
            stack_branch[sp] = 1
            sp += 1
            stack_i[sp] = i + 1
            stack_cur[sp] = cur
            stack_branch[sp] = 0
        elif stack_branch[sp] == 1:
            stack_branch[sp] = 2
            if p[e] & ~cur == 0:
                sp += 1
                stack_i[sp] = i + 1
                stack_cur[sp] = cur | ((<uint64_t>1) << e)
                stack_branch[sp] = 0
        else:
            sp -= 1
    return out


def strict_orders(base, cand_a, cand_b, carrier):
    cdef int k = len(cand_a)
    cdef int n = len(base)
    cdef uint64_t b[MAXN]
    cdef uint64_t rel[MAXN]
    cdef int ca[64]
    cdef int cb[64]
    cdef int members[MAXN]
    cdef int nm = 0
    cdef uint64_t car = carrier
    cdef uint64_t sub, total, p, q, low
    cdef int i, j, t
    cdef bint ok
    if n > MAXN or k > 40:
        raise ValueError("problem too large for brute force")
    for i in range(n):
        b[i] = base[i]
        if (car >> i) & 1:
            members[nm] = i
            nm += 1
    for j in range(k):
        ca[j] = cand_a[j]
        cb[j] = cand_b[j]
    total = (<uint64_t>1) << k
    found = []
    sub = 0
    while sub < total:
        for i in range(n):
            rel[i] = b[i]
        for j in range(k):
            if (sub >> j) & 1:
                rel[cb[j]] |= (<uint64_t>1) << ca[j]
        ok = True
        for t in range(nm):
            i = members[t]
            p = rel[i]
            if (p >> i) & 1:
                ok = False
                break
            q = p
            while q:
                low = q & (~q + 1)
                j = 0
                while (low >> j) != 1:
                    j += 1
                if rel[j] & ~p:
                    ok = False
                    break
                q ^= low
            if not ok:
                break
        if ok:
            found.append(sub)
        sub += 1
    return found
