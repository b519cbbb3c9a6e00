"""Pure-Python bitmask kernels.

Same contracts as the compiled ``_kernels`` extension; used when the
extension is unavailable or ``CCM_PURE_PYTHON`` is set.  An order on ``n``
elements is a list ``pred`` where bit ``j`` of ``pred[i]`` means ``j < i``.
"""

from __future__ import annotations


def transitive_closure(pred):
    """Warshall closure of a predecessor-mask relation."""
    out = list(pred)
    n = len(out)
    for k in range(n):
        kbit = 1 << k
        pk = out[k]
        for i in range(n):
            if out[i] & kbit:
                out[i] |= pk
    return out


def downset_masks(pred, topo):
    """All predecessor-closed subsets of the elements listed in ``topo``.

    ``topo`` must list the carrier in an order compatible with ``pred``.
    """
    out = []
    n = len(topo)

    def go(i, cur):
        if i == n:
            out.append(cur)
            return
        e = topo[i]
        go(i + 1, cur)
        if pred[e] & ~cur == 0:
            go(i + 1, cur | (1 << e))

    go(0, 0)
    return out


def strict_orders(base, cand_a, cand_b, carrier):
    """Subsets of candidate pairs that close ``base`` into a strict order.

    Tries every subset of the candidate edges ``cand_a[k] < cand_b[k]``;
    returns the subset masks for which ``base`` plus the subset, restricted
    to ``carrier``, is irreflexive and transitive as given (no closure step).
    """
    k = len(cand_a)
    n = len(base)
    members = [i for i in range(n) if carrier >> i & 1]
    found = []
    for sub in range(1 << k):
        rel = list(base)
        for j in range(k):
            if sub >> j & 1:
                rel[cand_b[j]] |= 1 << cand_a[j]
        ok = True
        for i in members:
            p = rel[i]
            if p >> i & 1:
                ok = False
                break
            q = p
            while q:
                low = q & -q
                j = low.bit_length() - 1
                if rel[j] & ~p:
                    ok = False
                    break
                q ^= low
            if not ok:
                break
        if ok:
            found.append(sub)
    return found
