from __future__ import annotations

import os
import subprocess
import sys

from hypothesis import given, settings
from hypothesis import strategies as st

from ccm import _pykernels, kernels


@st.composite
def dags(draw, max_n=8):
    n = draw(st.integers(0, max_n))
    pred = []
    for i in range(n):
        mask = 0
        for j in range(i):
            if draw(st.booleans()):
                mask |= 1 << j
        pred.append(mask)
    return pred


def _closed(pred):
    return list(_pykernels.transitive_closure(pred))


@settings(max_examples=150, deadline=None)
@given(dags())
def test_backends_agree_on_closure_and_downsets(pred):
    assert list(kernels.transitive_closure(pred)) == _closed(pred)
    closed = _closed(pred)
    topo = list(range(len(pred)))
    assert sorted(kernels.downset_masks(closed, topo)) == sorted(_pykernels.downset_masks(closed, topo))


@settings(max_examples=100, deadline=None)
@given(dags(max_n=5))
def test_backends_agree_on_strict_orders(pred):
    closed = _closed(pred)
    n = len(closed)
    carrier = (1 << n) - 1
    cand = [(a, b) for a in range(n) for b in range(n) if a != b and not closed[b] >> a & 1 and not closed[a] >> b & 1]
    ca, cb = [a for a, _ in cand], [b for _, b in cand]
    if len(cand) > 12:
        return
    fast = sorted(kernels.strict_orders(closed, ca, cb, carrier))
    slow = sorted(_pykernels.strict_orders(closed, ca, cb, carrier))
    assert fast == slow


def test_downsets_brute_force():
    # downsets are exactly the predecessor-closed subsets
    pred = _closed([0, 1, 1, 0, 8, 6 | 16])
    n = len(pred)
    expect = [m for m in range(1 << n) if all(not (m >> i & 1) or pred[i] & ~m == 0 for i in range(n))]
    assert sorted(kernels.downset_masks(pred, list(range(n)))) == expect


def test_pure_python_fallback_is_selectable():
    env = dict(os.environ, CCM_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from ccm import kernels; print(kernels.BACKEND)"],
        capture_output=True,
        text=True,
        env=env,
        check=True,
    )
    assert out.stdout.strip() == "python"
