"""One test per acceptance criterion; each prints a single PASS/FAIL line."""

from __future__ import annotations

import pytest

from ccm.acceptance import CRITERIA, Corpus, run_criterion

pytestmark = pytest.mark.acceptance

_corpus = Corpus()


def _check(k: int) -> None:
    row = run_criterion(k, _corpus)
    print(f"criterion {row.criterion:>2} {row.name}: {'PASS' if row.ok else 'FAIL'} ({row.seconds:.2f}s) {row.detail}")
    assert row.ok, row.detail


def test_criterion_01_sb_litmus():
    _check(1)


def test_criterion_02_sb_annotation():
    _check(2)


def test_criterion_03_lowenstein():
    _check(3)


def test_criterion_04_fig2_all_inits():
    _check(4)


def test_criterion_05_ghost_examples():
    _check(5)


def test_criterion_06_soundness_harness():
    _check(6)


def test_criterion_07_oracle_equivalence():
    _check(7)


def test_criterion_08_tso_bridge():
    _check(8)


def test_criterion_09_single_writer():
    _check(9)


def test_criterion_10_strongest_annotation():
    _check(10)


def test_criterion_11_roundtrip_determinism():
    _check(11)


def test_every_criterion_has_a_test():
    names = {n for n in globals() if n.startswith("test_criterion_")}
    assert len(names) == len(CRITERIA) == 11
