from __future__ import annotations

import pytest

from ccm import dsl
from ccm.acceptance import default_corpus_dir
from ccm.core import Operation, Program
from ccm.expr import VarDecl, VarSpace

CORPUS = default_corpus_dir()


def load(name: str) -> dsl.SourceDocument:
    return dsl.load(CORPUS / f"{name}.ccm")


def program(name: str) -> Program:
    return load(name).program()


def bools(*names: str) -> VarSpace:
    return VarSpace(VarDecl(n) for n in names)


def make(space: VarSpace, ops: list[Operation], order=()) -> Program:
    return Program(space, ops, order)


@pytest.fixture
def sb() -> Program:
    return program("sb")


@pytest.fixture
def lowenstein() -> Program:
    return program("lowenstein")
