from pathlib import Path

import pytest

from dlctx import parse

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    return CORPUS


@pytest.fixture(scope="session")
def orig_source() -> str:
    return (CORPUS / "db_workers_orig.act").read_text()


@pytest.fixture(scope="session")
def mod_source() -> str:
    return (CORPUS / "db_workers_mod.act").read_text()


@pytest.fixture(scope="session")
def orig_program(orig_source):
    return parse(orig_source)


@pytest.fixture(scope="session")
def mod_program(mod_source):
    return parse(mod_source)
