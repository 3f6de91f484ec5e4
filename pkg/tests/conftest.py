import time
from contextlib import contextmanager
from pathlib import Path

import pytest

from chunktransfer.conllu import make_sentence, read_treebank

DATA = Path(__file__).parent / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA


@pytest.fixture
def table1():
    """The white cat ate a little mouse."""
    return read_treebank(DATA / "table1.conllu", strict=True)[0]


@pytest.fixture
def french():
    """Le chat blanc a mange une petit souris."""
    return read_treebank(DATA / "french.conllu", strict=True)[0]


@pytest.fixture
def cat_sleeps():
    return make_sentence([("The", "DET", 2, "det"), ("cat", "NOUN", 3, "nsubj"),
                          ("sleeps", "VERB", 0, "root")], sent_id="cs")


# -- acceptance bookkeeping -------------------------------------------------

_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """``with criterion(n, title):`` records PASS/FAIL for the summary."""
    store = request.config.stash.setdefault(_ACCEPTANCE, {})

    @contextmanager
    def run(number, title):
        start = time.perf_counter()
        try:
            yield
        except BaseException as err:
            first = (str(err).strip().splitlines() or [""])[0]
            store[number] = ("FAIL", title, f"{type(err).__name__}: {first}")
            raise
        store[number] = ("PASS", title, f"{time.perf_counter() - start:.2f}s")

    return run


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_ACCEPTANCE, None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        status, title, detail = results[number]
        terminalreporter.write_line(f"criterion {number:>2}: {status}  {title} ({detail})")
