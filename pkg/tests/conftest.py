import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gir import _pykernels, index as index_mod, search as search_mod  # noqa: E402
from gir._backend import kernels as _active  # noqa: E402
from gir.index import build_index  # noqa: E402
from gir.trec_io import RawDocument  # noqa: E402

BACKENDS = ["python"] + (["compiled"] if _active.BACKEND == "compiled" else [])


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Run the test once per available kernel backend."""
    mod = _pykernels if request.param == "python" else _active
    monkeypatch.setattr(search_mod, "kernels", mod)
    monkeypatch.setattr(index_mod, "kernels", mod)
    return request.param


@pytest.fixture
def toy_docs():
    return [RawDocument("d1", "a b a"), RawDocument("d2", "b c")]


@pytest.fixture
def toy_index(toy_docs):
    return build_index(toy_docs)


# acceptance criteria report one line each; printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
