import json
from importlib import resources

import numpy as np
import pytest


@pytest.fixture(scope="session")
def golden():
    return json.loads(resources.files("cuspflow").joinpath("data/golden.json").read_text())


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=["numba", "numpy"])
def backend(request, monkeypatch):
    monkeypatch.setenv("CUSPFLOW_BACKEND", request.param)
    return request.param


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def criterion(request, capsys):
    """Record and print one ``criterion N: PASS|FAIL`` line."""

    def record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        request.config.stash[_ACCEPTANCE].append(line)
        with capsys.disabled():
            print(f"\n{line}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines, key=lambda l: int(l.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)
