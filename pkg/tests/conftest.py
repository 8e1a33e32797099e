import sys

import numpy as np
import pytest

from spf.pipeline.audio import ingest
from spf.pipeline.config import Config
from spf.pipeline.probes import synthetic_corpus


@pytest.fixture(scope="session")
def cfg():
    return Config()


@pytest.fixture(scope="session")
def corpus_root(tmp_path_factory):
    return synthetic_corpus(tmp_path_factory.mktemp("corpus"), Config())


@pytest.fixture(scope="session")
def manifest(corpus_root):
    return ingest(corpus_root, Config().digest())


@pytest.fixture
def rng():
    return np.random.default_rng(0)



def pytest_terminal_summary(terminalreporter):
    mod = next((m for name, m in sys.modules.items() if name.endswith("test_acceptance")), None)
    lines = getattr(mod, "LINES", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
