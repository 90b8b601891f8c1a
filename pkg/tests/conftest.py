import sys

import pytest

from fmea_gen.cli import build_providers
from fmea_gen.embedding import HashEmbedder
from fmea_gen.fixtures import load_fixtures
from fmea_gen.store import CorpusStore
from fmea_gen.workflow import WorkflowEngine


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print the acceptance scoreboard collected by tests/test_acceptance.py."""
    for name, module in sys.modules.items():
        if name.rsplit(".", 1)[-1] == "test_acceptance":
            results = getattr(module, "ACCEPTANCE_RESULTS", None)
            if results:
                terminalreporter.section("acceptance criteria")
                for line in sorted(results):
                    terminalreporter.write_line(line)
            break


@pytest.fixture(scope="session")
def fixture_set():
    return load_fixtures()


@pytest.fixture()
def fixture_store(tmp_path, fixture_set):
    """Fresh on-disk store preloaded with the 20 bundled documents."""
    store = CorpusStore(tmp_path / "corpus")
    ingested, skipped = store.ingest_many(fixture_set.documents)
    assert (ingested, skipped) == (20, 0)
    return store


@pytest.fixture()
def providers():
    return build_providers({})


@pytest.fixture()
def engine(tmp_path, fixture_store, providers):
    return WorkflowEngine(
        fixture_store,
        sessions_dir=tmp_path / "sessions",
        providers=providers,
        embedder=HashEmbedder(),
        split_seed=7,
        default_provider_ids=["mock_echo_shot"],
    )
