import json

import pytest

from fmea_gen import model
from fmea_gen.cli import build_providers, load_config, main


@pytest.fixture()
def workspace(tmp_path, monkeypatch, fixture_set):
    """A cwd with a source/ tree of document JSON, pre-CLI."""
    monkeypatch.chdir(tmp_path)
    source = tmp_path / "source"
    nested = source / "nested"
    nested.mkdir(parents=True)
    for index, doc in enumerate(fixture_set.documents):
        target = nested if index % 2 else source
        (target / f"{doc.doc_id}.json").write_text(model.canonical_json(doc), encoding="utf-8")
    # index files must never be mistaken for documents
    (source / "lookup.json").write_text(json.dumps({"not": "a document"}), encoding="utf-8")
    return tmp_path


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestIngest:
    def test_ingest_recurses_and_skips_index_files(self, workspace, capsys):
        code, out, err = run(capsys, "ingest", "source")
        assert (code, err) == (0, "")
        assert out.strip() == "ingested=20 skipped=0"

    def test_reingest_is_idempotent(self, workspace, capsys):
        run(capsys, "ingest", "source")
        code, out, _ = run(capsys, "ingest", "source")
        assert code == 0
        assert out.strip() == "ingested=0 skipped=20"

    def test_invalid_document_aborts_with_filename(self, workspace, capsys):
        bad = workspace / "source" / "broken.json"
        bad.write_text('{"doc_id": "x"}', encoding="utf-8")
        code, _, err = run(capsys, "ingest", "source")
        assert code == 1
        assert "broken.json" in err

    def test_missing_directory_fails(self, workspace, capsys):
        code, _, err = run(capsys, "ingest", "no-such-dir")
        assert code == 1
        assert "error" in err


class TestSplit:
    def test_split_prints_sizes_and_persists(self, workspace, capsys):
        run(capsys, "ingest", "source")
        code, out, _ = run(capsys, "split", "--seed", "7")
        assert code == 0
        assert out.strip() == "train=16 validation=2 test=2"
        assert (workspace / "corpus" / "splits" / "7.json").exists()

    def test_split_of_empty_corpus_is_an_error(self, workspace, capsys):
        code, _, err = run(capsys, "split")
        assert code == 1
        assert err.startswith("error:")

    def test_custom_ratios(self, workspace, capsys):
        run(capsys, "ingest", "source")
        code, out, _ = run(capsys, "split", "--seed", "3", "--ratios", "0.5,0.25,0.25")
        assert code == 0
        assert out.strip() == "train=10 validation=5 test=5"


class TestEval:
    @pytest.fixture()
    def corpus(self, workspace, capsys):
        run(capsys, "ingest", "source")
        run(capsys, "split", "--seed", "7")
        return workspace

    def test_eval_writes_reports_and_prints_table(self, corpus, capsys):
        code, out, err = run(
            capsys, "eval", "--provider", "mock_lookup", "--method", "dfsp",
            "--step", "boundary", "--out", "reports",
        )
        assert (code, err) == (0, "")
        assert out.splitlines()[0].startswith("provider")
        assert "mock_lookup" in out and "dfsp" in out
        csv_text = (corpus / "reports" / "report.csv").read_text()
        assert csv_text.splitlines()[0] == "provider,method,step,metric,mean,n,failures"
        payload = json.loads((corpus / "reports" / "report.json").read_text())
        assert payload["split"] == {"seed": 7, "part": "test"}
        assert payload["rows"][0]["means"]["set_recall"] == 1.0

    def test_unknown_provider_lists_configured(self, corpus, capsys):
        code, _, err = run(capsys, "eval", "--provider", "gpt-zillion")
        assert code == 1
        assert "gpt-zillion" in err
        assert "mock_echo_shot" in err

    def test_full_grid_runs(self, corpus, capsys):
        code, out, _ = run(capsys, "eval", "--out", "reports")
        assert code == 0
        # 3 methods x 2 steps for the default echo provider
        table_rows = [l for l in out.splitlines() if l.startswith("mock_echo_shot")]
        assert len(table_rows) == 6


class TestEmbed:
    def test_embed_warms_every_document(self, workspace, capsys):
        run(capsys, "ingest", "source")
        code, out, _ = run(capsys, "embed")
        assert code == 0
        assert out.strip() == "embedded=20 provider=builtin-hash"
        assert (workspace / "corpus" / "embeddings.json").exists()

    def test_rebuild_recomputes(self, workspace, capsys):
        run(capsys, "ingest", "source")
        run(capsys, "embed")
        code, out, _ = run(capsys, "embed", "--rebuild")
        assert code == 0
        assert out.strip() == "embedded=20 provider=builtin-hash"


class TestConfig:
    def test_key_value_parsing(self, tmp_path):
        path = tmp_path / "fmea.conf"
        path.write_text(
            "# comment\n"
            "\n"
            "corpus_dir = /data/corpus\n"
            'default_provider="mock_lookup"\n',
            encoding="utf-8",
        )
        assert load_config(str(path)) == {
            "corpus_dir": "/data/corpus",
            "default_provider": "mock_lookup",
        }

    def test_malformed_line_is_rejected_with_location(self, tmp_path):
        path = tmp_path / "fmea.conf"
        path.write_text("corpus_dir /data\n", encoding="utf-8")
        with pytest.raises(ValueError, match="fmea.conf:1"):
            load_config(str(path))

    def test_missing_config_is_empty(self):
        assert load_config(None) == {}

    def test_flag_beats_env_beats_config(self, workspace, capsys, monkeypatch):
        run(capsys, "ingest", "source")
        config = workspace / "fmea.conf"
        config.write_text("corpus_dir = bogus-config-dir\n", encoding="utf-8")
        # env supplies the real corpus while the config points nowhere
        monkeypatch.setenv("FMEA_CORPUS_DIR", "corpus")
        code, out, _ = run(capsys, "--config", str(config), "split", "--seed", "9")
        assert code == 0
        assert out.strip() == "train=16 validation=2 test=2"
        # the flag beats both and wins with a fresh empty corpus
        code, _, err = run(capsys, "--corpus", "empty-dir", "--config", str(config), "split")
        assert code == 1 and err.startswith("error:")

    def test_bad_config_via_main_is_exit_code_one(self, workspace, capsys):
        config = workspace / "fmea.conf"
        config.write_text("just some words\n", encoding="utf-8")
        code, _, err = run(capsys, "--config", str(config), "split")
        assert code == 1
        assert err.startswith("error:")


class TestProviders:
    def test_builtin_mocks_always_present(self):
        providers = build_providers({})
        assert set(providers) >= {"mock_echo_shot", "mock_lookup", "mock_noise"}

    def test_config_adds_remote_provider(self):
        providers = build_providers({
            "llm_url.prod": "http://llm.internal/complete",
            "llm_token.prod": "sekrit",
        })
        assert providers["prod"].kind == "remote_http"
        assert providers["prod"].url == "http://llm.internal/complete"
        assert providers["prod"].token == "sekrit"

    def test_env_beats_config(self, monkeypatch):
        monkeypatch.setenv("FMEA_LLM_URL_PROD", "http://env-wins/complete")
        monkeypatch.setenv("FMEA_LLM_TOKEN_PROD", "env-token")
        providers = build_providers({"llm_url.prod": "http://config/complete"})
        assert providers["prod"].url == "http://env-wins/complete"
        assert providers["prod"].token == "env-token"
