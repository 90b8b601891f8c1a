"""Operator command line: corpus management, experiments, and the API server.

Setting precedence, highest first: command-line flags, FMEA_* environment
variables, the config file (flat key=value lines, path via --config or
FMEA_CONFIG), built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .embedding import HashEmbedder, RemoteEmbedder
from .errors import FmeaError
from .experiment import DEFAULT_K_SHOTS, run_experiment
from .fixtures import load_fixtures
from .llm import ProviderConfig
from .model import from_json_dict
from .store import DEFAULT_RATIOS, CorpusStore
from .workflow import WorkflowEngine

DEFAULT_SPLIT_SEED = 7
_SKIP_BASENAMES = {"manifest.json", "lookup.json", "embeddings.json"}


def load_config(path: str | None) -> dict[str, str]:
    """Flat key=value config. Blank lines and # comments are ignored."""
    path = path or os.environ.get("FMEA_CONFIG")
    if not path:
        return {}
    config: dict[str, str] = {}
    for line_no, raw_line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{line_no}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        config[key.strip()] = value.strip().strip('"')
    return config


def _setting(flag_value, env_name: str | None, config: dict[str, str], config_key: str, default):
    if flag_value is not None:
        return flag_value
    if env_name:
        env_value = os.environ.get(env_name)
        if env_value:
            return env_value
    if config_key in config:
        return config[config_key]
    return default


def build_providers(config: dict[str, str]) -> dict[str, ProviderConfig]:
    """The three builtin mocks plus any remote providers from env/config.

    Remote providers come from FMEA_LLM_URL_<ID> / FMEA_LLM_TOKEN_<ID>
    environment pairs or llm_url.<id> / llm_token.<id> config keys; env wins.
    """
    lookup_map = load_fixtures().lookup_map
    providers = {
        "mock_echo_shot": ProviderConfig(provider_id="mock_echo_shot", kind="mock_echo_shot"),
        "mock_lookup": ProviderConfig(provider_id="mock_lookup", kind="mock_lookup", lookup_map=lookup_map),
        "mock_noise": ProviderConfig(provider_id="mock_noise", kind="mock_noise"),
    }
    for key, value in config.items():
        if key.startswith("llm_url."):
            provider_id = key[len("llm_url."):]
            providers[provider_id] = ProviderConfig(
                provider_id=provider_id,
                kind="remote_http",
                url=value,
                token=config.get(f"llm_token.{provider_id}"),
            )
    for env_key in sorted(os.environ):
        if env_key.startswith("FMEA_LLM_URL_"):
            provider_id = env_key[len("FMEA_LLM_URL_"):].lower()
            providers[provider_id] = ProviderConfig(
                provider_id=provider_id,
                kind="remote_http",
                url=os.environ[env_key],
                token=os.environ.get(f"FMEA_LLM_TOKEN_{provider_id.upper()}"),
            )
    return providers


def build_embedder(config: dict[str, str]):
    url = _setting(None, "FMEA_EMBED_URL", config, "embed_url", None)
    if url:
        token = _setting(None, "FMEA_EMBED_TOKEN", config, "embed_token", None)
        return RemoteEmbedder(url=url, token=token)
    return HashEmbedder()


def _corpus_dir(args, config: dict[str, str]) -> Path:
    return Path(_setting(args.corpus, "FMEA_CORPUS_DIR", config, "corpus_dir", "corpus"))


def cmd_ingest(args, config) -> int:
    store = CorpusStore(_corpus_dir(args, config))
    source = Path(args.dir)
    if not source.is_dir():
        print(f"error: {source} is not a directory", file=sys.stderr)
        return 1
    docs = []
    for path in sorted(source.rglob("*.json")):
        if path.name in _SKIP_BASENAMES or "splits" in path.parts:
            continue
        try:
            docs.append(from_json_dict(json.loads(path.read_text(encoding="utf-8"))))
        except (json.JSONDecodeError, FmeaError) as exc:
            print(f"error: {path}: {exc}", file=sys.stderr)
            return 1
    ingested, skipped = store.ingest_many(docs)
    print(f"ingested={ingested} skipped={skipped}")
    return 0


def cmd_split(args, config) -> int:
    store = CorpusStore(_corpus_dir(args, config))
    ratios = DEFAULT_RATIOS
    if args.ratios:
        parts = [float(x) for x in args.ratios.split(",")]
        ratios = tuple(parts)
    split = store.make_split(args.seed, ratios)
    train, validation, test = split.sizes
    print(f"train={train} validation={validation} test={test}")
    return 0


def cmd_eval(args, config) -> int:
    store = CorpusStore(_corpus_dir(args, config))
    split = store.ensure_split(args.split_seed)
    providers_by_id = build_providers(config)
    provider_ids = [p.strip() for p in args.provider.split(",") if p.strip()]
    missing = [p for p in provider_ids if p not in providers_by_id]
    if missing:
        known = ", ".join(sorted(providers_by_id))
        print(f"error: unknown provider(s) {', '.join(missing)}; configured: {known}", file=sys.stderr)
        return 1
    report = run_experiment(
        store,
        split,
        steps=[s.strip() for s in args.step.split(",") if s.strip()],
        methods=[m.strip() for m in args.method.split(",") if m.strip()],
        providers=[providers_by_id[p] for p in provider_ids],
        k_shots=args.k,
        seed=args.seed,
        embedder=build_embedder(config),
        split_part=args.split,
    )
    sys.stdout.write(report.format_table())
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "report.csv"
    json_path = out_dir / "report.json"
    csv_path.write_text(report.to_csv(), encoding="utf-8")
    json_path.write_text(report.to_json(), encoding="utf-8")
    print(f"wrote {csv_path} and {json_path}")
    return 0


def cmd_serve(args, config) -> int:
    import uvicorn

    from .service import DEFAULT_PORT, create_app

    store = CorpusStore(_corpus_dir(args, config))
    engine = WorkflowEngine(
        store,
        sessions_dir=_setting(args.sessions, None, config, "sessions_dir", "sessions"),
        providers=build_providers(config),
        embedder=build_embedder(config),
        split_seed=int(_setting(args.split_seed, None, config, "split_seed", DEFAULT_SPLIT_SEED)),
        default_k=int(_setting(args.k, None, config, "k_shots", DEFAULT_K_SHOTS)),
        default_provider_ids=[_setting(args.provider, None, config, "default_provider", "mock_echo_shot")],
    )
    ui_dir = _setting(args.ui, None, config, "ui_dir", None)
    if ui_dir is None and Path("frontend/dist").is_dir():
        ui_dir = "frontend/dist"
    app = create_app(engine, ui_dir=ui_dir)
    port = int(_setting(args.port, "FMEA_PORT", config, "port", DEFAULT_PORT))
    uvicorn.run(app, host=args.host, port=port)
    return 0


def cmd_embed(args, config) -> int:
    store = CorpusStore(_corpus_dir(args, config))
    embedder = build_embedder(config)
    if args.rebuild:
        count = store.rebuild_embeddings(embedder)
    else:
        count = 0
        for doc_id in store.list_ids():
            store.embedding_for(doc_id, embedder)
            count += 1
    print(f"embedded={count} provider={embedder.provider_id}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fmea", description="FMEA corpus, experiment, and service tooling")
    parser.add_argument("--corpus", help="corpus directory (default: ./corpus)")
    parser.add_argument("--config", help="path to a key=value config file")
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="ingest canonical document JSON files from a directory tree")
    p_ingest.add_argument("dir", help="directory to scan recursively for *.json documents")
    p_ingest.set_defaults(func=cmd_ingest)

    p_split = sub.add_parser("split", help="create the train/validation/test split for a seed")
    p_split.add_argument("--seed", type=int, default=DEFAULT_SPLIT_SEED)
    p_split.add_argument("--ratios", help="three comma-separated ratios, default 0.8,0.1,0.1")
    p_split.set_defaults(func=cmd_split)

    p_eval = sub.add_parser("eval", help="run the zero-shot/random-shot/dfsp experiment grid")
    p_eval.add_argument("--step", default="boundary,failure_locations", help="comma-separated step kinds")
    p_eval.add_argument("--method", default="zero_shot,random_shot,dfsp", help="comma-separated prompt modes")
    p_eval.add_argument("--provider", default="mock_echo_shot", help="comma-separated provider ids")
    p_eval.add_argument("--split", default="test", choices=("train", "validation", "test"),
                        help="which split part to evaluate on")
    p_eval.add_argument("--split-seed", type=int, default=DEFAULT_SPLIT_SEED, help="seed of the stored split")
    p_eval.add_argument("--k", type=int, default=DEFAULT_K_SHOTS, help="shots retrieved for dfsp")
    p_eval.add_argument("--seed", type=int, default=0, help="run seed for random-shot draws")
    p_eval.add_argument("--out", default="reports", help="directory for report.csv and report.json")
    p_eval.set_defaults(func=cmd_eval)

    p_serve = sub.add_parser("serve", help="run the workflow HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=None, help="default: FMEA_PORT or 8080")
    p_serve.add_argument("--sessions", default=None, help="session event-log directory (default: ./sessions)")
    p_serve.add_argument("--split-seed", type=int, default=None, help="seed of the training split used for shots")
    p_serve.add_argument("--k", type=int, default=None, help="default candidate count")
    p_serve.add_argument("--provider", default=None, help="default generation provider id")
    p_serve.add_argument("--ui", default=None, help="static UI directory to mount at /ui")
    p_serve.set_defaults(func=cmd_serve)

    p_embed = sub.add_parser("embed", help="warm or rebuild the corpus embedding cache")
    p_embed.add_argument("--rebuild", action="store_true", help="drop the cache and recompute every vector")
    p_embed.set_defaults(func=cmd_embed)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        return args.func(args, config)
    except FmeaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
