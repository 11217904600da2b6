from __future__ import annotations

import json

import pytest


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call" and "test_acceptance" in item.nodeid:
        verdict = "PASS" if report.passed else "FAIL"
        print(f"\nACCEPTANCE {verdict}: {item.name}")

from vaxrag.corpus import CollectionId, ingest_batch, iter_jsonl
from vaxrag.demo import DEMO_SALT, generate_demo_corpus
from vaxrag.embed import DeterministicEmbedder
from vaxrag.vectorstore import VectorStore

TEST_DIMENSION = 64


@pytest.fixture(scope="session")
def demo_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("demo-corpus")
    generate_demo_corpus(path)
    return path


@pytest.fixture(scope="session")
def manifest(demo_dir):
    return json.loads((demo_dir / "manifest.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def demo_docs(demo_dir):
    """Parsed fixture documents per collection."""
    docs = {}
    for coll in CollectionId:
        parsed = []
        for _, doc, error in iter_jsonl(
            demo_dir / f"{coll.value}.jsonl", coll, salt=DEMO_SALT
        ):
            assert error is None, error
            parsed.append(doc)
        docs[coll] = parsed
    return docs


@pytest.fixture(scope="session")
def embedder():
    return DeterministicEmbedder(TEST_DIMENSION)


@pytest.fixture(scope="session")
def populated_store(demo_docs, embedder):
    """One shared read-only store with the whole demo corpus ingested."""
    store = VectorStore(TEST_DIMENSION)
    for coll in CollectionId:
        ingest_batch(demo_docs[coll], store, embedder)
    return store


@pytest.fixture()
def fresh_store():
    return VectorStore(TEST_DIMENSION)
