import json
import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"
GOLDEN = CORPUS / "golden"
DATA = Path(__file__).parent / "data"
SCHEMAS = ROOT / "docs" / "schemas"

# Set CAPLESS_REGEN=1 to rewrite golden files instead of comparing.
REGEN = os.environ.get("CAPLESS_REGEN") == "1"

GEN_SEED = 42
GEN_COUNT = 1000


def corpus_files():
    return sorted(CORPUS.glob("*.capless"))


@pytest.fixture(scope="session")
def generated():
    from capless.harness.generator import gen_programs
    return gen_programs(GEN_SEED, GEN_COUNT)


@pytest.fixture(scope="session")
def schemas():
    from jsonschema import Draft202012Validator
    from referencing import Registry, Resource

    docs = {p.name: json.loads(p.read_text()) for p in SCHEMAS.glob("*.json")}
    registry = Registry().with_resources(
        (name, Resource.from_contents(doc)) for name, doc in docs.items())
    return {name.split(".")[0]: Draft202012Validator(doc, registry=registry)
            for name, doc in docs.items()}


_acceptance = {}


@pytest.fixture
def acceptance(request):
    """Record a PASS/FAIL line for an acceptance criterion.

    The test calls ``acceptance(n, title, ok, detail)``; the line is printed
    in the terminal summary whatever the outcome.
    """
    def record(n, title, ok, detail=""):
        _acceptance[n] = (title, bool(ok), detail)
        print(f"[acceptance {n}] {'PASS' if ok else 'FAIL'}  {title}  {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_acceptance):
        title, ok, detail = _acceptance[n]
        terminalreporter.write_line(f"{n}. {'PASS' if ok else 'FAIL'}  {title}  {detail}".rstrip())
