import importlib.util
from pathlib import Path

import pytest

from debias.textproc import load_text_resources
from debias.vocabulary import load_vocabulary

FIXTURES = Path(__file__).parent / "fixtures"
SCRIPTS = Path(__file__).parent.parent / "scripts"


def load_script(name):
    """Import a file from scripts/ as a module."""
    spec = importlib.util.spec_from_file_location(name, SCRIPTS / f"{name}.py")
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


@pytest.fixture(scope="session")
def text_resources():
    return load_text_resources()


@pytest.fixture()
def vocab_graph():
    # function-scoped: build_term_index annotates terms in place
    with open(FIXTURES / "vocabulary.json", "rb") as fh:
        return load_vocabulary(fh)


# Answers aligned with the gold labels of fixtures/ablation_gold.jsonl:
# ambiguous records marked contentious get yes, the rest get no, in the
# language the prompt template was built for.
GOLD_ALIGNED_RULES = [
    (('"race"', "every human race"), "yes"),
    (('"race"', "hierarchy of races"), "yes"),
    (('"Caucasian"', "catalogued as caucasian"), "yes"),
    (('"indigène"', "coutumes indigènes"), "oui"),
    (('"race"', "horse race"), "no"),
    (('"race"', "sailing race"), "no"),
    (('"Caucasian"', "geology field notes"), "no"),
    (('"indigène"', "plante indigène"), "non"),
]


def gold_aligned_backend(latency_ms: float = 0.0):
    from debias.disambiguator import MockLlmBackend

    return MockLlmBackend(default="no", rules=list(GOLD_ALIGNED_RULES), latency_ms=latency_ms)


# test_acceptance appends one verdict line per criterion; printing them from
# a summary hook keeps them visible under output capture
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
