import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rostore import datagen  # noqa: E402
from rostore.ontology import canonicalize_property_cycles, extract_ontology  # noqa: E402
from rostore.rdf import parse_ntriples  # noqa: E402
from samples import EX2_SCHEMA, FIG2_DATA, FIG2_SCHEMA, MED_DATA, MED_SCHEMA  # noqa: E402


@pytest.fixture
def fig2_data():
    return parse_ntriples(FIG2_DATA)


@pytest.fixture
def fig2_ontology():
    return canonicalize_property_cycles(extract_ontology(parse_ntriples(FIG2_SCHEMA)))[0]


@pytest.fixture
def ex2_ontology():
    return canonicalize_property_cycles(extract_ontology(parse_ntriples(EX2_SCHEMA)))[0]


@pytest.fixture
def med_ontology():
    return canonicalize_property_cycles(extract_ontology(parse_ntriples(MED_SCHEMA)))[0]


@pytest.fixture
def med_data():
    return parse_ntriples(MED_DATA)


@pytest.fixture(scope="session")
def univ_ontology():
    return canonicalize_property_cycles(extract_ontology(datagen.bundled_ontology()))[0]


@pytest.fixture(scope="session")
def univ_data():
    return datagen.generate(datagen.GenConfig(universities=1))


def pytest_terminal_summary(terminalreporter):
    from report import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda s: int(s.split()[0][2:])):
            terminalreporter.write_line(line)
