from __future__ import annotations

import json
from pathlib import Path

import pytest

from facetalk.fulfillment import build_index, load_catalog
from facetalk.relatedness import Oracle, load_lexicon
from facetalk.schema import load_schema

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
GOLDEN = Path(__file__).resolve().parent / "golden"


@pytest.fixture(scope="session")
def schema():
    return load_schema((FIXTURES / "schema.json").read_bytes())


@pytest.fixture(scope="session")
def lexicon():
    return load_lexicon((FIXTURES / "lexicon.json").read_bytes())


@pytest.fixture(scope="session")
def oracle(schema, lexicon):
    return Oracle(lexicon, schema)


@pytest.fixture(scope="session")
def catalog(schema):
    return load_catalog((FIXTURES / "catalog.json").read_bytes(), schema)


@pytest.fixture(scope="session")
def index(catalog, schema):
    return build_index(catalog, schema)


@pytest.fixture(scope="session")
def grammar():
    from facetalk.corpusgen import load_grammar

    return load_grammar((FIXTURES / "grammar.json").read_bytes())


def load_golden(name: str):
    return json.loads((GOLDEN / name).read_text(encoding="utf-8"))


# Figure 1 utterances, verbatim.
FIG1_UTTERANCES = [
    "Show me some Nike women’s shoes please.",
    "Do you have anything in red?",
    "How about pink?",
    "Actually, almost any color will do; just make sure it’s not white.",
    "Hmmm… let’s also see Adidas.",
    "Okay, it doesn’t have to be Adidas but I want ones that are good for running.",
    "Something that protects my feet in heavy rain.",
    "Do you have anything less than a hundred bucks?",
    "Anything even cheaper?",
    "Size 9.",
    "I want to buy some red socks too.",
]
