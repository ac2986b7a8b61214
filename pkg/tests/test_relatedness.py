import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from facetalk.relatedness import (
    LexiconError,
    Oracle,
    RelationVerdict,
    load_lexicon,
    phrase_key,
)


def test_phrase_key_rules():
    assert phrase_key("big shoes") == "big shoe"
    # hyphen to space, lowercase
    assert phrase_key("Lemon-Scented") == "lemon scented"
    # plural strip on length >= 4 only
    assert phrase_key("straps") == "strap"
    assert phrase_key("gas") == "gas"
    # "-ss" words survive
    assert phrase_key("dress") == "dress"


def test_same_tag_lemon(oracle):
    assert oracle.same_tag("soap", "lemon-scented", "lemon scented")


def test_same_tag_reflexive_known(oracle):
    assert oracle.same_tag("shoes", "red", "red")


def test_same_tag_distinct(oracle):
    assert not oracle.same_tag("shoes", "red", "waterproof")


def test_same_facet_scents(oracle):
    assert oracle.same_facet("soap", "lavender", "lemon-scented")


def test_same_facet_colors(oracle):
    assert oracle.same_facet("shoes", "turquoise", "purple")


def test_same_facet_negative(oracle):
    assert not oracle.same_facet("shoes", "turquoise", "waterproof")


def test_of_facet(oracle):
    assert oracle.of_facet("shoes", "turquoise", "color")
    assert not oracle.of_facet("shoes", "turquoise", "brand")
    assert not oracle.of_facet("shoes", "zzxq", "color")


def test_category_scoping(oracle):
    # Lexicon entries are category scoped: no scent concepts for shoes.
    assert not oracle.same_facet("shoes", "lavender", "lemon-scented")


def test_load_lexicon_fixture(lexicon):
    assert lexicon.concept_count >= 2


def test_load_lexicon_empty():
    assert load_lexicon('{"entries": []}').concept_count == 0


def test_lexicon_phrase_in_two_concepts_rejected():
    doc = {
        "entries": [
            {"category": "soap", "phrase": "lavender", "concept": "a", "facet": "scent"},
            {"category": "soap", "phrase": "lavender", "concept": "b", "facet": "scent"},
        ]
    }
    with pytest.raises(LexiconError, match="already belongs"):
        load_lexicon(json.dumps(doc))


def test_lexicon_concept_spanning_facets_rejected():
    doc = {
        "entries": [
            {"category": "soap", "phrase": "lavender", "concept": "a", "facet": "scent"},
            {"category": "soap", "phrase": "calming", "concept": "a", "facet": "mood"},
        ]
    }
    with pytest.raises(LexiconError, match="spans facets"):
        load_lexicon(json.dumps(doc))


def test_verdict_implication_enforced():
    with pytest.raises(ValueError):
        RelationVerdict(same_tag=True, same_facet=False, of_facet=False)


PHRASES = st.sampled_from([
    "red", "pink", "turquoise", "purple", "waterproof", "nike", "adidas",
    "lavender", "lemon-scented", "lemon scented", "rose", "unscented",
    "good for running", "ankle straps", "square heels", "zzxq", "qualia",
    "big shoes", "9", "$50",
])
CATS = st.sampled_from(["shoes", "soap", "socks", "televisions"])


@given(CATS, PHRASES, PHRASES)
def test_symmetry(oracle, cat, a, b):
    assert oracle.same_tag(cat, a, b) == oracle.same_tag(cat, b, a)
    assert oracle.same_facet(cat, a, b) == oracle.same_facet(cat, b, a)


@given(CATS, PHRASES, PHRASES)
def test_same_tag_implies_same_facet(oracle, cat, a, b):
    verdict = oracle.verdict(cat, a, b)
    if verdict.same_tag:
        assert verdict.same_facet


@given(CATS, PHRASES)
def test_unknown_phrases_are_unrelated(oracle, cat, other):
    unknown = "zzxq flurble"
    assert not oracle.same_tag(cat, unknown, other)
    assert not oracle.same_facet(cat, unknown, other)
    for facet_id in ("color", "brand", "scent", "size"):
        assert not oracle.of_facet(cat, unknown, facet_id)
