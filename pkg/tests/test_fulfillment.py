import json
from fractions import Fraction

import pytest

from facetalk.clu import (
    Inclusivity,
    Intent,
    NumberValue,
    Operator,
    PredicateType,
    SortDirection,
    SpanValue,
    TagValue,
)
from facetalk.dst import (
    Bound,
    DialogState,
    FacetState,
    Predicate,
    Range,
    apply_intents,
)
from facetalk.fulfillment import (
    CatalogError,
    FacetRestrict,
    FulfillmentError,
    QuerySpan,
    SearchRequest,
    build_index,
    compile_request,
    facet_stats,
    load_catalog,
    search,
)
from oracle_search import oracle_search


def fig1_final_state(oracle, schema):
    intents = [
        Intent(Operator.SET_VALUE, facet_id="brand",
               value=TagValue("brand", "nike"),
               predicate_type=PredicateType.EQUALS),
        Intent(Operator.SET_VALUE, facet_id="color",
               value=TagValue("color", "white"),
               predicate_type=PredicateType.NOT_EQUALS),
        Intent(Operator.SET_VALUE, value=SpanValue("good for running"),
               predicate_type=PredicateType.EQUALS),
        Intent(Operator.SET_VALUE, facet_id="waterproof",
               value=TagValue("waterproof", "waterproof"),
               predicate_type=PredicateType.EQUALS),
        Intent(Operator.SET_VALUE, facet_id="price",
               value=NumberValue(Fraction(80)),
               predicate_type=PredicateType.LESS_THAN),
        Intent(Operator.SET_VALUE, facet_id="size",
               value=TagValue("size", "9"),
               predicate_type=PredicateType.EQUALS),
    ]
    return apply_intents(
        DialogState(category_id="shoes"), intents, oracle, schema=schema
    ).state


def test_compile_fig1_final(oracle, schema):
    request = compile_request(fig1_final_state(oracle, schema), schema)
    assert request.category_phrase == "shoes"
    assert request.query_spans == (QuerySpan("good for running", positive=True),)
    assert request.restricts["brand"].allowed_tags == {"nike"}
    assert request.restricts["color"].forbidden_tags == {"white"}
    assert request.restricts["waterproof"].allowed_tags == {"waterproof"}
    assert request.restricts["price"].range == Range(
        upper=Bound(Fraction(80), inclusive=False)
    )
    assert request.restricts["size"].allowed_tags == {"9"}


def test_compile_span_only(oracle, schema):
    state = apply_intents(
        DialogState(category_id="shoes"),
        [Intent(Operator.SET_VALUE, value=SpanValue("square heels"),
                predicate_type=PredicateType.EQUALS)],
        oracle, schema=schema,
    ).state
    request = compile_request(state, schema)
    assert request.query_spans == (QuerySpan("square heels", positive=True),)
    assert request.restricts == {}


def test_compile_phrase_only(schema):
    request = compile_request(DialogState(category_id="soap"), schema)
    assert request.category_phrase == "hand soap"
    assert request.query_spans == ()
    assert request.restricts == {}


def test_compile_requires_category(schema):
    with pytest.raises(FulfillmentError):
        compile_request(DialogState(), schema)


def test_build_index_postings_hand_count(index):
    # Hand count over fixtures/catalog.json: nike shoes are p01-p03, p07,
    # p09, p10, p13; waterproof shoes are p01, p03, p04, p07, p09, p10, p13.
    assert index.postings[("shoes", "brand", "nike")] == {
        "p01", "p02", "p03", "p07", "p09", "p10", "p13",
    }
    assert index.postings[("shoes", "waterproof", "waterproof")] == {
        "p01", "p03", "p04", "p07", "p09", "p10", "p13",
    }
    assert index.by_category["soap"] == {"p18", "p19"}


def test_build_index_empty(schema):
    index = build_index('{"products": []}', schema)
    assert index.products == {}


def test_catalog_rejects_foreign_tag(schema):
    doc = {
        "products": [
            {
                "id": "x1", "category": "soap", "title": "x",
                "description": "", "tags": [{"facet": "color", "tag": "red"}],
                "values": {},
            }
        ]
    }
    with pytest.raises(CatalogError, match="color"):
        load_catalog(json.dumps(doc), schema)


def test_catalog_rejects_unknown_keys(schema):
    doc = {"products": [{"id": "x", "category": "soap", "title": "x", "oops": 1}]}
    with pytest.raises(CatalogError, match="oops"):
        load_catalog(json.dumps(doc), schema)


def test_search_not_white(index, schema, catalog):
    request = SearchRequest(
        category_id="shoes",
        category_phrase="shoes",
        restricts={"color": FacetRestrict(forbidden_tags=frozenset({"white"}))},
    )
    got = search(index, request, page_size=100)
    expected = oracle_search(catalog, request, schema, 100)
    assert [p.id for p in got] == [p.id for p in expected]
    assert all("white" not in {t for _, t in p.tag_assignments} for p in got)


def test_search_fig1_final(oracle, schema, index):
    request = compile_request(fig1_final_state(oracle, schema), schema)
    got = search(index, request, page_size=10)
    assert [p.id for p in got] == ["p01", "p09"]


def test_search_matches_nothing(index):
    request = SearchRequest(
        category_id="shoes",
        category_phrase="shoes",
        query_spans=(QuerySpan("zz unseen tokens", positive=True),),
    )
    assert search(index, request, page_size=10) == []


def test_search_sort_ascending(index, schema, catalog):
    request = SearchRequest(
        category_id="shoes",
        category_phrase="shoes",
        sort=("price", SortDirection.ASCENDING),
    )
    got = search(index, request, page_size=100)
    prices = [p.numeric_values["price"] for p in got]
    assert prices == sorted(prices)
    assert [p.id for p in got] == [
        p.id for p in oracle_search(catalog, request, schema, 100)
    ]


def test_search_page_size(index):
    request = SearchRequest(category_id="shoes", category_phrase="shoes")
    assert len(search(index, request, page_size=3)) == 3


def test_negative_span_partitions(index, schema, catalog):
    base = SearchRequest(category_id="shoes", category_phrase="shoes")
    everything = {p.id for p in search(index, base, page_size=100)}
    positive = SearchRequest(
        category_id="shoes", category_phrase="shoes",
        query_spans=(QuerySpan("running", positive=True),),
    )
    negative = SearchRequest(
        category_id="shoes", category_phrase="shoes",
        query_spans=(QuerySpan("running", positive=False),),
    )
    pos_ids = {p.id for p in search(index, positive, page_size=100)}
    neg_ids = {p.id for p in search(index, negative, page_size=100)}
    assert pos_ids | neg_ids == everything
    assert not pos_ids & neg_ids


def test_monotonicity(index):
    request = SearchRequest(
        category_id="shoes", category_phrase="shoes",
        restricts={"brand": FacetRestrict(allowed_tags=frozenset({"nike"}))},
    )
    base_ids = {p.id for p in search(index, request, page_size=100)}
    tighter = SearchRequest(
        category_id="shoes", category_phrase="shoes",
        restricts={
            "brand": FacetRestrict(allowed_tags=frozenset({"nike"})),
            "color": FacetRestrict(forbidden_tags=frozenset({"red"})),
            "price": FacetRestrict(range=Range(upper=Bound(Fraction(100), True))),
        },
    )
    tighter_ids = {p.id for p in search(index, tighter, page_size=100)}
    assert tighter_ids <= base_ids


def test_missing_range_value_excluded(index, schema, catalog):
    # socks have no "size" numeric values; a size range on socks' ordered
    # facet uses ranks, and products without the facet disappear.
    request = SearchRequest(
        category_id="socks", category_phrase="socks",
        restricts={"size": FacetRestrict(range=Range(
            lower=Bound(Fraction(1), True)
        ))},
    )
    got = search(index, request, page_size=100)
    assert {p.id for p in got} == {"p15", "p16"}  # medium and large
    assert [p.id for p in got] == [
        p.id for p in oracle_search(catalog, request, schema, 100)
    ]


def test_facet_stats_median(catalog):
    shoes = [p for p in catalog if p.category_id == "shoes"][:3]
    stats = facet_stats(shoes, "price")
    values = sorted(p.numeric_values["price"] for p in shoes)
    assert stats.count == 3
    assert stats.median == values[1]
    assert stats.min == values[0]
    assert stats.max == values[2]


def test_facet_stats_absent(catalog):
    soap = [p for p in catalog if p.category_id == "soap"]
    assert facet_stats(soap, "screen_size") is None


def test_facet_stats_rank_fallback(catalog, schema):
    socks = [p for p in catalog if p.category_id == "socks"]
    stats = facet_stats(socks, "size", schema)
    assert stats is not None
    assert stats.count == 3  # ranks 0, 1, 2
    assert stats.median == 1
