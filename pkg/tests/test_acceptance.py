"""Acceptance suite: one test per release criterion, at stated tolerances.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS line per
criterion.
"""

import copy
import json
import random
import time
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from conftest import FIG1_UTTERANCES, load_golden
from oracle_search import oracle_search
from strategies import intent_sequences

from facetalk.clu import (
    Inclusivity,
    Intent,
    NumberValue,
    Operator,
    ParseContext,
    PredicateType,
    SpanValue,
    TagValue,
    parse_utterance,
)
from facetalk.corpusgen import expand_all, instantiate, round_trip_eval
from facetalk.dst import (
    Bound,
    DialogState,
    Predicate,
    Range,
    apply_intents,
    canonical_state_json,
    merge_range,
    render_state,
)
from facetalk.fulfillment import (
    Index,
    Product,
    compile_request,
    search,
)
from facetalk.session import SessionManager, TurnEvent


def report(name: str, detail: str = ""):
    suffix = f" ({detail})" if detail else ""
    print(f"ACCEPTANCE {name}: PASS{suffix}")


# ---------------------------------------------------------------------------
# Criterion 1: Figure 1 golden dialog


def test_fig1_golden_dialog(schema, lexicon, index):
    golden = load_golden("fig1_states.json")
    manager = SessionManager(schema, lexicon, index, page_size=10, seed=99)
    sid = manager.create_session()

    started = time.perf_counter()
    observed = []
    for utterance in FIG1_UTTERANCES:
        response = manager.handle_utterance(sid, utterance)
        state = manager._session(sid).state
        observed.append((utterance, state, response))
    elapsed = time.perf_counter() - started

    assert len(golden) == len(observed) == 11
    for (utterance, state, response), expected in zip(observed, golden):
        assert utterance == expected["utterance"]
        assert canonical_state_json(state) == json.dumps(
            expected["state"], sort_keys=True, separators=(",", ":")
        )
        assert response.state_summary == expected["summary"]
        assert [e.value for e in response.events] == expected["events"]
        assert [p.id for p in response.products] == expected["product_ids"]

    # Spot checks the criterion calls out explicitly.
    turn4 = observed[3][1]
    assert {p.value for p in turn4.facet_states["color"].negative} == {
        TagValue("color", "white")
    }
    assert not turn4.facet_states["color"].positive

    turn7 = observed[6][1]
    assert {p.value for p in turn7.facet_states["waterproof"].positive} == {
        TagValue("waterproof", "waterproof")
    }

    turn8 = observed[7][1]
    turn9 = observed[8][1]
    assert turn8.facet_states["price"].range.upper.value == 100
    assert turn9.facet_states["price"].range.upper.value == 80

    turn11_events = observed[10][2].events
    assert TurnEvent.CATEGORY_SWITCH in turn11_events
    turn11 = observed[10][1]
    assert turn11.category_id == "socks"
    assert set(turn11.facet_states) == {"color"}

    assert elapsed < 1.0
    report("figure-1 golden dialog", f"{elapsed:.3f}s for 11 turns")


# ---------------------------------------------------------------------------
# Criterion 2: Figure 3 parse table


def _row(intents):
    return [i.to_json() for i in intents]


def test_fig3_parse_table(schema, lexicon):
    def parse(text, category="shoes", last=None):
        context = ParseContext(active_category=category, last_touched_facet=last)
        return parse_utterance(text, schema, lexicon, context)

    checks = []

    r1 = parse("Show me some Nike shoes", category=None)
    assert r1.category_decision.category_id == "shoes"
    assert _row(r1.intents) == [{
        "operator": "SET_VALUE", "facet": "brand",
        "value": {"tag": {"facet": "brand", "id": "nike"}},
        "predicate_type": "EQUALS", "inclusivity": "UNDEFINED",
    }]
    checks.append("(1)")

    r2 = parse("Something for running")
    assert _row(r2.intents) == [{
        "operator": "SET_VALUE", "value": {"span": "running"},
        "predicate_type": "EQUALS", "inclusivity": "UNDEFINED",
    }]
    checks.append("(2)")

    r3 = parse("Adidas ones too please")
    assert _row(r3.intents) == [{
        "operator": "SET_VALUE", "facet": "brand",
        "value": {"tag": {"facet": "brand", "id": "adidas"}},
        "predicate_type": "EQUALS", "inclusivity": "INCLUSIVE",
    }]
    checks.append("(3)")

    r4 = parse("Orange is okay but I don't want pink")
    assert _row(r4.intents) == [
        {
            "operator": "SET_VALUE", "facet": "color",
            "value": {"tag": {"facet": "color", "id": "orange"}},
            "predicate_type": "EQUALS", "inclusivity": "UNDEFINED",
        },
        {
            "operator": "SET_VALUE", "facet": "color",
            "value": {"tag": {"facet": "color", "id": "pink"}},
            "predicate_type": "NOT_EQUALS", "inclusivity": "UNDEFINED",
        },
    ]
    checks.append("(4)")

    r5 = parse("Do you have anything in razmatazz?")
    assert _row(r5.intents) == [{
        "operator": "SET_VALUE", "value": {"span": "razmatazz"},
        "predicate_type": "EQUALS", "inclusivity": "UNDEFINED",
    }]
    checks.append("(5)")

    r6 = parse("Actually any color is OK")
    assert _row(r6.intents) == [{"operator": "CLEAR_FACET", "facet": "color"}]
    checks.append("(6)")

    r7 = parse("Size 9")
    assert _row(r7.intents) == [{
        "operator": "SET_VALUE", "facet": "size",
        "value": {"tag": {"facet": "size", "id": "9"}},
        "predicate_type": "EQUALS", "inclusivity": "UNDEFINED",
    }]
    checks.append("(7)")

    # NudgeFacetOp(INCREASE, Size): INCREASE is the POSITIVE alias.
    r8 = parse("Show me something bigger", last="size")
    assert _row(r8.intents) == [{
        "operator": "NUDGE_FACET", "facet": "size", "nudge_direction": "POSITIVE",
    }]
    checks.append("(8)")

    r9 = parse("It doesn't have to be black")
    assert _row(r9.intents) == [{
        "operator": "CLEAR_VALUE", "facet": "color",
        "value": {"tag": {"facet": "color", "id": "black"}},
    }]
    checks.append("(9)")

    r10 = parse("Do you have anything less than fifty bucks?")
    assert _row(r10.intents) == [{
        "operator": "SET_VALUE", "facet": "price",
        "value": {"tag": {"facet": "price", "id": "50"}},
        "predicate_type": "LESS_THAN", "inclusivity": "UNDEFINED",
    }]
    checks.append("(10)")

    r11 = parse("start over")
    assert _row(r11.intents) == [{"operator": "CLEAR_ALL_FACETS"}]
    checks.append("(11)")

    assert len(checks) == 11
    report("figure-3 parse table", "11/11 rows exact")


# ---------------------------------------------------------------------------
# Criterion 3: §5.1 reordering examples


def test_reordering_examples(schema, lexicon, oracle):
    # Example 1: the clear must land before the set.
    context = ParseContext(active_category="shoes")
    r1 = parse_utterance(
        "just make sure they are not blue, but reset other color preferences",
        schema, lexicon, context,
    )
    assert sorted(i.operator for i in r1.intents) == sorted(
        [Operator.SET_VALUE, Operator.CLEAR_FACET]
    )
    state1 = apply_intents(
        DialogState(category_id="shoes"), list(r1.intents), oracle, schema=schema
    ).state
    fs = state1.facet_states["color"]
    assert {p.value for p in fs.negative} == {TagValue("color", "blue")}
    assert not fs.positive and fs.range is None

    # Example 2: the clear-all must land before the price bound.
    prior = apply_intents(
        DialogState(category_id="shoes"),
        [
            Intent(Operator.SET_VALUE, facet_id="brand",
                   value=TagValue("brand", "nike"),
                   predicate_type=PredicateType.EQUALS),
            Intent(Operator.SET_VALUE, facet_id="color",
                   value=TagValue("color", "red"),
                   predicate_type=PredicateType.EQUALS),
        ],
        oracle, schema=schema,
    ).state
    r2 = parse_utterance(
        "make sure it's under $100 but reset all other preferences",
        schema, lexicon, ParseContext(active_category="shoes"),
    )
    assert sorted(i.operator for i in r2.intents) == sorted(
        [Operator.SET_VALUE, Operator.CLEAR_ALL_FACETS]
    )
    state2 = apply_intents(prior, list(r2.intents), oracle, schema=schema).state
    assert set(state2.facet_states) == {"price"}
    assert state2.facet_states["price"].range == Range(
        upper=Bound(Fraction(100), inclusive=False)
    )
    report("section-5.1 reordering examples", "2/2 outcomes exact")


# ---------------------------------------------------------------------------
# Criterion 4: grammar round trip


def test_grammar_round_trip(schema, lexicon, grammar):
    templates = expand_all(grammar)
    corpus = instantiate(templates, schema, 5000, seed=7,
                         span_values=grammar.span_values)
    assert len(corpus) == 5000

    def parse(text, category_id):
        context = ParseContext(active_category=category_id)
        return parse_utterance(text, schema, lexicon, context).intents

    result = round_trip_eval(corpus, parse)
    assert result.total == 5000
    assert result.mismatches == []
    assert result.exact_match == 5000
    report("grammar round trip", "5000/5000 exact match, seed=7")


# ---------------------------------------------------------------------------
# Criterion 5: fulfillment oracle equivalence


BRANDS = ["nike", "adidas", "puma", "reebok"]
COLORS = ["red", "pink", "white", "orange", "black", "blue", "green",
          "purple", "turquoise", "grey", "brown", "yellow"]
SIZES = [str(n) for n in range(6, 15)]
WORDS = ["trail", "running", "walking", "waterproof", "mesh", "boot",
         "classic", "retro", "winter", "road", "studio", "light", "gum",
         "breathable", "summer", "storm"]


def _random_catalog(rng: random.Random, schema, count=1000):
    products = []
    for i in range(count):
        tags = {
            ("brand", rng.choice(BRANDS)),
            ("color", rng.choice(COLORS)),
            ("size", rng.choice(SIZES)),
        }
        if rng.random() < 0.5:
            tags.add(("waterproof", "waterproof"))
        size_tag = next(t for f, t in tags if f == "size")
        values = {
            "price": Fraction(rng.randrange(1500, 25000), 100),
            "size": Fraction(int(size_tag)),
        }
        text_words = rng.sample(WORDS, rng.randrange(2, 6))
        products.append(
            Product(
                id=f"r{i:04d}",
                category_id="shoes",
                title=" ".join(text_words[:2]),
                description=" ".join(text_words[2:]),
                tag_assignments=frozenset(tags),
                numeric_values=values,
            )
        )
    return products


def _random_state(rng: random.Random, oracle, schema) -> DialogState:
    intents = []
    for _ in range(rng.randrange(0, 5)):
        kind = rng.random()
        if kind < 0.3:
            facet, tag = rng.choice(
                [("brand", rng.choice(BRANDS)), ("color", rng.choice(COLORS)),
                 ("size", rng.choice(SIZES)), ("waterproof", "waterproof")]
            )
            intents.append(Intent(
                Operator.SET_VALUE, facet_id=facet, value=TagValue(facet, tag),
                predicate_type=PredicateType.EQUALS,
                inclusivity=rng.choice(list(Inclusivity)),
            ))
        elif kind < 0.5:
            facet, tag = rng.choice(
                [("brand", rng.choice(BRANDS)), ("color", rng.choice(COLORS))]
            )
            intents.append(Intent(
                Operator.SET_VALUE, facet_id=facet, value=TagValue(facet, tag),
                predicate_type=PredicateType.NOT_EQUALS,
            ))
        elif kind < 0.75:
            facet = rng.choice(["price", "size"])
            bound = (
                Fraction(rng.randrange(1000, 30000), 100)
                if facet == "price"
                else Fraction(rng.randrange(5, 16))
            )
            intents.append(Intent(
                Operator.SET_VALUE, facet_id=facet, value=NumberValue(bound),
                predicate_type=rng.choice([
                    PredicateType.LESS_THAN, PredicateType.LESS_EQ,
                    PredicateType.GREATER_THAN, PredicateType.GREATER_EQ,
                ]),
            ))
        elif kind < 0.9:
            intents.append(Intent(
                Operator.SET_VALUE,
                value=SpanValue(" ".join(
                    rng.sample(WORDS, rng.randrange(1, 3))
                )),
                predicate_type=rng.choice(
                    [PredicateType.EQUALS, PredicateType.NOT_EQUALS]
                ),
            ))
        else:
            from facetalk.clu import SortDirection

            intents.append(Intent(
                Operator.ORDER_BY, facet_id=rng.choice(["price", "size"]),
                sort_direction=rng.choice(list(SortDirection)),
            ))
    return apply_intents(
        DialogState(category_id="shoes"), intents, oracle, schema=schema
    ).state


def test_fulfillment_oracle_equivalence(schema, oracle):
    rng = random.Random(20240817)
    products = _random_catalog(rng, schema, 1000)
    index = Index(products, schema)

    started = time.perf_counter()
    compared = 0
    for _ in range(500):
        state = _random_state(rng, oracle, schema)
        request = compile_request(state, schema)
        got = search(index, request, page_size=1000)
        expected = oracle_search(products, request, schema, 1000)
        assert [p.id for p in got] == [p.id for p in expected]
        compared += 1
    elapsed = time.perf_counter() - started
    assert compared == 500
    assert elapsed < 30.0
    report("fulfillment oracle equivalence",
           f"500 states x 1000 products in {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# Criterion 6: range-merge membership oracle


RANGE_TYPES = [
    PredicateType.LESS_THAN, PredicateType.LESS_EQ,
    PredicateType.GREATER_THAN, PredicateType.GREATER_EQ,
]


def _oracle_halflines(seq):
    """Recency-resolved conjunction, maintained as raw half-lines."""
    def satisfies(halflines, v):
        for ptype, bound in halflines:
            if ptype == PredicateType.LESS_THAN and not v < bound:
                return False
            if ptype == PredicateType.LESS_EQ and not v <= bound:
                return False
            if ptype == PredicateType.GREATER_THAN and not v > bound:
                return False
            if ptype == PredicateType.GREATER_EQ and not v >= bound:
                return False
        return True

    def satisfiable(halflines):
        lows = [(b, ptype == PredicateType.GREATER_EQ)
                for ptype, b in halflines
                if ptype in (PredicateType.GREATER_THAN, PredicateType.GREATER_EQ)]
        highs = [(b, ptype == PredicateType.LESS_EQ)
                 for ptype, b in halflines
                 if ptype in (PredicateType.LESS_THAN, PredicateType.LESS_EQ)]
        if not lows or not highs:
            return True
        lo = max(lows, key=lambda x: (x[0], not x[1]))
        hi = min(highs, key=lambda x: (x[0], x[1]))
        if lo[0] < hi[0]:
            return True
        if lo[0] > hi[0]:
            return False
        return lo[1] and hi[1]

    current: list = []
    for item in seq:
        candidate = current + [item]
        current = candidate if satisfiable(candidate) else [item]
    return lambda v: satisfies(current, v)


def test_range_merge_oracle():
    rng = random.Random(4242)
    checked = 0
    for _facet in ("price", "size"):  # one NUMERIC, one ORDERED+NUMERIC domain
        for _ in range(10_000):
            seq = [
                (rng.choice(RANGE_TYPES), Fraction(rng.randrange(0, 1200), 4))
                for _ in range(rng.randrange(1, 6))
            ]
            merged = None
            for ptype, bound in seq:
                merged = merge_range(merged, ptype, bound)
            member = _oracle_halflines(seq)

            samples = set()
            for ptype, bound in seq:
                samples.add(bound)
                samples.add(bound + Fraction(1, 1000))
                samples.add(bound - Fraction(1, 1000))
            while len(samples) < 100:
                samples.add(Fraction(rng.randrange(-100, 1400), 4))
            for v in samples:
                assert merged.contains(v) == member(v), (seq, v)
                checked += 1
    assert checked >= 2 * 10_000 * 100
    report("range-merge membership oracle",
           f"{checked} membership checks, zero discrepancies")


# ---------------------------------------------------------------------------
# Criterion 7: DST algebraic property suite (>= 10,000 cases)


ALGEBRA_SETTINGS = settings(
    max_examples=2100,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much],
)

_case_counts: dict[str, int] = {}


def _count(name):
    _case_counts[name] = _case_counts.get(name, 0) + 1


@given(seq=intent_sequences())
@ALGEBRA_SETTINGS
def test_algebra_purity_and_replay(oracle, schema, seq):
    state = DialogState(category_id="shoes")
    frozen = copy.deepcopy(state)
    try:
        first = apply_intents(state, seq, oracle, schema=schema)
        second = apply_intents(state, seq, oracle, schema=schema)
    except Exception:
        assert state == frozen
        _count("purity")
        return
    assert state == frozen
    assert first == second
    assert canonical_state_json(first.state) == canonical_state_json(second.state)
    _count("purity")


@given(seq=intent_sequences(max_size=4), tag=st.sampled_from(
    [("color", "red"), ("brand", "nike"), ("size", "9")]
))
@ALGEBRA_SETTINGS
def test_algebra_exclusive_postcondition(oracle, schema, seq, tag):
    facet_id, tag_id = tag
    state = _try_apply(oracle, schema, seq)
    update = apply_intents(
        state,
        [Intent(Operator.SET_VALUE, facet_id=facet_id,
                value=TagValue(facet_id, tag_id),
                predicate_type=PredicateType.EQUALS,
                inclusivity=Inclusivity.EXCLUSIVE)],
        oracle, schema=schema,
    )
    fs = update.state.facet_states[facet_id]
    assert {p.value for p in fs.positive} == {TagValue(facet_id, tag_id)}
    assert fs.negative == ()
    _count("exclusive")


@given(seq=intent_sequences(max_size=4))
@ALGEBRA_SETTINGS
def test_algebra_clear_all_empties(oracle, schema, seq):
    state = _try_apply(oracle, schema, seq)
    update = apply_intents(
        state, [Intent(Operator.CLEAR_ALL_FACETS)], oracle, schema=schema
    )
    assert update.state.empty
    assert render_state(update.state, schema) == "no preferences yet"
    assert update.state.category_id == "shoes"
    _count("clear_all")


@given(seq=intent_sequences())
@ALGEBRA_SETTINGS
def test_algebra_ungrounded_dedup(oracle, schema, seq):
    state = _try_apply(oracle, schema, seq)
    spans = [p for p in state.ungrounded]
    for i, a in enumerate(spans):
        for b in spans[i + 1:]:
            assert not oracle.same_tag("shoes", a.value.text, b.value.text)
    _count("dedup")


@given(seq=intent_sequences(max_size=4), tag=st.sampled_from(
    [("color", "red"), ("brand", "nike"), ("size", "9"), ("price", "50")]
))
@ALGEBRA_SETTINGS
def test_algebra_clear_value_locality(oracle, schema, seq, tag):
    facet_id, tag_id = tag
    state = _try_apply(oracle, schema, seq)
    target = TagValue(facet_id, tag_id)
    update = apply_intents(
        state,
        [Intent(Operator.CLEAR_VALUE, facet_id=facet_id, value=target)],
        oracle, schema=schema,
    )
    after = update.state
    for fid, fs in state.facet_states.items():
        after_fs = after.facet_states.get(
            fid, type(fs)(facet_id=fid)
        )
        for p in fs.positive:
            if p.value != target:
                assert p in after_fs.positive
        for p in fs.negative:
            if p.value != target:
                assert p in after_fs.negative
        assert after_fs.range == fs.range
        assert target not in {p.value for p in after_fs.positive}
        assert target not in {p.value for p in after_fs.negative}
    assert after.ungrounded == state.ungrounded
    assert after.sort == state.sort
    _count("clear_value")


def _try_apply(oracle, schema, seq):
    try:
        return apply_intents(
            DialogState(category_id="shoes"), seq, oracle, schema=schema
        ).state
    except Exception:
        return DialogState(category_id="shoes")


def test_algebra_volume_report():
    total = sum(_case_counts.values())
    assert total >= 10_000, _case_counts
    report("dst algebraic suite", f"{total} randomized cases across 5 properties")


# ---------------------------------------------------------------------------
# Criterion 8: ungrounded replacement (lemon-scented -> lavender)


def test_ungrounded_replacement(schema, lexicon, index):
    manager = SessionManager(schema, lexicon, index, page_size=5, seed=5)
    sid = manager.create_session()
    manager.handle_utterance(sid, "i want to buy lemon-scented hand soap")
    state = manager._session(sid).state
    assert [p.value.text for p in state.ungrounded] == ["lemon scented"]

    manager.handle_utterance(sid, "no, i actually prefer lavender")
    state = manager._session(sid).state
    assert [p.value.text for p in state.ungrounded] == ["lavender"]
    assert len(state.ungrounded) == 1
    report("ungrounded replacement", "exactly one scent span remains")
