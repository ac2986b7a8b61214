#!/usr/bin/env python3
"""Regenerate fixtures/grammar.json.

The grammar and the parser's cue inventory are co-maintained: every
alternative here must parse back to its signature's intent sequence.
Run from the repo root after touching either side:

    python scripts/build_grammar.py
"""

from __future__ import annotations

import json
from pathlib import Path

RULES: dict[str, list[str]] = {
    # Shared verb phrases
    "_IWant": [
        "i want", "i would like", "show me", "i am looking for",
        "find me", "give me", "i need", "i like",
    ],
    "_Dont": ["don't", "do not"],
    "_IDontWant": [
        "i (_Dont) want", "i (_Dont) like", "i wouldn't like",
        "i dislike", "i hate", "i (_Dont) want to see",
    ],
    "_Please": ["please", ""],
    "_Anything": ["anything", "something", "do you have anything"],
    "_UnderWord": ["under", "below", "less than"],
    "_OverWord": ["over", "above", "more than"],
    "_Joiner": ["but", "and"],

    # Positive tag preference (EQUALS, UNDEFINED)
    "_PosTag": [
        "(_IWant) <tag> (_Please)",
        "(_IWant) <tag> ones",
        "(_IWant) something in <tag>",
        "do you have anything in <tag>",
        "anything in <tag>",
        "how about <tag>",
        "what about <tag>",
        "<tag> ones (_Please)",
        "got anything in <tag>",
        "let us see <tag>",
    ],
    "_PosTagP": [
        "(_IWant) <tag>",
        "how about <tag>",
        "<tag> is okay",
        "anything in <tag>",
    ],
    "_PosTag2P": [
        "(_IWant) <tag2>",
        "how about <tag2>",
        "<tag2> is okay",
        "anything in <tag2>",
    ],

    # Positive tag, INCLUSIVE
    "_PosTagInc": [
        "(_IWant) <tag> too",
        "(_IWant) <tag> as well",
        "also show me <tag>",
        "<tag> ones too (_Please)",
        "let us also see <tag>",
        "how about <tag> too",
        "show me <tag> also",
    ],
    "_PosTagInc2P": [
        "(_IWant) <tag2> too",
        "also show me <tag2>",
        "<tag2> as well",
    ],

    # Positive tag, EXCLUSIVE
    "_PosTagExc": [
        "(_IWant) <tag> only",
        "(_IWant) only <tag>",
        "only <tag> (_Please)",
        "i only want <tag>",
        "(_IWant) just <tag>",
        "just <tag> (_Please)",
    ],

    # Negative tag preference (Fig-4-shaped negation grammar)
    "_NegTag": [
        "(_IDontWant) <tag>",
        "(_IWant) no <tag>",
        "(_IDontWant) <tag> ones",
        "(_IWant) something that is not <tag>",
        "not <tag> (_Please)",
        "do not show me <tag>",
        "without <tag>",
    ],
    "_NegTagP": [
        "(_IDontWant) <tag>",
        "(_IWant) no <tag>",
        "not <tag>",
    ],
    "_NegTag2P": [
        "(_IDontWant) <tag2>",
        "(_IWant) no <tag2>",
        "not <tag2>",
    ],

    # Ungrounded spans
    "_PosSpan": [
        "do you have anything in <span>",
        "(_IWant) something in <span>",
        "anything in <span>",
        "(_IWant) something with <span>",
        "(_IWant) ones with <span>",
        "how about <span>",
    ],
    "_PosSpanP": [
        "do you have anything in <span>",
        "(_IWant) something with <span>",
        "anything in <span>",
    ],
    "_PosSpan2P": [
        "do you have anything in <span2>",
        "(_IWant) something with <span2>",
        "anything in <span2>",
    ],
    "_PosSpanGoodFor": [
        "(_IWant) ones that are good for <span>",
        "(_IWant) something good for <span>",
        "anything good for <span>",
    ],
    "_PosSpanInc": [
        "(_IWant) something with <span> too",
        "also show me ones with <span>",
        "(_IWant) <span> as well",
    ],
    "_NegSpan": [
        "(_IDontWant) <span>",
        "(_IWant) ones without <span>",
        "no <span> (_Please)",
        "do not show me <span>",
        "(_IWant) something without <span>",
    ],
    "_NegSpanP": [
        "(_IWant) ones without <span>",
        "no <span>",
        "do not show me <span>",
    ],
    "_NegSpan2P": [
        "(_IWant) ones without <span2>",
        "no <span2>",
        "do not show me <span2>",
    ],

    # Price ranges
    "_MoneyLT": [
        "(_IWant) something (_UnderWord) <money>",
        "(_Anything) (_UnderWord) <money>",
        "(_UnderWord) <money> (_Please)",
        "keep it (_UnderWord) <money>",
    ],
    "_MoneyLTP": [
        "(_Anything) under <money>",
        "less than <money>",
        "keep it under <money>",
    ],
    "_MoneyLE": [
        "at most <money>",
        "no more than <money>",
        "up to <money>",
        "<money> or less",
        "<money> or under",
        "(_IWant) something at most <money>",
    ],
    "_MoneyGT": [
        "(_Anything) (_OverWord) <money>",
        "(_OverWord) <money> (_Please)",
        "(_IWant) something (_OverWord) <money>",
    ],
    "_MoneyGE": [
        "at least <money>",
        "<money> or more",
        "<money> or above",
        "(_IWant) something at least <money>",
    ],
    "_MoneyGE2P": [
        "at least <money2>",
        "<money2> or more",
    ],
    "_MoneyBetween": [
        "between <money> and <money2>",
        "(_IWant) something between <money> and <money2>",
        "(_Anything) between <money> and <money2>",
    ],

    # Ordered-tag ranges
    "_OrdGE": [
        "<ordtag> or more",
        "(_IWant) <ordtag> or more",
        "at least <ordtag>",
        "<ordtag> or above",
    ],
    "_OrdLE": [
        "<ordtag> or less",
        "at most <ordtag>",
        "no more than <ordtag>",
        "<ordtag> or under",
    ],

    # Clear operators
    "_ClearValueTag": [
        "it does not have to be <tag>",
        "does not have to be <tag>",
        "it does not need to be <tag>",
        "i do not care if it is <tag> or not",
        "i don't care if it's <tag> or not",
        "it doesn't have to be <tag>",
    ],
    "_ClearValueTagP": [
        "it does not have to be <tag>",
        "i do not care if it is <tag> or not",
    ],
    "_ClearValueTag2P": [
        "it does not have to be <tag2>",
        "i do not care if it is <tag2> or not",
    ],
    "_ClearValueSpan": [
        "it does not have to be <span>",
        "i do not care if it is <span> or not",
    ],
    "_ClearFacet": [
        "any <facet> will do",
        "any <facet> is fine",
        "almost any <facet> will do",
        "i do not care about the <facet>",
        "i don't care about the <facet>",
        "i do not care about <facet>",
        "<facet> does not matter",
        "the <facet> doesn't matter",
    ],
    "_ClearFacetP": [
        "any <facet> will do",
        "i do not care about the <facet>",
        "<facet> does not matter",
    ],
    "_ClearFacet2P": [
        "any <facet2> will do",
        "i do not care about the <facet2>",
        "<facet2> does not matter",
    ],
    "_ClearAll": [
        "start over",
        "let us start over",
        "reset everything",
        "start again",
        "clear everything",
        "reset",
        "please start over",
        "forget everything",
        "start from scratch",
    ],

    # Nudges and sorts
    "_NudgePos": [
        "(_IWant) something <comparative_pos>",
        "show me something <comparative_pos>",
        "anything <comparative_pos>",
        "do you have something <comparative_pos>",
        "something a little <comparative_pos>",
    ],
    "_NudgeNeg": [
        "(_IWant) something <comparative_neg>",
        "show me something <comparative_neg>",
        "anything <comparative_neg>",
        "anything even <comparative_neg>",
        "do you have something <comparative_neg>",
    ],
    "_OrderAscSup": [
        "show me the <superlative_neg> first",
        "<superlative_neg> first",
        "show me the <superlative_neg>",
        "the <superlative_neg> ones first",
    ],
    "_OrderDescSup": [
        "show me the <superlative_pos> first",
        "<superlative_pos> first",
        "show me the <superlative_pos>",
        "the <superlative_pos> ones first",
    ],
    "_OrderAscNamed": [
        "sort by <facet>",
        "sort by <facet> ascending",
        "sort by <facet> low to high",
        "order by <facet>",
    ],
    "_OrderDescNamed": [
        "sort by <facet> descending",
        "sort by <facet> high to low",
        "order by <facet> descending",
    ],
}

SPAN_VALUES = [
    "razmatazz",
    "back pain",
    "wide feet",
    "flat feet",
    "high arches",
    "ankle straps",
    "square heels",
    "glitter finish",
    "arch support",
    "anti slip",
    "vegan leather",
    "recycled materials",
    "extra cushioning",
]


def intent(operator, **kwargs):
    out = {"operator": operator}
    out.update({k: v for k, v in kwargs.items() if v is not None})
    return out


SET = "SET_VALUE"

SINGLE_SIGNATURES = [
    ("set_equals_tag", "_PosTag",
     [intent(SET, predicate_type="EQUALS", inclusivity="UNDEFINED",
             facet="<tag>", value="<tag>")]),
    ("set_equals_tag_inclusive", "_PosTagInc",
     [intent(SET, predicate_type="EQUALS", inclusivity="INCLUSIVE",
             facet="<tag>", value="<tag>")]),
    ("set_equals_tag_exclusive", "_PosTagExc",
     [intent(SET, predicate_type="EQUALS", inclusivity="EXCLUSIVE",
             facet="<tag>", value="<tag>")]),
    ("set_not_equals_tag", "_NegTag",
     [intent(SET, predicate_type="NOT_EQUALS", inclusivity="UNDEFINED",
             facet="<tag>", value="<tag>")]),
    ("set_equals_span", "_PosSpan",
     [intent(SET, predicate_type="EQUALS", inclusivity="UNDEFINED", value="<span>")]),
    ("set_equals_span_good_for", "_PosSpanGoodFor",
     [intent(SET, predicate_type="EQUALS", inclusivity="UNDEFINED",
             value="good for <span>")]),
    ("set_equals_span_inclusive", "_PosSpanInc",
     [intent(SET, predicate_type="EQUALS", inclusivity="INCLUSIVE", value="<span>")]),
    ("set_not_equals_span", "_NegSpan",
     [intent(SET, predicate_type="NOT_EQUALS", inclusivity="UNDEFINED", value="<span>")]),
    ("set_less_than_money", "_MoneyLT",
     [intent(SET, predicate_type="LESS_THAN", facet="<money>", value="<money>")]),
    ("set_less_eq_money", "_MoneyLE",
     [intent(SET, predicate_type="LESS_EQ", facet="<money>", value="<money>")]),
    ("set_greater_than_money", "_MoneyGT",
     [intent(SET, predicate_type="GREATER_THAN", facet="<money>", value="<money>")]),
    ("set_greater_eq_money", "_MoneyGE",
     [intent(SET, predicate_type="GREATER_EQ", facet="<money>", value="<money>")]),
    ("set_between_money", "_MoneyBetween",
     [intent(SET, predicate_type="GREATER_EQ", facet="<money>", value="<money>"),
      intent(SET, predicate_type="LESS_EQ", facet="<money2>", value="<money2>")]),
    ("set_greater_eq_ordered_tag", "_OrdGE",
     [intent(SET, predicate_type="GREATER_EQ", facet="<ordtag>", value="<ordtag>")]),
    ("set_less_eq_ordered_tag", "_OrdLE",
     [intent(SET, predicate_type="LESS_EQ", facet="<ordtag>", value="<ordtag>")]),
    ("clear_value_tag", "_ClearValueTag",
     [intent("CLEAR_VALUE", facet="<tag>", value="<tag>")]),
    ("clear_value_span", "_ClearValueSpan",
     [intent("CLEAR_VALUE", value="<span>")]),
    ("clear_facet", "_ClearFacet",
     [intent("CLEAR_FACET", facet="<facet>")]),
    ("clear_all_facets", "_ClearAll",
     [intent("CLEAR_ALL_FACETS")]),
    ("nudge_positive", "_NudgePos",
     [intent("NUDGE_FACET", facet="<comparative_pos>", nudge_direction="POSITIVE")]),
    ("nudge_negative", "_NudgeNeg",
     [intent("NUDGE_FACET", facet="<comparative_neg>", nudge_direction="NEGATIVE")]),
    ("order_by_ascending_superlative", "_OrderAscSup",
     [intent("ORDER_BY", facet="<superlative_neg>", sort_direction="ASCENDING")]),
    ("order_by_descending_superlative", "_OrderDescSup",
     [intent("ORDER_BY", facet="<superlative_pos>", sort_direction="DESCENDING")]),
    ("order_by_ascending_named", "_OrderAscNamed",
     [intent("ORDER_BY", facet="<facet>", sort_direction="ASCENDING")]),
    ("order_by_descending_named", "_OrderDescNamed",
     [intent("ORDER_BY", facet="<facet>", sort_direction="DESCENDING")]),
]

# Conjunction signatures: clause A + (but|and) + clause B. The B-side uses
# renamed placeholders so the two clauses bind independently.
PAIR_POOL_A = {
    "eq_tag": ("_PosTagP",
               intent(SET, predicate_type="EQUALS", inclusivity="UNDEFINED",
                      facet="<tag>", value="<tag>")),
    "neq_tag": ("_NegTagP",
                intent(SET, predicate_type="NOT_EQUALS", inclusivity="UNDEFINED",
                       facet="<tag>", value="<tag>")),
    "eq_span": ("_PosSpanP",
                intent(SET, predicate_type="EQUALS", inclusivity="UNDEFINED",
                       value="<span>")),
    "neq_span": ("_NegSpanP",
                 intent(SET, predicate_type="NOT_EQUALS", inclusivity="UNDEFINED",
                        value="<span>")),
    "clear_facet": ("_ClearFacetP", intent("CLEAR_FACET", facet="<facet>")),
    "clear_value": ("_ClearValueTagP",
                    intent("CLEAR_VALUE", facet="<tag>", value="<tag>")),
    "lt_money": ("_MoneyLTP",
                 intent(SET, predicate_type="LESS_THAN", facet="<money>",
                        value="<money>")),
    "ge_money": ("_MoneyGE",
                 intent(SET, predicate_type="GREATER_EQ", facet="<money>",
                        value="<money>")),
    "eq_tag_inc": ("_PosTagInc",
                   intent(SET, predicate_type="EQUALS", inclusivity="INCLUSIVE",
                          facet="<tag>", value="<tag>")),
}
PAIR_POOL_B = {
    "eq_tag": ("_PosTag2P",
               intent(SET, predicate_type="EQUALS", inclusivity="UNDEFINED",
                      facet="<tag2>", value="<tag2>")),
    "neq_tag": ("_NegTag2P",
                intent(SET, predicate_type="NOT_EQUALS", inclusivity="UNDEFINED",
                       facet="<tag2>", value="<tag2>")),
    "eq_span": ("_PosSpan2P",
                intent(SET, predicate_type="EQUALS", inclusivity="UNDEFINED",
                       value="<span2>")),
    "neq_span": ("_NegSpan2P",
                 intent(SET, predicate_type="NOT_EQUALS", inclusivity="UNDEFINED",
                        value="<span2>")),
    "clear_facet": ("_ClearFacet2P", intent("CLEAR_FACET", facet="<facet2>")),
    "clear_value": ("_ClearValueTag2P",
                    intent("CLEAR_VALUE", facet="<tag2>", value="<tag2>")),
    "lt_money": ("_MoneyLTP2",
                 intent(SET, predicate_type="LESS_THAN", facet="<money2>",
                        value="<money2>")),
    "ge_money": ("_MoneyGE2P",
                 intent(SET, predicate_type="GREATER_EQ", facet="<money2>",
                        value="<money2>")),
    "eq_tag_inc": ("_PosTagInc2P",
                   intent(SET, predicate_type="EQUALS", inclusivity="INCLUSIVE",
                          facet="<tag2>", value="<tag2>")),
}

RULES["_MoneyLTP2"] = [
    "(_Anything) under <money2>",
    "less than <money2>",
    "keep it under <money2>",
]


def build() -> dict:
    signatures = []
    for name, start, intents in SINGLE_SIGNATURES:
        signatures.append(
            {"name": name, "start": start, "weight": 0.5, "intents": intents}
        )
    for a_name, (a_start, a_intent) in PAIR_POOL_A.items():
        for b_name, (b_start, b_intent) in PAIR_POOL_B.items():
            pair = f"_Pair__{a_name}__{b_name}"
            RULES[pair] = [f"({a_start}) (_Joiner) ({b_start})"]
            signatures.append(
                {
                    "name": f"pair__{a_name}__{b_name}",
                    "start": pair,
                    "weight": 0.4,
                    "intents": [a_intent, b_intent],
                }
            )
    return {
        "rules": RULES,
        "signatures": signatures,
        "span_values": SPAN_VALUES,
    }


def main() -> None:
    out = Path(__file__).resolve().parent.parent / "fixtures" / "grammar.json"
    doc = build()
    out.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    rule_count = len(doc["rules"])
    print(f"wrote {out}: {len(doc['signatures'])} signatures, {rule_count} rules")


if __name__ == "__main__":
    main()
