"""Labeled-corpus generation from context-free grammars over the schema.

Grammars expand to delexicalized templates (placeholders like ``<tag>``
stay symbolic); instantiation samples schema vocabulary under a seed and
attaches the bound intent sequence. The shipped grammar is the inverse of
the parser's cue inventory, and the round-trip evaluator is the CI gate
that keeps the two aligned.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

from . import text as textmod
from .clu import Intent, NumberValue, SpanValue, TagValue
from .schema import Facet, ProductCategory, Schema, Tag


class GrammarError(ValueError):
    pass


class CorpusGenError(ValueError):
    pass


_REF_RE = re.compile(r"\(_[A-Za-z0-9_]+\)")

PLACEHOLDERS = {
    "<tag>", "<tag2>", "<ordtag>", "<ordtag2>", "<facet>", "<facet2>",
    "<money>", "<money2>", "<span>", "<span2>",
    "<comparative_pos>", "<comparative_neg>",
    "<superlative_pos>", "<superlative_neg>",
}


@dataclass(frozen=True)
class GrammarRule:
    nonterminal: str
    alternatives: tuple[tuple[str, ...], ...]


@dataclass(frozen=True)
class IntentSignature:
    """An intent sequence pattern not yet bound to facets or tags."""

    name: str
    start: str
    intents: tuple[dict, ...]
    weight: float = 0.5

    def pattern(self) -> tuple:
        """Canonical shape used to count unique signatures."""
        def shape(spec: dict) -> tuple:
            value = spec.get("value")
            kind = None
            if isinstance(value, str):
                if "<span" in value:
                    kind = "span"
                elif "<money" in value:
                    kind = "number"
                else:
                    kind = "tag"
            return (
                spec["operator"],
                spec.get("predicate_type"),
                spec.get("inclusivity"),
                spec.get("nudge_direction"),
                spec.get("sort_direction"),
                kind,
            )

        return tuple(shape(s) for s in self.intents)


@dataclass(frozen=True)
class Grammar:
    rules: dict[str, GrammarRule]
    signatures: tuple[IntentSignature, ...]
    span_values: tuple[str, ...]


@dataclass(frozen=True)
class LabeledUtterance:
    text: str
    intents: tuple[Intent, ...]
    weight: float
    category_id: str

    def to_json(self) -> dict:
        return {
            "text": self.text,
            "intents": [i.to_json() for i in self.intents],
            "weight": self.weight,
            "category": self.category_id,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LabeledUtterance":
        return cls(
            text=obj["text"],
            intents=tuple(Intent.from_json(i) for i in obj["intents"]),
            weight=obj.get("weight", 0.5),
            category_id=obj["category"],
        )


def load_grammar(data: bytes | str) -> Grammar:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise GrammarError(f"malformed JSON: {exc}") from None
    if not isinstance(doc, dict) or not {"rules", "signatures"} <= set(doc):
        raise GrammarError("grammar needs 'rules' and 'signatures'")
    rules = {}
    for name, alternatives in doc["rules"].items():
        if not name.startswith("_"):
            raise GrammarError(f"nonterminal {name!r} must start with '_'")
        alts = []
        for alt in alternatives:
            if isinstance(alt, str):
                alt = [alt]
            alts.append(tuple(alt))
        rules[name] = GrammarRule(nonterminal=name, alternatives=tuple(alts))
    signatures = []
    seen = set()
    for raw in doc["signatures"]:
        sig = IntentSignature(
            name=raw["name"],
            start=raw["start"],
            intents=tuple(raw["intents"]),
            weight=float(raw.get("weight", 0.5)),
        )
        if sig.name in seen:
            raise GrammarError(f"duplicate signature name {sig.name!r}")
        seen.add(sig.name)
        if sig.start not in rules:
            raise GrammarError(f"signature {sig.name!r}: unknown start {sig.start!r}")
        signatures.append(sig)
    return Grammar(
        rules=rules,
        signatures=tuple(signatures),
        span_values=tuple(doc.get("span_values", [])),
    )


# ---------------------------------------------------------------------------
# Expansion


def expand_templates(grammar: Grammar, signature: IntentSignature) -> list[str]:
    """Full cartesian expansion of a signature's start symbol.

    Placeholders stay symbolic. Recursive grammars are rejected.
    """
    return [_squeeze(t) for t in _expand(grammar, signature.start, ())]


def _expand(grammar: Grammar, nonterminal: str, stack: tuple[str, ...]) -> list[str]:
    if nonterminal in stack:
        raise GrammarError(
            f"recursive grammar: {' -> '.join(stack + (nonterminal,))}"
        )
    rule = grammar.rules.get(nonterminal)
    if rule is None:
        raise GrammarError(f"unknown nonterminal {nonterminal!r}")
    out: list[str] = []
    for alternative in rule.alternatives:
        pieces_options: list[list[str]] = []
        for symbol in alternative:
            pieces_options.append(_expand_symbol(grammar, symbol, stack + (nonterminal,)))
        combos = [""]
        for options in pieces_options:
            combos = [f"{prefix} {opt}" for prefix in combos for opt in options]
        out.extend(combos)
    return out


def _expand_symbol(grammar: Grammar, symbol: str, stack) -> list[str]:
    refs = _REF_RE.findall(symbol)
    if not refs:
        return [symbol]
    results = [symbol]
    for ref in refs:
        name = ref[1:-1]
        expansions = _expand(grammar, name, stack)
        results = [
            r.replace(ref, expansion, 1)
            for r in results
            for expansion in expansions
        ]
    return results


def _squeeze(text: str) -> str:
    return " ".join(text.split())


@dataclass(frozen=True)
class Template:
    signature: IntentSignature
    text: str


def expand_all(grammar: Grammar) -> list[Template]:
    templates = []
    for signature in grammar.signatures:
        for text in expand_templates(grammar, signature):
            templates.append(Template(signature=signature, text=text))
    return templates


# ---------------------------------------------------------------------------
# Instantiation


@dataclass
class _Binding:
    surface: str
    facet_id: Optional[str] = None
    value: Optional[object] = None  # TagValue | SpanValue | NumberValue


class _CategorySampler:
    def __init__(self, category: ProductCategory, span_values, rng: random.Random):
        self.category = category
        self.span_values = span_values
        self.rng = rng

    def bind(self, placeholder: str) -> Optional[_Binding]:
        kind = placeholder.strip("<>").rstrip("2")
        if kind == "tag":
            return self._bind_tag(ranged=False)
        if kind == "ordtag":
            return self._bind_tag(ranged=True)
        if kind == "facet":
            facets = [f for f in self.category.facets if f.name_synonyms]
            if not facets:
                return None
            facet = self.rng.choice(facets)
            return _Binding(
                surface=self.rng.choice(list(facet.name_synonyms)),
                facet_id=facet.id,
            )
        if kind == "money":
            return self._bind_money()
        if kind == "span":
            if not self.span_values:
                return None
            raw = self.rng.choice(list(self.span_values))
            return _Binding(
                surface=raw,
                value=SpanValue(" ".join(textmod.normalize(raw))),
            )
        if kind in ("comparative_pos", "comparative_neg"):
            return self._bind_comparative(
                "POSITIVE" if kind.endswith("pos") else "NEGATIVE", superlative=False
            )
        if kind in ("superlative_pos", "superlative_neg"):
            return self._bind_comparative(
                "POSITIVE" if kind.endswith("pos") else "NEGATIVE", superlative=True
            )
        raise CorpusGenError(f"unknown placeholder {placeholder!r}")

    def _unambiguous(self, surface: str, facet: Facet) -> bool:
        key = tuple(textmod.normalize(surface))
        claims = set()
        for f in self.category.facets:
            for t in f.tags:
                for s in t.surfaces():
                    if tuple(textmod.normalize(s)) == key:
                        claims.add(f.id)
        return claims == {facet.id}

    def _bind_tag(self, ranged: bool) -> Optional[_Binding]:
        options: list[tuple[Facet, Tag]] = []
        for facet in self.category.facets:
            for tag in facet.tags:
                if ranged and facet.bound_value(tag) is None:
                    continue
                options.append((facet, tag))
        self.rng.shuffle(options)
        for facet, tag in options:
            surfaces = [s for s in tag.surfaces() if self._unambiguous(s, facet)]
            if surfaces:
                return _Binding(
                    surface=self.rng.choice(surfaces),
                    facet_id=facet.id,
                    value=TagValue(facet_id=facet.id, tag_id=tag.id),
                )
        return None

    def _bind_money(self) -> Optional[_Binding]:
        from .clu import CURRENCY_UNITS

        facet = next(
            (
                f
                for f in self.category.facets
                if f.unit and f.unit.lower() in CURRENCY_UNITS
            ),
            None,
        )
        if facet is None:
            return None
        values = sorted(int(t.value) for t in facet.tags if t.value is not None)
        if not values:
            return None
        lo, hi = values[0], values[-1]
        taken = set(values)
        candidates = [v for v in range(lo, hi + 1) if v not in taken]
        if not candidates:
            return None
        amount = self.rng.choice(candidates)
        style = self.rng.choice(("${n}", "{n} dollars", "{n} bucks"))
        return _Binding(
            surface=style.format(n=amount),
            facet_id=facet.id,
            value=NumberValue(Fraction(amount)),
        )

    def _bind_comparative(self, direction: str, superlative: bool) -> Optional[_Binding]:
        options = []
        for facet in self.category.facets:
            for word, d in facet.comparatives.items():
                if d != direction:
                    continue
                if superlative != word.endswith("est"):
                    continue
                claimed = [
                    f.id
                    for f in self.category.facets
                    if word in f.comparatives
                ]
                if len(claimed) == 1:
                    options.append((facet, word))
        if not options:
            return None
        facet, word = self.rng.choice(options)
        return _Binding(surface=word, facet_id=facet.id)


def instantiate(
    templates: Sequence[Template],
    schema: Schema,
    n: int,
    seed: int,
    span_values: Sequence[str] = (),
) -> list[LabeledUtterance]:
    """Sample ``n`` labeled utterances; identical seeds give identical output."""
    if not templates:
        return []
    rng = random.Random(seed)
    out: list[LabeledUtterance] = []
    failures = 0
    while len(out) < n:
        template = rng.choice(list(templates))
        item = _instantiate_one(template, schema, rng, span_values)
        if item is None:
            failures += 1
            if failures > 50 * max(n, 10):
                raise CorpusGenError(
                    "schema cannot satisfy the grammar's placeholders"
                )
            continue
        out.append(item)
    return out


def _instantiate_one(template: Template, schema, rng, span_values):
    placeholders = sorted(set(re.findall(r"<[a-z_0-9]+>", template.text)))
    categories = list(schema.categories)
    if not categories:
        return None
    category = rng.choice(categories)
    sampler = _CategorySampler(category, span_values, rng)
    bindings: dict[str, _Binding] = {}
    for ph in placeholders:
        if ph not in PLACEHOLDERS:
            raise CorpusGenError(f"unknown placeholder {ph!r} in template")
        binding = sampler.bind(ph)
        if binding is None:
            return None
        bindings[ph] = binding
    if "<money>" in bindings and "<money2>" in bindings:
        a = bindings["<money>"].value.value
        b = bindings["<money2>"].value.value
        if a == b:
            return None
        if a > b:
            bindings["<money>"], bindings["<money2>"] = (
                bindings["<money2>"],
                bindings["<money>"],
            )

    text = template.text
    for ph, binding in bindings.items():
        text = text.replace(ph, binding.surface)

    try:
        intents = tuple(
            _bind_intent(spec, bindings) for spec in template.signature.intents
        )
    except KeyError:
        return None
    return LabeledUtterance(
        text=_squeeze(text),
        intents=intents,
        weight=template.signature.weight,
        category_id=category.id,
    )


def _bind_intent(spec: dict, bindings: dict[str, _Binding]) -> Intent:
    resolved = dict(spec)
    value = resolved.get("value")
    if isinstance(value, str):
        if value in bindings:
            resolved["value"] = _intent_value(bindings[value])
        else:
            # A span template with constant words, e.g. "good for <span>".
            text = value
            for ph, binding in bindings.items():
                text = text.replace(ph, binding.surface)
            resolved["value"] = {"span": " ".join(textmod.normalize(text))}
    facet = resolved.get("facet")
    if isinstance(facet, str) and facet.startswith("<"):
        resolved["facet"] = bindings[facet].facet_id
    obj = {"operator": resolved["operator"]}
    for key in ("facet", "predicate_type", "inclusivity", "nudge_direction",
                "sort_direction"):
        if resolved.get(key) is not None:
            obj[key] = resolved[key]
    if resolved.get("value") is not None:
        obj["value"] = resolved["value"]
    return Intent.from_json(obj)


def _intent_value(binding: _Binding) -> dict:
    from .clu import value_to_json

    return value_to_json(binding.value)


# ---------------------------------------------------------------------------
# Round-trip evaluation


@dataclass
class EvalReport:
    total: int = 0
    exact_match: int = 0
    mismatches: list[dict] = field(default_factory=list)

    @property
    def accuracy(self) -> float:
        return self.exact_match / self.total if self.total else 1.0

    def to_json(self) -> dict:
        return {
            "total": self.total,
            "exact_match": self.exact_match,
            "mismatches": self.mismatches,
        }


def _intent_multiset(intents: Iterable[Intent]) -> list[str]:
    return sorted(json.dumps(i.to_json(), sort_keys=True) for i in intents)


def round_trip_eval(
    corpus: Iterable[LabeledUtterance],
    parse: Callable[[str, str], Sequence[Intent]],
) -> EvalReport:
    """Parse every item in its own category context and compare labels.

    Comparison is clause-order-insensitive (intent multisets).
    """
    report = EvalReport()
    for item in corpus:
        report.total += 1
        try:
            parsed = list(parse(item.text, item.category_id))
        except Exception as exc:  # parse failures count as mismatches
            report.mismatches.append(
                {"text": item.text, "category": item.category_id,
                 "error": f"{type(exc).__name__}: {exc}"}
            )
            continue
        if _intent_multiset(parsed) == _intent_multiset(item.intents):
            report.exact_match += 1
        else:
            report.mismatches.append(
                {
                    "text": item.text,
                    "category": item.category_id,
                    "expected": [i.to_json() for i in item.intents],
                    "got": [i.to_json() for i in parsed],
                }
            )
    return report


# ---------------------------------------------------------------------------
# Corpus IO (JSONL)


def write_corpus(items: Iterable[LabeledUtterance], fp) -> None:
    for item in items:
        fp.write(json.dumps(item.to_json(), sort_keys=True) + "\n")


def read_corpus(data: str) -> list[LabeledUtterance]:
    items = []
    for line in data.splitlines():
        line = line.strip()
        if line:
            items.append(LabeledUtterance.from_json(json.loads(line)))
    return items
