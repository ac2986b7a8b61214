"""Contextual attribute-relatedness oracle: SAME_TAG / SAME_FACET / OF_FACET.

Answers the three relationship questions over attribute phrases within a
product category, backed by a category-scoped lexicon plus the schema's
own tag vocabulary. Unknown phrases are conservatively unrelated to
everything, so unresolvable spans accumulate instead of overwriting each
other. All calls are pure and safe to share across workers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

from . import text as textmod
from .schema import Schema


class LexiconError(ValueError):
    """Invalid lexicon document."""


def phrase_key(phrase: str) -> str:
    """Normalize a phrase for lexicon lookup.

    Lowercase, hyphen -> space, and a trailing-plural "s" strip on tokens of
    length >= 4 (skipping "-ss" words so "dress" survives). Cheap surface
    variance absorption; real synonymy still needs a lexicon entry.
    """
    tokens = textmod.normalize(phrase.replace("-", " "))
    out = []
    for tok in tokens:
        if len(tok) >= 4 and tok.endswith("s") and not tok.endswith("ss"):
            tok = tok[:-1]
        out.append(tok)
    return " ".join(out)


@dataclass(frozen=True)
class RelationVerdict:
    same_tag: bool
    same_facet: bool
    of_facet: bool

    def __post_init__(self):
        # SAME_TAG implies SAME_FACET by definition.
        if self.same_tag and not self.same_facet:
            raise ValueError("same_tag verdict requires same_facet")


@dataclass(frozen=True)
class Lexicon:
    """Category-scoped phrase -> (concept, facet) table."""

    entries: dict[tuple[str, str], tuple[str, str]]

    def resolve(self, category_id: str, key: str) -> Optional[tuple[str, str]]:
        return self.entries.get((category_id, key))

    @property
    def concept_count(self) -> int:
        return len({(cat, concept) for (cat, _), (concept, _) in self.entries.items()})


def load_lexicon(data: bytes | str) -> Lexicon:
    """Parse and validate a lexicon document (UTF-8 JSON).

    Concept groups must be disjoint per category: one phrase cannot belong
    to two concepts, and one concept cannot span two facets.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise LexiconError(f"malformed JSON: {exc}") from None
    if not isinstance(doc, dict) or set(doc) != {"entries"}:
        raise LexiconError('top level must be {"entries": [...]}')
    entries: dict[tuple[str, str], tuple[str, str]] = {}
    concept_facet: dict[tuple[str, str], str] = {}
    for i, raw in enumerate(doc["entries"]):
        if not isinstance(raw, dict) or set(raw) != {"category", "phrase", "concept", "facet"}:
            raise LexiconError(
                f"entries[{i}]: expected keys category/phrase/concept/facet"
            )
        category, phrase = raw["category"], raw["phrase"]
        concept, facet = raw["concept"], raw["facet"]
        for value in (category, phrase, concept, facet):
            if not isinstance(value, str) or not value:
                raise LexiconError(f"entries[{i}]: fields must be non-empty strings")
        key = (category, phrase_key(phrase))
        if key in entries and entries[key][0] != concept:
            raise LexiconError(
                f"entries[{i}]: phrase {phrase!r} already belongs to concept "
                f"{entries[key][0]!r} in category {category!r}"
            )
        ck = (category, concept)
        if ck in concept_facet and concept_facet[ck] != facet:
            raise LexiconError(
                f"entries[{i}]: concept {concept!r} spans facets "
                f"{concept_facet[ck]!r} and {facet!r}"
            )
        concept_facet[ck] = facet
        entries[key] = (concept, facet)
    return Lexicon(entries=entries)


EMPTY_LEXICON = Lexicon(entries={})


class Oracle:
    """Lexicon-and-schema-backed implementation of the three questions.

    Schema-grounded tag surfaces resolve to a synthetic per-tag concept
    ("facet:tag"), so "red" and "crimson" compare equal whenever the schema
    lists one as a synonym of the other. Ambiguous surfaces (claimed by
    more than one facet) resolve to nothing, which keeps verdicts
    conservative.
    """

    def __init__(self, lexicon: Lexicon, schema: Optional[Schema] = None):
        self.lexicon = lexicon
        self.schema = schema
        self._schema_index: dict[tuple[str, str], Optional[tuple[str, str]]] = {}
        if schema is not None:
            for cat in schema.categories:
                for facet in cat.facets:
                    for tag in facet.tags:
                        concept = f"{facet.id}:{tag.id}"
                        for surface in tag.surfaces():
                            key = (cat.id, phrase_key(surface))
                            prior = self._schema_index.get(key, ...)
                            if prior is ...:
                                self._schema_index[key] = (concept, facet.id)
                            elif prior is not None and prior[0] != concept:
                                # Surface claimed by two tags: unresolvable.
                                self._schema_index[key] = None

    def _resolve(self, category_id: str, phrase: str) -> Optional[tuple[str, str]]:
        key = phrase_key(phrase)
        hit = self.lexicon.resolve(category_id, key)
        if hit is not None:
            return hit
        return self._schema_index.get((category_id, key))

    def same_tag(self, category_id: str, phrase_a: str, phrase_b: str) -> bool:
        a = self._resolve(category_id, phrase_a)
        b = self._resolve(category_id, phrase_b)
        return a is not None and b is not None and a[0] == b[0]

    def same_facet(self, category_id: str, phrase_a: str, phrase_b: str) -> bool:
        a = self._resolve(category_id, phrase_a)
        b = self._resolve(category_id, phrase_b)
        return a is not None and b is not None and a[1] == b[1]

    def of_facet(self, category_id: str, phrase: str, facet_id: str) -> bool:
        hit = self._resolve(category_id, phrase)
        return hit is not None and hit[1] == facet_id

    def verdict(self, category_id: str, phrase_a: str, phrase_b: str) -> RelationVerdict:
        same_tag = self.same_tag(category_id, phrase_a, phrase_b)
        return RelationVerdict(
            same_tag=same_tag,
            same_facet=same_tag or self.same_facet(category_id, phrase_a, phrase_b),
            of_facet=self.of_facet(category_id, phrase_a, phrase_b),
        )
