"""Faceted-search schema: categories, typed facets, tags, synonyms.

The schema is the grounding vocabulary. It is loaded once from JSON,
validated strictly (unknown keys and malformed structure are errors with a
path to the offending element) and is immutable afterwards, so any number
of parser/session workers may share one instance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import TYPE_CHECKING, Iterator, Mapping, Optional

from . import text as textmod

if TYPE_CHECKING:  # pragma: no cover - typing only, avoids a runtime cycle
    from .dst import DialogState


class FacetType(str, Enum):
    BOOLEAN = "BOOLEAN"
    NUMERIC = "NUMERIC"
    ORDERED = "ORDERED"
    UNORDERED = "UNORDERED"


NUDGE_DIRECTIONS = ("POSITIVE", "NEGATIVE")


class SchemaError(ValueError):
    """Invalid schema document; ``path`` points at the offending element."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


@dataclass(frozen=True)
class Tag:
    id: str
    text: str
    synonyms: tuple[str, ...] = ()
    value: Optional[Fraction] = None
    rank: Optional[int] = None

    def surfaces(self) -> Iterator[str]:
        yield self.text
        yield from self.synonyms


@dataclass(frozen=True)
class Facet:
    id: str
    display_name: str
    name_synonyms: tuple[str, ...] = ()
    types: frozenset[FacetType] = frozenset()
    unit: Optional[str] = None
    # Adjective -> "POSITIVE" | "NEGATIVE". "-er" forms drive nudges,
    # "-est" forms drive sort orders; both are schema data, not code.
    comparatives: Mapping[str, str] = field(default_factory=dict)
    tags: tuple[Tag, ...] = ()

    def has_type(self, t: FacetType) -> bool:
        return t in self.types

    @property
    def is_numeric(self) -> bool:
        return FacetType.NUMERIC in self.types

    @property
    def is_ordered(self) -> bool:
        return FacetType.ORDERED in self.types

    @property
    def supports_ranges(self) -> bool:
        return self.is_numeric or self.is_ordered

    def tag(self, tag_id: str) -> Tag:
        for t in self.tags:
            if t.id == tag_id:
                return t
        raise KeyError(tag_id)

    def bound_value(self, tag: Tag) -> Optional[Fraction]:
        """Value a tag contributes to range/sort comparisons.

        NUMERIC facets compare numeric values; ORDERED-only facets compare
        tag ranks.
        """
        if self.is_numeric and tag.value is not None:
            return tag.value
        if self.is_ordered and tag.rank is not None:
            return Fraction(tag.rank)
        return None


class _VocabKind(str, Enum):
    TAG = "TAG"
    FACET_NAME = "FACET_NAME"


@dataclass(frozen=True)
class Candidate:
    """One (facet, tag) reading of a matched surface string."""

    facet_id: str
    tag_id: Optional[str] = None


@dataclass(frozen=True)
class Annotation:
    """A vocabulary match over a token range, possibly ambiguous."""

    start: int
    end: int
    text: str
    kind: _VocabKind
    candidates: tuple[Candidate, ...]

    @property
    def ambiguous(self) -> bool:
        return len(self.candidates) > 1

    @property
    def facet_id(self) -> str:
        if self.ambiguous:
            raise ValueError("ambiguous annotation has no single facet")
        return self.candidates[0].facet_id

    @property
    def tag_id(self) -> Optional[str]:
        if self.ambiguous:
            raise ValueError("ambiguous annotation has no single tag")
        return self.candidates[0].tag_id

    @property
    def is_tag(self) -> bool:
        return self.kind == _VocabKind.TAG


@dataclass(frozen=True)
class ProductCategory:
    id: str
    canonical_phrase: str
    trigger_phrases: tuple[str, ...]
    facets: tuple[Facet, ...]

    def facet(self, facet_id: str) -> Facet:
        for f in self.facets:
            if f.id == facet_id:
                return f
        raise KeyError(facet_id)

    def facet_or_none(self, facet_id: str) -> Optional[Facet]:
        for f in self.facets:
            if f.id == facet_id:
                return f
        return None


@dataclass(frozen=True)
class Schema:
    categories: tuple[ProductCategory, ...]

    def __post_init__(self):
        vocab: dict[str, dict[tuple[str, ...], list[tuple[_VocabKind, Candidate]]]] = {}
        triggers: dict[str, list[tuple[tuple[str, ...], str]]] = {}
        for cat in self.categories:
            entries: dict[tuple[str, ...], list[tuple[_VocabKind, Candidate]]] = {}
            for facet in cat.facets:
                for tag in facet.tags:
                    for surface in tag.surfaces():
                        key = tuple(textmod.normalize(surface))
                        if key:
                            entries.setdefault(key, []).append(
                                (_VocabKind.TAG, Candidate(facet.id, tag.id))
                            )
                for surface in facet.name_synonyms:
                    key = tuple(textmod.normalize(surface))
                    if key:
                        entries.setdefault(key, []).append(
                            (_VocabKind.FACET_NAME, Candidate(facet.id))
                        )
            vocab[cat.id] = entries
            triggers[cat.id] = sorted(
                ((tuple(textmod.normalize(p)), cat.id) for p in cat.trigger_phrases),
                key=lambda item: -len(item[0]),
            )
        object.__setattr__(self, "_vocab", vocab)
        object.__setattr__(self, "_triggers", triggers)

    def category(self, category_id: str) -> ProductCategory:
        for c in self.categories:
            if c.id == category_id:
                return c
        raise KeyError(category_id)

    def category_or_none(self, category_id: str) -> Optional[ProductCategory]:
        for c in self.categories:
            if c.id == category_id:
                return c
        return None

    def vocabulary(self, category_id: str) -> Mapping[tuple[str, ...], list]:
        return self._vocab[category_id]  # type: ignore[attr-defined]

    def trigger_index(self) -> dict[str, list[tuple[tuple[str, ...], str]]]:
        return self._triggers  # type: ignore[attr-defined]


# ---------------------------------------------------------------------------
# Loading / serialization


def _require_keys(obj: dict, allowed: set[str], required: set[str], path: str):
    unknown = set(obj) - allowed
    if unknown:
        raise SchemaError(f"unknown keys {sorted(unknown)}", path)
    missing = required - set(obj)
    if missing:
        raise SchemaError(f"missing keys {sorted(missing)}", path)


def _load_tag(obj, facet_types: frozenset[FacetType], path: str) -> Tag:
    if not isinstance(obj, dict):
        raise SchemaError("tag must be an object", path)
    _require_keys(obj, {"id", "text", "synonyms", "value", "rank"}, {"id", "text"}, path)
    tag_id = obj["id"]
    if not isinstance(tag_id, str) or not tag_id:
        raise SchemaError("tag id must be a non-empty string", path)
    value = obj.get("value")
    rank = obj.get("rank")
    if FacetType.NUMERIC in facet_types:
        if value is None:
            raise SchemaError("NUMERIC facet tag needs a value", path)
    elif value is not None:
        raise SchemaError("value only allowed on NUMERIC facets", path)
    if FacetType.ORDERED in facet_types:
        if rank is None:
            raise SchemaError("ORDERED facet tag needs a rank", path)
        if not isinstance(rank, int) or isinstance(rank, bool):
            raise SchemaError("rank must be an integer", path)
    elif rank is not None:
        raise SchemaError("rank only allowed on ORDERED facets", path)
    synonyms = obj.get("synonyms", [])
    if not isinstance(synonyms, list) or not all(isinstance(s, str) for s in synonyms):
        raise SchemaError("synonyms must be a list of strings", path)
    return Tag(
        id=tag_id,
        text=obj["text"],
        synonyms=tuple(synonyms),
        value=None if value is None else textmod.number_from_json(value),
        rank=rank,
    )


def _load_facet(obj, path: str) -> Facet:
    if not isinstance(obj, dict):
        raise SchemaError("facet must be an object", path)
    allowed = {"id", "display_name", "name_synonyms", "types", "unit", "comparatives", "tags"}
    _require_keys(obj, allowed, {"id", "display_name", "types"}, path)
    facet_id = obj["id"]
    if not isinstance(facet_id, str) or not facet_id:
        raise SchemaError("facet id must be a non-empty string", path)
    raw_types = obj["types"]
    if not isinstance(raw_types, list) or not raw_types:
        raise SchemaError("types must be a non-empty list", path)
    try:
        types = frozenset(FacetType(t) for t in raw_types)
    except ValueError as exc:
        raise SchemaError(str(exc), path) from None
    unit = obj.get("unit")
    if FacetType.NUMERIC in types and unit is None:
        raise SchemaError("NUMERIC facet needs a unit label", path)
    if FacetType.NUMERIC not in types and unit is not None:
        raise SchemaError("unit only allowed on NUMERIC facets", path)
    comparatives = obj.get("comparatives", {})
    if not isinstance(comparatives, dict):
        raise SchemaError("comparatives must be an object", path)
    for word, direction in comparatives.items():
        if direction not in NUDGE_DIRECTIONS:
            raise SchemaError(
                f"comparative {word!r} direction must be one of {NUDGE_DIRECTIONS}", path
            )
    tags = []
    seen_ids: set[str] = set()
    for i, raw_tag in enumerate(obj.get("tags", [])):
        tag = _load_tag(raw_tag, types, f"{path}.tags[{i}]")
        if tag.id in seen_ids:
            raise SchemaError(f"duplicate tag id {tag.id!r}", f"{path}.tags[{i}]")
        seen_ids.add(tag.id)
        tags.append(tag)
    if FacetType.ORDERED in types:
        ranks = sorted(t.rank for t in tags)
        if ranks != list(range(len(tags))):
            raise SchemaError("ORDERED facet ranks must be a permutation of 0..n-1", path)
    name_synonyms = obj.get("name_synonyms", [])
    if not isinstance(name_synonyms, list):
        raise SchemaError("name_synonyms must be a list", path)
    return Facet(
        id=facet_id,
        display_name=obj["display_name"],
        name_synonyms=tuple(name_synonyms),
        types=types,
        unit=unit,
        comparatives=dict(comparatives),
        tags=tuple(tags),
    )


def _load_category(obj, path: str) -> ProductCategory:
    if not isinstance(obj, dict):
        raise SchemaError("category must be an object", path)
    allowed = {"id", "canonical_phrase", "trigger_phrases", "facets"}
    _require_keys(obj, allowed, {"id", "canonical_phrase", "trigger_phrases", "facets"}, path)
    if not isinstance(obj["id"], str) or not obj["id"]:
        raise SchemaError("category id must be a non-empty string", path)
    if not isinstance(obj["canonical_phrase"], str) or not obj["canonical_phrase"]:
        raise SchemaError("canonical_phrase must be non-empty", path)
    facets = []
    seen: set[str] = set()
    for i, raw_facet in enumerate(obj["facets"]):
        facet = _load_facet(raw_facet, f"{path}.facets[{i}]")
        if facet.id in seen:
            raise SchemaError(f"duplicate facet id {facet.id!r}", f"{path}.facets[{i}]")
        seen.add(facet.id)
        facets.append(facet)
    return ProductCategory(
        id=obj["id"],
        canonical_phrase=obj["canonical_phrase"],
        trigger_phrases=tuple(obj["trigger_phrases"]),
        facets=tuple(facets),
    )


def load_schema(data: bytes | str) -> Schema:
    """Parse and validate a schema document (UTF-8 JSON)."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"malformed JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise SchemaError("top level must be an object")
    _require_keys(doc, {"categories"}, {"categories"}, "$")
    if not isinstance(doc["categories"], list):
        raise SchemaError("categories must be a list", "$")
    categories = []
    seen: set[str] = set()
    for i, raw in enumerate(doc["categories"]):
        cat = _load_category(raw, f"$.categories[{i}]")
        if cat.id in seen:
            raise SchemaError(f"duplicate category id {cat.id!r}", f"$.categories[{i}]")
        seen.add(cat.id)
        categories.append(cat)
    return Schema(categories=tuple(categories))


def serialize_schema(schema: Schema) -> bytes:
    """Canonical JSON for a schema; ``load_schema`` inverts it exactly."""
    doc = {
        "categories": [
            {
                "id": c.id,
                "canonical_phrase": c.canonical_phrase,
                "trigger_phrases": list(c.trigger_phrases),
                "facets": [_facet_to_json(f) for f in c.facets],
            }
            for c in schema.categories
        ]
    }
    return json.dumps(doc, indent=2, sort_keys=True).encode("utf-8")


def _facet_to_json(f: Facet) -> dict:
    out: dict = {
        "id": f.id,
        "display_name": f.display_name,
        "name_synonyms": list(f.name_synonyms),
        "types": sorted(t.value for t in f.types),
        "tags": [],
    }
    if f.unit is not None:
        out["unit"] = f.unit
    if f.comparatives:
        out["comparatives"] = dict(f.comparatives)
    for t in f.tags:
        tag_obj: dict = {"id": t.id, "text": t.text}
        if t.synonyms:
            tag_obj["synonyms"] = list(t.synonyms)
        if t.value is not None:
            tag_obj["value"] = textmod.number_to_json(t.value)
        if t.rank is not None:
            tag_obj["rank"] = t.rank
        out["tags"].append(tag_obj)
    return out


# ---------------------------------------------------------------------------
# Span lookup


def lookup_spans(schema: Schema, category_id: str, tokens: list[str]) -> list[Annotation]:
    """Annotate all vocabulary matches in a normalized token stream.

    Greedy leftmost-longest: at each position the longest match wins and
    shorter matches inside it are suppressed, so output ranges are disjoint
    and sorted. When several tags claim one surface form, tag readings beat
    facet-name readings, and multiple surviving facets make the annotation
    ambiguous.
    """
    if schema.category_or_none(category_id) is None:
        raise KeyError(f"unknown category {category_id!r}")
    vocab = schema.vocabulary(category_id)
    if not vocab:
        return []
    max_len = max(len(k) for k in vocab)

    annotations: list[Annotation] = []
    i = 0
    n = len(tokens)
    while i < n:
        match_entries = None
        match_end = None
        for length in range(min(max_len, n - i), 0, -1):
            key = tuple(tokens[i : i + length])
            entries = vocab.get(key)
            if entries:
                match_entries = entries
                match_end = i + length
                break
        if match_entries is None:
            i += 1
            continue
        tag_candidates = _dedupe(c for kind, c in match_entries if kind == _VocabKind.TAG)
        facet_candidates = _dedupe(c for kind, c in match_entries if kind == _VocabKind.FACET_NAME)
        if tag_candidates:
            kind, candidates = _VocabKind.TAG, tag_candidates
        else:
            kind, candidates = _VocabKind.FACET_NAME, facet_candidates
        annotations.append(
            Annotation(
                start=i,
                end=match_end,
                text=" ".join(tokens[i:match_end]),
                kind=kind,
                candidates=tuple(candidates),
            )
        )
        i = match_end
    return annotations


def _dedupe(candidates) -> list[Candidate]:
    seen = []
    for c in candidates:
        if c not in seen:
            seen.append(c)
    return seen


def resolve_ambiguous_tag(annotation: Annotation, state: "DialogState") -> Optional[str]:
    """Pick a facet for an ambiguous annotation from dialog evidence.

    Preference order: the facet the user touched last, then the unique
    candidate that already carries a predicate. Returns None when neither
    rule applies (caller prompts for clarification).
    """
    facet_ids = [c.facet_id for c in annotation.candidates]
    if len(facet_ids) == 1:
        return facet_ids[0]
    if state is not None:
        if state.last_touched_facet in facet_ids:
            return state.last_touched_facet
        with_predicates = [f for f in facet_ids if f in state.facet_states]
        if len(with_predicates) == 1:
            return with_predicates[0]
    return None
