"""Fulfillment: compile dialog state into a search request and execute it.

The index is a local stand-in for a Solr/Lucene-class backend: per-category
inverted postings over (facet, tag), a token index over title+description,
and numeric columns. It is immutable after build; searches are read-only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from statistics import median as _median
from typing import Iterable, Mapping, Optional

from . import text as textmod
from .clu import NumberValue, PredicateType, SortDirection, TagValue, STOP_WORDS
from .dst import DialogState, Range
from .relatedness import phrase_key
from .schema import Facet, Schema


class CatalogError(ValueError):
    """Invalid catalog document or product."""


class FulfillmentError(ValueError):
    pass


@dataclass(frozen=True)
class Product:
    id: str
    category_id: str
    title: str
    description: str
    tag_assignments: frozenset[tuple[str, str]]
    numeric_values: Mapping[str, Fraction]

    def tags_of(self, facet_id: str) -> set[str]:
        return {t for f, t in self.tag_assignments if f == facet_id}


@dataclass(frozen=True)
class QuerySpan:
    text: str
    positive: bool


@dataclass(frozen=True)
class FacetRestrict:
    allowed_tags: frozenset[str] = frozenset()
    forbidden_tags: frozenset[str] = frozenset()
    allowed_numbers: frozenset[Fraction] = frozenset()
    forbidden_numbers: frozenset[Fraction] = frozenset()
    range: Optional[Range] = None

    @property
    def empty(self) -> bool:
        return not (
            self.allowed_tags
            or self.forbidden_tags
            or self.allowed_numbers
            or self.forbidden_numbers
            or self.range
        )


@dataclass(frozen=True)
class SearchRequest:
    category_id: str
    category_phrase: str
    query_spans: tuple[QuerySpan, ...] = ()
    restricts: Mapping[str, FacetRestrict] = field(default_factory=dict)
    sort: Optional[tuple[str, SortDirection]] = None


@dataclass(frozen=True)
class FacetStats:
    facet_id: str
    count: int
    min: Fraction
    median: Fraction
    max: Fraction


# ---------------------------------------------------------------------------
# Catalog loading


def load_catalog(data: bytes | str, schema: Schema) -> list[Product]:
    """Parse and validate a catalog document against the schema."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise CatalogError(f"malformed JSON: {exc}") from None
    if not isinstance(doc, dict) or set(doc) != {"products"}:
        raise CatalogError('top level must be {"products": [...]}')
    products = []
    seen: set[str] = set()
    for i, raw in enumerate(doc["products"]):
        product = _load_product(raw, schema, f"products[{i}]")
        if product.id in seen:
            raise CatalogError(f"products[{i}]: duplicate product id {product.id!r}")
        seen.add(product.id)
        products.append(product)
    return products


_PRODUCT_KEYS = {"id", "category", "title", "description", "tags", "values"}


def _load_product(raw, schema: Schema, path: str) -> Product:
    if not isinstance(raw, dict):
        raise CatalogError(f"{path}: product must be an object")
    unknown = set(raw) - _PRODUCT_KEYS
    if unknown:
        raise CatalogError(f"{path}: unknown keys {sorted(unknown)}")
    for key in ("id", "category", "title"):
        if not isinstance(raw.get(key), str) or not raw[key]:
            raise CatalogError(f"{path}: {key} must be a non-empty string")
    category = schema.category_or_none(raw["category"])
    if category is None:
        raise CatalogError(f"{path}: unknown category {raw['category']!r}")
    assignments = set()
    for j, t in enumerate(raw.get("tags", [])):
        if not isinstance(t, dict) or set(t) != {"facet", "tag"}:
            raise CatalogError(f"{path}.tags[{j}]: expected {{facet, tag}}")
        facet = category.facet_or_none(t["facet"])
        if facet is None:
            raise CatalogError(
                f"{path}.tags[{j}]: facet {t['facet']!r} not in category "
                f"{category.id!r}"
            )
        try:
            facet.tag(t["tag"])
        except KeyError:
            raise CatalogError(
                f"{path}.tags[{j}]: tag {t['tag']!r} not in facet {facet.id!r}"
            ) from None
        assignments.add((t["facet"], t["tag"]))
    values = {}
    for facet_id, v in raw.get("values", {}).items():
        facet = category.facet_or_none(facet_id)
        if facet is None or not facet.is_numeric:
            raise CatalogError(
                f"{path}.values: {facet_id!r} is not a NUMERIC facet of "
                f"{category.id!r}"
            )
        values[facet_id] = textmod.number_from_json(v)
    return Product(
        id=raw["id"],
        category_id=raw["category"],
        title=raw["title"],
        description=raw.get("description", ""),
        tag_assignments=frozenset(assignments),
        numeric_values=values,
    )


# ---------------------------------------------------------------------------
# Index


def text_tokens(text: str) -> set[str]:
    """Search-side token set: normalized, plural-stripped, stop words out."""
    return {
        tok
        for tok in phrase_key(text).split()
        if tok and tok not in STOP_WORDS
    }


class Index:
    """Immutable in-memory faceted index over one catalog."""

    def __init__(self, products: Iterable[Product], schema: Schema):
        self.schema = schema
        self.products: dict[str, Product] = {}
        self.by_category: dict[str, set[str]] = {}
        self.postings: dict[tuple[str, str, str], set[str]] = {}
        self.tokens: dict[tuple[str, str], set[str]] = {}
        self.numeric: dict[tuple[str, str], dict[str, Fraction]] = {}
        for p in products:
            if p.id in self.products:
                raise CatalogError(f"duplicate product id {p.id!r}")
            self.products[p.id] = p
            self.by_category.setdefault(p.category_id, set()).add(p.id)
            for facet_id, tag_id in p.tag_assignments:
                self.postings.setdefault(
                    (p.category_id, facet_id, tag_id), set()
                ).add(p.id)
            for tok in text_tokens(f"{p.title} {p.description}"):
                self.tokens.setdefault((p.category_id, tok), set()).add(p.id)
            for facet_id, value in p.numeric_values.items():
                self.numeric.setdefault((p.category_id, facet_id), {})[p.id] = value

    def value_of(self, product: Product, facet: Facet) -> Optional[Fraction]:
        """Comparable value of a product on a facet, for ranges and sorting."""
        direct = product.numeric_values.get(facet.id)
        if direct is not None:
            return direct
        values = []
        for tag_id in product.tags_of(facet.id):
            try:
                bound = facet.bound_value(facet.tag(tag_id))
            except KeyError:
                continue
            if bound is not None:
                values.append(bound)
        return min(values) if values else None


def build_index(catalog: bytes | str | list[Product], schema: Schema) -> Index:
    """Build the search index from a catalog document or loaded products."""
    if isinstance(catalog, (bytes, str)):
        catalog = load_catalog(catalog, schema)
    return Index(catalog, schema)


# ---------------------------------------------------------------------------
# Compilation


def compile_request(state: DialogState, schema: Schema) -> SearchRequest:
    """Lower dialog state to the fulfillment boundary.

    Ungrounded predicates (wherever they live) become signed query spans;
    grounded facet states become restricts verbatim; sort is copied.
    """
    if state.category_id is None:
        raise FulfillmentError("dialog state has no product category")
    category = schema.category_or_none(state.category_id)
    if category is None:
        raise FulfillmentError(f"unknown category {state.category_id!r}")

    spans: list[QuerySpan] = []
    restricts: dict[str, FacetRestrict] = {}

    for p in state.ungrounded:
        spans.append(
            QuerySpan(p.value.text, positive=p.predicate_type == PredicateType.EQUALS)
        )

    for facet_id, fs in state.facet_states.items():
        allowed_tags, forbidden_tags = set(), set()
        allowed_numbers, forbidden_numbers = set(), set()
        for p in fs.positive:
            if isinstance(p.value, TagValue):
                allowed_tags.add(p.value.tag_id)
            elif isinstance(p.value, NumberValue):
                allowed_numbers.add(p.value.value)
            else:
                spans.append(QuerySpan(p.value.text, positive=True))
        for p in fs.negative:
            if isinstance(p.value, TagValue):
                forbidden_tags.add(p.value.tag_id)
            elif isinstance(p.value, NumberValue):
                forbidden_numbers.add(p.value.value)
            else:
                spans.append(QuerySpan(p.value.text, positive=False))
        restrict = FacetRestrict(
            allowed_tags=frozenset(allowed_tags),
            forbidden_tags=frozenset(forbidden_tags),
            allowed_numbers=frozenset(allowed_numbers),
            forbidden_numbers=frozenset(forbidden_numbers),
            range=fs.range,
        )
        if not restrict.empty:
            restricts[facet_id] = restrict

    return SearchRequest(
        category_id=state.category_id,
        category_phrase=category.canonical_phrase,
        query_spans=tuple(spans),
        restricts=restricts,
        sort=state.sort,
    )


# ---------------------------------------------------------------------------
# Search


def search(index: Index, request: SearchRequest, page_size: int = 10) -> list[Product]:
    """Execute a request; deterministic ordering, truncated to a page."""
    category = index.schema.category_or_none(request.category_id)
    if category is None:
        return []
    candidates = set(index.by_category.get(request.category_id, set()))

    for facet_id, restrict in request.restricts.items():
        facet = category.facet_or_none(facet_id)
        if facet is None:
            return []
        if restrict.allowed_tags or restrict.allowed_numbers:
            allowed: set[str] = set()
            for tag_id in restrict.allowed_tags:
                allowed |= index.postings.get(
                    (request.category_id, facet_id, tag_id), set()
                )
            if restrict.allowed_numbers:
                for pid in candidates:
                    value = index.value_of(index.products[pid], facet)
                    if value is not None and value in restrict.allowed_numbers:
                        allowed.add(pid)
            candidates &= allowed
        for tag_id in restrict.forbidden_tags:
            candidates -= index.postings.get(
                (request.category_id, facet_id, tag_id), set()
            )
        if restrict.forbidden_numbers:
            candidates = {
                pid
                for pid in candidates
                if index.value_of(index.products[pid], facet)
                not in restrict.forbidden_numbers
            }
        if restrict.range is not None:
            kept = set()
            for pid in candidates:
                value = index.value_of(index.products[pid], facet)
                if value is not None and restrict.range.contains(value):
                    kept.add(pid)
            candidates = kept

    for span in request.query_spans:
        tokens = _span_tokens(span.text)
        if not tokens:
            continue
        holding = set(candidates)
        for tok in tokens:
            holding &= index.tokens.get((request.category_id, tok), set())
        if span.positive:
            candidates = holding
        else:
            candidates -= holding

    results = [index.products[pid] for pid in candidates]
    sort_facet = None
    if request.sort is not None:
        sort_facet = category.facet_or_none(request.sort[0])
    if sort_facet is not None:
        descending = request.sort[1] == SortDirection.DESCENDING

        def sort_key(p: Product):
            value = index.value_of(p, sort_facet)
            if value is None:
                return (1, Fraction(0), p.id)  # missing values go last
            return (0, -value if descending else value, p.id)

        results.sort(key=sort_key)
    else:
        results.sort(key=lambda p: p.id)
    return results[:page_size]


def _span_tokens(span: str) -> set[str]:
    return text_tokens(span)


def facet_stats(
    results: Iterable[Product], facet_id: str, schema: Optional[Schema] = None
) -> Optional[FacetStats]:
    """Numeric stats over a result page, or None when no value is present."""
    values = []
    for p in results:
        value = p.numeric_values.get(facet_id)
        if value is None and schema is not None:
            category = schema.category_or_none(p.category_id)
            facet = category.facet_or_none(facet_id) if category else None
            if facet is not None:
                bounds = [
                    facet.bound_value(facet.tag(t))
                    for t in p.tags_of(facet_id)
                    if any(tag.id == t for tag in facet.tags)
                ]
                bounds = [b for b in bounds if b is not None]
                if bounds:
                    value = min(bounds)
        if value is not None:
            values.append(value)
    if not values:
        return None
    return FacetStats(
        facet_id=facet_id,
        count=len(values),
        min=min(values),
        median=Fraction(_median(values)),
        max=max(values),
    )
