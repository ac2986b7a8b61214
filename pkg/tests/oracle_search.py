"""Independent linear-scan search oracle.

Re-states the documented match semantics directly over products, with no
use of the Index structures, so index-based search has something honest to
be compared against.
"""

from __future__ import annotations

from facetalk.fulfillment import Product, SearchRequest, text_tokens
from facetalk.clu import SortDirection
from facetalk.schema import Schema


def product_facet_value(product: Product, schema: Schema, facet_id):
    category = schema.category(product.category_id)
    facet = category.facet_or_none(facet_id)
    if facet is None:
        return None
    if facet_id in product.numeric_values:
        return product.numeric_values[facet_id]
    bounds = []
    for f, t in product.tag_assignments:
        if f != facet_id:
            continue
        try:
            tag = facet.tag(t)
        except KeyError:
            continue
        bound = facet.bound_value(tag)
        if bound is not None:
            bounds.append(bound)
    if bounds:
        return min(bounds)
    return None


def matches(product: Product, request: SearchRequest, schema: Schema) -> bool:
    if product.category_id != request.category_id:
        return False
    for facet_id, restrict in request.restricts.items():
        tags = {t for f, t in product.tag_assignments if f == facet_id}
        value = product_facet_value(product, schema, facet_id)
        if restrict.allowed_tags or restrict.allowed_numbers:
            tag_hit = bool(tags & restrict.allowed_tags)
            number_hit = value is not None and value in restrict.allowed_numbers
            if not (tag_hit or number_hit):
                return False
        if tags & restrict.forbidden_tags:
            return False
        if restrict.forbidden_numbers and value in restrict.forbidden_numbers:
            return False
        if restrict.range is not None:
            if value is None or not restrict.range.contains(value):
                return False
    product_tokens = text_tokens(f"{product.title} {product.description}")
    for span in request.query_spans:
        span_tokens = text_tokens(span.text)
        if not span_tokens:
            continue
        contained = span_tokens <= product_tokens
        if span.positive and not contained:
            return False
        if not span.positive and contained:
            return False
    return True


def oracle_search(products, request: SearchRequest, schema: Schema, page_size: int):
    hits = [p for p in products if matches(p, request, schema)]
    if request.sort is not None:
        facet_id, direction = request.sort
        category = schema.category_or_none(request.category_id)
        facet = category.facet_or_none(facet_id) if category else None
        if facet is not None:
            descending = direction == SortDirection.DESCENDING

            def key(p):
                value = product_facet_value(p, schema, facet_id)
                if value is None:
                    return (1, 0, p.id)
                return (0, -value if descending else value, p.id)

            hits.sort(key=key)
        else:
            hits.sort(key=lambda p: p.id)
    else:
        hits.sort(key=lambda p: p.id)
    return hits[:page_size]
