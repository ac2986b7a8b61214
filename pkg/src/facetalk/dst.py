"""Dialog state tracking: applies intent sequences to cumulative state.

The update pipeline runs in five fixed steps: facet-independent operators
first, then grouping by facet (spans resolve through the relatedness
oracle), clear-before-set reordering within each group, conflict clearing
for each incoming set, and finally sequential application. States are
immutable values; every update returns a fresh state, so replays are
deterministic and states can be shared freely between workers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import TYPE_CHECKING, Iterable, Mapping, Optional

from . import text as textmod
from .clu import (
    Inclusivity,
    Intent,
    NudgeDirection,
    NumberValue,
    Operator,
    PredicateType,
    RANGE_TYPES,
    SortDirection,
    SpanValue,
    TagValue,
    Value,
    value_from_json,
    value_to_json,
)
from .clu import CURRENCY_UNITS
from .relatedness import Oracle
from .schema import Facet, FacetType, Schema

if TYPE_CHECKING:  # pragma: no cover
    from .fulfillment import FacetStats


class DstError(Exception):
    """Update cannot proceed; the session should ask for clarification."""

    def __init__(self, message: str):
        self.message = message
        super().__init__(message)


class NudgeUnsupported(DstError):
    pass


class RangeUnsupported(DstError):
    pass


class SortUnsupported(DstError):
    pass


class NudgeNoAnchor(DstError):
    pass


@dataclass(frozen=True)
class Bound:
    value: Fraction
    inclusive: bool


@dataclass(frozen=True)
class Range:
    """A (possibly half-open) interval over a facet's value domain."""

    lower: Optional[Bound] = None
    upper: Optional[Bound] = None

    def __post_init__(self):
        if self.lower and self.upper and _empty(self.lower, self.upper):
            raise ValueError("empty range")

    def contains(self, v: Fraction) -> bool:
        if self.lower is not None:
            if v < self.lower.value:
                return False
            if v == self.lower.value and not self.lower.inclusive:
                return False
        if self.upper is not None:
            if v > self.upper.value:
                return False
            if v == self.upper.value and not self.upper.inclusive:
                return False
        return True


def _empty(lower: Bound, upper: Bound) -> bool:
    if lower.value > upper.value:
        return True
    return lower.value == upper.value and not (lower.inclusive and upper.inclusive)


def _half_line(predicate_type: PredicateType, value: Fraction) -> Range:
    if predicate_type == PredicateType.LESS_THAN:
        return Range(upper=Bound(value, inclusive=False))
    if predicate_type == PredicateType.LESS_EQ:
        return Range(upper=Bound(value, inclusive=True))
    if predicate_type == PredicateType.GREATER_THAN:
        return Range(lower=Bound(value, inclusive=False))
    if predicate_type == PredicateType.GREATER_EQ:
        return Range(lower=Bound(value, inclusive=True))
    raise ValueError(f"{predicate_type} is not a range predicate")


def merge_range(existing: Optional[Range], predicate_type: PredicateType,
                value: Fraction) -> Range:
    """Intersect a new half-line with an existing range.

    An empty intersection means the user changed their mind; recency wins
    and the new half-line stands alone.
    """
    if not isinstance(value, Fraction):
        try:
            value = Fraction(value)
        except (TypeError, ValueError):
            raise DstError(f"range bound {value!r} is not numeric") from None
    new = _half_line(predicate_type, value)
    if existing is None:
        return new
    lower = _tighter(existing.lower, new.lower, upper=False)
    upper = _tighter(existing.upper, new.upper, upper=True)
    if lower is not None and upper is not None and _empty(lower, upper):
        return new
    return Range(lower=lower, upper=upper)


def _tighter(a: Optional[Bound], b: Optional[Bound], upper: bool) -> Optional[Bound]:
    if a is None:
        return b
    if b is None:
        return a
    if a.value == b.value:
        return Bound(a.value, inclusive=a.inclusive and b.inclusive)
    if upper:
        return a if a.value < b.value else b
    return a if a.value > b.value else b


@dataclass(frozen=True)
class Predicate:
    value: Value
    predicate_type: PredicateType
    turn_index: int

    def __post_init__(self):
        if self.predicate_type not in (PredicateType.EQUALS, PredicateType.NOT_EQUALS):
            raise ValueError("stored predicates are EQUALS or NOT_EQUALS only")


@dataclass(frozen=True)
class FacetState:
    facet_id: str
    positive: tuple[Predicate, ...] = ()
    negative: tuple[Predicate, ...] = ()
    range: Optional[Range] = None

    @property
    def empty(self) -> bool:
        return not self.positive and not self.negative and self.range is None


@dataclass(frozen=True)
class DialogState:
    category_id: Optional[str] = None
    facet_states: Mapping[str, FacetState] = field(default_factory=dict)
    ungrounded: tuple[Predicate, ...] = ()
    sort: Optional[tuple[str, SortDirection]] = None
    last_touched_facet: Optional[str] = None
    turn_counter: int = 0

    @property
    def empty(self) -> bool:
        return not self.facet_states and not self.ungrounded and self.sort is None

    def all_predicates(self) -> Iterable[tuple[Optional[str], Predicate]]:
        for facet_id, fs in self.facet_states.items():
            for p in fs.positive:
                yield facet_id, p
            for p in fs.negative:
                yield facet_id, p
        for p in self.ungrounded:
            yield None, p


EMPTY_STATE = DialogState()


@dataclass(frozen=True)
class DstConfig:
    nudge_tighten: Fraction = Fraction(4, 5)
    nudge_relax: Fraction = Fraction(5, 4)
    clear_all_retains_category: bool = True


DEFAULT_CONFIG = DstConfig()


@dataclass(frozen=True)
class DstUpdate:
    """Result of one update: the new state plus any at-limit nudge signals."""

    state: DialogState
    at_limit: tuple[str, ...] = ()


# ---------------------------------------------------------------------------


def apply_intents(
    state: DialogState,
    intents: list[Intent],
    oracle: Oracle,
    result_stats: Optional[Mapping[str, "FacetStats"]] = None,
    schema: Optional[Schema] = None,
    config: DstConfig = DEFAULT_CONFIG,
) -> DstUpdate:
    """Apply an intent sequence and return the new state.

    ``result_stats`` supplies per-facet numeric stats over the last result
    page; a nudge with no bound or tag to anchor on uses the median.
    Raises a :class:`DstError` subclass when an operator cannot apply to
    its facet; the input state is never modified either way.
    """
    schema = schema if schema is not None else getattr(oracle, "schema", None)
    updater = _Updater(state, oracle, schema, result_stats or {}, config)
    return updater.run(list(intents))


class _Updater:
    def __init__(self, state, oracle, schema, result_stats, config):
        self.oracle = oracle
        self.schema = schema
        self.stats = result_stats
        self.config = config
        self.category_id = state.category_id
        self.facet_states: dict[str, FacetState] = dict(state.facet_states)
        self.ungrounded: list[Predicate] = list(state.ungrounded)
        self.sort = state.sort
        self.last_touched = state.last_touched_facet
        self.turn = state.turn_counter + 1
        self.at_limit: list[str] = []

    # -- plumbing -----------------------------------------------------------

    def _facet(self, facet_id: str) -> Facet:
        if self.schema is None or self.category_id is None:
            raise DstError("no schema/category available for facet lookup")
        category = self.schema.category_or_none(self.category_id)
        if category is None:
            raise DstError(f"unknown category {self.category_id!r}")
        facet = category.facet_or_none(facet_id)
        if facet is None:
            raise DstError(f"unknown facet {facet_id!r} in {self.category_id!r}")
        return facet

    def _phrase(self, value: Value) -> str:
        if isinstance(value, SpanValue):
            return value.text
        if isinstance(value, TagValue):
            try:
                return self._facet(value.facet_id).tag(value.tag_id).text
            except (DstError, KeyError):
                return value.tag_id
        return textmod.format_number(value.value)

    def _same_tag(self, a: Value, b: Value) -> bool:
        if a == b:
            return True
        if self.category_id is None:
            return False
        return self.oracle.same_tag(self.category_id, self._phrase(a), self._phrase(b))

    def _same_facet_span(self, span: str, other: Value) -> bool:
        if self.category_id is None:
            return False
        return self.oracle.same_facet(self.category_id, span, self._phrase(other))

    def _result_state(self) -> DialogState:
        facet_states = {
            fid: fs for fid, fs in self.facet_states.items() if not fs.empty
        }
        return DialogState(
            category_id=self.category_id,
            facet_states=facet_states,
            ungrounded=tuple(self.ungrounded),
            sort=self.sort,
            last_touched_facet=self.last_touched,
            turn_counter=self.turn,
        )

    def _mutate(self, facet_id: str) -> FacetState:
        return self.facet_states.get(facet_id, FacetState(facet_id=facet_id))

    # -- the five steps -------------------------------------------------------

    def run(self, intents: list[Intent]) -> DstUpdate:
        remaining: list[Intent] = []

        # Step 1: facet-independent operators.
        for intent in intents:
            if intent.operator == Operator.CLEAR_ALL_FACETS:
                self.facet_states = {}
                self.ungrounded = []
                self.sort = None
                self.last_touched = None
                if not self.config.clear_all_retains_category:
                    self.category_id = None
            elif intent.operator == Operator.ORDER_BY:
                facet = self._facet(intent.facet_id)
                if not facet.supports_ranges:
                    raise SortUnsupported(
                        f"cannot sort by {facet.display_name}: values are unordered"
                    )
                self.sort = (intent.facet_id, intent.sort_direction)
            else:
                remaining.append(intent)

        # Step 2: group the rest by facet (spans via the oracle).
        groups: dict[object, list[Intent]] = {}
        effective_facet: dict[int, Optional[str]] = {}
        for intent in remaining:
            key = self._group_key(intent)
            groups.setdefault(key, []).append(intent)
            effective_facet[id(intent)] = key if isinstance(key, str) else None

        # Step 3: clears before sets within each group, stable otherwise.
        ordered: list[Intent] = []
        clear_ops = (Operator.CLEAR_FACET, Operator.CLEAR_VALUE)
        for key in groups:
            group = groups[key]
            ordered.extend(i for i in group if i.operator in clear_ops)
            ordered.extend(i for i in group if i.operator not in clear_ops)

        # Steps 4+5: conflict clearing folded into each application.
        for intent in ordered:
            self._apply(intent, effective_facet.get(id(intent)))

        # Recency bookkeeping follows the effective order: facet-independent
        # operators land first, the rest in utterance order.
        step1 = [i for i in intents if i.operator in
                 (Operator.CLEAR_ALL_FACETS, Operator.ORDER_BY)]
        for intent in step1 + remaining:
            if intent.operator == Operator.CLEAR_ALL_FACETS:
                self.last_touched = None
                continue
            touched = intent.facet_id or effective_facet.get(id(intent))
            if touched is not None:
                self.last_touched = touched

        return DstUpdate(state=self._result_state(), at_limit=tuple(self.at_limit))

    def _group_key(self, intent: Intent):
        if intent.facet_id is not None:
            return intent.facet_id
        if isinstance(intent.value, TagValue):
            return intent.value.facet_id
        if isinstance(intent.value, SpanValue):
            resolved = self._resolve_span_facet(intent.value.text)
            if resolved is not None:
                return resolved
            return ("span", intent.value.text)
        return ("other", id(intent))

    def _resolve_span_facet(self, span: str) -> Optional[str]:
        """Facet for an unresolved span, from comparisons with state."""
        if self.category_id is None:
            return None
        for facet_id in self.facet_states:
            if self.oracle.of_facet(self.category_id, span, facet_id):
                return facet_id
        for facet_id, fs in self.facet_states.items():
            for p in list(fs.positive) + list(fs.negative):
                phrase = self._phrase(p.value)
                if self.oracle.same_tag(self.category_id, span, phrase) or (
                    self.oracle.same_facet(self.category_id, span, phrase)
                ):
                    return facet_id
        return None

    # -- operator application --------------------------------------------------

    def _apply(self, intent: Intent, grouped_facet: Optional[str]) -> None:
        op = intent.operator
        if op == Operator.CLEAR_FACET:
            self._clear_facet(intent.facet_id)
        elif op == Operator.CLEAR_VALUE:
            self._clear_value(intent.value)
        elif op == Operator.NUDGE_FACET:
            self._nudge(intent.facet_id, intent.nudge_direction)
        elif op == Operator.SET_VALUE:
            self._set_value(intent, grouped_facet)
        else:  # pragma: no cover - steps 1 handled these
            raise DstError(f"unexpected operator {op}")

    def _clear_facet(self, facet_id: str) -> None:
        self.facet_states.pop(facet_id, None)
        if self.category_id is not None:
            self.ungrounded = [
                p
                for p in self.ungrounded
                if not self.oracle.of_facet(
                    self.category_id, self._phrase(p.value), facet_id
                )
            ]

    def _clear_value(self, value: Value) -> None:
        for facet_id, fs in list(self.facet_states.items()):
            positive = tuple(p for p in fs.positive if not self._same_tag(p.value, value))
            negative = tuple(p for p in fs.negative if not self._same_tag(p.value, value))
            if positive != fs.positive or negative != fs.negative:
                self.facet_states[facet_id] = replace(
                    fs, positive=positive, negative=negative
                )
        self.ungrounded = [
            p for p in self.ungrounded if not self._same_tag(p.value, value)
        ]

    def _set_value(self, intent: Intent, grouped_facet: Optional[str]) -> None:
        value = intent.value
        ptype = intent.predicate_type
        if isinstance(value, SpanValue) and intent.facet_id is None and grouped_facet is None:
            self._set_ungrounded(intent)
            return
        facet_id = intent.facet_id or grouped_facet or (
            value.facet_id if isinstance(value, TagValue) else None
        )
        if facet_id is None:
            raise DstError("set-value intent has no resolvable facet")
        facet = self._facet(facet_id)

        if ptype in RANGE_TYPES:
            if not facet.supports_ranges:
                raise RangeUnsupported(
                    f"{facet.display_name} does not support ranges"
                )
            bound = self._bound_value(facet, value)
            fs = self._mutate(facet_id)
            new_range = merge_range(fs.range, ptype, bound)
            incoming = _half_line(ptype, bound)
            positive = tuple(
                p
                for p in fs.positive
                if not self._discrete_outside(facet, p.value, incoming)
            )
            self.facet_states[facet_id] = replace(
                fs, positive=positive, range=new_range
            )
            return

        fs = self._mutate(facet_id)
        inclusivity = intent.inclusivity or Inclusivity.UNDEFINED
        if ptype == PredicateType.EQUALS:
            if inclusivity == Inclusivity.EXCLUSIVE:
                positive: tuple[Predicate, ...] = ()
                negative: tuple[Predicate, ...] = ()
            elif inclusivity == Inclusivity.INCLUSIVE:
                positive = fs.positive
                negative = tuple(
                    p for p in fs.negative if not self._same_tag(p.value, value)
                )
            else:
                positive = ()
                negative = tuple(
                    p for p in fs.negative if not self._same_tag(p.value, value)
                )
            positive = tuple(
                p for p in positive if not self._same_tag(p.value, value)
            ) + (Predicate(value, PredicateType.EQUALS, self.turn),)
            self.facet_states[facet_id] = replace(
                fs, positive=positive, negative=negative
            )
        else:  # NOT_EQUALS
            positive = tuple(
                p for p in fs.positive if not self._same_tag(p.value, value)
            )
            negative = tuple(
                p for p in fs.negative if not self._same_tag(p.value, value)
            ) + (Predicate(value, PredicateType.NOT_EQUALS, self.turn),)
            self.facet_states[facet_id] = replace(
                fs, positive=positive, negative=negative
            )

    def _set_ungrounded(self, intent: Intent) -> None:
        span = intent.value.text
        ptype = intent.predicate_type
        inclusivity = intent.inclusivity or Inclusivity.UNDEFINED
        # Same-tag duplicates always collapse to the newest mention.
        self.ungrounded = [
            p for p in self.ungrounded if not self._same_tag(p.value, intent.value)
        ]
        if ptype == PredicateType.EQUALS and inclusivity != Inclusivity.INCLUSIVE:
            # The span displaces anything the oracle puts on the same facet,
            # grounded or not.
            self.ungrounded = [
                p
                for p in self.ungrounded
                if not self._same_facet_span(span, p.value)
            ]
            for facet_id, fs in list(self.facet_states.items()):
                positive = tuple(
                    p for p in fs.positive if not self._same_facet_span(span, p.value)
                )
                if positive != fs.positive:
                    self.facet_states[facet_id] = replace(fs, positive=positive)
        self.ungrounded.append(Predicate(intent.value, ptype, self.turn))

    def _bound_value(self, facet: Facet, value: Value) -> Fraction:
        if isinstance(value, NumberValue):
            if facet.is_numeric:
                return value.value
            return value.value  # rank space for ORDERED-only facets
        if isinstance(value, TagValue):
            tag = facet.tag(value.tag_id)
            bound = facet.bound_value(tag)
            if bound is None:
                raise DstError(f"tag {tag.text!r} has no orderable value")
            return bound
        raise DstError("span values cannot bound a range")

    def _discrete_outside(self, facet: Facet, value: Value, incoming: Range) -> bool:
        """Conflict test: a stored positive falls outside the new half-line."""
        if isinstance(value, SpanValue):
            return False
        if isinstance(value, NumberValue):
            v = value.value
        else:
            try:
                v = facet.bound_value(facet.tag(value.tag_id))
            except KeyError:
                return False
            if v is None:
                return False
        return not incoming.contains(v)

    # -- nudges ------------------------------------------------------------------

    def _nudge(self, facet_id: str, direction: NudgeDirection) -> None:
        facet = self._facet(facet_id)
        if not facet.supports_ranges:
            raise NudgeUnsupported(
                f"{facet.display_name} has no order to nudge along"
            )
        fs = self._mutate(facet_id)

        if facet.is_ordered:
            anchor = self._latest_tag_predicate(facet, fs)
            if anchor is not None:
                self._nudge_ordered(facet, fs, anchor, direction)
                return
        if facet.is_numeric and self._nudge_numeric(facet, fs, direction):
            return
        self._nudge_from_stats(facet, fs, direction)

    def _latest_tag_predicate(self, facet: Facet, fs: FacetState) -> Optional[Predicate]:
        best = None
        for p in fs.positive:
            if isinstance(p.value, TagValue):
                if best is None or p.turn_index >= best.turn_index:
                    best = p
        return best

    def _nudge_ordered(self, facet, fs, anchor: Predicate, direction) -> None:
        tag = facet.tag(anchor.value.tag_id)
        step = 1 if direction == NudgeDirection.POSITIVE else -1
        target_rank = tag.rank + step
        target = next((t for t in facet.tags if t.rank == target_rank), None)
        if target is None:
            self.at_limit.append(facet.id)
            return
        positive = tuple(
            p if p is not anchor else Predicate(
                TagValue(facet.id, target.id), PredicateType.EQUALS, self.turn
            )
            for p in fs.positive
        )
        self.facet_states[facet.id] = replace(fs, positive=positive)

    def _nudge_numeric(self, facet, fs, direction) -> bool:
        values = [
            v
            for v in (
                self._discrete_value(facet, p.value) for p in fs.positive
            )
            if v is not None
        ]
        if direction == NudgeDirection.NEGATIVE:
            anchor = None
            if fs.range is not None and fs.range.upper is not None:
                anchor = fs.range.upper.value
            elif values:
                anchor = max(values)
            if anchor is None:
                return False
            new_upper = Bound(anchor * self.config.nudge_tighten, inclusive=False)
            lower = fs.range.lower if fs.range else None
            if lower is not None and _empty(lower, new_upper):
                lower = None
            new_range = Range(lower=lower, upper=new_upper)
        else:
            anchor = None
            if fs.range is not None and fs.range.lower is not None:
                anchor = fs.range.lower.value
            elif values:
                anchor = min(values)
            if anchor is None:
                return False
            new_lower = Bound(anchor * self.config.nudge_relax, inclusive=False)
            upper = fs.range.upper if fs.range else None
            if upper is not None and _empty(new_lower, upper):
                upper = None
            new_range = Range(lower=new_lower, upper=upper)
        positive = tuple(
            p
            for p in fs.positive
            if self._discrete_value(facet, p.value) is None
            or new_range.contains(self._discrete_value(facet, p.value))
        )
        self.facet_states[facet.id] = replace(fs, positive=positive, range=new_range)
        return True

    def _discrete_value(self, facet: Facet, value: Value) -> Optional[Fraction]:
        if isinstance(value, NumberValue):
            return value.value
        if isinstance(value, TagValue):
            try:
                return facet.bound_value(facet.tag(value.tag_id))
            except KeyError:
                return None
        return None

    def _nudge_from_stats(self, facet, fs, direction) -> None:
        stats = self.stats.get(facet.id)
        if stats is None:
            raise NudgeNoAnchor(
                f"nothing to anchor a {facet.display_name} nudge on yet"
            )
        median = stats.median
        if direction == NudgeDirection.NEGATIVE:
            new_range = Range(upper=Bound(median, inclusive=False))
        else:
            new_range = Range(lower=Bound(median, inclusive=False))
        positive = tuple(
            p
            for p in fs.positive
            if self._discrete_value(facet, p.value) is None
            or new_range.contains(self._discrete_value(facet, p.value))
        )
        self.facet_states[facet.id] = replace(fs, positive=positive, range=new_range)


# ---------------------------------------------------------------------------
# Rendering


def render_state(state: DialogState, schema: Schema) -> str:
    """One-line human-readable grounding summary of the dialog state."""
    if state.empty:
        return "no preferences yet"
    parts: list[str] = []
    category = (
        schema.category_or_none(state.category_id) if state.category_id else None
    )
    if category is not None:
        parts.append(category.canonical_phrase)

    for facet_id in sorted(state.facet_states):
        fs = state.facet_states[facet_id]
        facet = category.facet_or_none(facet_id) if category else None
        parts.append(_render_facet(fs, facet))

    for p in sorted(state.ungrounded, key=lambda p: p.value.text):
        quoted = f"'{p.value.text}'"
        parts.append(quoted if p.predicate_type == PredicateType.EQUALS else f"not {quoted}")

    if state.sort is not None:
        facet_id, direction = state.sort
        facet = category.facet_or_none(facet_id) if category else None
        label = facet.display_name.lower() if facet else facet_id
        arrow = "low to high" if direction == SortDirection.ASCENDING else "high to low"
        parts.append(f"sorted by {label} ({arrow})")

    return " · ".join(parts)


def _render_facet(fs: FacetState, facet: Optional[Facet]) -> str:
    def value_text(value: Value) -> str:
        if isinstance(value, SpanValue):
            return f"'{value.text}'"
        if isinstance(value, TagValue):
            if facet is not None:
                try:
                    return facet.tag(value.tag_id).text
                except KeyError:
                    pass
            return value.tag_id
        return _render_amount(value.value, facet)

    segments: list[str] = []
    if fs.positive:
        segments.append(" or ".join(value_text(p.value) for p in fs.positive))
    for p in fs.negative:
        segments.append(f"not {value_text(p.value)}")
    if fs.range is not None:
        segments.append(_render_range(fs.range, facet))
    body = ", ".join(segments)

    if facet is not None and FacetType.BOOLEAN in facet.types:
        return body
    label = facet.display_name.lower() if facet is not None else fs.facet_id
    return f"{label}: {body}"


def _render_amount(value: Fraction, facet: Optional[Facet]) -> str:
    if facet is not None and facet.is_ordered and not facet.is_numeric:
        if value.denominator == 1:
            for tag in facet.tags:
                if tag.rank == int(value):
                    return tag.text
    text = textmod.format_number(value)
    if facet is not None and facet.unit and facet.unit.lower() in CURRENCY_UNITS:
        return f"${text}"
    return text


def _render_range(r: Range, facet: Optional[Facet]) -> str:
    if r.lower is not None and r.upper is not None:
        return (
            f"between {_render_amount(r.lower.value, facet)} "
            f"and {_render_amount(r.upper.value, facet)}"
        )
    if r.upper is not None:
        return f"under {_render_amount(r.upper.value, facet)}"
    return f"over {_render_amount(r.lower.value, facet)}"


# ---------------------------------------------------------------------------
# Serialization (canonical JSON, stable across runs)


def _predicate_to_json(p: Predicate, with_type: bool) -> dict:
    out = {"value": value_to_json(p.value), "turn": p.turn_index}
    if with_type:
        out["type"] = p.predicate_type.value
    return out


def _predicate_sort_key(p: Predicate):
    return (json.dumps(value_to_json(p.value), sort_keys=True), p.turn_index)


def _bound_to_json(b: Optional[Bound]):
    if b is None:
        return None
    return {"value": textmod.number_to_json(b.value), "inclusive": b.inclusive}


def state_to_json(state: DialogState) -> dict:
    facets = {}
    for facet_id, fs in state.facet_states.items():
        facets[facet_id] = {
            "positive": [
                _predicate_to_json(p, with_type=False)
                for p in sorted(fs.positive, key=_predicate_sort_key)
            ],
            "negative": [
                _predicate_to_json(p, with_type=False)
                for p in sorted(fs.negative, key=_predicate_sort_key)
            ],
            "range": (
                None
                if fs.range is None
                else {
                    "lower": _bound_to_json(fs.range.lower),
                    "upper": _bound_to_json(fs.range.upper),
                }
            ),
        }
    return {
        "category": state.category_id,
        "facets": facets,
        "ungrounded": [
            _predicate_to_json(p, with_type=True)
            for p in sorted(state.ungrounded, key=_predicate_sort_key)
        ],
        "sort": (
            None
            if state.sort is None
            else {"facet": state.sort[0], "direction": state.sort[1].value}
        ),
        "last_touched_facet": state.last_touched_facet,
        "turn_counter": state.turn_counter,
    }


def canonical_state_json(state: DialogState) -> str:
    return json.dumps(state_to_json(state), sort_keys=True, separators=(",", ":"))


def state_from_json(doc: dict) -> DialogState:
    def bound(obj) -> Optional[Bound]:
        if obj is None:
            return None
        return Bound(textmod.number_from_json(obj["value"]), obj["inclusive"])

    facet_states = {}
    for facet_id, raw in doc.get("facets", {}).items():
        facet_states[facet_id] = FacetState(
            facet_id=facet_id,
            positive=tuple(
                Predicate(value_from_json(p["value"]), PredicateType.EQUALS, p["turn"])
                for p in raw.get("positive", [])
            ),
            negative=tuple(
                Predicate(value_from_json(p["value"]), PredicateType.NOT_EQUALS, p["turn"])
                for p in raw.get("negative", [])
            ),
            range=(
                None
                if raw.get("range") is None
                else Range(
                    lower=bound(raw["range"].get("lower")),
                    upper=bound(raw["range"].get("upper")),
                )
            ),
        )
    raw_sort = doc.get("sort")
    return DialogState(
        category_id=doc.get("category"),
        facet_states=facet_states,
        ungrounded=tuple(
            Predicate(
                value_from_json(p["value"]),
                PredicateType(p.get("type", "EQUALS")),
                p["turn"],
            )
            for p in doc.get("ungrounded", [])
        ),
        sort=(
            None
            if raw_sort is None
            else (raw_sort["facet"], SortDirection(raw_sort["direction"]))
        ),
        last_touched_facet=doc.get("last_touched_facet"),
        turn_counter=doc.get("turn_counter", 0),
    )
