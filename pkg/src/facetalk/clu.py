"""Utterance parser: one normalized utterance, in context, to intent sequences.

The parser is a deterministic cue-pattern engine with the same external
contract a learned model would have: normalize, detect the product
category, annotate schema vocabulary, split clauses on conjunctions, then
run an ordered cue inventory per clause. Values that the schema cannot
ground are carried through as ungrounded spans copied verbatim from the
input. The cue inventory is the inverse of the shipped corpus grammar; the
two are co-maintained.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import TYPE_CHECKING, Optional, Sequence

from . import text as textmod
from .schema import Annotation, Facet, Schema, lookup_spans, resolve_ambiguous_tag
from .relatedness import Lexicon

if TYPE_CHECKING:  # pragma: no cover
    from .dst import DialogState

CUR = textmod.CURRENCY_TOKEN

# Facet units treated as currency when resolving bare numerals.
CURRENCY_UNITS = {"usd", "$", "dollar", "dollars"}


class Operator(str, Enum):
    SET_VALUE = "SET_VALUE"
    CLEAR_VALUE = "CLEAR_VALUE"
    CLEAR_FACET = "CLEAR_FACET"
    CLEAR_ALL_FACETS = "CLEAR_ALL_FACETS"
    NUDGE_FACET = "NUDGE_FACET"
    ORDER_BY = "ORDER_BY"


class PredicateType(str, Enum):
    EQUALS = "EQUALS"
    NOT_EQUALS = "NOT_EQUALS"
    LESS_THAN = "LESS_THAN"
    LESS_EQ = "LESS_EQ"
    GREATER_THAN = "GREATER_THAN"
    GREATER_EQ = "GREATER_EQ"


RANGE_TYPES = {
    PredicateType.LESS_THAN,
    PredicateType.LESS_EQ,
    PredicateType.GREATER_THAN,
    PredicateType.GREATER_EQ,
}


class Inclusivity(str, Enum):
    INCLUSIVE = "INCLUSIVE"
    EXCLUSIVE = "EXCLUSIVE"
    UNDEFINED = "UNDEFINED"


class NudgeDirection(str, Enum):
    POSITIVE = "POSITIVE"
    NEGATIVE = "NEGATIVE"


class SortDirection(str, Enum):
    ASCENDING = "ASCENDING"
    DESCENDING = "DESCENDING"


class DialogAct(str, Enum):
    NONE = "NONE"
    AFFIRM = "AFFIRM"
    DENY = "DENY"
    RESET = "RESET"


@dataclass(frozen=True)
class TagValue:
    facet_id: str
    tag_id: str


@dataclass(frozen=True)
class SpanValue:
    text: str


@dataclass(frozen=True)
class NumberValue:
    value: Fraction


Value = TagValue | SpanValue | NumberValue


class ClarificationNeeded(Exception):
    """Parse/update cannot proceed without asking the user something."""

    def __init__(self, message: str):
        self.message = message
        super().__init__(message)


@dataclass(frozen=True)
class Intent:
    """One operator with arguments; the parser-to-tracker wire unit."""

    operator: Operator
    facet_id: Optional[str] = None
    value: Optional[Value] = None
    predicate_type: Optional[PredicateType] = None
    inclusivity: Optional[Inclusivity] = None
    nudge_direction: Optional[NudgeDirection] = None
    sort_direction: Optional[SortDirection] = None

    def __post_init__(self):
        op = self.operator
        if op == Operator.SET_VALUE:
            if self.value is None or self.predicate_type is None:
                raise ValueError("SET_VALUE needs a value and a predicate type")
            if self.inclusivity is None:
                object.__setattr__(self, "inclusivity", Inclusivity.UNDEFINED)
            if self.predicate_type in RANGE_TYPES and isinstance(self.value, SpanValue):
                raise ValueError("range predicates take tags or numbers, not spans")
            self._forbid(nudge_direction=True, sort_direction=True)
        elif op == Operator.CLEAR_VALUE:
            if self.value is None:
                raise ValueError("CLEAR_VALUE needs a value")
            self._forbid(predicate_type=True, inclusivity=True,
                         nudge_direction=True, sort_direction=True)
        elif op == Operator.CLEAR_FACET:
            if self.facet_id is None:
                raise ValueError("CLEAR_FACET needs a facet")
            self._forbid(value=True, predicate_type=True, inclusivity=True,
                         nudge_direction=True, sort_direction=True)
        elif op == Operator.CLEAR_ALL_FACETS:
            self._forbid(facet_id=True, value=True, predicate_type=True,
                         inclusivity=True, nudge_direction=True, sort_direction=True)
        elif op == Operator.NUDGE_FACET:
            if self.facet_id is None or self.nudge_direction is None:
                raise ValueError("NUDGE_FACET needs a facet and a direction")
            self._forbid(value=True, predicate_type=True, inclusivity=True,
                         sort_direction=True)
        elif op == Operator.ORDER_BY:
            if self.facet_id is None or self.sort_direction is None:
                raise ValueError("ORDER_BY needs a facet and a direction")
            self._forbid(value=True, predicate_type=True, inclusivity=True,
                         nudge_direction=True)

    def _forbid(self, **flags):
        for name in flags:
            if getattr(self, name) is not None:
                raise ValueError(f"{self.operator.value} does not take {name}")

    def to_json(self) -> dict:
        out: dict = {"operator": self.operator.value}
        if self.facet_id is not None:
            out["facet"] = self.facet_id
        if self.value is not None:
            out["value"] = value_to_json(self.value)
        if self.predicate_type is not None:
            out["predicate_type"] = self.predicate_type.value
        if self.inclusivity is not None:
            out["inclusivity"] = self.inclusivity.value
        if self.nudge_direction is not None:
            out["nudge_direction"] = self.nudge_direction.value
        if self.sort_direction is not None:
            out["sort_direction"] = self.sort_direction.value
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Intent":
        nudge = obj.get("nudge_direction")
        # The INCREASE/DECREASE spelling is accepted as an input alias.
        if nudge == "INCREASE":
            nudge = "POSITIVE"
        elif nudge == "DECREASE":
            nudge = "NEGATIVE"
        return cls(
            operator=Operator(obj["operator"]),
            facet_id=obj.get("facet"),
            value=value_from_json(obj.get("value")),
            predicate_type=(
                PredicateType(obj["predicate_type"]) if "predicate_type" in obj else None
            ),
            inclusivity=(
                Inclusivity(obj["inclusivity"]) if "inclusivity" in obj else None
            ),
            nudge_direction=NudgeDirection(nudge) if nudge else None,
            sort_direction=(
                SortDirection(obj["sort_direction"]) if "sort_direction" in obj else None
            ),
        )


def value_to_json(value: Value) -> dict:
    if isinstance(value, TagValue):
        return {"tag": {"facet": value.facet_id, "id": value.tag_id}}
    if isinstance(value, SpanValue):
        return {"span": value.text}
    return {"number": textmod.number_to_json(value.value)}


def value_from_json(obj) -> Optional[Value]:
    if obj is None:
        return None
    if "tag" in obj:
        return TagValue(facet_id=obj["tag"]["facet"], tag_id=obj["tag"]["id"])
    if "span" in obj:
        return SpanValue(text=obj["span"])
    if "number" in obj:
        return NumberValue(value=textmod.number_from_json(obj["number"]))
    raise ValueError(f"unreadable value {obj!r}")


@dataclass(frozen=True)
class ParseContext:
    """Dialog context carried between turns."""

    active_category: Optional[str] = None
    last_touched_facet: Optional[str] = None
    pending_prompt: Optional[str] = None


class DecisionKind(str, Enum):
    KEEP = "KEEP"
    SWITCH = "SWITCH"
    INITIAL = "INITIAL"


@dataclass(frozen=True)
class CategoryDecision:
    kind: DecisionKind
    category_id: Optional[str] = None

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind.value}
        if self.category_id is not None:
            out["category"] = self.category_id
        return out


KEEP = CategoryDecision(DecisionKind.KEEP)


@dataclass(frozen=True)
class ParseResult:
    intents: tuple[Intent, ...]
    category_decision: CategoryDecision = KEEP
    dialog_act: DialogAct = DialogAct.NONE
    unparsed: bool = False

    def to_json(self) -> dict:
        return {
            "category_decision": self.category_decision.to_json(),
            "dialog_act": self.dialog_act.value,
            "intents": [i.to_json() for i in self.intents],
            "unparsed": self.unparsed,
        }


# ---------------------------------------------------------------------------
# Artifact data: stop words and cue vocabulary, versioned with the rules.

STOP_WORDS = frozenset("""
a an the this that these those it its itself they them their there here
i me my mine we us our you your yours he she his her
one ones thing things stuff item items kind kinds preference preferences option options
is are was were be being been am do does did has have had having
will would can could shall should may might must
want wants wanted like likes liked love loves need needs prefer
show shows see look looking looks find finds get gets give bring
make makes sure keep keeps buy buying shop shopping browse search searching
some any anything something nothing everything all other others
please thanks thank okay ok kay yeah well hmm hmmm uh um oh hey hi hello
actually really very quite almost even still maybe perhaps rather
let us got getting fine great alright cool
in on at of to for from with within about as if whether or so then than
how what which who when where why
also too only just
matter care now
more less most least over under above below between up down
first sort sorted order by
not no
""".split()) | {CUR}

NEGATION_TRIGGERS = frozenset({"not", "no", "without", "hate", "hates", "dislike", "never"})

RESET_PATTERNS = (
    ("start", "over"),
    ("start", "again"),
    ("start", "fresh"),
    ("start", "from", "scratch"),
    ("reset",),
    ("clear", "everything"),
    ("forget", "everything"),
)

DENY_LEADS = frozenset({"no", "nope", "nah"})
AFFIRM_LEADS = frozenset({"yes", "yeah", "yep", "yup", "sure", "ok", "okay"})
ACT_TRAILERS = frozenset({"thank", "thanks", "you", "now", "really", "please"})

_ASC_WORDS = ("ascending", "asc")
_DESC_WORDS = ("descending", "desc")


def normalize(utterance: str) -> list[str]:
    """Canonical token stream for an utterance (see :mod:`facetalk.text`)."""
    return textmod.normalize(utterance)


# ---------------------------------------------------------------------------
# Category detection


def detect_category(
    tokens: Sequence[str], schema: Schema, context: ParseContext
) -> CategoryDecision:
    decision, _ = _detect_category_spans(tokens, schema, context)
    return decision


def _detect_category_spans(tokens, schema: Schema, context: ParseContext):
    """Category decision plus the token spans the triggers occupy."""
    triggers = []
    for cat_triggers in schema.trigger_index().values():
        triggers.extend(cat_triggers)
    triggers.sort(key=lambda item: -len(item[0]))

    matched: dict[str, list[tuple[int, int]]] = {}
    i = 0
    n = len(tokens)
    while i < n:
        hit = None
        for phrase, cat_id in triggers:
            k = len(phrase)
            if k and tuple(tokens[i : i + k]) == phrase:
                hit = (cat_id, i, i + k)
                break
        if hit is None:
            i += 1
            continue
        matched.setdefault(hit[0], []).append((hit[1], hit[2]))
        i = hit[2]

    spans = [s for spanlist in matched.values() for s in spanlist]
    active = context.active_category
    others = [c for c in matched if c != active]
    if len(others) > 1:
        raise ClarificationNeeded(
            "more than one product category mentioned: " + ", ".join(sorted(others))
        )
    if active is None:
        if others:
            return CategoryDecision(DecisionKind.INITIAL, others[0]), spans
        return KEEP, spans
    if others:
        return CategoryDecision(DecisionKind.SWITCH, others[0]), spans
    return KEEP, spans


# ---------------------------------------------------------------------------
# Clause machinery


@dataclass
class _Clause:
    start: int
    end: int
    tokens: list[str]
    consumed: list[bool] = field(default_factory=list)
    annotations: list[Annotation] = field(default_factory=list)

    def __post_init__(self):
        if not self.consumed:
            self.consumed = [False] * (self.end - self.start)

    def local(self, i: int) -> int:
        return i - self.start

    def is_free(self, i: int) -> bool:
        return not self.consumed[self.local(i)]

    def consume(self, lo: int, hi: int) -> None:
        for i in range(lo, hi):
            self.consumed[self.local(i)] = True

    def free_annotation_at(self, i: int) -> Optional[Annotation]:
        for a in self.annotations:
            if a.start == i and all(self.is_free(j) for j in range(a.start, a.end)):
                return a
        return None


@dataclass
class _ValueItem:
    """One candidate value in a clause: a tag, a number, or a span."""

    position: int
    end: int
    annotation: Optional[Annotation] = None
    number: Optional[Fraction] = None
    span_text: Optional[str] = None


def _split_clauses(
    tokens: list[str], value_spans: dict[int, int] | None = None
) -> list[tuple[int, int]]:
    """Clause boundaries on conjunction cues, protecting "between X and Y".

    ``value_spans`` maps a value's start index to its end (tag annotations);
    bare numbers count as values implicitly.
    """
    value_spans = value_spans or {}

    def value_end(i: int) -> Optional[int]:
        if i in value_spans:
            return value_spans[i]
        if i < len(tokens) and textmod.is_number(tokens[i]):
            end = i + 1
            if end < len(tokens) and tokens[end] == CUR:
                end += 1
            return end
        return None

    protected = set()
    for i, tok in enumerate(tokens):
        if tok != "between":
            continue
        end = value_end(i + 1)
        if end is None:
            continue
        if end < len(tokens) and tokens[end] == "and" and value_end(end + 1):
            protected.add(end)

    clauses = []
    start = 0
    for i, tok in enumerate(tokens):
        if tok in (",", ";", "but", "and") and i not in protected:
            if i > start:
                clauses.append((start, i))
            start = i + 1
    if len(tokens) > start:
        clauses.append((start, len(tokens)))
    return clauses


# ---------------------------------------------------------------------------
# The parser


def parse_utterance(
    utterance: str,
    schema: Schema,
    lexicon: Lexicon,
    context: ParseContext,
    state: Optional["DialogState"] = None,
) -> ParseResult:
    """Parse one utterance into an intent sequence, in dialog context.

    ``state`` is optional extra evidence for ambiguous-tag resolution; the
    session layer passes the live dialog state through.

    Raises :class:`ClarificationNeeded` when the utterance is understood to
    be in-domain but an argument cannot be pinned down (ambiguous tag,
    unresolved numeral, competing categories).
    """
    tokens = normalize(utterance)
    if not tokens:
        return ParseResult(intents=(), unparsed=True)

    decision, trigger_spans = _detect_category_spans(tokens, schema, context)
    category_id = decision.category_id or context.active_category
    if category_id is None:
        raise ClarificationNeeded("no product category yet; say what you are shopping for")

    annotations = lookup_spans(schema, category_id, tokens)

    # A trigger word inside a vocabulary annotation ("bar soap", "shoe
    # size") is not a category mention; don't let it eat those tokens.
    trigger_spans = [
        (lo, hi)
        for lo, hi in trigger_spans
        if not any(a.start <= lo and hi <= a.end for a in annotations)
    ]

    act = _dialog_act(tokens, annotations, context, decision)
    if act is not None:
        return ParseResult(intents=(), category_decision=decision, dialog_act=act)

    category = schema.category(category_id)
    parser = _ClauseParser(schema, category, context, state, tokens)
    value_spans = {a.start: a.end for a in annotations if a.is_tag}
    for lo, hi in _split_clauses(tokens, value_spans):
        clause = _Clause(
            start=lo,
            end=hi,
            tokens=tokens[lo:hi],
            annotations=[a for a in annotations if a.start >= lo and a.end <= hi],
        )
        for s_lo, s_hi in trigger_spans:
            if s_lo >= lo and s_hi <= hi:
                clause.consume(s_lo, s_hi)
        parser.parse_clause(clause)

    intents = tuple(intent for _, intent in sorted(parser.intents, key=lambda p: p[0]))
    dialog_act = parser.dialog_act
    unparsed = (
        not intents
        and dialog_act == DialogAct.NONE
        and decision.kind == DecisionKind.KEEP
    )
    return ParseResult(
        intents=intents,
        category_decision=decision,
        dialog_act=dialog_act,
        unparsed=unparsed,
    )


def _dialog_act(tokens, annotations, context: ParseContext, decision) -> Optional[DialogAct]:
    """Recognize bare yes/no responses to a pending system prompt."""
    if context.pending_prompt is None or decision.kind != DecisionKind.KEEP:
        return None
    if annotations:
        return None
    if any(textmod.is_number(t) for t in tokens):
        return None
    head, rest = tokens[0], tokens[1:]
    if len(tokens) <= 4 and all(t in ACT_TRAILERS for t in rest):
        if head in DENY_LEADS:
            return DialogAct.DENY
        if head in AFFIRM_LEADS:
            return DialogAct.AFFIRM
        if head == "not" and rest and rest[0] in ("now", "really"):
            return DialogAct.DENY
    return None


class _ClauseParser:
    """Runs the ordered cue inventory over each clause."""

    def __init__(self, schema, category, context, state, tokens):
        self.schema = schema
        self.category = category
        self.context = context
        self.state = state
        self.tokens = tokens
        self.intents: list[tuple[int, Intent]] = []
        self.dialog_act = DialogAct.NONE
        self._comparatives: dict[str, list[tuple[str, str]]] = {}
        for facet in category.facets:
            for word, direction in facet.comparatives.items():
                self._comparatives.setdefault(word, []).append((facet.id, direction))

    # -- shared helpers ----------------------------------------------------

    def emit(self, position: int, intent: Intent) -> None:
        self.intents.append((position, intent))

    def facet(self, facet_id: str) -> Facet:
        return self.category.facet(facet_id)

    def _resolve_annotation_facet(self, annotation: Annotation) -> str:
        choice = resolve_ambiguous_tag(annotation, self._state_view())
        if choice is None:
            facets = ", ".join(sorted(c.facet_id for c in annotation.candidates))
            raise ClarificationNeeded(
                f"{annotation.text!r} could mean any of: {facets}"
            )
        return choice

    def _state_view(self):
        if self.state is not None:
            return self.state
        # Degraded view when no dialog state was provided.
        class _View:
            last_touched_facet = self.context.last_touched_facet
            facet_states: dict = {}

        return _View()

    def _tag_value(self, annotation: Annotation) -> TagValue:
        facet_id = self._resolve_annotation_facet(annotation)
        tag_id = next(
            c.tag_id for c in annotation.candidates if c.facet_id == facet_id
        )
        assert tag_id is not None
        return TagValue(facet_id=facet_id, tag_id=tag_id)

    def _currency_facet(self) -> Optional[Facet]:
        for facet in self.category.facets:
            if facet.unit and facet.unit.lower() in CURRENCY_UNITS:
                return facet
        return None

    def _resolve_number_facet(self, clause: _Clause, pos: int) -> Facet:
        """Facet for a bare numeral: currency marker, facet name, context."""
        after = pos + 1
        if after < clause.end and self.tokens[after] == CUR:
            facet = self._currency_facet()
            if facet is not None:
                return facet
        name_facet = self._nearest_facet_name(clause, pos)
        if name_facet is not None:
            return name_facet
        last = self.context.last_touched_facet
        if last is not None:
            facet = self.category.facet_or_none(last)
            if facet is not None and facet.supports_ranges:
                return facet
        raise ClarificationNeeded(
            f"which attribute does {self.tokens[pos]!r} refer to?"
        )

    def _nearest_facet_name(self, clause: _Clause, pos: int) -> Optional[Facet]:
        best = None
        best_distance = None
        for a in clause.annotations:
            if a.is_tag or a.ambiguous:
                continue
            distance = min(abs(a.start - pos), abs(a.end - 1 - pos))
            if best_distance is None or distance < best_distance:
                best, best_distance = a, distance
        if best is None:
            return None
        return self.facet(best.facet_id)

    # -- main entry ---------------------------------------------------------

    def parse_clause(self, clause: _Clause) -> None:
        if clause.end <= clause.start:
            return
        self._cue_reset(clause)
        self._cue_sort(clause)
        self._cue_clear_facet(clause)
        self._cue_clear_value(clause)
        self._cue_nudge(clause)
        self._cue_ranges(clause)
        self._cue_values(clause)

    # -- (a) reset ----------------------------------------------------------

    def _cue_reset(self, clause: _Clause) -> None:
        for pattern in RESET_PATTERNS:
            pos = self._find_pattern(clause, pattern)
            if pos is None:
                continue
            clause.consume(pos, pos + len(pattern))
            facet_ann = self._free_facet_name(clause)
            if facet_ann is not None:
                clause.consume(facet_ann.start, facet_ann.end)
                facet_id = self._facet_name_choice(facet_ann)
                self.emit(pos, Intent(Operator.CLEAR_FACET, facet_id=facet_id))
            else:
                self.emit(pos, Intent(Operator.CLEAR_ALL_FACETS))
                if self.dialog_act == DialogAct.NONE:
                    self.dialog_act = DialogAct.RESET
            return

    def _free_facet_name(self, clause: _Clause) -> Optional[Annotation]:
        for a in clause.annotations:
            if not a.is_tag and all(
                clause.is_free(i) for i in range(a.start, a.end)
            ):
                return a
        return None

    def _facet_name_choice(self, annotation: Annotation) -> str:
        if not annotation.ambiguous:
            return annotation.facet_id
        return self._resolve_annotation_facet(annotation)

    # -- (b) sort -----------------------------------------------------------

    def _cue_sort(self, clause: _Clause) -> None:
        pos = None
        for lead in (("sort", "by"), ("sorted", "by"), ("order", "by")):
            pos = self._find_pattern(clause, lead)
            if pos is not None:
                clause.consume(pos, pos + len(lead))
                facet_ann = self._free_facet_name(clause)
                if facet_ann is None:
                    raise ClarificationNeeded("sort by which attribute?")
                clause.consume(facet_ann.start, facet_ann.end)
                facet_id = self._facet_name_choice(facet_ann)
                direction = self._explicit_direction(clause) or SortDirection.ASCENDING
                self.emit(pos, Intent(Operator.ORDER_BY, facet_id=facet_id,
                                      sort_direction=direction))
                return

        for i in range(clause.start, clause.end):
            word = self.tokens[i]
            if not clause.is_free(i) or not word.endswith("est"):
                continue
            readings = self._comparatives.get(word)
            if not readings:
                continue
            facet_id, direction = self._pick_comparative(word, readings)
            clause.consume(i, i + 1)
            if i + 1 < clause.end and self.tokens[i + 1] == "first":
                clause.consume(i + 1, i + 2)
            sort_direction = (
                SortDirection.ASCENDING
                if direction == "NEGATIVE"
                else SortDirection.DESCENDING
            )
            explicit = self._explicit_direction(clause)
            self.emit(i, Intent(Operator.ORDER_BY, facet_id=facet_id,
                                sort_direction=explicit or sort_direction))
            return

    def _explicit_direction(self, clause: _Clause) -> Optional[SortDirection]:
        for i in range(clause.start, clause.end):
            if not clause.is_free(i):
                continue
            tok = self.tokens[i]
            if tok in _DESC_WORDS:
                clause.consume(i, i + 1)
                return SortDirection.DESCENDING
            if tok in _ASC_WORDS:
                clause.consume(i, i + 1)
                return SortDirection.ASCENDING
            if tok == "high" and self._matches_at(clause, i, ("high", "to", "low")):
                clause.consume(i, i + 3)
                return SortDirection.DESCENDING
            if tok == "low" and self._matches_at(clause, i, ("low", "to", "high")):
                clause.consume(i, i + 3)
                return SortDirection.ASCENDING
        return None

    def _pick_comparative(self, word, readings: list[tuple[str, str]]):
        if len(readings) == 1:
            return readings[0]
        last = self.context.last_touched_facet
        for facet_id, direction in readings:
            if facet_id == last:
                return facet_id, direction
        facets = ", ".join(sorted(f for f, _ in readings))
        raise ClarificationNeeded(f"{word!r} could apply to: {facets}")

    # -- (c) facet clear ----------------------------------------------------

    def _cue_clear_facet(self, clause: _Clause) -> None:
        for a in list(clause.annotations):
            if a.is_tag:
                continue
            if not all(clause.is_free(i) for i in range(a.start, a.end)):
                continue
            fired = (
                self._preceded_by(clause, a.start, "any", max_gap=1) is not None
                or self._followed_by_pattern(clause, a.end, ("does", "not", "matter")) is not None
                or self._followed_by_pattern(clause, a.end, ("do", "not", "matter")) is not None
                or self._preceded_by_pattern(
                    clause, a.start, ("not", "care", "about"), max_gap=2
                ) is not None
            )
            if not fired:
                continue
            clause.consume(a.start, a.end)
            facet_id = self._facet_name_choice(a)
            self.emit(a.start, Intent(Operator.CLEAR_FACET, facet_id=facet_id))
            return

    # -- (d) value clear ----------------------------------------------------

    _CLEAR_VALUE_LEADS = (
        ("not", "have", "to", "be"),
        ("not", "need", "to", "be"),
        ("not", "has", "to", "be"),
    )

    def _cue_clear_value(self, clause: _Clause) -> None:
        # "... doesn't have to be V"
        for pattern in self._CLEAR_VALUE_LEADS:
            pos = self._find_pattern(clause, pattern)
            if pos is None:
                continue
            clause.consume(pos, pos + len(pattern))
            item = self._next_value_item(clause, pos + len(pattern))
            if item is None:
                raise ClarificationNeeded("it doesn't have to be ... what?")
            self._consume_item(clause, item)
            self.emit(pos, self._clear_value_intent(item))
            return

        # "i don't care if it's V or not"
        pos = self._find_pattern(clause, ("not", "care", "if"))
        if pos is not None:
            clause.consume(pos, pos + 3)
            item = self._next_value_item(clause, pos + 3)
            if item is None:
                raise ClarificationNeeded("don't care if it's ... what?")
            tail = self._find_pattern(clause, ("or", "not"), start=item.end)
            if tail is not None:
                clause.consume(tail, tail + 2)
                if item.span_text is None and item.annotation is None:
                    pass
                if item.span_text is not None:
                    # Re-trim the span so "or not" isn't part of it.
                    item = self._respan(clause, item, tail)
            self._consume_item(clause, item)
            self.emit(pos, self._clear_value_intent(item))

    def _respan(self, clause: _Clause, item: _ValueItem, limit: int) -> _ValueItem:
        end = min(item.end, limit)
        text = " ".join(self.tokens[item.position : end])
        return _ValueItem(position=item.position, end=end, span_text=text)

    def _clear_value_intent(self, item: _ValueItem) -> Intent:
        if item.annotation is not None:
            value = self._tag_value(item.annotation)
            return Intent(Operator.CLEAR_VALUE, facet_id=value.facet_id, value=value)
        if item.span_text is not None:
            return Intent(Operator.CLEAR_VALUE, value=SpanValue(item.span_text))
        assert item.number is not None
        return Intent(Operator.CLEAR_VALUE, value=NumberValue(item.number))

    # -- (e) nudge ----------------------------------------------------------

    _NUDGE_VERBS = {
        "increase": "POSITIVE",
        "raise": "POSITIVE",
        "decrease": "NEGATIVE",
        "lower": "NEGATIVE",
    }

    def _cue_nudge(self, clause: _Clause) -> None:
        for i in range(clause.start, clause.end):
            if not clause.is_free(i):
                continue
            word = self.tokens[i]
            readings = self._comparatives.get(word)
            if readings and not word.endswith("est"):
                if self._followed_by_range_operand(clause, i):
                    continue  # "cheaper than $50" belongs to the range cue
                facet_id, direction = self._pick_comparative(word, readings)
                clause.consume(i, i + 1)
                self.emit(i, Intent(
                    Operator.NUDGE_FACET,
                    facet_id=facet_id,
                    nudge_direction=NudgeDirection(direction),
                ))
                return
            if word in self._NUDGE_VERBS:
                last = self.context.last_touched_facet
                if last is None or self.category.facet_or_none(last) is None:
                    raise ClarificationNeeded(f"{word} what?")
                clause.consume(i, i + 1)
                if i + 1 < clause.end and self.tokens[i + 1] in ("that", "it", "them"):
                    clause.consume(i + 1, i + 2)
                self.emit(i, Intent(
                    Operator.NUDGE_FACET,
                    facet_id=last,
                    nudge_direction=NudgeDirection(self._NUDGE_VERBS[word]),
                ))
                return

    def _followed_by_range_operand(self, clause: _Clause, i: int) -> bool:
        j = i + 1
        if j < clause.end and self.tokens[j] == "than":
            return self._value_item_at(clause, j + 1) is not None
        return False

    # -- (f) ranges ----------------------------------------------------------

    _RANGE_LEADS = (
        (("no", "more", "than"), PredicateType.LESS_EQ),
        (("no", "less", "than"), PredicateType.GREATER_EQ),
        (("less", "than"), PredicateType.LESS_THAN),
        (("fewer", "than"), PredicateType.LESS_THAN),
        (("at", "most"), PredicateType.LESS_EQ),
        (("up", "to"), PredicateType.LESS_EQ),
        (("more", "than"), PredicateType.GREATER_THAN),
        (("at", "least"), PredicateType.GREATER_EQ),
        (("under",), PredicateType.LESS_THAN),
        (("below",), PredicateType.LESS_THAN),
        (("over",), PredicateType.GREATER_THAN),
        (("above",), PredicateType.GREATER_THAN),
    )

    def _cue_ranges(self, clause: _Clause) -> None:
        self._cue_between(clause)
        self._cue_comparative_than(clause)
        changed = True
        while changed:
            changed = False
            for pattern, ptype in self._RANGE_LEADS:
                pos = self._find_pattern(clause, pattern)
                if pos is None:
                    continue
                item = self._value_item_at(clause, pos + len(pattern))
                if item is None:
                    continue
                clause.consume(pos, pos + len(pattern))
                self._emit_range(clause, pos, ptype, item)
                changed = True
        self._cue_postfix_ranges(clause)

    def _cue_between(self, clause: _Clause) -> None:
        pos = self._find_pattern(clause, ("between",))
        if pos is None:
            return
        lo_item = self._value_item_at(clause, pos + 1)
        if lo_item is None:
            return
        and_pos = lo_item.end
        if and_pos >= clause.end or self.tokens[and_pos] != "and":
            return
        hi_item = self._value_item_at(clause, and_pos + 1)
        if hi_item is None:
            return
        clause.consume(pos, pos + 1)
        clause.consume(and_pos, and_pos + 1)
        # Both bounds share one facet; a marker or annotation on either
        # side resolves the pair ("between 30 and 60 dollars").
        hint = self._between_facet_hint(clause, lo_item, hi_item)
        self._emit_range(clause, pos, PredicateType.GREATER_EQ, lo_item,
                         facet_hint=hint)
        self._emit_range(clause, pos + 1, PredicateType.LESS_EQ, hi_item,
                         facet_hint=hint)

    def _between_facet_hint(self, clause, lo_item, hi_item) -> Optional[str]:
        for item in (lo_item, hi_item):
            if item.annotation is not None:
                return self._resolve_annotation_facet(item.annotation)
        for item in (lo_item, hi_item):
            has_marker = (
                item.end - 1 > item.position
                and self.tokens[item.end - 1] == CUR
            ) or (item.end < clause.end and self.tokens[item.end] == CUR)
            if has_marker:
                facet = self._currency_facet()
                if facet is not None:
                    return facet.id
        return None

    def _cue_comparative_than(self, clause: _Clause) -> None:
        for i in range(clause.start, clause.end):
            if not clause.is_free(i):
                continue
            readings = self._comparatives.get(self.tokens[i])
            if not readings or self.tokens[i].endswith("est"):
                continue
            if i + 1 >= clause.end or self.tokens[i + 1] != "than":
                continue
            item = self._value_item_at(clause, i + 2)
            if item is None:
                continue
            facet_id, direction = self._pick_comparative(self.tokens[i], readings)
            ptype = (
                PredicateType.LESS_THAN
                if direction == "NEGATIVE"
                else PredicateType.GREATER_THAN
            )
            clause.consume(i, i + 2)
            self._emit_range(clause, i, ptype, item, facet_hint=facet_id)
            return

    _POSTFIX_LE = frozenset({"less", "under", "below", "fewer"})
    _POSTFIX_GE = frozenset({"more", "over", "above"})

    def _cue_postfix_ranges(self, clause: _Clause) -> None:
        for i in range(clause.start, clause.end):
            item = self._value_item_at(clause, i)
            if item is None:
                continue
            j = item.end
            if j + 1 >= clause.end + 1 or j >= clause.end or self.tokens[j] != "or":
                continue
            if j + 1 >= clause.end:
                continue
            word = self.tokens[j + 1]
            ptype = None
            if word in self._POSTFIX_LE:
                ptype = PredicateType.LESS_EQ
            elif word in self._POSTFIX_GE:
                ptype = PredicateType.GREATER_EQ
            else:
                readings = self._comparatives.get(word)
                if readings and not word.endswith("est"):
                    _, direction = self._pick_comparative(word, readings)
                    ptype = (
                        PredicateType.LESS_EQ
                        if direction == "NEGATIVE"
                        else PredicateType.GREATER_EQ
                    )
            if ptype is None:
                continue
            clause.consume(j, j + 2)
            self._emit_range(clause, i, ptype, item)
            return

    def _emit_range(self, clause, position, ptype, item: _ValueItem, facet_hint=None):
        self._consume_item(clause, item)
        if item.annotation is not None:
            value = self._tag_value(item.annotation)
            facet = self.facet(value.facet_id)
            if not facet.supports_ranges:
                raise ClarificationNeeded(
                    f"{facet.display_name} values cannot form a range"
                )
            self.emit(position, Intent(
                Operator.SET_VALUE, facet_id=value.facet_id, value=value,
                predicate_type=ptype,
            ))
            return
        assert item.number is not None
        if facet_hint is not None:
            facet = self.facet(facet_hint)
        else:
            facet = self._resolve_number_facet(clause, item.position)
        if not facet.supports_ranges:
            raise ClarificationNeeded(
                f"{facet.display_name} values cannot form a range"
            )
        self.emit(position, Intent(
            Operator.SET_VALUE, facet_id=facet.id,
            value=NumberValue(item.number), predicate_type=ptype,
        ))

    # -- (g)+(h) polarity sweep over leftover values -------------------------

    def _cue_values(self, clause: _Clause) -> None:
        items = self._collect_value_items(clause)
        if not items:
            return
        inclusivity = self._detect_inclusivity(clause, items)
        negation_positions = [
            i
            for i in range(clause.start, clause.end)
            if clause.is_free(i) and self.tokens[i] in NEGATION_TRIGGERS
        ]
        for item in items:
            negated = any(p < item.position for p in negation_positions)
            ptype = PredicateType.NOT_EQUALS if negated else PredicateType.EQUALS
            incl = inclusivity if ptype == PredicateType.EQUALS else Inclusivity.UNDEFINED
            self._consume_item(clause, item)
            if item.annotation is not None:
                value: Value = self._tag_value(item.annotation)
                facet_id = value.facet_id
            elif item.number is not None:
                facet = self._resolve_number_facet(clause, item.position)
                tag = self._tag_for_number(facet, item.number)
                if tag is not None:
                    value = TagValue(facet_id=facet.id, tag_id=tag)
                else:
                    value = NumberValue(item.number)
                facet_id = facet.id
            else:
                assert item.span_text is not None
                value = SpanValue(item.span_text)
                facet_id = None
            self.emit(item.position, Intent(
                Operator.SET_VALUE, facet_id=facet_id, value=value,
                predicate_type=ptype, inclusivity=incl,
            ))

    def _tag_for_number(self, facet: Facet, number: Fraction) -> Optional[str]:
        for tag in facet.tags:
            if tag.value == number:
                return tag.id
        return None

    def _collect_value_items(self, clause: _Clause) -> list[_ValueItem]:
        items: list[_ValueItem] = []
        for a in clause.annotations:
            if a.is_tag and all(clause.is_free(i) for i in range(a.start, a.end)):
                items.append(_ValueItem(position=a.start, end=a.end, annotation=a))
        for i in range(clause.start, clause.end):
            tok = self.tokens[i]
            if clause.is_free(i) and textmod.is_number(tok) and not self._covered(items, i):
                items.append(_ValueItem(position=i, end=i + 1,
                                        number=textmod.to_number(tok)))
        span = self._residual_span(clause, items)
        if span is not None:
            items.append(span)
        items.sort(key=lambda it: it.position)
        return items

    @staticmethod
    def _covered(items: list[_ValueItem], i: int) -> bool:
        return any(it.position <= i < it.end for it in items)

    def _residual_span(self, clause: _Clause, items) -> Optional[_ValueItem]:
        """Longest contiguous run of leftover content tokens, stops bridged."""
        content = []
        for i in range(clause.start, clause.end):
            tok = self.tokens[i]
            if not clause.is_free(i) or self._covered(items, i):
                continue
            if tok in STOP_WORDS or tok in NEGATION_TRIGGERS:
                continue
            if tok in (",", ";") or textmod.is_number(tok):
                continue
            if any(a.start <= i < a.end for a in clause.annotations):
                continue
            content.append(i)
        if not content:
            return None
        hard = set()
        for a in clause.annotations:
            hard.update(range(a.start, a.end))
        for it in items:
            hard.update(range(it.position, it.end))
        for i in range(clause.start, clause.end):
            if not clause.is_free(i):
                hard.add(i)

        runs: list[list[int]] = [[content[0]]]
        for prev, cur in zip(content, content[1:]):
            if any(k in hard for k in range(prev + 1, cur)):
                runs.append([cur])
            else:
                runs[-1].append(cur)
        best = max(runs, key=len)
        lo, hi = best[0], best[-1] + 1
        return _ValueItem(position=lo, end=hi,
                          span_text=" ".join(self.tokens[lo:hi]))

    def _detect_inclusivity(self, clause: _Clause, items) -> Inclusivity:
        starts = {it.position for it in items}
        for i in range(clause.start, clause.end):
            tok = self.tokens[i]
            if tok == "only":
                return Inclusivity.EXCLUSIVE
            if tok == "just":
                j = i + 1
                while j < clause.end and self.tokens[j] in STOP_WORDS and j not in starts:
                    j += 1
                if j in starts:
                    return Inclusivity.EXCLUSIVE
            if tok in ("also", "too"):
                return Inclusivity.INCLUSIVE
            if tok == "as" and self._matches_at(clause, i, ("as", "well")):
                return Inclusivity.INCLUSIVE
        return Inclusivity.UNDEFINED

    # -- token scanning helpers ----------------------------------------------

    def _find_pattern(self, clause: _Clause, pattern, start=None) -> Optional[int]:
        lo = clause.start if start is None else start
        for i in range(lo, clause.end - len(pattern) + 1):
            if all(
                clause.is_free(i + k) and self.tokens[i + k] == pattern[k]
                for k in range(len(pattern))
            ):
                return i
        return None

    def _matches_at(self, clause: _Clause, i: int, pattern) -> bool:
        if i + len(pattern) > clause.end:
            return False
        return all(
            clause.is_free(i + k) and self.tokens[i + k] == pattern[k]
            for k in range(len(pattern))
        )

    def _preceded_by(self, clause: _Clause, pos: int, word: str, max_gap=0) -> Optional[int]:
        i = pos - 1
        gap = 0
        while i >= clause.start and gap <= max_gap:
            if not clause.is_free(i):
                return None
            if self.tokens[i] == word:
                clause.consume(i, i + 1)
                return i
            if self.tokens[i] not in STOP_WORDS:
                return None
            i -= 1
            gap += 1
        return None

    def _preceded_by_pattern(self, clause, pos, pattern, max_gap=0) -> Optional[int]:
        for end in range(pos, max(clause.start, pos - max_gap - 1) - 1, -1):
            i = end - len(pattern)
            if i < clause.start:
                continue
            if all(
                clause.is_free(i + k) and self.tokens[i + k] == pattern[k]
                for k in range(len(pattern))
            ):
                gap_ok = all(
                    self.tokens[j] in STOP_WORDS and clause.is_free(j)
                    for j in range(end, pos)
                )
                if gap_ok:
                    clause.consume(i, i + len(pattern))
                    return i
        return None

    def _followed_by_pattern(self, clause, pos, pattern) -> Optional[int]:
        i = pos
        while i < clause.end and self.tokens[i] in STOP_WORDS and clause.is_free(i):
            if self._matches_at(clause, i, pattern):
                break
            i += 1
        if self._matches_at(clause, i, pattern):
            clause.consume(i, i + len(pattern))
            return i
        return None

    def _value_item_at(self, clause: _Clause, pos: int) -> Optional[_ValueItem]:
        """A number or tag annotation starting at/just after ``pos``."""
        i = pos
        while i < clause.end:
            if not clause.is_free(i):
                return None
            ann = clause.free_annotation_at(i)
            if ann is not None and ann.is_tag:
                return _ValueItem(position=ann.start, end=ann.end, annotation=ann)
            tok = self.tokens[i]
            if textmod.is_number(tok):
                end = i + 1
                if end < clause.end and self.tokens[end] == CUR:
                    end += 1
                return _ValueItem(position=i, end=end,
                                  number=textmod.to_number(tok))
            if tok in ("a", "the", "an", CUR):
                i += 1
                continue
            return None
        return None

    def _next_value_item(self, clause: _Clause, pos: int) -> Optional[_ValueItem]:
        """A value item (tag/number/residual span) after ``pos``."""
        direct = self._value_item_at(clause, pos)
        if direct is not None:
            return direct
        for a in clause.annotations:
            if a.is_tag and a.start >= pos and all(
                clause.is_free(i) for i in range(a.start, a.end)
            ):
                return _ValueItem(position=a.start, end=a.end, annotation=a)
        # Fall back to a residual span starting after pos.
        lo = None
        hi = None
        for i in range(pos, clause.end):
            tok = self.tokens[i]
            if not clause.is_free(i):
                break
            if tok in STOP_WORDS or tok in NEGATION_TRIGGERS or tok in (",", ";"):
                if lo is not None and tok in NEGATION_TRIGGERS:
                    break
                continue
            if textmod.is_number(tok):
                break
            if lo is None:
                lo = i
            hi = i + 1
        if lo is None:
            return None
        return _ValueItem(position=lo, end=hi,
                          span_text=" ".join(self.tokens[lo:hi]))

    def _consume_item(self, clause: _Clause, item: _ValueItem) -> None:
        clause.consume(item.position, item.end)
        if item.number is not None and item.end < clause.end:
            if self.tokens[item.end] == CUR and clause.is_free(item.end):
                clause.consume(item.end, item.end + 1)
