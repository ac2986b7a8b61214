"""Conversational faceted search: parse, track, fulfill."""

from .schema import Schema, load_schema, lookup_spans, serialize_schema
from .relatedness import Lexicon, Oracle, load_lexicon
from .clu import Intent, ParseContext, ParseResult, parse_utterance
from .dst import DialogState, apply_intents, merge_range, render_state
from .fulfillment import build_index, compile_request, facet_stats, search
from .session import SessionManager

__version__ = "0.1.0"

__all__ = [
    "Schema",
    "load_schema",
    "lookup_spans",
    "serialize_schema",
    "Lexicon",
    "Oracle",
    "load_lexicon",
    "Intent",
    "ParseContext",
    "ParseResult",
    "parse_utterance",
    "DialogState",
    "apply_intents",
    "merge_range",
    "render_state",
    "build_index",
    "compile_request",
    "facet_stats",
    "search",
    "SessionManager",
    "__version__",
]
