"""Session orchestration: parse -> update -> fulfill -> respond, per turn.

Sessions are independent and may be driven concurrently; turns within one
session are serialized behind a per-session lock. Every turn writes a
canonical-JSON state snapshot through a pluggable store, so recorded
dialogs replay to byte-identical state at every step.
"""

from __future__ import annotations

import random
import threading
import uuid
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Optional, Protocol

from .clu import (
    ClarificationNeeded,
    DecisionKind,
    DialogAct,
    Intent,
    Operator,
    ParseContext,
    ParseResult,
    parse_utterance,
)
from .dst import (
    DEFAULT_CONFIG,
    DialogState,
    DstConfig,
    DstError,
    apply_intents,
    canonical_state_json,
    render_state,
    state_to_json,
)
from .fulfillment import Index, Product, compile_request, facet_stats, search
from .relatedness import Lexicon, Oracle
from .schema import Schema

MAX_UTTERANCE_TOKENS = 512


class UnknownSession(KeyError):
    pass


class UtteranceTooLong(ValueError):
    pass


class TurnEvent(str, Enum):
    CATEGORY_SWITCH = "CATEGORY_SWITCH"
    AT_LIMIT = "AT_LIMIT"
    CLARIFICATION_NEEDED = "CLARIFICATION_NEEDED"
    ZERO_RESULTS = "ZERO_RESULTS"


@dataclass
class TurnResponse:
    intents: tuple[Intent, ...]
    state_summary: str
    products: list[Product]
    prompt: Optional[str]
    events: list[TurnEvent]
    dialog_act: DialogAct = DialogAct.NONE

    def to_json(self) -> dict:
        return {
            "intents": [i.to_json() for i in self.intents],
            "state_summary": self.state_summary,
            "products": [_product_json(p) for p in self.products],
            "prompt": self.prompt,
            "events": [e.value for e in self.events],
            "dialog_act": self.dialog_act.value,
        }


def _product_json(p: Product) -> dict:
    return {
        "id": p.id,
        "title": p.title,
        "description": p.description,
        "values": {k: float(v) for k, v in p.numeric_values.items()},
    }


class SnapshotStore(Protocol):
    def put(self, session_id: str, turn: int, doc: str) -> str: ...

    def get(self, session_id: str, turn: int) -> Optional[str]: ...

    def drop(self, session_id: str) -> None: ...


class MemorySnapshotStore:
    """Default in-process store."""

    def __init__(self):
        self._docs: dict[tuple[str, int], str] = {}
        self._lock = threading.Lock()

    def put(self, session_id: str, turn: int, doc: str) -> str:
        with self._lock:
            self._docs[(session_id, turn)] = doc
        return f"{session_id}:{turn}"

    def get(self, session_id: str, turn: int) -> Optional[str]:
        with self._lock:
            return self._docs.get((session_id, turn))

    def drop(self, session_id: str) -> None:
        with self._lock:
            for key in [k for k in self._docs if k[0] == session_id]:
                del self._docs[key]


class FileSnapshotStore:
    """File-backed store: one JSON document per (session, turn)."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, session_id: str, turn: int) -> Path:
        return self.root / session_id / f"{turn:06d}.json"

    def put(self, session_id: str, turn: int, doc: str) -> str:
        path = self._path(session_id, turn)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(doc, encoding="utf-8")
        return str(path)

    def get(self, session_id: str, turn: int) -> Optional[str]:
        path = self._path(session_id, turn)
        if not path.exists():
            return None
        return path.read_text(encoding="utf-8")

    def drop(self, session_id: str) -> None:
        directory = self.root / session_id
        if directory.exists():
            for child in directory.iterdir():
                child.unlink()
            directory.rmdir()


@dataclass
class TurnRecord:
    utterance: str
    result: Optional[ParseResult]
    snapshot_id: Optional[str]


@dataclass
class Session:
    session_id: str
    state: DialogState = field(default_factory=DialogState)
    context: ParseContext = field(default_factory=ParseContext)
    last_results: list[Product] = field(default_factory=list)
    history: list[TurnRecord] = field(default_factory=list)
    prompting: bool = True
    lock: threading.Lock = field(default_factory=threading.Lock)


PROMPT_CATEGORY = "got it! what kind of {phrase} did you have in mind?"
PROMPT_REFINE = "anything else?"


class SessionManager:
    """Owns sessions and runs the turn loop against shared immutable data."""

    def __init__(
        self,
        schema: Schema,
        lexicon: Lexicon,
        index: Index,
        page_size: int = 10,
        prompts: bool = True,
        seed: Optional[int] = None,
        store: Optional[SnapshotStore] = None,
        config: DstConfig = DEFAULT_CONFIG,
    ):
        self.schema = schema
        self.lexicon = lexicon
        self.oracle = Oracle(lexicon, schema)
        self.index = index
        self.page_size = page_size
        self.prompts_enabled = prompts
        self.store: SnapshotStore = store if store is not None else MemorySnapshotStore()
        self.config = config
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        self._rng = random.Random(seed) if seed is not None else None

    # -- lifecycle -----------------------------------------------------------

    def create_session(self) -> str:
        if self._rng is not None:
            with self._lock:
                session_id = str(uuid.UUID(int=self._rng.getrandbits(128), version=4))
        else:
            session_id = str(uuid.uuid4())
        session = Session(session_id=session_id)
        with self._lock:
            self._sessions[session_id] = session
        return session_id

    def delete_session(self, session_id: str) -> None:
        with self._lock:
            if session_id not in self._sessions:
                raise UnknownSession(session_id)
            del self._sessions[session_id]
        self.store.drop(session_id)

    def _session(self, session_id: str) -> Session:
        with self._lock:
            try:
                return self._sessions[session_id]
            except KeyError:
                raise UnknownSession(session_id) from None

    def session_count(self) -> int:
        with self._lock:
            return len(self._sessions)

    # -- queries --------------------------------------------------------------

    def get_state(self, session_id: str) -> tuple[dict, str]:
        session = self._session(session_id)
        with session.lock:
            return state_to_json(session.state), render_state(session.state, self.schema)

    # -- the turn loop ----------------------------------------------------------

    def handle_utterance(self, session_id: str, text: str) -> TurnResponse:
        session = self._session(session_id)
        from .clu import normalize

        if len(normalize(text)) > MAX_UTTERANCE_TOKENS:
            raise UtteranceTooLong(
                f"utterance exceeds {MAX_UTTERANCE_TOKENS} tokens"
            )
        with session.lock:
            return self._run_turn(session, text)

    def _run_turn(self, session: Session, text: str) -> TurnResponse:
        events: list[TurnEvent] = []
        try:
            result = parse_utterance(
                text, self.schema, self.lexicon, session.context, session.state
            )
        except ClarificationNeeded as need:
            session.history.append(TurnRecord(text, None, None))
            return self._respond(
                session,
                intents=(),
                events=[TurnEvent.CLARIFICATION_NEEDED],
                prompt_override=need.message,
                refresh_results=False,
            )

        if result.dialog_act in (DialogAct.DENY, DialogAct.AFFIRM):
            session.history.append(TurnRecord(text, result, None))
            if result.dialog_act == DialogAct.DENY:
                session.prompting = False
                session.context = replace(session.context, pending_prompt=None)
                return TurnResponse(
                    intents=(),
                    state_summary=render_state(session.state, self.schema),
                    products=list(session.last_results),
                    prompt=None,
                    events=[],
                    dialog_act=result.dialog_act,
                )
            return self._respond(
                session, intents=(), events=[], refresh_results=False,
                dialog_act=result.dialog_act,
            )

        if result.unparsed:
            session.history.append(TurnRecord(text, result, None))
            return self._respond(
                session,
                intents=(),
                events=[TurnEvent.CLARIFICATION_NEEDED],
                prompt_override="sorry, i didn't catch that; try naming a tag or attribute",
                refresh_results=False,
            )

        state = session.state
        category_prompt = False
        if result.category_decision.kind == DecisionKind.INITIAL:
            state = replace(state, category_id=result.category_decision.category_id)
            category_prompt = True
        elif result.category_decision.kind == DecisionKind.SWITCH:
            state = DialogState(
                category_id=result.category_decision.category_id,
                turn_counter=state.turn_counter,
            )
            events.append(TurnEvent.CATEGORY_SWITCH)
            category_prompt = True

        stats = self._nudge_stats(session, result.intents, state.category_id)
        try:
            update = apply_intents(
                state,
                list(result.intents),
                self.oracle,
                result_stats=stats,
                schema=self.schema,
                config=self.config,
            )
        except DstError as err:
            session.history.append(TurnRecord(text, result, None))
            return self._respond(
                session,
                intents=result.intents,
                events=[TurnEvent.CLARIFICATION_NEEDED],
                prompt_override=err.message,
                refresh_results=False,
            )

        session.state = update.state
        session.context = ParseContext(
            active_category=update.state.category_id,
            last_touched_facet=update.state.last_touched_facet,
            pending_prompt=session.context.pending_prompt,
        )
        for facet_id in update.at_limit:
            events.append(TurnEvent.AT_LIMIT)

        snapshot_id = self.store.put(
            session.session_id,
            update.state.turn_counter,
            canonical_state_json(update.state),
        )
        session.history.append(TurnRecord(text, result, snapshot_id))

        return self._respond(
            session,
            intents=result.intents,
            events=events,
            refresh_results=True,
            category_prompt=category_prompt,
            dialog_act=result.dialog_act,
        )

    def _nudge_stats(self, session: Session, intents, category_id):
        stats = {}
        for intent in intents:
            if intent.operator == Operator.NUDGE_FACET and intent.facet_id:
                s = facet_stats(session.last_results, intent.facet_id, self.schema)
                if s is not None:
                    stats[intent.facet_id] = s
        return stats

    def _respond(
        self,
        session: Session,
        intents: tuple[Intent, ...],
        events: list[TurnEvent],
        refresh_results: bool = True,
        prompt_override: Optional[str] = None,
        category_prompt: bool = False,
        dialog_act: DialogAct = DialogAct.NONE,
    ) -> TurnResponse:
        if refresh_results:
            request = compile_request(session.state, self.schema)
            products = search(self.index, request, self.page_size)
            session.last_results = products
            if not products:
                events = events + [TurnEvent.ZERO_RESULTS]
        else:
            products = list(session.last_results)

        prompt: Optional[str]
        if prompt_override is not None:
            prompt = prompt_override
        elif not (self.prompts_enabled and session.prompting):
            prompt = None
        elif category_prompt and session.state.category_id is not None:
            phrase = self.schema.category(session.state.category_id).canonical_phrase
            prompt = PROMPT_CATEGORY.format(phrase=phrase)
        else:
            prompt = PROMPT_REFINE
        session.context = replace(
            session.context,
            pending_prompt="refine" if prompt is not None else None,
        )
        return TurnResponse(
            intents=tuple(intents),
            state_summary=render_state(session.state, self.schema),
            products=products,
            prompt=prompt,
            events=events,
            dialog_act=dialog_act,
        )


def load_manager(
    schema_path: str | Path,
    lexicon_path: str | Path,
    catalog_path: str | Path,
    **kwargs,
) -> SessionManager:
    """Wire a manager from the three data files."""
    from .fulfillment import build_index
    from .relatedness import load_lexicon
    from .schema import load_schema

    schema = load_schema(Path(schema_path).read_bytes())
    lexicon = load_lexicon(Path(lexicon_path).read_bytes())
    index = build_index(Path(catalog_path).read_bytes(), schema)
    return SessionManager(schema, lexicon, index, **kwargs)
