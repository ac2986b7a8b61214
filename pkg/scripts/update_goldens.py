#!/usr/bin/env python3
"""Regenerate tests/golden/fig1_states.json.

Replays the eleven-turn dialog through a fresh session and freezes the
canonical per-turn state serializations, summaries, events and result ids.
Inspect the diff carefully before committing: these are the reference
values the acceptance suite locks.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from conftest import FIG1_UTTERANCES  # noqa: E402

from facetalk.dst import canonical_state_json  # noqa: E402
from facetalk.session import SessionManager  # noqa: E402
from facetalk.fulfillment import build_index  # noqa: E402
from facetalk.relatedness import load_lexicon  # noqa: E402
from facetalk.schema import load_schema  # noqa: E402


def main() -> None:
    fixtures = ROOT / "fixtures"
    schema = load_schema((fixtures / "schema.json").read_bytes())
    lexicon = load_lexicon((fixtures / "lexicon.json").read_bytes())
    index = build_index((fixtures / "catalog.json").read_bytes(), schema)
    manager = SessionManager(schema, lexicon, index, page_size=10, seed=99)
    sid = manager.create_session()

    turns = []
    for utterance in FIG1_UTTERANCES:
        response = manager.handle_utterance(sid, utterance)
        state = manager._session(sid).state
        turns.append(
            {
                "utterance": utterance,
                "state": json.loads(canonical_state_json(state)),
                "summary": response.state_summary,
                "events": [e.value for e in response.events],
                "product_ids": [p.id for p in response.products],
            }
        )

    out = ROOT / "tests" / "golden" / "fig1_states.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(turns, indent=1, sort_keys=True) + "\n",
                   encoding="utf-8")
    print(f"wrote {out} ({len(turns)} turns)")


if __name__ == "__main__":
    main()
