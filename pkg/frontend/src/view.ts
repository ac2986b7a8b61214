// View state and HTML rendering. Rendering produces plain strings so the
// whole view layer is assertable in node; the browser shell just mounts
// the strings via innerHTML.

import type { ProductDoc, StateDoc } from "./api.js";
import { Chip, deriveChips } from "./chips.js";

export interface TranscriptEntry {
  speaker: "you" | "bot";
  text: string;
}

export interface ViewState {
  sessionId: string;
  transcript: TranscriptEntry[];
  chips: Chip[];
  products: ProductDoc[];
  prompt: string | null;
  summary: string;
  events: string[];
  busy: boolean;
}

export function initialViewState(sessionId: string): ViewState {
  return {
    sessionId,
    transcript: [],
    chips: [],
    products: [],
    prompt: null,
    summary: "no preferences yet",
    events: [],
    busy: false,
  };
}

export function appendUser(view: ViewState, text: string): ViewState {
  return { ...view, transcript: [...view.transcript, { speaker: "you", text }] };
}

/** Empty input sends nothing; one turn in flight per session. */
export function shouldSend(view: ViewState, text: string): boolean {
  return !view.busy && text.trim().length > 0;
}

/** Fold one completed turn into the view. Chips always come from the
 *  freshly fetched state document, never from local bookkeeping. */
export function applyTurn(
  view: ViewState,
  turn: {
    state_summary: string;
    products: ProductDoc[];
    prompt: string | null;
    events: string[];
  },
  state: StateDoc,
): ViewState {
  const transcript = [...view.transcript];
  transcript.push({ speaker: "bot", text: turn.state_summary });
  if (turn.events.includes("ZERO_RESULTS")) {
    transcript.push({ speaker: "bot", text: "no matching products" });
  }
  if (turn.prompt) {
    transcript.push({ speaker: "bot", text: turn.prompt });
  }
  return {
    ...view,
    transcript,
    chips: deriveChips(state),
    products: turn.products,
    prompt: turn.prompt,
    summary: turn.state_summary,
    events: turn.events,
    busy: false,
  };
}

// ---------------------------------------------------------------------------
// HTML

const AMP = /&/g;
const LT = /</g;
const GT = />/g;
const QUOT = /"/g;

export function escapeHtml(text: string): string {
  return text
    .replace(AMP, "&amp;")
    .replace(LT, "&lt;")
    .replace(GT, "&gt;")
    .replace(QUOT, "&quot;");
}

export function renderTranscript(view: ViewState): string {
  return view.transcript
    .map(
      (entry) =>
        `<div class="msg msg-${entry.speaker}">` +
        `<span class="who">${entry.speaker}</span>` +
        `<span class="text">${escapeHtml(entry.text)}</span></div>`,
    )
    .join("");
}

export function renderChips(view: ViewState): string {
  if (view.chips.length === 0) {
    return '<span class="chips-empty">no preferences yet</span>';
  }
  return view.chips
    .map((chip, i) => {
      const cls = chip.polarity === "-" ? "chip chip-neg" : "chip";
      const remove =
        chip.removal === null
          ? ""
          : `<button class="chip-x" data-chip="${i}" aria-label="remove">×</button>`;
      return `<span class="${cls}">${escapeHtml(chip.label)}${remove}</span>`;
    })
    .join("");
}

export function renderProducts(view: ViewState): string {
  if (view.products.length === 0) {
    return '<div class="banner">no matching products</div>';
  }
  return view.products
    .map((product) => {
      const price =
        product.values.price !== undefined
          ? `<span class="price">$${product.values.price.toFixed(2)}</span>`
          : "";
      return (
        `<div class="card"><h3>${escapeHtml(product.title)}</h3>` +
        `<p>${escapeHtml(product.description)}</p>${price}</div>`
      );
    })
    .join("");
}
