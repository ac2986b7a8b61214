// Browser shell: wires the fetch client and the string renderers to the
// page. One turn in flight per session; the input is disabled while a
// request is out, which is how the backend's per-session serialization
// is respected client-side.

import { SessionApi } from "./api.js";
import {
  ViewState,
  appendUser,
  applyTurn,
  initialViewState,
  renderChips,
  renderProducts,
  renderTranscript,
  shouldSend,
} from "./view.js";

const api = new SessionApi("");

let view: ViewState;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function mount(): void {
  el<HTMLDivElement>("transcript").innerHTML = renderTranscript(view);
  el<HTMLDivElement>("chips").innerHTML = renderChips(view);
  el<HTMLDivElement>("products").innerHTML = renderProducts(view);
  const input = el<HTMLInputElement>("say");
  input.disabled = view.busy;
  el<HTMLButtonElement>("send").disabled = view.busy;
  if (!view.busy) input.focus();
  const transcript = el<HTMLDivElement>("transcript");
  transcript.scrollTop = transcript.scrollHeight;
}

async function runTurn(text: string): Promise<void> {
  if (!shouldSend(view, text)) return;
  view = { ...appendUser(view, text), busy: true };
  mount();
  try {
    const turn = await api.sendUtterance(view.sessionId, text);
    // Reconcile against the server's state document, never local edits.
    const { state } = await api.getState(view.sessionId);
    view = applyTurn(view, turn, state);
  } catch (err) {
    view = {
      ...view,
      busy: false,
      transcript: [
        ...view.transcript,
        { speaker: "bot", text: `error: ${String(err)}` },
      ],
    };
  }
  mount();
}

async function boot(): Promise<void> {
  const sessionId = await api.createSession();
  view = initialViewState(sessionId);
  mount();

  el<HTMLFormElement>("say-form").addEventListener("submit", (event) => {
    event.preventDefault();
    const input = el<HTMLInputElement>("say");
    const text = input.value;
    input.value = "";
    void runTurn(text);
  });

  el<HTMLDivElement>("chips").addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const index = target.dataset.chip;
    if (index === undefined) return;
    const chip = view.chips[Number(index)];
    if (chip && chip.removal) {
      void runTurn(chip.removal);
    }
  });
}

void boot();
