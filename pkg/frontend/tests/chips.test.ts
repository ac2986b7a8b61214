import { describe, expect, it } from "vitest";

import type { StateDoc } from "../src/api.js";
import { deriveChips } from "../src/chips.js";
import {
  appendUser,
  applyTurn,
  initialViewState,
  renderChips,
  renderProducts,
  renderTranscript,
  shouldSend,
} from "../src/view.js";

const STATE: StateDoc = {
  category: "shoes",
  facets: {
    brand: {
      positive: [{ value: { tag: { facet: "brand", id: "nike" } }, turn: 1 }],
      negative: [],
      range: null,
    },
    color: {
      positive: [],
      negative: [{ value: { tag: { facet: "color", id: "white" } }, turn: 2 }],
      range: null,
    },
    price: {
      positive: [],
      negative: [],
      range: { lower: null, upper: { value: 80, inclusive: false } },
    },
  },
  ungrounded: [{ value: { span: "good for running" }, type: "EQUALS", turn: 3 }],
  sort: { facet: "price", direction: "ASCENDING" },
  last_touched_facet: "price",
  turn_counter: 3,
};

describe("deriveChips", () => {
  it("projects the state document into labeled chips", () => {
    const chips = deriveChips(STATE);
    expect(chips.map((c) => c.label)).toEqual([
      "brand: nike",
      "color: not white",
      "price: under 80",
      "'good for running'",
      "sorted by price (low to high)",
    ]);
  });

  it("uses the documented removal utterances", () => {
    const chips = deriveChips(STATE);
    expect(chips[0]!.removal).toBe("i don't care if it's nike or not");
    expect(chips[2]!.removal).toBe("any price");
    expect(chips[3]!.removal).toBe("i don't care if it's good for running or not");
    expect(chips[4]!.removal).toBeNull();
  });

  it("is empty for an empty state", () => {
    const empty: StateDoc = {
      category: null,
      facets: {},
      ungrounded: [],
      sort: null,
      last_touched_facet: null,
      turn_counter: 0,
    };
    expect(deriveChips(empty)).toEqual([]);
  });
});

describe("view state", () => {
  it("transcript is append-only across turns", () => {
    let view = initialViewState("s1");
    view = appendUser(view, "show me red nike shoes");
    const before = [...view.transcript];
    view = applyTurn(
      view,
      {
        state_summary: "shoes · brand: nike · color: red",
        products: [],
        prompt: "anything else?",
        events: ["ZERO_RESULTS"],
      },
      STATE,
    );
    expect(view.transcript.slice(0, before.length)).toEqual(before);
    expect(view.transcript.map((t) => t.text)).toContain("no matching products");
  });

  it("blocks empty input and in-flight turns", () => {
    const view = initialViewState("s1");
    expect(shouldSend(view, "   ")).toBe(false);
    expect(shouldSend(view, "red")).toBe(true);
    expect(shouldSend({ ...view, busy: true }, "red")).toBe(false);
  });

  it("renders chips, products and transcript as HTML", () => {
    let view = initialViewState("s1");
    view = appendUser(view, 'show me "red" shoes');
    view = applyTurn(
      view,
      {
        state_summary: "shoes · color: red",
        products: [
          {
            id: "p01",
            title: "nike storm runner",
            description: "good for running <fast>",
            values: { price: 79.99 },
          },
        ],
        prompt: null,
        events: [],
      },
      STATE,
    );
    const chips = renderChips(view);
    expect(chips).toContain("brand: nike");
    expect(chips).toContain("data-chip=");
    const products = renderProducts(view);
    expect(products).toContain("nike storm runner");
    expect(products).toContain("$79.99");
    expect(products).toContain("&lt;fast&gt;"); // escaped
    expect(renderTranscript(view)).toContain("&quot;red&quot;");
  });
});
