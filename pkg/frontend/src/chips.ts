// Predicate chips are a pure projection of the server's state document.
// Removing one sends the equivalent natural-language utterance back
// through the pipeline, so clicks and typed utterances share semantics.

import type { BoundDoc, StateDoc, ValueDoc } from "./api.js";

export type ChipKind = "value" | "facet-range" | "span" | "sort";

export interface Chip {
  kind: ChipKind;
  facet: string | null;
  label: string;
  polarity: "+" | "-";
  /** Synthetic utterance that removes this predicate server-side;
   *  null for chips with no removal gesture (sort order). */
  removal: string | null;
}

function valueLabel(value: ValueDoc): string {
  if ("tag" in value) return value.tag.id;
  if ("span" in value) return `'${value.span}'`;
  return String(value.number);
}

function boundText(bound: BoundDoc): string {
  return String(bound.value);
}

export function rangeText(range: {
  lower: BoundDoc | null;
  upper: BoundDoc | null;
}): string {
  if (range.lower && range.upper) {
    return `between ${boundText(range.lower)} and ${boundText(range.upper)}`;
  }
  if (range.upper) return `under ${boundText(range.upper)}`;
  if (range.lower) return `over ${boundText(range.lower)}`;
  return "";
}

function removalForValue(value: ValueDoc, facet: string | null): string {
  if ("tag" in value) return `i don't care if it's ${value.tag.id} or not`;
  if ("span" in value) return `i don't care if it's ${value.span} or not`;
  // Bare numbers don't re-ground reliably; clear the whole facet instead.
  return facet ? `any ${facet}` : `i don't care if it's ${value.number} or not`;
}

export function deriveChips(state: StateDoc): Chip[] {
  const chips: Chip[] = [];
  for (const facetId of Object.keys(state.facets).sort()) {
    const fs = state.facets[facetId]!;
    for (const predicate of fs.positive) {
      chips.push({
        kind: "value",
        facet: facetId,
        label: `${facetId}: ${valueLabel(predicate.value)}`,
        polarity: "+",
        removal: removalForValue(predicate.value, facetId),
      });
    }
    for (const predicate of fs.negative) {
      chips.push({
        kind: "value",
        facet: facetId,
        label: `${facetId}: not ${valueLabel(predicate.value)}`,
        polarity: "-",
        removal: removalForValue(predicate.value, facetId),
      });
    }
    if (fs.range) {
      chips.push({
        kind: "facet-range",
        facet: facetId,
        label: `${facetId}: ${rangeText(fs.range)}`,
        polarity: "+",
        removal: `any ${facetId}`,
      });
    }
  }
  for (const predicate of state.ungrounded) {
    const negative = predicate.type === "NOT_EQUALS";
    const span = "span" in predicate.value ? predicate.value.span : "";
    chips.push({
      kind: "span",
      facet: null,
      label: negative ? `not '${span}'` : `'${span}'`,
      polarity: negative ? "-" : "+",
      removal: `i don't care if it's ${span} or not`,
    });
  }
  if (state.sort) {
    const direction =
      state.sort.direction === "ASCENDING" ? "low to high" : "high to low";
    chips.push({
      kind: "sort",
      facet: state.sort.facet,
      label: `sorted by ${state.sort.facet} (${direction})`,
      polarity: "+",
      removal: null,
    });
  }
  return chips;
}
