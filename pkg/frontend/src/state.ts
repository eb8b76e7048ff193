/**
 * Query state, fully round-trippable through the URL query string.
 *
 * The URL carries only what the user chose (mode, pattern, chips, scope,
 * expand, profile); results and the build stamp are whatever the service
 * last returned and are re-fetched after navigation, never persisted.
 */

import type { SearchHit } from "./api.js";

export type QueryMode = "syntactic" | "semantic";

export interface ConceptChip {
  id: string;
  label: string;
}

export const SEGMENT_TYPES = [
  "Document",
  "DocumentSegment",
  "Claim",
  "Definition",
  "Proposition",
  "Example",
  "Axiom",
  "Theorem",
  "Lemma",
  "Proof",
  "Equation",
  "Corollary",
  "Remark",
  "Conjecture",
  "Notation",
] as const;

export type SegmentScope = (typeof SEGMENT_TYPES)[number];

export interface QueryState {
  mode: QueryMode;
  pattern: string;
  concepts: ConceptChip[];
  scope: SegmentScope | null;
  expand: boolean;
  profile: string;
  results: SearchHit[] | null;
  buildStamp: string | null;
}

export const DEFAULT_PROFILE = "referee";

export function emptyState(): QueryState {
  return {
    mode: "syntactic",
    pattern: "",
    concepts: [],
    scope: null,
    expand: true,
    profile: DEFAULT_PROFILE,
    results: null,
    buildStamp: null,
  };
}

/**
 * Returns a human-readable problem when the state cannot be submitted,
 * null when it satisfies the mode's requirements.
 */
export function validateState(state: QueryState): string | null {
  if (state.mode === "syntactic" && state.pattern.trim() === "") {
    return "syntactic mode needs a non-empty pattern";
  }
  if (state.mode === "semantic" && state.concepts.length === 0) {
    return "semantic mode needs at least one concept";
  }
  return null;
}

/**
 * Chips travel as `id:label`. Only the separator and the escape character
 * are rewritten inside each half, so URLSearchParams adds the one real
 * percent-encoding layer and the query string stays singly encoded.
 */
function escapeHalf(half: string): string {
  return half.replace(/%/g, "%25").replace(/:/g, "%3A");
}

function unescapeHalf(half: string): string {
  return half.replace(/%3A/gi, ":").replace(/%25/gi, "%");
}

function encodeChip(chip: ConceptChip): string {
  return `${escapeHalf(chip.id)}:${escapeHalf(chip.label)}`;
}

function decodeChip(raw: string): ConceptChip | null {
  const cut = raw.indexOf(":");
  if (cut < 0) return null;
  const id = unescapeHalf(raw.slice(0, cut));
  if (id === "") return null;
  return { id, label: unescapeHalf(raw.slice(cut + 1)) };
}

export function encodeState(state: QueryState): URLSearchParams {
  const params = new URLSearchParams();
  params.set("mode", state.mode);
  if (state.pattern !== "") params.set("pattern", state.pattern);
  for (const chip of state.concepts) params.append("concept", encodeChip(chip));
  if (state.scope !== null) params.set("scope", state.scope);
  if (!state.expand) params.set("expand", "false");
  if (state.profile !== DEFAULT_PROFILE) params.set("profile", state.profile);
  return params;
}

export function decodeState(params: URLSearchParams): QueryState {
  const state = emptyState();
  if (params.get("mode") === "semantic") state.mode = "semantic";
  state.pattern = params.get("pattern") ?? "";
  for (const raw of params.getAll("concept")) {
    const chip = decodeChip(raw);
    if (chip !== null) state.concepts.push(chip);
  }
  const scope = params.get("scope");
  if (scope !== null && (SEGMENT_TYPES as readonly string[]).includes(scope)) {
    state.scope = scope as SegmentScope;
  }
  if (params.get("expand") === "false") state.expand = false;
  const profile = params.get("profile");
  if (profile !== null && profile !== "") state.profile = profile;
  return state;
}

/** True when the URL names an actual query, not just the empty landing page. */
export function hasQuery(state: QueryState): boolean {
  return state.pattern.trim() !== "" || state.concepts.length > 0;
}
