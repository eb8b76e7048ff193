/**
 * Debounced concept typeahead over GET /ontology/suggest.
 *
 * Keystrokes inside the debounce window collapse into one request, and a
 * newer request aborts its predecessor, so a slow early response can never
 * overwrite a fresh dropdown.
 */

import { ApiClient, ApiError, ConceptSuggestion, isAbortError } from "./api.js";
import type { ConceptChip } from "./state.js";

export interface AutocompleteOptions {
  minChars?: number;
  debounceMs?: number;
  limit?: number;
}

export class ConceptAutocomplete {
  private readonly minChars: number;
  private readonly debounceMs: number;
  private readonly limit: number;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private inflight: AbortController | null = null;
  private items: ConceptSuggestion[] = [];
  private activeIndex = -1;
  private readonly onInput = () => this.scheduleLookup();
  private readonly onKeydown = (e: KeyboardEvent) => this.handleKey(e);

  constructor(
    private readonly input: HTMLInputElement,
    private readonly list: HTMLElement,
    private readonly client: ApiClient,
    private readonly onPick: (chip: ConceptChip) => void,
    opts: AutocompleteOptions = {},
  ) {
    this.minChars = opts.minChars ?? 2;
    this.debounceMs = opts.debounceMs ?? 150;
    this.limit = opts.limit ?? 10;
    this.input.setAttribute("autocomplete", "off");
    this.input.addEventListener("input", this.onInput);
    this.input.addEventListener("keydown", this.onKeydown);
    this.list.classList.add("suggest-list");
    this.hide();
  }

  dispose(): void {
    this.input.removeEventListener("input", this.onInput);
    this.input.removeEventListener("keydown", this.onKeydown);
    if (this.timer !== null) clearTimeout(this.timer);
    this.inflight?.abort();
  }

  private scheduleLookup(): void {
    if (this.timer !== null) clearTimeout(this.timer);
    const prefix = this.input.value.trim();
    if (prefix.length < this.minChars) {
      this.inflight?.abort();
      this.inflight = null;
      this.hide();
      return;
    }
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.lookup(prefix);
    }, this.debounceMs);
  }

  private async lookup(prefix: string): Promise<void> {
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    let suggestions: ConceptSuggestion[];
    try {
      const response = await this.client.suggest(
        prefix,
        { limit: this.limit },
        controller.signal,
      );
      suggestions = response.suggestions;
    } catch (err) {
      if (isAbortError(err)) return;
      if (err instanceof ApiError) {
        this.hide();
        return;
      }
      throw err;
    }
    if (this.inflight !== controller) return;
    this.inflight = null;
    this.render(suggestions);
  }

  private render(suggestions: ConceptSuggestion[]): void {
    this.items = suggestions;
    this.activeIndex = -1;
    this.list.textContent = "";
    if (suggestions.length === 0) {
      this.hide();
      return;
    }
    const doc = this.list.ownerDocument;
    suggestions.forEach((s, i) => {
      const item = doc.createElement("li");
      item.className = "suggest-item";
      item.dataset.conceptId = s.id;
      const label = doc.createElement("span");
      label.textContent = s.label;
      const meta = doc.createElement("span");
      meta.className = "suggest-meta";
      meta.textContent = `${s.id} · ${s.kind} · ${s.lang}`;
      item.append(label, meta);
      item.addEventListener("mousedown", (e) => {
        e.preventDefault();
        this.pick(i);
      });
      this.list.appendChild(item);
    });
    this.list.hidden = false;
  }

  private pick(index: number): void {
    const chosen = this.items[index];
    if (chosen === undefined) return;
    this.input.value = "";
    this.hide();
    this.onPick({ id: chosen.id, label: chosen.label });
  }

  private handleKey(e: KeyboardEvent): void {
    if (this.list.hidden) return;
    if (e.key === "ArrowDown" || e.key === "ArrowUp") {
      e.preventDefault();
      const step = e.key === "ArrowDown" ? 1 : -1;
      const n = this.items.length;
      this.activeIndex = (this.activeIndex + step + n) % n;
      this.list.querySelectorAll(".suggest-item").forEach((el, i) => {
        el.classList.toggle("active", i === this.activeIndex);
      });
    } else if (e.key === "Enter" && this.activeIndex >= 0) {
      e.preventDefault();
      this.pick(this.activeIndex);
    } else if (e.key === "Escape") {
      this.hide();
    }
  }

  private hide(): void {
    this.items = [];
    this.activeIndex = -1;
    this.list.textContent = "";
    this.list.hidden = true;
  }
}
