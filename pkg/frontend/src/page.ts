/**
 * The search page: one form, one result list, all state in the URL.
 *
 * Submitting encodes the QueryState into history and runs the search;
 * back/forward decodes and re-runs, so every view is shareable. At most
 * one search is in flight; a newer submit aborts the older one together
 * with its snippet fetches.
 */

import {
  ApiClient,
  ApiError,
  DocumentResponse,
  SearchHit,
  isAbortError,
} from "./api.js";
import { ConceptAutocomplete } from "./autocomplete.js";
import { renderFormula } from "./mathml.js";
import {
  ConceptChip,
  DEFAULT_PROFILE,
  QueryState,
  SEGMENT_TYPES,
  SegmentScope,
  decodeState,
  emptyState,
  encodeState,
  hasQuery,
  validateState,
} from "./state.js";

const SNIPPET_MARGIN = 80;
const RELATED_COUNT = 5;
const KNOWN_PROFILES = [DEFAULT_PROFILE, "novice"];

export class SearchPage {
  private state: QueryState = emptyState();
  private inflight: AbortController | null = null;
  private docCache = new Map<string, Promise<DocumentResponse>>();
  private autocomplete: ConceptAutocomplete;
  private readonly onPopState = () => {
    void this.restoreFromUrl(false);
  };

  private form!: HTMLFormElement;
  private modeInputs!: Record<string, HTMLInputElement>;
  private patternRow!: HTMLElement;
  private patternInput!: HTMLInputElement;
  private conceptRow!: HTMLElement;
  private conceptInput!: HTMLInputElement;
  private chipsEl!: HTMLElement;
  private suggestList!: HTMLElement;
  private scopeSelect!: HTMLSelectElement;
  private expandToggle!: HTMLInputElement;
  private profileInput!: HTMLInputElement;
  private hintEl!: HTMLElement;
  private bannerEl!: HTMLElement;
  private stampEl!: HTMLElement;
  private resultsEl!: HTMLElement;

  constructor(
    private readonly root: HTMLElement,
    private readonly client: ApiClient,
    private readonly win: Window,
    autocompleteOpts: { debounceMs?: number } = {},
  ) {
    this.buildDom();
    this.autocomplete = new ConceptAutocomplete(
      this.conceptInput,
      this.suggestList,
      this.client,
      (chip) => this.addChip(chip),
      autocompleteOpts,
    );
    this.win.addEventListener("popstate", this.onPopState);
  }

  /** Reads the current URL and, when it names a query, runs it. */
  async start(): Promise<void> {
    await this.restoreFromUrl(false);
  }

  getState(): QueryState {
    return this.state;
  }

  dispose(): void {
    this.win.removeEventListener("popstate", this.onPopState);
    this.autocomplete.dispose();
    this.inflight?.abort();
  }

  // -- DOM construction ---------------------------------------------------

  private buildDom(): void {
    const doc = this.root.ownerDocument;
    this.root.textContent = "";

    const header = doc.createElement("header");
    header.className = "page-header";
    const title = doc.createElement("h1");
    title.textContent = "mathkb search";
    this.stampEl = doc.createElement("span");
    this.stampEl.id = "build-stamp";
    this.stampEl.className = "build-stamp";
    header.append(title, this.stampEl);

    this.form = doc.createElement("form");
    this.form.id = "query-form";
    this.form.addEventListener("submit", (e) => {
      e.preventDefault();
      this.readForm();
      void this.runSearch(true);
    });

    const modeRow = doc.createElement("div");
    modeRow.className = "form-row";
    this.modeInputs = {};
    for (const mode of ["syntactic", "semantic"] as const) {
      const label = doc.createElement("label");
      const radio = doc.createElement("input");
      radio.type = "radio";
      radio.name = "mode";
      radio.value = mode;
      radio.id = `mode-${mode}`;
      radio.checked = mode === "syntactic";
      radio.addEventListener("change", () => {
        this.readForm();
        this.syncModeRows();
      });
      label.append(radio, doc.createTextNode(` ${mode}`));
      modeRow.appendChild(label);
      this.modeInputs[mode] = radio;
    }

    this.patternRow = doc.createElement("div");
    this.patternRow.className = "form-row";
    const patternLabel = doc.createElement("label");
    patternLabel.textContent = "pattern ";
    this.patternInput = doc.createElement("input");
    this.patternInput.type = "text";
    this.patternInput.id = "pattern-input";
    this.patternInput.placeholder = "?a^2 + ?b^2 = ?c^2";
    patternLabel.appendChild(this.patternInput);
    this.patternRow.appendChild(patternLabel);

    this.conceptRow = doc.createElement("div");
    this.conceptRow.className = "form-row";
    this.chipsEl = doc.createElement("span");
    this.chipsEl.id = "concept-chips";
    this.conceptInput = doc.createElement("input");
    this.conceptInput.type = "text";
    this.conceptInput.id = "concept-input";
    this.conceptInput.placeholder = "type 2+ letters for concepts";
    this.suggestList = doc.createElement("ul");
    this.suggestList.id = "suggest-list";
    const expandLabel = doc.createElement("label");
    this.expandToggle = doc.createElement("input");
    this.expandToggle.type = "checkbox";
    this.expandToggle.id = "expand-toggle";
    this.expandToggle.checked = true;
    expandLabel.append(this.expandToggle, doc.createTextNode(" include narrower concepts"));
    this.conceptRow.append(this.chipsEl, this.conceptInput, this.suggestList, expandLabel);

    const scopeRow = doc.createElement("div");
    scopeRow.className = "form-row";
    const scopeLabel = doc.createElement("label");
    scopeLabel.textContent = "scope ";
    this.scopeSelect = doc.createElement("select");
    this.scopeSelect.id = "scope-select";
    const anyOption = doc.createElement("option");
    anyOption.value = "";
    anyOption.textContent = "any segment";
    this.scopeSelect.appendChild(anyOption);
    for (const t of SEGMENT_TYPES) {
      const option = doc.createElement("option");
      option.value = t;
      option.textContent = t;
      this.scopeSelect.appendChild(option);
    }
    scopeLabel.appendChild(this.scopeSelect);

    const profileLabel = doc.createElement("label");
    profileLabel.textContent = " profile ";
    this.profileInput = doc.createElement("input");
    this.profileInput.type = "text";
    this.profileInput.id = "profile-input";
    this.profileInput.value = DEFAULT_PROFILE;
    this.profileInput.setAttribute("list", "profile-options");
    const datalist = doc.createElement("datalist");
    datalist.id = "profile-options";
    for (const name of KNOWN_PROFILES) {
      const option = doc.createElement("option");
      option.value = name;
      datalist.appendChild(option);
    }
    profileLabel.append(this.profileInput, datalist);

    const submit = doc.createElement("button");
    submit.type = "submit";
    submit.id = "search-button";
    submit.textContent = "search";
    scopeRow.append(scopeLabel, profileLabel, submit);

    this.hintEl = doc.createElement("p");
    this.hintEl.id = "form-hint";
    this.hintEl.className = "form-hint";
    this.hintEl.hidden = true;

    this.bannerEl = doc.createElement("div");
    this.bannerEl.id = "error-banner";
    this.bannerEl.className = "error-banner";
    this.bannerEl.hidden = true;

    this.resultsEl = doc.createElement("section");
    this.resultsEl.id = "results";

    this.form.append(modeRow, this.patternRow, this.conceptRow, scopeRow, this.hintEl);
    this.root.append(header, this.form, this.bannerEl, this.resultsEl);
    this.syncModeRows();
  }

  private syncModeRows(): void {
    const semantic = this.state.mode === "semantic";
    this.patternRow.hidden = semantic;
    this.conceptRow.hidden = !semantic;
  }

  // -- state <-> form -----------------------------------------------------

  private readForm(): void {
    this.state.mode = this.modeInputs["semantic"]?.checked ? "semantic" : "syntactic";
    this.state.pattern = this.patternInput.value;
    const scope = this.scopeSelect.value;
    this.state.scope = scope === "" ? null : (scope as SegmentScope);
    this.state.expand = this.expandToggle.checked;
    const profile = this.profileInput.value.trim();
    this.state.profile = profile === "" ? DEFAULT_PROFILE : profile;
  }

  private writeForm(): void {
    const radio = this.modeInputs[this.state.mode];
    if (radio) radio.checked = true;
    this.patternInput.value = this.state.pattern;
    this.scopeSelect.value = this.state.scope ?? "";
    this.expandToggle.checked = this.state.expand;
    this.profileInput.value = this.state.profile;
    this.renderChips();
    this.syncModeRows();
  }

  private addChip(chip: ConceptChip): void {
    if (!this.state.concepts.some((c) => c.id === chip.id)) {
      this.state.concepts.push(chip);
    }
    this.renderChips();
  }

  private removeChip(id: string): void {
    this.state.concepts = this.state.concepts.filter((c) => c.id !== id);
    this.renderChips();
  }

  private renderChips(): void {
    const doc = this.root.ownerDocument;
    this.chipsEl.textContent = "";
    for (const chip of this.state.concepts) {
      const el = doc.createElement("span");
      el.className = "chip";
      el.dataset.conceptId = chip.id;
      const text = doc.createElement("span");
      text.textContent = chip.label;
      text.title = chip.id;
      const remove = doc.createElement("button");
      remove.type = "button";
      remove.className = "chip-remove";
      remove.textContent = "×";
      remove.addEventListener("click", () => this.removeChip(chip.id));
      el.append(text, remove);
      this.chipsEl.appendChild(el);
    }
  }

  // -- navigation ---------------------------------------------------------

  private async restoreFromUrl(push: boolean): Promise<void> {
    const params = new URLSearchParams(this.win.location.search);
    this.state = decodeState(params);
    this.writeForm();
    if (hasQuery(this.state) && validateState(this.state) === null) {
      await this.runSearch(push);
    }
  }

  private pushUrl(): void {
    const encoded = encodeState(this.state).toString();
    const target = encoded === "" ? this.win.location.pathname : `?${encoded}`;
    this.win.history.pushState(null, "", target);
  }

  // -- searching ----------------------------------------------------------

  async runSearch(push: boolean): Promise<void> {
    const problem = validateState(this.state);
    if (problem !== null) {
      this.hintEl.textContent = problem;
      this.hintEl.hidden = false;
      return;
    }
    this.hintEl.hidden = true;
    this.clearBanner();
    if (push) this.pushUrl();

    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    this.docCache = new Map();

    try {
      const response = await this.client.searchFormula(
        {
          mode: this.state.mode,
          pattern: this.state.pattern,
          concepts: this.state.concepts.map((c) => c.id),
          scope: this.state.scope ?? undefined,
          expand: this.state.expand,
        },
        controller.signal,
      );
      if (this.inflight !== controller) return;
      this.state.results = response.hits;
      this.state.buildStamp = response.buildStamp;
      this.stampEl.textContent = `build ${response.buildStamp}`;
      await this.renderResults(response.hits, controller.signal);
    } catch (err) {
      if (isAbortError(err)) return;
      if (err instanceof ApiError) {
        // stale cards under an error banner would look like results for the
        // failing query, so the list goes too
        this.state.results = [];
        this.resultsEl.replaceChildren();
        this.showBanner(err);
        return;
      }
      throw err;
    } finally {
      if (this.inflight === controller) this.inflight = null;
    }
  }

  private showBanner(err: ApiError): void {
    this.bannerEl.textContent = `${err.code}: ${err.message}`;
    this.bannerEl.dataset.code = err.code;
    this.bannerEl.hidden = false;
  }

  private clearBanner(): void {
    this.bannerEl.hidden = true;
    this.bannerEl.textContent = "";
    delete this.bannerEl.dataset.code;
  }

  // -- results ------------------------------------------------------------

  private async renderResults(hits: SearchHit[], signal: AbortSignal): Promise<void> {
    const doc = this.root.ownerDocument;
    this.resultsEl.textContent = "";
    const count = doc.createElement("p");
    count.className = "hit-count";
    count.textContent = hits.length === 1 ? "1 hit" : `${hits.length} hits`;
    this.resultsEl.appendChild(count);
    for (const hit of hits) {
      this.resultsEl.appendChild(await this.renderHit(hit, signal));
    }
  }

  private async renderHit(hit: SearchHit, signal: AbortSignal): Promise<HTMLElement> {
    const doc = this.root.ownerDocument;
    const card = doc.createElement("article");
    card.className = "hit-card";
    card.dataset.docId = hit.docId;
    card.dataset.segmentId = hit.segmentId;

    const head = doc.createElement("div");
    head.className = "hit-head";
    const where = doc.createElement("span");
    where.className = "hit-where";
    where.textContent =
      hit.formulaId !== undefined
        ? `${hit.docId} · ${hit.segmentId} · ${hit.formulaId}`
        : `${hit.docId} · ${hit.segmentId}`;
    const score = doc.createElement("span");
    score.className = "hit-score";
    score.textContent = `score ${hit.score}`;
    head.append(where, score);
    card.appendChild(head);

    if (hit.mathml !== undefined) {
      const mathBlock = doc.createElement("div");
      mathBlock.className = "hit-math hit-match";
      renderFormula(mathBlock, hit.mathml, this.win);
      card.appendChild(mathBlock);
    }
    if (hit.formulaId === undefined) {
      const snippet = await this.renderSnippet(hit, signal);
      if (snippet !== null) card.appendChild(snippet);
    }

    if (hit.explain.length > 0) {
      const explain = doc.createElement("ul");
      explain.className = "hit-explain";
      for (const line of hit.explain) {
        const item = doc.createElement("li");
        item.textContent = line;
        explain.appendChild(item);
      }
      card.appendChild(explain);
    }

    card.appendChild(this.buildRelated(hit.docId));
    return card;
  }

  /**
   * Text hits carry (start, end) spans into the segment text, which is not
   * part of the hit body; it is fetched from /documents and windowed to
   * ±80 characters around the marks, the service's own snippet rule.
   */
  private async renderSnippet(
    hit: SearchHit,
    signal: AbortSignal,
  ): Promise<HTMLElement | null> {
    let document_: DocumentResponse;
    try {
      let cached = this.docCache.get(hit.docId);
      if (cached === undefined) {
        cached = this.client.getDocument(hit.docId, signal);
        this.docCache.set(hit.docId, cached);
      }
      document_ = await cached;
    } catch {
      return null;
    }
    const segment = document_.segments.find((s) => s.id === hit.segmentId);
    if (segment === undefined) return null;
    const text = segment.text;
    const spans = hit.highlights
      .filter((s): s is [number, number] => {
        const [a, b] = [s[0], s[1]];
        return (
          s.length === 2 &&
          typeof a === "number" &&
          typeof b === "number" &&
          a <= b &&
          b <= text.length
        );
      })
      .sort((x, y) => x[0] - y[0] || x[1] - y[1]);

    let lo = 0;
    let hi = Math.min(text.length, 160);
    if (spans.length > 0) {
      lo = Math.max(0, Math.min(...spans.map((s) => s[0])) - SNIPPET_MARGIN);
      hi = Math.min(text.length, Math.max(...spans.map((s) => s[1])) + SNIPPET_MARGIN);
    }

    const doc = this.root.ownerDocument;
    const p = doc.createElement("p");
    p.className = "hit-snippet";
    let cursor = lo;
    for (const [start, end] of spans) {
      if (start < lo || end > hi || start < cursor) continue;
      p.appendChild(doc.createTextNode(text.slice(cursor, start)));
      const mark = doc.createElement("mark");
      mark.textContent = text.slice(start, end);
      p.appendChild(mark);
      cursor = end;
    }
    p.appendChild(doc.createTextNode(text.slice(cursor, hi)));
    return p;
  }

  private buildRelated(docId: string): HTMLElement {
    const doc = this.root.ownerDocument;
    const wrap = doc.createElement("div");
    wrap.className = "related";
    const link = doc.createElement("a");
    link.href = "#";
    link.className = "related-link";
    link.textContent = "related documents";
    const panel = doc.createElement("div");
    panel.className = "related-panel";
    panel.hidden = true;
    link.addEventListener("click", (e) => {
      e.preventDefault();
      if (!panel.hidden) {
        panel.hidden = true;
        return;
      }
      void this.fillRelated(docId, panel);
    });
    wrap.append(link, panel);
    return wrap;
  }

  private async fillRelated(docId: string, panel: HTMLElement): Promise<void> {
    const doc = this.root.ownerDocument;
    panel.textContent = "…";
    panel.hidden = false;
    try {
      const response = await this.client.recommend(
        docId,
        this.state.profile,
        RELATED_COUNT,
      );
      panel.textContent = "";
      if (response.recommendations.length === 0) {
        panel.textContent = "no related documents";
        return;
      }
      const list = doc.createElement("ol");
      list.className = "related-list";
      for (const rec of response.recommendations) {
        const item = doc.createElement("li");
        item.textContent = `${rec.docId} (${rec.score.toFixed(3)})`;
        list.appendChild(item);
      }
      panel.appendChild(list);
    } catch (err) {
      if (err instanceof ApiError) {
        panel.textContent = `${err.code}: ${err.message}`;
        return;
      }
      throw err;
    }
  }
}
