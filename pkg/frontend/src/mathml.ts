/**
 * Native MathML display with a plain-text fallback.
 *
 * The service's MathML is the canonical rendering. Browsers that expose
 * MathMLElement lay it out themselves; anywhere else the markup stays in
 * the card (hidden) and a flattened text version is shown beside it.
 */

export function mathmlSupported(win: Window = window): boolean {
  return typeof (win as { MathMLElement?: unknown }).MathMLElement !== "undefined";
}

/** Flattens MathML to the text a reader would say: "a2+b2=c2". */
export function mathmlToText(mathml: string, doc: Document = document): string {
  const holder = doc.createElement("div");
  holder.innerHTML = mathml;
  return (holder.textContent ?? "").replace(/\s+/g, " ").trim();
}

/**
 * Puts the formula into `container`. The <math> element is always present
 * so the markup stays inspectable; without native support it is hidden
 * and a <code> fallback carries the flattened text.
 */
export function renderFormula(
  container: HTMLElement,
  mathml: string,
  win: Window = window,
): void {
  const doc = container.ownerDocument;
  const holder = doc.createElement("div");
  holder.innerHTML = mathml;
  const math = holder.querySelector("math");
  if (math === null) {
    const code = doc.createElement("code");
    code.className = "formula-fallback";
    code.textContent = mathml;
    container.appendChild(code);
    return;
  }
  if (!mathmlSupported(win)) {
    math.classList.add("mathml-unsupported");
    const code = doc.createElement("code");
    code.className = "formula-fallback";
    code.textContent = mathmlToText(mathml, doc);
    container.appendChild(code);
  }
  container.appendChild(math);
}
