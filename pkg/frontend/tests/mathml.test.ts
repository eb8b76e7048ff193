import { describe, expect, it } from "vitest";

import { mathmlSupported, mathmlToText, renderFormula } from "../src/mathml.js";

const PYTHAGORAS =
  "<math><mrow><mrow><msup><mi>a</mi><mn>2</mn></msup><mo>+</mo>" +
  "<msup><mi>b</mi><mn>2</mn></msup></mrow><mo>=</mo>" +
  "<msup><mi>c</mi><mn>2</mn></msup></mrow></math>";

const withMathML = { MathMLElement: class {} } as unknown as Window;
const withoutMathML = {} as Window;

describe("mathmlSupported", () => {
  it("is false in a DOM without MathMLElement (this test environment)", () => {
    expect(mathmlSupported(window)).toBe(false);
  });

  it("is true when the window exposes MathMLElement", () => {
    expect(mathmlSupported(withMathML)).toBe(true);
  });
});

describe("mathmlToText", () => {
  it("flattens markup to readable text", () => {
    expect(mathmlToText(PYTHAGORAS)).toBe("a2+b2=c2");
  });

  it("collapses internal whitespace", () => {
    expect(mathmlToText("<math><mi>x</mi>\n  <mo>+</mo>\n  <mi>y</mi></math>")).toBe(
      "x + y",
    );
  });
});

describe("renderFormula", () => {
  it("keeps the math element and adds a text fallback without support", () => {
    const container = document.createElement("div");
    renderFormula(container, PYTHAGORAS, withoutMathML);
    const math = container.querySelector("math");
    expect(math).not.toBeNull();
    expect(math!.classList.contains("mathml-unsupported")).toBe(true);
    const fallback = container.querySelector("code.formula-fallback");
    expect(fallback).not.toBeNull();
    expect(fallback!.textContent).toBe("a2+b2=c2");
  });

  it("renders native math alone when the browser supports it", () => {
    const container = document.createElement("div");
    renderFormula(container, PYTHAGORAS, withMathML);
    const math = container.querySelector("math");
    expect(math).not.toBeNull();
    expect(math!.classList.contains("mathml-unsupported")).toBe(false);
    expect(container.querySelector("code.formula-fallback")).toBeNull();
  });

  it("falls back to raw text when the payload has no math element", () => {
    const container = document.createElement("div");
    renderFormula(container, "not mathml at all", withMathML);
    const fallback = container.querySelector("code.formula-fallback");
    expect(fallback).not.toBeNull();
    expect(fallback!.textContent).toBe("not mathml at all");
  });
});
