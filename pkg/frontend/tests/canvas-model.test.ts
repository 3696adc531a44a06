import { beforeEach, describe, expect, it } from "vitest";

import { CanvasModel } from "../src/canvas-model.js";

const S0 = "CANVAS 360 800\nBUTTON 10 20 100 40\nTEXT 16 104 200 32\n";

describe("CanvasModel", () => {
  let model: CanvasModel;

  beforeEach(() => {
    model = new CanvasModel(S0);
  });

  it("serializes back to the same DSL before any edit", () => {
    expect(model.toDsl()).toBe(S0);
  });

  it("moves elements and serializes the change", () => {
    model.moveElement(0, 5, -4);
    expect(model.toDsl()).toContain("BUTTON 15 16 100 40");
  });

  it("resizes, retypes, relabels", () => {
    model.resizeElement(1, 220, 48);
    model.retypeElement(1, "CARD");
    model.relabelElement(1, "hero");
    expect(model.toDsl()).toContain('CARD 16 104 220 48 "hero"');
  });

  it("adds and deletes elements, keeping selection consistent", () => {
    const index = model.addElement({ cls: "FAB", x: 288, y: 664, w: 56, h: 56 });
    expect(index).toBe(2);
    expect(model.selectedIndex).toBe(2);
    model.deleteElement(0);
    expect(model.selectedIndex).toBe(1); // shifted down
    expect(model.elements).toHaveLength(2);
  });

  it("hit-tests honoring z-order (topmost wins)", () => {
    model.addElement({ cls: "CARD", x: 0, y: 0, w: 360, h: 200 });
    expect(model.hitTest(15, 25)).toBe(2); // the card covers the button
    model.deleteElement(2);
    expect(model.hitTest(15, 25)).toBe(0);
    expect(model.hitTest(350, 790)).toBeNull();
  });

  it("undo/redo are consistent through an edit sequence", () => {
    const original = model.toDsl();
    model.moveElement(0, 8, 8);
    const moved = model.toDsl();
    model.deleteElement(1);
    const deleted = model.toDsl();

    expect(model.undo()).toBe(true);
    expect(model.toDsl()).toBe(moved);
    expect(model.undo()).toBe(true);
    expect(model.toDsl()).toBe(original);
    expect(model.undo()).toBe(false);

    expect(model.redo()).toBe(true);
    expect(model.toDsl()).toBe(moved);
    expect(model.redo()).toBe(true);
    expect(model.toDsl()).toBe(deleted);
    expect(model.redo()).toBe(false);
  });

  it("a new edit clears the redo stack", () => {
    model.moveElement(0, 8, 0);
    model.undo();
    model.moveElement(0, -8, 0);
    expect(model.canRedo).toBe(false);
  });

  it("validates with the shared rules before submission", () => {
    model.moveElement(0, -100, 0);
    const violations = model.validate();
    expect(violations.map((v) => v.rule)).toEqual(["negative-x"]);
    model.undo();
    expect(model.validate()).toEqual([]);
  });

  it("reset replaces the layout but stays undoable", () => {
    model.reset("CANVAS 100 100\nFAB 10 10 20 20\n");
    expect(model.elements).toHaveLength(1);
    model.undo();
    expect(model.toDsl()).toBe(S0);
  });

  it("rejects out-of-range indices", () => {
    expect(() => model.moveElement(9, 0, 0)).toThrow(RangeError);
    expect(() => model.select(9)).toThrow(RangeError);
  });
});
