// Client-side editable mirror of a layout: selection, edit operations, and a
// snapshot-based undo/redo stack. Serializes back to DSL for submission.

import {
  Layout,
  LayoutElement,
  Violation,
  parseLayout,
  serializeLayout,
  validateLayout,
} from "./dsl.js";

const MAX_HISTORY = 100;

export class CanvasModel {
  private layout: Layout;
  private undoStack: string[] = [];
  private redoStack: string[] = [];
  selectedIndex: number | null = null;

  constructor(dsl: string) {
    this.layout = parseLayout(dsl);
  }

  get canvasW(): number {
    return this.layout.canvasW;
  }

  get canvasH(): number {
    return this.layout.canvasH;
  }

  get elements(): readonly LayoutElement[] {
    return this.layout.elements;
  }

  get selected(): LayoutElement | null {
    return this.selectedIndex === null ? null : this.layout.elements[this.selectedIndex] ?? null;
  }

  toDsl(): string {
    return serializeLayout(this.layout);
  }

  validate(): Violation[] {
    return validateLayout(this.layout);
  }

  select(index: number | null): void {
    if (index !== null && (index < 0 || index >= this.layout.elements.length)) {
      throw new RangeError(`no element at index ${index}`);
    }
    this.selectedIndex = index;
  }

  /** Topmost element containing the point, honoring z-order. */
  hitTest(x: number, y: number): number | null {
    for (let i = this.layout.elements.length - 1; i >= 0; i--) {
      const el = this.layout.elements[i];
      if (x >= el.x && x < el.x + el.w && y >= el.y && y < el.y + el.h) return i;
    }
    return null;
  }

  private snapshot(): void {
    this.undoStack.push(serializeLayout(this.layout));
    if (this.undoStack.length > MAX_HISTORY) this.undoStack.shift();
    this.redoStack.length = 0;
  }

  private mutate(index: number, change: Partial<LayoutElement>): void {
    const el = this.layout.elements[index];
    if (!el) throw new RangeError(`no element at index ${index}`);
    this.snapshot();
    this.layout.elements[index] = { ...el, ...change };
  }

  moveElement(index: number, dx: number, dy: number): void {
    const el = this.layout.elements[index];
    if (!el) throw new RangeError(`no element at index ${index}`);
    this.mutate(index, { x: el.x + dx, y: el.y + dy });
  }

  resizeElement(index: number, w: number, h: number): void {
    this.mutate(index, { w, h });
  }

  retypeElement(index: number, cls: string): void {
    this.mutate(index, { cls });
  }

  relabelElement(index: number, label: string | undefined): void {
    const el = this.layout.elements[index];
    if (!el) throw new RangeError(`no element at index ${index}`);
    this.snapshot();
    const next: LayoutElement = { cls: el.cls, x: el.x, y: el.y, w: el.w, h: el.h };
    if (label !== undefined) next.label = label;
    this.layout.elements[index] = next;
  }

  addElement(el: LayoutElement): number {
    this.snapshot();
    this.layout.elements.push({ ...el });
    this.selectedIndex = this.layout.elements.length - 1;
    return this.selectedIndex;
  }

  deleteElement(index: number): void {
    if (!this.layout.elements[index]) throw new RangeError(`no element at index ${index}`);
    this.snapshot();
    this.layout.elements.splice(index, 1);
    if (this.selectedIndex !== null) {
      if (this.selectedIndex === index) this.selectedIndex = null;
      else if (this.selectedIndex > index) this.selectedIndex--;
    }
  }

  /** Replace the whole layout (e.g. loading a served round output). */
  reset(dsl: string): void {
    this.snapshot();
    this.layout = parseLayout(dsl);
    this.selectedIndex = null;
  }

  get canUndo(): boolean {
    return this.undoStack.length > 0;
  }

  get canRedo(): boolean {
    return this.redoStack.length > 0;
  }

  undo(): boolean {
    const prev = this.undoStack.pop();
    if (prev === undefined) return false;
    this.redoStack.push(serializeLayout(this.layout));
    this.layout = parseLayout(prev);
    this.selectedIndex = null;
    return true;
  }

  redo(): boolean {
    const next = this.redoStack.pop();
    if (next === undefined) return false;
    this.undoStack.push(serializeLayout(this.layout));
    this.layout = parseLayout(next);
    this.selectedIndex = null;
    return true;
  }
}
