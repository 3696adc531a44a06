// Browser wiring: canvas editing (drag / resize / add / delete / retype),
// local what-if preview, self-revision rounds, human-edit submission, and the
// round timeline with the echo badge. All state shown in the timeline comes
// from the server; the canvas is the only client-owned state.

import { WorkbenchClient, DslRejectedError, RoundInProgressError } from "./api.js";
import { CanvasModel } from "./canvas-model.js";
import { parseLayout } from "./dsl.js";
import { renderPreview } from "./preview.js";
import { buildTimeline } from "./timeline.js";
import { Legend, SessionJson } from "./types.js";

const DEFAULT_S0 = "CANVAS 360 800\nBUTTON 10 20 100 40\nTEXT 16 104 200 32\n";
const HANDLE = 12; // px corner zone that resizes instead of moving

type El = (id: string) => HTMLElement;
const byId: El = (id) => {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
};

class Workbench {
  private client = new WorkbenchClient("");
  private legend: Legend | null = null;
  private model: CanvasModel | null = null;
  private token: string | null = null;
  private busy = false;
  private drag: { index: number; lastX: number; lastY: number; resize: boolean } | null = null;

  async start(): Promise<void> {
    this.legend = await this.client.getLegend();
    const picker = byId("class-picker") as HTMLSelectElement;
    for (const cls of this.legend.classes) {
      const option = document.createElement("option");
      option.value = cls.name;
      option.textContent = cls.name;
      picker.appendChild(option);
    }
    (byId("s0-input") as HTMLTextAreaElement).value = DEFAULT_S0;
    this.bind();
  }

  private bind(): void {
    byId("start-session").addEventListener("click", () => void this.createSession());
    byId("self-revise").addEventListener("click", () => void this.selfRevise());
    byId("submit-edit").addEventListener("click", () => void this.submitEdit());
    byId("add-element").addEventListener("click", () => this.addElement());
    byId("delete-element").addEventListener("click", () => this.deleteSelected());
    byId("retype-element").addEventListener("click", () => this.retypeSelected());
    byId("undo").addEventListener("click", () => this.withModel((m) => void m.undo()));
    byId("redo").addEventListener("click", () => this.withModel((m) => void m.redo()));
    const canvas = byId("editor") as HTMLCanvasElement;
    canvas.addEventListener("pointerdown", (ev) => this.onPointerDown(ev));
    canvas.addEventListener("pointermove", (ev) => this.onPointerMove(ev));
    canvas.addEventListener("pointerup", () => (this.drag = null));
  }

  private withModel(fn: (model: CanvasModel) => void): void {
    if (!this.model) return;
    fn(this.model);
    this.paint();
  }

  private note(text: string, isError = false): void {
    const node = byId("status");
    node.textContent = text;
    node.className = isError ? "error" : "";
  }

  private setBusy(busy: boolean): void {
    this.busy = busy;
    for (const id of ["self-revise", "submit-edit"]) {
      (byId(id) as HTMLButtonElement).disabled = busy || this.token === null;
    }
  }

  private async createSession(): Promise<void> {
    const dsl = (byId("s0-input") as HTMLTextAreaElement).value;
    const prompt = (byId("prompt-input") as HTMLInputElement).value || "an app";
    const backend = (byId("backend-picker") as HTMLSelectElement).value;
    try {
      const created = await this.client.createSession({ prompt, s0Dsl: dsl, backend });
      this.token = created.token;
      this.model = new CanvasModel(dsl);
      this.note(`session ${created.token.slice(0, 8)} started`);
      await this.refresh();
    } catch (err) {
      this.note(String(err), true);
    }
  }

  private async selfRevise(): Promise<void> {
    if (!this.token || this.busy) return;
    this.setBusy(true);
    try {
      await this.client.runRound(this.token);
      await this.refresh();
    } catch (err) {
      this.note(err instanceof RoundInProgressError ? "round already running" : String(err), true);
    } finally {
      this.setBusy(false);
    }
  }

  private async submitEdit(): Promise<void> {
    if (!this.token || !this.model || this.busy) return;
    const violations = this.model.validate();
    if (violations.length) {
      this.markViolations(violations.map((v) => v.index));
      this.note(`blocked client-side: ${violations[0].message}`, true);
      return;
    }
    this.setBusy(true);
    try {
      await this.client.submitHumanEdit(this.token, this.model.toDsl());
      await this.refresh();
      this.note("human edit submitted, guided round complete");
    } catch (err) {
      if (err instanceof DslRejectedError) {
        this.markViolations(err.body.violations.map((v) => v.index));
        this.note(`server rejected edit: ${err.body.violations[0]?.message ?? err.message}`, true);
      } else {
        this.note(String(err), true);
      }
    } finally {
      this.setBusy(false);
    }
  }

  private violationIndices = new Set<number>();

  private markViolations(indices: number[]): void {
    this.violationIndices = new Set(indices);
    this.paint();
  }

  private addElement(): void {
    const cls = (byId("class-picker") as HTMLSelectElement).value;
    this.withModel((m) => {
      m.addElement({ cls, x: 16, y: 16, w: 96, h: 48 });
    });
  }

  private deleteSelected(): void {
    this.withModel((m) => {
      if (m.selectedIndex !== null) m.deleteElement(m.selectedIndex);
    });
  }

  private retypeSelected(): void {
    const cls = (byId("class-picker") as HTMLSelectElement).value;
    this.withModel((m) => {
      if (m.selectedIndex !== null) m.retypeElement(m.selectedIndex, cls);
    });
  }

  private onPointerDown(ev: PointerEvent): void {
    if (!this.model) return;
    const { x, y } = this.canvasPoint(ev);
    const hit = this.model.hitTest(x, y);
    this.model.select(hit);
    if (hit !== null) {
      const el = this.model.elements[hit];
      const resize = x >= el.x + el.w - HANDLE && y >= el.y + el.h - HANDLE;
      this.drag = { index: hit, lastX: x, lastY: y, resize };
    }
    this.paint();
  }

  private onPointerMove(ev: PointerEvent): void {
    if (!this.model || !this.drag) return;
    const { x, y } = this.canvasPoint(ev);
    const dx = x - this.drag.lastX;
    const dy = y - this.drag.lastY;
    if (dx === 0 && dy === 0) return;
    const el = this.model.elements[this.drag.index];
    if (this.drag.resize) {
      this.model.resizeElement(this.drag.index, Math.max(1, el.w + dx), Math.max(1, el.h + dy));
    } else {
      this.model.moveElement(this.drag.index, dx, dy);
    }
    this.drag.lastX = x;
    this.drag.lastY = y;
    this.paint();
  }

  private canvasPoint(ev: PointerEvent): { x: number; y: number } {
    const canvas = byId("editor") as HTMLCanvasElement;
    const rect = canvas.getBoundingClientRect();
    const scaleX = canvas.width / rect.width;
    const scaleY = canvas.height / rect.height;
    return { x: Math.round((ev.clientX - rect.left) * scaleX), y: Math.round((ev.clientY - rect.top) * scaleY) };
  }

  /** Local preview via the shared rectangle painter; no server call. */
  private paint(): void {
    if (!this.model || !this.legend) return;
    const canvas = byId("editor") as HTMLCanvasElement;
    canvas.width = this.model.canvasW;
    canvas.height = this.model.canvasH;
    const layout = parseLayout(this.model.toDsl());
    const img = renderPreview(layout, this.legend, 1);
    const ctx = canvas.getContext("2d");
    if (!ctx) return;
    ctx.putImageData(new ImageData(new Uint8ClampedArray(img.pixels), img.width, img.height), 0, 0);
    // selection + violation outlines on top of the preview
    this.model.elements.forEach((el, index) => {
      if (index === this.model!.selectedIndex || this.violationIndices.has(index)) {
        ctx.strokeStyle = this.violationIndices.has(index) ? "#ff0000" : "#0066ff";
        ctx.lineWidth = 2;
        ctx.strokeRect(el.x + 0.5, el.y + 0.5, el.w, el.h);
      }
    });
    (byId("undo") as HTMLButtonElement).disabled = !this.model.canUndo;
    (byId("redo") as HTMLButtonElement).disabled = !this.model.canRedo;
  }

  private async refresh(): Promise<void> {
    if (!this.token) return;
    const session: SessionJson = await this.client.getSession(this.token);
    this.renderTimeline(session);
    this.violationIndices.clear();
    (byId("self-revise") as HTMLButtonElement).disabled = false;
    (byId("submit-edit") as HTMLButtonElement).disabled = false;
    this.paint();
  }

  private renderTimeline(session: SessionJson): void {
    const timeline = buildTimeline(session);
    const host = byId("timeline");
    host.innerHTML = "";

    const s0 = document.createElement("div");
    s0.className = "card";
    s0.innerHTML = `<h3>S0</h3><img src="${timeline.s0PngUrl}" alt="S0 render">`;
    host.appendChild(s0);

    for (const card of timeline.cards) {
      const node = document.createElement("div");
      node.className = "card";
      const badges = [
        card.humanInjected ? '<span class="badge human">human edit</span>' : "",
        card.echoBadge ? '<span class="badge echo">echo</span>' : "",
        card.violations ? `<span class="badge violation">${card.violations} violations</span>` : "",
      ].join("");
      node.innerHTML =
        `<h3>Round ${card.index} ${badges}</h3>` +
        (card.pngUrl ? `<img src="${card.pngUrl}" alt="round ${card.index} render">` : "") +
        `<p>RougeL vs prev: ${card.rougeL.toFixed(1)} - ${card.identical ? "identical" : "edited"}</p>`;
      host.appendChild(node);
    }
    byId("session-status").textContent =
      `status: ${timeline.status}` + (timeline.echoRound !== null ? ` (echo at round ${timeline.echoRound})` : "");
  }
}

if (typeof document !== "undefined") {
  window.addEventListener("DOMContentLoaded", () => {
    void new Workbench().start();
  });
}
