// Client-side mirror of the layout design-code DSL: enough to round-trip the
// canvas model and to block invalid submissions before they reach the server.

export type LayoutElement = {
  cls: string;
  x: number;
  y: number;
  w: number;
  h: number;
  label?: string;
};

export type Layout = {
  canvasW: number;
  canvasH: number;
  elements: LayoutElement[];
};

export type Violation = { index: number; rule: string; message: string };

export class DslParseError extends Error {
  constructor(public line: number, message: string) {
    super(`line ${line}: ${message}`);
  }
}

const INT_RE = /^-?\d+$/;
const CLASS_RE = /^[A-Z][A-Z0-9_]*$/;
const LABEL_RE = /\s+"((?:[^"\\\n]|\\.)*)"\s*$/;

function unescapeLabel(raw: string, line: number): string {
  let out = "";
  for (let i = 0; i < raw.length; i++) {
    const ch = raw[i];
    if (ch === "\\") {
      const next = raw[i + 1];
      if (next !== '"' && next !== "\\") throw new DslParseError(line, `bad escape in label: ${raw}`);
      out += next;
      i++;
    } else {
      out += ch;
    }
  }
  return out;
}

function escapeLabel(label: string): string {
  return label.replace(/\\/g, "\\\\").replace(/"/g, '\\"');
}

function parseInteger(token: string, line: number, what: string): number {
  if (!INT_RE.test(token)) throw new DslParseError(line, `non-integer ${what} ${JSON.stringify(token)}`);
  return parseInt(token, 10);
}

export function parseLayout(text: string): Layout {
  let canvas: { w: number; h: number } | null = null;
  const elements: LayoutElement[] = [];
  const lines = text.split("\n");
  for (let i = 0; i < lines.length; i++) {
    const lineNo = i + 1;
    const line = lines[i].trim();
    if (!line || line.startsWith("#")) continue;
    if (canvas === null) {
      const parts = line.split(/\s+/);
      if (parts[0] !== "CANVAS") throw new DslParseError(lineNo, `missing CANVAS header, got ${parts[0]}`);
      if (parts.length !== 3) throw new DslParseError(lineNo, `CANVAS takes 2 fields, got ${parts.length - 1}`);
      const w = parseInteger(parts[1], lineNo, "canvas width");
      const h = parseInteger(parts[2], lineNo, "canvas height");
      if (w < 1 || h < 1) throw new DslParseError(lineNo, `canvas dimensions must be positive, got ${w}x${h}`);
      canvas = { w, h };
      continue;
    }
    let label: string | undefined;
    let head = line;
    if (line.includes('"')) {
      const match = LABEL_RE.exec(line);
      if (!match) throw new DslParseError(lineNo, "malformed label quoting");
      label = unescapeLabel(match[1], lineNo);
      head = line.slice(0, match.index);
    }
    const parts = head.split(/\s+/).filter((p) => p.length > 0);
    if (parts.length !== 5) throw new DslParseError(lineNo, `expected CLASS X Y W H, got ${parts.length} fields`);
    const cls = parts[0];
    if (!CLASS_RE.test(cls)) throw new DslParseError(lineNo, `unknown class ${JSON.stringify(cls)}`);
    elements.push({
      cls,
      x: parseInteger(parts[1], lineNo, "coordinate"),
      y: parseInteger(parts[2], lineNo, "coordinate"),
      w: parseInteger(parts[3], lineNo, "size"),
      h: parseInteger(parts[4], lineNo, "size"),
      ...(label !== undefined ? { label } : {}),
    });
  }
  if (canvas === null) throw new DslParseError(Math.max(1, lines.length), "missing CANVAS header");
  return { canvasW: canvas.w, canvasH: canvas.h, elements };
}

export function serializeLayout(layout: Layout): string {
  const lines = [`CANVAS ${layout.canvasW} ${layout.canvasH}`];
  for (const el of layout.elements) {
    let line = `${el.cls} ${el.x} ${el.y} ${el.w} ${el.h}`;
    if (el.label !== undefined) line += ` "${escapeLabel(el.label)}"`;
    lines.push(line);
  }
  return lines.join("\n") + "\n";
}

// Same rules and rule ids as the server validator.
export function validateLayout(layout: Layout): Violation[] {
  const violations: Violation[] = [];
  layout.elements.forEach((el, index) => {
    if (el.w < 1) violations.push({ index, rule: "nonpositive-width", message: `nonpositive width ${el.w}` });
    if (el.h < 1) violations.push({ index, rule: "nonpositive-height", message: `nonpositive height ${el.h}` });
    if (el.x < 0) violations.push({ index, rule: "negative-x", message: `negative coordinate x=${el.x}` });
    if (el.y < 0) violations.push({ index, rule: "negative-y", message: `negative coordinate y=${el.y}` });
    if (el.w >= 1 && el.x >= 0 && el.x + el.w > layout.canvasW)
      violations.push({ index, rule: "overflow-x", message: `x+w=${el.x + el.w} overflows canvas width ${layout.canvasW}` });
    if (el.h >= 1 && el.y >= 0 && el.y + el.h > layout.canvasH)
      violations.push({ index, rule: "overflow-y", message: `y+h=${el.y + el.h} overflows canvas height ${layout.canvasH}` });
  });
  return violations;
}
