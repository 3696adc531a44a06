// Server JSON contracts (mirrors the workbench HTTP API).

export type LegendEntry = { id: number; name: string; rgb: string };

export type Legend = { background: string; classes: LegendEntry[] };

export type ViolationJson = { index: number; rule: string; message: string };

export type DslErrorBody = {
  ok: false;
  violations: ViolationJson[];
  parse_error: { line: number; message: string } | null;
};

export type TextMetricsJson = { rouge_l_f1: number; identical: boolean };

export type RoundJson = {
  index: number;
  input_codes: string[];
  output_text: string;
  output_code: string;
  parse_error: string | null;
  violations: ViolationJson[];
  metrics: TextMetricsJson;
  latency_s: number;
  backend: string;
  human_injected: boolean;
  png_url?: string;
};

export type SessionJson = {
  token: string;
  prompt: string;
  setup: string;
  backend: string;
  status: "active" | "echo_flagged" | "done";
  echo_round: number | null;
  echo_flagged: boolean;
  s0: { code: string; png_url: string };
  rounds: RoundJson[];
  human_injections: { round: number; code: string }[];
  created: number;
  updated: number;
};

export type CreateSessionResponse = { token: string; rendered_png_url: string };

export type RoundResponse = {
  round: RoundJson;
  png_url: string;
  status: SessionJson["status"];
  echo_round: number | null;
};

export type FidJson = {
  score: number;
  n1: number;
  n2: number;
  eps: number;
  mean_term: number;
  trace_term: number;
};
