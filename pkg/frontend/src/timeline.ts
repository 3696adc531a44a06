// Round timeline: a pure projection of the served session state. The client
// never invents state; every card field is derived from GET /sessions/{t}.

import { SessionJson } from "./types.js";

export type RoundCard = {
  index: number;
  pngUrl: string | null;
  rougeL: number;
  identical: boolean;
  humanInjected: boolean;
  echoBadge: boolean;
  violations: number;
  backend: string;
};

export type Timeline = {
  token: string;
  prompt: string;
  setup: string;
  status: SessionJson["status"];
  echoRound: number | null;
  s0PngUrl: string;
  cards: RoundCard[];
};

export function buildTimeline(session: SessionJson): Timeline {
  const humanRounds = new Set(session.human_injections.map((h) => h.round));
  const cards = session.rounds.map((round) => ({
    index: round.index,
    pngUrl: round.png_url ?? null,
    rougeL: round.metrics.rouge_l_f1,
    identical: round.metrics.identical,
    humanInjected: round.human_injected || humanRounds.has(round.index),
    // the badge appears exactly on the round the server flagged, and onward
    echoBadge: session.echo_round !== null && round.index >= session.echo_round,
    violations: round.violations.length,
    backend: round.backend,
  }));
  return {
    token: session.token,
    prompt: session.prompt,
    setup: session.setup,
    status: session.status,
    echoRound: session.echo_round,
    s0PngUrl: session.s0.png_url,
    cards,
  };
}
