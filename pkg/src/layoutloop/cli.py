"""Command line interface: corpus ops, sampling, chains, evaluation, rendering, serving.

Exit codes: 0 ok, 1 usage, 2 data error, 3 backend error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from .backends import BackendError, EchoReviser, HeuristicReviser, RemoteConfig, RemoteReviser
from .core import ParseError, default_registry, load_class_config
from .orchestrator import ChainConfig, ChainReport, evaluate_run, run_chain
from .render import ColorLegend, default_legend, render_png
from .sampler import SamplerConfig, Strategy, dumps_examples, expand_corpus
from .trajectory import (
    CorpusError,
    Split,
    SynthConfig,
    dumps_corpus,
    load_corpus,
    stage_profile,
    synthesize_corpus,
)
from .sampler import Setup

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_BACKEND = 3

_SETUP_NAMES = {
    "direct": Setup.DIRECT_S0,
    "direct-si": Setup.DIRECT_SI,
    "hop": Setup.HOP,
    "single": Setup.SINGLE_REV,
    "multi": Setup.MULTI_REV,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse defaults to exit code 2; we reserve that for data errors
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _registry_from(args) -> tuple:
    if getattr(args, "classes", None):
        registry, colors = load_class_config(args.classes)
        return registry, ColorLegend(registry, colors)
    return default_registry(), default_legend()


def _synth_config(args) -> SynthConfig:
    return SynthConfig(
        canvas_w=args.canvas_w,
        canvas_h=args.canvas_h,
        element_count=(args.min_elements, args.max_elements),
        length=(args.min_length, args.max_length),
        noise=args.noise,
    )


def _cmd_corpus_synth(args) -> int:
    registry, _ = _registry_from(args)
    corpus = synthesize_corpus(
        args.n, seed=args.seed, cfg=_synth_config(args), registry=registry, split=Split(args.split)
    )
    text = dumps_corpus(corpus)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_corpus_stage_fid(args) -> int:
    registry, _ = _registry_from(args)
    corpus = load_corpus(args.input, registry)
    profile = stage_profile(corpus, bucket_count=args.buckets, registry=registry, seed=args.seed)
    writer = csv.writer(sys.stdout if not args.out else open(args.out, "w", newline=""))
    writer.writerow(["bucket", "samples", "fid"])
    for b, (score, count) in enumerate(zip(profile.bucket_fids, profile.sample_counts)):
        writer.writerow([b, count, f"{score:.4f}"])
    return EXIT_OK


def _cmd_sample(args) -> int:
    registry, _ = _registry_from(args)
    corpus = load_corpus(args.input, registry)
    cfg = SamplerConfig(strategy=Strategy(args.strategy), repeats=args.repeats, seed=args.seed)
    examples = expand_corpus(corpus, cfg)
    text = dumps_examples(examples)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _make_backend(name: str, registry, seed: int):
    if name == "heuristic":
        return HeuristicReviser(registry, seed=seed)
    if name == "echo":
        return EchoReviser(registry)
    if name == "remote":
        return RemoteReviser(RemoteConfig.from_env(), registry)
    raise BackendError(f"unknown backend {name!r}")


def _cmd_chain(args) -> int:
    registry, _ = _registry_from(args)
    corpus = load_corpus(args.input, registry)
    backend = _make_backend(args.backend, registry, args.seed)
    cfg = ChainConfig(rounds=args.rounds, setup=_SETUP_NAMES[args.setup], temperature=args.temp)
    lines = []
    for traj in list(corpus)[: args.limit] if args.limit else corpus:
        report = run_chain(backend, traj.prompt, traj.states[0], cfg, registry, trajectory_id=traj.id)
        lines.append(json.dumps(report.to_dict(), sort_keys=True, separators=(",", ":")))
    text = "".join(line + "\n" for line in lines)
    if args.report:
        Path(args.report).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_eval(args) -> int:
    registry, _ = _registry_from(args)
    reports = []
    for lineno, line in enumerate(Path(args.reports).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            reports.append(ChainReport.from_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError) as exc:
            raise CorpusError(f"reports line {lineno}: malformed record ({exc})") from exc
    reference = load_corpus(args.reference, registry).finals()
    rows = evaluate_run(reports, reference, registry, fid_sample_size=args.fid_samples, seed=args.seed)
    writer = csv.writer(sys.stdout if not args.out else open(args.out, "w", newline=""))
    writer.writerow(["round", "n", "fid", "identical_rate", "rouge_l"])
    for row in rows:
        writer.writerow(
            [row["round"], row["n"], f"{row['fid']:.4f}", f"{row['identical_rate']:.2f}", f"{row['rouge_l']:.2f}"]
        )
    return EXIT_OK


def _cmd_render(args) -> int:
    registry, legend = _registry_from(args)
    corpus = load_corpus(args.input, registry)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for traj in corpus:
        states = [(traj.n, traj.final)] if args.final_only else list(enumerate(traj.states))
        for idx, state in states:
            png = render_png(state, legend, scale=args.scale)
            (out_dir / f"{traj.id}_{idx:03d}.png").write_bytes(png)
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    registry, legend = _registry_from(args)
    frontend = Path(args.frontend_dir) if args.frontend_dir else None
    app = create_app(
        ServiceConfig(
            data_dir=Path(args.data_dir),
            registry=registry,
            legend=legend,
            frontend_dir=frontend,
            session_ttl_s=args.session_ttl,
        )
    )
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="layoutloop", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    corpus = sub.add_parser("corpus", help="corpus operations")
    corpus_sub = corpus.add_subparsers(dest="corpus_command", required=True)

    synth = corpus_sub.add_parser("synth", help="generate a synthetic revision corpus")
    synth.add_argument("--n", type=int, required=True)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--out", default=None)
    synth.add_argument("--split", choices=[s.value for s in Split], default="train")
    synth.add_argument("--canvas-w", type=int, default=360)
    synth.add_argument("--canvas-h", type=int, default=800)
    synth.add_argument("--min-elements", type=int, default=6)
    synth.add_argument("--max-elements", type=int, default=12)
    synth.add_argument("--min-length", type=int, default=10)
    synth.add_argument("--max-length", type=int, default=16)
    synth.add_argument("--noise", type=float, default=1.0)
    synth.add_argument("--classes", default=None, help="class config TSV (id, NAME, rgb_hex)")
    synth.set_defaults(func=_cmd_corpus_synth)

    stage = corpus_sub.add_parser("stage-fid", help="stage-bucket FID profile of a corpus")
    stage.add_argument("--in", dest="input", required=True)
    stage.add_argument("--buckets", type=int, default=5)
    stage.add_argument("--seed", type=int, default=0)
    stage.add_argument("--out", default=None)
    stage.add_argument("--classes", default=None)
    stage.set_defaults(func=_cmd_corpus_stage_fid)

    sample = sub.add_parser("sample", help="expand a corpus into training examples")
    sample.add_argument("--strategy", choices=[s.value for s in Strategy], required=True)
    sample.add_argument("--repeats", type=int, default=10)
    sample.add_argument("--in", dest="input", required=True)
    sample.add_argument("--out", default=None)
    sample.add_argument("--seed", type=int, default=0)
    sample.add_argument("--classes", default=None)
    sample.set_defaults(func=_cmd_sample)

    chain = sub.add_parser("chain", help="run the iterative self-revision protocol")
    chain.add_argument("--backend", choices=["heuristic", "echo", "remote"], required=True)
    chain.add_argument("--setup", choices=sorted(_SETUP_NAMES), default="multi")
    chain.add_argument("--rounds", type=int, default=3)
    chain.add_argument("--temp", type=float, default=0.0)
    chain.add_argument("--in", dest="input", required=True)
    chain.add_argument("--report", default=None)
    chain.add_argument("--limit", type=int, default=None)
    chain.add_argument("--seed", type=int, default=0)
    chain.add_argument("--classes", default=None)
    chain.set_defaults(func=_cmd_chain)

    evaluate = sub.add_parser("eval", help="evaluate chain reports against a reference corpus")
    evaluate.add_argument("--reports", required=True)
    evaluate.add_argument("--reference", required=True)
    evaluate.add_argument("--fid-samples", type=int, default=512)
    evaluate.add_argument("--seed", type=int, default=0)
    evaluate.add_argument("--out", default=None)
    evaluate.add_argument("--classes", default=None)
    evaluate.set_defaults(func=_cmd_eval)

    render_cmd = sub.add_parser("render", help="render corpus states to PNG files")
    render_cmd.add_argument("--in", dest="input", required=True)
    render_cmd.add_argument("--out-dir", required=True)
    render_cmd.add_argument("--scale", type=int, default=1)
    render_cmd.add_argument("--final-only", action="store_true")
    render_cmd.add_argument("--classes", default=None)
    render_cmd.set_defaults(func=_cmd_render)

    serve = sub.add_parser("serve", help="run the workbench HTTP service")
    serve.add_argument("--host", default=os.environ.get("LAYOUTLOOP_HOST", "127.0.0.1"))
    serve.add_argument("--port", type=int, default=int(os.environ.get("LAYOUTLOOP_PORT", "8000")))
    serve.add_argument("--data-dir", default=os.environ.get("LAYOUTLOOP_DATA_DIR", "./layoutloop-data"))
    serve.add_argument("--frontend-dir", default=os.environ.get("LAYOUTLOOP_FRONTEND_DIR"), help="built workbench directory to serve at /")
    serve.add_argument("--session-ttl", type=float, default=24 * 3600.0, help="idle session expiry in seconds")
    serve.add_argument("--classes", default=None)
    serve.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (CorpusError, ParseError, FileNotFoundError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
