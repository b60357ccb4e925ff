"""Command-line entry point.

Exit codes: 0 success, 1 usage or operational error, 2 when the method
reports none / infeasible / budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from . import embedder as em
from . import montecarlo as mc
from .lattice import Configuration, Region, Word, read_word_file
from .pipeline import make_configuration, run_pipeline

EXIT_OK, EXIT_USAGE, EXIT_NONE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _triple(text: str) -> tuple:
    parts = [int(v) for v in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected x,y,z, got {text!r}")
    return tuple(parts)


def _floats(text: str) -> list:
    return [float(v) for v in text.split(",") if v]


def _ints(text: str) -> list:
    return [int(v) for v in text.split(",") if v]


def _event_args(sp):
    sp.add_argument("--event", required=True, help="event kind, e.g. elementary-outlet")
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--N", type=int, help="cube size for crossing / uniqueness")
    sp.add_argument("--L", type=int, help="scale for outlet-type events")
    sp.add_argument("--side", type=int, help="box side for remark2-crossing")
    sp.add_argument("--t", type=int)
    sp.add_argument("--color", type=int, default=1, choices=(0, 1))
    sp.add_argument("--region", help="inclusive stored bounds x0..x1,y0..y1,z0..z1")
    sp.add_argument("--word", help="digit string or word-file line")
    sp.add_argument("--word-file")
    sp.add_argument("--n", type=int)
    sp.add_argument("--steps", type=int)
    sp.add_argument("--window", type=int)
    sp.add_argument("--dims", type=int)
    sp.add_argument("--i", type=int, default=0)
    sp.add_argument("--j", type=int, default=0)
    sp.add_argument("--budget", type=int, default=200_000)
    sp.add_argument("--plant", default="none", choices=("none", "corridors", "full"))


def _threads_arg(sp):
    sp.add_argument("--threads", type=int, default=None, help="worker processes (env PERC_THREADS)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wordperc", description="Percolation of words on the shifted cubic lattice.")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("gen", help="dump site states of a region")
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--region", required=True)
    sp.add_argument("--format", default="text", choices=("text", "json"))

    sp = sub.add_parser("event", help="evaluate one event on one seed")
    _event_args(sp)
    sp.add_argument("--seed", type=int, required=True)

    sp = sub.add_parser("estimate", help="Monte Carlo estimate of an event probability")
    _event_args(sp)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--trials", type=int, required=True)
    sp.add_argument("--min-successes", type=int)
    sp.add_argument("--max-trials", type=int)
    sp.add_argument("--out", default="csv", choices=("csv", "json"))
    sp.add_argument("--output", help="write the report here instead of stdout")
    sp.add_argument("--meta", help="timing sidecar path (default: <output>.meta.json)")
    _threads_arg(sp)

    sp = sub.add_parser("sweep", help="estimates over a grid of p and/or scale")
    _event_args(sp)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--trials", type=int, required=True)
    sp.add_argument("--p-values", type=_floats)
    sp.add_argument("--scales", type=_ints, help="values of N, L or side")
    sp.add_argument("--out", default="csv", choices=("csv", "json"))
    sp.add_argument("--output")
    sp.add_argument("--meta")
    _threads_arg(sp)

    sp = sub.add_parser("embed", help="oriented path -> outlet chain -> embedding -> verify")
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--L", type=int, required=True)
    sp.add_argument("--steps", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--window", type=int)
    sp.add_argument("--word-file")
    sp.add_argument("--stretched-runs", type=int, default=3,
                    help="without --word-file: this many runs of ell_eff^2 digits")
    sp.add_argument("--n", type=int)
    sp.add_argument("--plant", default="none", choices=("none", "corridors", "full"))
    sp.add_argument("--lenient", action="store_true", help="allow runs shorter than ell_eff^2")
    sp.add_argument("--json", dest="json_out", help="also write the result JSON here")
    _threads_arg(sp)

    sp = sub.add_parser("oracle", help="brute-force embedding search")
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--region", required=True)
    sp.add_argument("--word")
    sp.add_argument("--word-file")
    sp.add_argument("--n", type=int)
    sp.add_argument("--start", type=_triple, action="append", required=True)
    sp.add_argument("--budget", type=int, default=1_000_000)

    sp = sub.add_parser("verify", help="re-check an embed result file")
    sp.add_argument("--json", dest="json_in", required=True)
    return parser


def _resolve_threads(args) -> int:
    if getattr(args, "threads", None):
        return args.threads
    env = os.environ.get("PERC_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"PERC_THREADS must be an integer, got {env!r}") from None
    return 1


def _load_word(args):
    if getattr(args, "word_file", None):
        return read_word_file(args.word_file)
    if getattr(args, "word", None):
        return Word.parse(args.word) if "=" in args.word else Word.from_digits(args.word)
    return None


def _spec_from(args) -> mc.EventSpec:
    kind = args.event.replace("-", "_")
    if kind in ("crossing", "uniqueness"):
        scale = args.N
    elif kind == "remark2_crossing":
        scale = args.side or args.N
    else:
        scale = args.L
    word = _load_word(args)
    return mc.EventSpec(
        kind=kind, p=args.p, scale=scale, t=args.t, color=args.color, region=args.region,
        word=word.line() if word else None, n=args.n, steps=args.steps, window=args.window,
        dims=args.dims, i=args.i, j=args.j, budget=args.budget, plant=args.plant,
    )


def _spec_header(spec: mc.EventSpec) -> list:
    return [f"{k}={v}" for k, v in vars(spec).items() if v is not None]


def _emit(text: str, path=None):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_meta(args, reports):
    meta = args.meta or (args.output + ".meta.json" if args.output else None)
    if meta:
        with open(meta, "w") as fh:
            json.dump({"elapsed_ms": [r.elapsed_ms for r in reports]}, fh)
            fh.write("\n")


def cmd_gen(args) -> int:
    region = Region.parse(args.region)
    config = Configuration(args.seed, args.p)
    states = config.states(region)
    head = f"wordperc gen seed={args.seed} p={args.p!r} region={region.literal()}"
    if args.format == "json":
        doc = {"config": head, "region": region.literal(), "states": states.tolist()}
        sys.stdout.write(json.dumps(doc, sort_keys=True) + "\n")
        return EXIT_OK
    lines = [f"# {head}", "# rows: y ascending, columns: x ascending"]
    for zi, z in enumerate(range(region.lo[2], region.hi[2] + 1)):
        lines.append(f"z={z}")
        for yi in range(states.shape[1]):
            lines.append("".join(str(v) for v in states[:, yi, zi]))
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_event(args) -> int:
    spec = _spec_from(args)
    value = mc.evaluate(spec, args.seed)
    head = " ".join(_spec_header(spec))
    sys.stdout.write(f"# wordperc event seed={args.seed} {head}\n{'true' if value else 'false'}\n")
    return EXIT_OK


def cmd_estimate(args) -> int:
    spec = _spec_from(args)
    report = mc.estimate(spec, args.trials, args.seed, _resolve_threads(args),
                         args.min_successes, args.max_trials)
    header = ["wordperc estimate", f"seed={args.seed} trials={args.trials}", " ".join(_spec_header(spec))]
    if args.min_successes:
        header.append(f"min_successes={args.min_successes} max_trials={args.max_trials}")
    if report.flags:
        header.append("flags=" + ",".join(report.flags))
    _write_meta(args, [report])
    text = mc.write_report([replace(report, elapsed_ms=0.0)], args.out, header=header)
    _emit(text, args.output)
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = _spec_from(args)
    reports = mc.sweep(spec, args.p_values, args.scales, args.trials, args.seed, _resolve_threads(args))
    header = [
        "wordperc sweep",
        f"seed={args.seed} trials={args.trials} p_values={args.p_values} scales={args.scales}",
        " ".join(_spec_header(spec)),
    ]
    for n, r in enumerate(reports):
        if r.flags:
            header.append(f"row {n}: flags=" + ",".join(r.flags))
    _write_meta(args, reports)
    text = mc.write_report([replace(r, elapsed_ms=0.0) for r in reports], args.out, header=header)
    _emit(text, args.output)
    return EXIT_OK


def _embed_config(doc: dict) -> Configuration:
    c = doc["config"]
    return make_configuration(c["seed"], c["p"], c["L"], c["plant"], c["window"], c["steps"])


def cmd_embed(args) -> int:
    window = args.window if args.window is not None else args.steps
    resolved = {"seed": args.seed, "p": args.p, "L": args.L, "steps": args.steps, "window": window,
                "plant": args.plant, "strict": not args.lenient}
    word = _load_word(args)
    resolved["word"] = word.line() if word else f"stretched_runs={args.stretched_runs}"
    config = _embed_config({"config": resolved})
    out = run_pipeline(config, args.L, args.steps, word, args.n, window,
                       stretched_runs=args.stretched_runs, strict=not args.lenient)
    doc = {"command": "embed", "config": resolved, **out.to_dict(), "verified": out.ok}
    text = json.dumps(doc, sort_keys=True) + "\n"
    if args.json_out:
        _emit(text, args.json_out)
    summary = {"status": doc["status"], "stage": out.stage, "detail": out.detail, "config": resolved}
    if out.ok:
        summary.update(n=out.n, ell_eff=out.chain.ell_eff, outlets=len(out.chain.outlets))
    sys.stdout.write(json.dumps(summary, sort_keys=True) + "\n")
    return EXIT_OK if out.ok else EXIT_NONE


def cmd_oracle(args) -> int:
    word = _load_word(args)
    if word is None:
        raise UsageError("oracle needs --word or --word-file")
    n = args.n or word.finite_length
    if n is None:
        raise UsageError("--n is required for infinite words")
    region = Region.parse(args.region)
    config = Configuration(args.seed, args.p)
    resolved = {"seed": args.seed, "p": args.p, "region": region.literal(), "word": word.line(),
                "n": n, "starts": sorted(list(s) for s in args.start), "budget": args.budget}
    try:
        found = em.oracle_embed(config, region, word, n, args.start, args.budget)
    except em.BudgetExhausted:
        status, found = "budget_exhausted", None
    else:
        status = "found" if found is not None else "none"
    doc = {"command": "oracle", "config": resolved, "status": status,
           "result": found.to_dict() if found else None}
    sys.stdout.write(json.dumps(doc, sort_keys=True) + "\n")
    return EXIT_OK if found is not None else EXIT_NONE


def cmd_verify(args) -> int:
    with open(args.json_in) as fh:
        doc = json.load(fh)
    if not doc.get("result"):
        sys.stdout.write(json.dumps({"verified": False, "reason": "no embedding in file"}) + "\n")
        return EXIT_NONE
    config = _embed_config(doc)
    check = em.verify_embedding(config, em.EmbeddingResult.from_dict(doc["result"]))
    sys.stdout.write(json.dumps({"verified": check.ok, "index": check.index, "reason": check.reason},
                                sort_keys=True) + "\n")
    return EXIT_OK if check else EXIT_NONE


COMMANDS = {
    "gen": cmd_gen, "event": cmd_event, "estimate": cmd_estimate, "sweep": cmd_sweep,
    "embed": cmd_embed, "oracle": cmd_oracle, "verify": cmd_verify,
}


# options whose values may legitimately start with a minus sign
_COORD_OPTIONS = ("--region", "--start")


def _attach_coordinates(argv):
    """Rewrite ``--region -3..3,...`` as ``--region=-3..3,...`` so argparse keeps the value."""
    out = []
    it = iter(argv)
    for tok in it:
        if tok in _COORD_OPTIONS:
            nxt = next(it, None)
            if nxt is not None and nxt.startswith("-") and nxt[1:2].isdigit():
                out.append(f"{tok}={nxt}")
                continue
            out.append(tok)
            if nxt is not None:
                out.append(nxt)
            continue
        out.append(tok)
    return out


def run(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parser.parse_args(_attach_coordinates(argv))
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except (UsageError, mc.InvalidSpec, ValueError, OSError) as exc:
        sys.stderr.write(f"wordperc {args.command}: error: {exc}\n")
        return EXIT_USAGE


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
