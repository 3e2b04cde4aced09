"""Command-line interface.

Exit codes: 0 ok, 1 usage, 2 bad input file, 3 oracle failure, 4 internal
error, 5 benchmark hard ceiling breached, 6 trace verification failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Optional, Sequence

from . import bench as benchmod
from . import horses as horsesmod
from .errors import (
    ContradictoryEdge,
    FormatError,
    InvalidInput,
    InvalidTrace,
    NotTransitive,
    OracleError,
)
from .graph import read_tournament
from .oracle import MatrixOracle, RecordingOracle, ReplayOracle
from .rerank import RerankRequest, emit_result, external_oracle_for, load_candidates, rerank
from .scheduler import ALGORITHMS, RunOptions, read_trace, trace_document, write_trace
from .verify import verify_trace

log = logging.getLogger("tourney")

EXIT_OK, EXIT_USAGE, EXIT_FORMAT, EXIT_ORACLE, EXIT_INTERNAL, EXIT_CEILING, EXIT_VERIFY = range(7)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tourney", description="Top-m selection over tournaments with k-wise comparisons.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="select the top m of a tournament file")
    s.add_argument("--input", required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--algorithm", choices=sorted(ALGORITHMS), default="blitz")
    s.add_argument("--batch", action="store_true", help="query disjoint groups in parallel rounds")
    s.add_argument("--dagger", action="store_true", help="canonical tie-breaking on SCC order")
    s.add_argument("--trace", help="write the run trace as JSON")
    s.add_argument("--one-based", action="store_true", help="print vertex ids starting at 1")
    s.add_argument("--json", action="store_true")

    h = sub.add_parser("horses", help="the 25-horses demo")
    h.add_argument("--labeling", choices=["shuffle", "identity"], default="shuffle")
    h.add_argument("--json", action="store_true")

    b = sub.add_parser("bench", help="query-complexity grid on random transitive instances")
    b.add_argument("--n", type=_int_list)
    b.add_argument("--k", type=_int_list)
    b.add_argument("--seeds", type=int, default=20)
    b.add_argument("--seed-base", type=int, default=0)
    b.add_argument("--out", required=True)
    b.add_argument("--summary")
    b.add_argument("--full-grid", action="store_true", help="n up to 800 and k up to 50")
    b.add_argument("--soft", type=float, default=1.25, help="warn above this T/B ratio")
    b.add_argument("--hard", type=float, default=1.5, help="exit 5 above this T/B ratio")
    b.add_argument("--json", action="store_true")

    r = sub.add_parser("rerank", help="rerank candidate documents through an external oracle")
    r.add_argument("--candidates", required=True)
    r.add_argument("--query", required=True)
    r.add_argument("--query-id", default="q0")
    r.add_argument("--oracle-cmd")
    r.add_argument("--k", type=int, required=True)
    r.add_argument("--m", type=int, required=True)
    rec = r.add_mutually_exclusive_group()
    rec.add_argument("--record", help="log oracle responses to this JSONL file")
    rec.add_argument("--replay", help="answer from a recorded JSONL log instead of a process")
    r.add_argument("--out", required=True)
    r.add_argument("--batch", action="store_true")
    r.add_argument("--timeout", type=float, default=30.0)
    r.add_argument("--retries", type=int, default=1)
    r.add_argument("--json", action="store_true")

    v = sub.add_parser("verify", help="check a trace against ground truth")
    v.add_argument("--trace", required=True)
    v.add_argument("--ground-truth", required=True)
    v.add_argument("--json", action="store_true")
    return p


def _emit(args, human: str, doc: dict) -> None:
    if args.json:
        sys.stdout.write(json.dumps(doc, sort_keys=True) + "\n")
    else:
        sys.stdout.write(human)


def _read_input(path):
    try:
        return read_tournament(path)
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}") from None


def cmd_solve(args) -> int:
    if args.k < 2:
        raise UsageError("--k must be >= 2")
    if args.m < 1:
        raise UsageError("--m must be >= 1")
    t = _read_input(args.input)
    if args.m > t.n:
        raise UsageError(f"--m {args.m} exceeds n={t.n}")
    opts = RunOptions(k=args.k, m=args.m, tie_break="dagger" if args.dagger else "id", batch=args.batch)
    res = ALGORITHMS[args.algorithm](t.n, MatrixOracle(t, args.k), opts)
    if args.trace:
        write_trace(res, args.trace)

    off = 1 if args.one_based else 0
    ids = lambda vs: ",".join(str(v + off) for v in vs)
    tier_of = res.tiers.tier_of()
    tied = []
    for ti in sorted({tier_of[v] for v in res.top}):
        tier = res.tiers.tiers[ti]
        if len(tier) > 1:
            tied.append(list(tier))
    lines = [
        f"queries={res.total_queries} top={ids(res.top)}",
        f"rounds={res.rounds} inreach={','.join(map(str, res.top_inreach))}",
    ]
    for tier in tied:
        lines.append(f"note: tier {{{ids(tier)}}} is strongly connected; its members are interchangeable")
    doc = {
        "algorithm": args.algorithm,
        "queries": res.total_queries,
        "rounds": res.rounds,
        "top": [v + off for v in res.top],
        "top_inreach": res.top_inreach,
        "tied_tiers": [[v + off for v in tier] for tier in tied],
    }
    _emit(args, "\n".join(lines) + "\n", doc)
    return EXIT_OK


def cmd_horses(args) -> int:
    run = horsesmod.run_horses(args.labeling)
    doc = {
        "queries": run.result.total_queries,
        "rounds": run.result.rounds,
        "top": run.top_horses,
        "snapshots": [
            [{"horse": st.horse, "L": st.L, "W": st.W, "queried": st.queried, "resolved": st.resolved}
             for _, st in sorted(snap.items())]
            for snap in run.snapshots
        ],
    }
    _emit(args, horsesmod.render(run), doc)
    return EXIT_OK


def cmd_bench(args) -> int:
    base = benchmod.FULL_GRID if args.full_grid else benchmod.DESK_GRID
    cfg = benchmod.GridConfig(
        tuple(args.n) if args.n else base.n_values,
        tuple(args.k) if args.k else base.k_values,
        args.seeds,
        args.seed_base,
    )
    records = benchmod.run_grid(cfg)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        benchmod.write_records_csv(records, fh)
    if args.summary:
        with open(args.summary, "w", encoding="utf-8", newline="") as fh:
            benchmod.write_summary_csv(benchmod.summarize(records), fh)
    report = benchmod.check_ratios(records, args.soft, args.hard)
    for n, k, seed, m, ratio in report.soft[:20]:
        print(f"warning: n={n} k={k} seed={seed} m={m} ratio={ratio:.4f} > {args.soft}", file=sys.stderr)
    if len(report.soft) > 20:
        print(f"warning: {len(report.soft) - 20} more entries above {args.soft}", file=sys.stderr)
    doc = {
        "records": len(records),
        "worst_ratio": round(report.worst, 6),
        "soft_exceed": len(report.soft),
        "hard_exceed": len(report.hard),
    }
    _emit(args, f"records={len(records)} worst_ratio={report.worst:.6f} "
                f"soft_exceed={len(report.soft)} hard_exceed={len(report.hard)}\n", doc)
    if report.hard:
        print(f"error: {len(report.hard)} entries above the hard ceiling {args.hard}", file=sys.stderr)
        return EXIT_CEILING
    return EXIT_OK


def cmd_rerank(args) -> int:
    if not args.replay and not args.oracle_cmd:
        raise UsageError("--oracle-cmd is required unless --replay is given")
    cands = load_candidates(args.candidates)
    req = RerankRequest(args.query_id, args.query, cands, args.k, args.m)
    if args.replay:
        oracle = ReplayOracle(args.replay, args.k, len(cands))
        res = rerank(req, oracle, batch=args.batch)
    else:
        ext = external_oracle_for(req, args.oracle_cmd, args.timeout, args.retries)
        with ext:
            if args.record:
                with open(args.record, "w", encoding="utf-8") as fh:
                    res = rerank(req, RecordingOracle(ext, fh), batch=args.batch)
            else:
                res = rerank(req, ext, batch=args.batch)
    emit_result(res, args.out)
    doc = {
        "query_id": res.query_id,
        "oracle_calls": res.oracle_calls,
        "rounds": res.rounds,
        "top": [d.doc_id for d in res.ranking],
    }
    _emit(args, f"oracle_calls={res.oracle_calls} rounds={res.rounds} "
                f"top={','.join(d.doc_id for d in res.ranking)}\n", doc)
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        trace, doc = read_trace(args.trace)
    except OSError as exc:
        raise FormatError(f"cannot read {args.trace}: {exc.strerror}") from None
    t = _read_input(args.ground_truth)
    problems = verify_trace(doc, trace, t)
    for msg in problems:
        print(f"violation: {msg}", file=sys.stderr)
    _emit(args, "ok\n" if not problems else f"failed: {len(problems)} violation(s)\n",
          {"ok": not problems, "violations": problems})
    return EXIT_VERIFY if problems else EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "horses": cmd_horses,
    "bench": cmd_bench,
    "rerank": cmd_rerank,
    "verify": cmd_verify,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"tourney {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, InvalidTrace) as exc:
        print(f"tourney {args.command}: input error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (OracleError, ContradictoryEdge, NotTransitive) as exc:
        print(f"tourney {args.command}: oracle error: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except InvalidInput as exc:
        print(f"tourney {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception:
        log.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
