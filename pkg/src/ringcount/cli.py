"""Operator entry point.

Subcommands: simulate (in-process tally), node (one TCP participant),
verify (transcript vs seeded re-run and oracle), attack (collusion
discrete-log attack), probe (Jacobi parity eavesdropper).

Exit codes: 0 success, 1 verification mismatch, 2 usage/config error,
3 protocol fault, 4 transport fault.
"""

import argparse
import sys
from itertools import zip_longest

from . import analysis, transport
from .analysis import collusion_attack, jacobi_probe, oracle_count
from .node import run_node
from .params import BucketParams, UnsatisfiableError
from .protocol import ProtocolFault, run_tally
from .report import format_report, render_histogram, write_counts_tsv
from .scenario import ConfigError, load_config
from .transport import (MalformedLineError, Transcript, TransportFault,
                        load_transcript, parse_roster)

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_USAGE = 2
EXIT_PROTOCOL = 3
EXIT_TRANSPORT = 4


def _params_from_transcript(transcript: Transcript) -> dict[int, BucketParams]:
    """Recover the public per-bucket parameters from the first call leg."""
    legs = transcript.legs()
    if not legs:
        raise MalformedLineError("empty transcript")
    ring_size = legs[0].messages[0].payload[1]
    out = {}
    for m in legs[0].body():
        if m.kind != transport.R1:
            raise MalformedLineError("first leg does not carry R1 lines")
        p, q, x, _ = m.payload
        out[m.bucket_id] = BucketParams.from_primes(m.bucket_id, p, q, x, ring_size)
    return out


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    result, transcript = run_tally(cfg.build_states(), cfg.bucket_count,
                                   cfg.protocol_config(args.paper_faithful))
    transcript.persist(args.transcript)
    print(format_report(result, cfg), end="")
    if args.report:
        write_counts_tsv(result, args.report)
    if args.figure:
        render_histogram(result, args.figure, cfg)
    if result.faults:
        return EXIT_PROTOCOL
    return EXIT_OK


def cmd_node(args) -> int:
    cfg = load_config(args.config)
    roster = parse_roster(args.roster)
    if args.index not in roster:
        print(f"index {args.index} not in roster", file=sys.stderr)
        return EXIT_USAGE
    transcript = Transcript()
    counts = run_node(roster, args.index, cfg,
                      paper_faithful=args.paper_faithful,
                      timeout=args.timeout, transcript=transcript)
    if args.transcript:
        transcript.persist(args.transcript)
    for b in sorted(counts):
        print(f"COUNT {b} {counts[b]}")
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = load_config(args.config)
    given = load_transcript(args.transcript)
    _, expected = run_tally(cfg.build_states(), cfg.bucket_count,
                            cfg.protocol_config(args.paper_faithful))

    mismatched: set[int] = set()
    structural = False
    for a, b in zip_longest(given.entries, expected.entries):
        if a == b:
            continue
        bucket = (a or b).message.bucket_id
        if bucket is None:
            structural = True
        else:
            mismatched.add(bucket)

    announced = {e.message.bucket_id: e.message.payload[0]
                 for e in given.entries if e.message.kind == transport.RESULT}
    failed = []
    for b in range(1, cfg.bucket_count + 1):
        expected_count = oracle_count(cfg.values, b)
        problems = []
        if structural:
            problems.append("transcript structure differs from seeded re-run")
        if b in mismatched:
            problems.append("replayed accumulators differ")
        if announced.get(b) != expected_count:
            problems.append(f"announced {announced.get(b)} != oracle {expected_count}")
        if problems:
            failed.append(b)
            print(f"FAIL {b} " + "; ".join(problems))
        else:
            print(f"PASS {b}")
    return EXIT_MISMATCH if failed else EXIT_OK


def _parse_indices(text: str) -> set[int]:
    try:
        return {int(t) for t in text.split(",") if t}
    except ValueError as exc:
        raise ConfigError(f"bad index list {text!r}") from exc


def cmd_attack(args) -> int:
    transcript = load_transcript(args.transcript)
    params = _params_from_transcript(transcript)
    colluders = _parse_indices(args.colluders)
    cfg = load_config(args.scenario) if args.scenario else None
    buckets = [args.bucket] if args.bucket else sorted(params)
    for b in buckets:
        if b not in params:
            raise ConfigError(f"bucket {b} not present in the transcript")
        colluder_bits = None
        if cfg is not None:
            colluder_bits = {i: cfg.member_bits(i).get(b, False) for i in colluders}
        outcome = collusion_attack(transcript, colluders, args.target,
                                   params[b], args.budget,
                                   colluder_bits=colluder_bits)
        line = f"bucket {b}: target {args.target} {outcome.inferred_bit} " \
               f"(work {outcome.work})"
        if cfg is not None:
            truth = "member" if cfg.member_bits(args.target).get(b, False) \
                else "nonmember"
            verdict = "correct" if outcome.inferred_bit == truth else (
                "inconclusive" if outcome.inferred_bit == "inconclusive" else "WRONG")
            line += f" truth={truth} [{verdict}]"
        print(line)
    return EXIT_OK


def cmd_probe(args) -> int:
    transcript = load_transcript(args.transcript)
    params = _params_from_transcript(transcript)
    buckets = [args.bucket] if args.bucket else sorted(params)
    for b in buckets:
        if b not in params:
            raise ConfigError(f"bucket {b} not present in the transcript")
        hit = jacobi_probe(transcript, params[b])
        if hit is None:
            print(f"bucket {b}: inconclusive")
        else:
            print(f"bucket {b}: first member is participant {hit}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ringcount",
        description="Secure counting over a ring of modular exponentiations")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a full tally in-process")
    p.add_argument("config")
    p.add_argument("-t", "--transcript", default="transcript.txt")
    p.add_argument("--report", help="write per-bucket counts as TSV")
    p.add_argument("--figure", help="write a bucket-occupancy histogram image")
    p.add_argument("--paper-faithful", action="store_true",
                   help="drop the Jacobi +1 base constraint")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("node", help="run one networked participant")
    p.add_argument("roster")
    p.add_argument("index", type=int)
    p.add_argument("config")
    p.add_argument("-t", "--transcript", help="record sent legs to this file")
    p.add_argument("--timeout", type=float, default=30.0)
    p.add_argument("--paper-faithful", action="store_true")
    p.set_defaults(func=cmd_node)

    p = sub.add_parser("verify", help="check a transcript against a seeded re-run")
    p.add_argument("transcript")
    p.add_argument("config")
    p.add_argument("--paper-faithful", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("attack", help="collusion attack on a public transcript")
    p.add_argument("transcript")
    p.add_argument("--colluders", required=True, help="comma-separated indices")
    p.add_argument("--target", type=int, required=True)
    p.add_argument("--budget", type=int, default=1 << 20,
                   help="brute-force discrete-log step budget")
    p.add_argument("--config", dest="scenario",
                   help="scenario file for ground-truth comparison")
    p.add_argument("--bucket", type=int)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("probe", help="Jacobi parity eavesdropper diagnostic")
    p.add_argument("transcript")
    p.add_argument("--bucket", type=int)
    p.set_defaults(func=cmd_probe)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, MalformedLineError, FileNotFoundError,
            analysis.MissingDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ProtocolFault, UnsatisfiableError) as exc:
        print(f"protocol fault: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL
    except (TransportFault, TimeoutError) as exc:
        print(f"transport fault: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT


if __name__ == "__main__":
    sys.exit(main())
