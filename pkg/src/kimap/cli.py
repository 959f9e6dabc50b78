"""Command-line surface.

Subcommands::

    kimap init   --db DIR [--lambda N] [--tags N] [--seed N] [--force]
    kimap run    --db DIR --sessions N [--schedule FILE] [--strict]
    kimap game   {ind,forward,backward,ind2tag} DISTINGUISHER [--trials N] ...
    kimap cost   [--lambda N] [--tags N] [rate/cycle overrides]
    kimap lemma1 [--k N]

The seed comes from --seed, else the KIMAP_SEED environment variable, else
the fixed default 24301. Every command is deterministic under a fixed seed
and inputs. Exit codes: 0 success, 1 operational failure (with --strict,
rejections or desynchronized records), 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .bits import BitString, HashSpec, Prng
from .channel import (
    AdversaryAction,
    FaultSchedule,
    ScheduleError,
    run_schedule,
    transcript_line,
)
from .costs import BudgetLimits, CostParams, check_budget, compute_cost, findings_pass
from .games import GameConfig, GameError, lemma1_bijection_check, make_distinguisher, run_game
from .protocol import (
    BroadcastAuth,
    Challenge,
    ParameterError,
    ServerAuthCandidate,
    ServerState,
    TagAuth,
    TagNonce,
    TagState,
    keygen,
)
from .storage import DatabaseFormatError, load_database, load_master, save_database, save_master

DEFAULT_SEED = 24301

# CLI-owned PRNG stream ids, away from the ones keygen derives
_RUN_SERVER_STREAM = 1 << 40
_RUN_TAG_STREAM = (1 << 40) + 1


def _resolve_seed(value) -> int:
    if value is not None:
        return value
    env = os.environ.get("KIMAP_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise SystemExit(f"kimap: KIMAP_SEED must be an integer, got {env!r}")
    return DEFAULT_SEED


def _hash_spec(name: str, lam: int) -> HashSpec:
    return HashSpec.toy(lam) if name == "toy" else HashSpec.production(lam)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kimap", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--lambda", dest="lam", type=int, default=64, help="key width in bits")
        p.add_argument("--seed", type=int, default=None, help="PRNG seed (default: $KIMAP_SEED or 24301)")
        p.add_argument("--hash", choices=["production", "toy"], default="production")
        p.add_argument("--format", choices=["table", "structured"], default="table")

    p_init = sub.add_parser("init", help="provision a server database and master key")
    common(p_init)
    p_init.add_argument("--tags", type=int, default=3, help="number of tags to provision")
    p_init.add_argument("--db", required=True, help="directory for kimap.db and master.key")
    p_init.add_argument("--force", action="store_true", help="overwrite an existing database")

    p_run = sub.add_parser("run", help="run authentication sessions against the database")
    common(p_run)
    p_run.add_argument("--db", required=True)
    p_run.add_argument("--sessions", type=int, default=10)
    p_run.add_argument("--schedule", help="fault schedule file")
    p_run.add_argument("--strict", action="store_true",
                       help="exit 1 on any rejection or desynchronized record")
    p_run.add_argument("--hardened-scan", dest="hardened", action=argparse.BooleanOptionalAction,
                       default=True, help="tags scan every broadcast candidate (timing hardening)")

    p_game = sub.add_parser("game", help="run a privacy game and report the advantage")
    common(p_game)
    p_game.add_argument("definition", choices=["ind", "forward", "backward", "ind2tag"])
    p_game.add_argument("distinguisher")
    p_game.add_argument("--trials", type=int, default=1000)
    p_game.add_argument("--tags", type=int, default=2, help="tags per game world")
    p_game.add_argument("--e1", type=int, default=16)
    p_game.add_argument("--e2", type=int, default=16)
    p_game.add_argument("--r1", type=int, default=64)
    p_game.add_argument("--r2", type=int, default=64)
    p_game.add_argument("--rb", type=int, default=64)

    p_cost = sub.add_parser("cost", help="evaluate the session cost model")
    common(p_cost)
    p_cost.add_argument("--tags", type=int, default=200, help="batch size for serial backhaul")
    p_cost.add_argument("--hash-ops", type=int, default=4)
    p_cost.add_argument("--hash-cycles", type=int, default=33)
    p_cost.add_argument("--clock-hz", type=int, default=100_000)
    p_cost.add_argument("--t2r-bps", type=int, default=640_000)
    p_cost.add_argument("--r2t-bps", type=int, default=126_000)
    p_cost.add_argument("--serial-bps", type=int, default=20_000)
    p_cost.add_argument("--candidates", type=int, default=1)

    p_lemma = sub.add_parser("lemma1", help="exhaustive one-time-pad bijection check")
    common(p_lemma)
    p_lemma.add_argument("--k", type=int, default=8)
    p_lemma.add_argument("--mask", type=str, default=None,
                         help="fixed mask as hex:len (default: drawn from the seed)")

    return parser


# ---------------------------------------------------------------------------
# Schedule file parsing: one action per line,
#   <session_seq> <flight 1-4> <drop | replay N | replace hex:len...>
# ---------------------------------------------------------------------------

def parse_schedule(path: str) -> FaultSchedule:
    actions = []
    for line_no, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) < 3:
            raise ScheduleError(f"{path}:{line_no}: expected '<session> <flight> <action...>'")
        try:
            seq = int(fields[0])
            flight = int(fields[1])
        except ValueError:
            raise ScheduleError(f"{path}:{line_no}: session and flight must be integers") from None
        verb = fields[2]
        try:
            if verb == "drop":
                actions.append(AdversaryAction.drop(flight, seq))
            elif verb == "replay":
                actions.append(AdversaryAction.replay(flight, int(fields[3]), seq))
            elif verb == "replace":
                payload = _parse_payload(flight, fields[3:])
                actions.append(AdversaryAction.replace(flight, payload, seq))
            else:
                raise ScheduleError(f"unknown schedule action {verb!r}")
        except (ScheduleError, ValueError, IndexError) as exc:
            raise ScheduleError(f"{path}:{line_no}: {exc}") from None
    return FaultSchedule(actions)


def _parse_payload(flight: int, fields: list[str]):
    values = [BitString.from_text(f) for f in fields]
    if flight == 1 and len(values) == 1:
        return Challenge(values[0])
    if flight == 2 and len(values) == 1:
        return TagNonce(values[0])
    if flight == 3 and values and len(values) % 2 == 0:
        pairs = [ServerAuthCandidate(values[i], values[i + 1]) for i in range(0, len(values), 2)]
        return BroadcastAuth(tuple(pairs))
    if flight == 4 and len(values) == 1:
        return TagAuth(values[0])
    raise ScheduleError(f"wrong replacement field count for flight {flight}")


# ---------------------------------------------------------------------------
# Subcommands.
# ---------------------------------------------------------------------------

def _db_paths(db: str) -> tuple[Path, Path]:
    root = Path(db)
    return root / "kimap.db", root / "master.key"


def cmd_init(args) -> int:
    seed = _resolve_seed(args.seed)
    db_path, master_path = _db_paths(args.db)
    if (db_path.exists() or master_path.exists()) and not args.force:
        print(f"kimap: refusing to overwrite {db_path.parent} (use --force)", file=sys.stderr)
        return 2
    try:
        server, _tags = keygen(args.lam, args.tags, Prng(seed, 0))
    except Exception as exc:
        print(f"kimap: {exc}", file=sys.stderr)
        return 2
    db_path.parent.mkdir(parents=True, exist_ok=True)
    save_database(db_path, args.lam, server.records)
    save_master(master_path, server.master)
    for label in server.records:
        print(label)
    return 0


def cmd_run(args) -> int:
    seed = _resolve_seed(args.seed)
    db_path, master_path = _db_paths(args.db)
    try:
        lam, records = load_database(db_path)
        master = load_master(master_path)
        schedule = parse_schedule(args.schedule) if args.schedule else FaultSchedule([])
    except FileNotFoundError as exc:
        print(f"kimap: {exc}", file=sys.stderr)
        return 2
    except (DatabaseFormatError, ScheduleError) as exc:
        print(f"kimap: {exc}", file=sys.stderr)
        return 2
    if len(master.value) != lam:
        print(f"kimap: master key width {len(master.value)} != database lambda {lam}", file=sys.stderr)
        return 2

    spec = _hash_spec(args.hash, lam)
    server = ServerState(master=master, records=records, prng=Prng(seed, _RUN_SERVER_STREAM))
    tags = [TagState(key=rec.key_current, counter=rec.counter,
                     prng=Prng(seed, _RUN_TAG_STREAM + idx), hardened_scan=args.hardened)
            for idx, rec in enumerate(records.values())]

    transcripts = run_schedule(server, tags, schedule, args.sessions, spec)
    save_database(db_path, lam, server.records)

    for t in transcripts:
        print(transcript_line(t))
    accepted = sum(1 for t in transcripts if t.accepted)
    recovered = sum(1 for t in transcripts
                    if t.accepted and t.outcome_server.matched_slot == "previous")
    rejected = sum(1 for t in transcripts
                   if t.outcome_server is not None and not t.outcome_server.accepted)
    aborted = sum(1 for t in transcripts if t.outcome_server is None)
    desynced = sum(1 for rec in server.records.values() if rec.desynchronized)
    print(f"summary sessions={len(transcripts)} accepted={accepted} rejected={rejected} "
          f"aborted={aborted} recovered={recovered} desynced={desynced}")
    if args.strict and (rejected > 0 or desynced > 0):
        return 1
    return 0


def cmd_game(args) -> int:
    seed = _resolve_seed(args.seed)
    try:
        d = make_distinguisher(args.distinguisher)
    except ValueError as exc:
        print(f"kimap: {exc}", file=sys.stderr)
        return 2
    n = max(args.tags, 3) if args.definition == "ind2tag" else args.tags
    try:
        cfg = GameConfig(lam=args.lam, n=n, e1=args.e1, e2=args.e2,
                         r1=args.r1, r2=args.r2, rb=args.rb, trials=args.trials, seed=seed)
        result = run_game(args.definition, cfg, d, _hash_spec(args.hash, args.lam))
    except (ValueError, ParameterError, GameError) as exc:
        print(f"kimap: {exc}", file=sys.stderr)
        return 2
    if args.format == "structured":
        print(result.to_line())
    else:
        print(f"game       {result.definition}")
        print(f"strategy   {result.distinguisher}")
        print(f"trials     {result.trials}")
        print(f"wins       {result.wins} (rate {result.win_rate:.4f})")
        print(f"advantage  {result.advantage:.6f} (95% CI half-width {result.ci95:.6f})")
    return 0


def cmd_cost(args) -> int:
    try:
        params = CostParams(
            lambda_bits=args.lam,
            hash_cycles_per_block=args.hash_cycles,
            tag_clock_hz=args.clock_hz,
            t2r_rate_bps=args.t2r_bps,
            r2t_rate_bps=args.r2t_bps,
            serial_rate_bps=args.serial_bps,
            tag_hash_ops=args.hash_ops,
            candidates=args.candidates,
        )
    except ValueError as exc:
        print(f"kimap: {exc}", file=sys.stderr)
        return 2
    report = compute_cost(params, batch_tags=args.tags)
    findings = check_budget(report, BudgetLimits())
    if args.format == "structured":
        print(report.to_line())
        for f in findings:
            print(f"finding name={f.name} pass={'yes' if f.passed else 'no'} detail=\"{f.detail}\"")
    else:
        print(report.to_table())
        print()
        for f in findings:
            print(f"[{'PASS' if f.passed else 'FAIL'}] {f.name}: {f.detail}")
    print(f"budget {'pass' if findings_pass(findings) else 'fail'}")
    return 0


def cmd_lemma1(args) -> int:
    seed = _resolve_seed(args.seed)
    mask = None
    if args.mask is not None:
        try:
            mask = BitString.from_text(args.mask)
        except ValueError as exc:
            print(f"kimap: bad --mask: {exc}", file=sys.stderr)
            return 2
    try:
        report = lemma1_bijection_check(args.k, mask=mask, prng=Prng(seed, 0))
    except ValueError as exc:
        print(f"kimap: {exc}", file=sys.stderr)
        return 2
    print(report.to_line())
    if report.pairs is not None:
        for x, y in report.pairs:
            print(f"pair x={x} y={y}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"init": cmd_init, "run": cmd_run, "game": cmd_game,
                "cost": cmd_cost, "lemma1": cmd_lemma1}
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
