"""Operator command line: run recipes offline, plot, serve, inspect.

Exit codes are part of the contract:

    0  success
    2  usage error (bad arguments)
    3  recipe parse error
    4  recipe validation error (hard safety violation)
    5  solver instability
    6  configuration error
    7  data error (missing/malformed files, unknown ids)
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import market
from .config import (
    ReactorConfig,
    load_config,
    reference_config,
    reference_config_text,
)
from .discovery import analyze_session, render_timeline_table
from .errors import (
    AlpsimError,
    ConfigError,
    RecipeParseError,
    RecipeValidationError,
    SolverInstabilityError,
    UnknownIdError,
)
from .recipe import parse_recipe, total_duration
from .solver import ReactorState, SolverOptions, run_recipe
from .store import ExperimentStore
from .telemetry import build_narrative, write_snapshots_tsv, write_trace_tsv

EXIT_PARSE = 3
EXIT_VALIDATION = 4
EXIT_SOLVER = 5
EXIT_CONFIG = 6
EXIT_DATA = 7

REFERENCE_IDS = ("run1", "run2")


def _load_config_arg(value: str) -> ReactorConfig:
    if value in REFERENCE_IDS:
        return reference_config(value)
    path = Path(value)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    return load_config(path.read_text())


def _cmd_run(args) -> int:
    config = _load_config_arg(args.config)
    recipe_text = Path(args.recipe).read_text()
    recipe = parse_recipe(recipe_text)

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    state_path = Path(args.state) if args.state else outdir / "state.json"
    if state_path.exists():
        state = ReactorState.load(state_path)
    else:
        state = ReactorState.initial(config)

    options = SolverOptions(snapshot_interval=args.snapshot_interval)
    state, trace = run_recipe(state, recipe, config, options)
    narrative = build_narrative(trace, config.soft_pressure_limit)

    write_trace_tsv(trace, outdir / "trace.tsv")
    (outdir / "narrative.txt").write_text(narrative.text)
    if trace.snapshots is not None:
        write_snapshots_tsv(trace, outdir / "snapshots.tsv")
    state.save(state_path)

    duration = total_duration(recipe)
    print(f"recipe duration: {duration:g} s")
    print(f"reactor clock: {state.time:g} s")
    print(f"net mass change: {narrative.total_mass_change:.2g} ng/cm^2")
    print(f"wrote {outdir / 'trace.tsv'}")
    return 0


def _cmd_plot(args) -> int:
    from .plots import render_report

    config = _load_config_arg(args.config) if args.config else None
    if args.trace is None and args.snapshots is None:
        print("error: give --trace and/or --snapshots", file=sys.stderr)
        return 2
    if args.snapshots is None:
        print("warning: no snapshots given, sensor panels only", file=sys.stderr)
    written = render_report(
        trace_path=args.trace,
        snapshots_path=args.snapshots,
        outdir=args.outdir,
        config=config,
    )
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    configs = {rid: reference_config(rid) for rid in REFERENCE_IDS}
    if args.config:
        configs["custom"] = _load_config_arg(args.config)
    data_dir = args.data_dir or os.environ.get("ALPSIM_DATA_DIR", "alpsim-data")
    port = args.port if args.port is not None else int(os.environ.get("ALPSIM_PORT", "8000"))
    app = create_app(configs, data_dir)
    uvicorn.run(app, host=args.host, port=port, log_level="warning")
    return 0


def _cmd_config(args) -> int:
    if args.config_cmd == "validate":
        load_config(Path(args.path).read_text())
        print("configuration ok")
        return 0
    text = reference_config_text(args.run)
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_market(args) -> int:
    rule = market.MarketRule(frozenset(args.letters))
    if args.market_cmd == "query":
        answer = market.market_query(args.word, rule)
        print("yes" if answer else "no")
        return 0
    if args.market_cmd == "stats":
        words = market.load_wordlist(args.wordlist)
        stats = market.corpus_stats(words, rule)
        print(f"words: {stats.word_count}")
        print(f"p_reject: {stats.p_reject:.4f}")
        for letter, prob in stats.letter_probability.items():
            print(f"P(contains {letter}): {prob:.4f}")
        return 0
    if args.market_cmd == "score":
        hypothesis = market.LetterHypothesis(frozenset(args.claim))
        truth = market.MarketRule(frozenset(args.truth))
        print(f"{market.score_hypothesis(hypothesis, truth):g}")
        return 0
    dest = args.dest or "wordlist.10000"
    path = market.fetch_wordlist(dest, url=args.url)
    print(f"wrote {path}")
    return 0


def _cmd_timeline(args) -> int:
    data_dir = args.data_dir or os.environ.get("ALPSIM_DATA_DIR", "alpsim-data")
    store = ExperimentStore(data_dir)
    timeline, tags = analyze_session(store, args.session)
    if args.json:
        print(json.dumps({"timeline": timeline.as_dict(), "tags": tags.as_dict()}, indent=2))
    else:
        sys.stdout.write(render_timeline_table(timeline, tags))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="alpsim", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute a recipe offline")
    p.add_argument("--config", required=True, help="config file path, or run1/run2")
    p.add_argument("--recipe", required=True, help="recipe text file")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--state", default=None, help="reactor state file (default OUT/state.json)")
    p.add_argument("--snapshot-interval", type=float, default=0.5,
                   help="full-field snapshot cadence in s, 0 disables")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("plot", help="render trace/snapshot exports to figures")
    p.add_argument("--trace", default=None)
    p.add_argument("--snapshots", default=None)
    p.add_argument("--outdir", default="figures")
    p.add_argument("--config", default=None, help="config for geometry/sensor markers")
    p.set_defaults(func=_cmd_plot)

    p = sub.add_parser("serve", help="run the experiment HTTP service")
    p.add_argument("--config", default=None, help="extra config file served as id 'custom'")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=None, help="default $ALPSIM_PORT or 8000")
    p.add_argument("--data-dir", default=None, help="default $ALPSIM_DATA_DIR or ./alpsim-data")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("config", help="validate or export configurations")
    csub = p.add_subparsers(dest="config_cmd", required=True)
    v = csub.add_parser("validate")
    v.add_argument("path")
    e = csub.add_parser("export-reference")
    e.add_argument("run", choices=REFERENCE_IDS)
    e.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_config)

    p = sub.add_parser("market", help="word-market tools")
    msub = p.add_subparsers(dest="market_cmd", required=True)
    q = msub.add_parser("query")
    q.add_argument("word")
    q.add_argument("--letters", default="mp")
    s = msub.add_parser("stats")
    s.add_argument("wordlist")
    s.add_argument("--letters", default="mp")
    sc = msub.add_parser("score")
    sc.add_argument("--claim", required=True)
    sc.add_argument("--truth", default="mp")
    sc.add_argument("--letters", default="mp")
    f = msub.add_parser("fetch-wordlist")
    f.add_argument("--dest", default=None)
    f.add_argument("--url", default=market.WORDLIST_URL)
    f.add_argument("--letters", default="mp")
    p.set_defaults(func=_cmd_market)

    p = sub.add_parser("timeline", help="summarize a stored session")
    p.add_argument("--data-dir", default=None)
    p.add_argument("--session", type=int, required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_timeline)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RecipeParseError as e:
        print(f"recipe parse error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except RecipeValidationError as e:
        print(f"recipe validation error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except SolverInstabilityError as e:
        print(f"solver aborted: {e}", file=sys.stderr)
        return EXIT_SOLVER
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (UnknownIdError, FileNotFoundError, ValueError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except AlpsimError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
