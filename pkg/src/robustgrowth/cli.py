"""Command line: ``robustgrowth {solve,classify,simulate,verify,rank-demo}``.

Exit codes: 0 on success, 1 on invalid input or failed criteria, 2 on a
numerical failure.
"""

import argparse
import sys
from pathlib import Path

from .config import load_config, write_json
from .errors import NumericalError, RobustGrowthError, ValidationError

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2

COMMANDS = ("solve", "classify", "simulate", "verify", "rank-demo")


def build_parser():
    parser = argparse.ArgumentParser(prog="robustgrowth",
                                     description="Robust growth rates and optimal strategies.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="config file or bundled preset name")
    parser.add_argument("--out", default=".", help="output directory (created if missing)")
    parser.add_argument("--seed", type=_nonneg_int)
    parser.add_argument("--grid-level", type=_pos_int, help="solver element index")
    parser.add_argument("--dt", type=_pos_float)
    parser.add_argument("--horizon", type=_pos_float)
    parser.add_argument("--paths", type=_pos_int)
    parser.add_argument("--quiet", action="store_true")
    return parser


def _pos_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _nonneg_int(s):
    v = int(s)
    if v < 0:
        raise argparse.ArgumentTypeError("must be a nonnegative integer")
    return v


def _pos_float(s):
    v = float(s)
    if not v > 0 or v == float("inf"):
        raise argparse.ArgumentTypeError("must be a positive finite number")
    return v


def _output_dir(path):
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise ValidationError(f"--out: cannot create {out}: {err}") from err
    probe = out / ".write_probe"
    try:
        probe.write_text("")
        probe.unlink()
    except OSError as err:
        raise ValidationError(f"--out: {out} is not writable") from err
    return out


def _report_doc(cfg, report):
    doc = report.to_dict()
    doc["config"] = cfg["name"]
    return doc


def cmd_solve(args, cfg, out, say):
    from .pipeline import is_rank, solve_config, strategy_table, write_strategy_csv
    from .rank import strategy_table as rank_table

    gen, report = solve_config(cfg, args.grid_level)
    write_json(out / "report.json", _report_doc(cfg, report), "report")
    if is_rank(cfg):
        rank_table(gen, len(cfg["rank"]["sigmas"]), path=out / "strategy.csv")
    else:
        write_strategy_csv(out / "strategy.csv", *strategy_table(gen.model, gen))
    say(f"{report.classification} lambda={report.lam}")
    return EXIT_OK


def cmd_classify(args, cfg, out, say):
    from .pipeline import classify_config

    report = classify_config(cfg, args.grid_level)
    write_json(out / "report.json", _report_doc(cfg, report), "report")
    say(f"{report.classification} lambda={report.lam}")
    return EXIT_OK


def cmd_simulate(args, cfg, out, say):
    from .pipeline import simulation_runs

    summary, _ = simulation_runs(cfg, out=out, seed=args.seed, dt=args.dt, horizon=args.horizon,
                                 paths=args.paths)
    write_json(out / "summary.json", summary, "simulate")
    for run in summary["runs"]:
        g = run["growth"]
        say(f"{run['drift']}: exploded={run['exploded']} growth={g.get('ci_center')} "
            f"+/- {g.get('ci_half_width')}")
    return EXIT_OK


def cmd_verify(args, cfg, out, say):
    from .acceptance import verify_document

    doc = verify_document(args.config, seed=args.seed, on_result=lambda r: say(r.line()))
    write_json(out / "verify.json", doc, "verify")
    return EXIT_OK if doc["all_passed"] else EXIT_INVALID


def cmd_rank_demo(args, cfg, out, say):
    from .pipeline import is_rank, rank_demo

    if not is_rank(cfg):
        raise ValidationError("rank: rank-demo needs a configuration with a rank block")
    doc, _, _ = rank_demo(cfg, out=out, grid_level=args.grid_level, seed=args.seed)
    write_json(out / "rank_demo.json", doc, "rank_demo")
    say(f"lambda ranked={doc['lambda_ranked']} simplex={doc['lambda_simplex']} "
        f"theta market exploded={doc['theta_market']['exploded']}")
    return EXIT_OK


HANDLERS = {"solve": cmd_solve, "classify": cmd_classify, "simulate": cmd_simulate,
            "verify": cmd_verify, "rank-demo": cmd_rank_demo}


def main(argv=None):
    args = build_parser().parse_args(argv)

    def say(msg):
        if not args.quiet:
            print(msg)

    try:
        cfg = load_config(args.config)
        out = _output_dir(args.out)
        return HANDLERS[args.command](args, cfg, out, say)
    except ValidationError as err:
        print(f"{type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as err:
        print(f"{type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    except RobustGrowthError as err:
        print(f"{type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
