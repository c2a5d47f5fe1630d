"""Command-line interface: fit, simulate, diagnose, report, kde."""
from __future__ import annotations

import argparse
import configparser
import logging
import sys
from pathlib import Path

import numpy as np

from .diagnostics import DegenerateChainError, convergence_table
from .io import ingest, read_draws, read_manifest, write_draws, write_table
from .model import HYPER_NAMES, DataError, InvariantError, Link, PriorConfig
from .report import kde_ideal_points, summarize
from .runner import RunSettings, run
from .sampler import ANCHOR_MODES, DegenerateAnchorError
from .simulation import TRUTH_SOURCES, ScenarioConfig, run_scenario

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
CONFIG_SECTION = "bridgepoint"

log = logging.getLogger("bridgepoint")


class UsageError(Exception):
    pass


def _anchor_pair(text: str) -> tuple[str, str]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2 or not all(parts):
        raise argparse.ArgumentTypeError("expected neg_id,pos_id")
    return parts[0], parts[1]


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--link", choices=[lk.value for lk in Link], default="probit")
    p.add_argument("--chains", type=int, default=4)
    p.add_argument("--iters", type=int, default=5000)
    p.add_argument("--burn-in", type=int, default=None, help="default: half of --iters")
    p.add_argument("--thin", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--a", type=float, default=1.0, help="bridge-count prior shape a")
    p.add_argument("--b", type=float, default=9.0, help="bridge-count prior shape b")
    p.add_argument("--anchor-mode", choices=ANCHOR_MODES, default="pinned")
    p.add_argument("--workers", type=int, default=None, help="threads for chains (results do not depend on it)")


def _add_data_options(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--votes", type=Path, required=required, help="vote CSV")
    p.add_argument("--motions", type=Path, required=required, help="motion sidecar CSV (motion_id,group)")
    p.add_argument("--anchors", type=_anchor_pair, default=None, help="neg_id,pos_id")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bridgepoint", description=__doc__)
    parser.add_argument("--config", type=Path, default=None, help="key = value file; command-line flags win")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="run chains and write draws")
    _add_data_options(p)
    _add_run_options(p)
    p.add_argument("--out", type=Path, required=True, help="output directory for draw files")

    p = sub.add_parser("simulate", help="run a scenario study and write metric tables")
    _add_run_options(p)
    p.add_argument("--changers", type=int, default=0, help="number of planted changers (0 = no change)")
    p.add_argument("--legislators", type=int, default=30)
    p.add_argument("--group0", type=int, default=40)
    p.add_argument("--group1", type=int, default=80)
    p.add_argument("--datasets", type=int, default=3)
    p.add_argument("--scenario-seed", type=int, default=0)
    p.add_argument("--gen-link", choices=[lk.value for lk in Link], default="logit")
    p.add_argument("--truth", choices=TRUTH_SOURCES, default="fitted",
                   help="fitted: posterior means of a fit to a source dataset; direct: drawn parameters")
    p.add_argument("--baseline", action="store_true", help="also score the rank-interval baseline")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("diagnose", help="print R-hat / ESS table")
    p.add_argument("--draws", type=Path, required=True)
    p.add_argument("--blocks", default="beta0,beta1,hypers")
    p.add_argument("--out", type=Path, default=None, help="CSV path (default: stdout)")

    p = sub.add_parser("report", help="write the change report as JSON")
    p.add_argument("--draws", type=Path, required=True)
    _add_data_options(p)
    p.add_argument("--min-conditional", type=int, default=200)
    p.add_argument("--out", type=Path, default=None, help="JSON path (default: stdout)")

    p = sub.add_parser("kde", help="write ideal-point density tables")
    p.add_argument("--draws", type=Path, required=True)
    p.add_argument("--group", type=int, choices=(0, 1), default=None, help="default: both groups")
    p.add_argument("--bandwidth", type=float, default=None)
    p.add_argument("--grid", type=int, default=512)
    p.add_argument("--out", type=Path, required=True, help="output directory")
    return parser


def _read_config(path: Path) -> dict[str, str]:
    """``key = value`` lines, optionally under a [bridgepoint] header."""
    if not path.exists():
        raise UsageError(f"config file {path} not found")
    text = path.read_text()
    if not text.lstrip().startswith("["):
        text = f"[{CONFIG_SECTION}]\n" + text
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise UsageError(f"config file {path}: {exc}") from exc
    return {key.replace("-", "_"): raw for section in cp.sections() for key, raw in cp.items(section)}


def _convert(action: argparse.Action, key: str, raw: str):
    if action.nargs == 0:
        if raw.strip().lower() in ("1", "true", "yes", "on"):
            return True
        if raw.strip().lower() in ("0", "false", "no", "off"):
            return False
        raise UsageError(f"config key {key!r}: expected a boolean, got {raw!r}")
    try:
        value = action.type(raw) if action.type else raw
    except (ValueError, argparse.ArgumentTypeError) as exc:
        raise UsageError(f"config key {key!r}: {exc}") from exc
    if action.choices is not None and value not in action.choices:
        raise UsageError(f"config key {key!r} must be one of {list(action.choices)}")
    return value


def parse_args(argv) -> argparse.Namespace:
    """Parse flags; values from ``--config`` become defaults, so explicit flags win."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", type=Path, default=None)
    known, _ = pre.parse_known_args(argv)
    parser = build_parser()
    if known.config is not None:
        values = _read_config(known.config)
        subparsers = parser._subparsers._group_actions[0].choices
        used = set()
        for sub in subparsers.values():
            defaults = {}
            for action in sub._actions:
                if action.dest in values:
                    defaults[action.dest] = _convert(action, action.dest, values[action.dest])
                    # a required option supplied by the file must not trip argparse
                    action.required = False
                    used.add(action.dest)
            sub.set_defaults(**defaults)
        unknown = sorted(set(values) - used)
        if unknown:
            raise UsageError(f"config file {known.config}: unknown keys {', '.join(unknown)}")
    return parser.parse_args(argv)


def _settings(args) -> tuple[PriorConfig, RunSettings]:
    prior = PriorConfig(a=args.a, b=args.b, link=Link(args.link))
    try:
        settings = RunSettings(n_chains=args.chains, n_iter=args.iters, burn_in=args.burn_in,
                               thin=args.thin, seed=args.seed, anchor_mode=args.anchor_mode)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return prior, settings


def _ingest(args):
    data, report = ingest(args.votes, args.motions, anchors=args.anchors)
    print(report, file=sys.stderr)
    return data


def cmd_fit(args) -> None:
    prior, settings = _settings(args)
    data = _ingest(args)
    draws = run(data, prior, settings, max_workers=args.workers)
    anchors = [data.legislators[data.anchor_neg].id, data.legislators[data.anchor_pos].id]
    write_draws(draws, args.out, metadata={"anchors": anchors})
    print(f"wrote {draws.n_chains} x {draws.n_kept} draws to {args.out}")


def cmd_simulate(args) -> None:
    prior, settings = _settings(args)
    try:
        config = ScenarioConfig(
            n_legislators=args.legislators, n_group0=args.group0, n_group1=args.group1,
            link=Link(args.gen_link), n_changers=args.changers, n_datasets=args.datasets,
            seed=args.scenario_seed, truth_source=args.truth,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    result = run_scenario(config, settings, baseline=args.baseline, prior=prior)
    args.out.mkdir(parents=True, exist_ok=True)

    rates = result.error_rates()
    write_table([{"threshold": float(t), "fpr": float(f), "familywise": float(w)}
                 for t, f, w in zip(rates["threshold"], rates["fpr"], rates["familywise"])],
                args.out / "error_rates.csv")
    write_table([{"dataset": d, "legislator": i, "changed": int(t), "p_change": float(p)}
                 | ({"baseline": float(result.baseline[d][i])} if args.baseline else {})
                 for d, (ps, ts) in enumerate(zip(result.p_change, result.truth))
                 for i, (p, t) in enumerate(zip(ps, ts))],
                args.out / "scores.csv")
    if args.changers > 0:
        methods = ["p_change"] + (["baseline"] if args.baseline else [])
        rows, summary = [], []
        for m in methods:
            curve = result.pooled_roc(m)
            rows += [{"method": m, "fpr": float(f), "tpr": float(t)} for f, t in zip(curve.fpr, curve.tpr)]
            summary.append({"method": m, "auc": curve.auc})
        write_table(rows, args.out / "roc.csv")
        write_table(summary, args.out / "auc.csv")
        for s in summary:
            print(f"AUC {s['method']}: {s['auc']:.4f}")
    k = int(np.flatnonzero(np.isclose(rates["threshold"], 0.5))[0])
    print(f"threshold 0.5: FPR {rates['fpr'][k]:.4f}, familywise {rates['familywise'][k]:.4f}")


def cmd_diagnose(args) -> None:
    draws = _load_draws(args.draws)
    blocks = [b.strip() for b in args.blocks.split(",") if b.strip()]
    selectors = []
    for b in blocks:
        if b == "hypers":
            selectors += list(HYPER_NAMES)
        elif b in ("mu", "alpha", "beta0", "beta1", "zeta"):
            selectors += [f"{b}[{k}]" for k in range(getattr(draws, b).shape[2])]
        else:
            raise UsageError(f"unknown block {b!r}")
    try:
        rows = convergence_table(draws, selectors)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.out is not None:
        write_table(rows, args.out)
    else:
        print("parameter,rhat,ess,status")
        for r in rows:
            print(f"{r['parameter']},{r['rhat']:.4f},{r['ess']:.1f},{r['status']}")


def _load_draws(path: Path):
    try:
        return read_draws(path)
    except FileNotFoundError as exc:
        raise UsageError(f"{exc}; run `bridgepoint fit` first") from exc


def cmd_report(args) -> None:
    draws = _load_draws(args.draws)
    if args.anchors is None:
        saved = read_manifest(args.draws).get("metadata", {}).get("anchors")
        args.anchors = tuple(saved) if saved else None
    data = _ingest(args)
    if data.fingerprint() != draws.data_fingerprint:
        raise DataError("draws were produced from different data (fingerprint mismatch); refit first")
    text = summarize(draws, data, min_conditional=args.min_conditional).to_json()
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.write_text(text)


def cmd_kde(args) -> None:
    draws = _load_draws(args.draws)
    args.out.mkdir(parents=True, exist_ok=True)
    for g in (0, 1) if args.group is None else (args.group,):
        x, dens = kde_ideal_points(draws, g, args.bandwidth, args.grid)
        write_table([{"x": float(a), "density": float(d)} for a, d in zip(x, dens)], args.out / f"kde_group{g}.csv")


COMMANDS = {"fit": cmd_fit, "simulate": cmd_simulate, "diagnose": cmd_diagnose, "report": cmd_report, "kde": cmd_kde}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(f"bridgepoint: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"bridgepoint: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"bridgepoint: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DegenerateAnchorError, DegenerateChainError, InvariantError, FloatingPointError) as exc:
        print(f"bridgepoint: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
