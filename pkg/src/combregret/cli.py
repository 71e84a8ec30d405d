"""Command line: ``run``, ``sweep``, ``bound`` and ``verify``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .action_sets import build_action_set
from .environments import build_adversary
from .harness import (
    OUTPUT_ENV, PlayerSpec, SweepConfig, default_output_dir, pseudo_regret, run_game, sweep,
    write_trace_csv,
)
from .oracles import OracleError, minimax_reference
from .osmd import regret_bound, tuned_eta


def _eta(text):
    return text if text == "auto" else float(text)


def _add_player_args(p):
    p.add_argument("--player", choices=["osmd", "exp2"])
    p.add_argument("--legendre", help="negentropy or inf:q=<q>")
    p.add_argument("--eta", type=_eta, help="learning rate or 'auto'")
    p.add_argument("--gamma", type=float, help="uniform exploration mix (exp2 bandit)")
    p.add_argument("--feedback", choices=["full", "semi", "bandit"])


def _player_spec(args, base=None) -> PlayerSpec:
    fields = {k: getattr(args, k) for k in ("player", "legendre", "eta", "gamma", "feedback")}
    merged = dict(base or {})
    merged.update({k: v for k, v in fields.items() if v is not None})
    return PlayerSpec(**merged)


def cmd_run(args) -> int:
    aset = build_action_set(args.set)
    adversary = build_adversary(args.adversary, aset)
    spec = _player_spec(args)
    trace = run_game(spec, adversary, aset, args.n, args.seed)
    report = pseudo_regret([trace], aset, adversary, spec.bound(aset, args.n))
    out = Path(args.out) if args.out else default_output_dir() / f"run_s{args.seed}.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    write_trace_csv(out, [(f"run-s{args.seed}", trace, report.curves[0])])
    if args.plot:
        from .plotting import plot_regret_curves

        plot_regret_curves(report, out.with_suffix(".png"),
                           title=f"{spec.descriptor()} vs {adversary.descriptor()}")
    line = f"regret {report.per_seed[0]:.6g}  eta {trace.meta['eta']:.6g}"
    if report.bound is not None:
        line += f"  bound {report.bound:.6g}"
    print(line)
    print(f"wrote {out}")
    return 0


def cmd_sweep(args) -> int:
    raw = {}
    if args.config:
        with open(args.config) as fh:
            raw = json.load(fh)
    for key in ("set", "n", "output_dir", "workers"):
        val = getattr(args, key)
        if val is not None:
            raw[key] = val
    if args.seeds is not None:
        raw["seeds"] = args.seeds
    if args.adversary:
        raw["adversaries"] = args.adversary
    if args.eta_grid:
        raw["eta_grid"] = args.eta_grid
    if args.eps_grid:
        raw["eps_grid"] = args.eps_grid
    if args.no_figures:
        raw["figures"] = False
    players = raw.get("players") or [{}]
    raw["players"] = [vars(_player_spec(args, p)) for p in players]
    missing = [k for k in ("set", "n", "seeds") if k not in raw]
    if missing:
        raise SystemExit(f"sweep: missing {', '.join(missing)} (give --config or flags)")
    config = SweepConfig.from_dict(raw)
    rows = sweep(config)
    out = Path(config.output_dir) if config.output_dir else default_output_dir()
    for r in rows:
        flag = "" if r["bound_satisfied"] is None else f"  within bound: {r['bound_satisfied']}"
        print(f"{r['cell_id']}  {r['player']:<24} {r['adversary']:<20} eta {r['eta']:.4g}  "
              f"regret {r['mean_regret']:.4g} +/- {r['stderr']:.2g}{flag}")
    print(f"wrote {out / 'summary.csv'}")
    return 0


def cmd_bound(args) -> int:
    m, d, n, q = args.m, args.d, args.n, args.q
    rows = []
    if d > m:
        rows.append(("negentropy", tuned_eta("T3", m, d, n), regret_bound("T3", m, d, n)))
    rows.append((f"inf:q={q:g}", tuned_eta("T5", m, d, n, q), regret_bound("T5", m, d, n, q)))
    print(f"m={m} d={d} n={n}")
    for name, eta, bound in rows:
        print(f"  {name:<12} eta {eta:.6g}  regret bound {bound:.6g}")
    try:
        print(f"  minimax lower level 0.02 m sqrt(dn) = {minimax_reference(m, d, n):.6g}")
    except OracleError:
        pass
    return 0


def cmd_verify(args) -> int:
    from .checks import run_checks

    results = run_checks(args.check)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name:<22} {detail}")
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["check", "passed", "detail"])
            for name, ok, detail in results:
                w.writerow([name, "true" if ok else "false", detail])
    return 0 if all(ok for _, ok, _ in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="combregret",
        description="Online combinatorial optimisation: OSMD and Exp2 games, bounds and checks.",
        epilog=f"Default output directory: ${OUTPUT_ENV} or ./results",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="play a single game and write its trace CSV")
    p.add_argument("--set", required=True, help="e.g. mset:d=8,m=2")
    p.add_argument("--adversary", required=True, help="alternating | epsskew:eps=.. | alpha:eps=..,alpha=.. | iid | file:<csv>")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="trace CSV path")
    p.add_argument("--plot", action="store_true", help="also write a PNG of the regret curve")
    _add_player_args(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a grid of games and write per-cell and summary CSVs")
    p.add_argument("--config", help="JSON file with the same keys as the flags")
    p.add_argument("--set")
    p.add_argument("--adversary", action="append", help="repeatable")
    p.add_argument("--n", type=int)
    p.add_argument("--seeds", type=int, help="use seeds 0..k-1")
    p.add_argument("--eta-grid", type=float, nargs="+")
    p.add_argument("--eps-grid", type=float, nargs="+")
    p.add_argument("--output-dir")
    p.add_argument("--workers", type=int)
    p.add_argument("--no-figures", action="store_true")
    _add_player_args(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bound", help="print tuned learning rates and regret bounds")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--q", type=float, default=2.0)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("verify", help="run the oracle checks; exit status 1 on any failure")
    p.add_argument("--check", action="append", help="run only this check (repeatable)")
    p.add_argument("--out", help="write pass/fail CSV here")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
