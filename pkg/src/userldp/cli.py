"""Command-line entry point: ``userldp <subcommand> [options]``."""
from __future__ import annotations

import argparse
import json
import math
import sys

from . import harness, theory, transcripts
from .channels import FlipChannel, HadamardResponse, OneHotFlip, verify_ldp
from .shuffle import InfeasibleBudget, amplified_epsilon, choose_local_budget, local_cap

LDP_TOL = 1e-9


def _common(top: bool) -> argparse.ArgumentParser:
    """Global flags; accepted before or after the subcommand.

    Only the top-level copy carries defaults so that a flag given before the
    subcommand is not overwritten by the subcommand's default.
    """
    p = argparse.ArgumentParser(add_help=False)
    d = (lambda v: v) if top else (lambda v: argparse.SUPPRESS)
    p.add_argument("--seed", type=int, default=d(0))
    p.add_argument("--config", default=d(None), help="flat key = value experiment file")
    p.add_argument("--out", default=d(None), help="output path (CSV for sweep)")
    p.add_argument("--preset", default=d(None), help="named experiment preset")
    p.add_argument("--jobs", type=int, default=d(1))
    p.add_argument("--json", action="store_true", default=d(False), help="emit JSON instead of text")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common(top=False)
    ap = argparse.ArgumentParser(prog="userldp", parents=[_common(top=True)],
                                 description="User-level LDP distribution estimation simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", parents=[common], help="one estimation run")
    est.add_argument("--k", type=int)
    est.add_argument("--m", type=int)
    est.add_argument("--n", type=int)
    est.add_argument("--epsilon", type=float)
    est.add_argument("--dist", default=None, help="uniform | two-point(q) | [p1, ..., pk]")
    est.add_argument("--algo", default="auto", choices=harness.ALGOS)
    est.add_argument("--variant", default=None, choices=["interactive", "noninteractive"])
    est.add_argument("--constants", default=None, choices=["experiment", "theory"])

    sw = sub.add_parser("sweep", parents=[common], help="run a config or preset grid")
    sw.add_argument("--no-timing", action="store_true", help="write runtime_ms as 0 (bit-stable CSV)")
    sw.add_argument("--scale", type=float, default=1.0, help="multiply n by this factor")

    sh = sub.add_parser("shuffle-budget", parents=[common], help="shuffle amplification calculator")
    sh.add_argument("--n", type=int, required=True)
    sh.add_argument("--delta", type=float, required=True)
    sh.add_argument("--eps-local", type=float, nargs="*", default=[])
    sh.add_argument("--eps-target", type=float, nargs="*", default=[])
    sh.add_argument("--k", type=int, default=2)
    sh.add_argument("--m", type=int, default=1)

    sub.add_parser("check-theory", parents=[common], help="oracle identities and LDP battery")

    vl = sub.add_parser("verify-ldp", parents=[common], help="exact privacy ratio of a channel")
    vl.add_argument("--channel", required=True,
                    choices=["flip", "onehot", "hr", "coin", "high_privacy", "large_m", "small_m",
                             "medium_m", "one_sample_hr", "all_sample_hr"])
    vl.add_argument("--epsilon", type=float, required=True)
    vl.add_argument("--k", type=int, default=4)
    vl.add_argument("--m", type=int, default=2)
    vl.add_argument("--d", type=int, default=4)
    vl.add_argument("--variant", default="interactive", choices=["interactive", "noninteractive"])
    vl.add_argument("--constants", default="experiment", choices=["experiment", "theory"])
    return ap


def _load_config(args, ap) -> harness.ExperimentConfig:
    base = {}
    if args.preset:
        if args.preset not in harness.PRESETS:
            ap.error(f"unknown preset {args.preset!r}")
        base = dict(harness.PRESETS[args.preset])
    try:
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                return harness.parse_config(fh.read(), base)
        if base:
            return harness.ExperimentConfig(**base)
    except harness.ConfigError as exc:
        ap.error(str(exc))
    return None


def cmd_estimate(args, ap) -> int:
    cfg = _load_config(args, ap)
    values = {} if cfg is None else vars(cfg).copy()
    for key in ("k", "n"):
        if getattr(args, key) is not None:
            values[key] = getattr(args, key)
    if args.m is not None:
        values["m"] = [args.m]
    if args.epsilon is not None:
        values["epsilon"] = [args.epsilon]
    if args.dist is not None:
        values["dist"] = args.dist
    if args.variant is not None:
        values["variant"] = args.variant
    if args.constants is not None:
        values["constants"] = args.constants
    values["algos"] = [args.algo]
    values["seeds"] = [args.seed]
    try:
        cfg = harness.ExperimentConfig(**values)
    except (harness.ConfigError, TypeError) as exc:
        ap.error(f"estimate needs --k --m --n --epsilon (or a preset/config): {exc}")
    rep = harness.run(replace_first(cfg))[0]
    if args.json:
        print(json.dumps(rep.as_dict(), indent=1))
    else:
        print(f"algo={rep.algo} regime={rep.regime} k={rep.k} m={rep.m} n={rep.n} "
              f"epsilon={rep.epsilon:g} seed={rep.seed}")
        print(f"tv_error={rep.tv_error:.6f} runtime_ms={rep.runtime_ms:.1f}")
        head = ", ".join(f"{v:.4f}" for v in rep.p_hat[:8])
        print(f"p_hat=[{head}{', ...' if rep.k > 8 else ''}]")
    return 0


def replace_first(cfg: harness.ExperimentConfig) -> harness.ExperimentConfig:
    """Single cell: the first m and epsilon of the grid."""
    cfg.m = cfg.m[:1]
    cfg.epsilon = cfg.epsilon[:1]
    return cfg


def cmd_sweep(args, ap) -> int:
    cfg = _load_config(args, ap)
    if cfg is None:
        ap.error("sweep needs --preset or --config")
    if args.scale != 1.0:
        cfg = cfg.scaled(args.scale)
    if args.no_timing:
        cfg.timing = False
    reports = harness.run(cfg, jobs=args.jobs)
    if args.out:
        harness.sweep_to_csv(reports, args.out)
    if args.json:
        print(harness.reports_to_json(reports))
        return 0
    summary = harness.summarize(reports)
    print(harness.summary_table(summary))
    for num in ("auto", "one_sample_hr"):
        ratios = harness.ratio_table(summary, num, "all_sample_hr")
        if ratios:
            print(f"{num}/all_sample_hr: " +
                  ", ".join(f"m={m} eps={e:g}: {r:.2f}" for (m, e), r in ratios.items()))
    return 0


def cmd_shuffle(args, ap) -> int:
    rows = []
    cap = local_cap(args.n, args.delta)
    for e in args.eps_local:
        try:
            rows.append({"epsilon_local": e, "amplified": amplified_epsilon(e, args.n, args.delta)})
        except ValueError as exc:
            rows.append({"epsilon_local": e, "error": str(exc)})
    for t in args.eps_target:
        try:
            b = choose_local_budget(t, args.delta, args.n, args.k, args.m)
            rows.append({"epsilon_target": t, "epsilon_local": b.epsilon_local,
                         "amplified": b.amplified, "branch": b.branch, "regime": b.regime})
        except (InfeasibleBudget, ValueError) as exc:
            rows.append({"epsilon_target": t, "error": str(exc)})
    if not rows:
        ap.error("give --eps-local and/or --eps-target")
    if args.json:
        print(json.dumps({"n": args.n, "delta": args.delta, "cap": cap, "rows": rows}, indent=1))
    else:
        print(f"n={args.n} delta={args.delta:g} local cap={cap:.4f}")
        for r in rows:
            print("  " + " ".join(f"{k}={v:.4f}" if isinstance(v, float) else f"{k}={v}"
                                  for k, v in r.items()))
    return 1 if any("error" in r for r in rows) else 0


def ldp_battery() -> list[tuple[str, float, float]]:
    """(name, measured ratio, claimed epsilon) for a fixed set of small channels."""
    out = []
    for eta in (0.1, math.log(3), 2.0):
        out.append((f"flip eta={eta:.3g}", verify_ldp(FlipChannel(eta)), eta))
    for d in (2, 5, 8):
        out.append((f"onehot d={d} eps=1.8", verify_ldp(OneHotFlip(d, 1.8)), 1.8))
    for a in (1, 3, 7, 15):
        for e in (0.5, 2.0):
            out.append((f"hr a={a} eps={e}", verify_ldp(HadamardResponse(a, e)), e))
    for variant in ("interactive", "noninteractive"):
        for m in (1, 2, 3, 4):
            r = transcripts.worst_ratio(transcripts.high_privacy_tables(2, m, 0.9, variant=variant))
            out.append((f"coin {variant} m={m}", r, 0.9))
    out.append(("high_privacy k=4 m=3", transcripts.worst_ratio(transcripts.high_privacy_tables(4, 3, 0.9)), 0.9))
    out.append(("large_m k=4 m=4", transcripts.worst_ratio(transcripts.large_m_tables(4, 4, 2.0)), 2.0))
    out.append(("small_m k=4 m=2", transcripts.worst_ratio(transcripts.small_m_tables(4, 2, 2.0)), 2.0))
    out.append(("medium_m k=4 m=3", transcripts.worst_ratio(transcripts.medium_m_tables(4, 3, 6.0)), 6.0))
    out.append(("one_sample_hr k=4 m=3", verify_ldp(transcripts.one_sample_hr_table(4, 3, 1.0)), 1.0))
    return out


def cmd_check_theory(args, ap) -> int:
    grid = theory.run_oracle_grid()
    battery = ldp_battery()
    ok_grid = all(r["ok"] for r in grid)
    ok_ldp = all(r <= e + LDP_TOL for _, r, e in battery)
    if args.json:
        print(json.dumps({"alpha_grid": [dict(r, z=list(r["z"])) for r in grid],
                          "ldp": [{"name": n, "ratio": r, "claimed": e} for n, r, e in battery],
                          "ok": ok_grid and ok_ldp}, indent=1))
    else:
        worst = max(abs(r["brute"] - r["closed"]) for r in grid)
        print(f"alpha identity: {len(grid)} grid points, max |brute - closed| = {worst:.2e} "
              f"{'PASS' if ok_grid else 'FAIL'}")
        for name, r, e in battery:
            print(f"ldp {name:<28} ratio={r:.6f} claimed={e:.6f} {'PASS' if r <= e + LDP_TOL else 'FAIL'}")
    return 0 if ok_grid and ok_ldp else 1


def cmd_verify_ldp(args, ap) -> int:
    e, k, m = args.epsilon, args.k, args.m
    kw = dict(preset=args.constants, variant=args.variant)
    c = args.channel
    if c == "flip":
        ratio = verify_ldp(FlipChannel(e))
    elif c == "onehot":
        ratio = verify_ldp(OneHotFlip(args.d, e))
    elif c == "hr":
        ratio = verify_ldp(HadamardResponse(k, e))
    elif c in ("coin", "high_privacy"):
        ratio = transcripts.worst_ratio(transcripts.high_privacy_tables(2 if c == "coin" else k, m, e, **kw))
    elif c == "large_m":
        ratio = transcripts.worst_ratio(transcripts.large_m_tables(k, m, e, **kw))
    elif c == "small_m":
        ratio = transcripts.worst_ratio(transcripts.small_m_tables(k, m, e, **kw))
    elif c == "medium_m":
        ratio = transcripts.worst_ratio(transcripts.medium_m_tables(k, m, e, **kw))
    elif c == "one_sample_hr":
        ratio = verify_ldp(transcripts.one_sample_hr_table(k, m, e))
    else:
        ratio = verify_ldp(transcripts.all_sample_hr_table(k, m, e))
    ok = ratio <= e + LDP_TOL
    if args.json:
        print(json.dumps({"channel": c, "epsilon": e, "ratio": ratio, "ok": ok}))
    else:
        print(f"{c}: max log-ratio {ratio:.9f} vs claimed {e:.9f} -> {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


COMMANDS = {"estimate": cmd_estimate, "sweep": cmd_sweep, "shuffle-budget": cmd_shuffle,
            "check-theory": cmd_check_theory, "verify-ldp": cmd_verify_ldp}


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    return COMMANDS[args.command](args, ap)


if __name__ == "__main__":
    sys.exit(main())
