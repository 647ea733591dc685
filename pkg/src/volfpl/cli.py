"""Command-line surface: run, adversary, trading, verify-bounds, hannan, probe.

Config comes from a JSON file (--config) with flag overrides; flags win.
Outputs are CSV/JSON files under --out.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .adversary import AdversaryConfig, prop1_run, prot_probability_callback
from .engine import selection_probabilities_exact, selection_probabilities_mc
from .harness import ExperimentConfig, hannan_check, resolve_game, run_experiment
from .perturbation import RngSpec
from .schedule import (
    GammaSchedule,
    ScheduleParams,
    choose_a,
    general_bound,
    mu_t,
    optimized_bound,
)
from .trading import PriceSeries, TradingConfig, fbm_generate, run_trading_experiment


def _parse_gamma(spec: str) -> dict:
    kind, _, value = spec.partition(":")
    if kind == "power":
        return {"kind": "power", "delta": float(value)}
    if kind == "const":
        return {"kind": "constant", "c": float(value)}
    raise argparse.ArgumentTypeError(f"expected power:DELTA or const:C, got {spec!r}")


def _schedule_flags(parser):
    parser.add_argument("--gamma", type=_parse_gamma, help="power:DELTA or const:C")
    parser.add_argument("--target-eps", type=float, dest="target_eps")
    parser.add_argument("--loss-mode", choices=["general", "nonnegative"], dest="loss_mode")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="volfpl")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="seeded experiment over a loss matrix")
    run.add_argument("--config", help="JSON experiment config")
    run.add_argument("--seed", type=int, help="single seed override")
    run.add_argument("--seeds", type=int, help="number of seeds (base 0)")
    run.add_argument("--regime", choices=["once", "per-step"])
    run.add_argument("--out")
    _schedule_flags(run)

    adv = sub.add_parser("adversary", help="adaptive lower-bound game against PROT")
    adv.add_argument("--eps", type=float, required=True)
    adv.add_argument("--horizon", type=int, default=30)
    adv.add_argument("--v0", type=float, default=1.0)
    adv.add_argument("--a", type=float, default=10.0)
    adv.add_argument("--out")
    _schedule_flags(adv)

    trd = sub.add_parser("trading", help="zero-sum volatility-trading experiment")
    trd.add_argument("--prices", help="price CSV (single `price` column)")
    trd.add_argument("--hurst", type=float, default=0.8)
    trd.add_argument("--steps", type=int, default=1024)
    trd.add_argument("--scale", type=float, default=1.0)
    trd.add_argument("--drift", type=float, default=0.0)
    trd.add_argument("--seed", type=int, default=0)
    trd.add_argument("--c", type=float, default=1.0)
    trd.add_argument("--gamma-const", type=float, default=0.01, dest="gamma_const")
    trd.add_argument("--v0", type=float, default=1.0)
    trd.add_argument("--target-eps", type=float, default=1.0, dest="target_eps")
    trd.add_argument("--out")

    vfy = sub.add_parser("verify-bounds", help="dual-form and bound-identity checks")
    vfy.add_argument("--draws", type=int, default=1000)
    vfy.add_argument("--seed", type=int, default=0)

    han = sub.add_parser("hannan", help="single-trajectory consistency trend")
    han.add_argument("--config", required=True)
    han.add_argument("--seed", type=int, default=0)
    han.add_argument("--out")

    prb = sub.add_parser("probe", help="exact vs Monte-Carlo selection probabilities")
    prb.add_argument("--cum", required=True, help="comma-separated cumulative losses")
    prb.add_argument("--eps", type=float, required=True)
    prb.add_argument("--samples", type=int, default=100_000)
    prb.add_argument("--seed", type=int, default=0)
    return parser


def _cmd_run(args) -> int:
    if args.config:
        config = ExperimentConfig.from_json(args.config)
    else:
        print("run: --config is required without defaults", file=sys.stderr)
        return 2
    if args.seed is not None:
        config.seeds = [args.seed]
    if args.seeds is not None:
        config.seeds = list(range(args.seeds))
    if args.regime:
        config.regime = args.regime
    if args.out:
        config.out = args.out
    if args.gamma:
        config.schedule["gamma"] = args.gamma
    if args.target_eps is not None:
        config.schedule.pop("a", None)
        config.schedule["target_eps"] = args.target_eps
        config.target_eps = args.target_eps
    if args.loss_mode:
        config.schedule["loss_mode"] = args.loss_mode
    report = run_experiment(config)
    print(json.dumps(report.to_json_dict(), indent=2, sort_keys=True))
    return 0


def _cmd_adversary(args) -> int:
    gamma_cfg = args.gamma or {"kind": "power", "delta": 1.0}
    a = choose_a(args.target_eps, args.loss_mode or "general") if args.target_eps else args.a
    params = ScheduleParams(
        a=a, num_experts=2, gamma=GammaSchedule.from_config(gamma_cfg),
        v0=args.v0, loss_mode=args.loss_mode or "general",
    )
    config = AdversaryConfig(eps=args.eps, v0=args.v0, horizon=args.horizon)
    trace = prop1_run(prot_probability_callback(params), config)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        trace.to_csv(os.path.join(args.out, "adversary_trace.csv"))
    print(json.dumps({
        "eps": args.eps,
        "fluc": trace.fluc[-1],
        "normalized_regret_floor": float(np.min(trace.norm_regret_lb)),
        "theory_floor": 0.5 * (1 - args.eps),
    }, indent=2))
    return 0


def _cmd_trading(args) -> int:
    if args.prices:
        prices = PriceSeries.from_csv(args.prices)
    else:
        prices = fbm_generate(args.hurst, args.steps, scale=args.scale,
                              drift=args.drift, seed=args.seed)
    params = ScheduleParams(
        a=choose_a(args.target_eps), num_experts=2,
        gamma=GammaSchedule.constant(args.gamma_const), v0=args.v0,
    )
    report = run_trading_experiment(TradingConfig(c=args.c, schedule=params),
                                    prices, target_eps=args.target_eps)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        report.to_csv(os.path.join(args.out, "trading_report.csv"))
    print(json.dumps({
        "learner_final_gain": report.learner_cum[-1],
        "expert1_final_gain": report.s1_cum[-1],
        "final_volume": report.volume[-1],
        "identity_residual": report.identity_residual,
        "defensive_bound": report.defensive_bound,
        "defensive_holds": bool(report.learner_cum[-1] >= report.defensive_bound),
        "fluc_violations": int(len(report.fluc_violations)),
    }, indent=2))
    return 0


def _cmd_verify_bounds(args) -> int:
    gen = RngSpec(args.seed, stream_id=77).generator()
    worst_mu, worst_bound = 0.0, 0.0
    for _ in range(args.draws):
        a = math.exp(gen.uniform(math.log(3.0), math.log(100.0)))
        n = int(gen.integers(1, 50))
        params0 = ScheduleParams(a=a, num_experts=n,
                                 gamma=GammaSchedule.constant(0.5))
        cap = min(params0.coef_A, 1.0 / params0.coef_A)
        g = gen.uniform(1e-6, 0.999 * cap)
        params = ScheduleParams(a=a, num_experts=n, gamma=GammaSchedule.constant(g))
        mu = mu_t(params, 1)
        al = 0.5 * (1 - math.log(1 / params.coef_A) / math.log(g))
        worst_mu = max(worst_mu, abs(a * g**al - mu) / mu)
        dv = gen.uniform(0.0, 10.0, 5)
        gb = general_bound(params, 5, dv)
        ob = optimized_bound(params, 5, dv)
        if ob > 0:
            worst_bound = max(worst_bound, abs(gb - ob) / ob)
    ok = bool(worst_mu <= 1e-10 and worst_bound <= 1e-9)
    print(json.dumps({
        "draws": args.draws,
        "max_mu_relative_gap": float(worst_mu),
        "max_bound_relative_gap": float(worst_bound),
        "pass": ok,
    }, indent=2))
    return 0 if ok else 1


def _cmd_hannan(args) -> int:
    config = ExperimentConfig.from_json(args.config)
    losses = resolve_game(config.game)
    params = ScheduleParams.from_config(config.schedule)
    report = hannan_check(losses, params, RngSpec(args.seed), regime=config.regime)
    if report["warning"]:
        print(f"warning: {report['warning']}", file=sys.stderr)
    out = json.dumps(report, indent=2)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "hannan.json"), "w") as fh:
            fh.write(out + "\n")
    print(out)
    return 0


def _cmd_probe(args) -> int:
    cum = np.array([float(x) for x in args.cum.split(",")])
    exact = selection_probabilities_exact(cum, args.eps)
    mc = selection_probabilities_mc(cum, args.eps, args.samples, RngSpec(args.seed))
    se = np.sqrt(np.maximum(exact * (1 - exact), 1e-12) / args.samples)
    print(json.dumps({
        "exact": exact.tolist(),
        "monte_carlo": mc.tolist(),
        "max_deviation_in_se": float(np.max(np.abs(exact - mc) / se)),
    }, indent=2))
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "adversary": _cmd_adversary,
    "trading": _cmd_trading,
    "verify-bounds": _cmd_verify_bounds,
    "hannan": _cmd_hannan,
    "probe": _cmd_probe,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    return _COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
