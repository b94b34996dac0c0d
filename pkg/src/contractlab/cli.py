"""Command-line interface.

Exit codes: 0 on success, 1 on invalid input or usage, 2 when a search
exceeds its resource cap.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from . import experiments as ex
from .bounded import DEFAULT_CAP, bounded_grid, certified_opt, opt_over_set
from .combinatorial import CombinatorialType, critical_values_comb, make_type, opt_linear_comb
from .errors import InstanceError, ResourceCapError
from .io import dumps, load
from .linear import critical_values, opt_linear, opt_linear_grid
from .menus import DEFAULT_MENU_CAP, opt_menu
from .model import to_rational
from .online import ftl_run, regret_summary
from .pdim import ShatterInstance, bitmask_shatter_instance, verify_shattering
from .spaces import BoxGrid, ExplicitSpace


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _fraction(text: str) -> Fraction:
    try:
        return to_rational(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _fraction_list(text: str) -> list[Fraction]:
    return [_fraction(x) for x in text.split(",") if x.strip()]


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")
    else:
        print(text)


def _need(args, name: str):
    value = getattr(args, name, None)
    if value is None:
        raise UsageError(f"--{name} is required here")
    return value


def _sweep(args, default: Sequence[Fraction]) -> tuple[Fraction, ...]:
    return tuple(args.eps) if args.eps else tuple(default)


# -- commands ---------------------------------------------------------------

def cmd_validate(args) -> int:
    inst = load(_need(args, "input"))
    print(f"ok: {len(inst.types)} types, {inst.rewards.m} outcomes")
    return 0


def cmd_gen(args) -> int:
    params = {
        "eps": args.eps[0] if args.eps else None,
        "delta": args.delta,
        "K": args.K,
        "m": args.m,
        "n": args.n,
        "z": args.z,
        "alphas": args.alphas,
        "seed": args.seed,
    }
    inst = ex.gen_construction(args.construction, {k: v for k, v in params.items() if v is not None})
    _emit(dumps(inst), args.out)
    return 0


def cmd_critical(args) -> int:
    inst = load(_need(args, "input"))
    lines = []
    for theta in inst.types:
        lines.append(" ".join(str(b) for b in critical_values(theta, inst.rewards).breakpoints))
    _emit("\n".join(lines), args.out)
    return 0


def _load_combinatorial(path: str) -> tuple[list[CombinatorialType], list[Fraction] | None]:
    """``{"rewards": [0, R], "types": [{"reward": ..., "q": [...], "cost": ..., "w": [...]}], "weights": [...]}``."""
    try:
        data = json.loads(Path(path).read_text())
        rewards = [to_rational(str(v)) for v in data.get("rewards", [0, 1])]
        types = [
            make_type(t.get("reward", "additive"), [str(x) for x in t["q"]],
                      t.get("cost", "additive"), [str(x) for x in t["w"]], rewards)
            for t in data["types"]
        ]
        weights = [to_rational(str(w)) for w in data["weights"]] if data.get("weights") else None
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise InstanceError(f"bad combinatorial instance: {exc}") from exc
    if not types:
        raise InstanceError("no types")
    if weights is not None and (len(weights) != len(types) or sum(weights) != 1 or min(weights) < 0):
        raise InstanceError("weights must be one nonnegative number per type, summing to 1")
    return types, weights


def cmd_learn(args) -> int:
    if args.learner == "comb":
        types, weights = _load_combinatorial(_need(args, "input"))
        weights = weights or [Fraction(1, len(types))] * len(types)
        for k, theta in enumerate(types):
            crit = critical_values_comb(theta)
            print(f"type {k}: critical values {' '.join(str(c) for c in crit) or '-'}")
        lc, value = opt_linear_comb(types, weights)
        print(f"alpha {lc.alpha} value {value}")
        return 0

    inst = load(_need(args, "input"))
    D, r = inst.distribution, inst.rewards
    if args.learner == "linear":
        if args.mode in (None, "critical"):
            lc, value = opt_linear(D, r)
        elif args.mode == "grid":
            lc, value = opt_linear_grid(D, r, _need_eps(args))
        else:
            raise UsageError("linear mode must be critical or grid")
        print(f"alpha {lc.alpha} value {value}")
        return 0
    if args.learner == "bounded":
        eps = _need_eps(args)
        cap = args.cap or DEFAULT_CAP
        mode = args.mode or "grid"
        if mode == "box":
            t, value = opt_over_set(D, BoxGrid(r.m, eps), r)
        elif mode == "grid":
            t, value = opt_over_set(D, bounded_grid(r, eps, cap=cap), r)
        elif mode == "certified":
            t, value = certified_opt(D, bounded_grid(r, eps, cap=cap, lazy=True), r, rho=eps)
        else:
            raise UsageError("bounded mode must be grid, box or certified")
        print(f"contract {' '.join(str(v) for v in t)} value {value}")
        return 0
    if args.learner == "menu":
        K = args.K or 2
        S = ExplicitSpace(inst.contracts) if inst.contracts else BoxGrid(r.m, _need_eps(args))
        menu, value = opt_menu(D, r, K, S, cap=args.cap or DEFAULT_MENU_CAP)
        single, single_value = opt_over_set(D, S, r)
        for t in menu.contracts:
            print("contract " + " ".join(str(v) for v in t))
        print(f"value {value}")
        # second baseline: the best single contract from the same set
        print(f"best single contract {' '.join(str(v) for v in single)} value {single_value}")
        return 0
    raise UsageError(f"unknown learner {args.learner!r}")


def _need_eps(args) -> Fraction:
    if not args.eps:
        raise UsageError("--eps is required here")
    return args.eps[0]


def cmd_shatter(args) -> int:
    if args.input:
        inst = load(args.input)
        if inst.thresholds is None or inst.contracts is None:
            raise InstanceError("a shattering instance needs thresholds and contracts")
        si = ShatterInstance(inst.types, inst.thresholds, ExplicitSpace(inst.contracts), inst.rewards)
    else:
        si = bitmask_shatter_instance(args.n or 4, args.m or 2)
    ok, witnesses = verify_shattering(si)
    k = len(si.types)
    print(f"{'shattered' if ok else 'not shattered'}: {len(witnesses)}/{2 ** k} subsets realized")
    for key in sorted(witnesses, key=lambda s: (len(s), sorted(s))):
        print("{" + ",".join(str(i) for i in sorted(key)) + "} <- " + " ".join(str(v) for v in witnesses[key]))
    return 0


def cmd_online(args) -> int:
    inst = load(_need(args, "input"))
    D, r = inst.distribution, inst.rewards
    learner = "critical" if args.mode in (None, "critical") else BoxGrid(r.m, _need_eps(args))
    T = args.T or 1024
    runs = [ftl_run(D, r, learner, T, args.seed, stream=(k,)) for k in range(args.trials or 1)]
    summary = regret_summary(runs, ex.default_checkpoints(T, start=min(T, 16)))
    rows = ["T,mean_regret"] + [f"{t},{float(v):.12g}" for t, v in summary.table]
    _emit("\n".join(rows), args.out)
    print(f"slope {summary.slope:.4f}", file=sys.stderr)
    return 0


def cmd_experiment(args) -> int:
    kind = args.kind
    if kind == "sample-complexity":
        cfg = ex.ExperimentConfig(
            construction=args.construction or "d1-linear",
            learner=args.mode or "critical",
            eps=_sweep(args, (Fraction(1, 10), Fraction(1, 20), Fraction(1, 40))),
            delta=args.delta if args.delta is not None else Fraction(1, 10),
            seed=args.seed, trials=args.trials or 200, out=args.out,
        )
        rows = ex.run_sample_complexity(cfg)
        print("eps,N_star,success_rate,seed_count")
        for x in rows:
            print(f"{float(x.eps)},{'' if x.N_star is None else x.N_star},{float(x.success_rate)},{x.seed_count}")
        print(f"slope {ex.sample_complexity_slope(rows):.4f}")
        return 0
    if kind == "rep-error":
        cfg = ex.ExperimentConfig(eps=_sweep(args, (Fraction(1, 10), Fraction(1, 100))),
                                  seed=args.seed, trials=args.trials or 100, out=args.out)
        cls = args.mode or "linear"
        rows = ex.run_representation_error(cfg, cls=cls, m=args.m or 2)
        for eps in cfg.eps:
            worst = max(x.gap for x in rows if x.eps == eps)
            print(f"{cls} eps {eps}: max gap {float(worst):.6g} ({'within' if worst <= eps else 'EXCEEDS'} eps)")
        return 0
    if kind == "regret":
        eps = _sweep(args, (Fraction(1, 10),))[0]
        cfg = ex.ExperimentConfig(construction=args.construction or "d1-linear", params={"eps": eps},
                                  learner=args.mode or "critical", T=args.T or 4096,
                                  seed=args.seed, trials=args.trials or 50, out=args.out)
        summary = ex.run_regret(cfg, dat=args.dat)
        for T, v in summary.table:
            print(f"T {T}: mean regret {float(v):.6g}")
        print(f"slope {summary.slope:.4f}")
        return 0
    if kind == "impossibility":
        eps = _sweep(args, (Fraction(1, 10),))[0]
        delta = args.delta if args.delta is not None else Fraction(1, 4)
        report = ex.run_impossibility_demo(eps, delta, args.K or 10)
        _emit("\n".join(report.lines()), args.out)
        return 0
    raise UsageError(f"unknown experiment {kind!r}")


# -- parser -----------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", help="instance JSON file")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--eps", type=_fraction_list, help="accuracy, or a comma-separated sweep")
    p.add_argument("--delta", type=_fraction, help="failure probability")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, help="number of independent trials / seeds")
    p.add_argument("--T", type=int, help="online horizon")
    p.add_argument("--K", type=int, help="menu size or sample count")
    p.add_argument("--mode", help="learner or search mode")
    p.add_argument("--cap", type=int, help="enumeration cap")
    p.add_argument("--m", type=int, help="number of outcomes")
    p.add_argument("--n", type=int, help="number of actions")
    p.add_argument("--z", type=_int_list, help="comma-separated signs for dz-bounded")
    p.add_argument("--alphas", type=_fraction_list, help="comma-separated rungs for grid-forcing")
    p.add_argument("--construction", help="construction id for experiments")
    p.add_argument("--dat", help="extra whitespace-separated output for plotting")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="contractlab", description="Learning contracts from samples.")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)

    p = sub.add_parser("validate", help="check an instance file")
    _common(p)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("gen", help="generate a named construction")
    p.add_argument("construction", choices=ex.CONSTRUCTIONS)
    _common(p)
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("critical", help="critical values of each type")
    _common(p)
    p.set_defaults(fn=cmd_critical)

    p = sub.add_parser("learn", help="optimal contract for an instance's distribution")
    p.add_argument("learner", choices=("linear", "bounded", "menu", "comb"))
    _common(p)
    p.set_defaults(fn=cmd_learn)

    p = sub.add_parser("shatter", help="shattering certificates")
    p.add_argument("action", choices=("verify",))
    _common(p)
    p.set_defaults(fn=cmd_shatter)

    p = sub.add_parser("online", help="follow-the-leader regret")
    _common(p)
    p.set_defaults(fn=cmd_online)

    p = sub.add_parser("experiment", help="run an experiment")
    p.add_argument("kind", choices=("sample-complexity", "rep-error", "regret", "impossibility"))
    _common(p)
    p.set_defaults(fn=cmd_experiment)
    return parser


def cli_main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "fn", None):
            parser.print_usage(sys.stderr)
            return 1
        return args.fn(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ResourceCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return 2
    except (InstanceError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
