"""Command-line interface: ``bettest <command> [options]``.

Every command writes one JSON report envelope.  Exit status is 0 on
success, 2 on invalid input and 3 when a numerical routine fails.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import betting, bounded_error, calibration, dists, protocol, warranty
from .errors import BettingError, NumericError, ProtocolViolation
from .reporting import ObservationError, dumps, envelope, parse_observations, table_csv

DEFAULT_SEED = 20190703
SEED_ENV = "BETTEST_SEED"


class UsageError(Exception):
    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message, location="arguments")


# -- helpers -------------------------------------------------------------------

def _real(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"must be finite: {text!r}")
    return value


def _probability(text: str) -> float:
    value = _real(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1): {text!r}")
    return value


def _model(text: str, files: dict, option: str):
    try:
        model = dists.parse_model_spec(text)
    except (BettingError, ValueError) as exc:
        raise UsageError(str(exc), location=option) from None
    except OSError as exc:
        raise UsageError(str(exc), location=option) from None
    if text.partition(":")[2].startswith("@"):
        path = text.partition(":")[2][1:]
        files[path] = Path(path).read_bytes()
    return model


def _outcome(model, text: str):
    if isinstance(model, dists.DiscreteDistribution):
        return dists._parse_label(text)
    return _real(text)


def _read_data(path: str, column, files: dict) -> list[float]:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise UsageError(str(exc), location=path) from None
    files[path] = raw
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise UsageError(f"data is not UTF-8: {exc}", location=path) from None
    return parse_observations(text, column)


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        return DEFAULT_SEED
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}", location=SEED_ENV) from None


def _intervals(pairs) -> list[list[float]]:
    return [[float(a), float(b)] for a, b in pairs]


def _sample(model, rng: np.random.Generator, size: int):
    if isinstance(model, dists.NormalModel):
        return rng.normal(model.mean, model.sd, size)
    if isinstance(model, dists.ChiSquaredModel):
        return rng.chisquare(model.degrees_of_freedom, size)
    idx = rng.choice(len(model.outcomes), size=size, p=np.asarray(model.probabilities))
    return [model.outcomes[i] for i in idx]


def _upper_pvalue(model, y):
    if isinstance(model, dists.DiscreteDistribution):
        if not model.numeric:
            return None
        return min(1.0, math.fsum(p for o, p in zip(model.outcomes, model.probabilities) if o >= y))
    return model.upper_tail(y)


# -- commands -----------------------------------------------------------------

def cmd_test(args, files):
    null = _model(args.null, files, "--null")
    alt = _model(args.alt, files, "--alt") if args.alt else None
    if args.bet != "constant" and alt is None:
        raise UsageError(f"--bet {args.bet} needs --alt", location="--alt")
    y = _outcome(null, args.y)
    if args.bet == "constant":
        bet = betting.constant_bet(null)
    elif args.bet == "lr":
        bet = betting.likelihood_ratio_bet(null, alt)
    else:
        bet = betting.neyman_pearson_bet(null, alt, args.alpha).bet
    payload = betting.build_report(null, bet, y).to_dict()
    payload["p_value"] = _upper_pvalue(null, y)
    payload["alpha"] = args.alpha
    if alt is not None:
        np_bet = betting.neyman_pearson_bet(null, alt, args.alpha)
        region = (list(np_bet.region) if isinstance(null, dists.DiscreteDistribution)
                  else _intervals(np_bet.region))
        payload["neyman_pearson"] = {"region": region, "size": np_bet.size,
                                     "power": betting.power(null, alt, np_bet.bet, args.alpha)}
        payload["power"] = betting.power(null, alt, bet, args.alpha)
        if args.mc_draws:
            rng = np.random.default_rng(_seed(args))
            level = 1.0 / args.alpha
            hits = sum(1 for v in _sample(alt, rng, args.mc_draws) if bet(v) >= level)
            payload["power_monte_carlo"] = {"draws": args.mc_draws, "estimate": hits / args.mc_draws}
    return payload


def cmd_calibrate(args, files):
    modes = sum(x is not None for x in (args.p, args.model)) + bool(args.table)
    if modes != 1:
        raise UsageError("give exactly one of --p, --table, --model", location="arguments")
    if args.p is not None:
        return {"p": args.p, "score": calibration.shrink_pvalue(args.p)}
    if args.table:
        rows = calibration.calibration_table()
        if args.csv:
            return {"csv": table_csv(rows, ("p", "inverse_p", "score"))}
        return {"rows": [{"p": p, "inverse_p": inv, "score": s} for p, inv, s in rows]}
    if args.y is None:
        raise UsageError("--model needs --y", location="--y")
    model = _model(args.model, files, "--model")
    f = calibration.PValueFunction(model, "two-sided" if args.two_sided else "upper", args.center)
    y = _real(args.y)
    p = calibration.pvalue(f, y)
    bet = calibration.calibrated_bet(f)
    return {"p_value": p, "score": calibration.shrink_pvalue(p), "null_expectation": bet.price}


SCENARIO_KEYS = {"null", "strategy", "outcomes", "data", "column"}
STRATEGY_KEYS = {"constant": set(), "likelihood_ratio": {"alt"}, "neyman_pearson": {"alt", "alpha"}}


def _scenario_strategy(spec, null, files):
    if not isinstance(spec, dict) or "kind" not in spec:
        raise UsageError("strategy must be an object with a 'kind'", location="strategy")
    kind = spec["kind"]
    if kind not in STRATEGY_KEYS:
        raise UsageError(f"unknown strategy kind {kind!r}", location="strategy.kind")
    extra = set(spec) - STRATEGY_KEYS[kind] - {"kind"}
    missing = STRATEGY_KEYS[kind] - set(spec)
    if extra:
        raise UsageError(f"unknown strategy keys {sorted(extra)}", location="strategy")
    if missing:
        raise UsageError(f"missing strategy keys {sorted(missing)}", location="strategy")
    if kind == "constant":
        return protocol.constant_strategy()
    alt = _model(spec["alt"], files, "strategy.alt")
    if kind == "likelihood_ratio":
        return protocol.repeat_bet(betting.likelihood_ratio_bet(null, alt))
    return protocol.repeat_bet(betting.neyman_pearson_bet(null, alt, float(spec["alpha"])).bet)


def cmd_protocol(args, files):
    path = Path(args.scenario)
    try:
        raw = path.read_bytes()
        scenario = json.loads(raw)
    except OSError as exc:
        raise UsageError(str(exc), location=args.scenario) from None
    except ValueError as exc:
        raise UsageError(f"scenario is not valid JSON: {exc}", location=args.scenario) from None
    files[args.scenario] = raw
    if not isinstance(scenario, dict):
        raise UsageError("scenario must be a JSON object", location=args.scenario)
    extra = set(scenario) - SCENARIO_KEYS
    if extra:
        raise UsageError(f"unknown scenario keys {sorted(extra)}", location=args.scenario)
    for key in ("null", "strategy"):
        if key not in scenario:
            raise UsageError(f"scenario lacks {key!r}", location=args.scenario)
    if ("outcomes" in scenario) == ("data" in scenario):
        raise UsageError("scenario needs exactly one of 'outcomes' and 'data'", location=args.scenario)
    null_spec = scenario["null"]
    if null_spec.startswith("discrete:@"):
        null_spec = "discrete:@" + str(path.parent / null_spec[len("discrete:@"):])
    null = _model(null_spec, files, "null")
    strategy = _scenario_strategy(scenario["strategy"], null, files)
    if "data" in scenario:
        outcomes = _read_data(str(path.parent / scenario["data"]), scenario.get("column"), files)
    else:
        outcomes = scenario["outcomes"]
        if not isinstance(outcomes, list) or not outcomes:
            raise UsageError("outcomes must be a non-empty list", location="outcomes")
    return protocol.run_protocol(null, strategy, outcomes).to_dict()


def cmd_combine(args, files):
    scores = _read_data(args.data, args.column, files)
    return {"n": len(scores), "product": protocol.combine_sequential(scores),
            "mean": protocol.combine_parallel(scores)}


def _family(text: str):
    kind, _, body = text.partition(":")
    params = [p.strip() for p in body.split(",")] if body else []
    if kind == "normal" and len(params) == 2 and params[0] == "theta":
        sd = _real(params[1])
        return lambda theta: dists.NormalModel(theta, sd)
    if kind == "bernoulli" and params == ["theta"]:
        return lambda theta: dists.DiscreteDistribution((0, 1), (1.0 - theta, theta))
    raise UsageError(f"family must be normal:theta,SD or bernoulli:theta, got {text!r}", location="--family")


def _family_strategy(text: str, family):
    kind, _, body = text.partition(":")
    params = [p for p in body.split(",")] if body else []
    try:
        if kind == "constant" and not params:
            return lambda theta: protocol.constant_strategy()
        if kind == "lr" and len(params) == 1:
            delta = _real(params[0])
            return lambda theta: protocol.repeat_bet(
                betting.likelihood_ratio_bet(family(theta), family(theta + delta)))
        if kind == "np" and len(params) == 2:
            delta, alpha = _real(params[0]), _probability(params[1])
            return lambda theta: protocol.repeat_bet(
                betting.neyman_pearson_bet(family(theta), family(theta + delta), alpha).bet)
    except argparse.ArgumentTypeError as exc:
        raise UsageError(str(exc), location="--strategy") from None
    raise UsageError(f"strategy must be constant, lr:DELTA or np:DELTA,ALPHA, got {text!r}",
                     location="--strategy")


def _grid(text: str):
    parts = text.split(",")
    if len(parts) not in (2, 3):
        raise UsageError("grid must be LO,HI[,POINTS]", location="--grid")
    try:
        lo, hi = _real(parts[0]), _real(parts[1])
        points = int(parts[2]) if len(parts) == 3 else warranty.DEFAULT_GRID_POINTS
    except (argparse.ArgumentTypeError, ValueError) as exc:
        raise UsageError(str(exc), location="--grid") from None
    return warranty.make_grid(lo, hi, points)


def cmd_warranty(args, files):
    family = _family(args.family)
    per_theta = _family_strategy(args.strategy, family)
    outcomes = _read_data(args.data, args.column, files)
    if args.family.startswith("bernoulli"):
        outcomes = [int(v) if v in (0.0, 1.0) else v for v in outcomes]
    grid = _grid(args.grid)
    curve = warranty.capital_curve(warranty.ParametricStrategy(grid, per_theta), family, outcomes)
    alphas = args.alpha or [0.05]
    return {"grid": list(curve.grid), "capital": list(curve.capital),
            "warranty_sets": {repr(a): _intervals(warranty.warranty_set(curve, a)) for a in alphas}}


def cmd_measure(args, files):
    y = _read_data(args.data, args.column, files)
    n = len(y)
    if args.lam is not None and args.horizon is not None:
        raise UsageError("give at most one of --lambda and --horizon", location="--lambda")
    if args.lam is not None:
        strategy = bounded_error.HoeffdingStrategy(args.lam)
    else:
        horizon = args.horizon if args.horizon is not None else n
        if horizon < 1:
            raise UsageError("horizon must be positive", location="--horizon")
        strategy = bounded_error.HoeffdingStrategy.for_horizon(horizon, args.level)
    curve = bounded_error.measurement_capital_curve(y, strategy, grid_points=args.grid_points)
    alpha = 1.0 / args.level
    lo, hi = bounded_error.warranty_interval(y, n, args.level)
    return {"mean": math.fsum(y) / n, "n": n, "level": args.level, "interval": [lo, hi],
            "half_width": (hi - lo) / 2.0, "lambda": strategy.lam,
            "grid": list(curve.grid), "capital": list(curve.capital),
            "warranty_set": _intervals(warranty.warranty_set(curve, alpha)) if alpha < 1 else
            [[curve.grid[0], curve.grid[-1]]]}


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", default=argparse.SUPPRESS, help="write the report here instead of stdout")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help=f"random seed (overrides ${SEED_ENV})")

    parser = _Parser(prog="bettest", description="Test statistical hypotheses by betting.")
    parser.add_argument("--out", default=None, help="write the report here instead of stdout")
    parser.add_argument("--seed", type=int, default=None, help=f"random seed (overrides ${SEED_ENV})")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("test", parents=[common], help="score one outcome against a null")
    p.add_argument("--null", required=True, help="model spec, e.g. normal:0,10")
    p.add_argument("--alt", help="alternative model spec")
    p.add_argument("--bet", choices=("lr", "np", "constant"), default="lr")
    p.add_argument("--y", required=True, help="observed outcome")
    p.add_argument("--alpha", type=_probability, default=0.05)
    p.add_argument("--mc-draws", type=int, default=0, help="Monte Carlo check of the power")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("calibrate", parents=[common], help="turn p-values into betting scores")
    p.add_argument("--p", type=_real)
    p.add_argument("--table", action="store_true", help="standard table of p-values")
    p.add_argument("--csv", action="store_true", help="render the table as CSV text")
    p.add_argument("--model", help="null model of the test statistic")
    p.add_argument("--y", help="observed statistic")
    p.add_argument("--two-sided", action="store_true")
    p.add_argument("--center", type=_real)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("protocol", parents=[common], help="multi-round testing protocols")
    psub = p.add_subparsers(dest="action", required=True, parser_class=_Parser)
    run = psub.add_parser("run", parents=[common], help="run a JSON scenario")
    run.add_argument("--scenario", required=True)
    run.set_defaults(func=cmd_protocol)

    p = sub.add_parser("combine", parents=[common], help="combine betting scores")
    p.add_argument("--data", required=True)
    p.add_argument("--column")
    p.set_defaults(func=cmd_combine)

    p = sub.add_parser("warranty", parents=[common], help="warranty sets over a parameter grid")
    p.add_argument("--family", required=True, help="normal:theta,SD or bernoulli:theta")
    p.add_argument("--strategy", required=True, help="constant, lr:DELTA or np:DELTA,ALPHA")
    p.add_argument("--data", required=True)
    p.add_argument("--column")
    p.add_argument("--grid", required=True, help="LO,HI[,POINTS]; write --grid=LO,... when LO is negative")
    p.add_argument("--alpha", type=_probability, action="append")
    p.set_defaults(func=cmd_warranty)

    p = sub.add_parser("measure", parents=[common], help="bounded-error measurement warranty")
    p.add_argument("--data", required=True)
    p.add_argument("--column")
    p.add_argument("--level", type=_real, default=20.0)
    p.add_argument("--grid-points", type=int, default=warranty.DEFAULT_GRID_POINTS)
    p.add_argument("--lambda", dest="lam", type=_real)
    p.add_argument("--horizon", type=int)
    p.set_defaults(func=cmd_measure)
    return parser


def _config(args) -> dict:
    config = {k: v for k, v in vars(args).items() if k not in ("func", "out")}
    config["seed"] = _seed(args)
    return config


def _fail(kind: str, message: str, location, status: int) -> int:
    sys.stderr.write(dumps({"error_kind": kind, "message": message, "location": location}) + "\n")
    return status


def _location(exc) -> str | None:
    if isinstance(exc, ObservationError) and exc.row is not None:
        return f"row {exc.row}" + (f", column {exc.column}" if exc.column is not None else "")
    if isinstance(exc, ProtocolViolation):
        parts = []
        if exc.theta is not None:
            parts.append(f"theta {exc.theta!r}")
        if exc.round_index is not None:
            parts.append(f"round {exc.round_index}")
        return ", ".join(parts) or None
    return None


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        files: dict[str, bytes] = {}
        payload = args.func(args, files)
        command = args.command + (f" {args.action}" if args.command == "protocol" else "")
        report = envelope(command, _config(args), payload, files).to_json()
    except UsageError as exc:
        return _fail("usage", str(exc), exc.location, 2)
    except argparse.ArgumentTypeError as exc:
        return _fail("usage", str(exc), None, 2)
    except NumericError as exc:
        return _fail(type(exc).__name__, str(exc), _location(exc), 3)
    except (BettingError, ValueError) as exc:
        return _fail(type(exc).__name__, str(exc), _location(exc), 2)
    except OSError as exc:
        return _fail("io", str(exc), getattr(exc, "filename", None), 2)
    if args.out:
        Path(args.out).write_text(report, encoding="utf-8")
    else:
        sys.stdout.write(report)
    return 0


if __name__ == "__main__":
    sys.exit(main())
