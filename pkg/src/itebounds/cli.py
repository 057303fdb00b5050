"""Command-line interface.

Exit codes: 0 on success, 1 for invalid data or an infeasible request,
2 for command-line usage errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .binary import (SET_ORDER, BinaryMarginals, classify_best, feasible_t_range,
                     necessary_condition_valid_best, shortest_sets, valid_sets,
                     worst_case_coverage)
from .core import DeltaEvent, InputError, minkowski_difference, read_pmf
from .frechet import ite_pmf_bounds
from .intervals import conservative_interval, minimal_valid_interval
from .makarov import cdf_bound_curve, cdf_bounds, zero_exclusion
from .oracle import OracleError, TransportInstance, extremize_mass
from .regionmap import RegionMap, parse_mode, region_map, render_svg
from .trial import (TypeScenario, ate_ite_report, load_covariate_example, read_strata_csv,
                    simulate_trial, strata_weights, stratified_report, total_probability_check)


class UsageError(Exception):
    pass


def _read_json(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(path, f"cannot read file ({exc.strerror})") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(path, f"invalid JSON at line {exc.lineno} column {exc.colno}") from None


def _marginals(args) -> BinaryMarginals:
    if args.json:
        obj = _read_json(args.json)
        for key in ("p0", "p1"):
            if not isinstance(obj, dict) or key not in obj:
                raise InputError(f"{args.json}:$.{key}", "required field is missing")
        p0, p1 = obj["p0"], obj["p1"]
    elif args.p0 is None or args.p1 is None:
        raise UsageError("give --p0 and --p1, or --json FILE")
    else:
        p0, p1 = args.p0, args.p1
    try:
        return BinaryMarginals(p0, p1)
    except ValueError as exc:
        raise InputError("p0" if "p0" in str(exc) else "p1", str(exc)) from None


def cmd_classify(args) -> dict:
    m = _marginals(args)
    t_lo, t_hi = feasible_t_range(m)
    return {
        "p0": m.p0, "p1": m.p1, "alpha": args.alpha,
        "t_range": [t_lo, t_hi],
        "worst_case_coverage": {s.label: worst_case_coverage(m, s) for s in SET_ORDER},
        "valid": [s.label for s in valid_sets(m, args.alpha)],
        "shortest": [s.label for s in shortest_sets(m, args.alpha)],
        "best": [s.label for s in classify_best(m, args.alpha)],
        "necessary_condition": {s.label: necessary_condition_valid_best(s, m, args.alpha)
                                for s in SET_ORDER},
    }


def cmd_pmf_bounds(args) -> dict:
    pmf1, pmf0 = read_pmf(args.pmf1), read_pmf(args.pmf0)
    deltas = args.delta if args.delta else minkowski_difference(pmf1.support, pmf0.support)
    with_certs = not args.no_certificates
    rows = []
    for d in deltas:
        b = ite_pmf_bounds(pmf1, pmf0, float(d), certificates=with_certs)
        row = {"delta": float(d), "lower": b.lower, "upper": b.upper}
        if with_certs:
            row["lower_coupling"] = b.lower_certificate.to_dict()
            row["upper_coupling"] = b.upper_certificate.to_dict()
        rows.append(row)
    if args.delta and len(args.delta) == 1:
        return rows[0]
    return {"bounds": rows}


def cmd_cdf_bounds(args) -> dict:
    F1, F0 = read_pmf(args.f1).to_cdf(), read_pmf(args.f0).to_cdf()
    if args.delta is not None:
        out = cdf_bounds(F1, F0, args.delta).to_dict(with_certificates=False)
        out["delta"] = args.delta
    else:
        out = cdf_bound_curve(F1, F0, args.grid).to_dict()
    if args.alpha is not None:
        out["zero_exclusion"] = zero_exclusion(F1, F0, args.alpha).to_dict()
    return out


def cmd_interval(args) -> dict:
    pmf1, pmf0 = read_pmf(args.pmf1), read_pmf(args.pmf0)
    res = minimal_valid_interval(pmf1, pmf0, args.alpha, args.mode)
    out = res.to_dict()
    out["conservative_interval"] = conservative_interval(pmf1, pmf0, args.alpha,
                                                         args.tails).to_list()
    return out


def cmd_oracle(args) -> dict:
    pmf1, pmf0 = read_pmf(args.pmf1), read_pmf(args.pmf0)
    try:
        event = DeltaEvent.parse(args.event)
    except ValueError as exc:
        raise InputError("--event", str(exc)) from None
    res = extremize_mass(TransportInstance.from_event(pmf1, pmf0, event), args.direction)
    return {"event": str(event), "direction": args.direction, "value": res.value,
            "duality_gap": res.duality_gap, "coupling": res.coupling.to_dict()}


def cmd_simulate(args) -> dict:
    if args.scenario:
        obj = _read_json(args.scenario)
        try:
            scenario = TypeScenario.from_dict(obj)
        except InputError as exc:
            raise InputError(f"{args.scenario}:{exc.path}", exc.message) from None
        if args.seed is not None:
            scenario = TypeScenario(**{**scenario.__dict__, "seed": args.seed})
    else:
        missing = [k for k in ("nr", "he", "hu", "ar", "n") if getattr(args, k) is None]
        if missing:
            raise UsageError(f"give --scenario FILE or all of --nr --he --hu --ar --n "
                             f"(missing --{missing[0]})")
        try:
            scenario = TypeScenario(args.nr, args.he, args.hu, args.ar, args.n,
                                    args.assign_prob, args.seed or 0)
        except ValueError as exc:
            raise InputError("scenario", str(exc)) from None
    result = simulate_trial(scenario)
    return {"scenario": scenario.__dict__, "counts": result.to_dict(),
            "report": ate_ite_report(result, args.alpha).to_dict()}


def _parse_condition(text: str) -> dict:
    cond = {}
    for part in text.split(","):
        name, sep, value = part.partition("=")
        if not sep:
            raise UsageError(f"--by expects name=value[,name=value], got {text!r}")
        try:
            cond[name.strip()] = int(value)
        except ValueError:
            raise UsageError(f"covariate values must be integers, got {value!r}") from None
    return cond


def cmd_stratify(args) -> dict:
    if args.csv and not Path(args.csv).exists():
        raise InputError(args.csv, "file not found")
    trial = read_strata_csv(Path(args.csv)) if args.csv else load_covariate_example()
    conditions = [_parse_condition(c) for c in args.by] if args.by else None
    try:
        report = stratified_report(trial, args.alpha, conditions)
    except KeyError as exc:
        raise InputError("--by", str(exc.args[0])) from None
    out = report.to_dict()
    ms, ws = strata_weights(trial)
    out["total_probability"] = total_probability_check(ms, ws).to_dict()
    return out


def cmd_region_map(args) -> Optional[dict]:
    if args.from_csv:
        try:
            text = Path(args.from_csv).read_text()
        except OSError as exc:
            raise InputError(args.from_csv, f"cannot read file ({exc.strerror})") from None
        rmap = RegionMap.from_csv(text, args.from_csv)
    else:
        if args.alpha is None:
            raise UsageError("region-map needs --alpha (or --from-csv)")
        rmap = region_map(args.alpha, args.resolution, args.mode)
        csv_text = rmap.to_csv()
        if args.out:
            Path(args.out).write_text(csv_text)
        else:
            sys.stdout.write(csv_text)
    if args.svg:
        Path(args.svg).write_text(render_svg(rmap))
    return None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="itebounds",
                                description="Worst-case prediction sets for individual "
                                            "treatment effects from marginal data.")
    p.add_argument("-v", "--verbose", action="store_true", help="log solver details to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, alpha_default=0.05, out=True):
        if alpha_default is not False:
            sp.add_argument("--alpha", type=float, default=alpha_default)
        if out:
            sp.add_argument("--out", help="write JSON here instead of stdout")

    c = sub.add_parser("classify", help="binary margins: valid, shortest and best sets")
    c.add_argument("--p0", type=float)
    c.add_argument("--p1", type=float)
    c.add_argument("--json", help='file with {"p0": .., "p1": ..}')
    common(c)
    c.set_defaults(func=cmd_classify)

    c = sub.add_parser("pmf-bounds", help="sharp bounds on P(Y1 - Y0 = delta)")
    c.add_argument("--pmf1", required=True)
    c.add_argument("--pmf0", required=True)
    c.add_argument("--delta", type=float, action="append")
    c.add_argument("--no-certificates", action="store_true",
                   help="omit the couplings that attain each bound")
    common(c, alpha_default=False)
    c.set_defaults(func=cmd_pmf_bounds)

    c = sub.add_parser("cdf-bounds", help="sharp bounds on P(Y1 - Y0 <= delta)")
    c.add_argument("--f1", required=True)
    c.add_argument("--f0", required=True)
    g = c.add_mutually_exclusive_group()
    g.add_argument("--delta", type=float)
    g.add_argument("--curve", action="store_true", help="bounds on the whole difference grid")
    c.add_argument("--grid", type=float, nargs="+", help="custom delta grid for --curve")
    c.add_argument("--alpha", type=float, help="also report whether zero can be excluded")
    common(c, alpha_default=False)
    c.set_defaults(func=cmd_cdf_bounds)

    c = sub.add_parser("interval", help="shortest valid interval for discrete outcomes")
    c.add_argument("--pmf1", required=True)
    c.add_argument("--pmf0", required=True)
    c.add_argument("--mode", choices=("sharp", "conservative"), default="sharp")
    c.add_argument("--tails", type=float, default=0.5,
                   help="lower-tail share of alpha/2 for the quantile interval")
    common(c)
    c.set_defaults(func=cmd_interval)

    c = sub.add_parser("oracle", help="min or max of P(Y1 - Y0 in event) over couplings")
    c.add_argument("--pmf1", required=True)
    c.add_argument("--pmf0", required=True)
    c.add_argument("--event", required=True, help='e.g. "[-1,0]", "(-inf,0)", "{1,2}"')
    c.add_argument("--direction", choices=("min", "max"), default="max")
    common(c, alpha_default=False)
    c.set_defaults(func=cmd_oracle)

    c = sub.add_parser("simulate", help="simulate a binary-outcome trial from type shares")
    c.add_argument("--scenario", help="scenario JSON file")
    for name in ("nr", "he", "hu", "ar"):
        c.add_argument(f"--{name}", type=float)
    c.add_argument("--n", type=int)
    c.add_argument("--assign-prob", type=float, default=0.5)
    c.add_argument("--seed", type=int)
    common(c)
    c.set_defaults(func=cmd_simulate)

    c = sub.add_parser("region-map", help="classify a grid over (p0, p1); CSV and optional SVG")
    c.add_argument("--alpha", type=float)
    c.add_argument("--resolution", type=int, default=199)
    c.add_argument("--mode", default="best", help="shortest | best | necessary:<set>")
    c.add_argument("--svg", help="also write an SVG rendering here")
    c.add_argument("--from-csv", help="re-render an existing region-map CSV")
    c.add_argument("--out", help="write the CSV here instead of stdout")
    c.set_defaults(func=cmd_region_map)

    c = sub.add_parser("stratify", help="per-stratum ATE and ITE reports from a count table")
    c.add_argument("--csv", help="columns: covariates..., arm, n, y1 (default: bundled example)")
    c.add_argument("--by", action="append", help="condition such as x1=1 or x1=1,x2=1")
    common(c, alpha_default=0.1)
    c.set_defaults(func=cmd_stratify)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "region-map":
        try:
            parse_mode(args.mode)
        except ValueError as exc:
            parser.print_usage(sys.stderr)
            print(f"itebounds: error: {exc}", file=sys.stderr)
            return 2
    try:
        result = args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"itebounds: error: {exc}", file=sys.stderr)
        return 2
    except InputError as exc:
        print(f"itebounds: input error at {exc.path}: {exc.message}", file=sys.stderr)
        return 1
    except (ValueError, OracleError) as exc:
        print(f"itebounds: error: {exc}", file=sys.stderr)
        return 1
    if result is not None:
        text = json.dumps(result, indent=2, default=str) + "\n"
        if getattr(args, "out", None):
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
