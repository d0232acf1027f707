"""Command-line interface.

Verbs: constants, static, pair, arm-table, sweep, qm, deriv, mixing, oracle,
run.  Estimation verbs print a JSON report to stdout and can append CSV rows;
``run`` executes a TOML config into an artifact directory and requires
--seed.  Thread count comes from --threads or the DYNISING_THREADS env var.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .dynamics import constants
from .events import parse_event
from .harness import (CSV_COLUMNS, SamplerSettings, arm_table, cross_sweep,
                      derivative_report, estimate_pair, estimate_static,
                      mixing_ratio_report, qm_report, run_experiment,
                      sensitivity_length)
from .ising import FREE, ModelParams, beta_c
from .lattice import ExplicitRegion


def _add_common(p, seed_required=False):
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, required=seed_required, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--sampler", default="auto")
    p.add_argument("--csv", type=Path, default=None, help="append result rows to this CSV file")


def _emit(args, payload, records=()):
    print(json.dumps(payload, indent=2, default=float))
    if getattr(args, "csv", None):
        new = not args.csv.exists()
        with open(args.csv, "a", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if new:
                w.writerow(CSV_COLUMNS)
            for rec in records:
                w.writerow(rec.csv_row())


def _seed(args) -> int:
    return 1 if args.seed is None else args.seed


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="dynising", description=__doc__)
    sub = ap.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("constants", help="finite-energy and time constants for a beta")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--M", type=float, default=64.0)

    p = sub.add_parser("static", help="estimate a static event probability")
    p.add_argument("event", help="event literal, e.g. cross:n=16")
    _add_common(p)

    p = sub.add_parser("pair", help="estimate a two-time event probability")
    p.add_argument("event", help="event literal evaluated at both times")
    p.add_argument("--t", type=float, required=True)
    _add_common(p)

    p = sub.add_parser("arm-table", help="four-arm table alpha_n and eps_n")
    p.add_argument("--n", type=int, nargs="+", required=True)
    p.add_argument("--ell-at", type=float, default=None,
                   help="also report the sensitivity length at this time")
    _add_common(p)

    p = sub.add_parser("sweep", help="two-time crossing sweep over (n, t)")
    p.add_argument("--n", type=int, nargs="+", required=True)
    p.add_argument("--times", type=float, nargs="+", required=True)
    _add_common(p)

    p = sub.add_parser("qm", help="quasi-multiplicativity ratios")
    p.add_argument("--triples", required=True,
                   help="semicolon-separated k,m,n triples, e.g. '1,4,16;1,8,32'")
    p.add_argument("--t", type=float, required=True)
    _add_common(p)

    p = sub.add_parser("deriv", help="derivative estimators for Cross_n")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--t", type=float, required=True)
    _add_common(p)

    p = sub.add_parser("mixing", help="spatial-mixing decoupling ratio")
    p.add_argument("--eventA", required=True)
    p.add_argument("--eventB", required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--frame-n", type=int, default=None)
    _add_common(p)

    p = sub.add_parser("oracle", help="run the exact-oracle check suite")
    p.add_argument("--beta", type=float, default=0.3)
    p.add_argument("--t", type=float, default=0.1)

    p = sub.add_parser("run", help="execute a TOML experiment config")
    p.add_argument("config", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--threads", type=int, default=None)

    args = ap.parse_args(argv)

    if args.verb == "constants":
        c = constants(ModelParams(args.beta), args.M)
        print(json.dumps({"beta": args.beta, "beta_c": beta_c(), "a": c.a,
                          "c_fe": c.c_fe, "tau": c.tau, "M": c.M}, indent=2))
        return 0

    if args.verb == "static":
        rec = estimate_static(parse_event(args.event), args.beta, args.trials,
                              _seed(args), sampler=SamplerSettings(method=args.sampler),
                              threads=args.threads)
        _emit(args, rec.to_dict(), [rec])
        return 0

    if args.verb == "pair":
        ev = parse_event(args.event)
        rec = estimate_pair([ev], [ev], args.beta, args.t, args.trials, _seed(args),
                            sampler=SamplerSettings(method=args.sampler),
                            threads=args.threads)
        _emit(args, rec.to_dict(), [rec])
        return 0

    if args.verb == "arm-table":
        tab = arm_table(args.beta, args.n, args.trials, _seed(args),
                        sampler=SamplerSettings(method=args.sampler), threads=args.threads)
        payload = tab.to_dict()
        if args.ell_at is not None:
            ell = sensitivity_length(tab, args.ell_at)
            payload["ell"] = {"t": args.ell_at, "value": ell if ell is not None else "beyond table"}
        _emit(args, payload, tab.records)
        return 0

    if args.verb == "sweep":
        sw = cross_sweep(args.beta, args.n, args.times, args.trials, _seed(args),
                         sampler=SamplerSettings(method=args.sampler), threads=args.threads)
        _emit(args, sw.to_dict(), list(sw.records.values()))
        return 0

    if args.verb == "qm":
        triples = [tuple(int(v) for v in part.split(",")) for part in args.triples.split(";")]
        rep = qm_report(args.beta, args.t, triples, args.trials, _seed(args),
                        sampler=SamplerSettings(method=args.sampler), threads=args.threads)
        _emit(args, rep)
        return 0

    if args.verb == "deriv":
        rep = derivative_report(args.beta, args.n, args.t, args.trials, _seed(args),
                                sampler=SamplerSettings(method=args.sampler),
                                threads=args.threads)
        _emit(args, rep)
        return 0

    if args.verb == "mixing":
        rep = mixing_ratio_report(args.beta, args.t, parse_event(args.eventA),
                                  parse_event(args.eventB), args.trials, _seed(args),
                                  frame_n=args.frame_n,
                                  sampler=SamplerSettings(method=args.sampler),
                                  threads=args.threads)
        _emit(args, rep)
        return 0

    if args.verb == "oracle":
        from .dynamics import constants as _consts
        from .oracle import (build_generator, check_correlation_shape,
                             check_differential_formula, check_dynamical_fkg,
                             check_finite_energy, check_pair_not_markov)
        params = ModelParams(args.beta)
        plus5 = ExplicitRegion([(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)])
        gen = build_generator(plus5, FREE, params)
        mu = gen.measure
        f = mu.indicator(lambda c: c.spin((0, 0)) > 0)
        reports = [
            check_differential_formula(gen, f, f, args.t),
            check_dynamical_fkg(gen, args.t),
            check_correlation_shape(gen, f, [0.0, 0.5, 1.0, 2.0, 4.0]),
            check_finite_energy(gen, _consts(params), _consts(params).tau),
            check_pair_not_markov(),
        ]
        ok = all(r.passed for r in reports)
        for r in reports:
            print(json.dumps(r.to_dict(), default=float))
        return 0 if ok else 1

    if args.verb == "run":
        manifest = run_experiment(args.config, args.out, args.seed, threads=args.threads)
        print(json.dumps(manifest, indent=2))
        return 0

    return 2


if __name__ == "__main__":
    sys.exit(main())
